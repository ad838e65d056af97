#pragma once

#include <algorithm>
#include <array>
#include <cmath>
#include <cstddef>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "evdiag/errors.hpp"

namespace evdiag {

/// Uniform structured grid. Samples sit at x_i = i*dx (i = 0..nx-1), so a
/// periodic axis of extent 2*pi with n points has dx = 2*pi/n.
struct Grid {
    int ndim = 2;
    std::array<std::size_t, 3> shape{4, 4, 1};
    std::array<double, 3> spacing{1.0, 1.0, 1.0};
    std::array<bool, 3> periodic{true, true, true};

    static Grid periodic_square(std::size_t n, double extent = 2.0 * M_PI) {
        Grid g;
        g.ndim = 2;
        g.shape = {n, n, 1};
        g.spacing = {extent / static_cast<double>(n), extent / static_cast<double>(n), 1.0};
        g.periodic = {true, true, true};
        g.validate();
        return g;
    }

    static Grid periodic_cube(std::size_t n, double extent = 2.0 * M_PI) {
        Grid g;
        g.ndim = 3;
        g.shape = {n, n, n};
        const double d = extent / static_cast<double>(n);
        g.spacing = {d, d, d};
        g.periodic = {true, true, true};
        g.validate();
        return g;
    }

    void validate() const {
        if (ndim != 2 && ndim != 3) throw ValidationError("grid: ndim must be 2 or 3");
        for (int a = 0; a < ndim; ++a) {
            if (shape[a] < 4) throw ValidationError("grid: every active axis needs at least 4 points");
            if (!(spacing[a] > 0.0) || !std::isfinite(spacing[a]))
                throw ValidationError("grid: spacings must be finite and positive");
        }
        if (ndim == 2 && shape[2] != 1) throw ValidationError("grid: nz must be 1 when ndim is 2");
    }

    [[nodiscard]] std::size_t size() const { return shape[0] * shape[1] * shape[2]; }

    [[nodiscard]] double cell_volume() const {
        double v = 1.0;
        for (int a = 0; a < ndim; ++a) v *= spacing[a];
        return v;
    }

    /// |Omega|
    [[nodiscard]] double volume() const { return cell_volume() * static_cast<double>(size()); }

    /// Mesh width h = max(dx, dy, dz).
    [[nodiscard]] double h() const {
        double m = 0.0;
        for (int a = 0; a < ndim; ++a) m = std::max(m, spacing[a]);
        return m;
    }

    [[nodiscard]] bool fully_periodic() const {
        for (int a = 0; a < ndim; ++a)
            if (!periodic[a]) return false;
        return true;
    }

    [[nodiscard]] std::size_t index(std::size_t i, std::size_t j, std::size_t k = 0) const {
        return i + shape[0] * (j + shape[1] * k);
    }

    /// Distance between consecutive samples along an axis in flat storage.
    [[nodiscard]] std::size_t stride(int axis) const {
        std::size_t s = 1;
        for (int a = 0; a < axis; ++a) s *= shape[a];
        return s;
    }

    [[nodiscard]] double coord(int axis, std::size_t i) const { return static_cast<double>(i) * spacing[axis]; }

    friend bool operator==(const Grid&, const Grid&) = default;
};

/// Scalar (rank 0), vector (rank 1) or tensor (rank 2) samples on a Grid.
/// Tensor component (i, j) is stored at i*ndim + j.
struct Field {
    Grid grid;
    int rank = 0;
    std::vector<std::vector<double>> components;
    double time = 0.0;

    Field() = default;

    Field(Grid g, int r, double t = 0.0) : grid(std::move(g)), rank(r), time(t) {
        grid.validate();
        if (r < 0 || r > 2) throw ValidationError("field: rank must be 0, 1 or 2");
        components.assign(component_count(grid.ndim, r), std::vector<double>(grid.size(), 0.0));
    }

    static std::size_t component_count(int ndim, int rank) {
        std::size_t c = 1;
        for (int i = 0; i < rank; ++i) c *= static_cast<std::size_t>(ndim);
        return c;
    }

    [[nodiscard]] std::size_t ncomp() const { return components.size(); }
    [[nodiscard]] std::size_t size() const { return grid.size(); }

    std::vector<double>& operator[](std::size_t c) { return components[c]; }
    const std::vector<double>& operator[](std::size_t c) const { return components[c]; }

    /// Structural and finiteness checks. `name` shows up in the message.
    void validate(const std::string& name = "field") const {
        grid.validate();
        if (components.size() != component_count(grid.ndim, rank))
            throw ValidationError(name + ": component count does not match ndim^rank");
        for (std::size_t c = 0; c < components.size(); ++c) {
            if (components[c].size() != grid.size())
                throw ValidationError(name + ": component length does not match grid size");
            for (double v : components[c])
                if (!std::isfinite(v))
                    throw ValidationError(name + ": non-finite value in component " + std::to_string(c));
        }
    }

    /// Fill a component from f(x, y, z).
    template <class Fn>
    void fill(std::size_t comp, Fn&& fn) {
        auto& data = components[comp];
        for (std::size_t k = 0; k < grid.shape[2]; ++k)
            for (std::size_t j = 0; j < grid.shape[1]; ++j)
                for (std::size_t i = 0; i < grid.shape[0]; ++i)
                    data[grid.index(i, j, k)] = fn(grid.coord(0, i), grid.coord(1, j), grid.ndim == 3 ? grid.coord(2, k) : 0.0);
    }

    Field& operator*=(double c) {
        for (auto& comp : components)
            for (double& v : comp) v *= c;
        return *this;
    }

    friend Field operator*(double c, Field f) { return f *= c; }
};

/// Velocity plus the optional closure fields carried alongside it.
struct Snapshot {
    Field velocity;
    std::optional<Field> nu_turb;
    std::optional<Field> mixing_length;
    std::optional<Field> kprime;
};

/// Time-ordered snapshots on one grid with a uniform step.
struct SnapshotSeries {
    Grid grid;
    std::vector<double> times;
    std::vector<Snapshot> snapshots;
    std::optional<Field> forcing;

    [[nodiscard]] std::size_t size() const { return snapshots.size(); }

    [[nodiscard]] double dt() const { return times.size() >= 2 ? times[1] - times[0] : 0.0; }

    void validate() const {
        if (snapshots.size() != times.size()) throw ValidationError("series: times and snapshots differ in length");
        if (times.size() < 2) throw ValidationError("series: at least two snapshots are required");
        const double step = times[1] - times[0];
        if (!(step > 0.0)) throw ValidationError("series: times must increase");
        for (std::size_t n = 1; n < times.size(); ++n) {
            const double d = times[n] - times[n - 1];
            if (std::abs(d - step) > 1e-9 * std::abs(step)) throw ValidationError("series: time step is not uniform");
        }
        for (const auto& s : snapshots) {
            if (!(s.velocity.grid == grid)) throw ValidationError("series: snapshot grid differs from series grid");
            if (s.velocity.rank != 1) throw ValidationError("series: velocity must be a vector field");
        }
    }
};

}  // namespace evdiag
