#pragma once

#include <cmath>
#include <filesystem>
#include <random>
#include <string>

#include "evdiag/grid.hpp"
#include "evdiag/minisolver.hpp"

namespace evtest {

using evdiag::Field;
using evdiag::Grid;
using evdiag::Snapshot;
using evdiag::SnapshotSeries;

inline Field taylor_green_field(const Grid& g, double decay = 1.0) {
    Field u(g, 1);
    u.fill(0, [&](double x, double y, double) { return decay * std::cos(x) * std::sin(y); });
    u.fill(1, [&](double x, double y, double) { return -decay * std::sin(x) * std::cos(y); });
    return u;
}

inline Field vector_field(const Grid& g, auto&& fx, auto&& fy) {
    Field u(g, 1);
    u.fill(0, fx);
    u.fill(1, fy);
    return u;
}

inline Field scalar_field(const Grid& g, auto&& fn) {
    Field s(g, 0);
    s.fill(0, fn);
    return s;
}

inline Field constant_scalar(const Grid& g, double c) {
    Field s(g, 0);
    std::fill(s[0].begin(), s[0].end(), c);
    return s;
}

/// Series of `n` snapshots dt apart whose velocity comes from make(t).
inline SnapshotSeries series_of(const Grid& g, std::size_t n, double dt, auto&& make) {
    SnapshotSeries s;
    s.grid = g;
    for (std::size_t i = 0; i < n; ++i) {
        const double t = static_cast<double>(i) * dt;
        s.times.push_back(t);
        Snapshot snap{make(t), {}, {}, {}};
        snap.velocity.time = t;
        s.snapshots.push_back(std::move(snap));
    }
    return s;
}

/// Random smooth solenoidal field from a stream function with modes |k| <= kmax
/// on the periodic square [0, 2pi)^2.
inline Field random_solenoidal(const Grid& g, std::mt19937& rng, int kmax = 4, double amplitude = 1.0) {
    std::normal_distribution<double> normal;
    Field u(g, 1);
    for (int kx = -kmax; kx <= kmax; ++kx)
        for (int ky = 0; ky <= kmax; ++ky) {
            if (ky == 0 && kx <= 0) continue;
            if (kx * kx + ky * ky > kmax * kmax) continue;
            const double a = amplitude * normal(rng), b = amplitude * normal(rng);
            // psi = a cos(th) + b sin(th), th = kx x + ky y;  u = dpsi/dy, v = -dpsi/dx
            for (std::size_t j = 0; j < g.shape[1]; ++j)
                for (std::size_t i = 0; i < g.shape[0]; ++i) {
                    const double th = kx * g.coord(0, i) + ky * g.coord(1, j);
                    const double dpsi = -a * std::sin(th) + b * std::cos(th);
                    const auto p = g.index(i, j);
                    u[0][p] += ky * dpsi;
                    u[1][p] -= kx * dpsi;
                }
        }
    return u;
}

inline std::filesystem::path temp_dir(const std::string& name) {
    auto dir = std::filesystem::temp_directory_path() / ("evdiag_test_" + name);
    std::filesystem::remove_all(dir);
    std::filesystem::create_directories(dir);
    return dir;
}

}  // namespace evtest
