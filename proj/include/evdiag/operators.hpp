#pragma once

#include <cmath>
#include <cstddef>
#include <span>
#include <vector>

#include "evdiag/errors.hpp"
#include "evdiag/fft.hpp"
#include "evdiag/grid.hpp"

namespace evdiag {

/// How first derivatives are discretized.
///  - central: second-order central differences, one-sided second-order
///    stencils at the ends of non-periodic axes.
///  - spectral: exact differentiation of the trigonometric interpolant
///    (periodic axes only; the Nyquist mode is dropped).
enum class DerivativeScheme { central, spectral };

namespace detail {

inline void require_finite(const Field& f, const char* what) {
    for (const auto& comp : f.components)
        for (double v : comp)
            if (!std::isfinite(v)) throw ValidationError(std::string(what) + ": non-finite input value");
}

inline void central_line(std::span<const double> in, std::span<double> out, std::size_t n, std::size_t stride,
                         double dx, bool periodic) {
    const double inv2 = 1.0 / (2.0 * dx);
    auto at = [&](std::size_t i) { return in[i * stride]; };
    if (periodic) {
        for (std::size_t i = 0; i < n; ++i) {
            const std::size_t ip = (i + 1) % n;
            const std::size_t im = (i + n - 1) % n;
            out[i * stride] = (at(ip) - at(im)) * inv2;
        }
        return;
    }
    for (std::size_t i = 1; i + 1 < n; ++i) out[i * stride] = (at(i + 1) - at(i - 1)) * inv2;
    out[0] = (-3.0 * at(0) + 4.0 * at(1) - at(2)) * inv2;
    out[(n - 1) * stride] = (3.0 * at(n - 1) - 4.0 * at(n - 2) + at(n - 3)) * inv2;
}

inline void spectral_line(std::span<const double> in, std::span<double> out, std::size_t n, std::size_t stride,
                          double dx, std::vector<double>& buf, std::vector<fft::cplx>& spec) {
    const auto& plan = fft::Plan1d::get(n);
    buf.resize(n);
    spec.resize(n / 2 + 1);
    for (std::size_t i = 0; i < n; ++i) buf[i] = in[i * stride];
    plan.forward(buf, spec);
    const double k0 = 2.0 * M_PI / (static_cast<double>(n) * dx);
    for (std::size_t m = 0; m < spec.size(); ++m) {
        if (n % 2 == 0 && m == n / 2) {
            spec[m] = 0.0;
            continue;
        }
        spec[m] *= fft::cplx(0.0, k0 * static_cast<double>(m));
    }
    plan.backward(spec, buf);
    const double scale = 1.0 / static_cast<double>(n);
    for (std::size_t i = 0; i < n; ++i) out[i * stride] = buf[i] * scale;
}

}  // namespace detail

/// d(data)/dx_axis for one scalar array laid out on `grid`.
inline std::vector<double> partial(const Grid& grid, std::span<const double> data, int axis,
                                   DerivativeScheme scheme = DerivativeScheme::central) {
    if (scheme == DerivativeScheme::spectral && !grid.periodic[axis])
        throw ValidationError("spectral derivative requested along a non-periodic axis");
    std::vector<double> out(data.size(), 0.0);
    const std::size_t n = grid.shape[axis];
    const std::size_t stride = grid.stride(axis);
    const double dx = grid.spacing[axis];
    std::vector<double> buf;
    std::vector<fft::cplx> spec;
    // Enumerate the line starts: every index whose coordinate along `axis` is 0.
    for (std::size_t k = 0; k < grid.shape[2]; ++k)
        for (std::size_t j = 0; j < grid.shape[1]; ++j)
            for (std::size_t i = 0; i < grid.shape[0]; ++i) {
                const std::array<std::size_t, 3> idx{i, j, k};
                if (idx[axis] != 0) continue;
                const std::size_t start = grid.index(i, j, k);
                std::span<const double> in_line = data.subspan(start);
                std::span<double> out_line = std::span<double>(out).subspan(start);
                if (scheme == DerivativeScheme::central)
                    detail::central_line(in_line, out_line, n, stride, dx, grid.periodic[axis]);
                else
                    detail::spectral_line(in_line, out_line, n, stride, dx, buf, spec);
            }
    return out;
}

/// Gradient of a scalar (-> vector) or vector (-> tensor with (i,j) = du_i/dx_j).
inline Field gradient(const Field& v, DerivativeScheme scheme = DerivativeScheme::central) {
    detail::require_finite(v, "gradient");
    if (v.rank > 1) throw ValidationError("gradient: input must be a scalar or vector field");
    const int d = v.grid.ndim;
    Field g(v.grid, v.rank + 1, v.time);
    for (std::size_t c = 0; c < v.ncomp(); ++c)
        for (int j = 0; j < d; ++j) g[c * d + j] = partial(v.grid, v[c], j, scheme);
    return g;
}

/// (grad v + grad v^T) / 2, symmetric bit-for-bit.
inline Field sym_gradient(const Field& v, DerivativeScheme scheme = DerivativeScheme::central) {
    if (v.rank != 1) throw ValidationError("sym_gradient: input must be a vector field");
    Field g = gradient(v, scheme);
    const int d = v.grid.ndim;
    Field s(v.grid, 2, v.time);
    for (int i = 0; i < d; ++i)
        for (int j = 0; j < d; ++j) {
            if (j < i) {
                s[i * d + j] = s[j * d + i];
                continue;
            }
            auto& out = s[i * d + j];
            const auto& a = g[i * d + j];
            const auto& b = g[j * d + i];
            for (std::size_t p = 0; p < out.size(); ++p) out[p] = 0.5 * (a[p] + b[p]);
        }
    return s;
}

/// Trace of the discrete gradient.
inline Field divergence(const Field& v, DerivativeScheme scheme = DerivativeScheme::central) {
    if (v.rank != 1) throw ValidationError("divergence: input must be a vector field");
    detail::require_finite(v, "divergence");
    const int d = v.grid.ndim;
    Field out(v.grid, 0, v.time);
    auto& acc = out[0];
    for (int j = 0; j < d; ++j) {
        const auto dj = partial(v.grid, v[j], j, scheme);
        for (std::size_t p = 0; p < acc.size(); ++p) acc[p] += dj[p];
    }
    return out;
}

/// Per-cell squared magnitude (sum of squared components; Frobenius for tensors).
inline std::vector<double> magnitude_sq(const Field& v) {
    std::vector<double> m(v.size(), 0.0);
    for (const auto& comp : v.components)
        for (std::size_t p = 0; p < m.size(); ++p) m[p] += comp[p] * comp[p];
    return m;
}

/// Midpoint quadrature of the integral of |v|^2 over the domain.
inline double l2_norm_sq(const Field& v) {
    detail::require_finite(v, "l2_norm_sq");
    double sum = 0.0;
    for (double m : magnitude_sq(v)) sum += m;
    return sum * v.grid.cell_volume();
}

/// Midpoint quadrature of the integral of a . b (full contraction).
inline double inner_product(const Field& a, const Field& b) {
    if (!(a.grid == b.grid)) throw ValidationError("inner_product: grid mismatch");
    if (a.rank != b.rank) throw ValidationError("inner_product: rank mismatch");
    detail::require_finite(a, "inner_product");
    detail::require_finite(b, "inner_product");
    // same summation order as l2_norm_sq, so (u, u) reproduces it exactly
    double sum = 0.0;
    for (std::size_t p = 0; p < a.size(); ++p) {
        double cell = 0.0;
        for (std::size_t c = 0; c < a.ncomp(); ++c) cell += a[c][p] * b[c][p];
        sum += cell;
    }
    return sum * a.grid.cell_volume();
}

/// Max over cells of the pointwise magnitude.
inline double max_norm(const Field& v) {
    double m = 0.0;
    for (double s : magnitude_sq(v)) m = std::max(m, s);
    return std::sqrt(m);
}

/// Volume average of a scalar array laid out on `grid`.
inline double volume_mean(const Grid& grid, std::span<const double> data) {
    double sum = 0.0;
    for (double v : data) sum += v;
    return sum / static_cast<double>(grid.size());
}

}  // namespace evdiag
