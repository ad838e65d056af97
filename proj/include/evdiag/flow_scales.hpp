#pragma once

#include <cmath>
#include <limits>
#include <optional>
#include <string>
#include <vector>

#include "evdiag/errors.hpp"
#include "evdiag/grid.hpp"
#include "evdiag/operators.hpp"
#include "evdiag/time_stats.hpp"

namespace evdiag {

/// Reduce every snapshot of a series to one scalar, in order.
template <class Fn>
TimeSeries reduce_snapshots(const SnapshotSeries& series, Fn&& fn) {
    TimeSeries ts;
    ts.times = series.times;
    ts.values.reserve(series.size());
    for (const auto& snap : series.snapshots) ts.values.push_back(fn(snap));
    return ts;
}

/// Quantities derived from the body force alone.
struct ForcingScales {
    double F = 0.0;
    double grad_inf = 0.0;       ///< max cell |grad f|
    double grad_sq_mean = 0.0;   ///< (1/|Omega|) ||grad f||^2
    double max_divergence = 0.0;
    bool solenoidal = true;
    std::optional<double> L;
    std::array<double, 3> L_candidates{};
    /// Slack in ||grad f||_inf <= F/L and (1/|Omega|)||grad f||^2 <= F^2/L^2
    /// (positive when the inequality holds).
    double slack_inf = 0.0;
    double slack_sq = 0.0;
};

/// Volume-normalized RMS of the force: F = ((1/|Omega|) ||f||^2)^{1/2}.
inline double compute_F(const Field& f) {
    if (f.rank != 1) throw ValidationError("compute_F: forcing must be a vector field");
    return std::sqrt(l2_norm_sq(f) / f.grid.volume());
}

/// L = min{|Omega|^{1/3}, F/||grad f||_inf, F/((1/|Omega|)||grad f||^2)}.
/// Candidates with a vanishing denominator are infinite.
inline ForcingScales compute_forcing_scales(const Field& f, DerivativeScheme scheme = DerivativeScheme::central) {
    f.validate("forcing");
    ForcingScales s;
    s.F = compute_F(f);
    const Field g = gradient(f, scheme);
    s.grad_inf = max_norm(g);
    s.grad_sq_mean = l2_norm_sq(g) / f.grid.volume();
    const Field div = divergence(f, scheme);
    for (double v : div[0]) s.max_divergence = std::max(s.max_divergence, std::abs(v));
    s.solenoidal = s.max_divergence <= 1e-8 * s.grad_inf;

    constexpr double inf = std::numeric_limits<double>::infinity();
    s.L_candidates = {std::cbrt(f.grid.volume()), s.grad_inf > 0.0 ? s.F / s.grad_inf : inf,
                      s.grad_sq_mean > 0.0 ? s.F / s.grad_sq_mean : inf};
    if (s.F > 0.0) {
        const double L = std::min({s.L_candidates[0], s.L_candidates[1], s.L_candidates[2]});
        s.L = L;
        s.slack_inf = s.F / L - s.grad_inf;
        s.slack_sq = s.F * s.F / (L * L) - s.grad_sq_mean;
    }
    return s;
}

inline double compute_L(const Field& f, DerivativeScheme scheme = DerivativeScheme::central) {
    const auto s = compute_forcing_scales(f, scheme);
    if (!s.L) throw UndefinedScaleError("compute_L: the forcing vanishes, no length scale");
    return *s.L;
}

struct VelocityScale {
    double sup_tail = 0.0;
    double final_T = 0.0;
};

/// U = <(1/|Omega|) ||u||^2>_inf^{1/2}.
inline VelocityScale compute_U(const SnapshotSeries& series, double tail_fraction = 0.5) {
    if (series.size() == 0) throw ValidationError("compute_U: empty series");
    series.validate();
    const double vol = series.grid.volume();
    const auto energy = reduce_snapshots(series, [&](const Snapshot& s) { return l2_norm_sq(s.velocity) / vol; });
    const auto avg = avg_inf(energy, tail_fraction);
    return {std::sqrt(avg.sup_tail), std::sqrt(avg.final_T)};
}

/// Pointwise trapezoidal time mean of the velocity over the whole record.
inline Field time_mean_velocity(const SnapshotSeries& series) {
    Field mean(series.grid, 1);
    const std::size_t n = series.size();
    const double wsum = static_cast<double>(n - 1);
    for (std::size_t t = 0; t < n; ++t) {
        const double w = (t == 0 || t + 1 == n ? 0.5 : 1.0) / wsum;
        const auto& u = series.snapshots[t].velocity;
        for (std::size_t c = 0; c < mean.ncomp(); ++c)
            for (std::size_t p = 0; p < mean.size(); ++p) mean[c][p] += w * u[c][p];
    }
    return mean;
}

struct FluctuationScale {
    double U_prime = 0.0;
    double U_prime_final = 0.0;
    std::optional<double> I;        ///< (U'/U)^2, absent when U = 0
    std::optional<double> I_final;
};

/// U' with u' = u - (time mean of u over the record).
inline FluctuationScale compute_U_prime(const SnapshotSeries& series, double tail_fraction = 0.5) {
    series.validate();
    if (series.size() < 10) throw ValidationError("compute_U_prime: at least 10 snapshots are needed");
    const Field mean = time_mean_velocity(series);
    const double vol = series.grid.volume();
    const auto fluct = reduce_snapshots(series, [&](const Snapshot& s) {
        double sum = 0.0;
        for (std::size_t c = 0; c < mean.ncomp(); ++c)
            for (std::size_t p = 0; p < mean.size(); ++p) {
                const double d = s.velocity[c][p] - mean[c][p];
                sum += d * d;
            }
        return sum * series.grid.cell_volume() / vol;
    });
    const auto avg = avg_inf(fluct, tail_fraction);
    FluctuationScale out{std::sqrt(avg.sup_tail), std::sqrt(avg.final_T), {}, {}};
    const auto U = compute_U(series, tail_fraction);
    if (U.sup_tail > 0.0) out.I = (out.U_prime / U.sup_tail) * (out.U_prime / U.sup_tail);
    if (U.final_T > 0.0) out.I_final = (out.U_prime_final / U.final_T) * (out.U_prime_final / U.final_T);
    return out;
}

/// The nondimensionalizing bundle.
struct FlowScales {
    double nu = 0.0;
    double h = 0.0;
    double F = 0.0;
    double U = 0.0;
    double U_final = 0.0;
    std::optional<double> U_prime;
    std::optional<double> U_prime_final;
    std::optional<double> I;
    std::optional<double> I_final;
    std::optional<double> L;
    std::optional<double> Re;
    std::optional<double> Re_final;
    std::optional<ForcingScales> forcing;
    std::vector<std::string> warnings;
};

inline FlowScales compute_flow_scales(const SnapshotSeries& series, const Field* forcing, double nu,
                                      DerivativeScheme scheme = DerivativeScheme::central,
                                      double tail_fraction = 0.5) {
    if (!(nu > 0.0)) throw RangeError("flow scales: viscosity must be positive");
    series.validate();
    FlowScales s;
    s.nu = nu;
    s.h = series.grid.h();
    const auto U = compute_U(series, tail_fraction);
    s.U = U.sup_tail;
    s.U_final = U.final_T;
    if (series.size() >= 10) {
        const auto up = compute_U_prime(series, tail_fraction);
        s.U_prime = up.U_prime;
        s.U_prime_final = up.U_prime_final;
        s.I = up.I;
        s.I_final = up.I_final;
    } else {
        s.warnings.emplace_back("fewer than 10 snapshots: U' and I(u) unavailable");
    }
    if (forcing) {
        auto fs = compute_forcing_scales(*forcing, scheme);
        s.F = fs.F;
        if (!fs.solenoidal) s.warnings.emplace_back("forcing is not solenoidal within 1e-8 relative");
        if (fs.L) {
            s.L = fs.L;
            s.Re = *fs.L * s.U / nu;
            s.Re_final = *fs.L * s.U_final / nu;
        } else {
            s.warnings.emplace_back("forcing vanishes: L and Re undefined");
        }
        s.forcing = fs;
    } else {
        s.warnings.emplace_back("no forcing supplied: L and Re undefined");
    }
    return s;
}

}  // namespace evdiag
