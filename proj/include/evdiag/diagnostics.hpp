#pragma once

#include <cmath>
#include <optional>
#include <string>
#include <vector>

#include "evdiag/closures.hpp"
#include "evdiag/errors.hpp"
#include "evdiag/flow_scales.hpp"
#include "evdiag/grid.hpp"
#include "evdiag/operators.hpp"
#include "evdiag/time_stats.hpp"

namespace evdiag {

// ---------------------------------------------------------------------------
// Dissipation rates
// ---------------------------------------------------------------------------

/// Per-snapshot volume-averaged dissipation rates
///   eps0     = (1/|Omega|) int 2 nu |S|^2
///   eps_turb = (1/|Omega|) int nu_turb |S|^2
struct DissipationSeries {
    TimeSeries eps0;
    TimeSeries eps_turb;
    TimeSeries eps_total;
};

inline DissipationSeries dissipation_series(const SnapshotSeries& series, double nu, const ClosureSpec& closure,
                                            DerivativeScheme scheme = DerivativeScheme::central) {
    if (!(nu > 0.0)) throw RangeError("dissipation_series: nu must be positive");
    series.validate();
    DissipationSeries d;
    for (auto* ts : {&d.eps0, &d.eps_turb, &d.eps_total}) ts->times = series.times;
    const double ncell = static_cast<double>(series.grid.size());
    for (const auto& snap : series.snapshots) {
        const auto s2 = magnitude_sq(sym_gradient(snap.velocity, scheme));
        const auto ev = evaluate_closure(snap, closure, scheme);
        double a = 0.0, b = 0.0;
        for (std::size_t p = 0; p < s2.size(); ++p) {
            a += s2[p];
            b += ev.nu_turb[0][p] * s2[p];
        }
        const double e0 = 2.0 * nu * a / ncell;
        const double et = b / ncell;
        d.eps0.values.push_back(e0);
        d.eps_turb.values.push_back(et);
        d.eps_total.values.push_back(e0 + et);
    }
    return d;
}

/// Time average of the per-cell dissipation densities over the record, for
/// inspecting where the model dissipates.
struct DissipationFields {
    Field eps0;
    Field eps_turb;
};

inline DissipationFields dissipation_fields(const SnapshotSeries& series, double nu, const ClosureSpec& closure,
                                            DerivativeScheme scheme = DerivativeScheme::central) {
    series.validate();
    DissipationFields out{Field(series.grid, 0), Field(series.grid, 0)};
    const std::size_t n = series.size();
    for (std::size_t t = 0; t < n; ++t) {
        const double w = (t == 0 || t + 1 == n ? 0.5 : 1.0) / static_cast<double>(n - 1);
        const auto& snap = series.snapshots[t];
        const auto s2 = magnitude_sq(sym_gradient(snap.velocity, scheme));
        const auto ev = evaluate_closure(snap, closure, scheme);
        for (std::size_t p = 0; p < s2.size(); ++p) {
            out.eps0[0][p] += w * 2.0 * nu * s2[p];
            out.eps_turb[0][p] += w * ev.nu_turb[0][p] * s2[p];
        }
    }
    return out;
}

// ---------------------------------------------------------------------------
// Energy budget
// ---------------------------------------------------------------------------

/// Terms of  1/2||u(T)||^2 + int_0^T int (2nu + nu_turb)|S|^2  =  1/2||u0||^2 + int_0^T (f, u)
/// with trapezoidal time quadrature.
struct EnergyBudget {
    double kinetic_initial = 0.0;  ///< 1/2 ||u0||^2
    double kinetic_final = 0.0;    ///< 1/2 ||u(T)||^2
    double dissipated = 0.0;
    double work = 0.0;             ///< int_0^T (f, u) dt
    double residual = 0.0;         ///< normalized (lhs - rhs)
};

inline EnergyBudget energy_budget(const SnapshotSeries& series, double nu, const ClosureSpec& closure,
                                  const Field* forcing, DerivativeScheme scheme = DerivativeScheme::central) {
    if (!forcing) throw ValidationError("energy_residual: forcing field is required (pass a zero field if unforced)");
    series.validate();
    if (!(forcing->grid == series.grid) || forcing->rank != 1)
        throw ValidationError("energy_residual: forcing does not match the series grid");
    const double vol = series.grid.volume();
    const auto diss = dissipation_series(series, nu, closure, scheme);
    const auto power = reduce_snapshots(series, [&](const Snapshot& s) { return inner_product(*forcing, s.velocity); });
    const double span = series.times.back() - series.times.front();
    EnergyBudget b;
    b.kinetic_initial = 0.5 * l2_norm_sq(series.snapshots.front().velocity);
    b.kinetic_final = 0.5 * l2_norm_sq(series.snapshots.back().velocity);
    b.dissipated = avg_full(diss.eps_total) * span * vol;
    b.work = avg_full(power) * span;
    const double lhs = b.kinetic_final + b.dissipated;
    const double rhs = b.kinetic_initial + b.work;
    const double scale = b.kinetic_initial + std::abs(b.work);
    b.residual = scale > 0.0 ? (lhs - rhs) / scale : lhs - rhs;
    return b;
}

/// Normalized energy-budget residual; the energy inequality requires it to be
/// at most the quadrature tolerance.
inline double energy_residual(const SnapshotSeries& series, double nu, const ClosureSpec& closure,
                              const Field* forcing, DerivativeScheme scheme = DerivativeScheme::central) {
    return energy_budget(series, nu, closure, forcing, scheme).residual;
}

// ---------------------------------------------------------------------------
// Force balance: inner product of the momentum equation with f
// ---------------------------------------------------------------------------

struct ForceBalance {
    double F_sq = 0.0;
    double unsteady = 0.0;    ///< (u(T) - u0, f) / (T |Omega|)
    double advective = 0.0;   ///< <(1/|Omega|)(uu, grad f)>_T
    double viscous = 0.0;     ///< <(1/|Omega|) int (2 nu + nu_turb) S(u):S(f)>_T
    double residual = 0.0;    ///< (F^2 - rhs) / F^2
};

inline ForceBalance force_balance(const SnapshotSeries& series, double nu, const ClosureSpec& closure,
                                  const Field* forcing, DerivativeScheme scheme = DerivativeScheme::central) {
    if (!forcing) throw ValidationError("force_balance_residual: forcing field is required");
    series.validate();
    const Field& f = *forcing;
    if (!(f.grid == series.grid) || f.rank != 1)
        throw ValidationError("force_balance_residual: forcing does not match the series grid");
    const double vol = series.grid.volume();
    ForceBalance fb;
    fb.F_sq = l2_norm_sq(f) / vol;
    if (!(fb.F_sq > 0.0)) throw UndefinedScaleError("force_balance_residual: F = 0, identity is degenerate");

    const int d = series.grid.ndim;
    const Field grad_f = gradient(f, scheme);
    const Field sym_f = sym_gradient(f, scheme);
    const double cell = series.grid.cell_volume();
    const auto adv = reduce_snapshots(series, [&](const Snapshot& s) {
        double sum = 0.0;
        for (int i = 0; i < d; ++i)
            for (int j = 0; j < d; ++j) {
                const auto& ui = s.velocity[i];
                const auto& uj = s.velocity[j];
                const auto& g = grad_f[i * d + j];
                for (std::size_t p = 0; p < ui.size(); ++p) sum += ui[p] * uj[p] * g[p];
            }
        return sum * cell / vol;
    });
    const auto visc = reduce_snapshots(series, [&](const Snapshot& s) {
        const Field S = sym_gradient(s.velocity, scheme);
        const auto ev = evaluate_closure(s, closure, scheme);
        double sum = 0.0;
        for (std::size_t c = 0; c < S.ncomp(); ++c)
            for (std::size_t p = 0; p < S.size(); ++p) sum += (2.0 * nu + ev.nu_turb[0][p]) * S[c][p] * sym_f[c][p];
        return sum * cell / vol;
    });
    const double span = series.times.back() - series.times.front();
    Field du(series.grid, 1);
    for (int c = 0; c < d; ++c)
        for (std::size_t p = 0; p < du.size(); ++p)
            du[c][p] = series.snapshots.back().velocity[c][p] - series.snapshots.front().velocity[c][p];
    fb.unsteady = inner_product(du, f) / (span * vol);
    fb.advective = avg_full(adv);
    fb.viscous = avg_full(visc);
    fb.residual = (fb.F_sq - (fb.unsteady - fb.advective + fb.viscous)) / fb.F_sq;
    return fb;
}

inline double force_balance_residual(const SnapshotSeries& series, double nu, const ClosureSpec& closure,
                                     const Field* forcing, DerivativeScheme scheme = DerivativeScheme::central) {
    return force_balance(series, nu, closure, forcing, scheme).residual;
}

// ---------------------------------------------------------------------------
// Resolution: Taylor microscale and inverse constant
// ---------------------------------------------------------------------------

struct TaylorMicroscale {
    double lambda = 0.0;        ///< long-time surrogate averages
    double lambda_final = 0.0;  ///< full-record averages
};

/// lambda_T = sqrt(15 <||u||^2> / <||grad u||^2>) with the full gradient.
inline TaylorMicroscale taylor_microscale(const SnapshotSeries& series,
                                          DerivativeScheme scheme = DerivativeScheme::central,
                                          double tail_fraction = 0.5) {
    series.validate();
    const auto energy = reduce_snapshots(series, [](const Snapshot& s) { return l2_norm_sq(s.velocity); });
    const auto grad = reduce_snapshots(series, [&](const Snapshot& s) { return l2_norm_sq(gradient(s.velocity, scheme)); });
    const auto e = avg_inf(energy, tail_fraction);
    const auto g = avg_inf(grad, tail_fraction);
    if (!(e.sup_tail > 0.0)) throw ValidationError("taylor_microscale: zero-energy record");
    if (!(g.sup_tail > 0.0) || !(g.final_T > 0.0))
        throw ValidationError("taylor_microscale: velocity gradient vanishes, microscale undefined");
    return {std::sqrt(15.0 * e.sup_tail / g.sup_tail), std::sqrt(15.0 * e.final_T / g.final_T)};
}

/// Empirical inverse-inequality constant: max over snapshots of h ||S(u)|| / ||u||.
inline double measure_inverse_constant(const SnapshotSeries& series,
                                       DerivativeScheme scheme = DerivativeScheme::central) {
    series.validate();
    const double h = series.grid.h();
    double ci = 0.0;
    bool any = false;
    for (const auto& snap : series.snapshots) {
        const double e = l2_norm_sq(snap.velocity);
        if (!(e > 0.0)) continue;
        any = true;
        ci = std::max(ci, h * std::sqrt(l2_norm_sq(sym_gradient(snap.velocity, scheme)) / e));
    }
    if (!any) throw ValidationError("measure_inverse_constant: zero-energy record");
    return ci;
}

enum class Verdict { ev_not_needed, ev_needed, indeterminate };

inline const char* to_string(Verdict v) {
    switch (v) {
        case Verdict::ev_not_needed: return "ev_not_needed";
        case Verdict::ev_needed: return "ev_needed";
        case Verdict::indeterminate: return "indeterminate";
    }
    return "?";
}

/// Is an eddy viscosity needed on this mesh?
struct ResolutionVerdict {
    double lambda_T = 0.0;
    double h = 0.0;
    double C_I = 0.0;
    double C_E = 1.0;
    double threshold_stmt = 0.0;    ///< 2 C_I C_E sqrt(15) Re^{-1/2} L
    double threshold_proof = 0.0;   ///< sqrt(2) C_I C_E Re^{-1/2} L
    double lambda_criterion = 0.0;  ///< (sqrt(30)/2) Re^{-1/2} L
    double under_dissipation_bound = 0.0;  ///< 2 Re^{-1} C_I^2 C_E^2 (h/L)^{-2} U^3/L
    Verdict verdict = Verdict::indeterminate;
};

/// Comparison rules: lambda_T <= lambda_criterion -> ev_not_needed (inclusive);
/// otherwise h >= threshold_stmt -> ev_needed; otherwise indeterminate.
inline ResolutionVerdict resolution_verdict(double lambda_T, const FlowScales& scales, double C_I, double C_E) {
    if (!scales.Re || !scales.L) throw ValidationError("resolution_verdict: Re and L are required");
    const double Re = *scales.Re;
    const double L = *scales.L;
    if (!(Re > 0.0) || !(L > 0.0) || !(scales.h > 0.0))
        throw ValidationError("resolution_verdict: Re, L and h must be positive");
    ResolutionVerdict r;
    r.lambda_T = lambda_T;
    r.h = scales.h;
    r.C_I = C_I;
    r.C_E = C_E;
    const double re_half = 1.0 / std::sqrt(Re);
    r.threshold_stmt = 2.0 * C_I * C_E * std::sqrt(15.0) * re_half * L;
    r.threshold_proof = std::sqrt(2.0) * C_I * C_E * re_half * L;
    r.lambda_criterion = std::sqrt(30.0) / 2.0 * re_half * L;
    const double hL = scales.h / L;
    r.under_dissipation_bound = 2.0 / Re * C_I * C_I * C_E * C_E / (hL * hL) * scales.U * scales.U * scales.U / L;
    if (lambda_T <= r.lambda_criterion)
        r.verdict = Verdict::ev_not_needed;
    else if (scales.h >= r.threshold_stmt)
        r.verdict = Verdict::ev_needed;
    else
        r.verdict = Verdict::indeterminate;
    return r;
}

inline ResolutionVerdict resolution_verdict(const SnapshotSeries& series, const FlowScales& scales, double C_I,
                                            double C_E, DerivativeScheme scheme = DerivativeScheme::central,
                                            double tail_fraction = 0.5) {
    return resolution_verdict(taylor_microscale(series, scheme, tail_fraction).lambda, scales, C_I, C_E);
}

// ---------------------------------------------------------------------------
// Dissipation bounds
// ---------------------------------------------------------------------------

/// Bound on <eps0 + eps_turb> for one beta, with both averaging conventions.
struct BoundEvaluation {
    double beta = 0.5;
    double lhs = 0.0;        ///< long-time surrogate of eps_total
    double lhs_final = 0.0;  ///< full-record average of eps_total
    double rhs_thm2 = 0.0;
    double rhs_thm2_final = 0.0;
    std::optional<double> rhs_cor_a;
    std::optional<double> rhs_cor_b;
    double ratio_nu = 0.0;
    double margin = 0.0;        ///< rhs_thm2 - lhs
    double margin_final = 0.0;  ///< rhs_thm2_final - lhs_final
};

/// (2/(2-b) + 2/(b(2-b)) Re^{-1} + 1/(b(2-b)) ratio) U^3/L.
inline double dissipation_bound(double beta, double Re, double ratio, double U, double L) {
    if (!(beta > 0.0 && beta < 1.0)) throw RangeError("dissipation bound: beta must lie in (0, 1)");
    const double q = beta * (2.0 - beta);
    return (2.0 / (2.0 - beta) + 2.0 / q / Re + ratio / q) * U * U * U / L;
}

inline std::vector<BoundEvaluation> evaluate_bounds(const DissipationSeries& diss, const FlowScales& scales,
                                                    const ClosureStats& closure, const std::vector<double>& betas,
                                                    double tail_fraction = 0.5) {
    for (double b : betas)
        if (!(b > 0.0 && b < 1.0)) throw RangeError("evaluate_bounds: beta must lie in (0, 1)");
    if (!scales.L || !scales.Re || !scales.Re_final) throw UndefinedScaleError("evaluate_bounds: L and Re are required");
    const double L = *scales.L;
    const auto lhs = avg_inf(diss.eps_total, tail_fraction);
    std::vector<BoundEvaluation> out;
    for (double beta : betas) {
        BoundEvaluation e;
        e.beta = beta;
        e.lhs = lhs.sup_tail;
        e.lhs_final = lhs.final_T;
        e.ratio_nu = closure.ratio_nu;
        e.rhs_thm2 = dissipation_bound(beta, *scales.Re, closure.ratio_nu, scales.U, L);
        e.rhs_thm2_final = dissipation_bound(beta, *scales.Re_final, closure.ratio_nu_final, scales.U_final, L);
        if (closure.avg_l && closure.U_prime_model) {
            const double lengths = closure.mu * (*closure.avg_l / L);
            e.rhs_cor_a = dissipation_bound(beta, *scales.Re, lengths * (*closure.U_prime_model / scales.U), scales.U, L);
            if (scales.U_prime && *scales.U_prime > 0.0 && scales.I)
                e.rhs_cor_b = dissipation_bound(
                    beta, *scales.Re, lengths * (*closure.U_prime_model / *scales.U_prime) * std::sqrt(*scales.I),
                    scales.U, L);
        }
        e.margin = e.rhs_thm2 - e.lhs;
        e.margin_final = e.rhs_thm2_final - e.lhs_final;
        out.push_back(e);
    }
    return out;
}

}  // namespace evdiag
