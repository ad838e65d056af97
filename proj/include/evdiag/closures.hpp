#pragma once

#include <cmath>
#include <optional>
#include <string>

#include "evdiag/errors.hpp"
#include "evdiag/flow_scales.hpp"
#include "evdiag/grid.hpp"
#include "evdiag/operators.hpp"
#include "evdiag/time_stats.hpp"

namespace evdiag {

enum class ClosureKind { none, constant_nu, smagorinsky, prescribed_fields };

inline const char* to_string(ClosureKind k) {
    switch (k) {
        case ClosureKind::none: return "none";
        case ClosureKind::constant_nu: return "constant_nu";
        case ClosureKind::smagorinsky: return "smagorinsky";
        case ClosureKind::prescribed_fields: return "prescribed_fields";
    }
    return "?";
}

inline ClosureKind closure_kind_from_string(const std::string& s) {
    if (s == "none") return ClosureKind::none;
    if (s == "constant_nu") return ClosureKind::constant_nu;
    if (s == "smagorinsky") return ClosureKind::smagorinsky;
    if (s == "prescribed_fields") return ClosureKind::prescribed_fields;
    throw ValidationError("unknown closure kind '" + s + "'");
}

/// Which eddy viscosity to apply and its parameters. For prescribed_fields
/// the per-snapshot l and k' (or nu_turb) come from the snapshot itself.
struct ClosureSpec {
    ClosureKind kind = ClosureKind::none;
    double mu = 1.0;
    double nu_t = 0.0;  ///< constant_nu
    double cs = 0.17;   ///< smagorinsky

    void validate() const {
        if (!(mu >= 0.0)) throw ValidationError("closure: mu must be nonnegative");
        if (kind == ClosureKind::constant_nu && !(nu_t >= 0.0))
            throw ValidationError("closure: constant nu_t must be nonnegative");
        if (kind == ClosureKind::smagorinsky && !(cs >= 0.0))
            throw ValidationError("closure: Smagorinsky constant must be nonnegative");
    }

    static ClosureSpec constant(double nu_t) { return {ClosureKind::constant_nu, 1.0, nu_t, 0.17}; }
    static ClosureSpec smagorinsky(double cs) { return {ClosureKind::smagorinsky, 1.0, 0.0, cs}; }
    static ClosureSpec prescribed(double mu) { return {ClosureKind::prescribed_fields, mu, 0.0, 0.17}; }
};

/// Kolmogorov-Prandtl assembly nu_turb = sqrt(2) mu l sqrt(k').
inline Field nu_turb_field(const Field& l, const Field& kprime, double mu) {
    if (l.rank != 0 || kprime.rank != 0) throw ValidationError("nu_turb_field: l and k' must be scalar fields");
    if (!(l.grid == kprime.grid)) throw ValidationError("nu_turb_field: grid mismatch");
    if (!(mu >= 0.0)) throw ClosureInputError("nu_turb_field: mu must be nonnegative");
    l.validate("l");
    kprime.validate("kprime");
    Field nu(l.grid, 0, l.time);
    const double c = std::sqrt(2.0) * mu;
    for (std::size_t p = 0; p < nu.size(); ++p) {
        const double lp = l[0][p];
        const double kp = kprime[0][p];
        if (lp < 0.0) throw ClosureInputError("nu_turb_field: negative mixing length");
        if (kp < 0.0) throw ClosureInputError("nu_turb_field: negative turbulent kinetic energy");
        nu[0][p] = c * lp * std::sqrt(kp);
    }
    return nu;
}

struct LengthAndEnergy {
    Field mixing_length;
    Field kprime;
};

/// Smagorinsky in Kolmogorov-Prandtl form: l = Cs h, k' = l^2 |S|^2 / 2, so
/// that with mu = 1 the assembled viscosity is (Cs h)^2 |S|.
inline LengthAndEnergy smagorinsky_fields(const Field& u, double cs,
                                          DerivativeScheme scheme = DerivativeScheme::central) {
    if (!(cs >= 0.0)) throw ValidationError("smagorinsky_fields: Cs must be nonnegative");
    const Field S = sym_gradient(u, scheme);
    const double l = cs * u.grid.h();
    LengthAndEnergy out{Field(u.grid, 0, u.time), Field(u.grid, 0, u.time)};
    const auto s2 = magnitude_sq(S);
    for (std::size_t p = 0; p < s2.size(); ++p) {
        out.mixing_length[0][p] = l;
        out.kprime[0][p] = 0.5 * l * l * s2[p];
    }
    return out;
}

/// nu_turb for one snapshot, plus the (l, k') factoring when the closure has one.
struct ClosureEvaluation {
    Field nu_turb;
    std::optional<Field> mixing_length;
    std::optional<Field> kprime;
};

inline ClosureEvaluation evaluate_closure(const Snapshot& snap, const ClosureSpec& spec,
                                          DerivativeScheme scheme = DerivativeScheme::central) {
    spec.validate();
    const Grid& grid = snap.velocity.grid;
    switch (spec.kind) {
        case ClosureKind::none: return {Field(grid, 0, snap.velocity.time), {}, {}};
        case ClosureKind::constant_nu: {
            Field nu(grid, 0, snap.velocity.time);
            for (double& v : nu[0]) v = spec.nu_t;
            return {std::move(nu), {}, {}};
        }
        case ClosureKind::smagorinsky: {
            auto lk = smagorinsky_fields(snap.velocity, spec.cs, scheme);
            Field nu = nu_turb_field(lk.mixing_length, lk.kprime, spec.mu);
            return {std::move(nu), std::move(lk.mixing_length), std::move(lk.kprime)};
        }
        case ClosureKind::prescribed_fields: {
            if (snap.mixing_length && snap.kprime) {
                Field nu = nu_turb_field(*snap.mixing_length, *snap.kprime, spec.mu);
                return {std::move(nu), snap.mixing_length, snap.kprime};
            }
            if (snap.nu_turb) {
                snap.nu_turb->validate("nu_turb");
                for (double v : (*snap.nu_turb)[0])
                    if (v < 0.0) throw ClosureInputError("prescribed nu_turb is negative");
                return {*snap.nu_turb, {}, {}};
            }
            throw ValidationError("prescribed_fields closure: snapshot carries neither (l, k') nor nu_turb");
        }
    }
    throw ValidationError("unknown closure kind");
}

/// Closure-level statistics. Members derived from the (l, k') factoring are
/// absent when the closure supplies nu_turb directly.
struct ClosureStats {
    double mu = 1.0;
    double avg_nu_turb = 0.0;
    double avg_nu_turb_final = 0.0;
    double ratio_nu = 0.0;         ///< avg(nu_turb) / (L U)
    double ratio_nu_final = 0.0;
    std::optional<double> avg_l;
    std::optional<double> avg_l_final;
    std::optional<double> U_prime_model;
    std::optional<double> U_prime_model_final;
    std::optional<double> I_model;
    std::optional<double> I_model_final;

    [[nodiscard]] bool factored() const { return avg_l.has_value(); }
    /// mu * (avg(l)/L) * sqrt(I_model), the right side of the intensity estimate.
    [[nodiscard]] std::optional<double> intensity_bound(double L) const {
        if (!avg_l || !I_model) return std::nullopt;
        return mu * (*avg_l / L) * std::sqrt(*I_model);
    }
};

/// Per-snapshot space averages feeding ClosureStats.
struct ClosureSeries {
    TimeSeries nu_mean;                 ///< (1/|Omega|) int |nu_turb|
    std::optional<TimeSeries> l_sq;     ///< (1/|Omega|) ||l||^2
    std::optional<TimeSeries> two_k;    ///< (1/|Omega|) int 2k'
};

inline ClosureSeries closure_series(const SnapshotSeries& series, const ClosureSpec& spec,
                                    DerivativeScheme scheme = DerivativeScheme::central) {
    series.validate();
    ClosureSeries out;
    out.nu_mean.times = series.times;
    std::vector<double> lsq, twok;
    bool factored = true;
    for (const auto& snap : series.snapshots) {
        const auto ev = evaluate_closure(snap, spec, scheme);
        double s = 0.0;
        for (double v : ev.nu_turb[0]) s += std::abs(v);
        out.nu_mean.values.push_back(s / static_cast<double>(series.grid.size()));
        if (ev.mixing_length && ev.kprime) {
            double a = 0.0, b = 0.0;
            for (double v : (*ev.mixing_length)[0]) a += v * v;
            for (double v : (*ev.kprime)[0]) b += 2.0 * v;
            lsq.push_back(a / static_cast<double>(series.grid.size()));
            twok.push_back(b / static_cast<double>(series.grid.size()));
        } else {
            factored = false;
        }
    }
    if (factored) {
        out.l_sq = TimeSeries(series.times, std::move(lsq));
        out.two_k = TimeSeries(series.times, std::move(twok));
    }
    return out;
}

inline ClosureStats closure_stats(const SnapshotSeries& series, const ClosureSpec& spec, const FlowScales& scales,
                                  DerivativeScheme scheme = DerivativeScheme::central, double tail_fraction = 0.5) {
    if (!scales.L || !(*scales.L > 0.0)) throw UndefinedScaleError("closure_stats: L is undefined");
    if (!(scales.U > 0.0) || !(scales.U_final > 0.0)) throw UndefinedScaleError("closure_stats: U vanishes");
    const double L = *scales.L;
    const auto cs = closure_series(series, spec, scheme);
    ClosureStats st;
    st.mu = spec.mu;
    const auto nu_avg = avg_inf(cs.nu_mean, tail_fraction);
    st.avg_nu_turb = nu_avg.sup_tail;
    st.avg_nu_turb_final = nu_avg.final_T;
    st.ratio_nu = st.avg_nu_turb / (L * scales.U);
    st.ratio_nu_final = st.avg_nu_turb_final / (L * scales.U_final);
    if (cs.l_sq && cs.two_k) {
        const auto l_avg = avg_inf(*cs.l_sq, tail_fraction);
        const auto k_avg = avg_inf(*cs.two_k, tail_fraction);
        st.avg_l = std::sqrt(l_avg.sup_tail);
        st.avg_l_final = std::sqrt(l_avg.final_T);
        st.U_prime_model = std::sqrt(k_avg.sup_tail);
        st.U_prime_model_final = std::sqrt(k_avg.final_T);
        st.I_model = (*st.U_prime_model / scales.U) * (*st.U_prime_model / scales.U);
        st.I_model_final = (*st.U_prime_model_final / scales.U_final) * (*st.U_prime_model_final / scales.U_final);
    }
    return st;
}

}  // namespace evdiag
