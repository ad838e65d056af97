#pragma once

#include <algorithm>
#include <array>
#include <limits>
#include <cmath>
#include <complex>
#include <cstdint>
#include <functional>
#include <optional>
#include <random>
#include <string>
#include <vector>

#include "evdiag/closures.hpp"
#include "evdiag/errors.hpp"
#include "evdiag/fft.hpp"
#include "evdiag/grid.hpp"

namespace evdiag {

enum class ForcingKind { none, kolmogorov };
enum class InitialCondition { taylor_green, zero };

/// f = (amplitude * sin(wavenumber * y), 0) for Kolmogorov forcing.
struct ForcingSpec {
    ForcingKind kind = ForcingKind::none;
    double amplitude = 1.0;
    int wavenumber = 4;
};

struct SolverConfig {
    std::size_t n = 64;  ///< grid is n x n on [0, 2pi)^2, n a power of two
    double nu = 0.01;
    ClosureSpec closure{};
    ForcingSpec forcing{};
    double t_end = 1.0;
    double cfl = 0.5;
    bool dealias = true;
    int snapshot_every = 1;                   ///< nominal steps between snapshots
    std::optional<double> snapshot_interval;  ///< overrides snapshot_every when set
    std::uint64_t seed = 0;
    InitialCondition initial = InitialCondition::taylor_green;
    std::optional<double> perturbation;  ///< RMS of the random solenoidal perturbation
    bool emit_closure_fields = true;

    void validate() const {
        if (n < 16 || (n & (n - 1)) != 0) throw ValidationError("solver: n must be a power of two >= 16");
        if (!(nu > 0.0)) throw ValidationError("solver: nu must be positive");
        if (!(t_end > 0.0)) throw ValidationError("solver: t_end must be positive");
        if (!(cfl > 0.0 && cfl < 1.0)) throw ValidationError("solver: cfl must lie in (0, 1)");
        if (snapshot_every < 1) throw ValidationError("solver: snapshot_every must be >= 1");
        if (snapshot_interval && !(*snapshot_interval > 0.0))
            throw ValidationError("solver: snapshot_interval must be positive");
        if (closure.kind == ClosureKind::prescribed_fields)
            throw ValidationError("solver: prescribed_fields closures can only be analyzed, not simulated");
        closure.validate();
        if (perturbation && !(*perturbation >= 0.0)) throw ValidationError("solver: perturbation must be >= 0");
    }

    [[nodiscard]] double perturbation_amplitude() const {
        if (perturbation) return *perturbation;
        return forcing.kind == ForcingKind::none ? 0.0 : 1e-3;
    }
};

/// Normalized Fourier coefficients of the velocity on the r2c half plane.
struct SpectralState {
    std::vector<fft::cplx> u_hat;
    std::vector<fft::cplx> v_hat;
    double time = 0.0;
};

struct SolverLog {
    std::size_t steps = 0;
    std::size_t step_reductions = 0;  ///< CFL forced a smaller step mid-interval
    double min_dt = 0.0;
    double max_dt = 0.0;
};

/// 2D periodic incompressible Navier-Stokes with an eddy viscosity:
///   u_t + u.grad u - div((2 nu + nu_turb) S(u)) + grad p = f,  div u = 0,
/// pseudo-spectral in space, 2/3-rule dealiasing, Leray projection per
/// wavenumber, integrating factor for the 2 nu term and Wray's low-storage
/// RK3 for everything else.
class MiniSolver {
public:
    explicit MiniSolver(SolverConfig config) : cfg_(std::move(config)), plan_(cfg_.n) {
        cfg_.validate();
        const std::size_t n = cfg_.n;
        nk_ = n / 2 + 1;
        grid_ = Grid::periodic_square(n);
        kx_.resize(nk_);
        ky_.resize(n);
        for (std::size_t i = 0; i < nk_; ++i) kx_[i] = static_cast<double>(i);
        for (std::size_t j = 0; j < n; ++j)
            ky_[j] = j <= n / 2 ? static_cast<double>(j) : static_cast<double>(j) - static_cast<double>(n);
        mask_.assign(n * nk_, 1.0);
        for (std::size_t j = 0; j < n; ++j)
            for (std::size_t i = 0; i < nk_; ++i) {
                const bool nyquist = (i == n / 2) || (j == n / 2);
                const bool aliased = cfg_.dealias && (3.0 * std::abs(kx_[i]) >= static_cast<double>(n) ||
                                                      3.0 * std::abs(ky_[j]) >= static_cast<double>(n));
                if (nyquist || aliased) mask_[j * nk_ + i] = 0.0;
            }
        init_forcing();
        init_state();
    }

    [[nodiscard]] const SolverConfig& config() const { return cfg_; }
    [[nodiscard]] const Grid& grid() const { return grid_; }
    [[nodiscard]] const SpectralState& state() const { return state_; }
    [[nodiscard]] const SolverLog& log() const { return log_; }
    [[nodiscard]] const Field& forcing() const { return forcing_; }

    void set_state(SpectralState s) {
        if (s.u_hat.size() != mask_.size() || s.v_hat.size() != mask_.size())
            throw ValidationError("solver: state size does not match the grid");
        state_ = std::move(s);
        project(state_.u_hat, state_.v_hat, false);
    }

    /// Replace the state by the projection of physical velocity samples.
    void set_velocity(const Field& u) {
        if (!(u.grid == grid_) || u.rank != 1) throw ValidationError("solver: velocity does not match solver grid");
        SpectralState s;
        s.time = u.time;
        s.u_hat.resize(mask_.size());
        s.v_hat.resize(mask_.size());
        plan_.forward(u[0], s.u_hat);
        plan_.forward(u[1], s.v_hat);
        set_state(std::move(s));
    }

    /// Largest stable step for the current state.
    [[nodiscard]] double stable_dt() {
        evaluate_rhs(state_.u_hat, state_.v_hat, rhs_u_, rhs_v_);
        return dt_limit();
    }

    /// One step of size `dt`.
    void step(double dt) {
        evaluate_rhs(state_.u_hat, state_.v_hat, rhs_u_, rhs_v_);
        advance(dt);
    }

    /// One CFL-limited step; returns the step size taken.
    double step() {
        evaluate_rhs(state_.u_hat, state_.v_hat, rhs_u_, rhs_v_);
        const double dt = dt_limit();
        advance(dt);
        return dt;
    }

    /// Integrate to `t_target` with equal substeps, re-planning whenever the
    /// CFL limit drops below the planned step.
    void advance_to(double t_target) {
        const double start_dt_limit = [&] {
            evaluate_rhs(state_.u_hat, state_.v_hat, rhs_u_, rhs_v_);
            return dt_limit();
        }();
        double planned = std::numeric_limits<double>::infinity();
        bool first = true;
        while (true) {
            const double remaining = t_target - state_.time;
            if (remaining <= 1e-12 * std::max(1.0, std::abs(t_target))) break;
            if (!first) evaluate_rhs(state_.u_hat, state_.v_hat, rhs_u_, rhs_v_);
            const double limit = first ? start_dt_limit : dt_limit();
            first = false;
            const double nsteps = std::ceil(remaining / limit - 1e-9);
            double dt = remaining / std::max(1.0, nsteps);
            if (dt < planned * (1.0 - 1e-12) && planned != std::numeric_limits<double>::infinity())
                ++log_.step_reductions;
            planned = dt;
            const bool last = nsteps <= 1.0;
            advance(dt);
            if (last) {
                state_.time = t_target;
                break;
            }
        }
        state_.time = t_target;
    }

    /// Physical velocity at the grid points.
    [[nodiscard]] Field velocity() const {
        Field u(grid_, 1, state_.time);
        plan_.backward(state_.u_hat, u[0]);
        plan_.backward(state_.v_hat, u[1]);
        return u;
    }

    /// Velocity plus the closure fields the solver is using.
    [[nodiscard]] Snapshot snapshot() const {
        Snapshot s{velocity(), {}, {}, {}};
        if (!cfg_.emit_closure_fields || cfg_.closure.kind == ClosureKind::none) return s;
        auto ev = evaluate_closure(s, cfg_.closure, DerivativeScheme::spectral);
        s.nu_turb = std::move(ev.nu_turb);
        s.mixing_length = std::move(ev.mixing_length);
        s.kprime = std::move(ev.kprime);
        return s;
    }

    /// sqrt(sum |k . u_hat|^2) over the retained modes.
    [[nodiscard]] double spectral_divergence_norm() const {
        double sum = 0.0;
        for (std::size_t j = 0; j < cfg_.n; ++j)
            for (std::size_t i = 0; i < nk_; ++i) {
                const std::size_t p = j * nk_ + i;
                const auto d = kx_[i] * state_.u_hat[p] + ky_[j] * state_.v_hat[p];
                sum += std::norm(d);
            }
        return std::sqrt(sum);
    }

    /// Mean velocity (the k = 0 mode).
    [[nodiscard]] std::array<double, 2> mean_velocity() const {
        return {state_.u_hat[0].real(), state_.v_hat[0].real()};
    }

private:
    void init_forcing() {
        forcing_ = Field(grid_, 1);
        if (cfg_.forcing.kind == ForcingKind::kolmogorov) {
            const double a = cfg_.forcing.amplitude;
            const double k = cfg_.forcing.wavenumber;
            forcing_.fill(0, [&](double, double y, double) { return a * std::sin(k * y); });
        }
        f_hat_u_.resize(mask_.size());
        f_hat_v_.resize(mask_.size());
        plan_.forward(forcing_[0], f_hat_u_);
        plan_.forward(forcing_[1], f_hat_v_);
        max_force_ = max_norm(forcing_);
    }

    void init_state() {
        Field u(grid_, 1);
        if (cfg_.initial == InitialCondition::taylor_green) {
            u.fill(0, [](double x, double y, double) { return std::cos(x) * std::sin(y); });
            u.fill(1, [](double x, double y, double) { return -std::sin(x) * std::cos(y); });
        }
        const double amp = cfg_.perturbation_amplitude();
        if (amp > 0.0) add_perturbation(u, amp);
        set_velocity(u);
    }

    /// Random solenoidal field from a stream function of low-wavenumber modes,
    /// scaled to RMS `amp`.
    void add_perturbation(Field& u, double amp) const {
        std::mt19937_64 rng(cfg_.seed);
        std::uniform_real_distribution<double> phase(0.0, 2.0 * M_PI);
        std::uniform_real_distribution<double> weight(-1.0, 1.0);
        Field p(grid_, 1);
        const int kmax = std::min<int>(6, static_cast<int>(cfg_.n) / 4);
        for (int kx = -kmax; kx <= kmax; ++kx)
            for (int ky = 0; ky <= kmax; ++ky) {
                if (ky == 0 && kx <= 0) continue;
                if (kx * kx + ky * ky > kmax * kmax) continue;
                const double a = weight(rng);
                const double ph = phase(rng);
                // psi = a cos(kx x + ky y + ph);  u = dpsi/dy, v = -dpsi/dx
                for (std::size_t j = 0; j < cfg_.n; ++j)
                    for (std::size_t i = 0; i < cfg_.n; ++i) {
                        const double s = std::sin(kx * grid_.coord(0, i) + ky * grid_.coord(1, j) + ph);
                        p[0][grid_.index(i, j)] += -a * ky * s;
                        p[1][grid_.index(i, j)] += a * kx * s;
                    }
            }
        const double rms = std::sqrt((l2_norm_sq(p) / grid_.volume()));
        if (rms == 0.0) return;
        for (std::size_t c = 0; c < 2; ++c)
            for (std::size_t q = 0; q < u.size(); ++q) u[c][q] += amp / rms * p[c][q];
    }

    /// Leray projection (and optionally masking) in place.
    void project(std::vector<fft::cplx>& a, std::vector<fft::cplx>& b, bool keep_mean) const {
        for (std::size_t j = 0; j < cfg_.n; ++j)
            for (std::size_t i = 0; i < nk_; ++i) {
                const std::size_t p = j * nk_ + i;
                if (mask_[p] == 0.0) {
                    a[p] = 0.0;
                    b[p] = 0.0;
                    continue;
                }
                const double k2 = kx_[i] * kx_[i] + ky_[j] * ky_[j];
                if (k2 == 0.0) {
                    if (!keep_mean) {
                        a[p] = a[p].real();
                        b[p] = b[p].real();
                    }
                    continue;
                }
                const auto kdot = kx_[i] * a[p] + ky_[j] * b[p];
                a[p] -= kx_[i] * kdot / k2;
                b[p] -= ky_[j] * kdot / k2;
            }
    }

    /// Everything except the 2 nu diffusion, projected and masked. Records
    /// max |u| and max nu_turb for the step-size limit.
    void evaluate_rhs(const std::vector<fft::cplx>& uh, const std::vector<fft::cplx>& vh, std::vector<fft::cplx>& ru,
                      std::vector<fft::cplx>& rv) {
        const std::size_t n = cfg_.n;
        const std::size_t np = n * n;
        const std::size_t ns = mask_.size();
        for (auto* buf : {&u_, &v_, &ux_, &uy_, &vx_, &vy_, &a1_, &a2_}) buf->resize(np);
        tmp_.resize(ns);
        ru.resize(ns);
        rv.resize(ns);

        plan_.backward(uh, u_);
        plan_.backward(vh, v_);
        auto deriv = [&](const std::vector<fft::cplx>& src, bool along_x, std::vector<double>& dst) {
            for (std::size_t j = 0; j < n; ++j)
                for (std::size_t i = 0; i < nk_; ++i) {
                    const std::size_t p = j * nk_ + i;
                    tmp_[p] = src[p] * fft::cplx(0.0, along_x ? kx_[i] : ky_[j]);
                }
            plan_.backward(tmp_, dst);
        };
        deriv(uh, true, ux_);
        deriv(uh, false, uy_);
        deriv(vh, true, vx_);
        deriv(vh, false, vy_);

        max_speed_ = 0.0;
        for (std::size_t p = 0; p < np; ++p) {
            a1_[p] = u_[p] * ux_[p] + v_[p] * uy_[p];
            a2_[p] = u_[p] * vx_[p] + v_[p] * vy_[p];
            max_speed_ = std::max(max_speed_, std::sqrt(u_[p] * u_[p] + v_[p] * v_[p]));
        }
        plan_.forward(a1_, ru);
        plan_.forward(a2_, rv);
        if (cfg_.dealias) {
            for (std::size_t p = 0; p < ns; ++p) {
                ru[p] = -ru[p];
                rv[p] = -rv[p];
            }
        } else {
            // Without dealiasing the advective form alone is not energy
            // neutral; average it with the divergence form (skew-symmetric).
            for (auto* buf : {&t11_, &t12_, &t22_}) buf->resize(np);
            for (std::size_t p = 0; p < np; ++p) {
                t11_[p] = u_[p] * u_[p];
                t12_[p] = u_[p] * v_[p];
                t22_[p] = v_[p] * v_[p];
            }
            h11_.resize(ns);
            h12_.resize(ns);
            h22_.resize(ns);
            plan_.forward(t11_, h11_);
            plan_.forward(t12_, h12_);
            plan_.forward(t22_, h22_);
            for (std::size_t j = 0; j < n; ++j)
                for (std::size_t i = 0; i < nk_; ++i) {
                    const std::size_t p = j * nk_ + i;
                    const fft::cplx ikx(0.0, kx_[i]);
                    const fft::cplx iky(0.0, ky_[j]);
                    ru[p] = -0.5 * (ru[p] + ikx * h11_[p] + iky * h12_[p]);
                    rv[p] = -0.5 * (rv[p] + ikx * h12_[p] + iky * h22_[p]);
                }
        }

        max_nu_turb_ = 0.0;
        if (cfg_.closure.kind != ClosureKind::none) add_eddy_stress(ru, rv);

        // The mean of the nonlinear and stress terms vanishes identically.
        ru[0] = 0.0;
        rv[0] = 0.0;
        for (std::size_t p = 0; p < ns; ++p) {
            ru[p] += f_hat_u_[p];
            rv[p] += f_hat_v_[p];
        }
        project(ru, rv, true);
    }

    /// Adds the spectral divergence of tau = nu_turb * S(u).
    void add_eddy_stress(std::vector<fft::cplx>& ru, std::vector<fft::cplx>& rv) {
        const std::size_t n = cfg_.n;
        const std::size_t np = n * n;
        for (auto* buf : {&t11_, &t12_, &t22_}) buf->resize(np);
        const auto& c = cfg_.closure;
        const double l = c.cs * grid_.h();
        const double kp_coef = std::sqrt(2.0) * c.mu;
        for (std::size_t p = 0; p < np; ++p) {
            const double s11 = ux_[p];
            const double s22 = vy_[p];
            const double s12 = 0.5 * (uy_[p] + vx_[p]);
            double nut = 0.0;
            if (c.kind == ClosureKind::constant_nu) {
                nut = c.nu_t;
            } else if (c.kind == ClosureKind::smagorinsky) {
                const double s2 = s11 * s11 + s22 * s22 + 2.0 * s12 * s12;
                nut = kp_coef * l * std::sqrt(0.5 * l * l * s2);
            }
            max_nu_turb_ = std::max(max_nu_turb_, nut);
            t11_[p] = nut * s11;
            t12_[p] = nut * s12;
            t22_[p] = nut * s22;
        }
        const std::size_t ns = mask_.size();
        h11_.resize(ns);
        h12_.resize(ns);
        h22_.resize(ns);
        plan_.forward(t11_, h11_);
        plan_.forward(t12_, h12_);
        plan_.forward(t22_, h22_);
        for (std::size_t j = 0; j < n; ++j)
            for (std::size_t i = 0; i < nk_; ++i) {
                const std::size_t p = j * nk_ + i;
                const fft::cplx ikx(0.0, kx_[i]);
                const fft::cplx iky(0.0, ky_[j]);
                ru[p] += ikx * h11_[p] + iky * h12_[p];
                rv[p] += ikx * h12_[p] + iky * h22_[p];
            }
    }

    [[nodiscard]] double dt_limit() const {
        const double h = grid_.h();
        double dt = cfg_.cfl * h / std::max(max_speed_, 1e-8);
        // a flow starting from rest would otherwise take one huge first step
        if (max_force_ > 0.0) dt = std::min(dt, cfg_.cfl * std::sqrt(h / max_force_));
        if (max_nu_turb_ > 0.0) dt = std::min(dt, 0.25 * h * h / max_nu_turb_);
        return dt;
    }

    /// Wray RK3 with integrating factor; expects rhs_u_/rhs_v_ to hold the
    /// right side at the current state.
    void advance(double dt) {
        static constexpr double gamma[3] = {8.0 / 15.0, 5.0 / 12.0, 3.0 / 4.0};
        static constexpr double zeta[3] = {0.0, -17.0 / 60.0, -5.0 / 12.0};
        static constexpr double c[4] = {0.0, 8.0 / 15.0, 2.0 / 3.0, 1.0};
        const std::size_t n = cfg_.n;
        const std::size_t ns = mask_.size();
        prev_u_.resize(ns);
        prev_v_.resize(ns);
        for (int s = 0; s < 3; ++s) {
            if (s > 0) evaluate_rhs(state_.u_hat, state_.v_hat, rhs_u_, rhs_v_);
            for (std::size_t j = 0; j < n; ++j)
                for (std::size_t i = 0; i < nk_; ++i) {
                    const std::size_t p = j * nk_ + i;
                    const double decay = cfg_.nu * (kx_[i] * kx_[i] + ky_[j] * ky_[j]);
                    const double e_stage = std::exp(-decay * (c[s + 1] - c[s]) * dt);
                    auto next_u = e_stage * (state_.u_hat[p] + dt * gamma[s] * rhs_u_[p]);
                    auto next_v = e_stage * (state_.v_hat[p] + dt * gamma[s] * rhs_v_[p]);
                    if (s > 0) {
                        const double e_prev = std::exp(-decay * (c[s + 1] - c[s - 1]) * dt);
                        next_u += dt * zeta[s] * e_prev * prev_u_[p];
                        next_v += dt * zeta[s] * e_prev * prev_v_[p];
                    }
                    state_.u_hat[p] = next_u * mask_[p];
                    state_.v_hat[p] = next_v * mask_[p];
                }
            prev_u_.swap(rhs_u_);
            prev_v_.swap(rhs_v_);
        }
        state_.time += dt;
        ++log_.steps;
        log_.min_dt = log_.steps == 1 ? dt : std::min(log_.min_dt, dt);
        log_.max_dt = std::max(log_.max_dt, dt);
        double e = 0.0;
        for (std::size_t p = 0; p < ns; ++p) e += std::norm(state_.u_hat[p]) + std::norm(state_.v_hat[p]);
        if (!std::isfinite(e))
            throw SolverError("solver: non-finite state at step " + std::to_string(log_.steps));
    }

    SolverConfig cfg_;
    fft::Plan2d plan_;
    Grid grid_;
    std::size_t nk_ = 0;
    std::vector<double> kx_, ky_, mask_;
    Field forcing_;
    std::vector<fft::cplx> f_hat_u_, f_hat_v_;
    SpectralState state_;
    SolverLog log_;

    double max_speed_ = 0.0;
    double max_nu_turb_ = 0.0;
    double max_force_ = 0.0;
    std::vector<double> u_, v_, ux_, uy_, vx_, vy_, a1_, a2_, t11_, t12_, t22_;
    std::vector<fft::cplx> tmp_, h11_, h12_, h22_, rhs_u_, rhs_v_, prev_u_, prev_v_;
};

/// Snapshot interval used by `run`: the nominal interval (snapshot_every
/// initial CFL steps, or snapshot_interval) shrunk so t_end is a whole
/// number of intervals.
inline double snapshot_interval(MiniSolver& solver) {
    const auto& cfg = solver.config();
    const double nominal = cfg.snapshot_interval ? *cfg.snapshot_interval : cfg.snapshot_every * solver.stable_dt();
    const double count = std::max(1.0, std::ceil(cfg.t_end / nominal - 1e-9));
    return cfg.t_end / count;
}

/// Integrate to t_end, recording a snapshot at t = 0 and after every interval.
/// `on_snapshot`, when given, receives each snapshot instead of the series
/// storing it (the returned series then holds only times and forcing).
inline SnapshotSeries run(const SolverConfig& config,
                          const std::function<void(double, Snapshot&&)>& on_snapshot = {}) {
    MiniSolver solver(config);
    SnapshotSeries series;
    series.grid = solver.grid();
    series.forcing = solver.forcing();
    const double interval = snapshot_interval(solver);
    const auto count = static_cast<std::size_t>(std::llround(config.t_end / interval));
    auto emit = [&](double t) {
        series.times.push_back(t);
        auto snap = solver.snapshot();
        snap.velocity.time = t;
        if (on_snapshot)
            on_snapshot(t, std::move(snap));
        else
            series.snapshots.push_back(std::move(snap));
    };
    emit(0.0);
    for (std::size_t m = 1; m <= count; ++m) {
        const double t = static_cast<double>(m) * interval;
        solver.advance_to(t);
        emit(t);
    }
    return series;
}

/// Decaying Taylor-Green vortex with no model and no forcing.
inline SnapshotSeries taylor_green(std::size_t n, double nu, double t_end, int snapshot_every = 1) {
    SolverConfig cfg;
    cfg.n = n;
    cfg.nu = nu;
    cfg.t_end = t_end;
    cfg.snapshot_every = snapshot_every;
    cfg.closure = ClosureSpec{};
    cfg.forcing = ForcingSpec{};
    cfg.initial = InitialCondition::taylor_green;
    cfg.perturbation = 0.0;
    return run(cfg);
}

}  // namespace evdiag
