#pragma once

#include <CLI11.hpp>

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <ostream>
#include <string>
#include <vector>

#include "evdiag/diagnostics.hpp"
#include "evdiag/errors.hpp"
#include "evdiag/io/config.hpp"
#include "evdiag/io/manifest.hpp"
#include "evdiag/io/report_json.hpp"
#include "evdiag/io/snapshot_file.hpp"
#include "evdiag/minisolver.hpp"
#include "evdiag/report.hpp"
#include "evdiag/time_stats.hpp"

namespace evdiag::cli {

inline constexpr int kOk = 0;
inline constexpr int kFlagged = 1;
inline constexpr int kInputError = 2;

/// SolverConfig from `solver.*`, `forcing.*` and `closure.*` keys.
inline SolverConfig solver_config_from(const io::KeyValueConfig& c) {
    SolverConfig s;
    const auto n = c.get_int("solver.n", static_cast<long long>(s.n));
    if (n <= 0) throw ValidationError("solver.n must be positive");
    s.n = static_cast<std::size_t>(n);
    s.nu = c.get_double("solver.nu", s.nu);
    s.t_end = c.get_double("solver.t_end", s.t_end);
    s.cfl = c.get_double("solver.cfl", s.cfl);
    s.dealias = c.get_bool("solver.dealias", s.dealias);
    s.snapshot_every = static_cast<int>(c.get_int("solver.snapshot_every", s.snapshot_every));
    s.snapshot_interval = c.get_optional_double("solver.snapshot_interval");
    const auto seed = c.get_int("solver.seed", 0);
    if (seed < 0) throw ValidationError("solver.seed must be >= 0");
    s.seed = static_cast<std::uint64_t>(seed);
    const auto init = c.get_string("solver.initial", "taylor_green");
    if (init == "taylor_green")
        s.initial = InitialCondition::taylor_green;
    else if (init == "zero")
        s.initial = InitialCondition::zero;
    else
        throw ValidationError("solver.initial must be taylor_green or zero");
    s.perturbation = c.get_optional_double("solver.perturbation");
    s.emit_closure_fields = c.get_bool("solver.emit_closure_fields", s.emit_closure_fields);
    const auto fk = c.get_string("forcing.kind", "none");
    if (fk == "none")
        s.forcing.kind = ForcingKind::none;
    else if (fk == "kolmogorov")
        s.forcing.kind = ForcingKind::kolmogorov;
    else
        throw ValidationError("forcing.kind must be none or kolmogorov");
    s.forcing.amplitude = c.get_double("forcing.amplitude", s.forcing.amplitude);
    s.forcing.wavenumber = static_cast<int>(c.get_int("forcing.wavenumber", s.forcing.wavenumber));
    s.closure = io::closure_from_config(c);
    s.validate();
    return s;
}

inline std::string snapshot_name(std::size_t index) {
    char buf[32];
    std::snprintf(buf, sizeof buf, "snap_%06zu.evdg", index);
    return buf;
}

/// Runs the solver, streaming snapshots into `dir` and writing `dir/manifest`.
/// The forcing goes into the first snapshot file only.
inline std::size_t simulate_to(const SolverConfig& cfg, const std::filesystem::path& dir) {
    std::filesystem::create_directories(dir);
    const bool forced = cfg.forcing.kind != ForcingKind::none;
    std::vector<std::string> names;
    std::optional<Field> forcing;
    if (forced) forcing = MiniSolver(cfg).forcing();
    run(cfg, [&](double t, Snapshot&& snap) {
        io::SnapshotFile file;
        file.grid = snap.velocity.grid;
        file.time = t;
        file.velocity = std::move(snap.velocity);
        file.nu_turb = std::move(snap.nu_turb);
        file.mixing_length = std::move(snap.mixing_length);
        file.kprime = std::move(snap.kprime);
        if (names.empty() && forcing) file.forcing = forcing;
        names.push_back(snapshot_name(names.size()));
        io::write_snapshot(dir / names.back(), file);
    });
    io::write_manifest(dir / "manifest", cfg.nu, cfg.closure, forced, names);
    return names.size();
}

inline void dump_dissipation_field(const DissipationFields& d, const std::filesystem::path& dir) {
    std::filesystem::create_directories(dir);
    const auto path = dir / "dissipation_field.csv";
    std::ofstream out(path, std::ios::trunc);
    if (!out) throw Error("cannot write " + path.string());
    const auto& g = d.eps0.grid;
    out << "i,j,k,x,y,z,eps0,eps_turb\n";
    char buf[256];
    for (std::size_t k = 0; k < g.shape[2]; ++k)
        for (std::size_t j = 0; j < g.shape[1]; ++j)
            for (std::size_t i = 0; i < g.shape[0]; ++i) {
                const auto p = g.index(i, j, k);
                std::snprintf(buf, sizeof buf, "%zu,%zu,%zu,%.17g,%.17g,%.17g,%.17g,%.17g\n", i, j, k, g.coord(0, i),
                              g.coord(1, j), g.coord(2, k), d.eps0[0][p], d.eps_turb[0][p]);
                out << buf;
            }
}

struct Loaded {
    io::Manifest manifest;
    io::LoadedSeries data;
};

inline Loaded load(const std::filesystem::path& manifest_path) {
    Loaded l{io::load_manifest(manifest_path), {}};
    l.data = io::load_series(l.manifest);
    return l;
}

inline DiagnosticsReport analyze(const Loaded& l) {
    AnalysisInputs in{l.data.series, l.manifest.nu, l.manifest.closure,
                      l.data.forcing ? &*l.data.forcing : nullptr, l.manifest.options, l.data.digest};
    return assemble_report(in);
}

/// Invariant suite behind `verify`. Each line is PASS, FAIL or SKIP.
inline bool verify(const Loaded& l, std::ostream& out) {
    const auto report = analyze(l);
    const auto& series = l.data.series;
    const auto scheme = report.scheme;
    const double tail = l.manifest.options.tail_fraction;
    bool ok = true;
    char buf[512];
    auto line = [&](const char* status, const std::string& name, const std::string& detail) {
        out << status << "  " << name << "  " << detail << "\n";
    };
    auto check = [&](bool pass, const std::string& name, double lhs, double rhs) {
        std::snprintf(buf, sizeof buf, "lhs=%.17g rhs=%.17g", lhs, rhs);
        line(pass ? "PASS" : "FAIL", name, buf);
        ok = ok && pass;
    };

    const auto diss = dissipation_series(series, l.manifest.nu, l.manifest.closure, scheme);
    const auto energy = reduce_snapshots(series, [](const Snapshot& s) { return l2_norm_sq(s.velocity) / s.velocity.grid.volume(); });
    const double T = series.times.back() - series.times.front();
    const std::vector<std::pair<std::string, std::pair<const TimeSeries*, const TimeSeries*>>> pairs{
        {"energy*eps0", {&energy, &diss.eps0}},
        {"energy*eps_turb", {&energy, &diss.eps_turb}},
        {"eps0*eps_turb", {&diss.eps0, &diss.eps_turb}},
    };
    for (const auto& [name, p] : pairs) {
        const auto full = cs_in_time(*p.first, *p.second, T);
        check(full.holds(), "cauchy-schwarz-in-time[" + name + "]", full.lhs, full.rhs);
        const auto lim = cs_in_time_inf(*p.first, *p.second, tail);
        check(lim.holds(), "cauchy-schwarz-in-time-inf[" + name + "]", lim.lhs, lim.rhs);
    }

    if (report.intensity)
        check(report.intensity->holds, "intensity-inequality", report.intensity->lhs, report.intensity->rhs);
    else
        line("SKIP", "intensity-inequality", "needs a factored closure and a forcing length scale");

    if (report.energy)
        check(*report.energy_within_tolerance, "energy-residual", report.energy->residual,
              l.manifest.options.energy_tolerance);
    else
        line("SKIP", "energy-residual", "no forcing field");

    if (report.scales.forcing && report.scales.forcing->L) {
        const auto& f = *report.scales.forcing;
        const double L = *f.L;
        check(f.grad_inf <= (f.F / L) * (1.0 + 1e-12), "forcing-gradient-inf", f.grad_inf, f.F / L);
        check(f.grad_sq_mean <= (f.F * f.F / (L * L)) * (1.0 + 1e-12), "forcing-gradient-l2", f.grad_sq_mean,
              f.F * f.F / (L * L));
    } else {
        line("SKIP", "forcing-length-scale", "forcing absent or zero");
    }

    if (report.chain)
        check(report.chain->holds, "under-dissipation-chain", report.chain->eps0_avg_inf, report.chain->bound);
    else
        line("SKIP", "under-dissipation-chain", "resolution verdict unavailable");

    out << (ok ? "verify: all checks passed\n" : "verify: FAILED\n");
    return ok;
}

/// Entry point of the `evdiag` tool. Returns the process exit code.
inline int run_cli(int argc, const char* const* argv, std::ostream& out, std::ostream& err) {
    CLI::App app{"Eddy-viscosity closure diagnostics", "evdiag"};
    app.require_subcommand(1);

    std::string config_path, out_dir;
    auto* sim = app.add_subcommand("simulate", "run the 2D periodic solver from a config file");
    sim->add_option("--config", config_path, "key = value solver config")->required();
    sim->add_option("--out", out_dir, "output directory")->required();

    std::size_t tg_n = 64;
    double tg_nu = 0.01, tg_t_end = 5.0;
    int tg_every = 1;
    auto* tg = app.add_subcommand("taylor-green", "decaying Taylor-Green run without model or forcing");
    tg->add_option("--n", tg_n, "grid points per direction")->required();
    tg->add_option("--nu", tg_nu, "kinematic viscosity")->required();
    tg->add_option("--t-end", tg_t_end, "final time")->required();
    tg->add_option("--out", out_dir, "output directory")->required();
    tg->add_option("--snapshot-every", tg_every, "solver steps between snapshots");

    std::string manifest_path, report_path, dump_dir, beta_text;
    std::optional<double> flag_threshold;
    auto* an = app.add_subcommand("analyze", "compute the diagnostics report for a snapshot series");
    an->add_option("--manifest", manifest_path, "run manifest")->required();
    an->add_option("--beta", beta_text, "comma-separated beta values in (0,1)");
    an->add_option("--flag-threshold", flag_threshold, "threshold for the monitoring ratios");
    an->add_option("--report", report_path, "JSON report output")->required();
    an->add_option("--dump-dissipation-field", dump_dir, "directory for the time-averaged dissipation field");

    auto* ver = app.add_subcommand("verify", "check the invariant suite on a snapshot series");
    ver->add_option("--manifest", manifest_path, "run manifest")->required();

    try {
        app.parse(argc, argv);
    } catch (const CLI::CallForHelp& e) {
        return app.exit(e, out, err);
    } catch (const CLI::CallForAllHelp& e) {
        return app.exit(e, out, err);
    } catch (const CLI::ParseError& e) {
        app.exit(e, out, err);
        err << app.help();
        return kInputError;
    }

    try {
        if (*sim) {
            const auto cfg = solver_config_from(io::KeyValueConfig::load(config_path));
            const auto count = simulate_to(cfg, out_dir);
            out << "wrote " << count << " snapshots and manifest to " << out_dir << "\n";
            return kOk;
        }
        if (*tg) {
            SolverConfig cfg;
            cfg.n = tg_n;
            cfg.nu = tg_nu;
            cfg.t_end = tg_t_end;
            cfg.snapshot_every = tg_every;
            cfg.perturbation = 0.0;
            const auto count = simulate_to(cfg, out_dir);
            out << "wrote " << count << " snapshots and manifest to " << out_dir << "\n";
            return kOk;
        }
        if (*an) {
            auto loaded = load(manifest_path);
            auto& opt = loaded.manifest.options;
            if (!beta_text.empty()) opt.betas = io::KeyValueConfig::parse_double_list(beta_text, "--beta");
            for (double b : opt.betas)
                if (!(b > 0.0 && b < 1.0)) throw ValidationError("--beta values must lie in (0, 1)");
            if (flag_threshold) opt.flag_threshold = *flag_threshold;
            const auto report = analyze(loaded);
            io::write_report(report, report_path);
            if (!dump_dir.empty())
                dump_dissipation_field(dissipation_fields(loaded.data.series, loaded.manifest.nu,
                                                          loaded.manifest.closure, report.scheme),
                                       dump_dir);
            out << "monitoring: " << report.monitoring.overall << "\n";
            if (report.resolution) out << "resolution: " << to_string(report.resolution->verdict) << "\n";
            return report.monitoring.any_flagged() ? kFlagged : kOk;
        }
        if (*ver) return verify(load(manifest_path), out) ? kOk : kFlagged;
    } catch (const std::exception& e) {
        err << "error: " << e.what() << "\n";
        return kInputError;
    }
    return kInputError;
}

}  // namespace evdiag::cli
