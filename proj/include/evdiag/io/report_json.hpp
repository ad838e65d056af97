#pragma once

#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <optional>
#include <string>
#include <vector>

#include "evdiag/io/manifest.hpp"
#include "evdiag/report.hpp"

namespace evdiag::io {

/// Minimal pretty-printing JSON emitter. Keys come out in call order and
/// doubles with 17 significant digits, so equal reports are equal bytes.
/// Missing optional values are written as the string "unavailable".
class JsonWriter {
public:
    JsonWriter& begin_object(const char* key = nullptr) { return open(key, '{'); }
    JsonWriter& end_object() { return close('}'); }
    JsonWriter& begin_array(const char* key = nullptr) { return open(key, '['); }
    JsonWriter& end_array() { return close(']'); }

    JsonWriter& value(const char* key, double v) {
        prefix(key);
        if (!std::isfinite(v)) {
            out_ += std::isnan(v) ? "null" : (v > 0 ? "\"inf\"" : "\"-inf\"");
        } else {
            char buf[40];
            std::snprintf(buf, sizeof buf, "%.17g", v);
            out_ += buf;
        }
        return *this;
    }
    JsonWriter& value(const char* key, std::optional<double> v) {
        return v ? value(key, *v) : value(key, std::string("unavailable"));
    }
    JsonWriter& value(const char* key, std::size_t v) {
        prefix(key);
        out_ += std::to_string(v);
        return *this;
    }
    JsonWriter& value(const char* key, int v) {
        prefix(key);
        out_ += std::to_string(v);
        return *this;
    }
    JsonWriter& value(const char* key, bool v) {
        prefix(key);
        out_ += v ? "true" : "false";
        return *this;
    }
    JsonWriter& value(const char* key, std::optional<bool> v) {
        return v ? value(key, *v) : value(key, std::string("unavailable"));
    }
    JsonWriter& value(const char* key, const std::string& s) {
        prefix(key);
        out_ += quote(s);
        return *this;
    }
    JsonWriter& value(const char* key, const char* s) { return value(key, std::string(s)); }

    [[nodiscard]] std::string str() const { return out_ + "\n"; }

private:
    struct Level {
        bool first = true;
    };

    JsonWriter& open(const char* key, char bracket) {
        prefix(key);
        out_ += bracket;
        stack_.push_back({});
        return *this;
    }
    JsonWriter& close(char bracket) {
        const bool empty = stack_.back().first;
        stack_.pop_back();
        if (!empty) newline();
        out_ += bracket;
        return *this;
    }
    void prefix(const char* key) {
        if (!stack_.empty()) {
            if (!stack_.back().first) out_ += ',';
            stack_.back().first = false;
            newline();
        }
        if (key) {
            out_ += quote(key);
            out_ += ": ";
        }
    }
    void newline() {
        out_ += '\n';
        out_.append(2 * stack_.size(), ' ');
    }
    static std::string quote(const std::string& s) {
        std::string q = "\"";
        for (char c : s) {
            switch (c) {
                case '"': q += "\\\""; break;
                case '\\': q += "\\\\"; break;
                case '\n': q += "\\n"; break;
                case '\t': q += "\\t"; break;
                default:
                    if (static_cast<unsigned char>(c) < 0x20) {
                        char buf[8];
                        std::snprintf(buf, sizeof buf, "\\u%04x", c);
                        q += buf;
                    } else {
                        q += c;
                    }
            }
        }
        return q + "\"";
    }

    std::string out_;
    std::vector<Level> stack_;
};

inline constexpr const char* kReportSchema = "evdiag.report/1";

/// Serialize a report. Key order is fixed; see README for the schema.
inline std::string report_to_json(const DiagnosticsReport& r) {
    JsonWriter w;
    w.begin_object();
    w.value("schema", kReportSchema);
    w.value("provenance", r.provenance);

    w.begin_object("inputs");
    w.begin_object("grid");
    w.value("ndim", r.grid.ndim);
    w.begin_array("shape");
    for (int a = 0; a < 3; ++a) w.value(nullptr, r.grid.shape[a]);
    w.end_array();
    w.begin_array("spacing");
    for (int a = 0; a < 3; ++a) w.value(nullptr, r.grid.spacing[a]);
    w.end_array();
    w.begin_array("periodic");
    for (int a = 0; a < 3; ++a) w.value(nullptr, r.grid.periodic[a]);
    w.end_array();
    w.value("volume", r.grid.volume());
    w.end_object();
    w.value("snapshots", r.snapshot_count);
    w.value("t_start", r.t_start);
    w.value("t_end", r.t_end);
    w.value("dt", r.dt);
    w.value("nu", r.nu);
    w.begin_object("closure");
    w.value("kind", to_string(r.closure.kind));
    w.value("mu", r.closure.mu);
    w.value("nu_t", r.closure.nu_t);
    w.value("cs", r.closure.cs);
    w.end_object();
    w.begin_object("options");
    w.value("derivative", to_string(r.options.derivative));
    w.value("derivative_resolved", to_string(r.scheme));
    w.value("tail_fraction", r.options.tail_fraction);
    w.value("flag_threshold", r.options.flag_threshold);
    w.begin_array("beta");
    for (double b : r.options.betas) w.value(nullptr, b);
    w.end_array();
    w.value("energy_tolerance", r.options.energy_tolerance);
    w.end_object();
    w.end_object();

    const auto& s = r.scales;
    w.begin_object("scales");
    w.value("nu", s.nu);
    w.value("h", s.h);
    w.value("F", s.F);
    w.value("U", s.U);
    w.value("U_final", s.U_final);
    w.value("U_prime", s.U_prime);
    w.value("U_prime_final", s.U_prime_final);
    w.value("I", s.I);
    w.value("I_final", s.I_final);
    w.value("L", s.L);
    w.value("Re", s.Re);
    w.value("Re_final", s.Re_final);
    if (s.forcing) {
        const auto& f = *s.forcing;
        w.begin_object("forcing");
        w.begin_array("L_candidates");
        for (double c : f.L_candidates) w.value(nullptr, c);
        w.end_array();
        w.value("grad_f_inf", f.grad_inf);
        w.value("grad_f_sq_mean", f.grad_sq_mean);
        w.value("max_divergence", f.max_divergence);
        w.value("solenoidal", f.solenoidal);
        w.value("slack_grad_inf", f.slack_inf);
        w.value("slack_grad_sq", f.slack_sq);
        w.end_object();
    } else {
        w.value("forcing", "unavailable");
    }
    w.end_object();

    w.begin_object("monitoring");
    const auto& m = r.monitoring;
    w.value("flag_threshold", m.flag_threshold);
    auto mon = [&](const char* key, const MonitoredStatistic& st) {
        w.begin_object(key);
        w.value("value", st.value);
        w.value("flagged", st.flagged);
        w.end_object();
    };
    mon("ratio_nu", m.ratio_nu);
    mon("avg_l_over_L", m.avg_l_over_L);
    mon("I_model", m.I_model);
    w.value("overall", m.overall);
    w.begin_array("attribution");
    for (const auto& a : m.attribution) w.value(nullptr, a);
    w.end_array();
    w.end_object();

    if (r.closure_stats) {
        const auto& c = *r.closure_stats;
        w.begin_object("closure_stats");
        w.value("mu", c.mu);
        w.value("avg_nu_turb", c.avg_nu_turb);
        w.value("avg_nu_turb_final", c.avg_nu_turb_final);
        w.value("ratio_nu", c.ratio_nu);
        w.value("ratio_nu_final", c.ratio_nu_final);
        w.value("avg_l", c.avg_l);
        w.value("avg_l_final", c.avg_l_final);
        w.value("U_prime_model", c.U_prime_model);
        w.value("U_prime_model_final", c.U_prime_model_final);
        w.value("I_model", c.I_model);
        w.value("I_model_final", c.I_model_final);
        if (r.intensity) {
            w.begin_object("intensity_inequality");
            w.value("lhs_ratio_nu", r.intensity->lhs);
            w.value("rhs_mu_avg_l_sqrt_I_model", r.intensity->rhs);
            w.value("holds", r.intensity->holds);
            w.end_object();
        } else {
            w.value("intensity_inequality", "unavailable");
        }
        w.end_object();
    } else {
        w.value("closure_stats", "unavailable");
    }

    w.begin_object("dissipation");
    auto summary = [&](const char* key, const DissipationSummary& d) {
        w.begin_object(key);
        w.value("avg_inf", d.avg_inf);
        w.value("final_T", d.final_T);
        w.value("min", d.min);
        w.end_object();
    };
    summary("eps0", r.eps0);
    summary("eps_turb", r.eps_turb);
    summary("eps_total", r.eps_total);
    w.end_object();

    w.begin_object("resolution");
    w.value("lambda_T", r.lambda_T ? std::optional<double>(r.lambda_T->lambda) : std::nullopt);
    w.value("lambda_T_final", r.lambda_T ? std::optional<double>(r.lambda_T->lambda_final) : std::nullopt);
    w.value("h", r.scales.h);
    w.value("C_I", r.C_I);
    w.value("C_E", r.C_E);
    w.value("C_E_source", r.C_E_measured ? "supplied" : "default (no reference solution)");
    if (r.resolution) {
        const auto& v = *r.resolution;
        w.value("threshold_stmt", v.threshold_stmt);
        w.value("threshold_proof", v.threshold_proof);
        w.value("threshold_ratio", v.threshold_stmt / v.threshold_proof);
        w.value("lambda_criterion", v.lambda_criterion);
        w.value("under_dissipation_bound", v.under_dissipation_bound);
        w.value("eps0_avg_inf", r.chain->eps0_avg_inf);
        w.value("chain_holds", r.chain->holds);
        w.value("verdict", to_string(v.verdict));
    } else {
        w.value("verdict", "unavailable");
    }
    w.end_object();

    w.begin_array("bounds");
    for (const auto& b : r.bounds) {
        w.begin_object();
        w.value("beta", b.beta);
        w.value("lhs", b.lhs);
        w.value("lhs_final", b.lhs_final);
        w.value("rhs_thm2", b.rhs_thm2);
        w.value("rhs_thm2_final", b.rhs_thm2_final);
        w.value("rhs_cor_a", b.rhs_cor_a);
        w.value("rhs_cor_b", b.rhs_cor_b);
        w.value("ratio_nu", b.ratio_nu);
        w.value("margin", b.margin);
        w.value("margin_final", b.margin_final);
        w.end_object();
    }
    w.end_array();

    if (r.energy) {
        const auto& e = *r.energy;
        w.begin_object("energy");
        w.value("kinetic_initial", e.kinetic_initial);
        w.value("kinetic_final", e.kinetic_final);
        w.value("dissipated", e.dissipated);
        w.value("work", e.work);
        w.value("residual", e.residual);
        w.value("within_tolerance", r.energy_within_tolerance);
        w.end_object();
    } else {
        w.value("energy", "unavailable");
    }
    if (r.force_balance) {
        const auto& f = *r.force_balance;
        w.begin_object("force_balance");
        w.value("F_sq", f.F_sq);
        w.value("unsteady", f.unsteady);
        w.value("advective", f.advective);
        w.value("viscous", f.viscous);
        w.value("residual", f.residual);
        w.end_object();
    } else {
        w.value("force_balance", "unavailable");
    }

    w.begin_array("warnings");
    for (const auto& s2 : r.warnings) w.value(nullptr, s2);
    w.end_array();
    w.begin_array("caveats");
    for (const auto& s2 : r.caveats) w.value(nullptr, s2);
    w.end_array();
    w.end_object();
    return w.str();
}

inline void write_report(const DiagnosticsReport& r, const std::filesystem::path& path) {
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) throw Error("cannot write report " + path.string());
    out << report_to_json(r);
    if (!out) throw Error("write failed for report " + path.string());
}

}  // namespace evdiag::io
