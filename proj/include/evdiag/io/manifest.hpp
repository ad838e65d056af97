#pragma once

#include <openssl/evp.h>

#include <array>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <memory>
#include <sstream>
#include <optional>
#include <string>
#include <vector>

#include "evdiag/closures.hpp"
#include "evdiag/errors.hpp"
#include "evdiag/grid.hpp"
#include "evdiag/io/config.hpp"
#include "evdiag/io/snapshot_file.hpp"
#include "evdiag/report.hpp"

namespace evdiag::io {

/// Incremental SHA-256 used for the report's input digest.
class Sha256 {
public:
    Sha256() : ctx_(EVP_MD_CTX_new(), EVP_MD_CTX_free) {
        if (!ctx_ || EVP_DigestInit_ex(ctx_.get(), EVP_sha256(), nullptr) != 1) throw Error("sha256: init failed");
    }
    void update(const void* data, std::size_t n) {
        if (EVP_DigestUpdate(ctx_.get(), data, n) != 1) throw Error("sha256: update failed");
    }
    void update(const std::string& s) { update(s.data(), s.size()); }
    void update(const std::vector<unsigned char>& b) { update(b.data(), b.size()); }
    std::string hex() {
        std::array<unsigned char, EVP_MAX_MD_SIZE> md{};
        unsigned int len = 0;
        if (EVP_DigestFinal_ex(ctx_.get(), md.data(), &len) != 1) throw Error("sha256: final failed");
        std::string out;
        char buf[3];
        for (unsigned int i = 0; i < len; ++i) {
            std::snprintf(buf, sizeof buf, "%02x", md[i]);
            out += buf;
        }
        return out;
    }

private:
    std::unique_ptr<EVP_MD_CTX, decltype(&EVP_MD_CTX_free)> ctx_;
};

/// How the analysis obtains the body force.
enum class ForcingSource { file, none };

/// Parsed manifest. Snapshot paths are resolved against the manifest's
/// directory.
struct Manifest {
    std::filesystem::path path;
    std::vector<std::filesystem::path> snapshots;
    double nu = 0.0;
    ClosureSpec closure{};
    ForcingSource forcing = ForcingSource::file;
    std::array<bool, 3> periodic{true, true, true};
    AnalysisOptions options{};
    std::string text;  ///< raw contents, part of the provenance digest
};

inline DerivativeChoice derivative_choice_from_string(const std::string& s) {
    if (s == "auto") return DerivativeChoice::automatic;
    if (s == "central") return DerivativeChoice::central;
    if (s == "spectral") return DerivativeChoice::spectral;
    throw ValidationError("unknown derivative scheme '" + s + "'");
}

inline const char* to_string(DerivativeChoice c) {
    switch (c) {
        case DerivativeChoice::automatic: return "auto";
        case DerivativeChoice::central: return "central";
        case DerivativeChoice::spectral: return "spectral";
    }
    return "?";
}

/// closure.* keys shared by manifests and solver configs.
inline ClosureSpec closure_from_config(const KeyValueConfig& cfg) {
    ClosureSpec c;
    c.kind = closure_kind_from_string(cfg.get_string("closure.kind", "none"));
    c.mu = cfg.get_double("closure.mu", 1.0);
    c.nu_t = cfg.get_double("closure.nu_t", 0.0);
    c.cs = cfg.get_double("closure.cs", 0.17);
    c.validate();
    return c;
}

inline std::string format_double(double v) {
    char buf[40];
    std::snprintf(buf, sizeof buf, "%.17g", v);
    return buf;
}

inline std::string closure_to_config(const ClosureSpec& c) {
    return "closure.kind = " + std::string(to_string(c.kind)) + "\nclosure.mu = " + format_double(c.mu) +
           "\nclosure.nu_t = " + format_double(c.nu_t) + "\nclosure.cs = " + format_double(c.cs) + "\n";
}

inline Manifest parse_manifest(const std::string& text, const std::filesystem::path& path) {
    const auto cfg = KeyValueConfig::parse(text, path.string());
    Manifest m;
    m.path = path;
    m.text = text;
    const auto nu = cfg.get_optional_double("nu");
    if (!nu) throw ValidationError("manifest: 'nu' is required");
    m.nu = *nu;
    if (!(m.nu > 0.0)) throw ValidationError("manifest: nu must be positive");
    m.closure = closure_from_config(cfg);
    const auto forcing = cfg.get_string("forcing", "file");
    if (forcing == "file")
        m.forcing = ForcingSource::file;
    else if (forcing == "none")
        m.forcing = ForcingSource::none;
    else
        throw ValidationError("manifest: forcing must be 'file' or 'none'");
    if (auto p = cfg.get("grid.periodic")) {
        std::vector<bool> flags;
        std::stringstream ss(*p);
        std::string item;
        while (std::getline(ss, item, ',')) {
            item.erase(0, item.find_first_not_of(' '));
            item.erase(item.find_last_not_of(' ') + 1);
            if (item == "true") flags.push_back(true);
            else if (item == "false") flags.push_back(false);
            else throw ValidationError("manifest: grid.periodic entries must be true or false");
        }
        for (std::size_t a = 0; a < flags.size() && a < 3; ++a) m.periodic[a] = flags[a];
    }
    auto& o = m.options;
    o.betas = cfg.get_double_list("analysis.beta", o.betas);
    o.flag_threshold = cfg.get_double("analysis.flag_threshold", o.flag_threshold);
    o.tail_fraction = cfg.get_double("analysis.tail_fraction", o.tail_fraction);
    o.derivative = derivative_choice_from_string(cfg.get_string("analysis.derivative", "auto"));
    o.C_E = cfg.get_optional_double("analysis.c_e");
    o.energy_tolerance = cfg.get_double("analysis.energy_tolerance", o.energy_tolerance);
    const auto dir = path.parent_path();
    for (const auto& s : cfg.get_all("snapshot")) m.snapshots.push_back(dir / s);
    if (m.snapshots.size() < 2) throw ValidationError("manifest: at least two snapshot entries are required");
    return m;
}

inline Manifest load_manifest(const std::filesystem::path& path) {
    if (!std::filesystem::exists(path)) throw ValidationError("manifest not found: " + path.string());
    std::ifstream in(path);
    std::stringstream ss;
    ss << in.rdbuf();
    return parse_manifest(ss.str(), path);
}

/// A series read from disk together with the forcing to analyze it with.
struct LoadedSeries {
    SnapshotSeries series;
    std::optional<Field> forcing;
    std::string digest;  ///< sha256 over the manifest text and every snapshot file
};

inline LoadedSeries load_series(const Manifest& m) {
    LoadedSeries out;
    Sha256 sha;
    sha.update(m.text);
    for (const auto& path : m.snapshots) {
        const auto bytes = read_bytes(path);
        sha.update(bytes);
        auto file = decode_snapshot(bytes, m.periodic);
        if (!file.velocity) throw ValidationError(path.string() + ": snapshot has no velocity field");
        if (out.series.snapshots.empty()) out.series.grid = file.grid;
        if (!(file.grid == out.series.grid)) throw ValidationError(path.string() + ": grid differs from first snapshot");
        if (file.forcing && !out.forcing) out.forcing = std::move(file.forcing);
        out.series.times.push_back(file.time);
        out.series.snapshots.push_back(
            Snapshot{std::move(*file.velocity), std::move(file.nu_turb), std::move(file.mixing_length), std::move(file.kprime)});
    }
    out.series.validate();
    if (m.forcing == ForcingSource::none) {
        if (out.forcing) throw ValidationError("manifest declares forcing = none but a snapshot carries a forcing field");
        out.forcing = Field(out.series.grid, 1);
    }
    out.series.forcing = out.forcing;
    out.digest = "sha256:" + sha.hex();
    return out;
}

/// Writes `manifest` next to the snapshot files.
inline void write_manifest(const std::filesystem::path& path, double nu, const ClosureSpec& closure, bool forced,
                           const std::vector<std::string>& snapshot_names) {
    std::string text = "# evdiag manifest\nnu = " + format_double(nu) + "\n" + closure_to_config(closure) +
                       "forcing = " + (forced ? "file" : "none") + "\n";
    for (const auto& s : snapshot_names) text += "snapshot = " + s + "\n";
    std::ofstream out(path, std::ios::trunc);
    if (!out) throw Error("cannot write " + path.string());
    out << text;
}

}  // namespace evdiag::io
