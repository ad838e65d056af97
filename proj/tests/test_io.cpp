#include <gtest/gtest.h>

#include <bit>
#include <cstring>
#include <fstream>
#include <random>

#include <json.hpp>

#include "evdiag/io/manifest.hpp"
#include "evdiag/io/report_json.hpp"
#include "evdiag/io/snapshot_file.hpp"
#include "evdiag/minisolver.hpp"
#include "support.hpp"

using namespace evdiag;
using namespace evdiag::io;
using ojson = nlohmann::ordered_json;

namespace {

bool same_bits(const Field& a, const Field& b) {
    if (a.ncomp() != b.ncomp()) return false;
    for (std::size_t c = 0; c < a.ncomp(); ++c)
        if (a[c].size() != b[c].size() || std::memcmp(a[c].data(), b[c].data(), a[c].size() * 8) != 0) return false;
    return true;
}

Field random_field(const Grid& g, int rank, std::mt19937& rng) {
    std::uniform_real_distribution<double> uni(-1e3, 1e3);
    std::uniform_int_distribution<int> pick(0, 20);
    Field f(g, rank);
    for (auto& comp : f.components)
        for (double& v : comp) {
            switch (pick(rng)) {
                case 0: v = -0.0; break;
                case 1: v = std::numeric_limits<double>::denorm_min(); break;
                case 2: v = std::numeric_limits<double>::max(); break;
                default: v = uni(rng);
            }
        }
    return f;
}

SnapshotFile taylor_green_file(std::size_t n = 16, double t = 0.25) {
    const auto g = Grid::periodic_square(n);
    SnapshotFile s;
    s.grid = g;
    s.time = t;
    s.velocity = evtest::taylor_green_field(g, 0.9);
    s.velocity->time = t;
    return s;
}

void put_u32(std::vector<unsigned char>& b, std::size_t off, std::uint32_t v) {
    for (int i = 0; i < 4; ++i) b[off + i] = static_cast<unsigned char>(v >> (8 * i));
}

template <class E>
std::string error_message(auto&& fn) {
    try {
        fn();
    } catch (const E& e) {
        return e.what();
    }
    return "<no exception>";
}

// Writes `n` Taylor-Green snapshot files and a manifest into `dir`.
std::filesystem::path write_tg_case(const std::filesystem::path& dir, std::size_t n_snap = 12) {
    const auto s = taylor_green(16, 0.05, 4.0);
    std::vector<std::string> names;
    for (std::size_t i = 0; i < n_snap && i < s.size(); ++i) {
        SnapshotFile f;
        f.grid = s.grid;
        f.time = s.times[i];
        f.velocity = s.snapshots[i].velocity;
        const auto name = "s" + std::to_string(i) + ".evdg";
        write_snapshot(dir / name, f);
        names.push_back(name);
    }
    write_manifest(dir / "manifest", 0.05, ClosureSpec{}, false, names);
    return dir / "manifest";
}

}  // namespace

// ---------------------------------------------------------------------------
// snapshot files
// ---------------------------------------------------------------------------

TEST(SnapshotFile, TaylorGreenRoundTripIsBitExact) {
    const auto dir = evtest::temp_dir("roundtrip");
    auto s = taylor_green_file(32, 1.5);
    s.forcing = evtest::vector_field(s.grid, [](double, double y, double) { return std::sin(4.0 * y); },
                                     [](double, double, double) { return 0.0; });
    write_snapshot(dir / "tg.evdg", s);
    const auto r = read_snapshot(dir / "tg.evdg");
    EXPECT_TRUE(r.grid == s.grid);
    EXPECT_EQ(std::bit_cast<std::uint64_t>(r.time), std::bit_cast<std::uint64_t>(1.5));
    ASSERT_TRUE(r.velocity && r.forcing);
    EXPECT_TRUE(same_bits(*r.velocity, *s.velocity));
    EXPECT_TRUE(same_bits(*r.forcing, *s.forcing));
    EXPECT_FALSE(r.nu_turb || r.mixing_length || r.kprime);
}

TEST(SnapshotFile, RandomFieldsRoundTrip) {
    std::mt19937 rng(42);
    std::uniform_int_distribution<int> dim(2, 3), ext(4, 10), maskd(1, 31);
    for (int trial = 0; trial < 60; ++trial) {
        Grid g;
        g.ndim = dim(rng);
        g.shape = {static_cast<std::size_t>(ext(rng)), static_cast<std::size_t>(ext(rng)),
                   g.ndim == 3 ? static_cast<std::size_t>(ext(rng)) : 1u};
        g.spacing = {0.1 * ext(rng), 0.3, g.ndim == 3 ? 0.7 : 1.0};
        SnapshotFile s;
        s.grid = g;
        s.time = 0.125 * trial;
        const int mask = maskd(rng);
        if (mask & 1) s.velocity = random_field(g, 1, rng);
        if (mask & 2) s.nu_turb = random_field(g, 0, rng);
        if (mask & 4) s.mixing_length = random_field(g, 0, rng);
        if (mask & 8) s.kprime = random_field(g, 0, rng);
        if (mask & 16) s.forcing = random_field(g, 1, rng);
        const auto bytes = encode_snapshot(s);
        const auto r = decode_snapshot(bytes, {true, true, true});
        EXPECT_TRUE(r.grid == g);
        EXPECT_EQ(r.mask(), static_cast<std::uint32_t>(mask));
        auto check = [](const std::optional<Field>& a, const std::optional<Field>& b) {
            ASSERT_EQ(a.has_value(), b.has_value());
            if (a) {
                EXPECT_TRUE(same_bits(*a, *b));
            }
        };
        check(r.velocity, s.velocity);
        check(r.nu_turb, s.nu_turb);
        check(r.mixing_length, s.mixing_length);
        check(r.kprime, s.kprime);
        check(r.forcing, s.forcing);
        EXPECT_EQ(encode_snapshot(r), bytes);
    }
}

TEST(SnapshotFile, HeaderLayout) {
    const auto s = taylor_green_file(16, 2.0);
    const auto b = encode_snapshot(s);
    ASSERT_EQ(b.size(), 60u + 2u * 16u * 16u * 8u);
    EXPECT_EQ(b[0], 0x45);
    EXPECT_EQ(b[1], 0x56);
    EXPECT_EQ(b[2], 0x44);
    EXPECT_EQ(b[3], 0x47);
    EXPECT_EQ(b[4], 1);  // version, little-endian
    EXPECT_EQ(b[5] | b[6] | b[7], 0);
    EXPECT_EQ(b[8], 2);    // ndim
    EXPECT_EQ(b[12], 16);  // nx
    EXPECT_EQ(b[20], 1);   // nz
    double dx;
    std::memcpy(&dx, &b[24], 8);  // the test host is little-endian
    EXPECT_EQ(dx, s.grid.spacing[0]);
    double t;
    std::memcpy(&t, &b[48], 8);
    EXPECT_EQ(t, 2.0);
    EXPECT_EQ(b[56], 1);  // velocity only
    // first payload value is u at x = y = 0, x fastest
    double u00, u10;
    std::memcpy(&u00, &b[60], 8);
    std::memcpy(&u10, &b[68], 8);
    EXPECT_EQ(u00, (*s.velocity)[0][s.grid.index(0, 0)]);
    EXPECT_EQ(u10, (*s.velocity)[0][s.grid.index(1, 0)]);
}

TEST(SnapshotFile, TwoDimensionalHeaderWithDepthRejected) {
    auto b = encode_snapshot(taylor_green_file());
    put_u32(b, 20, 3);
    EXPECT_THROW(decode_snapshot(b), FormatError);
}

TEST(SnapshotFile, UnsupportedVersion) {
    auto b = encode_snapshot(taylor_green_file());
    put_u32(b, 4, 2);
    const auto msg = error_message<FormatError>([&] { decode_snapshot(b); });
    EXPECT_NE(msg.find("unsupported version"), std::string::npos) << msg;
    EXPECT_NE(msg.find("offset 4"), std::string::npos) << msg;
}

TEST(SnapshotFile, BadMagicReportsOffset) {
    auto b = encode_snapshot(taylor_green_file());
    b[2] = 'X';
    const auto msg = error_message<FormatError>([&] { decode_snapshot(b); });
    EXPECT_NE(msg.find("magic"), std::string::npos) << msg;
    EXPECT_NE(msg.find("offset 0"), std::string::npos) << msg;
}

TEST(SnapshotFile, TruncationIsALengthError) {
    const auto b = encode_snapshot(taylor_green_file());
    auto cut = b;
    cut.resize(b.size() - 8);
    EXPECT_THROW(decode_snapshot(cut), LengthError);
    cut.resize(30);
    EXPECT_THROW(decode_snapshot(cut), LengthError);
    auto longer = b;
    longer.push_back(0);
    EXPECT_THROW(decode_snapshot(longer), LengthError);
}

TEST(SnapshotFile, UnknownMaskBitsRejected) {
    auto b = encode_snapshot(taylor_green_file());
    put_u32(b, 56, 1u | 64u);
    EXPECT_THROW(decode_snapshot(b), FormatError);
}

TEST(SnapshotFile, NaNNamesTheField) {
    auto s = taylor_green_file(16);
    s.nu_turb = evtest::constant_scalar(s.grid, 0.01);
    s.kprime = evtest::constant_scalar(s.grid, 0.5);
    auto b = encode_snapshot(s);
    // kprime follows velocity (2 comps) and nu_turb (1 comp)
    const std::size_t off = 60 + 3 * 16 * 16 * 8 + 5 * 8;
    const double nan = std::numeric_limits<double>::quiet_NaN();
    std::memcpy(&b[off], &nan, 8);
    const auto msg = error_message<ValidationError>([&] { decode_snapshot(b); });
    EXPECT_NE(msg.find("kprime"), std::string::npos) << msg;
}

TEST(SnapshotFile, MissingFile) {
    EXPECT_THROW(read_snapshot("/nonexistent/dir/x.evdg"), ValidationError);
}

// ---------------------------------------------------------------------------
// manifests
// ---------------------------------------------------------------------------

TEST(Manifest, ParsesAllKeys) {
    const std::string text =
        "# comment\n"
        "nu = 0.002\n"
        "closure.kind = smagorinsky\n"
        "closure.cs = 0.2\n"
        "forcing = none\n"
        "grid.periodic = true, false\n"
        "analysis.beta = 0.3, 0.6\n"
        "analysis.flag_threshold = 5\n"
        "analysis.tail_fraction = 0.25\n"
        "analysis.derivative = central\n"
        "analysis.c_e = 1.5\n"
        "snapshot = a.evdg\n"
        "snapshot = b.evdg   # trailing comment\n";
    const auto m = parse_manifest(text, "/data/run/manifest");
    EXPECT_EQ(m.nu, 0.002);
    EXPECT_EQ(m.closure.kind, ClosureKind::smagorinsky);
    EXPECT_EQ(m.closure.cs, 0.2);
    EXPECT_EQ(m.forcing, ForcingSource::none);
    EXPECT_TRUE(m.periodic[0]);
    EXPECT_FALSE(m.periodic[1]);
    EXPECT_EQ(m.options.betas, (std::vector<double>{0.3, 0.6}));
    EXPECT_EQ(m.options.flag_threshold, 5.0);
    EXPECT_EQ(m.options.tail_fraction, 0.25);
    EXPECT_EQ(m.options.derivative, DerivativeChoice::central);
    ASSERT_TRUE(m.options.C_E);
    EXPECT_EQ(*m.options.C_E, 1.5);
    ASSERT_EQ(m.snapshots.size(), 2u);
    EXPECT_EQ(m.snapshots[0], std::filesystem::path("/data/run/a.evdg"));
    EXPECT_EQ(m.snapshots[1], std::filesystem::path("/data/run/b.evdg"));
}

TEST(Manifest, RejectsBadInput) {
    const std::string snaps = "snapshot = a\nsnapshot = b\n";
    EXPECT_THROW(parse_manifest(snaps, "m"), ValidationError);                            // no nu
    EXPECT_THROW(parse_manifest("nu = -1\n" + snaps, "m"), ValidationError);              // bad nu
    EXPECT_THROW(parse_manifest("nu = abc\n" + snaps, "m"), ValidationError);             // not a number
    EXPECT_THROW(parse_manifest("nu = 1\nsnapshot = a\n", "m"), ValidationError);         // one snapshot
    EXPECT_THROW(parse_manifest("nu = 1\nforcing = maybe\n" + snaps, "m"), ValidationError);
    EXPECT_THROW(parse_manifest("nu = 1\nclosure.kind = neural\n" + snaps, "m"), ValidationError);
    EXPECT_THROW(parse_manifest("nu = 1\nanalysis.derivative = upwind\n" + snaps, "m"), ValidationError);
    EXPECT_THROW(parse_manifest("nu = 1\njust some words\n" + snaps, "m"), ValidationError);
    EXPECT_THROW(load_manifest("/nonexistent/manifest"), ValidationError);
}

TEST(Manifest, LoadsSeriesAndDigest) {
    const auto dir = evtest::temp_dir("manifest_load");
    const auto path = write_tg_case(dir);
    const auto m = load_manifest(path);
    const auto a = load_series(m);
    EXPECT_EQ(a.series.size(), 12u);
    ASSERT_TRUE(a.forcing);
    EXPECT_EQ(max_norm(*a.forcing), 0.0);
    EXPECT_EQ(a.digest, load_series(m).digest);
    EXPECT_EQ(a.digest.rfind("sha256:", 0), 0u);

    // touching one snapshot changes the digest
    auto f = read_snapshot(m.snapshots[3]);
    (*f.velocity)[0][0] += 1e-12;
    write_snapshot(m.snapshots[3], f);
    EXPECT_NE(load_series(m).digest, a.digest);
}

TEST(Manifest, NonUniformTimesRejected) {
    const auto dir = evtest::temp_dir("manifest_dt");
    const auto path = write_tg_case(dir, 5);
    const auto m = load_manifest(path);
    auto f = read_snapshot(m.snapshots[2]);
    f.time *= 1.01;
    write_snapshot(m.snapshots[2], f);
    EXPECT_THROW(load_series(m), ValidationError);
}

TEST(Manifest, GridMismatchRejected) {
    const auto dir = evtest::temp_dir("manifest_grid");
    const auto path = write_tg_case(dir, 4);
    const auto m = load_manifest(path);
    auto f = taylor_green_file(32, read_snapshot(m.snapshots[1]).time);
    write_snapshot(m.snapshots[1], f);
    EXPECT_THROW(load_series(m), ValidationError);
}

TEST(Manifest, ForcingNoneConflictsWithStoredForcing) {
    const auto dir = evtest::temp_dir("manifest_forcing");
    const auto path = write_tg_case(dir, 4);
    const auto m = load_manifest(path);
    auto f = read_snapshot(m.snapshots[0]);
    f.forcing = Field(f.grid, 1);
    write_snapshot(m.snapshots[0], f);
    EXPECT_THROW(load_series(m), ValidationError);
}

// ---------------------------------------------------------------------------
// report serialization
// ---------------------------------------------------------------------------

namespace {

DiagnosticsReport forced_report() {
    SolverConfig c;
    c.n = 16;
    c.nu = 0.01;
    c.t_end = 4.0;
    c.forcing.kind = ForcingKind::kolmogorov;
    c.forcing.wavenumber = 2;
    c.closure = ClosureSpec::smagorinsky(0.17);
    c.snapshot_interval = 0.1;
    c.seed = 3;
    c.emit_closure_fields = false;
    const auto s = run(c);
    AnalysisInputs in{s, c.nu, c.closure, &*s.forcing};
    return assemble_report(in);
}

}  // namespace

TEST(ReportJson, DeterministicAndByteIdenticalFiles) {
    const auto a = report_to_json(forced_report());
    const auto b = report_to_json(forced_report());
    EXPECT_EQ(a, b);
    const auto dir = evtest::temp_dir("report_det");
    const auto r = forced_report();
    write_report(r, dir / "a.json");
    write_report(r, dir / "b.json");
    const auto ra = read_bytes(dir / "a.json"), rb = read_bytes(dir / "b.json");
    EXPECT_EQ(ra, rb);
    EXPECT_EQ(std::string(ra.begin(), ra.end()), a);
}

TEST(ReportJson, SchemaOrderAndMonitoringKeys) {
    const auto j = ojson::parse(report_to_json(forced_report()));
    std::vector<std::string> keys;
    for (const auto& [k, v] : j.items()) keys.push_back(k);
    const std::vector<std::string> expect{"schema",     "provenance", "inputs", "scales",   "monitoring",
                                          "closure_stats", "dissipation", "resolution", "bounds", "energy",
                                          "force_balance", "warnings", "caveats"};
    EXPECT_EQ(keys, expect);
    EXPECT_EQ(j["schema"], kReportSchema);
    for (const char* k : {"ratio_nu", "avg_l_over_L", "I_model"}) {
        ASSERT_TRUE(j["monitoring"].contains(k)) << k;
        EXPECT_TRUE(j["monitoring"][k].contains("value"));
        EXPECT_TRUE(j["monitoring"][k].contains("flagged"));
    }
    EXPECT_EQ(j["bounds"].size(), 3u);
    EXPECT_EQ(j["resolution"]["threshold_ratio"].get<double>(), j["resolution"]["threshold_stmt"].get<double>() /
                                                                   j["resolution"]["threshold_proof"].get<double>());
}

TEST(ReportJson, FloatsReparseExactly) {
    const auto r = forced_report();
    const auto j = ojson::parse(report_to_json(r));
    auto same = [](double parsed, double original) {
        EXPECT_EQ(std::bit_cast<std::uint64_t>(parsed), std::bit_cast<std::uint64_t>(original)) << original;
    };
    same(j["scales"]["U"].get<double>(), r.scales.U);
    same(j["scales"]["F"].get<double>(), r.scales.F);
    same(j["scales"]["L"].get<double>(), *r.scales.L);
    same(j["scales"]["Re"].get<double>(), *r.scales.Re);
    same(j["dissipation"]["eps0"]["avg_inf"].get<double>(), r.eps0.avg_inf);
    same(j["dissipation"]["eps_turb"]["final_T"].get<double>(), r.eps_turb.final_T);
    same(j["resolution"]["lambda_T"].get<double>(), r.lambda_T->lambda);
    same(j["energy"]["residual"].get<double>(), r.energy->residual);
    same(j["force_balance"]["residual"].get<double>(), r.force_balance->residual);
    for (std::size_t i = 0; i < r.bounds.size(); ++i) {
        same(j["bounds"][i]["lhs"].get<double>(), r.bounds[i].lhs);
        same(j["bounds"][i]["rhs_thm2"].get<double>(), r.bounds[i].rhs_thm2);
        same(j["bounds"][i]["margin"].get<double>(), r.bounds[i].margin);
    }
    same(j["closure_stats"]["ratio_nu"].get<double>(), r.closure_stats->ratio_nu);
    same(j["closure_stats"]["I_model"].get<double>(), *r.closure_stats->I_model);
}

TEST(ReportJson, PartialReportMarksUnavailable) {
    const auto s = taylor_green(16, 0.05, 0.5);
    AnalysisInputs in{s, 0.05};
    const auto j = ojson::parse(report_to_json(assemble_report(in)));
    EXPECT_EQ(j["closure_stats"], "unavailable");
    EXPECT_EQ(j["energy"], "unavailable");
    EXPECT_EQ(j["force_balance"], "unavailable");
    EXPECT_EQ(j["scales"]["L"], "unavailable");
    EXPECT_EQ(j["monitoring"]["ratio_nu"]["value"], "unavailable");
    EXPECT_EQ(j["monitoring"]["overall"], "unavailable");
    EXPECT_TRUE(j["bounds"].is_array());
    EXPECT_TRUE(j["bounds"].empty());
    EXPECT_FALSE(j["warnings"].empty());
}

TEST(JsonWriter, SpecialValues) {
    JsonWriter w;
    w.begin_object();
    w.value("nan", std::nan(""));
    w.value("inf", std::numeric_limits<double>::infinity());
    w.value("ninf", -std::numeric_limits<double>::infinity());
    w.value("none", std::optional<double>{});
    w.value("text", std::string("a \"quoted\"\nline\\"));
    w.value("tiny", 5e-324);
    w.end_object();
    const auto j = ojson::parse(w.str());
    EXPECT_TRUE(j["nan"].is_null());
    EXPECT_EQ(j["inf"], "inf");
    EXPECT_EQ(j["ninf"], "-inf");
    EXPECT_EQ(j["none"], "unavailable");
    EXPECT_EQ(j["text"], "a \"quoted\"\nline\\");
    EXPECT_EQ(j["tiny"].get<double>(), 5e-324);
}
