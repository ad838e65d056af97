#include <gtest/gtest.h>

#include <cmath>
#include <random>

#include "evdiag/closures.hpp"
#include "evdiag/flow_scales.hpp"
#include "support.hpp"

using namespace evdiag;
using evtest::constant_scalar;
using evtest::series_of;

namespace {

FlowScales unit_scales(double L = 1.0, double U = 1.0) {
    FlowScales s;
    s.nu = 1.0;
    s.U = s.U_final = U;
    s.L = L;
    s.Re = s.Re_final = L * U;
    return s;
}

SnapshotSeries prescribed_series(const Grid& g, std::size_t n, auto&& l_of, auto&& k_of) {
    auto s = series_of(g, n, 0.1, [&](double) { return evtest::taylor_green_field(g); });
    for (std::size_t t = 0; t < n; ++t) {
        s.snapshots[t].mixing_length = l_of(t);
        s.snapshots[t].kprime = k_of(t);
    }
    return s;
}

}  // namespace

TEST(NuTurb, HandEvaluatedExample) {
    const auto g = Grid::periodic_square(8);
    const auto nu = nu_turb_field(constant_scalar(g, 0.1), constant_scalar(g, 2.0), 0.55);
    for (double v : nu[0]) EXPECT_NEAR(v, 0.11, 1e-15);
}

TEST(NuTurb, LaminarAndZeroCoefficient) {
    const auto g = Grid::periodic_square(8);
    auto k = constant_scalar(g, 1.0);
    k[0][5] = 0.0;
    const auto nu = nu_turb_field(constant_scalar(g, 0.3), k, 0.7);
    EXPECT_EQ(nu[0][5], 0.0);
    EXPECT_GT(nu[0][4], 0.0);
    const auto off = nu_turb_field(constant_scalar(g, 0.3), k, 0.0);
    for (double v : off[0]) EXPECT_EQ(v, 0.0);
}

TEST(NuTurb, RejectsNegativeInputs) {
    const auto g = Grid::periodic_square(8);
    auto l = constant_scalar(g, 0.1);
    l[0][0] = -1e-3;
    EXPECT_THROW(nu_turb_field(l, constant_scalar(g, 1.0), 1.0), ClosureInputError);
    auto k = constant_scalar(g, 1.0);
    k[0][2] = -1.0;
    EXPECT_THROW(nu_turb_field(constant_scalar(g, 0.1), k, 1.0), ClosureInputError);
    EXPECT_THROW(nu_turb_field(constant_scalar(g, 0.1), constant_scalar(g, 1.0), -0.5), ClosureInputError);
}

TEST(NuTurb, Homogeneity) {
    std::mt19937 rng(8);
    std::uniform_real_distribution<double> uni(0.0, 2.0);
    const auto g = Grid::periodic_square(8);
    for (int trial = 0; trial < 50; ++trial) {
        Field l(g, 0), k(g, 0);
        for (double& v : l[0]) v = uni(rng);
        for (double& v : k[0]) v = uni(rng);
        const double mu = uni(rng), c = 0.1 + uni(rng);
        const auto base = nu_turb_field(l, k, mu);
        const auto by_mu = nu_turb_field(l, k, c * mu);
        const auto by_l = nu_turb_field(c * l, k, mu);
        const auto by_k = nu_turb_field(l, (c * c) * k, mu);
        for (std::size_t p = 0; p < g.size(); ++p) {
            const double e = c * base[0][p];
            EXPECT_NEAR(by_mu[0][p], e, 1e-14 * (1.0 + e));
            EXPECT_NEAR(by_l[0][p], e, 1e-14 * (1.0 + e));
            EXPECT_NEAR(by_k[0][p], e, 1e-14 * (1.0 + e));
        }
    }
}

TEST(Smagorinsky, TaylorGreenMeanViscosity) {
    const auto g = Grid::periodic_square(128);
    const double cs = 0.17, h = g.h();
    const auto lk = smagorinsky_fields(evtest::taylor_green_field(g), cs, DerivativeScheme::spectral);
    const auto nu = nu_turb_field(lk.mixing_length, lk.kprime, 1.0);
    const double mean = volume_mean(g, nu[0]);
    const double oracle = (cs * h) * (cs * h) * std::sqrt(2.0) * 4.0 / (M_PI * M_PI);
    EXPECT_NEAR(mean, oracle, 1e-4);
    // the grid mean of |sin x sin y| is (2/n cot(pi/n))^2, within 5e-4 relative of 4/pi^2 at n = 128
    EXPECT_NEAR(mean, oracle, 5e-4 * oracle);
}

TEST(Smagorinsky, RigidRotationHasNoEddyViscosity) {
    Grid g;
    g.ndim = 2;
    g.shape = {10, 10, 1};
    g.spacing = {0.1, 0.1, 1.0};
    g.periodic = {false, false, true};
    const auto u = evtest::vector_field(g, [](double, double y, double) { return -y; }, [](double x, double, double) { return x; });
    const auto lk = smagorinsky_fields(u, 0.2);
    const auto nu = nu_turb_field(lk.mixing_length, lk.kprime, 1.0);
    for (double v : nu[0]) EXPECT_NEAR(v, 0.0, 1e-14);
}

TEST(Smagorinsky, RefinementScaling) {
    const auto g64 = Grid::periodic_square(64);
    const auto g128 = Grid::periodic_square(128);
    const auto a = smagorinsky_fields(evtest::taylor_green_field(g64), 0.17, DerivativeScheme::spectral);
    const auto b = smagorinsky_fields(evtest::taylor_green_field(g128), 0.17, DerivativeScheme::spectral);
    EXPECT_NEAR(a.mixing_length[0][0] / b.mixing_length[0][0], 2.0, 1e-14);
    const auto nua = nu_turb_field(a.mixing_length, a.kprime, 1.0);
    const auto nub = nu_turb_field(b.mixing_length, b.kprime, 1.0);
    for (std::size_t j = 1; j < 64; j += 7)
        for (std::size_t i = 1; i < 64; i += 5) {
            const double va = nua[0][g64.index(i, j)], vb = nub[0][g128.index(2 * i, 2 * j)];
            if (va > 1e-12) {
                EXPECT_NEAR(va / vb, 4.0, 1e-9);
            }
        }
}

TEST(Smagorinsky, FactoringReproducesClassicalForm) {
    std::mt19937 rng(15);
    for (int trial = 0; trial < 10; ++trial) {
        const auto g = Grid::periodic_square(32);
        const auto u = evtest::random_solenoidal(g, rng, 5);
        const double cs = 0.1 + 0.02 * trial;
        for (auto scheme : {DerivativeScheme::central, DerivativeScheme::spectral}) {
            const auto lk = smagorinsky_fields(u, cs, scheme);
            const auto nu = nu_turb_field(lk.mixing_length, lk.kprime, 1.0);
            const auto s2 = magnitude_sq(sym_gradient(u, scheme));
            for (std::size_t p = 0; p < g.size(); ++p) {
                const double classical = (cs * g.h()) * (cs * g.h()) * std::sqrt(s2[p]);
                EXPECT_NEAR(nu[0][p], classical, 1e-12 * classical + 1e-300);
            }
        }
    }
}

TEST(ClosureStats, ConstantViscosityPassesThrough) {
    const auto g = Grid::periodic_square(8);
    const auto s = series_of(g, 5, 0.1, [&](double) { return evtest::taylor_green_field(g); });
    const auto st = closure_stats(s, ClosureSpec::constant(0.05), unit_scales());
    EXPECT_NEAR(st.avg_nu_turb, 0.05, 1e-15);
    EXPECT_NEAR(st.ratio_nu, 0.05, 1e-15);
    EXPECT_FALSE(st.factored());
    EXPECT_FALSE(st.intensity_bound(1.0));
}

TEST(ClosureStats, PrescribedHandExample) {
    const auto g = Grid::periodic_square(8);
    const auto s = prescribed_series(
        g, 6, [&](std::size_t) { return constant_scalar(g, 0.1); }, [&](std::size_t) { return constant_scalar(g, 2.0); });
    const auto st = closure_stats(s, ClosureSpec::prescribed(0.55), unit_scales());
    ASSERT_TRUE(st.factored());
    EXPECT_NEAR(*st.avg_l, 0.1, 1e-15);
    EXPECT_NEAR(*st.U_prime_model, 2.0, 1e-15);
    EXPECT_NEAR(st.avg_nu_turb, 0.11, 1e-15);
}

TEST(ClosureStats, ZeroTurbulentEnergy) {
    const auto g = Grid::periodic_square(8);
    const auto s = prescribed_series(
        g, 4, [&](std::size_t) { return constant_scalar(g, 0.3); }, [&](std::size_t) { return constant_scalar(g, 0.0); });
    const auto st = closure_stats(s, ClosureSpec::prescribed(1.0), unit_scales());
    EXPECT_EQ(*st.I_model, 0.0);
    EXPECT_EQ(st.avg_nu_turb, 0.0);
}

TEST(ClosureStats, PrescribedViscosityOnlyIsNotFactored) {
    const auto g = Grid::periodic_square(8);
    auto s = series_of(g, 4, 0.1, [&](double) { return evtest::taylor_green_field(g); });
    for (auto& snap : s.snapshots) snap.nu_turb = constant_scalar(g, 0.02);
    const auto st = closure_stats(s, ClosureSpec::prescribed(1.0), unit_scales(2.0, 0.5));
    EXPECT_NEAR(st.ratio_nu, 0.02, 1e-15);
    EXPECT_FALSE(st.avg_l);
    EXPECT_FALSE(st.I_model);
}

TEST(ClosureStats, MissingPrescribedFieldsRejected) {
    const auto g = Grid::periodic_square(8);
    const auto s = series_of(g, 3, 0.1, [&](double) { return evtest::taylor_green_field(g); });
    EXPECT_THROW(closure_stats(s, ClosureSpec::prescribed(1.0), unit_scales()), ValidationError);
}

TEST(ClosureStats, UndefinedScalesRejected) {
    const auto g = Grid::periodic_square(8);
    const auto s = series_of(g, 3, 0.1, [&](double) { return evtest::taylor_green_field(g); });
    FlowScales no_L = unit_scales();
    no_L.L.reset();
    EXPECT_THROW(closure_stats(s, ClosureSpec::constant(0.1), no_L), UndefinedScaleError);
    EXPECT_THROW(closure_stats(s, ClosureSpec::constant(0.1), unit_scales(1.0, 0.0)), UndefinedScaleError);
}

TEST(ClosureStats, IntensityInequalityForRandomPrescribedFields) {
    std::mt19937 rng(99);
    std::uniform_real_distribution<double> uni(0.0, 1.0);
    for (int trial = 0; trial < 40; ++trial) {
        const auto g = Grid::periodic_square(8);
        const std::size_t n = 3 + rng() % 10;
        auto rand_scalar = [&](double scale) {
            Field f(g, 0);
            for (double& v : f[0]) v = scale * uni(rng) * uni(rng);
            return f;
        };
        const auto s = prescribed_series(g, n, [&](std::size_t) { return rand_scalar(0.5); },
                                         [&](std::size_t) { return rand_scalar(3.0); });
        const double mu = 2.0 * uni(rng);
        const auto scales = unit_scales(0.1 + uni(rng), 0.1 + uni(rng));
        const auto st = closure_stats(s, ClosureSpec::prescribed(mu), scales);
        const auto bound = st.intensity_bound(*scales.L);
        ASSERT_TRUE(bound);
        EXPECT_LE(st.ratio_nu, *bound * (1.0 + 1e-10));
    }
}

TEST(ClosureStats, Deterministic) {
    std::mt19937 rng(1);
    const auto g = Grid::periodic_square(16);
    const auto u = evtest::random_solenoidal(g, rng, 4);
    const auto s = series_of(g, 12, 0.1, [&](double t) { return (1.0 + t) * u; });
    const auto a = closure_stats(s, ClosureSpec::smagorinsky(0.17), unit_scales());
    const auto b = closure_stats(s, ClosureSpec::smagorinsky(0.17), unit_scales());
    EXPECT_EQ(a.ratio_nu, b.ratio_nu);
    EXPECT_EQ(*a.I_model, *b.I_model);
    EXPECT_EQ(*a.avg_l, *b.avg_l);
}

TEST(ClosureSpec, ParsesKindsAndValidates) {
    EXPECT_EQ(closure_kind_from_string("smagorinsky"), ClosureKind::smagorinsky);
    EXPECT_EQ(closure_kind_from_string("constant_nu"), ClosureKind::constant_nu);
    EXPECT_EQ(closure_kind_from_string("prescribed_fields"), ClosureKind::prescribed_fields);
    EXPECT_EQ(closure_kind_from_string("none"), ClosureKind::none);
    EXPECT_THROW(closure_kind_from_string("k-epsilon"), ValidationError);
    EXPECT_THROW(ClosureSpec::smagorinsky(-0.1).validate(), ValidationError);
    EXPECT_THROW(ClosureSpec::constant(-1.0).validate(), ValidationError);
}
