#include <gtest/gtest.h>

#include <cmath>
#include <random>

#include "freeconv/square_conv.hpp"
#include "freeconv/transforms.hpp"

using namespace freeconv;

namespace {

double semicircle_pdf(double v, double x) {
    const double r2 = 4 * v - x * x;
    return r2 > 0 ? std::sqrt(r2) / (2 * kPi * v) : 0.0;
}

/// Free Poisson of rate k, jump 1, absolutely continuous part.
double free_poisson_pdf(double k, double x) {
    const double a = (1 - std::sqrt(k)) * (1 - std::sqrt(k)), b = (1 + std::sqrt(k)) * (1 + std::sqrt(k));
    if (x <= a || x >= b) return 0.0;
    return std::sqrt((b - x) * (x - a)) / (2 * kPi * x);
}

std::vector<double> linspace(double a, double b, int n) {
    std::vector<double> g(n);
    for (int k = 0; k < n; ++k) g[k] = a + (b - a) * k / (n - 1);
    return g;
}

}  // namespace

TEST(Omega1, SemicircleAgainstQuadratic) {
    // w = z - v / w, i.e. w^2 - z w + v = 0, root with Im w >= Im z
    const double v = 1.0;
    SquareConvHandle h(semicircle(v), dirac(0.0));
    for (cplx z : {cplx(0, 2), cplx(0.5, 0.1), cplx(-3, 1), cplx(1.0, 1e-3)}) {
        const cplx d = std::sqrt(z * z - 4 * v);
        cplx w = (z + d) / 2.0;
        if (w.imag() < z.imag()) w = (z - d) / 2.0;
        const OmegaResult r = omega1(h, z);
        EXPECT_TRUE(r.diag.converged);
        EXPECT_LT(std::abs(r.w - w), 1e-10) << z;
        EXPECT_GE(r.w.imag(), z.imag() - 1e-12);
    }
    EXPECT_LT(std::abs(omega1(h, cplx(0, 2)).w - cplx(0, 1 + std::sqrt(2.0))), 1e-10);
}

TEST(Omega1, TrivialCases) {
    SquareConvHandle id(dirac(0.0), bernoulli(1.0));
    for (cplx z : {cplx(0.3, 0.4), cplx(-1, 2)}) EXPECT_LT(std::abs(omega1(id, z).w - z), 1e-14);
    SquareConvHandle c(cauchy(0.6), bernoulli(1.0));
    for (cplx z : {cplx(0.3, 0.4), cplx(-1, 2), cplx(2.0, 0.0)}) {
        const OmegaResult r = omega1(c, z);
        EXPECT_LT(std::abs(r.w - (z + cplx(0, 0.6))), 1e-14);
        EXPECT_LE(r.diag.iterations, 2);
    }
}

TEST(Omega1, RejectsNonIDMu) { EXPECT_THROW(SquareConvHandle(bernoulli(1.0), dirac(0.0)), DomainError); }

TEST(FreeConvF, CauchyShiftOnGrid) {
    const auto nu = atomic({{-2, 0.2}, {0, 0.5}, {1.5, 0.3}});
    SquareConvHandle h(cauchy(0.8), nu);
    for (double x : linspace(-4, 4, 41)) {
        const SquareConvValue v = free_conv_F(h, x);
        ASSERT_TRUE(v.diag.converged);
        const cplx expect = reciprocal_cauchy(*nu, cplx(x, 0.8));
        EXPECT_LT(std::abs(v.F - expect), 1e-10) << x;
    }
}

TEST(FreeConvF, SubordinationSumAndResidual) {
    const auto mu = square_id(0.3, atomic({{-1, 0.4}, {1.5, 0.6}}), 0.8);
    const auto nu = atomic({{-1, 0.3}, {0.2, 0.3}, {2, 0.4}});
    SquareConvHandle h(mu, nu);
    std::mt19937_64 rng(8);
    std::uniform_real_distribution<double> u(-4, 4), y(1e-3, 2);
    for (int k = 0; k < 60; ++k) {
        const cplx z(u(rng), y(rng));
        const SquareConvValue v = free_conv_F(h, z);
        ASSERT_TRUE(v.diag.converged) << z;
        EXPECT_LT(std::abs(v.omega1 + v.omega2 - v.F - z), 1e-9);
        const cplx fixed = reciprocal_cauchy(*nu, z - phi_voiculescu_ID(*mu, v.F));
        EXPECT_LT(std::abs(fixed - v.F), 1e-9 * (1 + std::abs(v.F)));
        EXPECT_GE(v.F.imag(), z.imag() - 1e-9);
    }
}

TEST(FreeConvF, IdentityElement) {
    SquareConvHandle h(semicircle(1.0), dirac(0.0));
    for (cplx z : {cplx(0, 2), cplx(0.7, 0.3), cplx(-2.5, 0.05)}) {
        const cplx g = (z - std::sqrt(z - 2.0) * std::sqrt(z + 2.0)) / 2.0;
        EXPECT_LT(std::abs(free_conv_F(h, z).F - 1.0 / g), 1e-10);
    }
}

TEST(FreeConvF, AdditivityOfPhi) {
    // mu1 boxplus mu2 is ID with Levy data added; its F inverts w -> w + phi_sum(w)
    const auto mu1 = square_id(0.3, atomic({{-1, 0.5}, {2, 0.5}}), 1.0);
    const auto mu2 = square_id(-0.2, dirac(0.0), 0.5);
    const auto sum = square_id(0.1, atomic({{-1, 1.0 / 3}, {0, 1.0 / 3}, {2, 1.0 / 3}}), 1.5);
    SquareConvHandle h(mu1, mu2);
    for (double y : {3.0, 10.0, 100.0}) {
        const cplx z(0.2, y);
        const cplx F = free_conv_F(h, z).F;
        EXPECT_LT(std::abs(F + phi_voiculescu_ID(*sum, F) - z), 1e-9 * y);
        EXPECT_LT(std::abs(1.0 / id_law_cauchy(*sum, z) - F), 1e-9 * y);
        // phi_sum(F(z)) = phi_1 + phi_2 at the same point
        EXPECT_LT(std::abs(phi_voiculescu_ID(*sum, F) - phi_voiculescu_ID(*mu1, F) - phi_voiculescu_ID(*mu2, F)), 1e-12);
    }
}

TEST(SemigroupPower, ScalingRules) {
    const auto sc = square_id(0.0, dirac(0.0), 1.0);
    const auto p2 = semigroup_power(*sc, 2.0);
    for (cplx z : {cplx(0.3, 1), cplx(-2, 0.5)})
        EXPECT_LT(std::abs(phi_voiculescu_ID(*p2, z) - 2.0 / z), 1e-14);
    const auto p0 = semigroup_power(*sc, 0.0);
    EXPECT_EQ(phi_voiculescu_ID(*p0, cplx(0.1, 0.2)), cplx(0.0));
    const auto law = square_id(0.7, atomic({{-1, 0.5}, {1, 0.5}}), 0.4);
    const auto p1 = semigroup_power(*law, 1.0);
    const auto p3 = semigroup_power(*law, 3.0);
    for (cplx z : {cplx(0.3, 1), cplx(-2, 0.5)}) {
        EXPECT_LT(std::abs(phi_voiculescu_ID(*p1, z) - phi_voiculescu_ID(*law, z)), 1e-15);
        EXPECT_LT(std::abs(phi_voiculescu_ID(*p3, z) - 3.0 * phi_voiculescu_ID(*law, z)), 1e-13);
    }
    EXPECT_THROW(semigroup_power(*law, -1.0), DomainError);
}

TEST(DensityCurve, SemicirclePairIsSemicircleTwo) {
    SquareConvHandle h(semicircle(1.0), semicircle(1.0));
    const auto grid = linspace(-3, 3, 61);
    const DensityCurve c = density_curve_square(h, grid);
    ASSERT_TRUE(c.fully_converged());
    for (std::size_t k = 0; k < grid.size(); ++k)
        EXPECT_NEAR(c.density[k], semicircle_pdf(2.0, grid[k]), 1e-8) << grid[k];
    EXPECT_NEAR(c.density[30], 1.0 / (kPi * std::sqrt(2.0)), 1e-10);
}

TEST(DensityCurve, PointValues) {
    const DensityCurve a = density_curve_square(SquareConvHandle(semicircle(1.0), dirac(0.0)), {0.0});
    EXPECT_NEAR(a.density[0], 1.0 / kPi, 1e-10);
    const DensityCurve b = density_curve_square(SquareConvHandle(cauchy(1.0), dirac(0.0)), {0.0});
    EXPECT_NEAR(b.density[0], 1.0 / kPi, 1e-12);
}

TEST(DensityCurve, FreePoissonSemigroup) {
    // rate 1.5 boxplus rate 1 = rate 2.5
    SquareConvHandle h(free_poisson(1.5), free_poisson(1.0));
    const auto grid = linspace(0.05, 7.5, 150);
    const DensityCurve c = density_curve_square(h, grid);
    for (std::size_t k = 0; k < grid.size(); ++k)
        EXPECT_NEAR(c.density[k], free_poisson_pdf(2.5, grid[k]), 1e-6) << grid[k];
}

TEST(DensityCurve, TotalMass) {
    SquareConvHandle h(semicircle(1.0), bernoulli(1.0));
    const DensityCurve c = density_curve_square(h, linspace(-4, 4, 2001));
    EXPECT_TRUE(c.fully_converged());
    EXPECT_NEAR(c.integral() + c.atom_mass(), 1.0, 1e-3);
}

TEST(DensityCurve, AtomFromFreePoisson) {
    // free Poisson of rate 0.4 has an atom 0.6 at 0; adding a point mass shifts it
    SquareConvHandle h(free_poisson(0.4), dirac(1.0));
    const DensityCurve c = density_curve_square(h, linspace(-0.5, 4.0, 901));
    ASSERT_FALSE(c.atoms.empty());
    EXPECT_NEAR(c.atoms[0].position, 1.0, 1e-9);
    EXPECT_NEAR(c.atoms[0].mass, 0.6, 1e-3);
    EXPECT_NEAR(c.integral() + c.atom_mass(), 1.0, 2e-3);
}

TEST(OriginRegime, Examples) {
    const auto sc = semicircle(1.0);
    EXPECT_DOUBLE_EQ(levy_sigma_total(*sc), 1.0);
    EXPECT_DOUBLE_EQ(inverse_second_moment(*bernoulli(2.0)), 0.25);
    EXPECT_EQ(classify_origin_regime(*sc, *bernoulli(2.0)), OriginRegime::SmoothZero);
    EXPECT_EQ(classify_origin_regime(*sc, *bernoulli(1.0)), OriginRegime::Cusp);
    EXPECT_EQ(classify_origin_regime(*sc, *atomic({{-1, 0.35}, {0, 0.3}, {1, 0.35}})),
              OriginRegime::PositiveDensity);
    EXPECT_EQ(classify_origin_regime(*sc, *bernoulli(0.5)), OriginRegime::Inconclusive);
    EXPECT_TRUE(std::isinf(levy_sigma_total(*cauchy(1.0))));
    EXPECT_EQ(to_string(OriginRegime::Cusp), "Cusp");
}

TEST(OriginRegime, CuspCaseDensityBehaviour) {
    // semicircle(1) boxplus Bernoulli(a): the density at 0 vanishes for a >= 1
    const auto grid = linspace(-0.02, 0.02, 41);
    const DensityCurve one = density_curve_square(SquareConvHandle(semicircle(1.0), bernoulli(1.0)), grid);
    const DensityCurve two = density_curve_square(SquareConvHandle(semicircle(1.0), bernoulli(2.0)), grid);
    const DensityCurve half = density_curve_square(SquareConvHandle(semicircle(1.0), bernoulli(0.5)), grid);
    // the critical case is a double root of the fixed-point equation: accuracy is about sqrt(tol)
    EXPECT_LT(one.density[20], 1e-5);
    EXPECT_LT(two.density[20], 1e-6);
    EXPECT_GT(half.density[20], 1e-2);
    EXPECT_EQ(cusp_detect(one, 0.0).cls, CuspClass::Cusp);
    EXPECT_EQ(cusp_detect(two, 0.0).cls, CuspClass::ZeroFiniteSlope);
    EXPECT_EQ(cusp_detect(half, 0.0).cls, CuspClass::Positive);
}

TEST(AnalyticHypotheses, Verdicts) {
    const std::vector<double> probes = {-1.0, 0.0, 1.0};
    const Thm31Report c = check_thm31_hypotheses(*cauchy(1.0), 3, probes);
    EXPECT_EQ(c.verdict, "holds");
    EXPECT_EQ(c.probes.back().via, "(ii)");
    const Thm31Report s = check_thm31_hypotheses(*semicircle(1.0), 3, probes);
    EXPECT_EQ(s.condition2, "fails");
    const auto ex1 = parse_measure_spec("transform{which:\"phi\", expr:\"1/(z+i)-sqrt_principal(z)\"}");
    const Thm31Report e = check_thm31_hypotheses(*ex1, 3, probes);
    EXPECT_EQ(e.condition2, "holds");
    EXPECT_EQ(e.probes.back().via, "(i)");
    EXPECT_TRUE(e.probes.back().at_infinity);
}

TEST(ClusterSetSequence, FirstTermAndInequalities) {
    const Example3 one = example3_sequence(1);
    ASSERT_EQ(one.a.size(), 1u);
    EXPECT_DOUBLE_EQ(one.a[0], 1.0);
    EXPECT_DOUBLE_EQ(one.t[0], 2.0);
    EXPECT_NEAR(one.im_f(0, 2.0), 1.25, 1e-15);
    // y^- solves a (1 + t^2) y = t^2 + y^2 with the smaller root
    const double b = 1.0 * 5.0, yminus = (b - std::sqrt(b * b - 4 * 4.0)) / 2;
    EXPECT_NEAR(one.y_minus[0], yminus, 1e-12);
    EXPECT_NEAR(one.im_f(0, yminus), 1.0, 1e-12);

    const Example3 three = example3_sequence(3);
    for (const auto& [what, ok] : three.verify()) EXPECT_TRUE(ok) << what;
    for (std::size_t k = 1; k < 3; ++k) {
        EXPECT_LT(three.a[k], three.a[k - 1] / 2);
        EXPECT_GT(1 / (2 * three.a[k]), three.t[k - 1]);
        EXPECT_GT(three.im_f(k, three.t[k]), k + 1.0);
    }
    // g maps C+ to C+, so -g is a Voiculescu transform
    for (cplx z : {cplx(0.1, 0.5), cplx(-3, 2), cplx(0, 50)}) EXPECT_GE(three.g(z).imag(), 0.0);
}

TEST(DensityCurve, ErrorBarReflectsConditioning) {
    // at the cusp the fixed point is degenerate: the bar must not collapse to the residual
    const DensityCurve c =
        density_curve_square(SquareConvHandle(semicircle(1.0), bernoulli(1.0)), {-1.0, 0.0, 1.0});
    EXPECT_GT(c.error_bars[1], 1e-7);
    EXPECT_GT(c.error_bars[1], 0.1 * c.density[1]);
    EXPECT_LT(c.error_bars[0], 1e-10);
    EXPECT_LT(c.error_bars[2], 1e-10);
}
