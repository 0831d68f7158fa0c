#include <gtest/gtest.h>

#include <cmath>
#include <random>

#include "freeconv/transforms.hpp"

using namespace freeconv;

namespace {

const std::vector<double> kLambdas = {0.1, 0.5, 0.9, 1.0};

/// Random point of C \ R+ within radius r of the origin.
cplx random_off_cut(std::mt19937_64& rng, double r) {
    std::uniform_real_distribution<double> rad(0.05 * r, r), ang(0.05, 2 * kPi - 0.05);
    return std::polar(rad(rng), ang(rng));
}

}  // namespace

TEST(Branch, UpperCutConvention) {
    EXPECT_NEAR(std::abs(sqrt_upper(-1.0) - kI), 0.0, 1e-15);
    EXPECT_NEAR(std::abs(sqrt_upper(-4.0) - 2.0 * kI), 0.0, 1e-15);
    EXPECT_NEAR(std::abs(sqrt_upper(kI) - std::polar(1.0, kPi / 4)), 0.0, 1e-15);
    EXPECT_THROW(sqrt_upper(2.0), BranchError);
    EXPECT_THROW(sqrt_upper(0.0), BranchError);
}

TEST(Branch, PrincipalConvention) {
    EXPECT_NEAR(std::abs(sqrt_principal(1.0) - 1.0), 0.0, 1e-15);
    EXPECT_NEAR(std::abs(sqrt_principal(4.0) - 2.0), 0.0, 1e-15);
    EXPECT_THROW(sqrt_principal(-1.0), BranchError);
}

TEST(Branch, RandomIdentities) {
    std::mt19937_64 rng(11);
    for (int k = 0; k < 10000; ++k) {
        const cplx z = random_off_cut(rng, 10.0);
        const cplx s = sqrt_upper(z);
        EXPECT_LT(std::abs(s * s - z), 1e-14 * std::abs(z) + 1e-15);
        EXPECT_GT(std::arg(s), 0.0);
        EXPECT_LT(std::arg(s), kPi);
        // principal branch agrees on the upper half-plane and flips sign below
        if (std::abs(z.imag()) > 1e-6) {
            const cplx p = sqrt_principal(z);
            EXPECT_LT(std::abs(z.imag() > 0 ? p - s : p + s), 1e-13 * std::abs(s));
        }
    }
}

TEST(Branch, NegPower) {
    EXPECT_NEAR(std::abs(neg_power(-4.0, 0.5) - 2.0), 0.0, 1e-15);
    // (-z)^{1/2} at z = i: -i = e^{-i pi/2}
    EXPECT_NEAR(std::abs(neg_power(kI, 0.5) - std::polar(1.0, -kPi / 4)), 0.0, 1e-15);
}

TEST(Chain, FixedPointsAndRoots) {
    for (double l : kLambdas) {
        const RatioParams p(l);
        EXPECT_EQ(chain_T(0.0, p), cplx(1.0));
        EXPECT_NEAR(std::abs(chain_U(0.0, p)), 0.0, 1e-15);
        EXPECT_NEAR(std::abs(chain_V(1.0, p) - 1.0), 0.0, 1e-15);
        EXPECT_NEAR(std::abs(chain_T(-1.0, p)), 0.0, 1e-15);
        EXPECT_NEAR(std::abs(chain_T(-1.0 / l, p)), 0.0, 1e-14);
    }
    EXPECT_NEAR(std::abs(chain_T(-1.5, RatioParams(0.5)) - (-0.125)), 0.0, 1e-15);
    EXPECT_NO_THROW(RatioParams(0.0));  // square reduction
    EXPECT_THROW(RatioParams(1.5), DomainError);
    EXPECT_THROW(RatioParams(-0.1), DomainError);
}

TEST(Chain, CriticalValueIsTheCutEndpoint) {
    // T has its real minimum -(1-l)^2/(4l) at -(1+l)/(2l): V's cut starts there, U's one unit lower
    const RatioParams p(0.5);
    const double crit = -(1 - 0.5) * (1 - 0.5) / (4 * 0.5);
    EXPECT_DOUBLE_EQ(crit, -0.125);
    EXPECT_NEAR(chain_T(-1.5, p).real(), crit, 1e-15);
    EXPECT_THROW(chain_V(crit - 0.5, p), BranchError);
    EXPECT_NO_THROW(chain_V(crit + 0.01, p));
    EXPECT_NO_THROW(chain_V(cplx(crit - 0.5, 1e-3), p));
    EXPECT_THROW(chain_U(crit - 1.5, p), BranchError);
    EXPECT_NO_THROW(chain_U(crit - 0.99, p));
}

TEST(Chain, UInvertsTMinusOne) {
    std::mt19937_64 rng(7);
    for (double l : kLambdas) {
        const RatioParams p(l);
        for (int k = 0; k < 200; ++k) {
            const cplx c = random_off_cut(rng, 0.3 * l);
            EXPECT_LT(std::abs(chain_U(chain_T(c, p) - 1.0, p) - c), 1e-12) << l << " " << c;
            const cplx x = random_off_cut(rng, 0.05);
            EXPECT_LT(std::abs(chain_T(chain_U(x, p), p) - (x + 1.0)), 1e-12);
            // V(h) = U(h-1)+1
            EXPECT_LT(std::abs(chain_V(x + 1.0, p) - chain_U(x, p) - 1.0), 1e-12);
        }
    }
}

TEST(Chain, UAgainstQuadraticFormula) {
    // lambda u^2 + (lambda+1) u - z = 0, root through 0 at z = 0
    const double l = 0.3;
    const RatioParams p(l);
    for (cplx z : {cplx(0.2, 0.1), cplx(-0.05, 0.3), cplx(1.0, -0.4)}) {
        const cplx disc = (l + 1) * (l + 1) + 4 * l * z;
        const cplx u = (-(l + 1) + std::sqrt(disc)) / (2 * l);
        EXPECT_LT(std::abs(chain_U(z, p) - u), 1e-13);
    }
}

TEST(Chain, VAtRatioOneIsSquareRoot) {
    const RatioParams p(1.0);
    for (cplx h : {cplx(0.5, 0.2), cplx(2.0, -1.0), cplx(-0.3, 0.7)}) {
        EXPECT_LT(std::abs(chain_V(h, p) - std::sqrt(h)), 1e-13);
    }
}

TEST(HTransform, DiracIsIdentity) {
    for (double l : kLambdas) {
        const RatioParams p(l);
        for (cplx z : {cplx(-1, 0), cplx(0.3, 0.4), cplx(-2, -0.5)})
            EXPECT_LT(std::abs(H_transform(*dirac(0.0), p, z) - z), 1e-14);
    }
}

TEST(HTransform, BasicProperties) {
    const auto m = atomic({{-2, 0.1}, {-0.5, 0.4}, {0.5, 0.4}, {2, 0.1}});
    const RatioParams p(0.4);
    std::mt19937_64 rng(2);
    for (int k = 0; k < 100; ++k) {
        const cplx z = random_off_cut(rng, 5.0);
        const cplx h = H_transform(*m, p, z), hc = H_transform(*m, p, std::conj(z));
        EXPECT_LT(std::abs(hc - std::conj(h)), 1e-12 * (1 + std::abs(h)));
        EXPECT_FALSE(std::abs(h.imag()) < 1e-14 && h.real() > 0) << z;
    }
    for (double x : {-0.1, -1.0, -10.0}) EXPECT_LT(H_transform(*m, p, x).real(), 0.0);
    const cplx small = H_transform(*m, p, -1e-7) / -1e-7;
    EXPECT_NEAR(std::abs(small - 1.0), 0.0, 1e-5);
}

TEST(HTransform, MassLimitAgainstAtom) {
    const auto m = atomic({{-1, 0.25}, {0, 0.5}, {1, 0.25}});
    for (double l : {0.3, 0.7}) {
        const LimitEstimate e = H_mass_limit(*m, RatioParams(l));
        EXPECT_TRUE(e.converged);
        EXPECT_NEAR(e.value.real(), l / 4 + (1 - l) / 2, 1e-3);
    }
    const LimitEstimate e0 = H_mass_limit(*semicircle(1.0), RatioParams(0.5));
    EXPECT_NEAR(std::abs(e0.value), 0.0, 1e-3);
}

TEST(MTransform, PointMassesAndChainIdentity) {
    EXPECT_EQ(M_transform(*dirac(0.0), cplx(-0.3, 0.2)), cplx(0.0));
    EXPECT_NEAR(std::abs(M_transform(*bernoulli(1.0), -1.0) - (-0.5)), 0.0, 1e-14);
    std::mt19937_64 rng(4);
    const auto m = atomic({{-1.5, 0.3}, {-0.2, 0.2}, {0.2, 0.2}, {1.5, 0.3}});
    for (double l : kLambdas) {
        const RatioParams p(l);
        for (int k = 0; k < 50; ++k) {
            const cplx z = random_off_cut(rng, 3.0);
            const cplx lhs = H_transform(*m, p, z), rhs = z * chain_T(M_transform(*m, z), p);
            EXPECT_LT(std::abs(lhs - rhs), 1e-10 * (1 + std::abs(lhs)));
        }
    }
}

TEST(MTransform, ChainRecoversG) {
    // U(H(z)/z - 1) = (1/sqrt z) G(1/sqrt z) - 1 near 0
    std::mt19937_64 rng(9);
    const auto m = atomic({{-3, 0.2}, {-1, 0.3}, {1, 0.3}, {3, 0.2}});
    for (double l : {0.25, 0.6}) {
        const RatioParams p(l);
        for (int k = 0; k < 100; ++k) {
            const cplx z = random_off_cut(rng, 0.02);
            const cplx s = sqrt_upper(z);
            const cplx lhs = chain_U(H_transform(*m, p, z) / z - 1.0, p);
            const cplx rhs = cauchy_transform(*m, 1.0 / s) / s - 1.0;
            EXPECT_LT(std::abs(lhs - rhs), 1e-9);
        }
    }
}

TEST(HTransform, ArgumentGrowthForIDLaws) {
    const auto law = rect_id(0.5, atomic({{-1, 0.5}, {1, 0.5}}), 0.7);
    const RatioParams p(0.5);
    for (double th : {0.2, 0.8, 1.5, 2.5, 3.0}) {
        for (double r : {0.05, 0.5, 3.0}) {
            const cplx z = std::polar(r, th);
            const cplx h = H_transform(*law, p, z);
            EXPECT_LT(std::arg(h), kPi);
            EXPECT_GE(std::arg(h), std::arg(z) - 1e-9) << z;
        }
    }
}

TEST(Voiculescu, ClosedForms) {
    for (cplx z : {cplx(0.3, 0.5), cplx(-2, 1), cplx(0, 10)}) {
        // semicircle(v) as an ID law: phi = v / z
        EXPECT_LT(std::abs(phi_voiculescu_ID(*square_id(0.0, dirac(0.0), 2.0), z) - 2.0 / z), 1e-14);
        EXPECT_LT(std::abs(phi_voiculescu_ID(*semicircle(2.0), z) - 2.0 / z), 1e-14);
        EXPECT_LT(std::abs(phi_voiculescu_ID(*cauchy(0.7), z) - cplx(0, -0.7)), 1e-14);
    }
}

TEST(Voiculescu, AtomicLevyShapeMatchesSum) {
    const auto shape = atomic({{-1, 0.3}, {2, 0.7}});
    const auto law = square_id(0.4, shape, 1.5);
    std::mt19937_64 rng(1);
    std::uniform_real_distribution<double> u(-3, 3);
    for (int k = 0; k < 50; ++k) {
        const cplx z(u(rng), 0.01 + std::abs(u(rng)));
        const cplx expect = 0.4 + 1.5 * (0.3 * (1.0 - z) / (z + 1.0) + 0.7 * (1.0 + 2.0 * z) / (z - 2.0));
        const cplx phi = phi_voiculescu_ID(*law, z);
        EXPECT_LT(std::abs(phi - expect), 1e-12 * (1 + std::abs(expect)));
        EXPECT_LE(phi.imag(), 1e-15);
    }
    EXPECT_THROW(phi_voiculescu_ID(*law, 2.0), PoleError);
}

TEST(Voiculescu, LogSingularLaw) {
    const auto law = parse_measure_spec("transform{which:\"phi\", expr:\"1/(z+i)-sqrt_principal(z)\"}");
    const cplx v = phi_voiculescu_ID(*law, kI);
    EXPECT_LT(std::abs(v - (1.0 / (2.0 * kI) - std::polar(1.0, kPi / 4))), 1e-14);
}

TEST(CTransform, ClosedForms) {
    const double l = 0.5;
    for (cplx z : {cplx(-1, 0), cplx(0.2, 0.3), cplx(-0.5, -0.5)}) {
        EXPECT_LT(std::abs(C_transform_ID(*rect_stable(2, 1.7, l), z) - 1.7 * z), 1e-14);
        EXPECT_EQ(C_transform_ID(*dirac(0.0), z), cplx(0.0));
        EXPECT_LT(std::abs(C_transform_ID(*rect_id(l, dirac(0.0), 1.7), z) - 1.7 * z), 1e-14);
        EXPECT_LT(std::abs(C_transform_ID(*rect_stable(1, 0.8, l), z) - (-0.8) * std::sqrt(-z)), 1e-14);
    }
}

TEST(CTransform, AtomicShapeAndSemigroup) {
    const auto shape = atomic({{-2, 0.25}, {-0.5, 0.25}, {0.5, 0.25}, {2, 0.25}});
    const auto law1 = rect_id(0.5, shape, 1.0), law3 = rect_id(0.5, shape, 3.0);
    std::mt19937_64 rng(5);
    for (int k = 0; k < 50; ++k) {
        const cplx z = random_off_cut(rng, 4.0);
        if (std::abs(z.imag()) < 1e-3) continue;
        cplx expect = 0.0;
        for (double t : {-2.0, -0.5, 0.5, 2.0}) expect += 0.25 * z * (1 + t * t) / (1.0 - z * t * t);
        EXPECT_LT(std::abs(C_transform_ID(*law1, z) - expect), 1e-12 * (1 + std::abs(expect)));
        EXPECT_LT(std::abs(C_transform_ID(*law3, z) - 3.0 * expect), 1e-11 * (1 + std::abs(expect)));
        EXPECT_LT(std::abs(C_transform_ID(*law1, std::conj(z)) - std::conj(C_transform_ID(*law1, z))), 1e-12);
        if (z.imag() > 0) EXPECT_GE(C_transform_ID(*law1, z).imag(), 0.0);
    }
    double prev = -INFINITY;
    for (double x = -5.0; x < -0.01; x += 0.25) {
        const double c = C_transform_ID(*law1, x).real();
        EXPECT_LE(c, 0.0);
        EXPECT_GE(c, prev);
        prev = c;
    }
    EXPECT_NEAR(std::abs(C_transform_ID(*law1, -1e-9)), 0.0, 1e-8);
}

TEST(CTransform, FromSquarePhi) {
    for (cplx z : {cplx(-0.01, 0), cplx(0.001, 0.002), cplx(-0.02, -0.01)}) {
        const cplx s = sqrt_upper(z);
        EXPECT_LT(std::abs(C_from_square_phi(*semicircle(1.5), 1.0, z) - 1.5 * z), 1e-13);
        // phi of Cauchy is -ti on C+ and +ti on C-, where 1/sqrt z lives
        EXPECT_LT(std::abs(C_from_square_phi(*cauchy(0.5), 1.0, z) - 0.5 * kI * s), 1e-13);
        EXPECT_LT(std::abs(C_from_square_phi(*cauchy(0.5), 1.0, z) - C_transform_ID(*rect_stable(1, 0.5, 1.0), z)), 1e-13);
        EXPECT_EQ(C_from_square_phi(*dirac(0.0), 1.0, z), cplx(0.0));
    }
}

TEST(Limits, LadderExtrapolation) {
    const LimitEstimate e = limit_at_minus_infinity([](double x) { return cplx(2.0 + 1.0 / x); });
    EXPECT_TRUE(e.converged);
    EXPECT_NEAR(e.value.real(), 2.0, 1e-6);
    EXPECT_FALSE(e.ladder.empty());
    const LimitEstimate d = limit_at_minus_infinity([](double x) { return cplx(std::log(-x)); });
    EXPECT_FALSE(d.converged);
}

TEST(Evaluator, BundlesTransforms) {
    const TransformEvaluator ev(bernoulli(1.0));
    EXPECT_LT(std::abs(ev.F(kI) - cplx(0, 2)), 1e-14);
    EXPECT_LT(std::abs(ev.M(-1.0) + 0.5), 1e-14);
    EXPECT_LT(std::abs(ev.H(-1.0, 1.0) - H_transform(*bernoulli(1.0), RatioParams(1.0), -1.0)), 1e-15);
}
