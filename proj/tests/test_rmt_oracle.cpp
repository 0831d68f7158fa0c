#include <gtest/gtest.h>

#include <algorithm>
#include <cmath>

#include <json.hpp>

#include "freeconv/rmt_oracle.hpp"
#include "freeconv/square_conv.hpp"

using namespace freeconv;

namespace {

double semicircle_cdf(double v, double x) {
    const double r = 2 * std::sqrt(v);
    if (x <= -r) return 0.0;
    if (x >= r) return 1.0;
    return 0.5 + x * std::sqrt(r * r - x * x) / (kPi * r * r) + std::asin(x / r) / kPi;
}

}  // namespace

TEST(Haar, UnitaryAndPhase) {
    Rng rng = make_rng(1);
    for (int n : {1, 5, 40}) {
        const Eigen::MatrixXcd U = haar_unitary(n, rng);
        EXPECT_LT((U * U.adjoint() - Eigen::MatrixXcd::Identity(n, n)).norm(), 1e-10);
    }
    const Eigen::MatrixXcd u = haar_unitary(1, rng);
    EXPECT_NEAR(std::abs(u(0, 0)), 1.0, 1e-14);
    const Eigen::MatrixXcd Q = haar_isometry(12, 5, rng);
    EXPECT_LT((Q.adjoint() * Q - Eigen::MatrixXcd::Identity(5, 5)).norm(), 1e-10);
}

TEST(Haar, TraceMoments) {
    // E|tr U|^2 = 1 and E|tr U^2|^2 = 2 for n >= 2
    Rng rng = make_rng(2);
    const int samples = 4000;
    double m1 = 0, m2 = 0;
    for (int k = 0; k < samples; ++k) {
        const Eigen::MatrixXcd U = haar_unitary(6, rng);
        m1 += std::norm(U.trace());
        m2 += std::norm((U * U).trace());
    }
    EXPECT_NEAR(m1 / samples, 1.0, 0.08);
    EXPECT_NEAR(m2 / samples, 2.0, 0.15);
}

TEST(Haar, UniformPhaseAtSizeOne) {
    Rng rng = make_rng(3);
    double c = 0, s = 0;
    const int n = 20000;
    for (int k = 0; k < n; ++k) {
        const cplx u = haar_unitary(1, rng)(0, 0);
        c += u.real();
        s += u.imag();
    }
    EXPECT_NEAR(c / n, 0.0, 0.02);
    EXPECT_NEAR(s / n, 0.0, 0.02);
}

TEST(Rng, StreamsDifferAndRepeat) {
    Rng a = make_rng(5, 0), b = make_rng(5, 1), c = make_rng(5, 0);
    const auto x = a(), y = b(), z = c();
    EXPECT_NE(x, y);
    EXPECT_EQ(x, z);
}

TEST(Sampler, ClosedFormTargets) {
    Rng rng = make_rng(11);
    EmpiricalSpectrum e;
    e.samples = MeasureSampler(semicircle(1.0)).draw(100000, rng);
    std::sort(e.samples.begin(), e.samples.end());
    EXPECT_LT(ks_distance(e, [](double x) { return semicircle_cdf(1.0, x); }), 0.01);

    EmpiricalSpectrum c;
    c.samples = MeasureSampler(cauchy(0.5)).draw(100000, rng);
    std::sort(c.samples.begin(), c.samples.end());
    EXPECT_LT(ks_distance(c, [](double x) { return 0.5 + std::atan(x / 0.5) / kPi; }), 0.01);
}

TEST(Sampler, AtomsAreCategorical) {
    Rng rng = make_rng(12);
    const auto draws = MeasureSampler(atomic({{-1, 0.2}, {0.5, 0.5}, {2, 0.3}})).draw(50000, rng);
    int n0 = 0, n1 = 0, n2 = 0;
    for (double d : draws) {
        if (d == -1) ++n0;
        else if (d == 0.5) ++n1;
        else if (d == 2) ++n2;
    }
    EXPECT_EQ(n0 + n1 + n2, 50000);
    EXPECT_NEAR(n0 / 50000.0, 0.2, 0.01);
    EXPECT_NEAR(n2 / 50000.0, 0.3, 0.01);
    // free Poisson of rate 0.4 has an atom 0.6 at 0
    const auto fp = MeasureSampler(free_poisson(0.4)).draw(20000, rng);
    EXPECT_NEAR(std::count(fp.begin(), fp.end(), 0.0) / 20000.0, 0.6, 0.015);
}

TEST(Sampler, SolvedIDLaw) {
    // square ID law without closed form: compare with its own solved density curve
    const auto law = square_id(0.0, bernoulli(1.0), 0.5);
    Rng rng = make_rng(13);
    EmpiricalSpectrum e;
    e.samples = MeasureSampler(law).draw(50000, rng);
    std::sort(e.samples.begin(), e.samples.end());
    std::vector<double> grid;
    for (int k = 0; k <= 2000; ++k) grid.push_back(-4 + 8.0 * k / 2000);
    const DensityCurve c = density_curve_square(SquareConvHandle(law, dirac(0.0)), grid);
    EXPECT_LT(ks_distance(e, c), 0.015);
}

TEST(KS, Trivial) {
    EmpiricalSpectrum e;
    e.samples = {0.0, 0.0, 0.0};
    EXPECT_NEAR(ks_distance(e, [](double x) { return x >= 1.0 ? 1.0 : 0.0; }), 1.0, 1e-15);
    EXPECT_NEAR(ks_distance(e, [](double x) { return x >= 0.0 ? 1.0 : 0.0; }), 0.0, 1e-15);
    EmpiricalSpectrum u;
    for (int k = 0; k < 1000; ++k) u.samples.push_back((k + 0.5) / 1000);
    EXPECT_NEAR(ks_distance(u, [](double x) { return std::clamp(x, 0.0, 1.0); }), 0.0005, 1e-9);
}

TEST(Spectrum, Accessors) {
    EmpiricalSpectrum e;
    e.samples = {-1, 0, 0, 2};
    e.N = 4;
    e.M = 4;
    e.seed = 9;
    EXPECT_DOUBLE_EQ(e.cdf(0.0), 0.75);
    EXPECT_DOUBLE_EQ(e.cdf(-2.0), 0.0);
    EXPECT_DOUBLE_EQ(e.mass_in(-0.5, 0.5), 0.5);
    EXPECT_DOUBLE_EQ(e.mass_in(0.0, 2.0), 0.0);
    const std::string csv = e.to_csv();
    EXPECT_EQ(csv.substr(0, 2), "x\n");
    EXPECT_EQ(std::count(csv.begin(), csv.end(), '\n'), 5);
    const auto j = nlohmann::json::parse(spectrum_summary_json(e, 0.125));
    EXPECT_DOUBLE_EQ(j["ks"].get<double>(), 0.125);
    EXPECT_EQ(j["n"].get<int>(), 4);
    EXPECT_EQ(j["dims"][1].get<int>(), 4);
    EXPECT_EQ(j["seed"].get<int>(), 9);
    EXPECT_EQ(to_string(SpectrumKind::SingularSymmetrized), "singular-symmetrized");
}

TEST(SquareModel, DegenerateAndDeterministic) {
    const EmpiricalSpectrum e = square_model_spectrum(bernoulli(1.0), dirac(0.0), 50, 3, 4);
    EXPECT_EQ(e.samples.size(), 150u);
    EXPECT_EQ(e.n_matrices, 3);
    EXPECT_TRUE(std::is_sorted(e.samples.begin(), e.samples.end()));
    for (double x : e.samples) EXPECT_NEAR(std::abs(x), 1.0, 1e-10);
    const EmpiricalSpectrum f = square_model_spectrum(semicircle(1.0), bernoulli(1.0), 60, 2, 99);
    const EmpiricalSpectrum g = square_model_spectrum(semicircle(1.0), bernoulli(1.0), 60, 2, 99);
    EXPECT_EQ(f.samples, g.samples);
    const EmpiricalSpectrum h = square_model_spectrum(semicircle(1.0), bernoulli(1.0), 60, 2, 100);
    EXPECT_NE(f.samples, h.samples);
}

TEST(SquareModel, BernoulliPairIsArcsine) {
    const EmpiricalSpectrum e = square_model_spectrum(bernoulli(1.0), bernoulli(1.0), 400, 4, 17);
    const double ks = ks_distance(e, [](double x) {
        if (x <= -2) return 0.0;
        if (x >= 2) return 1.0;
        return 0.5 + std::asin(x / 2) / kPi;
    });
    EXPECT_LT(ks, 0.03);
}

TEST(SquareModel, ConvergenceInN) {
    double small = 0, large = 0;
    const auto cdf = [](double x) { return semicircle_cdf(2.0, x); };
    for (std::uint64_t seed = 0; seed < 10; ++seed) {
        small += ks_distance(square_model_spectrum(semicircle(1.0), semicircle(1.0), 200, 1, seed), cdf);
        large += ks_distance(square_model_spectrum(semicircle(1.0), semicircle(1.0), 1000, 1, seed), cdf);
    }
    EXPECT_GT(small, large);
}

TEST(RectModel, DegenerateAndShape) {
    EXPECT_EQ(rect_columns(500, 0.5), 1000);
    EXPECT_EQ(rect_columns(300, 1.0), 300);
    const EmpiricalSpectrum e = rect_model_spectrum(bernoulli(2.0), dirac(0.0), 40, 80, 2, 3);
    EXPECT_EQ(e.kind, SpectrumKind::SingularSymmetrized);
    EXPECT_EQ(e.samples.size(), 2u * 2 * 40);
    for (double x : e.samples) EXPECT_NEAR(std::abs(x), 2.0, 1e-10);
    for (std::size_t k = 0; k < e.samples.size(); ++k)
        EXPECT_DOUBLE_EQ(e.samples[k], -e.samples[e.samples.size() - 1 - k]);
}

TEST(RectModel, GaussianHole) {
    // rectangular Gaussian t = 1 at lambda = 0.5: no mass below 1 - sqrt(0.5) in modulus
    const int N = 300;
    const EmpiricalSpectrum e = rect_model_spectrum(rect_stable(2, 0.5, 0.5), rect_stable(2, 0.5, 0.5), N,
                                                    rect_columns(N, 0.5), 2, 5);
    const double r = 1 - std::sqrt(0.5);
    EXPECT_LT(e.mass_in(-0.9 * r, 0.9 * r), 0.005);
    EXPECT_GT(e.mass_in(-1.2 * r - 0.3, 1.2 * r + 0.3), 0.05);
}

TEST(CurveCdf, MatchesAtomsAndDensity) {
    DensityCurve c;
    c.resize(3);
    c.grid = {0, 1, 2};
    c.density = {0.25, 0.25, 0.25};
    c.atoms = {{1.0, 0.5}};
    const auto F = curve_cdf(c);
    EXPECT_NEAR(F(0.5), 0.125, 1e-12);
    EXPECT_NEAR(F(1.0), 0.75, 1e-12);
    EXPECT_NEAR(F(2.0), 1.0, 1e-12);
}

TEST(CoveringGrid, ClipsHeavyTails) {
    EmpiricalSpectrum e;
    for (int k = 0; k < 10000; ++k) e.samples.push_back(0.5 * std::tan(kPi * ((k + 0.5) / 10000 - 0.5)));
    const auto g = covering_grid(e, 101);
    // raw range is about +-3000; the grid stays within a few hundred of the bulk
    EXPECT_LT(g.back() - g.front(), 800.0);
    EXPECT_LT(g.front(), -150.0);
    EXPECT_TRUE(std::is_sorted(g.begin(), g.end()));
    EmpiricalSpectrum c;
    c.samples = {-2.0, -1.0, 0.0, 1.0, 2.0};
    const auto h = covering_grid(c, 11);
    EXPECT_NEAR(h.front(), -2.0 - 0.5, 1e-12);
    EXPECT_NEAR(h.back(), 2.0 + 0.5, 1e-12);
    EXPECT_THROW(covering_grid(EmpiricalSpectrum{}, 11), DomainError);
}
