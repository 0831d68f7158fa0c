#include <gtest/gtest.h>

#include <cmath>

#include "freeconv/inversion.hpp"
#include "freeconv/measures.hpp"
#include "freeconv/rect_conv.hpp"
#include "freeconv/square_conv.hpp"

using namespace freeconv;

namespace {

std::vector<double> linspace(double a, double b, int n) {
    std::vector<double> g(n);
    for (int k = 0; k < n; ++k) g[k] = a + (b - a) * k / (n - 1);
    return g;
}

DensityCurve curve_from(const std::vector<double>& grid, const std::function<double(double)>& f) {
    DensityCurve c;
    c.resize(grid.size());
    for (std::size_t k = 0; k < grid.size(); ++k) {
        c.grid[k] = grid[k];
        c.density[k] = f(grid[k]);
    }
    finalize_curve(c);
    return c;
}

const char* kCounterexampleF = "transform{which:\"F\", expr:\"z+i-1+(z-i)/(z+i)-1/z\"}";

}  // namespace

TEST(Stieltjes, ClosedForms) {
    const auto d0 = dirac(0.0);
    const auto [a, ea] = stieltjes_density([&](cplx z) { return cauchy_transform(*d0, z); }, 1.0);
    EXPECT_NEAR(a, 0.0, 1e-6);
    const auto [c, ec] = stieltjes_density([](cplx z) { return 1.0 / (z + kI); }, 0.0);
    EXPECT_NEAR(c, 1.0 / kPi, 1e-10);
    const auto [s, es] = stieltjes_density([](cplx z) { return (z - std::sqrt(z - 2.0) * std::sqrt(z + 2.0)) / 2.0; }, 0.0);
    EXPECT_NEAR(s, 1.0 / kPi, 1e-10);
    EXPECT_LE(es, 1e-8);
}

TEST(Stieltjes, AnalyticDensitiesAwayFromEdges) {
    for (const auto& m : {semicircle(1.0), free_poisson(2.0), arcsine(1.0)}) {
        const auto [lo, hi] = effective_support(*m);
        for (double f : {0.2, 0.4, 0.6, 0.8}) {
            const double x = lo + f * (hi - lo);
            const auto [d, e] = stieltjes_density([&](cplx z) { return cauchy_transform(*m, z); }, x);
            EXPECT_NEAR(d, density(*m, x), std::max(1e-5, e)) << family_name(*m) << " " << x;
        }
    }
}

TEST(Richardson, RemovesLinearAndQuadraticTerms) {
    std::vector<double> v;
    const double r = 1 / std::sqrt(10.0);
    for (int k = 0; k < 5; ++k) {
        const double e = 1e-2 * std::pow(r, k);
        v.push_back(3.0 + 2.0 * e + 5.0 * e * e);
    }
    const Extrapolation x = richardson(v, r);
    EXPECT_NEAR(x.value, 3.0, 1e-12);
    EXPECT_TRUE(x.monotone);
    EXPECT_EQ(default_ladder().size(), 9u);
    EXPECT_DOUBLE_EQ(default_ladder().front(), 1e-3);
    EXPECT_NEAR(default_ladder().back(), 1e-7, 1e-20);
}

TEST(AtomMass, Examples) {
    const auto d0 = dirac(0.0), b = bernoulli(1.0), sc = semicircle(1.0);
    EXPECT_NEAR(atom_mass([&](cplx z) { return cauchy_transform(*d0, z); }, 0.0).mass, 1.0, 1e-12);
    EXPECT_NEAR(atom_mass([&](cplx z) { return cauchy_transform(*b, z); }, 1.0).mass, 0.5, 1e-9);
    EXPECT_NEAR(atom_mass([&](cplx z) { return cauchy_transform(*sc, z); }, 0.0).mass, 0.0, 1e-6);
    const auto fp = free_poisson(0.3);
    EXPECT_NEAR(atom_mass([&](cplx z) { return cauchy_transform(*fp, z); }, 0.0).mass, 0.7, 1e-5);
}

TEST(SupportScan, IntervalsGapsAndHole) {
    const DensityCurve sc = curve_from(linspace(-3, 3, 601), [](double x) { return density(*semicircle(1.0), x); });
    const SupportScan s = support_scan(sc);
    ASSERT_EQ(s.intervals.size(), 1u);
    EXPECT_NEAR(s.intervals[0].lo, -2.0, 0.011);
    EXPECT_NEAR(s.intervals[0].hi, 2.0, 0.011);
    EXPECT_FALSE(s.hole.has_value());

    const DensityCurve st = curve_from(linspace(-2, 2, 401), [](double x) { return rect_stable1_density(1.0, 0.5, x); });
    const SupportScan h = support_scan(st);
    ASSERT_TRUE(h.hole.has_value());
    EXPECT_NEAR(h.hole->lo, -0.25, 0.011);
    EXPECT_NEAR(h.hole->hi, 0.25, 0.011);
    ASSERT_EQ(h.gaps.size(), 1u);

    DensityCurve atoms = curve_from(linspace(-2, 2, 41), [](double) { return 0.0; });
    atoms.atoms = {{-1.0, 0.5}, {1.0, 0.5}};
    EXPECT_TRUE(support_scan(atoms).intervals.empty());
    EXPECT_NEAR(atoms.atom_mass(), 1.0, 1e-15);
}

TEST(Curve, FinalizeClipsAndFlags) {
    DensityCurve c;
    c.resize(3);
    c.grid = {0, 1, 2};
    c.density = {0.5, -1e-9, -1e-3};
    finalize_curve(c);
    // noise above -1e-7 is clipped silently, larger negatives are clipped and flagged
    EXPECT_EQ(c.density[1], 0.0);
    EXPECT_EQ(c.flags[1], PointFlag::Ok);
    EXPECT_EQ(c.density[2], 0.0);
    EXPECT_EQ(c.flags[2], PointFlag::Clipped);
    for (double d : c.density) EXPECT_GE(d, 0.0);
}

TEST(Curve, CsvAndSidecar) {
    DensityCurve c = curve_from({-1, 0, 1}, [](double x) { return 0.75 * (1 - std::abs(x)); });
    c.atoms = {{0.0, 0.25}};
    const std::string csv = c.to_csv();
    EXPECT_EQ(csv.substr(0, csv.find('\n')), "x,density,error_bar,flag");
    EXPECT_EQ(std::count(csv.begin(), csv.end(), '\n'), 4);
    const std::string js = c.sidecar_json();
    EXPECT_NE(js.find("\"atoms\""), std::string::npos);
    EXPECT_NE(js.find("\"support\""), std::string::npos);
    EXPECT_NEAR(c.integral(), 0.75, 1e-15);
    // left half, the atom, then the trapezoid on [0, 0.5]
    const double expect = 0.375 + 0.25 + 0.5 * (0.75 + 0.375) / 2;
    EXPECT_NEAR(c.cdf(0.5), expect, 1e-12);
}

TEST(Cusp, PowerLaws) {
    const auto grid = linspace(-0.1, 0.1, 201);
    EXPECT_EQ(cusp_detect(curve_from(grid, [](double x) { return std::cbrt(std::abs(x)); }), 0.0).cls, CuspClass::Cusp);
    EXPECT_EQ(cusp_detect(curve_from(grid, [](double x) { return x * x; }), 0.0).cls, CuspClass::ZeroFiniteSlope);
    EXPECT_EQ(cusp_detect(curve_from(grid, [](double x) { return 0.3 + x; }), 0.0).cls, CuspClass::Positive);
    const CuspReport r = cusp_detect(curve_from(grid, [](double x) { return std::pow(std::abs(x), 0.5); }), 0.0);
    EXPECT_NEAR(r.exponent_left, 0.5, 0.02);
    EXPECT_NEAR(r.exponent_right, 0.5, 0.02);
}

TEST(Cusp, SolverCases) {
    const auto grid = linspace(-0.5, 0.5, 201);
    auto cls = [&](double a) {
        return cusp_detect(density_curve_square(SquareConvHandle(semicircle(1.0), bernoulli(a)), grid), 0.0).cls;
    };
    EXPECT_EQ(cls(1.0), CuspClass::Cusp);
    EXPECT_EQ(cls(2.0), CuspClass::ZeroFiniteSlope);
    EXPECT_EQ(cusp_detect(density_curve_square(SquareConvHandle(semicircle(1.0), dirac(0.0)), grid), 0.0).cls,
              CuspClass::Positive);
}

TEST(Counterexample, ImaginaryPartOfG) {
    const auto nu = parse_measure_spec(kCounterexampleF);
    for (double r : {-2.5, -0.7, 0.3, 0.5, 1.5, 3.0}) {
        const double num = r * r * (r - 1) * (r - 1);
        const double den = r * r * (r * r - 2) * (r * r - 2) + (2 * r * r - 2 * r - 1) * (2 * r * r - 2 * r - 1);
        EXPECT_NEAR(cauchy_transform(*nu, cplx(r, 0.0)).imag(), -num / den, 1e-10) << r;
    }
}

TEST(Counterexample, ZeroWithFiniteSlopeAtOrigin) {
    const auto nu = parse_measure_spec(kCounterexampleF);
    const DensityCurve c = density_curve_square(SquareConvHandle(semicircle(0.5), nu), linspace(-0.5, 0.5, 201));
    EXPECT_LT(c.density[100], 1e-6);
    EXPECT_EQ(cusp_detect(c, 0.0).cls, CuspClass::ZeroFiniteSlope);
}

TEST(PointFlags, Names) {
    EXPECT_EQ(to_string(PointFlag::Ok), "ok");
    EXPECT_EQ(to_string(CuspClass::ZeroFiniteSlope), "Zero+FiniteSlope");
}

TEST(Curve, SingularNodeIntegratesLikeInverseSqrt) {
    // |x|^-1/2 on [-1, 1] has mass 4; the node at 0 is infinite in spirit
    const auto grid = linspace(-1, 1, 2001);
    DensityCurve c;
    c.resize(grid.size());
    c.grid = grid;
    for (std::size_t k = 0; k < grid.size(); ++k)
        c.density[k] = grid[k] == 0.0 ? 1e300 : 1.0 / std::sqrt(std::abs(grid[k]));
    EXPECT_NEAR(c.integral(), 4.0, 0.02);
    EXPECT_TRUE(std::isfinite(c.cdf(0.5)));
    // a smooth bump is left alone
    const DensityCurve s = curve_from(grid, [](double x) { return std::exp(-x * x); });
    EXPECT_EQ(s.quadrature_density(), s.density);
}
