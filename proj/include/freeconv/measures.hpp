#pragma once

#include <memory>
#include <string>
#include <string_view>
#include <utility>
#include <variant>
#include <vector>

#include "freeconv/common.hpp"
#include "freeconv/expression.hpp"

namespace freeconv {

struct Measure;
using MeasurePtr = std::shared_ptr<const Measure>;

/// Finite sum of Dirac masses. Positions strictly increasing.
struct AtomicMeasure {
    std::vector<double> positions;
    std::vector<double> masses;
};

/// Piecewise-linear density on a strictly increasing grid, plus an optional atom at 0.
struct GridDensityMeasure {
    std::vector<double> grid;
    std::vector<double> values;
    double atom_at_zero = 0.0;
};

struct Semicircle {
    double variance = 1.0;
};

struct CauchyLaw {
    double t = 1.0;
};

/// 1/2 (delta_{-a} + delta_a)
struct SymmetricBernoulli {
    double a = 1.0;
};

/// Free Poisson law with rate k and jump size s, translated by `shift`.
struct FreePoisson {
    double rate = 1.0;
    double jump = 1.0;
    double shift = 0.0;
};

/// Arcsine law on (-radius, radius).
struct Arcsine {
    double radius = 1.0;
};

/// Marchenko-Pastur law of ratio lambda and scale sigma^2 (mean = scale).
struct MarchenkoPastur {
    double ratio = 1.0;
    double scale = 1.0;
};

/**
 * Symmetric rectangular stable law: C(z) = -t (-z)^{alpha/2} for ratio lambda.
 * alpha = 2 is the rectangular Gaussian (C(z) = t z); alpha = 1 at lambda = 1 is Cauchy(t).
 */
struct RectStable {
    double alpha = 1.0;
    double t = 1.0;
    double lambda = 0.5;
};

/// Square infinitely divisible law: phi(z) = gamma + mass * int (1+tz)/(z-t) dshape(t).
struct SquareIDLaw {
    double gamma = 0.0;
    MeasurePtr levy;  // probability shape of the Levy measure; null means G = 0
    double mass = 1.0;
};

/// Rectangular infinitely divisible law: C(z) = mass * z int (1+t^2)/(1-z t^2) dshape(t).
struct RectIDLaw {
    double lambda = 0.5;
    MeasurePtr levy;  // symmetric probability shape; null means G = 0
    double mass = 1.0;
};

/// Measure given by a formula for F, G, or the Voiculescu transform phi.
struct TransformDefined {
    enum class Which { F, G, Phi };
    Which which = Which::F;
    ExprPtr expr;
    std::vector<std::string> warnings;
};

/// Convex (or, for Levy shapes, positive) combination of measures.
struct Mixture {
    std::vector<double> weights;
    std::vector<MeasurePtr> parts;
};

using MeasureVariant =
    std::variant<AtomicMeasure, GridDensityMeasure, Semicircle, CauchyLaw, SymmetricBernoulli,
                 FreePoisson, Arcsine, MarchenkoPastur, RectStable, SquareIDLaw, RectIDLaw,
                 TransformDefined, Mixture>;

struct Measure {
    MeasureVariant v;

    template <class T>
    bool is() const {
        return std::holds_alternative<T>(v);
    }
    template <class T>
    const T& as() const {
        return std::get<T>(v);
    }
};

template <class T>
MeasurePtr make_measure(T law) {
    return std::make_shared<const Measure>(Measure{MeasureVariant(std::move(law))});
}

// ---- constructors with invariant checks (throw DomainError) ----

MeasurePtr atomic(std::vector<std::pair<double, double>> atoms);
MeasurePtr dirac(double a);
MeasurePtr grid_density(std::vector<double> grid, std::vector<double> values,
                        double atom_at_zero = 0.0);
MeasurePtr semicircle(double variance);
MeasurePtr cauchy(double t);
MeasurePtr bernoulli(double a);
MeasurePtr free_poisson(double rate, double jump = 1.0, double shift = 0.0);
MeasurePtr arcsine(double radius);
MeasurePtr marchenko_pastur(double ratio, double scale = 1.0);
MeasurePtr rect_stable(double alpha, double t, double lambda);
MeasurePtr square_id(double gamma, MeasurePtr levy_shape, double mass = 1.0);
MeasurePtr rect_id(double lambda, MeasurePtr levy_shape, double mass = 1.0);
MeasurePtr transform_defined(TransformDefined::Which which, std::string_view expr);
MeasurePtr mixture(std::vector<double> weights, std::vector<MeasurePtr> parts);

/// Validates invariants of an already-built measure.
void validate(const Measure& m);

// ---- classification ----

/// True for families with a known, solver-free Voiculescu transform on C+.
bool is_square_id(const Measure& m);
/// True for laws with a rectangular C-transform on C \ R+.
bool is_rect_id(const Measure& m);
bool is_symmetric(const Measure& m, double tol = 1e-12);
/// Point mass at the origin, or a degenerate ID law (zero Levy measure, zero drift).
bool is_delta_zero(const Measure& m);
/// Total mass; 1 for probability measures, arbitrary for Levy shapes scaled by mixtures.
double total_mass(const Measure& m);
/// Mass at 0 when cheaply known; throws DomainError for laws needing a solver.
double atom_at_origin(const Measure& m);
/// Mass of the atom at a (0 if none); atomic, grid and closed forms only.
double atom_mass_at(const Measure& m, double a);
/// Atoms of the measure (closed forms, atomic, grid, mixtures).
std::vector<std::pair<double, double>> atoms_of(const Measure& m);

// ---- basic transforms ----

/// G(z) = int dm(x)/(z-x). For closed forms, a real z returns the boundary value from C+.
cplx cauchy_transform(const Measure& m, cplx z);
/// F = 1/G; throws PoleError when G vanishes.
cplx reciprocal_cauchy(const Measure& m, cplx z);
/// psi(z) = int zt/(1-zt) dm(t) = G(1/z)/z - 1.
cplx psi_transform(const Measure& m, cplx z);

/// Image under t -> t^2. Throws DomainError for non-symmetric input.
MeasurePtr push_forward_square(const Measure& m);
/// Symmetric law whose square push-forward is m. Throws DomainError if m charges (-inf, 0).
MeasurePtr symmetric_sqrt(const Measure& m);

// ---- real-line quantities (solver-free laws only) ----

/// Density of the absolutely continuous part.
double density(const Measure& m, double x);
/// Distribution function including atoms, right-continuous.
double cdf(const Measure& m, double x);
/// A finite interval carrying all but about `tail` of the mass.
std::pair<double, double> effective_support(const Measure& m, double tail = 1e-6);

/// Closed-form density of the alpha = 1 rectangular stable law.
double rect_stable1_density(double t, double lambda, double x);

/// Piecewise-linear discretization of a solver-free law on n points.
MeasurePtr discretize(const Measure& m, double lo, double hi, std::size_t n);

/// W1 distance on a canonical grid covering both effective supports.
double wasserstein1(const Measure& a, const Measure& b, std::size_t points = 20001);

// ---- textual spec ----

MeasurePtr parse_measure_spec(std::string_view text);
std::string serialize_measure(const Measure& m);

std::string family_name(const Measure& m);

}  // namespace freeconv
