#pragma once

#include <functional>
#include <optional>
#include <string>
#include <vector>

#include "freeconv/common.hpp"
#include "freeconv/diagnostics.hpp"

namespace freeconv {

enum class PointFlag { Ok, Clipped, NotConverged, Atom, WideErrorBar, Failed };

std::string to_string(PointFlag f);

struct AtomEntry {
    double position = 0.0;
    double mass = 0.0;
};

struct Interval {
    double lo = 0.0;
    double hi = 0.0;
};

/// Density sampled on a grid, with atoms, support intervals and per-point diagnostics.
struct DensityCurve {
    std::vector<double> grid;
    std::vector<double> density;
    std::vector<double> error_bars;
    std::vector<PointFlag> flags;
    std::vector<SolverDiagnostics> diagnostics;
    std::vector<AtomEntry> atoms;
    std::vector<Interval> support;

    std::size_t size() const { return grid.size(); }
    void resize(std::size_t n);
    /// Density values used for integration: an isolated spike at a node (an integrable
    /// x^-1/2 singularity sitting on the grid) is replaced by 3x its larger neighbour,
    /// which makes the trapezoid exact for that power law.
    std::vector<double> quadrature_density() const;
    /// Trapezoidal integral of the density.
    double integral() const;
    double atom_mass() const;
    /// CDF from trapezoid + atoms; mass missing from the grid is split evenly between the tails.
    double cdf(double x) const;
    /// Every point converged and none failed.
    bool fully_converged() const;

    /// CSV with header x,density,error_bar,flag.
    std::string to_csv() const;
    /// {"atoms":[{"position":..,"mass":..}],"support":[[lo,hi],..]}
    std::string sidecar_json() const;
};

/// Epsilon ladder 1e-3 ... 1e-7 with ratio 1/sqrt(10).
std::vector<double> default_ladder();

struct Extrapolation {
    double value = 0.0;
    double error_bar = 0.0;
    bool monotone = true;
};

/// Order-2 Richardson tableau on values sampled at eps_k = eps_0 * ratio^k.
Extrapolation richardson(const std::vector<double>& values, double ratio);

/// -Im G(x + i eps)/pi extrapolated to eps -> 0; returns (density, error_bar).
std::pair<double, double> stieltjes_density(const std::function<cplx(cplx)>& G, double x,
                                            const std::vector<double>& ladder = default_ladder());

struct AtomMassEstimate {
    double mass = 0.0;
    double imag_residual = 0.0;
    double error_bar = 0.0;
    bool converged = true;
};

/// Extrapolated Re(i eps G(a + i eps)) as eps -> 0.
AtomMassEstimate atom_mass(const std::function<cplx(cplx)>& G, double a,
                           const std::vector<double>& ladder = default_ladder());

struct SupportScan {
    std::vector<Interval> intervals;  // maximal runs with density > threshold
    std::vector<Interval> gaps;       // bounded gaps between runs
    std::optional<Interval> hole;     // the gap containing 0, if any
};

SupportScan support_scan(const DensityCurve& curve, double threshold = 1e-6);

/// Clip small negatives (flag), compute support intervals.
void finalize_curve(DensityCurve& curve, double threshold = 1e-6);

enum class CuspClass { ZeroFiniteSlope, Cusp, Positive, Undecided };

std::string to_string(CuspClass c);

struct CuspReport {
    CuspClass cls = CuspClass::Undecided;
    double value_at_x0 = 0.0;
    double exponent_left = 0.0, exponent_right = 0.0;
    double r2_left = 0.0, r2_right = 0.0;
    bool flat_left = false, flat_right = false;
};

/// Local power-law fit d(x) ~ c |x - x0|^p on both sides of x0.
CuspReport cusp_detect(const DensityCurve& curve, double x0, double positive_threshold = 1e-4);

}  // namespace freeconv
