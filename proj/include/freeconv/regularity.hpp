#pragma once

#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "freeconv/inversion.hpp"
#include "freeconv/measures.hpp"
#include "freeconv/rect_conv.hpp"
#include "freeconv/square_conv.hpp"

namespace freeconv {

using NamedMeasure = std::pair<std::string, MeasurePtr>;

/// Bernoulli a in {1/4, 1/2, 1, 2, 4}, a uniform grid law on [-1, 1], and a 3-atom asymmetric law.
std::vector<NamedMeasure> default_battery();

/// One (mu, nu) cell of a probe.
struct BatteryCell {
    std::string nu_id;
    bool solved = false;
    std::string error;                 // solver failure, if any
    double min_density = 0.0;
    double argmin = 0.0;
    std::vector<Interval> zero_runs;   // maximal grid runs with density <= zero threshold
    std::vector<std::pair<double, CuspReport>> interior_zeros;  // isolated interior zeros, classified
    CuspReport origin;
    OriginRegime origin_regime = OriginRegime::Inconclusive;
    std::string verdict;               // no zeros found | zeros found | cusp found
    std::string evidence_csv;          // x,density
};

struct RegularityReport {
    std::string law_id;
    std::string thm31_condition1, thm31_condition2, thm31_verdict;
    std::vector<RayProbe> ray_evidence;
    std::vector<double> grid;
    double zero_threshold = 1e-8;
    std::vector<BatteryCell> cells;
    std::string verdict;               // aggregate over the battery
    std::optional<HoleReport> hole;    // rectangular runs only
    std::optional<AtomAtZero> atom;

    std::string to_json() const;
};

/// Solves mu boxplus nu on the grid for each nu in the battery and aggregates zero / cusp findings.
RegularityReport property_H_probe(const MeasurePtr& mu, const std::vector<NamedMeasure>& battery,
                                  const std::vector<double>& grid, double zero_threshold = 1e-8,
                                  int thm31_rays = 5);

/// Hole and atom summary for a rectangular pair.
RegularityReport rect_regularity(const RectConvHandle& h, const std::vector<double>& grid);

struct ObstructionReport {
    std::string law_id;
    double sigma_total = 0.0;   // int (1+t^2) dG
    bool finite = false;
    double adversary_a = 0.0;   // nu = (delta_{-a} + delta_a)/2, a = sqrt(sigma)
    double center = 0.0;        // gamma + int t dG = lim Re phi(iy); the zero sits here
    double density_at_zero = 0.0;  // density of mu boxplus nu at `center`
    double error_bar = 0.0;
    bool obstruction_found = false;
    std::string message;
    // mu^{boxplus t} atomless for some t < 1: checked where the jump rate is computable, else assumed
    std::optional<bool> hypothesis_holds;
    std::string assumption;

    std::string to_json() const;
};

ObstructionReport finite_variance_obstruction(const MeasurePtr& mu, double threshold = 1e-3);

}  // namespace freeconv
