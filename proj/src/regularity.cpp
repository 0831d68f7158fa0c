#include "freeconv/regularity.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>

#include <json.hpp>

#include "freeconv/parallel.hpp"

namespace freeconv {

using ojson = nlohmann::ordered_json;

std::vector<NamedMeasure> default_battery() {
    std::vector<NamedMeasure> b;
    for (double a : {0.25, 0.5, 1.0, 2.0, 4.0}) b.emplace_back(serialize_measure(*bernoulli(a)), bernoulli(a));
    std::vector<double> grid, values;
    for (int k = 0; k <= 20; ++k) {
        grid.push_back(-1.0 + 0.1 * k);
        values.push_back(0.5);
    }
    auto uniform = grid_density(grid, values);
    b.emplace_back("uniform[-1,1]", uniform);
    auto three = atomic({{-1.0, 0.2}, {0.5, 0.5}, {2.0, 0.3}});
    b.emplace_back(serialize_measure(*three), three);
    return b;
}

namespace {

std::string csv_table(const DensityCurve& c) {
    std::string out = "x,density\n";
    char buf[96];
    for (std::size_t k = 0; k < c.size(); ++k) {
        std::snprintf(buf, sizeof buf, "%.10g,%.10g\n", c.grid[k], c.density[k]);
        out += buf;
    }
    return out;
}

ojson cusp_json(const CuspReport& r) {
    return {{"class", to_string(r.cls)},       {"value", r.value_at_x0},
            {"exponent_left", r.exponent_left}, {"exponent_right", r.exponent_right},
            {"r2_left", r.r2_left},             {"r2_right", r.r2_right}};
}

ojson cplx_json(cplx z) { return ojson::array({z.real(), z.imag()}); }

ojson probe_json(const RayProbe& p) {
    ojson j;
    j["at_infinity"] = p.at_infinity;
    j["x"] = p.x;
    j["verdict"] = p.verdict;
    j["via"] = p.via;
    j["spread"] = p.spread;
    j["rays"] = ojson::array();
    for (std::size_t r = 0; r < p.angles.size(); ++r) {
        ojson ray;
        ray["angle"] = p.angles[r];
        ray["limit"] = cplx_json(p.limits[r]);
        ray["converged"] = static_cast<bool>(p.ray_converged[r]);
        ray["diverges"] = static_cast<bool>(p.ray_diverges[r]);
        ray["samples"] = ojson::array();
        for (cplx s : p.samples[r]) ray["samples"].push_back(cplx_json(s));
        j["rays"].push_back(ray);
    }
    return j;
}

/// Grid points at which the density is at most thr, grouped into runs.
std::vector<std::pair<std::size_t, std::size_t>> zero_index_runs(const DensityCurve& c, double thr) {
    std::vector<std::pair<std::size_t, std::size_t>> runs;
    for (std::size_t k = 0; k < c.size();) {
        if (c.density[k] > thr) {
            ++k;
            continue;
        }
        std::size_t j = k;
        while (j + 1 < c.size() && c.density[j + 1] <= thr) ++j;
        runs.emplace_back(k, j);
        k = j + 1;
    }
    return runs;
}

/// Whether some power mu^{boxplus t}, t < 1, is atomless. A law without semicircular part and
/// with finite jump rate r = int (1+t^2)/t^2 dG is free compound Poisson; its t-th power has an
/// atom of mass 1 - t r, so the answer is r > 1.
std::optional<bool> atomless_power(const Measure& mu, std::string& why) {
    char buf[160];
    const auto rate_verdict = [&](double r) {
        std::snprintf(buf, sizeof buf, "jump rate %.6g: powers below 1 %s", r,
                      r > 1.0 ? "are atomless close to 1" : "all carry an atom");
        why = buf;
        return r > 1.0;
    };
    if (mu.is<Semicircle>()) {
        why = "semicircular part: every power is atomless";
        return true;
    }
    if (mu.is<FreePoisson>()) return rate_verdict(mu.as<FreePoisson>().rate);
    if (mu.is<SquareIDLaw>()) {
        const auto& l = mu.as<SquareIDLaw>();
        if (l.levy && (l.levy->is<AtomicMeasure>() || l.levy->is<SymmetricBernoulli>())) {
            const double inv = inverse_second_moment(*l.levy);
            if (!std::isfinite(inv)) {
                why = "Levy measure charges 0 (semicircular part): every power is atomless";
                return true;
            }
            return rate_verdict(l.mass * (1.0 + inv));
        }
    }
    why = "assumed: mu^{boxplus t} atomless for some t < 1 (not checkable for this law)";
    return std::nullopt;
}

}  // namespace

RegularityReport property_H_probe(const MeasurePtr& mu, const std::vector<NamedMeasure>& battery,
                                  const std::vector<double>& grid, double zero_threshold,
                                  int thm31_rays) {
    if (!is_square_id(*mu)) throw DomainError("property_H_probe needs an infinitely divisible mu");
    if (grid.size() < 3) throw DomainError("probe grid needs at least 3 points");
    RegularityReport rep;
    rep.law_id = serialize_measure(*mu);
    rep.grid = grid;
    rep.zero_threshold = zero_threshold;

    // hypotheses of the analytic-density theorem, probed on a coarse subset of the grid
    std::vector<double> probes;
    const std::size_t stride = std::max<std::size_t>(1, grid.size() / 8);
    for (std::size_t k = stride / 2; k < grid.size(); k += stride) probes.push_back(grid[k]);
    try {
        const Thm31Report t = check_thm31_hypotheses(*mu, thm31_rays, probes);
        rep.thm31_condition1 = t.condition1;
        rep.thm31_condition2 = t.condition2;
        rep.thm31_verdict = t.verdict;
        rep.ray_evidence = t.probes;
    } catch (const Error& e) {
        rep.thm31_verdict = std::string("undecided (") + e.what() + ")";
    }

    rep.cells.resize(battery.size());
    parallel_for(battery.size(), [&](std::size_t i) {
        BatteryCell& cell = rep.cells[i];
        cell.nu_id = battery[i].first;
        try {
            SquareConvHandle h(mu, battery[i].second);
            const DensityCurve c = density_curve_square(h, grid);
            cell.solved = c.fully_converged();
            if (!cell.solved) cell.error = "some grid points did not converge";
            cell.evidence_csv = csv_table(c);
            const auto mn = std::min_element(c.density.begin(), c.density.end());
            cell.min_density = *mn;
            cell.argmin = c.grid[mn - c.density.begin()];
            bool cusp = false;
            for (const auto& [a, b] : zero_index_runs(c, zero_threshold)) {
                cell.zero_runs.push_back({c.grid[a], c.grid[b]});
                // an isolated zero strictly inside the support
                if (a == b && a > 0 && b + 1 < c.size()) {
                    const CuspReport r = cusp_detect(c, c.grid[a]);
                    cell.interior_zeros.emplace_back(c.grid[a], r);
                    if (r.cls == CuspClass::Cusp) cusp = true;
                }
            }
            if (c.grid.front() < 0.0 && c.grid.back() > 0.0) {
                cell.origin = cusp_detect(c, 0.0);
                if (cell.origin.cls == CuspClass::Cusp) cusp = true;
            }
            try {
                cell.origin_regime = classify_origin_regime(*mu, *battery[i].second);
            } catch (const Error&) {
                cell.origin_regime = OriginRegime::Inconclusive;
            }
            cell.verdict = cusp ? "cusp found" : (cell.zero_runs.empty() ? "no zeros found" : "zeros found");
        } catch (const Error& e) {
            cell.solved = false;
            cell.error = e.what();
            cell.verdict = "solver failure";
        }
    });

    bool any_cusp = false, any_zero = false, any_fail = false;
    for (const auto& c : rep.cells) {
        any_cusp |= c.verdict == "cusp found";
        any_zero |= c.verdict == "zeros found";
        any_fail |= !c.solved;
    }
    rep.verdict = any_cusp ? "cusp found" : (any_zero ? "zeros found" : "no zeros found");
    if (any_fail) rep.verdict += " (with solver gaps)";
    return rep;
}

RegularityReport rect_regularity(const RectConvHandle& h, const std::vector<double>& grid) {
    RegularityReport rep;
    rep.law_id = serialize_measure(h.mu()) + " boxplus_" + std::to_string(h.lambda()) + " " +
                 serialize_measure(h.nu());
    rep.grid = grid;
    BatteryCell cell;
    cell.nu_id = serialize_measure(h.nu());
    try {
        const DensityCurve c = rect_density_curve(h, grid);
        cell.solved = c.fully_converged();
        cell.evidence_csv = csv_table(c);
        const auto mn = std::min_element(c.density.begin(), c.density.end());
        cell.min_density = *mn;
        cell.argmin = c.grid[mn - c.density.begin()];
        for (const auto& [a, b] : zero_index_runs(c, rep.zero_threshold))
            cell.zero_runs.push_back({c.grid[a], c.grid[b]});
        cell.verdict = cell.zero_runs.empty() ? "no zeros found" : "zeros found";
    } catch (const Error& e) {
        cell.error = e.what();
        cell.verdict = "solver failure";
    }
    rep.cells.push_back(cell);
    rep.hole = hole_detect(h);
    rep.atom = atom_at_zero(h);
    rep.verdict = rep.hole->has_hole ? "hole found" : (rep.hole->decided ? "no hole" : "undecided");
    return rep;
}

std::string RegularityReport::to_json() const {
    ojson j;
    j["law"] = law_id;
    j["thm31"] = {{"condition1", thm31_condition1},
                  {"condition2", thm31_condition2},
                  {"verdict", thm31_verdict}};
    j["ray_evidence"] = ojson::array();
    for (const auto& p : ray_evidence) j["ray_evidence"].push_back(probe_json(p));
    if (!grid.empty()) j["grid"] = {{"lo", grid.front()}, {"hi", grid.back()}, {"points", grid.size()}};
    j["zero_threshold"] = zero_threshold;
    j["cells"] = ojson::array();
    for (const auto& c : cells) {
        ojson cj;
        cj["nu"] = c.nu_id;
        cj["solved"] = c.solved;
        if (!c.error.empty()) cj["error"] = c.error;
        cj["min_density"] = c.min_density;
        cj["argmin"] = c.argmin;
        cj["zero_runs"] = ojson::array();
        for (const auto& r : c.zero_runs) cj["zero_runs"].push_back({r.lo, r.hi});
        cj["interior_zeros"] = ojson::array();
        for (const auto& [x, r] : c.interior_zeros) {
            ojson z = cusp_json(r);
            z["x"] = x;
            cj["interior_zeros"].push_back(z);
        }
        cj["origin"] = cusp_json(c.origin);
        cj["origin_regime"] = to_string(c.origin_regime);
        cj["verdict"] = c.verdict;
        cj["evidence_csv"] = c.evidence_csv;
        j["cells"].push_back(cj);
    }
    if (hole) {
        ojson hj = {{"has_hole", hole->has_hole},
                    {"radius", hole->hole_radius_estimate},
                    {"atom_at_zero", hole->atom_at_zero},
                    {"decided", hole->decided}};
        j["hole"] = hj;
    }
    if (atom) {
        ojson aj = {{"mass", atom->mass}, {"limit", atom->limit}, {"converged", atom->converged}};
        if (atom->cross_check >= 0.0) aj["cross_check"] = atom->cross_check;
        aj["ladder"] = ojson::array();
        for (cplx v : atom->ladder) aj["ladder"].push_back(cplx_json(v));
        j["atom"] = aj;
    }
    j["verdict"] = verdict;
    j["note"] = "analyticity is not decidable from boundary data; verdicts report zeros and cusps on the grid only";
    return j.dump(2);
}

ObstructionReport finite_variance_obstruction(const MeasurePtr& mu, double threshold) {
    if (!is_square_id(*mu)) throw DomainError("obstruction check needs an infinitely divisible mu");
    ObstructionReport r;
    r.law_id = serialize_measure(*mu);
    r.hypothesis_holds = atomless_power(*mu, r.assumption);
    r.sigma_total = levy_sigma_total(*mu);
    r.finite = std::isfinite(r.sigma_total);
    if (!r.finite) {
        r.message = "no obstruction from this criterion";
        return r;
    }
    if (r.sigma_total <= 0.0) {
        r.message = "zero Levy measure: mu is a point mass, no density to test";
        return r;
    }
    r.adversary_a = std::sqrt(r.sigma_total);
    SquareConvHandle h(mu, bernoulli(r.adversary_a));
    // phi(iy) = center + sigma / (iy) + O(y^-2)
    r.center = h.phi_mu(cplx(0.0, 1e8)).real();
    if (std::abs(r.center) < 1e-12) r.center = 0.0;
    const DensityCurve c = density_curve_square(h, {r.center});
    r.density_at_zero = c.density[0];
    r.error_bar = c.error_bars[0];
    r.obstruction_found = c.fully_converged() && r.density_at_zero < threshold;
    char buf[160];
    std::snprintf(buf, sizeof buf, "adversary a = %.6g gives density %.3g at %.6g (threshold %.3g)",
                  r.adversary_a, r.density_at_zero, r.center, threshold);
    r.message = buf;
    if (r.hypothesis_holds == false && !r.obstruction_found)
        r.message += "; the atomless-power hypothesis fails, so no zero is guaranteed";
    return r;
}

std::string ObstructionReport::to_json() const {
    ojson j;
    j["law"] = law_id;
    if (finite)
        j["sigma_total"] = sigma_total;
    else
        j["sigma_total"] = "inf";
    j["finite"] = finite;
    j["adversary_a"] = adversary_a;
    j["center"] = center;
    j["density_at_zero"] = density_at_zero;
    j["error_bar"] = error_bar;
    j["obstruction_found"] = obstruction_found;
    j["message"] = message;
    if (hypothesis_holds)
        j["hypothesis_holds"] = *hypothesis_holds;
    else
        j["hypothesis_holds"] = nullptr;
    j["assumption"] = assumption;
    return j.dump(2);
}

}  // namespace freeconv
