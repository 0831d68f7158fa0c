#include "freeconv/inversion.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <json.hpp>

namespace freeconv {

std::string to_string(SolveMethod m) {
    switch (m) {
        case SolveMethod::Picard: return "picard";
        case SolveMethod::NewtonFallback: return "newton-fallback";
        case SolveMethod::Continuation: return "continuation";
        case SolveMethod::Ladder: return "ladder";
        case SolveMethod::Direct: return "direct";
    }
    return "unknown";
}

std::string to_string(PointFlag f) {
    switch (f) {
        case PointFlag::Ok: return "ok";
        case PointFlag::Clipped: return "clipped";
        case PointFlag::NotConverged: return "not_converged";
        case PointFlag::Atom: return "atom";
        case PointFlag::WideErrorBar: return "wide_error_bar";
        case PointFlag::Failed: return "failed";
    }
    return "unknown";
}

std::string to_string(CuspClass c) {
    switch (c) {
        case CuspClass::ZeroFiniteSlope: return "Zero+FiniteSlope";
        case CuspClass::Cusp: return "Cusp";
        case CuspClass::Positive: return "Positive";
        case CuspClass::Undecided: return "Undecided";
    }
    return "Undecided";
}

void DensityCurve::resize(std::size_t n) {
    grid.resize(n);
    density.resize(n);
    error_bars.resize(n);
    flags.resize(n, PointFlag::Ok);
    diagnostics.resize(n);
}

std::vector<double> DensityCurve::quadrature_density() const {
    std::vector<double> d = density;
    for (std::size_t k = 1; k + 1 < d.size(); ++k) {
        const double nb = std::max(density[k - 1], density[k + 1]);
        if (density[k - 1] > 0.0 && density[k + 1] > 0.0 && density[k] > 4.0 * nb) d[k] = 3.0 * nb;
    }
    return d;
}

double DensityCurve::integral() const {
    const std::vector<double> d = quadrature_density();
    double s = 0.0;
    for (std::size_t k = 0; k + 1 < grid.size(); ++k)
        s += 0.5 * (grid[k + 1] - grid[k]) * (d[k] + d[k + 1]);
    return s;
}

double DensityCurve::atom_mass() const {
    double s = 0.0;
    for (const auto& a : atoms) s += a.mass;
    return s;
}

double DensityCurve::cdf(double x) const {
    const double missing = std::max(0.0, 1.0 - integral() - atom_mass());
    const std::vector<double> density = quadrature_density();
    double s = 0.0;
    if (!grid.empty() && x >= grid.front()) {
        s = 0.5 * missing;  // lower tail sits below the grid
        for (std::size_t k = 0; k + 1 < grid.size(); ++k) {
            const double t0 = grid[k], t1 = grid[k + 1];
            if (x <= t0) break;
            const double d0 = density[k], d1 = density[k + 1];
            const double r = std::min(x, t1);
            const double dr = d0 + (d1 - d0) * (r - t0) / (t1 - t0);
            s += 0.5 * (r - t0) * (d0 + dr);
        }
        if (x >= grid.back()) s += 0.5 * missing;
    }
    for (const auto& a : atoms)
        if (a.position <= x) s += a.mass;
    return std::clamp(s, 0.0, 1.0);
}

bool DensityCurve::fully_converged() const {
    for (std::size_t k = 0; k < flags.size(); ++k) {
        if (flags[k] == PointFlag::Failed || flags[k] == PointFlag::NotConverged) return false;
    }
    return true;
}

std::string DensityCurve::to_csv() const {
    std::string out = "x,density,error_bar,flag\n";
    char buf[160];
    for (std::size_t k = 0; k < grid.size(); ++k) {
        std::snprintf(buf, sizeof buf, "%.15g,%.15g,%.6g,%s\n", grid[k], density[k], error_bars[k],
                      to_string(flags[k]).c_str());
        out += buf;
    }
    return out;
}

std::string DensityCurve::sidecar_json() const {
    nlohmann::ordered_json j;
    j["atoms"] = nlohmann::ordered_json::array();
    for (const auto& a : atoms) j["atoms"].push_back({{"position", a.position}, {"mass", a.mass}});
    j["support"] = nlohmann::ordered_json::array();
    for (const auto& s : support) j["support"].push_back({s.lo, s.hi});
    return j.dump(2) + "\n";
}

std::vector<double> default_ladder() {
    std::vector<double> eps;
    for (int k = 0; k <= 8; ++k) eps.push_back(1e-3 * std::pow(10.0, -0.5 * k));
    return eps;
}

Extrapolation richardson(const std::vector<double>& f, double ratio) {
    Extrapolation out;
    const std::size_t n = f.size();
    if (n == 0) return out;
    if (n < 4) {
        out.value = f.back();
        out.error_bar = n > 1 ? std::abs(f[n - 1] - f[n - 2]) : 0.0;
        return out;
    }
    // monotonicity of the raw ladder, ignoring round-off level wiggles
    double scale = 0.0;
    for (double v : f) scale = std::max(scale, std::abs(v));
    const double noise = 1e-12 * (1.0 + scale);
    int sign = 0;
    for (std::size_t k = 0; k + 1 < n; ++k) {
        const double d = f[k + 1] - f[k];
        if (std::abs(d) <= noise) continue;
        const int s = d > 0 ? 1 : -1;
        if (sign != 0 && s != sign) out.monotone = false;
        sign = s;
    }
    if (!out.monotone) {
        const auto [lo, hi] = std::minmax_element(f.begin(), f.end());
        out.value = f.back();
        out.error_bar = *hi - *lo;
        return out;
    }
    std::vector<double> r1(n - 1), r2(n - 2);
    for (std::size_t k = 0; k + 1 < n; ++k) r1[k] = (f[k + 1] - ratio * f[k]) / (1.0 - ratio);
    const double r_sq = ratio * ratio;
    for (std::size_t k = 0; k + 2 < n; ++k) r2[k] = (r1[k + 1] - r_sq * r1[k]) / (1.0 - r_sq);
    out.value = r2.back();
    out.error_bar = std::abs(r2[r2.size() - 1] - r2[r2.size() - 2]);
    return out;
}

namespace {

double ladder_ratio(const std::vector<double>& ladder) {
    return ladder.size() > 1 ? ladder[1] / ladder[0] : 1.0;
}

}  // namespace

std::pair<double, double> stieltjes_density(const std::function<cplx(cplx)>& G, double x,
                                            const std::vector<double>& ladder) {
    std::vector<double> vals;
    vals.reserve(ladder.size());
    for (double e : ladder) vals.push_back(-G(cplx(x, e)).imag() / kPi);
    const Extrapolation ex = richardson(vals, ladder_ratio(ladder));
    return {ex.value, ex.error_bar};
}

AtomMassEstimate atom_mass(const std::function<cplx(cplx)>& G, double a,
                           const std::vector<double>& ladder) {
    AtomMassEstimate out;
    std::vector<double> re;
    double im = 0.0;
    try {
        for (double e : ladder) {
            const cplx v = cplx(0.0, e) * G(cplx(a, e));
            re.push_back(v.real());
            im = v.imag();
        }
    } catch (const Error&) {
        out.converged = false;
        return out;
    }
    const Extrapolation ex = richardson(re, ladder_ratio(ladder));
    out.mass = std::max(0.0, ex.value);
    out.error_bar = ex.error_bar;
    out.imag_residual = im;
    out.converged = std::isfinite(ex.value) && ex.error_bar < 1e-3;
    if (!std::isfinite(ex.value)) out.mass = 0.0;
    return out;
}

SupportScan support_scan(const DensityCurve& c, double threshold) {
    SupportScan out;
    const std::size_t n = c.grid.size();
    std::size_t k = 0;
    while (k < n) {
        if (c.density[k] > threshold) {
            std::size_t j = k;
            while (j + 1 < n && c.density[j + 1] > threshold) ++j;
            out.intervals.push_back({c.grid[k], c.grid[j]});
            k = j + 1;
        } else {
            ++k;
        }
    }
    for (std::size_t i = 0; i + 1 < out.intervals.size(); ++i) {
        const Interval g{out.intervals[i].hi, out.intervals[i + 1].lo};
        out.gaps.push_back(g);
        if (g.lo < 0.0 && g.hi > 0.0) out.hole = g;
    }
    return out;
}

void finalize_curve(DensityCurve& c, double threshold) {
    for (std::size_t k = 0; k < c.size(); ++k) {
        if (!std::isfinite(c.density[k])) {
            c.density[k] = 0.0;
            c.flags[k] = PointFlag::Failed;
        } else if (c.density[k] < 0.0) {
            if (c.density[k] < -1e-7 && c.flags[k] == PointFlag::Ok) c.flags[k] = PointFlag::Clipped;
            c.density[k] = 0.0;
        }
    }
    c.support = support_scan(c, threshold).intervals;
}

namespace {

struct Fit {
    double p = 0.0, r2 = 0.0;
    bool flat = false;
    bool enough = false;
};

Fit power_fit(const std::vector<double>& dx, const std::vector<double>& d, double floor) {
    Fit f;
    std::vector<double> lx, ly;
    for (std::size_t k = 0; k < dx.size(); ++k) {
        if (d[k] > floor) {
            lx.push_back(std::log(dx[k]));
            ly.push_back(std::log(d[k]));
        }
    }
    if (dx.size() < 5) return f;
    f.enough = true;
    if (lx.size() < 3) {
        // identically zero next to x0: vanishes to every order on this side
        f.flat = true;
        return f;
    }
    const double n = static_cast<double>(lx.size());
    double sx = 0, sy = 0, sxx = 0, sxy = 0, syy = 0;
    for (std::size_t k = 0; k < lx.size(); ++k) {
        sx += lx[k];
        sy += ly[k];
        sxx += lx[k] * lx[k];
        sxy += lx[k] * ly[k];
        syy += ly[k] * ly[k];
    }
    const double vx = sxx - sx * sx / n, vy = syy - sy * sy / n, cxy = sxy - sx * sy / n;
    if (vx <= 0.0) return f;
    f.p = cxy / vx;
    f.r2 = vy > 0.0 ? cxy * cxy / (vx * vy) : 1.0;
    return f;
}

}  // namespace

CuspReport cusp_detect(const DensityCurve& c, double x0, double positive_threshold) {
    CuspReport out;
    const std::size_t n = c.grid.size();
    if (n == 0) return out;
    std::size_t i0 = 0;
    for (std::size_t k = 1; k < n; ++k)
        if (std::abs(c.grid[k] - x0) < std::abs(c.grid[i0] - x0)) i0 = k;
    out.value_at_x0 = c.density[i0];
    if (out.value_at_x0 > positive_threshold) {
        out.cls = CuspClass::Positive;
        return out;
    }
    const SupportScan scan = support_scan(c, positive_threshold * 1e-3);
    auto local_width = [&](bool right) {
        // width of the support interval adjacent to x0 on the requested side
        double best = c.grid.back() - c.grid.front();
        for (const auto& iv : scan.intervals) {
            if (right && iv.hi > x0) return std::max(iv.hi - std::max(iv.lo, x0), 1e-12);
            if (!right && iv.lo < x0) best = std::max(std::min(iv.hi, x0) - iv.lo, 1e-12);
        }
        return best;
    };
    auto side = [&](bool right) {
        const double window = 0.1 * local_width(right);
        std::vector<double> dx, d;
        if (right) {
            for (std::size_t k = i0 + 1; k < n && dx.size() < 10; ++k) {
                const double h = c.grid[k] - x0;
                if (h <= 0.0) continue;
                if (h > window && dx.size() >= 5) break;
                dx.push_back(h);
                d.push_back(c.density[k]);
            }
        } else {
            for (std::size_t k = i0; k-- > 0 && dx.size() < 10;) {
                const double h = x0 - c.grid[k];
                if (h <= 0.0) continue;
                if (h > window && dx.size() >= 5) break;
                dx.push_back(h);
                d.push_back(c.density[k]);
            }
        }
        return power_fit(dx, d, positive_threshold * 1e-3);
    };
    const Fit l = side(false), r = side(true);
    out.exponent_left = l.p;
    out.exponent_right = r.p;
    out.r2_left = l.r2;
    out.r2_right = r.r2;
    out.flat_left = l.flat;
    out.flat_right = r.flat;
    if (!l.enough || !r.enough) return out;
    auto good = [](const Fit& f) { return f.flat || f.r2 >= 0.9; };
    if (!good(l) || !good(r)) return out;
    auto cusp = [](const Fit& f) { return !f.flat && f.p > 0.0 && f.p < 1.0; };
    if (cusp(l) || cusp(r)) {
        out.cls = CuspClass::Cusp;
    } else {
        out.cls = CuspClass::ZeroFiniteSlope;
    }
    return out;
}

}  // namespace freeconv
