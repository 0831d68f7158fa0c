#include "freeconv/square_conv.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <map>

#include "freeconv/parallel.hpp"
#include "freeconv/quadrature.hpp"
#include "freeconv/transforms.hpp"

namespace freeconv {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

MeasurePtr non_owning(const Measure& m) {
    return MeasurePtr(MeasurePtr(), &m);
}

double scale_of(cplx w) { return std::max(1.0, std::abs(w)); }

}  // namespace

SquareConvHandle::SquareConvHandle(MeasurePtr mu, MeasurePtr nu, SolverSettings settings)
    : mu_(std::move(mu)), nu_(std::move(nu)), settings_(settings) {
    if (!mu_ || !nu_) throw DomainError("square convolution needs two measures");
    if (!is_square_id(*mu_))
        throw DomainError("first operand must be infinitely divisible, got " + family_name(*mu_));
}

cplx SquareConvHandle::phi_mu(cplx z) const { return phi_voiculescu_ID(*mu_, z); }

cplx SquareConvHandle::F_nu(cplx w) const { return reciprocal_cauchy(*nu_, w); }

namespace {

struct NewtonOutcome {
    cplx w;
    int iterations = 0;
    bool converged = false;
};

/// Damped Newton on R(w) = w - g(w), keeping Im w >= 0.
NewtonOutcome damped_newton(const std::function<cplx(cplx)>& R, cplx w, const SolverSettings& s) {
    NewtonOutcome out{w};
    cplx r = R(w);
    double rn = std::abs(r);
    for (int k = 0; k < s.newton_max; ++k) {
        out.iterations = k + 1;
        if (rn <= 1e-15 * scale_of(w)) {
            out.converged = true;
            break;
        }
        const double h = 1e-6 * scale_of(w);
        const cplx dR = (R(w + h) - R(w - h)) / (2.0 * h);
        if (dR == cplx(0.0) || !is_finite(dR)) break;
        const cplx delta = -r / dR;
        double lam = 1.0;
        bool accepted = false;
        cplx wn, rnew;
        for (int j = 0; j < 50; ++j, lam *= 0.5) {
            wn = w + lam * delta;
            if (wn.imag() < -1e-14 * scale_of(wn)) continue;
            if (wn.imag() < 0.0) wn.imag(0.0);
            try {
                rnew = R(wn);
            } catch (const Error&) {
                continue;
            }
            if (!is_finite(rnew)) continue;
            if (std::abs(rnew) < rn || std::abs(rnew) <= 1e-15 * scale_of(wn)) {
                accepted = true;
                break;
            }
        }
        if (!accepted) break;
        const double step = std::abs(wn - w);
        w = wn;
        r = rnew;
        rn = std::abs(r);
        if (step <= s.tol * scale_of(w)) {
            out.converged = true;
            break;
        }
    }
    out.w = w;
    return out;
}

}  // namespace

OmegaResult omega1(const SquareConvHandle& h, cplx z) {
    if (z.imag() < 0.0) throw DomainError("omega1 needs z in C+ or on R");
    const SolverSettings& s = h.settings();
    OmegaResult out;
    if (is_delta_zero(h.mu())) {
        out.w = z;
        out.diag = {0, 0.0, SolveMethod::Direct, true, false};
        return out;
    }
    if (h.mu().is<CauchyLaw>()) {
        out.w = z + cplx(0.0, h.mu().as<CauchyLaw>().t);
        out.diag = {1, 0.0, SolveMethod::Direct, true, false};
        return out;
    }
    auto g = [&](cplx w) { return z - h.phi_mu(h.F_nu(w)); };
    const double exit_tol = 1e-12;

    cplx w = z.imag() > 0.0 ? z : cplx(z.real(), 1.0);
    SolverDiagnostics d;
    d.method = SolveMethod::Picard;
    double prev = kInf;
    int slow = 0;
    bool switch_newton = false;
    bool done = false;
    for (int it = 0; it < s.max_iter; ++it) {
        cplx w1 = g(w);
        if (!is_finite(w1)) throw ConvergenceError("fixed-point iterate is not finite");
        if (w1.imag() < -exit_tol * scale_of(w1)) throw BranchError("fixed-point iterate left C+");
        if (w1.imag() < 0.0) w1.imag(0.0);
        const double step = std::abs(w1 - w);
        d.iterations = it + 1;
        w = w1;
        if (step <= s.tol * scale_of(w)) {
            done = true;
            break;
        }
        if (prev < kInf) {
            if (step > s.slow_ratio * prev) ++slow;
            // growth above the round-off floor after the initial transient
            if (it > 5 && step > prev * (1.0 + 1e-9) && step > 1e3 * s.tol * scale_of(w)) {
                d.nonmonotone = true;
                switch_newton = true;
            }
        }
        if (slow >= s.slow_window) switch_newton = true;
        prev = step;
        if (switch_newton) break;
    }

    if (!done && switch_newton) {
        const cplx picard_w = w;
        auto R = [&](cplx v) { return v - g(v); };
        NewtonOutcome nt;
        try {
            nt = damped_newton(R, w, s);
        } catch (const Error&) {
            nt.converged = false;
        }
        bool accept = nt.converged;
        if (accept && nt.w.imag() <= 1e-9 * scale_of(nt.w)) {
            // a real fixed point must be attracting to be the Denjoy-Wolff point
            const double hh = 1e-6 * scale_of(nt.w);
            try {
                const cplx gp = (g(nt.w + hh) - g(nt.w - hh)) / (2.0 * hh);
                if (std::abs(gp) > 1.0 + 1e-6) accept = false;
            } catch (const Error&) {
                accept = false;
            }
        }
        d.iterations += nt.iterations;
        if (accept) {
            w = nt.w;
            d.method = SolveMethod::NewtonFallback;
            done = true;
        } else {
            // resume Picard without further switching
            w = picard_w;
            for (int it = d.iterations; it < s.max_iter; ++it) {
                cplx w1 = g(w);
                if (!is_finite(w1)) throw ConvergenceError("fixed-point iterate is not finite");
                if (w1.imag() < -exit_tol * scale_of(w1)) throw BranchError("fixed-point iterate left C+");
                if (w1.imag() < 0.0) w1.imag(0.0);
                const double step = std::abs(w1 - w);
                d.iterations = it + 1;
                w = w1;
                if (step <= s.tol * scale_of(w)) {
                    done = true;
                    break;
                }
            }
        }
    }
    out.w = w;
    d.residual = std::abs(g(w) - w);
    d.converged = done && d.residual <= std::max(s.tol * scale_of(w), 1e-14);
    out.diag = d;
    return out;
}

SquareConvValue free_conv_F(const SquareConvHandle& h, cplx z) {
    SquareConvValue v;
    const OmegaResult o = omega1(h, z);
    v.omega1 = o.w;
    v.diag = o.diag;
    v.F = h.F_nu(o.w);
    v.omega2 = z + v.F - o.w;
    return v;
}

cplx id_law_cauchy(const Measure& law, cplx z) {
    if (z.imag() < 0.0) return std::conj(id_law_cauchy(law, std::conj(z)));
    static const MeasurePtr delta0 = dirac(0.0);
    const SquareConvHandle h(non_owning(law), delta0);
    const SquareConvValue v = free_conv_F(h, z);
    if (!v.diag.converged) throw ConvergenceError("Voiculescu-transform inversion did not converge");
    if (v.F == cplx(0.0)) throw PoleError("G of the law has a pole");
    return 1.0 / v.F;
}

MeasurePtr semigroup_power(const Measure& law, double t) {
    if (!(t >= 0.0) || !std::isfinite(t)) throw DomainError("semigroup time must be >= 0");
    if (!is_square_id(law)) throw DomainError("semigroup_power needs an infinitely divisible law");
    if (t == 0.0) return square_id(0.0, nullptr);
    if (law.is<Semicircle>()) return semicircle(t * law.as<Semicircle>().variance);
    if (law.is<CauchyLaw>()) return cauchy(t * law.as<CauchyLaw>().t);
    if (law.is<FreePoisson>()) {
        const auto& f = law.as<FreePoisson>();
        return free_poisson(t * f.rate, f.jump, t * f.shift);
    }
    if (law.is<MarchenkoPastur>()) {
        const auto& mp = law.as<MarchenkoPastur>();
        return free_poisson(t / mp.ratio, mp.ratio * mp.scale, 0.0);
    }
    if (law.is<AtomicMeasure>()) return dirac(t * law.as<AtomicMeasure>().positions[0]);
    if (law.is<SquareIDLaw>()) {
        const auto& l = law.as<SquareIDLaw>();
        return square_id(t * l.gamma, l.levy, t * l.mass);
    }
    const auto& td = law.as<TransformDefined>();
    const ExprPtr scaled = Expr::binary(Expr::Kind::Mul, Expr::constant(t), td.expr);
    return transform_defined(TransformDefined::Which::Phi, scaled->to_string());
}

namespace {

struct PointResult {
    double density = 0.0;
    double error_bar = 0.0;
    PointFlag flag = PointFlag::Ok;
    SolverDiagnostics diag;
    cplx F;
    bool have_F = false;
};

PointResult ladder_point(const SquareConvHandle& h, double x) {
    PointResult p;
    p.diag.method = SolveMethod::Ladder;
    const std::vector<double> eps = default_ladder();
    std::vector<double> vals;
    bool all_conv = true;
    double worst = 0.0;
    int iters = 0;
    for (double e : eps) {
        const SquareConvValue v = free_conv_F(h, cplx(x, e));
        all_conv = all_conv && v.diag.converged;
        worst = std::max(worst, v.diag.residual);
        iters += v.diag.iterations;
        vals.push_back(-(1.0 / v.F).imag() / kPi);
    }
    const Extrapolation ex = richardson(vals, eps[1] / eps[0]);
    p.density = ex.value;
    p.error_bar = ex.error_bar;
    p.diag.iterations = iters;
    p.diag.residual = worst;
    p.diag.converged = all_conv;
    p.diag.nonmonotone = !ex.monotone;
    if (!all_conv) p.flag = PointFlag::NotConverged;
    else if (!ex.monotone || ex.error_bar > 1e-3) p.flag = PointFlag::WideErrorBar;
    return p;
}

/// Error bar of a direct solve: distance to the fixed point ~ residual / |1 - g'(w)|, times the
/// density's sensitivity to w. Near a degenerate fixed point (a cusp) this is what dominates.
double direct_error_bar(const SquareConvHandle& h, double x, cplx w, double residual) {
    const auto g = [&](cplx u) { return cplx(x, 0.0) - h.phi_mu(h.F_nu(u)); };
    const auto dens = [&](cplx u) {
        const cplx F = h.F_nu(u);
        return F.imag() / (kPi * std::norm(F));
    };
    try {
        const double s = 1e-6 * scale_of(w);
        const cplx gp = (g(w + s) - g(w - s)) / (2.0 * s);
        const double lip = std::abs(1.0 - gp);
        const double d0 = dens(w);
        const double slope = std::max(std::abs(dens(w + s) - d0), std::abs(dens(w + cplx(0.0, s)) - d0)) / s;
        const double dw = lip > 0.0 ? residual / lip : scale_of(w);
        const double bar = std::max(residual, slope * std::min(dw, scale_of(w)));
        return std::isfinite(bar) ? bar : residual;
    } catch (const Error&) {
        return residual;
    }
}

PointResult solve_point(const SquareConvHandle& h, double x) {
    try {
        const SquareConvValue v = free_conv_F(h, cplx(x, 0.0));
        if (v.diag.converged && is_finite(v.F)) {
            PointResult p;
            p.diag = v.diag;
            p.F = v.F;
            p.have_F = true;
            if (v.F == cplx(0.0)) return p;
            p.density = v.F.imag() / (kPi * std::norm(v.F));
            p.error_bar = v.diag.method == SolveMethod::Direct ? v.diag.residual
                                                                : direct_error_bar(h, x, v.omega1, v.diag.residual);
            return p;
        }
    } catch (const Error&) {
    }
    try {
        return ladder_point(h, x);
    } catch (const Error&) {
        PointResult p;
        p.flag = PointFlag::Failed;
        return p;
    }
}

std::vector<std::pair<double, double>> safe_atoms(const Measure& m) {
    try {
        return atoms_of(m);
    } catch (const Error&) {
        return {};
    }
}

}  // namespace

DensityCurve density_curve_square(const SquareConvHandle& h, const std::vector<double>& grid) {
    DensityCurve c;
    c.resize(grid.size());
    c.grid = grid;
    std::vector<PointResult> pts(grid.size());
    parallel_for(grid.size(), [&](std::size_t i) { pts[i] = solve_point(h, grid[i]); });

    auto G = [&](cplx z) {
        const SquareConvValue v = free_conv_F(h, z);
        if (!v.diag.converged) throw ConvergenceError("solver failed on the atom ladder");
        return 1.0 / v.F;
    };

    // atom candidates: b + c with mu({b}) + nu({c}) > 1, plus points where F vanishes
    std::map<double, bool> candidates;
    for (const auto& [b, p] : safe_atoms(h.mu()))
        for (const auto& [cc, q] : safe_atoms(h.nu()))
            if (p + q > 1.0) candidates[b + cc] = true;
    for (std::size_t i = 0; i < grid.size(); ++i)
        if (pts[i].have_F && std::abs(pts[i].F) < 1e-8) candidates[grid[i]] = true;
    for (const auto& [a, unused] : candidates) {
        (void)unused;
        const AtomMassEstimate am = atom_mass(G, a);
        if (am.mass > 1e-6) c.atoms.push_back({a, am.mass});
    }

    for (std::size_t i = 0; i < grid.size(); ++i) {
        c.density[i] = pts[i].density;
        c.error_bars[i] = pts[i].error_bar;
        c.flags[i] = pts[i].flag;
        c.diagnostics[i] = pts[i].diag;
        for (const auto& at : c.atoms) {
            if (std::abs(grid[i] - at.position) < 1e-12) {
                c.flags[i] = PointFlag::Atom;
                c.density[i] = 0.0;
            }
        }
    }
    finalize_curve(c);
    return c;
}

// ------------------------------------------------------------------ origin regimes

std::string to_string(OriginRegime r) {
    switch (r) {
        case OriginRegime::SmoothZero: return "SmoothZero";
        case OriginRegime::Cusp: return "Cusp";
        case OriginRegime::PositiveDensity: return "PositiveDensity";
        case OriginRegime::Inconclusive: return "Inconclusive";
    }
    return "Inconclusive";
}

namespace {

double shape_sigma(const Measure& shape) {
    if (shape.is<AtomicMeasure>()) {
        const auto& a = shape.as<AtomicMeasure>();
        double s = 0.0;
        for (std::size_t k = 0; k < a.positions.size(); ++k)
            s += a.masses[k] * (1.0 + a.positions[k] * a.positions[k]);
        return s;
    }
    if (shape.is<Mixture>()) {
        const auto& mx = shape.as<Mixture>();
        double s = 0.0;
        for (std::size_t k = 0; k < mx.parts.size(); ++k) s += mx.weights[k] * shape_sigma(*mx.parts[k]);
        return s;
    }
    if (shape.is<SymmetricBernoulli>()) {
        const double a = shape.as<SymmetricBernoulli>().a;
        return 1.0 + a * a;
    }
    if (shape.is<GridDensityMeasure>()) {
        const auto& g = shape.as<GridDensityMeasure>();
        double s = g.atom_at_zero;
        for (std::size_t k = 0; k + 1 < g.grid.size(); ++k) {
            const double t0 = g.grid[k], t1 = g.grid[k + 1];
            const double d0 = g.values[k], d1 = g.values[k + 1];
            s += integrate<double>(
                [&](double t) { return (1.0 + t * t) * (d0 + (d1 - d0) * (t - t0) / (t1 - t0)); }, t0, t1);
        }
        return s;
    }
    return -1.0;  // no closed form
}

/// lim -y Im phi(iy) as y -> inf.
double sigma_from_phi(const std::function<cplx(cplx)>& phi) {
    std::vector<double> v;
    for (int k = 2; k <= 8; ++k) {
        const double y = std::pow(10.0, k);
        v.push_back(-y * phi(cplx(0.0, y)).imag());
    }
    const double last = v.back(), prev = v[v.size() - 2];
    if (last > 1e3 * std::max(std::abs(v.front()), 1e-300) && last > 1.5 * prev) return kInf;
    if (std::abs(last - prev) <= 1e-6 * (1.0 + std::abs(last))) return last;
    if (last > 1.5 * prev) return kInf;
    return last;
}

}  // namespace

double levy_sigma_total(const Measure& law) {
    if (law.is<Semicircle>()) return law.as<Semicircle>().variance;
    if (law.is<CauchyLaw>()) return kInf;
    if (law.is<FreePoisson>()) {
        const auto& f = law.as<FreePoisson>();
        return f.rate * f.jump * f.jump;
    }
    if (law.is<MarchenkoPastur>()) {
        const auto& mp = law.as<MarchenkoPastur>();
        return mp.ratio * mp.scale * mp.scale;
    }
    if (law.is<AtomicMeasure>()) return 0.0;
    if (law.is<SquareIDLaw>()) {
        const auto& l = law.as<SquareIDLaw>();
        if (!l.levy || l.mass == 0.0) return 0.0;
        const double s = shape_sigma(*l.levy);
        if (s >= 0.0) return l.mass * s;
    }
    return sigma_from_phi([&](cplx z) { return phi_voiculescu_ID(law, z); });
}

double inverse_second_moment(const Measure& nu) {
    if (nu.is<AtomicMeasure>()) {
        const auto& a = nu.as<AtomicMeasure>();
        double s = 0.0;
        for (std::size_t k = 0; k < a.positions.size(); ++k) {
            if (a.positions[k] == 0.0) return kInf;
            s += a.masses[k] / (a.positions[k] * a.positions[k]);
        }
        return s;
    }
    if (nu.is<SymmetricBernoulli>()) {
        const double a = nu.as<SymmetricBernoulli>().a;
        return 1.0 / (a * a);
    }
    if (nu.is<Mixture>()) {
        const auto& mx = nu.as<Mixture>();
        double s = 0.0;
        for (std::size_t k = 0; k < mx.parts.size(); ++k) s += mx.weights[k] * inverse_second_moment(*mx.parts[k]);
        return s;
    }
    try {
        if (atom_mass_at(nu, 0.0) > 0.0) return kInf;
        if (density(nu, 0.0) > 0.0) return kInf;
        const auto [lo, hi] = effective_support(nu, 1e-12);
        auto f = [&](double t) { return t == 0.0 ? 0.0 : density(nu, t) / (t * t); };
        double s = 0.0;
        if (lo < 0.0) s += integrate<double>(f, lo, std::min(hi, 0.0), 1e-12, 1e-10);
        if (hi > 0.0) s += integrate<double>(f, std::max(lo, 0.0), hi, 1e-12, 1e-10);
        for (const auto& [x, w] : atoms_of(nu)) s += w / (x * x);
        return s;
    } catch (const Error&) {
        return kInf;
    }
}

OriginRegime classify_origin_regime(const Measure& mu, const Measure& nu, double tol) {
    if (!is_square_id(mu)) throw DomainError("first operand must be infinitely divisible");
    double nu0 = 0.0;
    try {
        nu0 = atom_mass_at(nu, 0.0);
    } catch (const Error&) {
    }
    const double sigma = levy_sigma_total(mu);
    if (!std::isfinite(sigma) || sigma <= 0.0) return OriginRegime::Inconclusive;
    if (nu0 > 0.0) return OriginRegime::PositiveDensity;
    const double inv = inverse_second_moment(nu);
    if (!std::isfinite(inv)) return OriginRegime::Inconclusive;
    const double crit = 1.0 / sigma;
    if (std::abs(inv - crit) <= tol * std::max(1.0, crit)) return OriginRegime::Cusp;
    if (inv < crit) return OriginRegime::SmoothZero;
    return OriginRegime::Inconclusive;
}

// ------------------------------------------------------------------ hypothesis checker

namespace {

RayProbe probe_rays(const std::function<cplx(cplx)>& f, bool at_inf, double x, int ray_count,
                    double tol) {
    RayProbe p;
    p.at_infinity = at_inf;
    p.x = x;
    for (int j = 1; j <= ray_count; ++j) p.angles.push_back(kPi * j / (ray_count + 1));
    for (double th : p.angles) {
        std::vector<cplx> s;
        const cplx dir = std::polar(1.0, th);
        for (int k = 1; k <= 8; ++k) {
            const double r = std::pow(10.0, at_inf ? k : -k);
            try {
                s.push_back(f(x + r * dir));
            } catch (const Error&) {
                s.push_back(cplx(std::nan(""), std::nan("")));
            }
        }
        const cplx last = s.back(), prev = s[s.size() - 2], prev2 = s[s.size() - 3];
        const bool finite = is_finite(last) && is_finite(prev) && is_finite(prev2);
        const double d1 = std::abs(last - prev), d0 = std::abs(prev - prev2);
        const bool diverges = finite && std::abs(last) > 1e3 && std::abs(last) > 2.0 * std::abs(prev);
        const bool conv = finite && !diverges && d1 <= std::max(tol, 1e-3) * (1.0 + std::abs(last)) &&
                          d1 <= d0 + tol;
        p.samples.push_back(s);
        p.limits.push_back(last);
        p.ray_converged.push_back(conv);
        p.ray_diverges.push_back(diverges);
    }
    const bool all_div = std::all_of(p.ray_diverges.begin(), p.ray_diverges.end(), [](bool b) { return b; });
    const bool all_conv = std::all_of(p.ray_converged.begin(), p.ray_converged.end(), [](bool b) { return b; });
    for (std::size_t a = 0; a < p.limits.size(); ++a)
        for (std::size_t b = a + 1; b < p.limits.size(); ++b)
            if (p.ray_converged[a] && p.ray_converged[b])
                p.spread = std::max(p.spread, std::abs(p.limits[a] - p.limits[b]));
    const double ltol = std::max(tol, 1e-3);
    double scale = 1.0;
    for (std::size_t a = 0; a < p.limits.size(); ++a)
        if (p.ray_converged[a]) scale = std::max(scale, std::abs(p.limits[a]));
    const bool separated = p.spread > 10.0 * ltol * scale;

    if (all_div) {
        p.verdict = at_inf ? "holds" : "undecided";
        p.via = at_inf ? "(i)" : "infinite-limit";
    } else if (separated) {
        p.verdict = "holds";
        p.via = at_inf ? "(iii)" : "no-limit";
    } else if (all_conv) {
        double im = 0.0;
        for (const auto& l : p.limits) im += l.imag();
        im /= static_cast<double>(p.limits.size());
        if (im < -ltol * scale) {
            p.verdict = "holds";
            p.via = at_inf ? "(ii)" : "C-";
        } else {
            p.verdict = "fails";
            p.via = "real-limit";
        }
    } else {
        p.verdict = "undecided";
        p.via = "unresolved";
    }
    return p;
}

std::string combine(const std::vector<std::string>& vs) {
    if (vs.empty()) return "undecided";
    if (std::find(vs.begin(), vs.end(), "fails") != vs.end()) return "fails";
    if (std::all_of(vs.begin(), vs.end(), [](const std::string& v) { return v == "holds"; }))
        return "holds";
    return "undecided";
}

}  // namespace

Thm31Report check_thm31_hypotheses(const std::function<cplx(cplx)>& f, int ray_count,
                                   const std::vector<double>& probe_grid, double tol) {
    if (ray_count < 1) ray_count = 3;
    Thm31Report rep;
    std::vector<std::string> finite_verdicts;
    for (double x : probe_grid) {
        rep.probes.push_back(probe_rays(f, false, x, ray_count, tol));
        finite_verdicts.push_back(rep.probes.back().verdict);
    }
    rep.probes.push_back(probe_rays(f, true, 0.0, ray_count, tol));
    rep.condition1 = combine(finite_verdicts);
    rep.condition2 = rep.probes.back().verdict;
    rep.verdict = combine({rep.condition1, rep.condition2});
    return rep;
}

Thm31Report check_thm31_hypotheses(const Measure& law, int ray_count,
                                   const std::vector<double>& probe_grid, double tol) {
    if (!is_square_id(law)) throw DomainError("hypothesis check needs an infinitely divisible law");
    return check_thm31_hypotheses([&](cplx z) { return phi_voiculescu_ID(law, z); }, ray_count,
                                  probe_grid, tol);
}

// ------------------------------------------------------------------ explicit construction

namespace {

double im_f_at(double a, double t, double y) { return a * y * (1.0 + t * t) / (t * t + y * y); }

double y_minus_of(double a, double t) {
    const double A = a * (1.0 + t * t);
    const double disc = A * A - 4.0 * t * t;
    if (disc < 0.0) return std::nan("");
    // smaller root of y^2 - A y + t^2, written without cancellation
    return 2.0 * t * t / (A + std::sqrt(disc));
}

}  // namespace

double Example3::im_f(std::size_t k, double y) const { return im_f_at(a[k], t[k], y); }

cplx Example3::f(std::size_t k, cplx z) const {
    const double ak = a[k], tk = t[k];
    return 0.5 * ak * (1.0 + z * tk) / (tk - z) + 0.5 * ak * (1.0 - z * tk) / (-tk - z);
}

cplx Example3::g(cplx z) const {
    cplx s = 0.0;
    for (std::size_t k = 0; k < a.size(); ++k) s += f(k, z);
    return s;
}

MeasurePtr Example3::law() const {
    double total = 0.0;
    for (double v : a) total += v;
    std::vector<std::pair<double, double>> atoms;
    for (std::size_t k = 0; k < a.size(); ++k) {
        atoms.emplace_back(-t[k], 0.5 * a[k] / total);
        atoms.emplace_back(t[k], 0.5 * a[k] / total);
    }
    return square_id(0.0, atomic(atoms), total);
}

std::vector<std::pair<std::string, bool>> Example3::verify() const {
    std::vector<std::pair<std::string, bool>> out;
    char buf[200];
    auto add = [&](bool ok, const char* fmt, std::size_t k) {
        std::snprintf(buf, sizeof buf, fmt, static_cast<int>(k + 1));
        out.emplace_back(buf, ok);
    };
    double sum_a = 0.0;
    for (std::size_t k = 0; k < a.size(); ++k) {
        sum_a += a[k];
        const double ak = a[k], tk = t[k], yk = y_minus[k];
        add(ak > 0.0 && tk > 0.0, "a_%d > 0 and t_%d > 0", k);
        // (j): formula for Im f_k(iy), nonnegative, zero at 0
        bool j_ok = im_f(k, 0.0) == 0.0;
        for (double y : {0.1 * tk, 0.5 * tk, tk, 2.0 * tk, 10.0 * tk}) {
            const double direct = f(k, cplx(0.0, y)).imag();
            j_ok = j_ok && direct >= 0.0 && std::abs(direct - im_f(k, y)) <= 1e-10 * (1.0 + direct);
        }
        add(j_ok, "(j) Im f_%d(iy) = a y (1+t^2)/(t^2+y^2) >= 0", k);
        // (jj): maximum a(1+t^2)/(2t) at y = t, increasing before, decreasing after
        const double peak = ak * (1.0 + tk * tk) / (2.0 * tk);
        bool jj_ok = std::abs(im_f(k, tk) - peak) <= 1e-12 * peak;
        double prev = 0.0;
        for (int s = 1; s <= 20; ++s) {
            const double v = im_f(k, tk * s / 20.0);
            jj_ok = jj_ok && v > prev;
            prev = v;
        }
        for (int s = 21; s <= 60; ++s) {
            const double v = im_f(k, tk * s / 20.0);
            jj_ok = jj_ok && v < prev;
            prev = v;
        }
        add(jj_ok, "(jj) max of Im f_%d(i.) is a(1+t^2)/2t at y = t", k);
        // (jjj): Im f_k(i y^-) = 1 with y^- < t, y^- < 2/a, and 1/a < y^- when a < 1
        bool jjj_ok = std::isfinite(yk) && std::abs(im_f(k, yk) - 1.0) <= 1e-9 && yk < tk && yk < 2.0 / ak;
        if (ak < 1.0) jjj_ok = jjj_ok && 1.0 / ak < yk;
        add(jjj_ok, "(jjj) Im f_%d(i y^-) = 1, y^- < 2/a (and > 1/a if a < 1)", k);
        // symmetrized form has zero real part on iR+
        add(std::abs(f(k, cplx(0.0, tk)).real()) <= 1e-12 * (1.0 + peak), "Re f_%d(iy) = 0", k);
        add(peak > static_cast<double>(k + 1), "Im f_%d(i t) > k", k);
        add(yk > 1.0 / (2.0 * ak), "y^-_%d > 1/(2a)", k);
        if (k > 0) {
            add(ak < 0.5 * a[k - 1], "0 < a_%d < a_{k-1}/2", k);
            add(im_f(k - 1, 1.0 / (2.0 * ak)) < std::pow(10.0, -static_cast<double>(k)),
                "Im f_{k-1}(i/(2a_%d)) < 10^-(k-1)", k);
            add(1.0 / (2.0 * ak) > t[k - 1], "1/(2a_%d) > t_{k-1}", k);
            add(tk > t[k - 1], "t_%d > t_{k-1}", k);
            add(yk > y_minus[k - 1], "y^-_%d increasing", k);
            double tail = 0.0, bound = 0.0;
            for (std::size_t j = 0; j < k; ++j) {
                tail += im_f(j, yk);
                bound += std::pow(10.0, -static_cast<double>(j + 1));
            }
            add(tail < bound, "sum_{j<k} Im f_j(i y^-_%d) < sum 10^-j", k);
        }
    }
    out.emplace_back("1 <= sum a_k < 2", sum_a >= 1.0 && sum_a < 2.0);
    return out;
}

Example3 example3_sequence(int n) {
    if (n < 1) throw DomainError("example3_sequence needs n >= 1");
    Example3 e;
    e.a.push_back(1.0);
    e.t.push_back(2.0);
    e.y_minus.push_back(y_minus_of(1.0, 2.0));
    for (int k = 1; k < n; ++k) {
        const double ap = e.a.back(), tp = e.t.back();
        double a = 0.25 * ap;
        const double target = std::pow(10.0, -static_cast<double>(k));
        while (!(im_f_at(ap, tp, 1.0 / (2.0 * a)) < target && 1.0 / (2.0 * a) > tp)) {
            a *= 0.5;
            if (a < 1e-150) throw ConvergenceError("no admissible a_k found");
        }
        double t = 2.0 * tp;
        auto ok_t = [&](double tt) {
            const double y = y_minus_of(a, tt);
            return a * (1.0 + tt * tt) / (2.0 * tt) > k + 1 && std::isfinite(y) && y > 1.0 / (2.0 * a) &&
                   y > e.y_minus.back();
        };
        while (!ok_t(t)) {
            t *= 2.0;
            if (t > 1e150) throw ConvergenceError("no admissible t_k found");
        }
        e.a.push_back(a);
        e.t.push_back(t);
        e.y_minus.push_back(y_minus_of(a, t));
    }
    return e;
}

}  // namespace freeconv
