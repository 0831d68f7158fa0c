#include "freeconv/rect_conv.hpp"

#include <algorithm>
#include <cmath>
#include <map>

#include "freeconv/branch.hpp"
#include "freeconv/parallel.hpp"
#include "freeconv/square_conv.hpp"

namespace freeconv {

namespace {

MeasurePtr non_owning(const Measure& m) { return MeasurePtr(MeasurePtr(), &m); }

double ratio_of(const Measure& m) {
    if (m.is<RectStable>()) return m.as<RectStable>().lambda;
    if (m.is<RectIDLaw>()) return m.as<RectIDLaw>().lambda;
    return -1.0;  // delta_0: any ratio
}

bool same_ratio(const Measure& m, double lambda) {
    const double r = ratio_of(m);
    return r < 0.0 || std::abs(r - lambda) <= 1e-12;
}

}  // namespace

// ------------------------------------------------------------------ C-transform sums

void CTransform::add(MeasurePtr law) {
    if (!law || !is_rect_id(*law))
        throw DomainError("no rectangular C-transform for " + (law ? family_name(*law) : "null"));
    if (is_delta_zero(*law)) return;
    terms_.push_back(std::move(law));
}

cplx CTransform::operator()(cplx z) const {
    cplx s = 0.0;
    for (const auto& t : terms_) s += C_transform_ID(*t, z);
    return s;
}

cplx CTransform::derivative(cplx z) const {
    const double h = 1e-7 * std::max(std::abs(z), 1e-300);
    return ((*this)(z + h) - (*this)(z - h)) / (2.0 * h);
}

MeasurePtr rect_C_sum(const MeasurePtr& mu, const MeasurePtr& nu) {
    if (!is_rect_id(*mu) || !is_rect_id(*nu)) throw DomainError("rect_C_sum needs two rectangular ID laws");
    if (is_delta_zero(*mu)) return nu;
    if (is_delta_zero(*nu)) return mu;
    const double lm = ratio_of(*mu), ln = ratio_of(*nu);
    if (std::abs(lm - ln) > 1e-12) throw DomainError("rect_C_sum: ratio mismatch");
    if (mu->is<RectStable>() && nu->is<RectStable>()) {
        const auto& a = mu->as<RectStable>();
        const auto& b = nu->as<RectStable>();
        if (a.alpha == b.alpha) return rect_stable(a.alpha, a.t + b.t, lm);
    }
    // alpha = 2 has Levy measure t delta_0
    auto as_levy = [&](const MeasurePtr& m) -> std::pair<MeasurePtr, double> {
        if (m->is<RectIDLaw>()) return {m->as<RectIDLaw>().levy, m->as<RectIDLaw>().mass};
        const auto& s = m->as<RectStable>();
        if (s.alpha == 2.0) return {dirac(0.0), s.t};
        throw DomainError("stable law with alpha < 2 has no finite Levy measure; use a CTransform sum");
    };
    const auto [sa, ma] = as_levy(mu);
    const auto [sb, mb] = as_levy(nu);
    const double total = ma + mb;
    if (sa->is<AtomicMeasure>() && sb->is<AtomicMeasure>()) {
        std::map<double, double> acc;
        for (const auto& [x, w] : atoms_of(*sa)) acc[x] += ma * w / total;
        for (const auto& [x, w] : atoms_of(*sb)) acc[x] += mb * w / total;
        return rect_id(lm, atomic({acc.begin(), acc.end()}), total);
    }
    return rect_id(lm, mixture({ma / total, mb / total}, {sa, sb}), total);
}

// ------------------------------------------------------------------ continuation engine

namespace {

/// Residual value with the magnitude of its rounding noise.
struct Eval {
    cplx r;
    double scale = 0.0;
};

using Residual = std::function<Eval(cplx w, cplx z)>;

/// Rounding scale of w - z T(c): T(c) = (lambda c + 1)(c + 1) loses accuracy near its zeros.
double chain_noise(cplx lhs, cplx z, cplx c, double lambda) {
    return std::abs(lhs) + std::abs(z) * (1.0 + lambda * std::abs(c)) * (1.0 + std::abs(c));
}

struct NewtonState {
    cplx w;
    double residual = 0.0;
    int iterations = 0;
    bool ok = false;
};

bool admissible(cplx w, cplx z) {
    if (z.imag() == 0.0) return w.imag() == 0.0 && w.real() < 0.0;
    return w.imag() > 0.0 || (w.imag() == 0.0 && w.real() < 0.0);
}

NewtonState newton(const Residual& Phi, cplx z, cplx w0) {
    NewtonState st{w0};
    const bool real_mode = z.imag() == 0.0;
    cplx w = w0;
    if (real_mode) w = cplx(std::min(w.real(), -1e-300), 0.0);
    if (!admissible(w, z)) return st;
    Eval e;
    try {
        e = Phi(w, z);
    } catch (const Error&) {
        return st;
    }
    if (!is_finite(e.r)) return st;
    cplx r = e.r;
    double rn = std::abs(r), scale = e.scale, last_step = HUGE_VAL;
    for (int k = 0; k < 60; ++k) {
        st.iterations = k + 1;
        if (rn <= 1e-14 * std::abs(w)) {
            st.ok = true;
            break;
        }
        const double h = 1e-7 * std::abs(w);
        cplx d;
        try {
            d = (Phi(w + h, z).r - Phi(w - h, z).r) / (2.0 * h);
        } catch (const Error&) {
            break;
        }
        if (d == cplx(0.0) || !is_finite(d)) break;
        cplx delta = -r / d;
        if (real_mode) delta = delta.real();
        last_step = std::abs(delta) / std::abs(w);
        // at the rounding floor of the residual: stop once the correction is negligible
        if (rn <= 1e-12 * scale && last_step <= 1e-14) {
            st.ok = true;
            break;
        }
        double lam = 1.0;
        bool accepted = false;
        cplx wn;
        Eval en;
        for (int j = 0; j < 40; ++j, lam *= 0.5) {
            wn = w + lam * delta;
            if (!admissible(wn, z)) continue;
            try {
                en = Phi(wn, z);
            } catch (const Error&) {
                continue;
            }
            if (!is_finite(en.r)) continue;
            if (std::abs(en.r) < rn || std::abs(en.r) <= 1e-12 * en.scale) {
                accepted = true;
                break;
            }
        }
        if (!accepted) break;
        const bool full = lam == 1.0;
        const double step = std::abs(wn - w);
        w = wn;
        r = en.r;
        rn = std::abs(r);
        scale = en.scale;
        if (full && step <= 1e-14 * std::abs(w)) {
            st.ok = true;
            break;
        }
    }
    st.w = w;
    st.residual = rn / scale;
    if (!st.ok) st.ok = rn <= 1e-11 * scale && last_step <= 1e-10;
    return st;
}

struct Tracked {
    cplx w;
    SolverDiagnostics diag;
};

/// Follows the solution of Phi(w, z(p)) = 0 from p0 (where w is known) to p1.
bool track(const Residual& Phi, const std::function<cplx(double)>& zpath, double p0, double p1,
           double dp0, double dp_max, Tracked& t, bool small_start = false) {
    if (p0 == p1) return true;
    const double dir = p1 > p0 ? 1.0 : -1.0;
    double p = p0, dp = dp0;
    cplx w = t.w, w_prev = t.w;
    double p_prev = p0;
    bool have_prev = false;
    while (dir * (p1 - p) > 0.0) {
        double pn = p + dir * dp;
        if (dir * (pn - p1) > 0.0) pn = p1;
        const cplx z = zpath(pn);
        cplx pred = w;
        if (have_prev) pred = w + (w - w_prev) * ((pn - p) / (p - p_prev));
        else if (small_start) pred = w * (z / zpath(p));  // H(z) ~ z near 0
        NewtonState ns = newton(Phi, z, pred);
        t.diag.iterations += ns.iterations;
        // nearby roots (double roots of T on the real axis) must not be swapped
        double jump = 0.5 * std::abs(pred);
        if (have_prev) jump = std::min(jump, std::max(std::abs(w - w_prev), 1e-10 * std::abs(w)));
        const bool close = std::abs(ns.w - pred) <= jump + 1e-300;
        if (ns.ok && close) {
            w_prev = w;
            p_prev = p;
            w = ns.w;
            p = pn;
            have_prev = true;
            t.diag.residual = ns.residual;
            dp = std::min(dp * 1.5, dp_max);
        } else {
            dp *= 0.5;
            if (dp < 1e-12 * (1.0 + std::abs(p))) {
                t.w = w;
                return false;
            }
        }
    }
    t.w = w;
    return true;
}

/// Solution at z (Im z >= 0, z not in [0, inf)) continued from z0 = -rho0 where w ~ z.
Tracked solve_from_origin(const Residual& Phi, cplx z) {
    Tracked t;
    t.diag.method = SolveMethod::Continuation;
    const double rho = std::abs(z);
    if (rho == 0.0) throw DomainError("continuation target at 0");
    double theta = std::arg(z);
    if (z.imag() == 0.0) theta = kPi;
    const double rho0 = std::min(1e-6, rho);
    const cplx z0(-rho0, 0.0);
    NewtonState ns = newton(Phi, z0, z0);
    t.diag.iterations += ns.iterations;
    if (!ns.ok) {
        t.w = ns.w;
        t.diag.converged = false;
        return t;
    }
    t.w = ns.w;
    bool ok = track(
        Phi, [&](double u) { return cplx(-std::exp(u), 0.0); }, std::log(rho0), std::log(rho), 0.5,
        1.0, t, true);
    if (ok && theta < kPi)
        ok = track(
            Phi, [&](double th) { return std::polar(rho, th); }, kPi, theta, 0.1, 0.3, t);
    t.diag.converged = ok;
    return t;
}

/// Continues a known solution at za to zb along the straight segment.
Tracked solve_segment(const Residual& Phi, cplx za, cplx wa, cplx zb) {
    Tracked t;
    t.w = wa;
    t.diag.method = SolveMethod::Continuation;
    t.diag.converged = track(
        Phi, [&](double s) { return za + s * (zb - za); }, 0.0, 1.0, 0.25, 1.0, t);
    return t;
}

Residual H_residual(const CTransform& C, const RatioParams& p) {
    return [&C, p](cplx w, cplx z) {
        const cplx c = C(w);
        return Eval{w - z * chain_T(c, p), chain_noise(w, z, c, p.lambda)};
    };
}

}  // namespace

HResult H_from_C(const CTransform& C, const RatioParams& p, cplx z) {
    if (z.imag() == 0.0 && z.real() >= 0.0) throw BranchError("H_from_C needs z outside [0, inf)");
    if (z.imag() < 0.0) {
        HResult r = H_from_C(C, p, std::conj(z));
        r.H = std::conj(r.H);
        return r;
    }
    HResult out;
    if (C.empty()) {
        out.H = z;
        out.diag = {0, 0.0, SolveMethod::Direct, true, false};
        return out;
    }
    const Residual Phi = H_residual(C, p);
    const Tracked t = solve_from_origin(Phi, z);
    out.H = t.w;
    out.diag = t.diag;
    const cplx T = chain_T(C(t.w), p);
    out.diag.residual = std::abs(t.w / T - z);
    return out;
}

cplx G_from_H(cplx H_value, cplx z, const RatioParams& p) {
    const cplx s = sqrt_upper(z);
    return s * chain_V(H_value / z, p);
}

namespace {

/// (1/sqrt z) G(1/sqrt z) from H(z), on the branch with Im >= 0 for z in C+.
cplx g_from_H(cplx H, cplx z, const RatioParams& p) {
    cplx g = chain_V(H / z, p);
    if (z.imag() > 0.0 && p.lambda > 0.0 && g.imag() < -1e-10 * (1.0 + std::abs(g)))
        g = 2.0 - g - (p.lambda + 1.0) / p.lambda;
    return g;
}

/// z' = 1/conj(w)^2 for w in the closed first quadrant (w != 0).
cplx boundary_z(cplx w) {
    const cplx wb = std::conj(w);
    return 1.0 / (wb * wb);
}

}  // namespace

cplx rect_G(const CTransform& C, const RatioParams& p, cplx w) {
    if (w.imag() <= 0.0) throw DomainError("rect_G needs w in C+");
    if (w.real() < 0.0) return -std::conj(rect_G(C, p, -std::conj(w)));
    const cplx zp = boundary_z(w);
    const HResult h = H_from_C(C, p, zp);
    if (!h.diag.converged) throw ConvergenceError("H continuation failed");
    return std::conj(g_from_H(h.H, zp, p)) / w;
}

cplx rect_law_cauchy(const Measure& law, double lambda, cplx w) {
    if (w.imag() == 0.0) throw DomainError("rectangular Cauchy transform needs a non-real point");
    const RatioParams p(lambda);
    const CTransform C(non_owning(law));
    if (w.imag() < 0.0) return std::conj(rect_G(C, p, std::conj(w)));
    return rect_G(C, p, w);
}

// ------------------------------------------------------------------ handle

RectConvHandle::RectConvHandle(MeasurePtr mu, MeasurePtr nu, double lambda, SolverSettings settings)
    : mu_(std::move(mu)), nu_(std::move(nu)), p_(lambda), settings_(settings) {
    if (!mu_ || !nu_) throw DomainError("rectangular convolution needs two measures");
    if (!is_rect_id(*mu_))
        throw DomainError("first operand must be rectangular infinitely divisible, got " + family_name(*mu_));
    if (!same_ratio(*mu_, lambda)) throw DomainError("ratio of the first operand differs from lambda");
    if (!is_symmetric(*nu_, 1e-9)) throw DomainError("second operand must be symmetric");
    c_mu_ = CTransform(mu_);
    nu_id_ = is_rect_id(*nu_) && same_ratio(*nu_, lambda);
    if (nu_id_) {
        sum_ = c_mu_;
        sum_.add(nu_);
    }
}

namespace {

Residual omega_residual(const RectConvHandle& h) {
    return [&h](cplx w, cplx z) {
        const cplx M = M_transform(h.nu(), w);
        const cplx Hn = w * chain_T(M, h.params());
        const cplx c = h.C_mu()(Hn) + M;
        return Eval{Hn - z * chain_T(c, h.params()), chain_noise(Hn, z, c, h.lambda())};
    };
}

cplx H_nu_of(const RectConvHandle& h, cplx w) { return w * chain_T(M_transform(h.nu(), w), h.params()); }

/// Path residual and the map from its solution to H of the convolution.
struct Route {
    Residual Phi;
    std::function<cplx(cplx)> to_H;
};

Route route_of(const RectConvHandle& h) {
    if (h.nu_is_id()) return {H_residual(h.summed_C(), h.params()), [](cplx w) { return w; }};
    return {omega_residual(h), [&h](cplx w) { return H_nu_of(h, w); }};
}

}  // namespace

HResult RectConvHandle::H(cplx z) const {
    if (z.imag() == 0.0 && z.real() >= 0.0) throw BranchError("H needs z outside [0, inf)");
    if (z.imag() < 0.0) {
        HResult r = H(std::conj(z));
        r.H = std::conj(r.H);
        return r;
    }
    if (is_delta_zero(*mu_)) {
        HResult r;
        r.H = H_transform(*nu_, p_, z);
        r.diag = {0, 0.0, SolveMethod::Direct, true, false};
        return r;
    }
    if (nu_id_) return H_from_C(sum_, p_, z);
    const Omega2Result o = omega2_general(*this, z);
    return {o.H, o.diag};
}

cplx RectConvHandle::G(cplx w) const {
    if (w.imag() <= 0.0) throw DomainError("G needs w in C+");
    if (w.real() < 0.0) return -std::conj(G(-std::conj(w)));
    const cplx zp = boundary_z(w);
    const HResult h = H(zp);
    if (!h.diag.converged) throw ConvergenceError("H continuation failed");
    return std::conj(g_from_H(h.H, zp, p_)) / w;
}

Omega2Result omega2_general(const RectConvHandle& h, cplx z) {
    if (z.imag() == 0.0 && z.real() >= 0.0) throw BranchError("omega2 needs z outside [0, inf)");
    if (z.imag() < 0.0) {
        Omega2Result r = omega2_general(h, std::conj(z));
        r.omega = std::conj(r.omega);
        r.H = std::conj(r.H);
        return r;
    }
    Omega2Result out;
    if (h.C_mu().empty()) {
        out.omega = z;
        out.H = H_nu_of(h, z);
        out.diag = {0, 0.0, SolveMethod::Direct, true, false};
        return out;
    }
    const Residual Phi = omega_residual(h);
    const Tracked t = solve_from_origin(Phi, z);
    out.omega = t.w;
    out.diag = t.diag;
    out.H = H_nu_of(h, t.w);
    const cplx den = chain_T(h.C_mu()(out.H) + M_transform(h.nu(), t.w), h.params());
    out.diag.residual = std::abs(out.H / den - z);
    return out;
}

// ------------------------------------------------------------------ densities

std::pair<double, double> rect_density_at(const RectConvHandle& h, double x, SolverDiagnostics* diag) {
    const double ax = std::abs(x);
    const std::vector<double> eps = default_ladder();
    SolverDiagnostics d;
    d.method = SolveMethod::Ladder;
    d.converged = true;
    std::vector<double> vals;
    if (is_delta_zero(h.mu()) && !h.nu_is_id()) {
        // mu = delta_0: the result is nu itself
        for (double e : eps) vals.push_back(-cauchy_transform(h.nu(), cplx(ax, e)).imag() / kPi);
    } else {
        const Route r = route_of(h);
        Tracked t;
            for (std::size_t k = 0; k < eps.size(); ++k) {
            const cplx w(ax, eps[k]);
            const cplx zp = boundary_z(w);
            t = solve_from_origin(r.Phi, zp);
            d.iterations += t.diag.iterations;
            d.residual = std::max(d.residual, t.diag.residual);
            if (!t.diag.converged) {
                d.converged = false;
                if (diag) *diag = d;
                throw ConvergenceError("continuation failed on the eps ladder");
            }
            const cplx G = std::conj(g_from_H(r.to_H(t.w), zp, h.params())) / w;
            vals.push_back(-G.imag() / kPi);
        }
    }
    const Extrapolation ex = richardson(vals, eps[1] / eps[0]);
    d.nonmonotone = !ex.monotone;
    if (diag) *diag = d;
    return {ex.value, ex.error_bar};
}

DensityCurve rect_density_curve(const RectConvHandle& h, const std::vector<double>& grid) {
    DensityCurve c;
    c.resize(grid.size());
    c.grid = grid;
    std::map<double, std::size_t> uniq;
    for (double x : grid) uniq.emplace(std::abs(x), 0);
    std::vector<double> xs;
    for (auto& [x, idx] : uniq) {
        idx = xs.size();
        xs.push_back(x);
    }
    struct Cell {
        double d = 0.0, e = 0.0;
        SolverDiagnostics diag;
        PointFlag flag = PointFlag::Ok;
    };
    std::vector<Cell> cells(xs.size());
    parallel_for(xs.size(), [&](std::size_t i) {
        Cell& cell = cells[i];
        try {
            const auto [d, e] = rect_density_at(h, xs[i], &cell.diag);
            cell.d = d;
            cell.e = e;
            if (cell.diag.nonmonotone || e > 1e-3) cell.flag = PointFlag::WideErrorBar;
        } catch (const Error&) {
            cell.flag = PointFlag::Failed;
            cell.diag.converged = false;
        }
    });
    const AtomAtZero a0 = atom_at_zero(h);
    if (a0.mass > 1e-6) c.atoms.push_back({0.0, a0.mass});
    for (std::size_t i = 0; i < grid.size(); ++i) {
        const Cell& cell = cells[uniq[std::abs(grid[i])]];
        c.density[i] = cell.d;
        c.error_bars[i] = cell.e;
        c.flags[i] = cell.flag;
        c.diagnostics[i] = cell.diag;
        if (grid[i] == 0.0 && a0.mass > 1e-6) {
            c.flags[i] = PointFlag::Atom;
            c.density[i] = 0.0;
        }
    }
    finalize_curve(c);
    return c;
}

// ------------------------------------------------------------------ atom at the origin

namespace {

AtomAtZero from_limit(const std::vector<cplx>& ladder) {
    AtomAtZero a;
    a.ladder = ladder;
    const std::size_t n = ladder.size();
    const cplx last = ladder[n - 1], prev = ladder[n - 2];
    const cplx L = (10.0 * last - prev) / 9.0;  // error O(1/|w|)
    a.limit = L.real();
    a.converged = is_finite(L) && std::abs(L - last) < 1e-3;
    if (a.limit > -1.0 && a.limit <= 1e-9) a.mass = std::clamp(1.0 + a.limit, 0.0, 1.0);
    return a;
}

double known_atom_at_origin(const Measure& m) {
    if (is_rect_id(m)) {
        const AtomAtZero a = atom_at_zero(CTransform(non_owning(m)));
        return a.converged ? a.mass : -1.0;
    }
    try {
        return atom_mass_at(m, 0.0);
    } catch (const Error&) {
        return -1.0;
    }
}

}  // namespace

AtomAtZero atom_at_zero(const CTransform& C) {
    if (C.empty()) {
        AtomAtZero a;
        a.mass = 1.0;
        a.converged = true;
        return a;
    }
    std::vector<cplx> ladder;
    for (int k = 2; k <= 8; ++k) ladder.push_back(C(cplx(-std::pow(10.0, k), 0.0)));
    return from_limit(ladder);
}

AtomAtZero atom_at_zero(const RectConvHandle& h) {
    AtomAtZero a;
    if (h.nu_is_id()) {
        a = atom_at_zero(h.summed_C());
    } else {
        // M of the convolution along the subordination: M = C_mu(H_nu(omega)) + M_nu(omega)
        const Residual Phi = omega_residual(h);
        std::vector<cplx> ladder;
        Tracked t;
        cplx zprev;
        bool ok = true;
        for (int k = 2; k <= 8 && ok; ++k) {
            const cplx z(-std::pow(10.0, k), 0.0);
            if (h.C_mu().empty()) {
                t.w = z;
                t.diag.converged = true;
            } else {
                t = k == 2 ? solve_from_origin(Phi, z) : solve_segment(Phi, zprev, t.w, z);
            }
            ok = t.diag.converged;
            zprev = z;
            const cplx M = M_transform(h.nu(), t.w);
            ladder.push_back(h.C_mu()(t.w * chain_T(M, h.params())) + M);
        }
        if (ok) {
            a = from_limit(ladder);
        } else {
            a.ladder = ladder;
            a.converged = false;
        }
    }
    const double m0 = known_atom_at_origin(h.mu()), n0 = known_atom_at_origin(h.nu());
    if (m0 >= 0.0 && n0 >= 0.0) a.cross_check = std::max(0.0, m0 + n0 - 1.0);
    return a;
}

// ------------------------------------------------------------------ hole detection

HoleReport hole_detect(const RectConvHandle& h, double resolution, double threshold) {
    HoleReport rep;
    const AtomAtZero a0 = atom_at_zero(h);
    rep.atom_at_zero = a0.mass;
    auto dens = [&](double x) {
        const double d = rect_density_at(h, x).first;
        rep.scan.emplace_back(x, d);
        return d;
    };
    try {
        for (int refine = 0; refine < 4; ++refine, resolution /= 10.0) {
            int below = 0;
            double last_below = 0.0;
            for (int j = 1; j <= 20000; ++j) {
                const double x = resolution * j;
                if (dens(x) > threshold) {
                    if (below >= 3) {
                        double lo = last_below, hi = x;
                        while (hi - lo > 1e-7 * (1.0 + hi)) {
                            const double mid = 0.5 * (lo + hi);
                            (dens(mid) > threshold ? hi : lo) = mid;
                        }
                        rep.has_hole = true;
                        rep.hole_radius_estimate = lo;
                        return rep;
                    }
                    break;
                }
                ++below;
                last_below = x;
            }
            if (below >= 20000) {
                rep.decided = false;  // nothing found on the scan range
                return rep;
            }
        }
    } catch (const Error&) {
        rep.decided = false;
    }
    return rep;
}

// ------------------------------------------------------------------ lambda reductions

namespace {

MeasurePtr square_equivalent(const MeasurePtr& m) {
    if (m->is<RectStable>()) {
        const auto& s = m->as<RectStable>();
        if (s.alpha == 2.0) return semicircle(s.t);
        if (s.alpha == 1.0) return cauchy(s.t);
        return nullptr;
    }
    if (m->is<RectIDLaw>()) {
        const auto& r = m->as<RectIDLaw>();
        return square_id(0.0, r.levy, r.levy ? r.mass : 0.0);
    }
    return m;
}

/// Square ID law of the push-forward by t -> t^2 of a rectangular ID law with atomic Levy shape.
MeasurePtr pushed_square_id(const MeasurePtr& m) {
    if (is_delta_zero(*m)) return dirac(0.0);
    if (!m->is<RectIDLaw>()) return nullptr;
    const auto& r = m->as<RectIDLaw>();
    if (!r.levy || r.mass == 0.0) return dirac(0.0);
    if (!r.levy->is<AtomicMeasure>() && !r.levy->is<SymmetricBernoulli>()) return nullptr;
    // phi(w) = mass int (1+u) w/(w-u) dS(u), u = t^2, rewritten as gamma + int (1+uw)/(w-u) dG
    std::map<double, double> g;
    double gamma = 0.0;
    for (const auto& [t, s] : atoms_of(*r.levy)) {
        const double u = t * t, wgt = r.mass * s;
        gamma += wgt * (1.0 + u);
        const double gu = wgt * u * (1.0 + u) / (1.0 + u * u);
        if (gu > 0.0) g[u] += gu;
        gamma -= gu * u;
    }
    double total = 0.0;
    for (const auto& [u, w] : g) total += w;
    if (total == 0.0) return square_id(gamma, nullptr);
    std::vector<std::pair<double, double>> atoms;
    for (const auto& [u, w] : g) atoms.emplace_back(u, w / total);
    return square_id(gamma, atomic(atoms), total);
}

}  // namespace

ReductionReport lambda_reductions_check(const MeasurePtr& m1, const MeasurePtr& m2, double lambda,
                                        const std::vector<double>& grid, double tol) {
    ReductionReport rep;
    rep.lambda = lambda;
    rep.grid = grid;
    if (lambda == 1.0) {
        const MeasurePtr sq1 = square_equivalent(m1), sq2 = square_equivalent(m2);
        if (!sq1 || !sq2 || !is_square_id(*sq1) || !is_rect_id(*m1) || !same_ratio(*m1, 1.0)) {
            rep.note = "operands have no square counterpart at ratio 1";
            return rep;
        }
        rep.compatible = true;
        const RectConvHandle rh(m1, m2, 1.0);
        const SquareConvHandle sh(sq1, sq2);
        const DensityCurve rc = rect_density_curve(rh, grid);
        const DensityCurve sc = density_curve_square(sh, grid);
        rep.rect_density = rc.density;
        rep.square_density = sc.density;
    } else if (lambda == 0.0) {
        const MeasurePtr r1 = pushed_square_id(m1);
        const MeasurePtr r2 = is_rect_id(*m2) ? pushed_square_id(m2) : nullptr;
        if (!r1 || !r2) {
            rep.note = "push-forwards not tractable (need ID operands with atomic Levy shapes)";
            return rep;
        }
        rep.compatible = true;
        // rectangular chain at ratio 0 on C-transform sums, density of the push-forward at y = x^2
        const RatioParams p0(0.0);
        CTransform C(m1);
        C.add(m2);
        const SquareConvHandle sh(r1, r2);
        std::vector<double> ys;
        for (double x : grid) ys.push_back(x * x);
        const DensityCurve sc = density_curve_square(sh, ys);
        for (std::size_t i = 0; i < grid.size(); ++i) {
            const double x = std::abs(grid[i]);
            double d = 0.0;
            if (x > 0.0) {
                const std::vector<double> eps = default_ladder();
                std::vector<double> vals;
                for (double e : eps) {
                    vals.push_back(-rect_G(C, p0, cplx(x, e)).imag() / kPi);
                }
                d = richardson(vals, eps[1] / eps[0]).value / x;  // push-forward density
            }
            rep.rect_density.push_back(d);
        }
        rep.square_density = sc.density;
    } else {
        rep.note = "lambda must be 0 or 1";
        return rep;
    }
    for (std::size_t i = 0; i < grid.size(); ++i)
        rep.max_abs_diff = std::max(rep.max_abs_diff, std::abs(rep.rect_density[i] - rep.square_density[i]));
    rep.agree = rep.max_abs_diff <= tol;
    return rep;
}

}  // namespace freeconv
