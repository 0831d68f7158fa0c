#include "freeconv/measures.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <numeric>
#include <type_traits>

#include "freeconv/quadrature.hpp"
#include "freeconv/rect_conv.hpp"
#include "freeconv/square_conv.hpp"

namespace freeconv {

namespace {

template <class... Ts>
struct overloaded : Ts... {
    using Ts::operator()...;
};
template <class... Ts>
overloaded(Ts...) -> overloaded<Ts...>;

void require(bool ok, const std::string& msg) {
    if (!ok) throw DomainError(msg);
}

double trapezoid_mass(const GridDensityMeasure& g) {
    double s = 0.0;
    for (std::size_t k = 0; k + 1 < g.grid.size(); ++k)
        s += 0.5 * (g.grid[k + 1] - g.grid[k]) * (g.values[k] + g.values[k + 1]);
    return s;
}

}  // namespace

// ------------------------------------------------------------------ constructors

void validate(const Measure& m) {
    std::visit(
        overloaded{
            [](const AtomicMeasure& a) {
                require(!a.positions.empty(), "atomic measure needs at least one atom");
                require(a.positions.size() == a.masses.size(), "atomic measure size mismatch");
                double total = 0.0;
                for (std::size_t k = 0; k < a.masses.size(); ++k) {
                    require(std::isfinite(a.positions[k]), "atom position must be finite");
                    require(a.masses[k] > 0.0 && a.masses[k] <= 1.0 + 1e-12,
                            "atom masses must lie in (0, 1]");
                    if (k > 0)
                        require(a.positions[k] > a.positions[k - 1],
                                "atom positions must be strictly increasing");
                    total += a.masses[k];
                }
                require(std::abs(total - 1.0) <= 1e-12, "atom masses must sum to 1");
            },
            [](const GridDensityMeasure& g) {
                require(g.grid.size() >= 2 && g.grid.size() == g.values.size(),
                        "grid measure needs matching abscissae and values (at least 2)");
                for (std::size_t k = 0; k < g.grid.size(); ++k) {
                    require(std::isfinite(g.grid[k]) && std::isfinite(g.values[k]),
                            "grid entries must be finite");
                    require(g.values[k] >= 0.0, "grid density must be nonnegative");
                    if (k > 0) require(g.grid[k] > g.grid[k - 1], "grid must be strictly increasing");
                }
                require(g.atom_at_zero >= 0.0 && g.atom_at_zero < 1.0, "atom_at_zero must lie in [0, 1)");
                require(std::abs(trapezoid_mass(g) + g.atom_at_zero - 1.0) <= 1e-6,
                        "grid density plus atom must integrate to 1");
            },
            [](const Semicircle& s) { require(s.variance > 0.0, "semicircle variance must be > 0"); },
            [](const CauchyLaw& c) { require(c.t > 0.0, "Cauchy scale must be > 0"); },
            [](const SymmetricBernoulli& b) { require(b.a > 0.0, "Bernoulli a must be > 0"); },
            [](const FreePoisson& f) {
                require(f.rate > 0.0 && f.jump > 0.0, "free Poisson rate and jump must be > 0");
                require(std::isfinite(f.shift), "free Poisson shift must be finite");
            },
            [](const Arcsine& a) { require(a.radius > 0.0, "arcsine radius must be > 0"); },
            [](const MarchenkoPastur& m) {
                require(m.ratio > 0.0 && m.scale > 0.0, "Marchenko-Pastur ratio and scale must be > 0");
            },
            [](const RectStable& r) {
                require(r.alpha > 0.0 && r.alpha <= 2.0, "stable index must lie in (0, 2]");
                require(r.t > 0.0, "stable power t must be > 0");
                require(r.lambda > 0.0 && r.lambda <= 1.0, "ratio lambda must lie in (0, 1]");
            },
            [](const SquareIDLaw& s) {
                require(std::isfinite(s.gamma), "gamma must be finite");
                require(s.mass >= 0.0 && std::isfinite(s.mass), "Levy mass must be finite and >= 0");
                if (s.levy) validate(*s.levy);
            },
            [](const RectIDLaw& r) {
                // ratio 0 is the square push-forward limit, kept for the reduction check
                require(r.lambda >= 0.0 && r.lambda <= 1.0, "ratio lambda must lie in [0, 1]");
                require(r.mass >= 0.0 && std::isfinite(r.mass), "Levy mass must be finite and >= 0");
                if (r.levy) {
                    validate(*r.levy);
                    require(is_symmetric(*r.levy, 1e-9), "rectangular Levy measure must be symmetric");
                }
            },
            [](const TransformDefined& t) { require(t.expr != nullptr, "missing expression"); },
            [](const Mixture& mx) {
                require(!mx.parts.empty() && mx.parts.size() == mx.weights.size(),
                        "mixture needs matching weights and parts");
                double total = 0.0;
                for (std::size_t k = 0; k < mx.parts.size(); ++k) {
                    require(mx.weights[k] > 0.0, "mixture weights must be > 0");
                    require(mx.parts[k] != nullptr, "null mixture part");
                    validate(*mx.parts[k]);
                    total += mx.weights[k];
                }
                require(std::abs(total - 1.0) <= 1e-12, "mixture weights must sum to 1");
            },
        },
        m.v);
}

namespace {

template <class T>
MeasurePtr checked(T law) {
    MeasurePtr p = make_measure(std::move(law));
    validate(*p);
    return p;
}

}  // namespace

MeasurePtr atomic(std::vector<std::pair<double, double>> atoms) {
    std::sort(atoms.begin(), atoms.end());
    AtomicMeasure a;
    for (const auto& [x, w] : atoms) {
        a.positions.push_back(x);
        a.masses.push_back(w);
    }
    return checked(std::move(a));
}

MeasurePtr dirac(double a) { return atomic({{a, 1.0}}); }

MeasurePtr grid_density(std::vector<double> grid, std::vector<double> values, double atom_at_zero) {
    return checked(GridDensityMeasure{std::move(grid), std::move(values), atom_at_zero});
}

MeasurePtr semicircle(double v) { return checked(Semicircle{v}); }
MeasurePtr cauchy(double t) { return checked(CauchyLaw{t}); }
MeasurePtr bernoulli(double a) { return checked(SymmetricBernoulli{a}); }
MeasurePtr free_poisson(double rate, double jump, double shift) {
    return checked(FreePoisson{rate, jump, shift});
}
MeasurePtr arcsine(double r) { return checked(Arcsine{r}); }
MeasurePtr marchenko_pastur(double ratio, double scale) {
    return checked(MarchenkoPastur{ratio, scale});
}
MeasurePtr rect_stable(double alpha, double t, double lambda) {
    return checked(RectStable{alpha, t, lambda});
}
MeasurePtr square_id(double gamma, MeasurePtr levy, double mass) {
    return checked(SquareIDLaw{gamma, std::move(levy), mass});
}
MeasurePtr rect_id(double lambda, MeasurePtr levy, double mass) {
    return checked(RectIDLaw{lambda, std::move(levy), mass});
}
MeasurePtr mixture(std::vector<double> weights, std::vector<MeasurePtr> parts) {
    return checked(Mixture{std::move(weights), std::move(parts)});
}

MeasurePtr transform_defined(TransformDefined::Which which, std::string_view text) {
    TransformDefined t;
    t.which = which;
    t.expr = parse_expression(text);
    // probe grid in C+; failures are recorded, not fatal
    for (double re : {-3.0, -1.0, -0.3, 0.0, 0.4, 1.5, 4.0}) {
        for (double im : {0.05, 0.5, 2.0, 20.0}) {
            const cplx z(re, im);
            try {
                const cplx v = t.expr->evaluate(z);
                if (!is_finite(v)) {
                    t.warnings.push_back("non-finite value on probe grid");
                } else if (which == TransformDefined::Which::F && v.imag() < -1e-12) {
                    t.warnings.push_back("Im F < 0 on probe grid");
                } else if (which == TransformDefined::Which::G && v.imag() > 1e-12) {
                    t.warnings.push_back("Im G > 0 on probe grid");
                } else if (which == TransformDefined::Which::Phi && v.imag() > 1e-12) {
                    t.warnings.push_back("Im phi > 0 on probe grid");
                }
            } catch (const Error& e) {
                t.warnings.push_back(std::string("probe evaluation failed: ") + e.what());
            }
        }
    }
    if (which == TransformDefined::Which::F) {
        const double y = 1e6;
        try {
            const cplx ratio = t.expr->evaluate(cplx(0.0, y)) / cplx(0.0, y);
            if (std::abs(ratio - 1.0) > 1e-3) t.warnings.push_back("F(iy)/(iy) does not tend to 1");
        } catch (const Error&) {
            t.warnings.push_back("F not evaluable at large iy");
        }
    }
    std::sort(t.warnings.begin(), t.warnings.end());
    t.warnings.erase(std::unique(t.warnings.begin(), t.warnings.end()), t.warnings.end());
    return make_measure(std::move(t));
}

// ------------------------------------------------------------------ classification

std::string family_name(const Measure& m) {
    return std::visit(overloaded{
                          [](const AtomicMeasure&) { return std::string("atomic"); },
                          [](const GridDensityMeasure&) { return std::string("grid"); },
                          [](const Semicircle&) { return std::string("semicircle"); },
                          [](const CauchyLaw&) { return std::string("cauchy"); },
                          [](const SymmetricBernoulli&) { return std::string("bernoulli"); },
                          [](const FreePoisson&) { return std::string("free_poisson"); },
                          [](const Arcsine&) { return std::string("arcsine"); },
                          [](const MarchenkoPastur&) { return std::string("marchenko_pastur"); },
                          [](const RectStable&) { return std::string("rect_stable"); },
                          [](const SquareIDLaw&) { return std::string("square_id"); },
                          [](const RectIDLaw&) { return std::string("rect_id"); },
                          [](const TransformDefined&) { return std::string("transform"); },
                          [](const Mixture&) { return std::string("mixture"); },
                      },
                      m.v);
}

bool is_square_id(const Measure& m) {
    if (m.is<Semicircle>() || m.is<CauchyLaw>() || m.is<FreePoisson>() ||
        m.is<MarchenkoPastur>() || m.is<SquareIDLaw>())
        return true;
    if (m.is<AtomicMeasure>()) return m.as<AtomicMeasure>().positions.size() == 1;
    if (m.is<TransformDefined>()) return m.as<TransformDefined>().which == TransformDefined::Which::Phi;
    return false;
}

bool is_rect_id(const Measure& m) {
    return m.is<RectIDLaw>() || m.is<RectStable>() || is_delta_zero(m);
}

bool is_delta_zero(const Measure& m) {
    if (m.is<AtomicMeasure>()) {
        const auto& a = m.as<AtomicMeasure>();
        return a.positions.size() == 1 && a.positions[0] == 0.0;
    }
    if (m.is<RectIDLaw>()) {
        const auto& r = m.as<RectIDLaw>();
        return !r.levy || r.mass == 0.0;
    }
    if (m.is<SquareIDLaw>()) {
        const auto& s = m.as<SquareIDLaw>();
        return (!s.levy || s.mass == 0.0) && s.gamma == 0.0;
    }
    return false;
}

bool is_symmetric(const Measure& m, double tol) {
    return std::visit(
        overloaded{
            [&](const AtomicMeasure& a) {
                const std::size_t n = a.positions.size();
                for (std::size_t k = 0; k < n; ++k) {
                    if (std::abs(a.positions[k] + a.positions[n - 1 - k]) > tol) return false;
                    if (std::abs(a.masses[k] - a.masses[n - 1 - k]) > tol) return false;
                }
                return true;
            },
            [&](const GridDensityMeasure& g) {
                const std::size_t n = g.grid.size();
                for (std::size_t k = 0; k < n; ++k) {
                    if (std::abs(g.grid[k] + g.grid[n - 1 - k]) > tol * (1.0 + std::abs(g.grid[k])))
                        return false;
                    if (std::abs(g.values[k] - g.values[n - 1 - k]) >
                        tol * (1.0 + std::abs(g.values[k])))
                        return false;
                }
                return true;
            },
            [](const Semicircle&) { return true; },
            [](const CauchyLaw&) { return true; },
            [](const SymmetricBernoulli&) { return true; },
            [](const FreePoisson&) { return false; },
            [](const Arcsine&) { return true; },
            [](const MarchenkoPastur&) { return false; },
            [](const RectStable&) { return true; },
            [&](const SquareIDLaw& s) {
                if (!s.levy || s.mass == 0.0) return s.gamma == 0.0;
                return s.gamma == 0.0 && is_symmetric(*s.levy, tol);
            },
            [](const RectIDLaw&) { return true; },
            [](const TransformDefined&) { return false; },
            [&](const Mixture& mx) {
                for (const auto& p : mx.parts)
                    if (!is_symmetric(*p, tol)) return false;
                return true;
            },
        },
        m.v);
}

double total_mass(const Measure& m) {
    if (m.is<AtomicMeasure>()) {
        const auto& a = m.as<AtomicMeasure>();
        return std::accumulate(a.masses.begin(), a.masses.end(), 0.0);
    }
    if (m.is<GridDensityMeasure>()) {
        const auto& g = m.as<GridDensityMeasure>();
        return trapezoid_mass(g) + g.atom_at_zero;
    }
    if (m.is<Mixture>()) {
        const auto& mx = m.as<Mixture>();
        double s = 0.0;
        for (std::size_t k = 0; k < mx.parts.size(); ++k) s += mx.weights[k] * total_mass(*mx.parts[k]);
        return s;
    }
    return 1.0;
}

double atom_mass_at(const Measure& m, double x) {
    return std::visit(
        overloaded{
            [&](const AtomicMeasure& a) {
                for (std::size_t k = 0; k < a.positions.size(); ++k)
                    if (a.positions[k] == x) return a.masses[k];
                return 0.0;
            },
            [&](const GridDensityMeasure& g) { return x == 0.0 ? g.atom_at_zero : 0.0; },
            [&](const SymmetricBernoulli& b) { return (x == b.a || x == -b.a) ? 0.5 : 0.0; },
            [&](const FreePoisson& f) {
                return (x == f.shift && f.rate < 1.0) ? 1.0 - f.rate : 0.0;
            },
            [&](const MarchenkoPastur& mp) {
                return (x == 0.0 && mp.ratio > 1.0) ? 1.0 - 1.0 / mp.ratio : 0.0;
            },
            [](const Semicircle&) { return 0.0; },
            [](const CauchyLaw&) { return 0.0; },
            [](const Arcsine&) { return 0.0; },
            [](const RectStable&) { return 0.0; },
            [&](const Mixture& mx) {
                double s = 0.0;
                for (std::size_t k = 0; k < mx.parts.size(); ++k)
                    s += mx.weights[k] * atom_mass_at(*mx.parts[k], x);
                return s;
            },
            [&](const auto&) -> double {
                throw DomainError("atom mass of " + family_name(m) + " needs a solver");
            },
        },
        m.v);
}

double atom_at_origin(const Measure& m) {
    if (is_delta_zero(m)) return 1.0;
    return atom_mass_at(m, 0.0);
}

std::vector<std::pair<double, double>> atoms_of(const Measure& m) {
    std::vector<std::pair<double, double>> out;
    std::visit(overloaded{
                   [&](const AtomicMeasure& a) {
                       for (std::size_t k = 0; k < a.positions.size(); ++k)
                           out.emplace_back(a.positions[k], a.masses[k]);
                   },
                   [&](const GridDensityMeasure& g) {
                       if (g.atom_at_zero > 0.0) out.emplace_back(0.0, g.atom_at_zero);
                   },
                   [&](const SymmetricBernoulli& b) {
                       out.emplace_back(-b.a, 0.5);
                       out.emplace_back(b.a, 0.5);
                   },
                   [&](const FreePoisson& f) {
                       if (f.rate < 1.0) out.emplace_back(f.shift, 1.0 - f.rate);
                   },
                   [&](const MarchenkoPastur& mp) {
                       if (mp.ratio > 1.0) out.emplace_back(0.0, 1.0 - 1.0 / mp.ratio);
                   },
                   [&](const Mixture& mx) {
                       std::map<double, double> acc;
                       for (std::size_t k = 0; k < mx.parts.size(); ++k)
                           for (const auto& [x, w] : atoms_of(*mx.parts[k])) acc[x] += mx.weights[k] * w;
                       for (const auto& [x, w] : acc) out.emplace_back(x, w);
                   },
                   [&](const auto&) {},
               },
               m.v);
    return out;
}

// ------------------------------------------------------------------ Cauchy transforms

namespace {

/// Cancellation-free G for a law with density on [a, b]: 2 / (B + sqrt(z-a) sqrt(z-b)).
cplx two_edge(cplx B, cplx zp, double a, double b) {
    return 2.0 / (B + std::sqrt(zp - a) * std::sqrt(zp - b));
}

cplx free_poisson_G(double k, double s, double shift, cplx z) {
    const cplx zp = z - shift;
    const double a = s * (1.0 - std::sqrt(k)) * (1.0 - std::sqrt(k));
    const double b = s * (1.0 + std::sqrt(k)) * (1.0 + std::sqrt(k));
    const cplx den = zp + s - k * s + std::sqrt(zp - a) * std::sqrt(zp - b);
    if (den == cplx(0.0)) throw PoleError("free Poisson atom");
    return 2.0 / den;
}

cplx log_ratio(cplx num, cplx den) {
    const cplx q = (num - den) / den;  // num/den - 1
    if (std::abs(q) < 1e-3) {
        // log1p series
        cplx term = q, sum = 0.0;
        for (int n = 1; n < 12; ++n) {
            sum += (n % 2 ? 1.0 : -1.0) * term / static_cast<double>(n);
            term *= q;
        }
        return sum;
    }
    return std::log(num / den);
}

cplx grid_G(const GridDensityMeasure& g, cplx z) {
    const double lo = g.grid.front(), hi = g.grid.back();
    const double dist = z.real() < lo ? lo - z.real() : (z.real() > hi ? z.real() - hi : 0.0);
    if (std::abs(z.imag()) < 1e-8 && dist < 1e-8)
        throw DomainError("grid Cauchy transform too close to the real axis");
    cplx sum = 0.0;
    for (std::size_t k = 0; k + 1 < g.grid.size(); ++k) {
        const double t0 = g.grid[k], t1 = g.grid[k + 1], h = t1 - t0;
        const double d0 = g.values[k], d1 = g.values[k + 1];
        if (d0 == 0.0 && d1 == 0.0) continue;
        const double tm = 0.5 * (t0 + t1);
        if (std::abs(z - tm) > 4.0 * h) {
            cplx s = 0.0;
            for (int j = 0; j < 4; ++j) {
                for (int sg : {-1, 1}) {
                    const double t = tm + sg * 0.5 * h * gl8::x[j];
                    const double d = d0 + (d1 - d0) * (t - t0) / h;
                    s += gl8::w[j] * d / (z - t);
                }
            }
            sum += 0.5 * h * s;
        } else {
            const double slope = (d1 - d0) / h;
            const cplx A = d0 + slope * (z - t0);
            sum += A * log_ratio(z - t0, z - t1) - slope * h;
        }
    }
    if (g.atom_at_zero > 0.0) {
        if (z == cplx(0.0)) throw PoleError("Cauchy transform at the atom at 0");
        sum += g.atom_at_zero / z;
    }
    return sum;
}

cplx closed_or_direct_G(const Measure& m, cplx z) {
    return std::visit(
        overloaded{
            [&](const AtomicMeasure& a) -> cplx {
                cplx s = 0.0;
                for (std::size_t k = 0; k < a.positions.size(); ++k) {
                    if (z == cplx(a.positions[k])) throw PoleError("Cauchy transform at an atom");
                    s += a.masses[k] / (z - a.positions[k]);
                }
                return s;
            },
            [&](const GridDensityMeasure& g) -> cplx { return grid_G(g, z); },
            [&](const Semicircle& s) -> cplx {
                const double r = 2.0 * std::sqrt(s.variance);
                return two_edge(z, z, -r, r);
            },
            [&](const CauchyLaw& c) -> cplx {
                return z.imag() < 0.0 ? 1.0 / (z - cplx(0.0, c.t)) : 1.0 / (z + cplx(0.0, c.t));
            },
            [&](const SymmetricBernoulli& b) -> cplx {
                if (z == cplx(b.a) || z == cplx(-b.a)) throw PoleError("Cauchy transform at an atom");
                return 0.5 / (z - b.a) + 0.5 / (z + b.a);
            },
            [&](const FreePoisson& f) -> cplx { return free_poisson_G(f.rate, f.jump, f.shift, z); },
            [&](const Arcsine& a) -> cplx {
                const cplx den = std::sqrt(z - a.radius) * std::sqrt(z + a.radius);
                if (den == cplx(0.0)) throw PoleError("arcsine Cauchy transform at an edge");
                return 1.0 / den;
            },
            [&](const MarchenkoPastur& mp) -> cplx {
                return free_poisson_G(1.0 / mp.ratio, mp.ratio * mp.scale, 0.0, z);
            },
            [&](const RectStable& r) -> cplx {
                if (r.alpha == 2.0) {
                    // mu^2 is Marchenko-Pastur of ratio lambda and scale t
                    if (z == cplx(0.0)) throw PoleError("G at 0");
                    return z * free_poisson_G(1.0 / r.lambda, r.lambda * r.t, 0.0, z * z);
                }
                return rect_law_cauchy(m, r.lambda, z);
            },
            [&](const SquareIDLaw&) -> cplx { return id_law_cauchy(m, z); },
            [&](const RectIDLaw& r) -> cplx {
                if (is_delta_zero(m)) {
                    if (z == cplx(0.0)) throw PoleError("Cauchy transform at an atom");
                    return 1.0 / z;
                }
                return rect_law_cauchy(m, r.lambda, z);
            },
            [&](const TransformDefined& t) -> cplx {
                switch (t.which) {
                    case TransformDefined::Which::G: return t.expr->evaluate(z);
                    case TransformDefined::Which::F: {
                        const cplx f = t.expr->evaluate(z);
                        if (f == cplx(0.0)) throw PoleError("F vanishes");
                        return 1.0 / f;
                    }
                    case TransformDefined::Which::Phi: return id_law_cauchy(m, z);
                }
                return {};
            },
            [&](const Mixture& mx) -> cplx {
                cplx s = 0.0;
                for (std::size_t k = 0; k < mx.parts.size(); ++k)
                    s += mx.weights[k] * cauchy_transform(*mx.parts[k], z);
                return s;
            },
        },
        m.v);
}

}  // namespace

cplx cauchy_transform(const Measure& m, cplx z) {
    // Formula-defined laws are evaluated on C+ and reflected.
    const bool reflect = z.imag() < 0.0 && (m.is<TransformDefined>() || m.is<SquareIDLaw>() ||
                                            m.is<RectIDLaw>() || m.is<RectStable>());
    if (reflect) return std::conj(closed_or_direct_G(m, std::conj(z)));
    return closed_or_direct_G(m, z);
}

cplx reciprocal_cauchy(const Measure& m, cplx z) {
    if (m.is<TransformDefined>() && m.as<TransformDefined>().which == TransformDefined::Which::F) {
        if (z.imag() < 0.0) return std::conj(m.as<TransformDefined>().expr->evaluate(std::conj(z)));
        return m.as<TransformDefined>().expr->evaluate(z);
    }
    if (m.is<AtomicMeasure>() && m.as<AtomicMeasure>().positions.size() == 1)
        return z - m.as<AtomicMeasure>().positions[0];
    if (m.is<CauchyLaw>()) {
        const double t = m.as<CauchyLaw>().t;
        return z.imag() < 0.0 ? z - cplx(0.0, t) : z + cplx(0.0, t);
    }
    const cplx g = cauchy_transform(m, z);
    if (g == cplx(0.0)) throw PoleError("G vanishes; F has a pole (potential boundary zero)");
    return 1.0 / g;
}

cplx psi_transform(const Measure& m, cplx z) {
    if (z == cplx(0.0)) return 0.0;
    if (m.is<AtomicMeasure>()) {
        const auto& a = m.as<AtomicMeasure>();
        cplx s = 0.0;
        for (std::size_t k = 0; k < a.positions.size(); ++k) {
            const cplx den = 1.0 - z * a.positions[k];
            if (den == cplx(0.0)) throw PoleError("psi transform pole");
            s += a.masses[k] * z * a.positions[k] / den;
        }
        return s;
    }
    return cauchy_transform(m, 1.0 / z) / z - 1.0;
}

// ------------------------------------------------------------------ push-forwards

namespace {

AtomicMeasure merged_atoms(std::map<double, double> acc) {
    AtomicMeasure a;
    double total = 0.0;
    for (const auto& [x, w] : acc) total += w;
    for (const auto& [x, w] : acc) {
        a.positions.push_back(x);
        a.masses.push_back(w / total);
    }
    return a;
}

}  // namespace

MeasurePtr push_forward_square(const Measure& m) {
    if (!is_symmetric(m, 1e-9)) throw DomainError("push_forward_square needs a symmetric measure");
    if (m.is<AtomicMeasure>()) {
        const auto& a = m.as<AtomicMeasure>();
        std::map<double, double> acc;
        for (std::size_t k = 0; k < a.positions.size(); ++k)
            acc[a.positions[k] * a.positions[k]] += a.masses[k];
        return make_measure(merged_atoms(std::move(acc)));
    }
    if (m.is<SymmetricBernoulli>()) {
        const double a = m.as<SymmetricBernoulli>().a;
        return dirac(a * a);
    }
    if (m.is<Semicircle>()) return free_poisson(1.0, m.as<Semicircle>().variance);
    if (m.is<RectStable>() && m.as<RectStable>().alpha == 2.0) {
        const auto& r = m.as<RectStable>();
        return marchenko_pastur(r.lambda, r.t);
    }
    if (is_delta_zero(m)) return dirac(0.0);
    if (m.is<GridDensityMeasure>()) {
        const auto& g = m.as<GridDensityMeasure>();
        std::vector<double> u, val;
        std::vector<double> xs;
        for (std::size_t k = 0; k < g.grid.size(); ++k)
            if (g.grid[k] >= 0.0) xs.push_back(g.grid[k]);
        // symmetric grids without a node at 0: the central cell is split at 0
        if (xs.empty() || xs.front() != 0.0) xs.insert(xs.begin(), 0.0);
        for (double x : xs) {
            u.push_back(x * x);
            val.push_back(x > 0.0 ? density(m, x) / x : 0.0);
        }
        // the 1/sqrt(u) singularity at 0: fix the first value so that the first
        // cell carries its exact mass 2 * int_0^{x1} f
        if (u.size() >= 2) {
            const double x1 = xs[1];
            const double cell_mass = x1 * (density(m, 0.0) + density(m, x1));
            val[0] = std::max(0.0, 2.0 * cell_mass / u[1] - val[1]);
        }
        GridDensityMeasure out{u, val, g.atom_at_zero};
        const double mass = trapezoid_mass(out);
        const double target = 1.0 - g.atom_at_zero;
        if (mass > 0.0)
            for (double& v : out.values) v *= target / mass;
        return make_measure(std::move(out));
    }
    if (m.is<Mixture>()) {
        const auto& mx = m.as<Mixture>();
        std::vector<MeasurePtr> parts;
        for (const auto& p : mx.parts) parts.push_back(push_forward_square(*p));
        return mixture(mx.weights, std::move(parts));
    }
    // generic: discretize the density and square it
    const auto [lo, hi] = effective_support(m, 1e-7);
    const double r = std::max(std::abs(lo), std::abs(hi));
    return push_forward_square(*discretize(m, -r, r, 8001));
}

MeasurePtr symmetric_sqrt(const Measure& m) {
    if (m.is<AtomicMeasure>()) {
        const auto& a = m.as<AtomicMeasure>();
        std::map<double, double> acc;
        for (std::size_t k = 0; k < a.positions.size(); ++k) {
            const double x = a.positions[k];
            if (x < 0.0) throw DomainError("symmetric_sqrt needs a measure on [0, inf)");
            if (x == 0.0) {
                acc[0.0] += a.masses[k];
            } else {
                acc[-std::sqrt(x)] += 0.5 * a.masses[k];
                acc[std::sqrt(x)] += 0.5 * a.masses[k];
            }
        }
        return make_measure(merged_atoms(std::move(acc)));
    }
    if (m.is<MarchenkoPastur>()) {
        const auto& mp = m.as<MarchenkoPastur>();
        if (mp.ratio <= 1.0) return rect_stable(2.0, mp.scale, mp.ratio);
    }
    if (m.is<FreePoisson>()) {
        const auto& f = m.as<FreePoisson>();
        if (f.shift == 0.0 && f.rate >= 1.0) return rect_stable(2.0, f.rate * f.jump, 1.0 / f.rate);
        if (f.shift < 0.0 || (f.rate < 1.0 && f.shift != 0.0) ||
            f.shift + f.jump * (1.0 - std::sqrt(f.rate)) * (1.0 - std::sqrt(f.rate)) < 0.0)
            throw DomainError("symmetric_sqrt needs a measure on [0, inf)");
    }
    if (m.is<GridDensityMeasure>()) {
        const auto& g = m.as<GridDensityMeasure>();
        if (g.grid.front() < 0.0) {
            for (std::size_t k = 0; k < g.grid.size() && g.grid[k] < 0.0; ++k)
                if (g.values[k] > 0.0) throw DomainError("symmetric_sqrt needs a measure on [0, inf)");
        }
        std::vector<double> pos, val;
        for (std::size_t k = 0; k < g.grid.size(); ++k) {
            if (g.grid[k] < 0.0) continue;
            const double x = std::sqrt(g.grid[k]);
            pos.push_back(x);
            val.push_back(x * g.values[k]);  // f(x) = |x| g(x^2)
        }
        std::vector<double> grid, values;
        for (std::size_t k = pos.size(); k-- > 0;) {
            if (pos[k] == 0.0) continue;
            grid.push_back(-pos[k]);
            values.push_back(val[k]);
        }
        for (std::size_t k = 0; k < pos.size(); ++k) {
            grid.push_back(pos[k]);
            values.push_back(val[k]);
        }
        GridDensityMeasure out{grid, values, g.atom_at_zero};
        const double mass = trapezoid_mass(out);
        if (mass > 0.0)
            for (double& v : out.values) v *= (1.0 - g.atom_at_zero) / mass;
        return make_measure(std::move(out));
    }
    // generic route through a discretization on [0, hi]
    const auto [lo, hi] = effective_support(m, 1e-8);
    if (lo < -1e-12) throw DomainError("symmetric_sqrt needs a measure on [0, inf)");
    return symmetric_sqrt(*discretize(m, 0.0, hi, 8001));
}

// ------------------------------------------------------------------ real-line quantities

double rect_stable1_density(double t, double lambda, double x) {
    const double r = t * (1.0 - lambda) / 2.0;
    const double ax = std::abs(x);
    if (ax <= r) return 0.0;
    return t / (kPi * (lambda * t * t + x * x)) * std::sqrt(1.0 - r * r / (x * x));
}

namespace {

double free_poisson_density(double k, double s, double shift, double x) {
    const double xp = x - shift;
    const double a = s * (1.0 - std::sqrt(k)) * (1.0 - std::sqrt(k));
    const double b = s * (1.0 + std::sqrt(k)) * (1.0 + std::sqrt(k));
    if (xp <= a || xp >= b) return 0.0;
    return std::sqrt((b - xp) * (xp - a)) / (2.0 * kPi * s * xp);
}

/// Continuous part of the free Poisson CDF, via x' = m - h cos(theta).
double free_poisson_ac_cdf(double k, double s, double shift, double x) {
    const double xp = x - shift;
    const double a = s * (1.0 - std::sqrt(k)) * (1.0 - std::sqrt(k));
    const double b = s * (1.0 + std::sqrt(k)) * (1.0 + std::sqrt(k));
    const double total = std::min(k, 1.0);
    if (xp <= a) return 0.0;
    if (xp >= b) return total;
    const double mid = 0.5 * (a + b), h = 0.5 * (b - a);
    const double theta = std::acos(std::clamp((mid - xp) / h, -1.0, 1.0));
    auto f = [&](double th) {
        const double s2 = std::sin(0.5 * th), c2 = std::cos(0.5 * th);
        return 4.0 * h * h * s2 * s2 * c2 * c2 / (a + 2.0 * h * s2 * s2);
    };
    return integrate<double>(f, 0.0, theta, 1e-14, 1e-12) / (2.0 * kPi * s);
}

double grid_density_at(const GridDensityMeasure& g, double x) {
    if (x < g.grid.front() || x > g.grid.back()) return 0.0;
    const auto it = std::upper_bound(g.grid.begin(), g.grid.end(), x);
    if (it == g.grid.end()) return g.values.back();
    const std::size_t k = static_cast<std::size_t>(it - g.grid.begin()) - 1;
    const double t = (x - g.grid[k]) / (g.grid[k + 1] - g.grid[k]);
    return g.values[k] + t * (g.values[k + 1] - g.values[k]);
}

double grid_cdf(const GridDensityMeasure& g, double x) {
    double s = (x >= 0.0) ? g.atom_at_zero : 0.0;
    for (std::size_t k = 0; k + 1 < g.grid.size(); ++k) {
        const double t0 = g.grid[k], t1 = g.grid[k + 1];
        if (x <= t0) break;
        const double d0 = g.values[k], d1 = g.values[k + 1];
        const double right = std::min(x, t1);
        const double dr = d0 + (d1 - d0) * (right - t0) / (t1 - t0);
        s += 0.5 * (right - t0) * (d0 + dr);
    }
    return s;
}

double rect_stable1_cdf(double t, double lambda, double x) {
    const double r = t * (1.0 - lambda) / 2.0;
    const double ax = std::abs(x);
    double half = 0.0;
    if (ax > r) {
        // substitute |x| = r cosh(u) to remove the square-root edge
        auto f = [&](double u) {
            const double y = r > 0.0 ? r * std::cosh(u) : std::exp(u);
            const double jac = r > 0.0 ? r * std::sinh(u) : std::exp(u);
            return rect_stable1_density(t, lambda, y) * jac;
        };
        if (r > 0.0) {
            half = integrate<double>(f, 0.0, std::acosh(ax / r), 1e-14, 1e-12);
        } else {
            // lambda = 1: Cauchy
            half = std::atan(ax / t) / kPi;
        }
    }
    return x >= 0.0 ? 0.5 + half : 0.5 - half;
}

}  // namespace

double density(const Measure& m, double x) {
    return std::visit(
        overloaded{
            [](const AtomicMeasure&) { return 0.0; },
            [&](const GridDensityMeasure& g) { return grid_density_at(g, x); },
            [&](const Semicircle& s) {
                const double r2 = 4.0 * s.variance - x * x;
                return r2 > 0.0 ? std::sqrt(r2) / (2.0 * kPi * s.variance) : 0.0;
            },
            [&](const CauchyLaw& c) { return c.t / (kPi * (x * x + c.t * c.t)); },
            [](const SymmetricBernoulli&) { return 0.0; },
            [&](const FreePoisson& f) { return free_poisson_density(f.rate, f.jump, f.shift, x); },
            [&](const Arcsine& a) {
                const double r2 = a.radius * a.radius - x * x;
                return r2 > 0.0 ? 1.0 / (kPi * std::sqrt(r2)) : 0.0;
            },
            [&](const MarchenkoPastur& mp) {
                return free_poisson_density(1.0 / mp.ratio, mp.ratio * mp.scale, 0.0, x);
            },
            [&](const RectStable& r) -> double {
                if (r.alpha == 1.0) return rect_stable1_density(r.t, r.lambda, x);
                if (r.alpha == 2.0)
                    return std::abs(x) *
                           free_poisson_density(1.0 / r.lambda, r.lambda * r.t, 0.0, x * x);
                throw DomainError("rect_stable density needs the rectangular engine for this alpha");
            },
            [&](const TransformDefined&) -> double {
                return std::max(0.0, -cauchy_transform(m, cplx(x, 0.0)).imag() / kPi);
            },
            [&](const Mixture& mx) {
                double s = 0.0;
                for (std::size_t k = 0; k < mx.parts.size(); ++k)
                    s += mx.weights[k] * density(*mx.parts[k], x);
                return s;
            },
            [&](const auto&) -> double {
                throw DomainError("density of " + family_name(m) + " needs a convolution engine");
            },
        },
        m.v);
}

double cdf(const Measure& m, double x) {
    return std::visit(
        overloaded{
            [&](const AtomicMeasure& a) {
                double s = 0.0;
                for (std::size_t k = 0; k < a.positions.size(); ++k)
                    if (a.positions[k] <= x) s += a.masses[k];
                return s;
            },
            [&](const GridDensityMeasure& g) { return grid_cdf(g, x); },
            [&](const Semicircle& s) {
                const double r = 2.0 * std::sqrt(s.variance);
                if (x <= -r) return 0.0;
                if (x >= r) return 1.0;
                return 0.5 + x * std::sqrt(r * r - x * x) / (kPi * r * r) + std::asin(x / r) / kPi;
            },
            [&](const CauchyLaw& c) { return 0.5 + std::atan(x / c.t) / kPi; },
            [&](const SymmetricBernoulli& b) { return x < -b.a ? 0.0 : (x < b.a ? 0.5 : 1.0); },
            [&](const FreePoisson& f) {
                const double atom = (f.rate < 1.0 && x >= f.shift) ? 1.0 - f.rate : 0.0;
                return atom + free_poisson_ac_cdf(f.rate, f.jump, f.shift, x);
            },
            [&](const Arcsine& a) {
                if (x <= -a.radius) return 0.0;
                if (x >= a.radius) return 1.0;
                return 0.5 + std::asin(x / a.radius) / kPi;
            },
            [&](const MarchenkoPastur& mp) {
                const double k = 1.0 / mp.ratio;
                const double atom = (k < 1.0 && x >= 0.0) ? 1.0 - k : 0.0;
                return atom + free_poisson_ac_cdf(k, mp.ratio * mp.scale, 0.0, x);
            },
            [&](const RectStable& r) -> double {
                if (r.alpha == 1.0) return rect_stable1_cdf(r.t, r.lambda, x);
                if (r.alpha == 2.0) {
                    const double half =
                        0.5 * free_poisson_ac_cdf(1.0 / r.lambda, r.lambda * r.t, 0.0, x * x);
                    return x >= 0.0 ? 0.5 + half : 0.5 - half;
                }
                throw DomainError("rect_stable CDF needs the rectangular engine for this alpha");
            },
            [&](const Mixture& mx) {
                double s = 0.0;
                for (std::size_t k = 0; k < mx.parts.size(); ++k) s += mx.weights[k] * cdf(*mx.parts[k], x);
                return s;
            },
            [&](const auto&) -> double {
                throw DomainError("CDF of " + family_name(m) + " needs a convolution engine");
            },
        },
        m.v);
}

std::pair<double, double> effective_support(const Measure& m, double tail) {
    return std::visit(
        overloaded{
            [](const AtomicMeasure& a) { return std::pair{a.positions.front(), a.positions.back()}; },
            [](const GridDensityMeasure& g) {
                double lo = g.grid.front(), hi = g.grid.back();
                if (g.atom_at_zero > 0.0) {
                    lo = std::min(lo, 0.0);
                    hi = std::max(hi, 0.0);
                }
                return std::pair{lo, hi};
            },
            [](const Semicircle& s) {
                const double r = 2.0 * std::sqrt(s.variance);
                return std::pair{-r, r};
            },
            [&](const CauchyLaw& c) {
                const double r = c.t / std::tan(0.5 * kPi * tail);
                return std::pair{-r, r};
            },
            [](const SymmetricBernoulli& b) { return std::pair{-b.a, b.a}; },
            [](const FreePoisson& f) {
                const double sk = std::sqrt(f.rate);
                double lo = f.shift + f.jump * (1 - sk) * (1 - sk);
                if (f.rate < 1.0) lo = f.shift;
                return std::pair{lo, f.shift + f.jump * (1 + sk) * (1 + sk)};
            },
            [](const Arcsine& a) { return std::pair{-a.radius, a.radius}; },
            [](const MarchenkoPastur& mp) {
                const double sl = std::sqrt(mp.ratio);
                const double lo = mp.ratio > 1.0 ? 0.0 : mp.scale * (1 - sl) * (1 - sl);
                return std::pair{lo, mp.scale * (1 + sl) * (1 + sl)};
            },
            [&](const RectStable& r) -> std::pair<double, double> {
                if (r.alpha == 2.0) {
                    const double b = std::sqrt(r.t) * (1.0 + std::sqrt(r.lambda));
                    return {-b, b};
                }
                // tails decay like c |x|^{-1-alpha}; crude but safe bound
                const double x = r.t * std::pow(2.0 / (kPi * tail), 1.0 / r.alpha);
                return {-x, x};
            },
            [&](const Mixture& mx) {
                double lo = INFINITY, hi = -INFINITY;
                for (const auto& p : mx.parts) {
                    const auto [a, b] = effective_support(*p, tail);
                    lo = std::min(lo, a);
                    hi = std::max(hi, b);
                }
                return std::pair{lo, hi};
            },
            [&](const auto&) -> std::pair<double, double> {
                throw DomainError("support of " + family_name(m) + " needs a convolution engine");
            },
        },
        m.v);
}

MeasurePtr discretize(const Measure& m, double lo, double hi, std::size_t n) {
    if (!(hi > lo) || n < 3) throw DomainError("discretize needs lo < hi and n >= 3");
    for (const auto& [x, w] : atoms_of(m))
        if (x != 0.0 && x >= lo && x <= hi) throw DomainError("only an atom at 0 can be discretized");
    std::vector<double> grid(n), values(n);
    for (std::size_t j = 0; j < n; ++j) {
        // Chebyshev-type clustering towards both ends of [lo, hi]
        const double c = 0.5 * (1.0 - std::cos(kPi * static_cast<double>(j) / (n - 1)));
        grid[j] = lo + (hi - lo) * c;
    }
    grid.front() = lo;
    grid.back() = hi;
    for (std::size_t j = 1; j + 1 < n; ++j) values[j] = density(m, grid[j]);
    const double atom0 = (0.0 >= lo && 0.0 <= hi) ? atom_mass_at(m, 0.0) : 0.0;
    // end values: match the exact mass of the end cells where a CDF exists,
    // which tames integrable edge singularities
    auto cell_mass = [&](double a, double b) -> double {
        try {
            double mass = cdf(m, b) - cdf(m, a);
            if (a < 0.0 && b >= 0.0) mass -= atom0;
            return std::max(0.0, mass);
        } catch (const Error&) {
            return -1.0;
        }
    };
    const double m0 = cell_mass(lo, grid[1]);
    values[0] = m0 >= 0.0 ? std::max(0.0, 2.0 * m0 / (grid[1] - lo) - values[1]) : density(m, lo);
    const double m1 = cell_mass(grid[n - 2], hi);
    values[n - 1] =
        m1 >= 0.0 ? std::max(0.0, 2.0 * m1 / (hi - grid[n - 2]) - values[n - 2]) : density(m, hi);
    for (double& v : values)
        if (!std::isfinite(v)) v = 0.0;
    GridDensityMeasure g{grid, values, atom0};
    const double mass = trapezoid_mass(g);
    if (mass > 0.0)
        for (double& v : g.values) v *= (1.0 - atom0) / mass;
    return make_measure(std::move(g));
}

double wasserstein1(const Measure& a, const Measure& b, std::size_t points) {
    const auto [la, ha] = effective_support(a, 1e-9);
    const auto [lb, hb] = effective_support(b, 1e-9);
    const double lo = std::min(la, lb), hi = std::max(ha, hb);
    if (hi <= lo) return std::abs(la - lb);
    std::vector<double> xs;
    for (std::size_t k = 0; k < points; ++k)
        xs.push_back(lo + (hi - lo) * static_cast<double>(k) / (points - 1));
    for (const auto& m : {&a, &b})
        for (const auto& [x, w] : atoms_of(*m)) xs.push_back(x);
    std::sort(xs.begin(), xs.end());
    xs.erase(std::unique(xs.begin(), xs.end()), xs.end());
    double w1 = 0.0;
    for (std::size_t k = 0; k + 1 < xs.size(); ++k) {
        const double mid = 0.5 * (xs[k] + xs[k + 1]);
        w1 += std::abs(cdf(a, mid) - cdf(b, mid)) * (xs[k + 1] - xs[k]);
    }
    return w1;
}

}  // namespace freeconv
