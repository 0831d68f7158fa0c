#include "freeconv/transforms.hpp"

#include <cmath>
#include <type_traits>


namespace freeconv {

RatioParams::RatioParams(double l) : lambda(l) {
    if (!(l >= 0.0 && l <= 1.0)) throw DomainError("ratio lambda must lie in [0, 1]");
}

cplx chain_T(cplx z, const RatioParams& p) { return (p.lambda * z + 1.0) * (z + 1.0); }

cplx chain_U(cplx z, const RatioParams& p) {
    const double l = p.lambda;
    const cplx rad = (l + 1.0) * (l + 1.0) + 4.0 * l * z;
    if (rad.real() < 0.0 && std::abs(rad.imag()) <= 1e-10 * std::abs(rad))
        throw BranchError("U evaluated on its branch cut");
    // rationalized root of l u^2 + (l+1) u - z = 0, regular at l = 0
    return 2.0 * z / ((l + 1.0) + std::sqrt(rad));
}

cplx chain_V(cplx z, const RatioParams& p) {
    // U(z - 1) + 1 without forming z - 1: rad = (1 - l)^2 + 4 l z
    const double l = p.lambda;
    const cplx rad = (1.0 - l) * (1.0 - l) + 4.0 * l * z;
    if (rad.real() < 0.0 && std::abs(rad.imag()) <= 1e-10 * std::abs(rad))
        throw BranchError("V evaluated on its branch cut");
    const cplx s = std::sqrt(rad);
    return (2.0 * z + 4.0 * l * z / (s + (1.0 - l))) / ((l + 1.0) + s);
}

cplx M_transform(const Measure& m, cplx z) {
    if (z == cplx(0.0)) return 0.0;
    return psi_transform(m, sqrt_upper(z));
}

cplx H_transform(const Measure& m, const RatioParams& p, cplx z) {
    if (m.is<AtomicMeasure>()) return z * chain_T(M_transform(m, z), p);
    const cplx s = sqrt_upper(z);
    const cplx g = cauchy_transform(m, 1.0 / s);
    return p.lambda * g * g + (1.0 - p.lambda) * s * g;
}

namespace {

/// int (1+tz)/(z-t) dS(t) for a probability shape S.
cplx levy_phi_integral(const Measure& shape, cplx z) {
    if (shape.is<AtomicMeasure>()) {
        const auto& a = shape.as<AtomicMeasure>();
        cplx s = 0.0;
        for (std::size_t k = 0; k < a.positions.size(); ++k) {
            const double t = a.positions[k];
            if (z == cplx(t)) throw PoleError("Voiculescu transform at a Levy atom");
            s += a.masses[k] * (1.0 + t * z) / (z - t);
        }
        return s;
    }
    if (shape.is<Mixture>()) {
        const auto& mx = shape.as<Mixture>();
        cplx s = 0.0;
        for (std::size_t k = 0; k < mx.parts.size(); ++k)
            s += mx.weights[k] * levy_phi_integral(*mx.parts[k], z);
        return s;
    }
    if (shape.is<GridDensityMeasure>()) {
        // sigma-route: int (1+tz)/(z-t) dS = -int t dS + int (1+t^2)/(z-t) dS
        const auto& g = shape.as<GridDensityMeasure>();
        std::vector<double> sv(g.values.size());
        double first_moment = 0.0;
        for (std::size_t k = 0; k < g.grid.size(); ++k) {
            const double t = g.grid[k];
            sv[k] = (1.0 + t * t) * g.values[k];
        }
        for (std::size_t k = 0; k + 1 < g.grid.size(); ++k) {
            const double t0 = g.grid[k], t1 = g.grid[k + 1];
            const double d0 = g.values[k], d1 = g.values[k + 1];
            // exact integral of t * (linear density) over the cell
            first_moment += (t1 - t0) * (d0 * (2 * t0 + t1) + d1 * (t0 + 2 * t1)) / 6.0;
        }
        GridDensityMeasure sigma{g.grid, sv, g.atom_at_zero};
        return -first_moment + cauchy_transform(Measure{sigma}, z);
    }
    // (1+tz)/(z-t) = (1+z^2)/(z-t) - z
    return (1.0 + z * z) * cauchy_transform(shape, z) - z;
}

cplx phi_upper(const Measure& law, cplx z) {
    return std::visit(
        [&](const auto& l) -> cplx {
            using T = std::decay_t<decltype(l)>;
            if constexpr (std::is_same_v<T, Semicircle>) {
                if (z == cplx(0.0)) throw PoleError("semicircle Voiculescu transform at 0");
                return l.variance / z;
            } else if constexpr (std::is_same_v<T, CauchyLaw>) {
                return cplx(0.0, -l.t);
            } else if constexpr (std::is_same_v<T, FreePoisson>) {
                if (z == cplx(l.jump)) throw PoleError("free Poisson Voiculescu transform pole");
                return l.rate * l.jump * z / (z - l.jump) + l.shift;
            } else if constexpr (std::is_same_v<T, MarchenkoPastur>) {
                const double k = 1.0 / l.ratio, s = l.ratio * l.scale;
                if (z == cplx(s)) throw PoleError("Marchenko-Pastur Voiculescu transform pole");
                return k * s * z / (z - s);
            } else if constexpr (std::is_same_v<T, AtomicMeasure>) {
                if (l.positions.size() != 1) throw DomainError("atomic law is not infinitely divisible");
                return l.positions[0];
            } else if constexpr (std::is_same_v<T, SquareIDLaw>) {
                if (!l.levy || l.mass == 0.0) return l.gamma;
                return l.gamma + l.mass * levy_phi_integral(*l.levy, z);
            } else if constexpr (std::is_same_v<T, TransformDefined>) {
                if (l.which != TransformDefined::Which::Phi)
                    throw DomainError("transform-defined law has no Voiculescu form");
                return l.expr->evaluate(z);
            } else {
                throw DomainError("law is not a known square infinitely divisible law: " +
                                  family_name(law));
            }
        },
        law.v);
}

}  // namespace

cplx phi_voiculescu_ID(const Measure& law, cplx z) {
    if (z.imag() < 0.0) return std::conj(phi_upper(law, std::conj(z)));
    return phi_upper(law, z);
}

namespace {

/// int (1+t^2)/(1-z t^2) dS(t) for a symmetric probability shape S.
cplx levy_C_integral(const Measure& shape, cplx z) {
    if (shape.is<AtomicMeasure>()) {
        const auto& a = shape.as<AtomicMeasure>();
        cplx s = 0.0;
        for (std::size_t k = 0; k < a.positions.size(); ++k) {
            const double t = a.positions[k];
            s += a.masses[k] * (1.0 + t * t) / (1.0 - z * t * t);
        }
        return s;
    }
    if (shape.is<Mixture>()) {
        const auto& mx = shape.as<Mixture>();
        cplx s = 0.0;
        for (std::size_t k = 0; k < mx.parts.size(); ++k)
            s += mx.weights[k] * levy_C_integral(*mx.parts[k], z);
        return s;
    }
    // For symmetric f: int f(t)/(1 - z t^2) dt = G_f(1/s)/s with s = sqrt z.
    const cplx s = sqrt_upper(z);
    const cplx w = 1.0 / s;
    if (shape.is<GridDensityMeasure>()) {
        const auto& g = shape.as<GridDensityMeasure>();
        std::vector<double> sv(g.values.size());
        for (std::size_t k = 0; k < g.grid.size(); ++k)
            sv[k] = (1.0 + g.grid[k] * g.grid[k]) * g.values[k];
        GridDensityMeasure sigma{g.grid, sv, g.atom_at_zero};
        return cauchy_transform(Measure{sigma}, w) / s;
    }
    return ((1.0 + w * w) * cauchy_transform(shape, w) - w) / s;
}

}  // namespace

cplx C_transform_ID(const Measure& law, cplx z) {
    if (z.imag() == 0.0 && z.real() > 0.0) throw BranchError("C-transform evaluated on (0, inf)");
    if (z == cplx(0.0)) return 0.0;
    if (law.is<RectIDLaw>()) {
        const auto& l = law.as<RectIDLaw>();
        if (!l.levy || l.mass == 0.0) return 0.0;
        return l.mass * z * levy_C_integral(*l.levy, z);
    }
    if (law.is<RectStable>()) {
        const auto& l = law.as<RectStable>();
        return -l.t * neg_power(z, 0.5 * l.alpha);
    }
    if (is_delta_zero(law)) return 0.0;
    throw DomainError("law is not a rectangular infinitely divisible law: " + family_name(law));
}

cplx C_from_square_phi(const Measure& m, double lambda, cplx z) {
    if (z == cplx(0.0)) return 0.0;
    if (lambda == 1.0) {
        const cplx s = sqrt_upper(z);
        return s * phi_voiculescu_ID(m, 1.0 / s);
    }
    if (lambda == 0.0) {
        // C(z) = z R(z) with R(z) = phi(1/z) of the square push-forward
        const MeasurePtr rho = push_forward_square(m);
        return z * phi_voiculescu_ID(*rho, 1.0 / z);
    }
    throw DomainError("C_from_square_phi needs lambda in {0, 1}");
}

LimitEstimate limit_at_minus_infinity(const std::function<cplx(double)>& f, int kmin, int kmax,
                                      double tol) {
    LimitEstimate out;
    for (int k = kmin; k <= kmax; ++k) out.ladder.push_back(f(-std::pow(10.0, k)));
    const std::size_t n = out.ladder.size();
    if (n == 1) {
        out.value = out.ladder[0];
        return out;
    }
    // first-order Richardson in 1/|x| on the last two rungs
    const cplx last = out.ladder[n - 1], prev = out.ladder[n - 2];
    out.value = (10.0 * last - prev) / 9.0;
    out.indicator = std::abs(out.value - last);
    out.converged = out.indicator < tol && is_finite(out.value);
    return out;
}

LimitEstimate H_mass_limit(const Measure& m, const RatioParams& p) {
    return limit_at_minus_infinity([&](double x) { return H_transform(m, p, x) / x; });
}

}  // namespace freeconv
