#pragma once

#include <functional>
#include <vector>

#include "freeconv/branch.hpp"
#include "freeconv/common.hpp"
#include "freeconv/measures.hpp"

namespace freeconv {

/// Rectangular ratio lambda in (0, 1].
struct RatioParams {
    double lambda = 1.0;
    explicit RatioParams(double l);
};

/// T(z) = (lambda z + 1)(z + 1)
cplx chain_T(cplx z, const RatioParams& p);
/// Inverse of T - 1 near 0; throws BranchError on its cut (negative reals of the radicand).
cplx chain_U(cplx z, const RatioParams& p);
/// V(z) = U(z - 1) + 1
cplx chain_V(cplx z, const RatioParams& p);

/// H(z) = lambda G(1/sqrt z)^2 + (1 - lambda) sqrt z G(1/sqrt z), sqrt on the upper cut.
cplx H_transform(const Measure& m, const RatioParams& p, cplx z);
/// M(z) = psi(sqrt z) = psi of the square push-forward at z.
cplx M_transform(const Measure& m, cplx z);

/// Voiculescu transform of a square ID law, on C+ and R (conjugate-extended to C-).
cplx phi_voiculescu_ID(const Measure& law, cplx z);
/// Rectangular C-transform of a rectangular ID law on C \ R+.
cplx C_transform_ID(const Measure& law, cplx z);
/// C from the square Voiculescu transform at ratio 1 (lambda = 1) or ratio 0 (lambda = 0).
cplx C_from_square_phi(const Measure& m, double lambda, cplx z);

/// Result of a geometric-ladder limit with Richardson extrapolation.
struct LimitEstimate {
    cplx value;
    double indicator = 0.0;  // |extrapolated - last raw value|
    bool converged = false;
    std::vector<cplx> ladder;
};

/// lim f(x) as x -> -inf, sampled at x = -10^k, k = kmin..kmax.
LimitEstimate limit_at_minus_infinity(const std::function<cplx(double)>& f, int kmin = 2,
                                      int kmax = 8, double tol = 1e-3);

/// lim H(x)/x as x -> -inf; equals lambda m({0})^2 + (1 - lambda) m({0}).
LimitEstimate H_mass_limit(const Measure& m, const RatioParams& p);

/// Measure bundled with its transform evaluators.
class TransformEvaluator {
public:
    explicit TransformEvaluator(MeasurePtr m) : m_(std::move(m)) {}
    const Measure& measure() const { return *m_; }
    cplx G(cplx z) const { return cauchy_transform(*m_, z); }
    cplx F(cplx z) const { return reciprocal_cauchy(*m_, z); }
    cplx psi(cplx z) const { return psi_transform(*m_, z); }
    cplx M(cplx z) const { return M_transform(*m_, z); }
    cplx H(cplx z, double lambda) const { return H_transform(*m_, RatioParams(lambda), z); }

private:
    MeasurePtr m_;
};

}  // namespace freeconv
