#pragma once

#include <functional>
#include <string>
#include <vector>

#include "freeconv/common.hpp"
#include "freeconv/diagnostics.hpp"
#include "freeconv/inversion.hpp"
#include "freeconv/measures.hpp"
#include "freeconv/transforms.hpp"

namespace freeconv {

/// Sum of rectangular C-transforms of ID laws (rectangular stable, Levy form, delta_0).
class CTransform {
public:
    CTransform() = default;
    explicit CTransform(MeasurePtr law) { add(std::move(law)); }

    /// Appends a term; throws DomainError if the law has no C-transform.
    void add(MeasurePtr law);

    cplx operator()(cplx z) const;
    /// Central difference along the real direction (never crosses the cut).
    cplx derivative(cplx z) const;
    bool empty() const { return terms_.empty(); }
    const std::vector<MeasurePtr>& terms() const { return terms_; }

private:
    std::vector<MeasurePtr> terms_;
};

/// Law whose C-transform is C_mu + C_nu. Throws DomainError when the sum has no closed family.
MeasurePtr rect_C_sum(const MeasurePtr& mu, const MeasurePtr& nu_id);

struct HResult {
    cplx H;
    SolverDiagnostics diag;
};

/// Right inverse of w -> w / T(C(w)) at z outside [0, inf), by Newton continuation from 0-.
HResult H_from_C(const CTransform& C, const RatioParams& p, cplx z);

/// G(1/sqrt z) = sqrt z V(H/z) with sqrt on the upper cut.
cplx G_from_H(cplx H_value, cplx z, const RatioParams& p);

/// G at w in C+ (boundary values excluded) for a law with C-transform C.
cplx rect_G(const CTransform& C, const RatioParams& p, cplx w);

/// Cauchy transform of a rectangular ID law at ratio lambda (any non-real w).
cplx rect_law_cauchy(const Measure& law, double lambda, cplx w);

/// (mu, nu) for mu boxplus_lambda nu with mu rectangular ID and nu symmetric.
class RectConvHandle {
public:
    RectConvHandle(MeasurePtr mu, MeasurePtr nu, double lambda, SolverSettings settings = {});

    const Measure& mu() const { return *mu_; }
    const Measure& nu() const { return *nu_; }
    const MeasurePtr& mu_ptr() const { return mu_; }
    const MeasurePtr& nu_ptr() const { return nu_; }
    const RatioParams& params() const { return p_; }
    double lambda() const { return p_.lambda; }
    const SolverSettings& settings() const { return settings_; }
    bool nu_is_id() const { return nu_id_; }
    /// C_mu + C_nu; only when nu is rectangular ID.
    const CTransform& summed_C() const { return sum_; }
    const CTransform& C_mu() const { return c_mu_; }

    /// H of mu boxplus_lambda nu at z outside [0, inf).
    HResult H(cplx z) const;
    /// G of mu boxplus_lambda nu at w in C+.
    cplx G(cplx w) const;

private:
    MeasurePtr mu_, nu_;
    RatioParams p_;
    SolverSettings settings_;
    bool nu_id_ = false;
    CTransform c_mu_, sum_;
};

struct Omega2Result {
    cplx omega;
    cplx H;  // H_nu(omega) = H of the convolution
    SolverDiagnostics diag;
};

/// Right inverse of k(w) = H_nu(w) / T(C_mu(H_nu(w)) + M_nu(w)).
Omega2Result omega2_general(const RectConvHandle& h, cplx z);

/// Symmetric density curve; x < 0 is filled by symmetry.
DensityCurve rect_density_curve(const RectConvHandle& h, const std::vector<double>& grid);

/// Density and error bar at x via the eps-ladder.
std::pair<double, double> rect_density_at(const RectConvHandle& h, double x, SolverDiagnostics* diag = nullptr);

struct AtomAtZero {
    double mass = 0.0;
    double limit = 0.0;           // extrapolated lim C(w) (or lim M) as w -> -inf
    bool converged = false;
    double cross_check = -1.0;    // max(0, mu({0}) + nu({0}) - 1) when both are known, else -1
    std::vector<cplx> ladder;
};

/// Mass at 0 from lim_{w -> -inf} C(w) on a -10^k ladder.
AtomAtZero atom_at_zero(const CTransform& C);
AtomAtZero atom_at_zero(const RectConvHandle& h);

struct HoleReport {
    bool has_hole = false;
    double hole_radius_estimate = 0.0;
    double atom_at_zero = 0.0;
    bool decided = true;
    std::vector<std::pair<double, double>> scan;  // (x, density) samples
};

HoleReport hole_detect(const RectConvHandle& h, double resolution = 0.01, double threshold = 1e-6);

struct ReductionReport {
    double lambda = 1.0;
    bool compatible = false;
    std::string note;
    std::vector<double> grid, rect_density, square_density;
    double max_abs_diff = 0.0;
    bool agree = false;
};

/// Rectangular pipeline at lambda in {0, 1} against the square pipeline.
ReductionReport lambda_reductions_check(const MeasurePtr& m1, const MeasurePtr& m2, double lambda,
                                        const std::vector<double>& grid, double tol = 1e-5);

}  // namespace freeconv
