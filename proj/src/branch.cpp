#include "freeconv/branch.hpp"

namespace freeconv {

cplx sqrt_upper(cplx z) {
    if (z.imag() == 0.0 && z.real() >= 0.0) throw BranchError("sqrt_upper: argument on [0, inf)");
    return sqrt_upper_closure(z);
}

cplx sqrt_principal(cplx z) {
    if (z.imag() == 0.0 && z.real() <= 0.0)
        throw BranchError("sqrt_principal: argument on (-inf, 0]");
    return std::sqrt(z);
}

cplx sqrt_branch(cplx z, BranchTag tag) {
    return tag == BranchTag::UpperCut ? sqrt_upper(z) : sqrt_principal(z);
}

cplx sqrt_upper_closure(cplx z) {
    // i * principal_sqrt(-z) has argument in (0, pi); signed zeros are normalized
    // so that the cut itself maps to the limit from above
    if (z.imag() == 0.0) {
        return z.real() >= 0.0 ? cplx(std::sqrt(z.real()), 0.0) : cplx(0.0, std::sqrt(-z.real()));
    }
    return kI * std::sqrt(-z);
}

cplx sqrt_principal_closure(cplx z) {
    if (z.imag() == 0.0) {
        return z.real() >= 0.0 ? cplx(std::sqrt(z.real()), 0.0) : cplx(0.0, std::sqrt(-z.real()));
    }
    return std::sqrt(z);
}

cplx neg_power(cplx z, double p) {
    const cplx w = -z;
    if (w == cplx(0.0)) return 0.0;
    if (w.imag() == 0.0 && w.real() < 0.0) throw BranchError("neg_power: argument on (0, inf)");
    return std::exp(p * std::log(w));
}

}  // namespace freeconv
