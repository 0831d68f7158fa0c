#pragma once

#include "freeconv/common.hpp"

namespace freeconv {

/**
 * Square-root branches.
 *   UpperCut:  argument taken in [0, 2pi), cut along [0, inf); sqrt(-1) = i.
 *   Principal: argument taken in (-pi, pi), cut along (-inf, 0]; sqrt(1) = 1.
 */
enum class BranchTag { UpperCut, Principal };

/// Throws BranchError for z in [0, inf).
cplx sqrt_upper(cplx z);

/// Throws BranchError for z in (-inf, 0].
cplx sqrt_principal(cplx z);

cplx sqrt_branch(cplx z, BranchTag tag);

/// Boundary values from the upper half-plane on the cut instead of an error.
cplx sqrt_upper_closure(cplx z);
cplx sqrt_principal_closure(cplx z);

/// Principal power (-z)^p, cut along [0, inf) in z.
cplx neg_power(cplx z, double p);

}  // namespace freeconv
