#pragma once

#include <string>

namespace freeconv {

enum class SolveMethod { Picard, NewtonFallback, Continuation, Ladder, Direct };

std::string to_string(SolveMethod m);

struct SolverSettings {
    double tol = 1e-12;        // on |w_{n+1} - w_n|
    int max_iter = 10000;      // Picard cap
    int slow_window = 200;     // slow steps before switching to Newton
    double slow_ratio = 0.95;  // contraction estimate regarded as slow
    int newton_max = 200;
};

/// Per-solve record: iteration counts, final residual, method, convergence.
struct SolverDiagnostics {
    int iterations = 0;
    double residual = 0.0;
    SolveMethod method = SolveMethod::Picard;
    bool converged = false;
    bool nonmonotone = false;  // residual increased at some step
};

}  // namespace freeconv
