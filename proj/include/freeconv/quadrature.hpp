#pragma once

#include <array>
#include <cmath>
#include <functional>
#include <limits>
#include <queue>

#include "freeconv/common.hpp"

namespace freeconv {

namespace gk {

// 7-point Gauss / 15-point Kronrod nodes on [-1, 1] (non-negative half).
inline constexpr std::array<double, 8> xk = {
    0.991455371120812639206854697526329, 0.949107912342758524526189684047851,
    0.864864423359769072789712788640926, 0.741531185599394439863864773280788,
    0.586087235467691130294144845693013, 0.405845151377397166906606412076961,
    0.207784955007898467600689403773245, 0.000000000000000000000000000000000};
inline constexpr std::array<double, 8> wk = {
    0.022935322010529224963732008058970, 0.063092092629978553290700663189204,
    0.104790010322250183839876322541518, 0.140653259715525918745189590510238,
    0.169004726639267902826583426598550, 0.190350578064785409913256402421014,
    0.204432940075298892414161999234649, 0.209482141084727828012999174891714};
inline constexpr std::array<double, 4> wg = {
    0.129484966168869693270611432679082, 0.279705391489276667901467771423780,
    0.381830050505118944950369775488975, 0.417959183673469387755102040816327};

}  // namespace gk

namespace gl8 {

inline constexpr std::array<double, 4> x = {0.183434642495649804939476142360184,
                                            0.525532409916328985817739049189181,
                                            0.796666477413626739591553936475830,
                                            0.960289856497536231683560868569473};
inline constexpr std::array<double, 4> w = {0.362683783378361982965150449277196,
                                            0.313706645877887287337962201986601,
                                            0.222381034453374470544355994426241,
                                            0.101228536290376259152531354309762};

}  // namespace gl8

template <class T, class F>
void gk15(const F& f, double a, double b, T& result, double& error) {
    const double c = 0.5 * (a + b), h = 0.5 * (b - a);
    const T fc = f(c);
    T kron = fc * gk::wk[7];
    T gauss = fc * gk::wg[3];
    for (int j = 0; j < 7; ++j) {
        const double dx = h * gk::xk[j];
        const T s = f(c - dx) + f(c + dx);
        kron += gk::wk[j] * s;
        if (j % 2 == 1) gauss += gk::wg[j / 2] * s;
    }
    result = kron * h;
    error = std::abs(result - gauss * h);
}

/**
 * Globally adaptive Gauss-Kronrod (7/15): repeatedly bisects the interval with
 * the largest error estimate. Throws ToleranceError when the interval budget
 * is exhausted above tolerance.
 */
template <class T, class F>
T integrate(const F& f, double a, double b, double abs_tol = 1e-12, double rel_tol = 1e-10,
            int max_intervals = 4000) {
    struct Piece {
        double lo, hi;
        T value;
        double err;
        bool operator<(const Piece& o) const { return err < o.err; }
    };
    std::priority_queue<Piece> heap;
    Piece p0{a, b, T{}, 0.0};
    gk15<T>(f, a, b, p0.value, p0.err);
    T total = p0.value;
    double total_err = p0.err;
    heap.push(p0);
    int count = 1;
    while (total_err > std::max(abs_tol, rel_tol * std::abs(total))) {
        if (count >= max_intervals) throw ToleranceError("adaptive quadrature did not converge");
        const Piece p = heap.top();
        const double mid = 0.5 * (p.lo + p.hi);
        if (!(mid > p.lo && mid < p.hi)) break;  // interval exhausted at machine resolution
        heap.pop();
        Piece l{p.lo, mid, T{}, 0.0}, r{mid, p.hi, T{}, 0.0};
        gk15<T>(f, l.lo, l.hi, l.value, l.err);
        gk15<T>(f, r.lo, r.hi, r.value, r.err);
        total += l.value + r.value - p.value;
        total_err += l.err + r.err - p.err;
        heap.push(l);
        heap.push(r);
        ++count;
    }
    // re-sum to shed accumulated cancellation in the running total
    T sum{};
    while (!heap.empty()) {
        sum += heap.top().value;
        heap.pop();
    }
    return sum;
}

}  // namespace freeconv
