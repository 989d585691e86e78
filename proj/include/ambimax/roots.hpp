#ifndef AMBIMAX_ROOTS_HPP
#define AMBIMAX_ROOTS_HPP

#include <cmath>
#include <string>

#include "ambimax/error.hpp"

namespace ambimax {

struct BisectionResult {
    double x = 0.0;
    double fx = 0.0;
    double lo = 0.0;
    double hi = 0.0;
    int iterations = 0;
};

/// Bisection for a sign change of `f` on [lo, hi], run until the bracket can
/// no longer be split in floating point or `max_iter` halvings are done.
/// The returned point is the bracket end with the smaller |f|.
template <class F>
BisectionResult bisect(F&& f, double lo, double hi, double flo, double fhi, int max_iter = 300) {
    if (!(flo * fhi <= 0.0)) {
        throw NumericalError("bisection bracket without sign change: f(" + std::to_string(lo) + ") = " +
                             std::to_string(flo) + ", f(" + std::to_string(hi) + ") = " + std::to_string(fhi));
    }
    BisectionResult r;
    if (flo == 0.0) return {lo, flo, lo, lo, 0};
    if (fhi == 0.0) return {hi, fhi, hi, hi, 0};
    const bool rising = flo < 0.0;
    int it = 0;
    for (; it < max_iter; ++it) {
        const double mid = 0.5 * (lo + hi);
        if (mid <= lo || mid >= hi) break;
        const double fm = f(mid);
        if (fm == 0.0) return {mid, fm, mid, mid, it + 1};
        if ((fm < 0.0) == rising) {
            lo = mid;
            flo = fm;
        } else {
            hi = mid;
            fhi = fm;
        }
    }
    r.lo = lo;
    r.hi = hi;
    r.iterations = it;
    if (std::abs(flo) <= std::abs(fhi)) {
        r.x = lo;
        r.fx = flo;
    } else {
        r.x = hi;
        r.fx = fhi;
    }
    return r;
}

template <class F>
BisectionResult bisect(F&& f, double lo, double hi, int max_iter = 300) {
    const double flo = f(lo);
    const double fhi = f(hi);
    return bisect(f, lo, hi, flo, fhi, max_iter);
}

}  // namespace ambimax

#endif
