#pragma once

#include <cmath>
#include <limits>

#include "cwhyst/errors.hpp"

namespace cwhyst {

// Bracketed bisection refined by Newton. The bracket [lo, hi] must satisfy
// f(lo)*f(hi) <= 0; Newton steps are accepted only while they stay inside the
// current bracket, otherwise the step falls back to bisection, so convergence
// is guaranteed without a good initial guess.
template <class F, class DF>
double find_root(F&& f, DF&& df, double lo, double hi, double tol = 1e-13) {
    double flo = f(lo);
    double fhi = f(hi);
    if (flo == 0.0) return lo;
    if (fhi == 0.0) return hi;
    if (flo * fhi > 0.0) throw NumericalError("find_root: endpoints do not bracket a root");

    double x = 0.5 * (lo + hi);
    for (int it = 0; it < 200; ++it) {
        double fx = f(x);
        if (std::abs(fx) <= tol) return x;
        if ((fx < 0.0) == (flo < 0.0)) {
            lo = x;
            flo = fx;
        } else {
            hi = x;
        }
        const double d = df(x);
        double next = (d != 0.0) ? x - fx / d : std::numeric_limits<double>::quiet_NaN();
        if (!(next > lo && next < hi)) next = 0.5 * (lo + hi);
        if (std::abs(next - x) < 1e-17 * (1.0 + std::abs(x)) && std::abs(fx) < 1e3 * tol) return x;
        x = next;
        if (hi - lo < 4.0 * std::numeric_limits<double>::epsilon() * (1.0 + std::abs(x))) break;
    }
    return x;
}

template <class F>
double find_root_bisect(F&& f, double lo, double hi, double xtol = 1e-13) {
    double flo = f(lo);
    double fhi = f(hi);
    if (flo == 0.0) return lo;
    if (fhi == 0.0) return hi;
    if (flo * fhi > 0.0) throw NumericalError("find_root_bisect: invalid bracket");
    while (hi - lo > xtol) {
        const double mid = 0.5 * (lo + hi);
        if (mid <= lo || mid >= hi) break;  // hit floating point resolution
        const double fm = f(mid);
        if (fm == 0.0) return mid;
        if ((fm < 0.0) == (flo < 0.0)) {
            lo = mid;
            flo = fm;
        } else {
            hi = mid;
        }
    }
    return 0.5 * (lo + hi);
}

}  // namespace cwhyst
