#pragma once

#include <cmath>
#include <span>

namespace duality {

namespace detail {

template <class F>
double simpson_step(const F& f, double a, double b, double fa, double fm, double fb, double whole,
                    double tol, int depth) {
    const double m = 0.5 * (a + b);
    const double lm = 0.5 * (a + m);
    const double rm = 0.5 * (m + b);
    const double flm = f(lm);
    const double frm = f(rm);
    const double left = (m - a) / 6.0 * (fa + 4.0 * flm + fm);
    const double right = (b - m) / 6.0 * (fm + 4.0 * frm + fb);
    const double delta = left + right - whole;
    if (depth <= 0 || std::abs(delta) <= 15.0 * tol) return left + right + delta / 15.0;
    return simpson_step(f, a, m, fa, flm, fm, left, 0.5 * tol, depth - 1) +
           simpson_step(f, m, b, fm, frm, fb, right, 0.5 * tol, depth - 1);
}

} // namespace detail

/// Adaptive Simpson quadrature of f over [a, b] with absolute tolerance tol.
/// The interval is pre-split into `pieces` panels so that periodic integrands
/// cannot fool the first error estimate.
template <class F>
double adaptive_simpson(const F& f, double a, double b, double tol = 1e-10, int pieces = 8, int max_depth = 48) {
    if (b <= a) return 0.0;
    const double h = (b - a) / pieces;
    double sum = 0.0;
    for (int i = 0; i < pieces; ++i) {
        const double lo = a + h * i;
        const double hi = (i + 1 == pieces) ? b : a + h * (i + 1);
        const double flo = f(lo);
        const double fhi = f(hi);
        const double fm = f(0.5 * (lo + hi));
        const double whole = (hi - lo) / 6.0 * (flo + 4.0 * fm + fhi);
        sum += detail::simpson_step(f, lo, hi, flo, fm, fhi, whole, tol / pieces, max_depth);
    }
    return sum;
}

/// Integrates over consecutive panels [breaks[i], breaks[i+1]]; used when the
/// integrand has kinks (|f - g|, sqrt(f g)) at known points.
template <class F>
double adaptive_simpson_piecewise(const F& f, std::span<const double> breaks, double tol = 1e-10) {
    double sum = 0.0;
    if (breaks.size() < 2) return sum;
    const double per_panel = tol / static_cast<double>(breaks.size() - 1);
    for (std::size_t i = 0; i + 1 < breaks.size(); ++i)
        sum += adaptive_simpson(f, breaks[i], breaks[i + 1], per_panel, 2);
    return sum;
}

} // namespace duality
