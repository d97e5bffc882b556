#pragma once

// Reference values computed independently of the library: Gauss-Kronrod
// quadrature of the closed-form densities.

#include <cmath>
#include <numbers>
#include <vector>

#include <boost/math/quadrature/gauss_kronrod.hpp>

#include "duality/optics.hpp"

namespace oracle {

inline constexpr double pi = std::numbers::pi;

/// Integral of f over [lo, hi], split at every multiple of `step` so each
/// piece is smooth.
template <class F>
double integrate(F f, double lo, double hi, double step) {
    using boost::math::quadrature::gauss_kronrod;
    std::vector<double> cuts{lo};
    for (double k = std::ceil(lo / step); k * step < hi; k += 1.0)
        if (k * step > lo) cuts.push_back(k * step);
    cuts.push_back(hi);
    double sum = 0.0;
    for (std::size_t i = 0; i + 1 < cuts.size(); ++i)
        sum += gauss_kronrod<double, 31>::integrate(f, cuts[i], cuts[i + 1], 8, 1e-12);
    return sum;
}

inline double cos2(double x, double a, double phase = 0.0) {
    const double c = std::cos(pi * x / a + phase);
    return c * c;
}

/// Normalized cos^2 density for an arbitrary (not necessarily integer) window.
struct WaveDensity {
    double a;
    double phase;
    double z;

    WaveDensity(const duality::OpticsConfig& cfg, double phase_rad = 0.0)
        : a(cfg.fringe_scale()), phase(phase_rad),
          z(integrate([&](double t) { return cos2(t, a, phase_rad); }, cfg.window_lo(), cfg.window_hi(), a / 4)) {}

    double operator()(double x) const { return cos2(x, a, phase) / z; }
};

/// TV distance between the default wave and flat laws.
inline double tv(const duality::OpticsConfig& cfg) {
    const double a = cfg.fringe_scale();
    const double w = cfg.window_width();
    return 0.5 * integrate([&](double x) { return std::abs(2.0 * cos2(x, a) / w - 1.0 / w); }, cfg.window_lo(),
                           cfg.window_hi(), a / 4);
}

} // namespace oracle
