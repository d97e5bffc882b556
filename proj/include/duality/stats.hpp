#pragma once

// Erasure posteriors, the delta(I) / total-variation machinery behind the
// switch argument, pattern classification and sample-size planning.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <functional>
#include <numeric>
#include <optional>
#include <span>
#include <vector>

#include "duality/errors.hpp"
#include "duality/optics.hpp"
#include "duality/quadrature.hpp"

namespace duality {

// ---------------------------------------------------------------------------
// Posterior of the erasure flag R given the impact position X
// ---------------------------------------------------------------------------

enum class PosteriorMode { Exact, Approximate };

/// P[R = 1 | X = x] with the beam-splitter prior P[R = 1] = 1/2.
class PosteriorCurve {
public:
    PosteriorCurve(const OpticsConfig& cfg, PosteriorMode mode)
        : cfg_(cfg), mode_(mode), particle_(PatternDistribution::particle(cfg)), wave_(PatternDistribution::wave(cfg)) {}

    [[nodiscard]] double operator()(double x) const {
        if (mode_ == PosteriorMode::Approximate) {
            const double c = std::cos(kPi * x / cfg_.fringe_scale());
            return 1.0 / (1.0 + 2.0 * c * c);
        }
        const double p = particle_.density(x);
        const double w = wave_.density(x);
        return 1.0 / (1.0 + w / p);
    }

    [[nodiscard]] PosteriorMode mode() const noexcept { return mode_; }
    [[nodiscard]] const OpticsConfig& config() const noexcept { return cfg_; }

private:
    OpticsConfig cfg_;
    PosteriorMode mode_;
    PatternDistribution particle_;
    PatternDistribution wave_;
};

[[nodiscard]] inline double exact_posterior(double x, const OpticsConfig& cfg) {
    return PosteriorCurve(cfg, PosteriorMode::Exact)(x);
}

/// 1 / (1 + 2 cos^2(pi x / a)).
[[nodiscard]] inline double approx_posterior(double x, const OpticsConfig& cfg) {
    const double c = std::cos(kPi * x / cfg.fringe_scale());
    return 1.0 / (1.0 + 2.0 * c * c);
}

// ---------------------------------------------------------------------------
// delta(I), total variation, optimal interval sets
// ---------------------------------------------------------------------------

/// delta(I) = P_particle[X in I] + P_wave[X not in I].
[[nodiscard]] inline double delta_of_interval_set(const IntervalSet& set, const PatternDistribution& particle,
                                                  const PatternDistribution& wave) {
    set.validate_within(particle.config());
    return particle.mass(set) + (1.0 - wave.mass(set));
}

[[nodiscard]] inline double delta_of_interval_set(const IntervalSet& set, const OpticsConfig& cfg) {
    return delta_of_interval_set(set, PatternDistribution::particle(cfg), PatternDistribution::wave(cfg));
}

namespace detail {

/// {x in [lo, hi) : f(x) > 0}, located from sign changes on a grid and
/// refined by bisection.
template <class F>
IntervalSet positive_set(const F& f, double lo, double hi, std::size_t grid, double zero_tol) {
    auto sign = [&](double v) { return v > zero_tol ? 1 : (v < -zero_tol ? -1 : 0); };
    auto crossing = [&](double a, double b) {
        const bool a_pos = f(a) > 0.0;
        for (int i = 0; i < 200 && b - a > 1e-15 * (hi - lo); ++i) {
            const double m = 0.5 * (a + b);
            if ((f(m) > 0.0) == a_pos)
                a = m;
            else
                b = m;
        }
        return 0.5 * (a + b);
    };
    std::vector<Interval> out;
    const double step = (hi - lo) / static_cast<double>(grid);
    int prev_sign = 0;
    double prev_x = lo;
    bool is_open = false;
    double open_at = lo;
    for (std::size_t i = 0; i <= grid; ++i) {
        const double x = (i == grid) ? hi : lo + step * static_cast<double>(i);
        const int s = sign(f(x));
        if (s == 0) continue;
        if (prev_sign == 0) {
            if (s > 0) {
                is_open = true;
                open_at = lo;
            }
        } else if (s != prev_sign) {
            const double c = crossing(prev_x, x);
            if (s > 0) {
                is_open = true;
                open_at = c;
            } else if (is_open) {
                out.push_back({open_at, c});
                is_open = false;
            }
        }
        prev_sign = s;
        prev_x = x;
    }
    if (is_open) out.push_back({open_at, hi});
    return IntervalSet::merged(std::move(out));
}

inline std::size_t crossing_grid(const OpticsConfig& cfg) {
    return static_cast<std::size_t>(std::max(2048.0, 64.0 * std::ceil(cfg.fringe_periods())));
}

} // namespace detail

/// The set where the interference law is more likely than the flat law,
/// {x : w(x) > p(x)}. It minimizes delta(I), with delta(I*) = 1 - TV.
[[nodiscard]] inline IntervalSet optimal_interval_set(const OpticsConfig& cfg) {
    cfg.validate();
    if (!cfg.envelope_enabled) {
        // w > p  <=>  cos^2(pi x / a) > r, with r = Z / W for the wave normalizer Z.
        const auto wave = PatternDistribution::wave(cfg);
        const double r = 1.0 / (wave.normalization() * cfg.window_width());
        if (r >= 1.0) return {};
        const double a = cfg.fringe_scale();
        const double half = a / kPi * std::acos(std::sqrt(r));
        std::vector<Interval> pieces;
        const auto k_lo = static_cast<long long>(std::floor(cfg.window_lo() / a)) - 1;
        const auto k_hi = static_cast<long long>(std::ceil(cfg.window_hi() / a)) + 1;
        for (long long k = k_lo; k <= k_hi; ++k) {
            const double c = a * static_cast<double>(k);
            const double lo = std::max(c - half, cfg.window_lo());
            const double hi = std::min(c + half, cfg.window_hi());
            if (lo < hi) pieces.push_back({lo, hi});
        }
        return IntervalSet::merged(std::move(pieces));
    }
    const auto wave = PatternDistribution::wave(cfg);
    const auto particle = PatternDistribution::particle(cfg);
    const double scale = 1.0 / cfg.window_width();
    return detail::positive_set([&](double x) { return wave.density_unchecked(x) - particle.density_unchecked(x); },
                                cfg.window_lo(), cfg.window_hi(), detail::crossing_grid(cfg), 1e-12 * scale);
}

/// Total variation between two laws on the same window: P[A] - Q[A] for
/// A = {p > q}.
[[nodiscard]] inline double tv_distance(const PatternDistribution& p, const PatternDistribution& q) {
    const auto& cfg = p.config();
    if (!(cfg == q.config())) throw ValidationError("tv_distance needs both laws on the same optics config");
    const double scale = 1.0 / cfg.window_width();
    const auto above = detail::positive_set([&](double x) { return p.density_unchecked(x) - q.density_unchecked(x); },
                                            cfg.window_lo(), cfg.window_hi(), detail::crossing_grid(cfg), 1e-12 * scale);
    return std::max(0.0, p.mass(above) - q.mass(above));
}

/// TV(particle, wave); 1/pi for the flat law against cos^2 on whole fringes.
[[nodiscard]] inline double tv_distance(const OpticsConfig& cfg) {
    const auto wave = PatternDistribution::wave(cfg);
    const auto particle = PatternDistribution::particle(cfg);
    const auto best = optimal_interval_set(cfg);
    return wave.mass(best) - particle.mass(best);
}

struct FeasibilityReport {
    IntervalSet interval_set;
    double delta_value = 1.0;
    double tv_value = 0.0;
    double margin = 0.0; // 1 - delta(I)
    bool feasible_under_outcome_i = true;
};

/// Total probability that outcome (i) combined with the interval strategy
/// would assign: delta(I). Anything other than 1 is a contradiction.
[[nodiscard]] inline FeasibilityReport contradiction_margin(const IntervalSet& set, const OpticsConfig& cfg) {
    FeasibilityReport r;
    r.interval_set = set;
    r.delta_value = delta_of_interval_set(set, cfg);
    r.tv_value = tv_distance(cfg);
    r.margin = 1.0 - r.delta_value;
    r.feasible_under_outcome_i = std::abs(r.delta_value - 1.0) <= 1e-9;
    return r;
}

/// Accuracy of the rule "predict R = 1 iff the posterior exceeds 1/2":
/// (1/2) integral of max(w, p).
[[nodiscard]] inline double threshold_predictor_accuracy(const OpticsConfig& cfg) {
    const auto wave = PatternDistribution::wave(cfg);
    const auto particle = PatternDistribution::particle(cfg);
    const auto best = optimal_interval_set(cfg);
    std::vector<double> breaks{cfg.window_lo()};
    for (const auto& iv : best.intervals()) {
        breaks.push_back(iv.lo);
        breaks.push_back(iv.hi);
    }
    breaks.push_back(cfg.window_hi());
    std::sort(breaks.begin(), breaks.end());
    breaks.erase(std::unique(breaks.begin(), breaks.end()), breaks.end());
    auto f = [&](double x) { return 0.5 * std::max(wave.density_unchecked(x), particle.density_unchecked(x)); };
    return adaptive_simpson_piecewise(f, breaks, 1e-12);
}

// ---------------------------------------------------------------------------
// Pattern classification
// ---------------------------------------------------------------------------

enum class Verdict { Wave, Particle, Indeterminate };

[[nodiscard]] inline const char* to_string(Verdict v) noexcept {
    switch (v) {
    case Verdict::Wave: return "Wave";
    case Verdict::Particle: return "Particle";
    default: return "Indeterminate";
    }
}

struct Classification {
    Verdict verdict = Verdict::Indeterminate;
    double log_likelihood_ratio = 0.0; // log w - log p summed over samples
    double phase_rad = 0.0;            // fringe phase of the wave hypothesis
    std::size_t samples = 0;
};

struct ClassifierOptions {
    /// Phase of the wave hypothesis; nullopt estimates it from the data.
    std::optional<double> phase_rad = 0.0;
    /// Decision threshold on |Lambda|; log(999) is 999:1 posterior odds.
    double threshold = std::log(999.0);
    /// Condition both hypotheses on this region (subsets carved by a rule).
    std::optional<IntervalSet> region;
};

/// Phase phi of the best-fit cos^2(pi x / a + phi), from the first Fourier
/// harmonic of the samples. Result lies in (-pi/2, pi/2].
[[nodiscard]] inline double estimate_fringe_phase(std::span<const double> samples, double fringe_period) {
    double c = 0.0;
    double s = 0.0;
    const double k = 2.0 * kPi / fringe_period;
    for (double x : samples) {
        c += std::cos(k * x);
        s += std::sin(k * x);
    }
    if (c == 0.0 && s == 0.0) return 0.0;
    double phi = -0.5 * std::atan2(s, c);
    if (phi <= -kPi / 2.0) phi += kPi;
    return phi;
}

/// Sum of log(h1(x) / h0(x)); both densities floored at 1e-12 / W. Swapping
/// the hypotheses negates the result exactly.
[[nodiscard]] inline double log_likelihood_ratio(std::span<const double> samples, const PatternDistribution& h1,
                                                 const PatternDistribution& h0,
                                                 const std::optional<IntervalSet>& region = std::nullopt) {
    const auto& cfg = h1.config();
    const double floor = 1e-12 / cfg.window_width();
    double m1 = 1.0;
    double m0 = 1.0;
    if (region) {
        m1 = h1.mass(*region);
        m0 = h0.mass(*region);
    }
    double sum = 0.0;
    for (double x : samples) {
        if (!cfg.contains(x)) throw DomainError("classification sample outside the screen window");
        if (region && !region->contains(x)) throw DomainError("classification sample outside the conditioning region");
        const double f1 = std::max(h1.density_unchecked(x) / m1, floor);
        const double f0 = std::max(h0.density_unchecked(x) / m0, floor);
        sum += std::log(f1) - std::log(f0);
    }
    return sum;
}

[[nodiscard]] inline Verdict verdict_for(double llr, double threshold) noexcept {
    if (llr > threshold) return Verdict::Wave;
    if (llr < -threshold) return Verdict::Particle;
    return Verdict::Indeterminate;
}

/// Likelihood-ratio decision between the interference and flat laws.
[[nodiscard]] inline Classification classify_pattern(std::span<const double> samples, const OpticsConfig& cfg,
                                                     const ClassifierOptions& opt = {}) {
    if (samples.empty()) throw ValidationError("classify_pattern needs at least one sample");
    Classification out;
    out.samples = samples.size();
    out.phase_rad = opt.phase_rad ? *opt.phase_rad : estimate_fringe_phase(samples, cfg.fringe_scale());
    const auto wave = PatternDistribution::wave(cfg, out.phase_rad);
    const auto particle = PatternDistribution::particle(cfg);
    if (opt.region && (wave.mass(*opt.region) <= 0.0 || particle.mass(*opt.region) <= 0.0))
        throw DomainError("classification region has zero probability under a hypothesis");
    out.log_likelihood_ratio = log_likelihood_ratio(samples, wave, particle, opt.region);
    out.verdict = verdict_for(out.log_likelihood_ratio, opt.threshold);
    return out;
}

// ---------------------------------------------------------------------------
// Sample-size planning
// ---------------------------------------------------------------------------

/// Bhattacharyya coefficient rho = integral sqrt(p w); 2 sqrt(2) / pi for the
/// default flat-versus-cos^2 pair.
[[nodiscard]] inline double bhattacharyya_coefficient(const OpticsConfig& cfg) {
    const auto wave = PatternDistribution::wave(cfg);
    const auto particle = PatternDistribution::particle(cfg);
    const double a = cfg.fringe_scale();
    // sqrt(w) has kinks at the dark fringes x = a/2 + k a (and at the envelope zeros).
    std::vector<double> breaks{cfg.window_lo(), cfg.window_hi()};
    const auto k_lo = static_cast<long long>(std::floor(cfg.window_lo() / a)) - 1;
    const auto k_hi = static_cast<long long>(std::ceil(cfg.window_hi() / a)) + 1;
    for (long long k = k_lo; k <= k_hi; ++k) {
        const double x = a * (static_cast<double>(k) + 0.5);
        if (x > cfg.window_lo() && x < cfg.window_hi()) breaks.push_back(x);
    }
    if (cfg.envelope_enabled) {
        const double zero = cfg.wavelength_m * cfg.slit_screen_distance_m / cfg.slit_width_m;
        for (double z = zero; z < cfg.window_hi(); z += zero) {
            breaks.push_back(z);
            breaks.push_back(-z);
        }
    }
    std::sort(breaks.begin(), breaks.end());
    breaks.erase(std::unique(breaks.begin(), breaks.end()), breaks.end());
    auto f = [&](double x) { return std::sqrt(wave.density_unchecked(x) * particle.density_unchecked(x)); };
    return adaptive_simpson_piecewise(f, breaks, 1e-12);
}

struct SampleSizePlan {
    std::uint64_t n = 1;
    double rho = 0.0;
};

/// Smallest n with (1/2) rho^n <= target_error: the equal-prior
/// maximum-likelihood error bound.
[[nodiscard]] inline SampleSizePlan required_sample_size(double target_error, const OpticsConfig& cfg) {
    if (!(target_error > 0.0 && target_error < 0.5))
        throw DomainError("required_sample_size: target error must lie in (0, 1/2)");
    SampleSizePlan plan;
    plan.rho = bhattacharyya_coefficient(cfg);
    if (!(plan.rho < 1.0)) throw DomainError("required_sample_size: the two laws are indistinguishable");
    if (plan.rho <= 0.0) return plan;
    auto bound = [&](std::uint64_t n) { return 0.5 * std::pow(plan.rho, static_cast<double>(n)); };
    auto n = static_cast<std::uint64_t>(std::max(1.0, std::ceil(std::log(2.0 * target_error) / std::log(plan.rho))));
    while (n > 1 && bound(n - 1) <= target_error) --n;
    while (bound(n) > target_error) ++n;
    plan.n = n;
    return plan;
}

// ---------------------------------------------------------------------------
// Empirical distances
// ---------------------------------------------------------------------------

/// (1/2) sum_b |p_b - q_b| over a common equal-width binning of [lo, hi).
/// Positively biased by O(sqrt(bins / n)); the bias is not corrected.
[[nodiscard]] inline double tv_distance_empirical(std::span<const double> p, std::span<const double> q,
                                                  std::size_t bins, double lo, double hi) {
    if (p.empty() || q.empty()) throw ValidationError("tv_distance_empirical needs two nonempty samples");
    if (bins < 10) throw ValidationError("tv_distance_empirical needs at least 10 bins");
    if (!(hi > lo)) throw ValidationError("tv_distance_empirical needs hi > lo");
    Histogram hp{lo, hi, 1.0, std::vector<std::uint64_t>(bins, 0)};
    Histogram hq = hp;
    for (double x : p) hp.add(x);
    for (double x : q) hq.add(x);
    const auto np = static_cast<double>(p.size());
    const auto nq = static_cast<double>(q.size());
    double sum = 0.0;
    for (std::size_t b = 0; b < bins; ++b)
        sum += std::abs(static_cast<double>(hp.counts[b]) / np - static_cast<double>(hq.counts[b]) / nq);
    return 0.5 * sum;
}

/// Same, over the range spanned by both samples.
[[nodiscard]] inline double tv_distance_empirical(std::span<const double> p, std::span<const double> q,
                                                  std::size_t bins) {
    if (p.empty() || q.empty()) throw ValidationError("tv_distance_empirical needs two nonempty samples");
    const auto [pmin, pmax] = std::minmax_element(p.begin(), p.end());
    const auto [qmin, qmax] = std::minmax_element(q.begin(), q.end());
    const double lo = std::min(*pmin, *qmin);
    double hi = std::max(*pmax, *qmax);
    hi = hi > lo ? std::nextafter(hi, INFINITY) : lo + 1.0;
    return tv_distance_empirical(p, q, bins, lo, hi);
}

/// Empirical TV between two histograms on the same binning.
[[nodiscard]] inline double tv_distance_empirical(const Histogram& p, const Histogram& q) {
    if (p.counts.size() != q.counts.size()) throw ValidationError("histograms use different binnings");
    const auto np = static_cast<double>(p.total());
    const auto nq = static_cast<double>(q.total());
    if (np <= 0.0 || nq <= 0.0) throw ValidationError("tv_distance_empirical needs two nonempty histograms");
    double sum = 0.0;
    for (std::size_t b = 0; b < p.counts.size(); ++b)
        sum += std::abs(static_cast<double>(p.counts[b]) / np - static_cast<double>(q.counts[b]) / nq);
    return 0.5 * sum;
}

/// One-sample Kolmogorov-Smirnov statistic sup |F_n - F|.
template <class Cdf>
[[nodiscard]] double ks_statistic(std::span<const double> samples, const Cdf& cdf) {
    if (samples.empty()) throw ValidationError("ks_statistic needs samples");
    std::vector<double> sorted(samples.begin(), samples.end());
    std::sort(sorted.begin(), sorted.end());
    const auto n = static_cast<double>(sorted.size());
    double d = 0.0;
    for (std::size_t i = 0; i < sorted.size(); ++i) {
        const double f = cdf(sorted[i]);
        d = std::max({d, (static_cast<double>(i) + 1.0) / n - f, f - static_cast<double>(i) / n});
    }
    return d;
}

} // namespace duality
