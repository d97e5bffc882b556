#pragma once

// Screen-impact laws for the two-slit setup: the interference ("wave") law
// proportional to cos^2(pi x / a + phase) and the non-interference
// ("particle") law, both conditioned on landing inside a finite, symmetric
// screen window.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <memory>
#include <numbers>
#include <span>
#include <string>
#include <vector>

#include "duality/errors.hpp"
#include "duality/quadrature.hpp"
#include "duality/rng.hpp"

namespace duality {

inline constexpr double kPi = std::numbers::pi;

struct OpticsConfig {
    double wavelength_m = 500e-9;
    double slit_separation_m = 0.2e-3;
    double slit_screen_distance_m = 2.0;
    double screen_halfwidth_m = 5e-3;
    double intensity_scale = 1.0; // I0; cancels in every normalized quantity
    bool envelope_enabled = false;
    double slit_width_m = 20e-6; // single-slit envelope only

    /// Fringe period a = lambda L / d.
    [[nodiscard]] double fringe_scale() const noexcept {
        return wavelength_m * slit_screen_distance_m / slit_separation_m;
    }
    [[nodiscard]] double window_lo() const noexcept { return -screen_halfwidth_m; }
    [[nodiscard]] double window_hi() const noexcept { return screen_halfwidth_m; }
    [[nodiscard]] double window_width() const noexcept { return 2.0 * screen_halfwidth_m; }
    [[nodiscard]] double fringe_periods() const noexcept { return window_width() / fringe_scale(); }

    [[nodiscard]] bool integer_fringe_window() const noexcept {
        const double m = fringe_periods();
        const double r = std::round(m);
        return r >= 1.0 && std::abs(m - r) <= 1e-9 * std::max(1.0, m);
    }

    [[nodiscard]] double paraxial_ratio() const noexcept { return screen_halfwidth_m / slit_screen_distance_m; }
    [[nodiscard]] bool paraxial_warning() const noexcept { return paraxial_ratio() > 0.1; }

    [[nodiscard]] bool contains(double x) const noexcept { return x >= window_lo() && x <= window_hi(); }

    void validate(bool require_integer_fringes = false) const {
        auto positive = [](double v, const char* name) {
            if (!std::isfinite(v) || v <= 0.0)
                throw ValidationError(std::string("optics.") + name + " must be positive and finite");
        };
        positive(wavelength_m, "wavelength_m");
        positive(slit_separation_m, "slit_separation_m");
        positive(slit_screen_distance_m, "slit_screen_distance_m");
        positive(screen_halfwidth_m, "screen_halfwidth_m");
        positive(intensity_scale, "intensity_scale");
        if (envelope_enabled) positive(slit_width_m, "slit_width_m");
        const double a = fringe_scale();
        if (!std::isfinite(a) || a <= 0.0) throw ValidationError("fringe scale a = lambda L / d must be positive and finite");
        if (require_integer_fringes && !integer_fringe_window())
            throw ValidationError("screen window must span an integer number (>= 1) of fringe periods");
    }

    bool operator==(const OpticsConfig&) const = default;
};

/// Half-open [lo, hi) in meters.
struct Interval {
    double lo = 0.0;
    double hi = 0.0;
    [[nodiscard]] double width() const noexcept { return hi - lo; }
    bool operator==(const Interval&) const = default;
};

/// Sorted, pairwise disjoint union of half-open intervals.
class IntervalSet {
public:
    IntervalSet() = default;

    explicit IntervalSet(std::vector<Interval> intervals) : intervals_(std::move(intervals)) {
        for (std::size_t i = 0; i < intervals_.size(); ++i) {
            const auto& iv = intervals_[i];
            if (!std::isfinite(iv.lo) || !std::isfinite(iv.hi) || !(iv.lo < iv.hi))
                throw ValidationError("interval set: every interval needs lo < hi");
            if (i > 0 && intervals_[i - 1].hi > iv.lo)
                throw ValidationError("interval set: intervals must be sorted and disjoint");
        }
    }

    /// Sorts and merges overlapping or touching pieces; drops empty ones.
    static IntervalSet merged(std::vector<Interval> pieces) {
        std::erase_if(pieces, [](const Interval& iv) { return !(iv.lo < iv.hi); });
        std::sort(pieces.begin(), pieces.end(), [](const Interval& l, const Interval& r) { return l.lo < r.lo; });
        std::vector<Interval> out;
        for (const auto& iv : pieces) {
            if (!out.empty() && iv.lo <= out.back().hi)
                out.back().hi = std::max(out.back().hi, iv.hi);
            else
                out.push_back(iv);
        }
        return IntervalSet(std::move(out));
    }

    static IntervalSet full(const OpticsConfig& cfg) { return IntervalSet({{cfg.window_lo(), cfg.window_hi()}}); }

    [[nodiscard]] const std::vector<Interval>& intervals() const noexcept { return intervals_; }
    [[nodiscard]] bool empty() const noexcept { return intervals_.empty(); }
    [[nodiscard]] std::size_t size() const noexcept { return intervals_.size(); }

    [[nodiscard]] double measure() const noexcept {
        double m = 0.0;
        for (const auto& iv : intervals_) m += iv.width();
        return m;
    }

    [[nodiscard]] bool contains(double x) const noexcept {
        auto it = std::upper_bound(intervals_.begin(), intervals_.end(), x,
                                   [](double v, const Interval& iv) { return v < iv.lo; });
        if (it == intervals_.begin()) return false;
        --it;
        return x < it->hi;
    }

    /// Complement within [lo, hi).
    [[nodiscard]] IntervalSet complement(double lo, double hi) const {
        std::vector<Interval> out;
        double cursor = lo;
        for (const auto& iv : intervals_) {
            if (iv.lo > cursor) out.push_back({cursor, std::min(iv.lo, hi)});
            cursor = std::max(cursor, iv.hi);
        }
        if (cursor < hi) out.push_back({cursor, hi});
        std::erase_if(out, [](const Interval& iv) { return !(iv.lo < iv.hi); });
        return IntervalSet(std::move(out));
    }

    [[nodiscard]] IntervalSet complement(const OpticsConfig& cfg) const {
        return complement(cfg.window_lo(), cfg.window_hi());
    }

    void validate_within(const OpticsConfig& cfg) const {
        for (const auto& iv : intervals_)
            if (iv.lo < cfg.window_lo() || iv.hi > cfg.window_hi())
                throw ValidationError("interval set extends outside the screen window");
    }

    bool operator==(const IntervalSet&) const = default;

private:
    std::vector<Interval> intervals_;
};

enum class PatternKind { Wave, Particle };

[[nodiscard]] inline const char* to_string(PatternKind k) noexcept {
    return k == PatternKind::Wave ? "Wave" : "Particle";
}

namespace detail {

inline double sinc_squared(double t) noexcept {
    if (std::abs(t) < 1e-8) return 1.0 - t * t / 3.0;
    const double s = std::sin(t) / t;
    return s * s;
}

inline void require_in_window(const OpticsConfig& cfg, double x) {
    if (!(x >= cfg.window_lo() && x <= cfg.window_hi()))
        throw DomainError("position " + std::to_string(x) + " m lies outside the screen window");
}

} // namespace detail

/// A normalized screen-impact law. Immutable; cheap to copy (the envelope
/// mode shares its cumulative table).
class PatternDistribution {
public:
    PatternDistribution(PatternKind kind, const OpticsConfig& cfg, double phase_rad = 0.0)
        : kind_(kind), cfg_(cfg), phase_(kind == PatternKind::Wave ? phase_rad : 0.0) {
        cfg_.validate();
        if (!std::isfinite(phase_)) throw ValidationError("pattern phase must be finite");
        a_ = cfg_.fringe_scale();
        if (!cfg_.envelope_enabled)
            init_closed_form();
        else
            init_table();
    }

    static PatternDistribution wave(const OpticsConfig& cfg, double phase_rad = 0.0) {
        return {PatternKind::Wave, cfg, phase_rad};
    }
    static PatternDistribution particle(const OpticsConfig& cfg) { return {PatternKind::Particle, cfg}; }

    [[nodiscard]] PatternKind kind() const noexcept { return kind_; }
    [[nodiscard]] double phase() const noexcept { return phase_; }
    [[nodiscard]] const OpticsConfig& config() const noexcept { return cfg_; }
    /// Multiplicative constant c turning the unnormalized profile into a density.
    [[nodiscard]] double normalization() const noexcept { return 1.0 / norm_; }

    [[nodiscard]] double density(double x) const {
        detail::require_in_window(cfg_, x);
        return density_unchecked(x);
    }

    [[nodiscard]] double density_unchecked(double x) const noexcept { return profile(x) / norm_; }

    [[nodiscard]] double cdf(double x) const {
        detail::require_in_window(cfg_, x);
        return cdf_unchecked(x);
    }

    [[nodiscard]] double cdf_unchecked(double x) const noexcept {
        const double h = cfg_.screen_halfwidth_m;
        if (x <= -h) return 0.0;
        if (x >= h) return 1.0;
        double v = 0.0;
        if (!table_) {
            if (kind_ == PatternKind::Particle) {
                v = (x + h) / cfg_.window_width();
            } else {
                const double k = 2.0 * kPi / a_;
                v = ((x + h) / 2.0 + (a_ / (4.0 * kPi)) * (std::sin(k * x + 2.0 * phase_) - sin_lo_)) / norm_;
            }
        } else {
            const auto& t = *table_;
            const double step = cfg_.window_width() / static_cast<double>(t.cum.size() - 1);
            auto cell = static_cast<std::size_t>((x + h) / step);
            cell = std::min(cell, t.cum.size() - 2);
            const double node = -h + step * static_cast<double>(cell);
            v = (t.cum[cell] + adaptive_simpson([this](double s) { return profile(s); }, node, x, t.cell_tol, 1)) / norm_;
        }
        return std::clamp(v, 0.0, 1.0);
    }

    /// Inverse CDF refined to |F(x) - u| <= 1e-12; bisection safeguards the
    /// Newton steps where the density vanishes.
    [[nodiscard]] double quantile(double u) const {
        if (!(u >= 0.0 && u <= 1.0)) throw DomainError("quantile level must lie in [0, 1]");
        double lo = cfg_.window_lo();
        double hi = cfg_.window_hi();
        if (u <= 0.0) return lo;
        if (u >= 1.0) return hi;
        if (table_) {
            const auto& t = *table_;
            const double target = u * norm_;
            auto it = std::upper_bound(t.cum.begin(), t.cum.end(), target);
            const auto cell = static_cast<std::size_t>(std::clamp<std::ptrdiff_t>(it - t.cum.begin() - 1, 0,
                                                                                  static_cast<std::ptrdiff_t>(t.cum.size()) - 2));
            const double step = cfg_.window_width() / static_cast<double>(t.cum.size() - 1);
            lo = cfg_.window_lo() + step * static_cast<double>(cell);
            hi = std::min(cfg_.window_hi(), lo + step);
        }
        return refine(u, lo, hi, lo + u * (hi - lo));
    }

    [[nodiscard]] double mass(const IntervalSet& set) const {
        double m = 0.0;
        for (const auto& iv : set.intervals()) m += cdf_unchecked(iv.hi) - cdf_unchecked(iv.lo);
        return m;
    }

    double sample(Stream& rng) const { return quantile(rng.uniform()); }

    /// Draws from the law conditioned on the set.
    double sample_within(const IntervalSet& set, Stream& rng) const {
        double total = 0.0;
        for (const auto& iv : set.intervals()) total += cdf_unchecked(iv.hi) - cdf_unchecked(iv.lo);
        if (!(total > 0.0)) throw DomainError("cannot condition a pattern on a set of zero probability");
        double v = rng.uniform() * total;
        for (const auto& iv : set.intervals()) {
            const double flo = cdf_unchecked(iv.lo);
            const double m = cdf_unchecked(iv.hi) - flo;
            if (v < m || &iv == &set.intervals().back()) {
                const double target = std::min(flo + v, flo + m);
                const double x = refine(target, iv.lo, iv.hi, iv.lo + (m > 0 ? v / m : 0.5) * iv.width());
                return std::clamp(x, iv.lo, std::nextafter(iv.hi, iv.lo));
            }
            v -= m;
        }
        return set.intervals().back().lo; // unreachable
    }

    /// Unnormalized screen intensity: 4 I0 cos^2 for interference, 2 I0 flat otherwise.
    [[nodiscard]] double intensity(double x) const noexcept {
        return (kind_ == PatternKind::Wave ? 4.0 : 2.0) * cfg_.intensity_scale * profile(x);
    }

private:
    struct Table {
        std::vector<double> cum; // unnormalized cumulative integral at uniform nodes
        double cell_tol = 0.0;
    };

    [[nodiscard]] double envelope(double x) const noexcept {
        const double scale = kPi * cfg_.slit_width_m / (cfg_.wavelength_m * cfg_.slit_screen_distance_m);
        return detail::sinc_squared(scale * x);
    }

    [[nodiscard]] double profile(double x) const noexcept {
        if (kind_ == PatternKind::Wave) {
            const double c = std::cos(kPi * x / a_ + phase_);
            return cfg_.envelope_enabled ? envelope(x) * c * c : c * c;
        }
        if (!cfg_.envelope_enabled) return 1.0;
        const double half_d = 0.5 * cfg_.slit_separation_m;
        return 0.5 * (envelope(x - half_d) + envelope(x + half_d));
    }

    void init_closed_form() {
        const double h = cfg_.screen_halfwidth_m;
        if (kind_ == PatternKind::Particle) {
            norm_ = cfg_.window_width();
            return;
        }
        const double k = 2.0 * kPi / a_;
        sin_lo_ = std::sin(-k * h + 2.0 * phase_);
        if (cfg_.integer_fringe_window())
            norm_ = h; // integral of cos^2 over whole periods is W/2
        else
            norm_ = h + (a_ / (4.0 * kPi)) * (std::sin(k * h + 2.0 * phase_) - sin_lo_);
    }

    void init_table() {
        const auto cells = static_cast<std::size_t>(std::max(256.0, 64.0 * std::ceil(cfg_.fringe_periods())));
        auto t = std::make_shared<Table>();
        t->cum.resize(cells + 1, 0.0);
        const double step = cfg_.window_width() / static_cast<double>(cells);
        t->cell_tol = 1e-14 * cfg_.window_width() / static_cast<double>(cells);
        auto f = [this](double s) { return profile(s); };
        for (std::size_t i = 0; i < cells; ++i) {
            const double lo = cfg_.window_lo() + step * static_cast<double>(i);
            t->cum[i + 1] = t->cum[i] + adaptive_simpson(f, lo, lo + step, t->cell_tol, 1);
        }
        norm_ = t->cum.back();
        table_ = std::move(t);
    }

    [[nodiscard]] double refine(double u, double lo, double hi, double x) const {
        constexpr double tol = 1e-13;
        const double xtol = 1e-15 * cfg_.window_width();
        x = std::clamp(x, lo, hi);
        for (int iter = 0; iter < 200; ++iter) {
            const double f = cdf_unchecked(x) - u;
            if (std::abs(f) <= tol) return x;
            if (f > 0.0)
                hi = x;
            else
                lo = x;
            if (hi - lo <= xtol) return x;
            const double d = density_unchecked(x);
            double next = d > 0.0 ? x - f / d : lo;
            if (!(next > lo && next < hi)) next = 0.5 * (lo + hi);
            x = next;
        }
        return x;
    }

    PatternKind kind_;
    OpticsConfig cfg_;
    double phase_ = 0.0;
    double a_ = 0.0;
    double norm_ = 1.0;
    double sin_lo_ = 0.0;
    std::shared_ptr<const Table> table_;
};

/// Normalized interference density c cos^2(pi x / a + phase).
[[nodiscard]] inline double wave_density(double x, const OpticsConfig& cfg, double phase_rad = 0.0) {
    return PatternDistribution::wave(cfg, phase_rad).density(x);
}

/// Normalized non-interference density (flat 1/W unless the envelope is enabled).
[[nodiscard]] inline double particle_density(double x, const OpticsConfig& cfg) {
    return PatternDistribution::particle(cfg).density(x);
}

[[nodiscard]] inline double pattern_cdf(const PatternDistribution& dist, double x) { return dist.cdf(x); }

inline double sample_impact(const PatternDistribution& dist, Stream& rng) { return dist.sample(rng); }

/// Equal-width binned counts over [lo, hi).
struct Histogram {
    double lo = 0.0;
    double hi = 1.0;
    double fringe_period = 1.0;
    std::vector<std::uint64_t> counts;

    /// 50 bins per fringe period, capped at 500, edges on the window edges.
    static Histogram fringe_aligned(const OpticsConfig& cfg) {
        const double per = 50.0 * cfg.fringe_periods();
        const auto bins = static_cast<std::size_t>(std::clamp(std::round(per), 20.0, 500.0));
        return Histogram{cfg.window_lo(), cfg.window_hi(), cfg.fringe_scale(), std::vector<std::uint64_t>(bins, 0)};
    }

    [[nodiscard]] std::size_t bins() const noexcept { return counts.size(); }
    [[nodiscard]] double bin_width() const noexcept { return (hi - lo) / static_cast<double>(counts.size()); }
    [[nodiscard]] double bin_center(std::size_t i) const noexcept {
        return lo + (static_cast<double>(i) + 0.5) * bin_width();
    }

    [[nodiscard]] std::size_t bin_of(double x) const noexcept {
        auto b = static_cast<std::ptrdiff_t>(std::floor((x - lo) / bin_width()));
        return static_cast<std::size_t>(std::clamp<std::ptrdiff_t>(b, 0, static_cast<std::ptrdiff_t>(counts.size()) - 1));
    }

    void add(double x) noexcept {
        if (x < lo || x > hi) return;
        ++counts[bin_of(x)];
    }

    [[nodiscard]] std::uint64_t total() const noexcept {
        std::uint64_t t = 0;
        for (auto c : counts) t += c;
        return t;
    }

    Histogram& operator+=(const Histogram& other) {
        for (std::size_t i = 0; i < counts.size(); ++i) counts[i] += other.counts[i];
        return *this;
    }

    bool operator==(const Histogram&) const = default;
};

/// Visibility (I_max - I_min) / (I_max + I_min) of the best-fit fringe
/// I(x) = A (1 + V cos(2 pi x / a + psi)). The first Fourier harmonic of the
/// bin values is corrected for bin averaging, so exactly binned cos^2 gives 1
/// and a flat law gives 0.
[[nodiscard]] inline double fringe_visibility(std::span<const double> bin_values, double lo, double hi, double period) {
    if (bin_values.size() < 20) throw ValidationError("fringe visibility needs at least 20 bins");
    double total = 0.0;
    for (double v : bin_values) total += v;
    if (!(total > 0.0)) throw ValidationError("fringe visibility of an empty histogram");
    const double width = (hi - lo) / static_cast<double>(bin_values.size());
    const double k = 2.0 * kPi / period;
    double c = 0.0;
    double s = 0.0;
    for (std::size_t i = 0; i < bin_values.size(); ++i) {
        const double x = lo + (static_cast<double>(i) + 0.5) * width;
        c += bin_values[i] * std::cos(k * x);
        s += bin_values[i] * std::sin(k * x);
    }
    const double arg = kPi * width / period;
    const double attenuation = std::sin(arg) / arg;
    return std::clamp(2.0 * std::hypot(c, s) / total / attenuation, 0.0, 1.0);
}

[[nodiscard]] inline double fringe_visibility(const Histogram& h) {
    std::vector<double> values(h.counts.begin(), h.counts.end());
    return fringe_visibility(values, h.lo, h.hi, h.fringe_period);
}

} // namespace duality
