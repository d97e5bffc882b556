#pragma once

// Rendering policies: which screen law governs an impact, as a function of
// whether which-way data exists at the time the pattern is evaluated.

#include <cmath>
#include <limits>
#include <optional>

#include "duality/errors.hpp"
#include "duality/optics.hpp"

namespace duality {

enum class RenderingPolicy {
    CollapseAtDetection,  // detection by an apparatus fixes the particle law
    RenderAtAvailability, // the law follows which-way availability on objective media
};

enum class AvailabilityHorizon { AtImpactTime, AtObservationTime };

struct RenderingModel {
    RenderingPolicy policy = RenderingPolicy::RenderAtAvailability;
    AvailabilityHorizon availability_horizon = AvailabilityHorizon::AtObservationTime;

    bool operator==(const RenderingModel&) const = default;
};

enum class MediumKind {
    None,       // nothing stores the datum
    Volatile,   // subjective or otherwise non-objective; never counts as available
    Persistent, // objective storage until explicitly erased
    Perishable, // objective storage that expires ttl seconds after detection
};

struct Medium {
    MediumKind kind = MediumKind::None;
    double ttl_s = std::numeric_limits<double>::infinity(); // Perishable only

    [[nodiscard]] bool objective() const noexcept {
        return kind == MediumKind::Persistent || kind == MediumKind::Perishable;
    }
    bool operator==(const Medium&) const = default;
};

/// Life record of one which-way datum.
struct AvailabilityRecord {
    bool detected = false;
    bool recorded = false;
    double detected_at = 0.0;
    std::optional<double> erased_at;
    Medium medium;
    double observation_time = 0.0;

    [[nodiscard]] std::optional<double> expiry() const noexcept {
        if (medium.kind != MediumKind::Perishable) return std::nullopt;
        return detected_at + medium.ttl_s;
    }

    void validate() const {
        if (recorded && !detected) throw ValidationError("availability: recorded implies detected");
        if (recorded && !medium.objective())
            throw ValidationError("availability: a recorded datum needs a persistent or perishable medium");
        if (erased_at && *erased_at < detected_at)
            throw ValidationError("availability: erasure cannot precede detection");
        if (medium.kind == MediumKind::Perishable && !(medium.ttl_s > 0.0))
            throw ValidationError("availability: perishable medium needs a positive ttl");
    }

    bool operator==(const AvailabilityRecord&) const = default;
};

/// Is which-way data available at time `at` under `model`?
[[nodiscard]] inline bool which_way_available(const AvailabilityRecord& rec, const RenderingModel& model, double at) {
    if (model.policy == RenderingPolicy::CollapseAtDetection) return rec.detected;
    if (!rec.recorded || !rec.medium.objective()) return false;
    if (at < rec.detected_at) return false;
    if (rec.erased_at && *rec.erased_at <= at) return false;
    if (const auto exp = rec.expiry(); exp && !(at < *exp)) return false;
    return true;
}

/// The instant at which the policy evaluates availability for an impact.
[[nodiscard]] inline double evaluation_time(const AvailabilityRecord& rec, const RenderingModel& model,
                                            double impact_time) noexcept {
    return model.availability_horizon == AvailabilityHorizon::AtImpactTime ? impact_time : rec.observation_time;
}

[[nodiscard]] inline PatternDistribution select_pattern(bool available, const OpticsConfig& cfg,
                                                        double subset_phase_rad = 0.0) {
    return available ? PatternDistribution::particle(cfg) : PatternDistribution::wave(cfg, subset_phase_rad);
}

/// Pre-built laws used by the protocol runners, so envelope tables are
/// constructed once per run rather than once per impact.
class PatternBank {
public:
    explicit PatternBank(const OpticsConfig& cfg)
        : particle_(PatternDistribution::particle(cfg)),
          fringe_(PatternDistribution::wave(cfg, 0.0)),
          anti_fringe_(PatternDistribution::wave(cfg, kPi / 2.0)) {}

    [[nodiscard]] const PatternDistribution& particle() const noexcept { return particle_; }
    [[nodiscard]] const PatternDistribution& fringe() const noexcept { return fringe_; }
    [[nodiscard]] const PatternDistribution& anti_fringe() const noexcept { return anti_fringe_; }

    [[nodiscard]] const PatternDistribution& select(bool available, bool anti = false) const noexcept {
        if (available) return particle_;
        return anti ? anti_fringe_ : fringe_;
    }

private:
    PatternDistribution particle_;
    PatternDistribution fringe_;
    PatternDistribution anti_fringe_;
};

} // namespace duality
