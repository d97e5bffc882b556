#pragma once

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "duality/errors.hpp"
#include "duality/models.hpp"
#include "duality/optics.hpp"

namespace duality {

enum class Protocol {
    DoubleSlit,
    DelayedChoice,
    QuantumEraser,
    DetectNoRecord,
    MacroscopicErasure,
    PredictorExperiment,
    SwitchParadox,
    PerishableMedia,
};

enum class PairingMode { IndependentCoinFlips, ExactHalfSubset };
enum class OutcomeHypothesis { I, II, III, IV };
enum class ObservationSchedule { AtT0, AfterDeltaT };
enum class DetectNoRecordVariant { SlitDetectors, NoCoincidenceCounter, D3D4ChannelsOff };
enum class SwitchStage { A, B, C, D };
/// Whether subjective observation of which-way acts like an objective record.
enum class SubjectiveRecording { Equivalent, Distinct };
/// Idealized non-overlapping pattern regions, or the real overlapping laws.
enum class RegionModel { Overlapping, Disjoint };

// ---------------------------------------------------------------------------
// enum <-> string
// ---------------------------------------------------------------------------

template <class E>
struct EnumNames;

#define DUALITY_ENUM_NAMES(E, ...)                                                   \
    template <>                                                                      \
    struct EnumNames<E> {                                                            \
        static constexpr auto values = std::to_array<std::pair<E, std::string_view>>({__VA_ARGS__}); \
    }

DUALITY_ENUM_NAMES(Protocol, {Protocol::DoubleSlit, "DoubleSlit"}, {Protocol::DelayedChoice, "DelayedChoice"},
                   {Protocol::QuantumEraser, "QuantumEraser"}, {Protocol::DetectNoRecord, "DetectNoRecord"},
                   {Protocol::MacroscopicErasure, "MacroscopicErasure"},
                   {Protocol::PredictorExperiment, "PredictorExperiment"}, {Protocol::SwitchParadox, "SwitchParadox"},
                   {Protocol::PerishableMedia, "PerishableMedia"});
DUALITY_ENUM_NAMES(PairingMode, {PairingMode::IndependentCoinFlips, "IndependentCoinFlips"},
                   {PairingMode::ExactHalfSubset, "ExactHalfSubset"});
DUALITY_ENUM_NAMES(OutcomeHypothesis, {OutcomeHypothesis::I, "i"}, {OutcomeHypothesis::II, "ii"},
                   {OutcomeHypothesis::III, "iii"}, {OutcomeHypothesis::IV, "iv"});
DUALITY_ENUM_NAMES(ObservationSchedule, {ObservationSchedule::AtT0, "AtT0"},
                   {ObservationSchedule::AfterDeltaT, "AfterDeltaT"});
DUALITY_ENUM_NAMES(DetectNoRecordVariant, {DetectNoRecordVariant::SlitDetectors, "SlitDetectors"},
                   {DetectNoRecordVariant::NoCoincidenceCounter, "NoCoincidenceCounter"},
                   {DetectNoRecordVariant::D3D4ChannelsOff, "D3D4ChannelsOff"});
DUALITY_ENUM_NAMES(SwitchStage, {SwitchStage::A, "a"}, {SwitchStage::B, "b"}, {SwitchStage::C, "c"},
                   {SwitchStage::D, "d"});
DUALITY_ENUM_NAMES(SubjectiveRecording, {SubjectiveRecording::Equivalent, "Equivalent"},
                   {SubjectiveRecording::Distinct, "Distinct"});
DUALITY_ENUM_NAMES(RegionModel, {RegionModel::Overlapping, "Overlapping"}, {RegionModel::Disjoint, "Disjoint"});
DUALITY_ENUM_NAMES(RenderingPolicy, {RenderingPolicy::CollapseAtDetection, "CollapseAtDetection"},
                   {RenderingPolicy::RenderAtAvailability, "RenderAtAvailability"});
DUALITY_ENUM_NAMES(AvailabilityHorizon, {AvailabilityHorizon::AtImpactTime, "AtImpactTime"},
                   {AvailabilityHorizon::AtObservationTime, "AtObservationTime"});
DUALITY_ENUM_NAMES(MediumKind, {MediumKind::None, "None"}, {MediumKind::Volatile, "Volatile"},
                   {MediumKind::Persistent, "Persistent"}, {MediumKind::Perishable, "Perishable"});

template <class E>
[[nodiscard]] constexpr std::string_view name_of(E e) noexcept {
    for (const auto& [v, n] : EnumNames<E>::values)
        if (v == e) return n;
    return "?";
}

template <class E>
[[nodiscard]] constexpr std::optional<E> enum_from_name(std::string_view s) noexcept {
    for (const auto& [v, n] : EnumNames<E>::values)
        if (n == s) return v;
    return std::nullopt;
}

// ---------------------------------------------------------------------------
// Switch strategies
// ---------------------------------------------------------------------------

struct SwitchStrategy {
    enum class Kind { AlwaysOff, AlwaysOn, Strategy1, Custom };

    Kind kind = Kind::AlwaysOff;
    IntervalSet region;               // Strategy1: activate iff X in region
    std::vector<bool> decision_table; // Custom: one entry per equal-width bin of the window

    static SwitchStrategy always_off() { return {}; }
    static SwitchStrategy always_on() { return {Kind::AlwaysOn, {}, {}}; }
    static SwitchStrategy strategy1(IntervalSet set) { return {Kind::Strategy1, std::move(set), {}}; }
    static SwitchStrategy custom(std::vector<bool> table) { return {Kind::Custom, {}, std::move(table)}; }

    /// Activation decision for the current impact. `history` holds the
    /// earlier impacts X_1..X_{i-1}; the built-in kinds are memoryless.
    [[nodiscard]] bool activates(double x, std::span<const double> /*history*/, const OpticsConfig& cfg) const {
        switch (kind) {
        case Kind::AlwaysOff: return false;
        case Kind::AlwaysOn: return true;
        case Kind::Strategy1: return region.contains(x);
        case Kind::Custom: {
            const double w = cfg.window_width() / static_cast<double>(decision_table.size());
            auto bin = static_cast<std::ptrdiff_t>(std::floor((x - cfg.window_lo()) / w));
            bin = std::clamp<std::ptrdiff_t>(bin, 0, static_cast<std::ptrdiff_t>(decision_table.size()) - 1);
            return decision_table[static_cast<std::size_t>(bin)];
        }
        }
        return false;
    }

    /// The set of impact positions that switch the which-way recording on.
    [[nodiscard]] IntervalSet activation_region(const OpticsConfig& cfg) const {
        switch (kind) {
        case Kind::AlwaysOff: return {};
        case Kind::AlwaysOn: return IntervalSet::full(cfg);
        case Kind::Strategy1: return region;
        case Kind::Custom: {
            std::vector<Interval> pieces;
            const double w = cfg.window_width() / static_cast<double>(decision_table.size());
            for (std::size_t i = 0; i < decision_table.size(); ++i) {
                if (!decision_table[i]) continue;
                const double lo = cfg.window_lo() + w * static_cast<double>(i);
                const double hi = (i + 1 == decision_table.size()) ? cfg.window_hi() : lo + w;
                pieces.push_back({lo, hi});
            }
            return IntervalSet::merged(std::move(pieces));
        }
        }
        return {};
    }

    void validate(const OpticsConfig& cfg) const {
        if (kind == Kind::Strategy1) region.validate_within(cfg);
        if (kind == Kind::Custom && decision_table.empty())
            throw ValidationError("custom switch strategy needs a nonempty decision table");
    }

    bool operator==(const SwitchStrategy&) const = default;
};

DUALITY_ENUM_NAMES(SwitchStrategy::Kind, {SwitchStrategy::Kind::AlwaysOff, "AlwaysOff"},
                   {SwitchStrategy::Kind::AlwaysOn, "AlwaysOn"}, {SwitchStrategy::Kind::Strategy1, "Strategy1"},
                   {SwitchStrategy::Kind::Custom, "Custom"});

#undef DUALITY_ENUM_NAMES

/// Named delays and durations.
namespace presets {
inline constexpr double short_delay_s = 1e-8;          // optical-bench idler delay
inline constexpr double long_delay_s = 60.0;           // macroscopic idler delay
inline constexpr double microprocessor_delay_s = 1e-3; // switch driven by an algorithm
inline constexpr double perishable_ttl_s = 60.0;
} // namespace presets

struct ProtocolConfig {
    std::string name = "run";
    Protocol protocol = Protocol::DoubleSlit;
    OpticsConfig optics;
    RenderingModel model;
    std::uint64_t n_pairs = 10000;
    double delta_t_s = presets::short_delay_s;
    double coincidence_window_s = 1e-9;
    double destruction_prob = 0.5;
    PairingMode pairing_mode = PairingMode::IndependentCoinFlips;
    std::optional<SwitchStrategy> strategy;
    std::optional<OutcomeHypothesis> outcome_hypothesis;
    ObservationSchedule observation_schedule = ObservationSchedule::AfterDeltaT;
    std::uint64_t seed = 1;

    // protocol-specific knobs
    bool detectors_recording = true;  // DoubleSlit
    double record_probability = 0.5;  // DelayedChoice
    DetectNoRecordVariant detect_no_record_variant = DetectNoRecordVariant::SlitDetectors;
    SwitchStage switch_stage = SwitchStage::A;
    bool microprocessor_switch = false;
    double perishable_ttl_s = presets::perishable_ttl_s;
    SubjectiveRecording subjective_recording = SubjectiveRecording::Equivalent;
    RegionModel region_model = RegionModel::Overlapping;
    double noise_threshold = 0.9;

    void validate() const {
        optics.validate();
        if (name.empty()) throw ValidationError("run name must be nonempty");
        if (n_pairs < 1) throw ValidationError("n_pairs must be >= 1");
        if (!std::isfinite(delta_t_s) || !(delta_t_s > 0.0)) throw ValidationError("delta_t_s must be positive");
        if (!std::isfinite(coincidence_window_s) || coincidence_window_s < 0.0)
            throw ValidationError("coincidence_window_s must be nonnegative");
        if (!(coincidence_window_s < delta_t_s))
            throw ValidationError("coincidence_window_s < delta_t_s violated");
        if (!(destruction_prob >= 0.0 && destruction_prob <= 1.0))
            throw ValidationError("0 <= destruction_prob <= 1 violated");
        if (!(record_probability >= 0.0 && record_probability <= 1.0))
            throw ValidationError("0 <= record_probability <= 1 violated");
        if (pairing_mode == PairingMode::ExactHalfSubset && n_pairs % 2 != 0)
            throw ValidationError("ExactHalfSubset requires an even n_pairs");
        if (!(noise_threshold > 0.0 && noise_threshold <= 1.0))
            throw ValidationError("noise_threshold must lie in (0, 1]");
        if (!(perishable_ttl_s > 0.0)) throw ValidationError("perishable_ttl_s must be positive");
        if (strategy) strategy->validate(optics);
        if (protocol == Protocol::MacroscopicErasure && observation_schedule != ObservationSchedule::AfterDeltaT)
            throw ValidationError("MacroscopicErasure observes the pattern after destruction (AfterDeltaT)");
        if (protocol == Protocol::SwitchParadox) {
            if (switch_stage == SwitchStage::D) {
                if (!strategy) throw ValidationError("switch stage d requires a switch strategy");
                if (observation_schedule != ObservationSchedule::AtT0)
                    throw ValidationError("switch stage d observes X at T = 0 (AtT0)");
            } else if (observation_schedule != ObservationSchedule::AfterDeltaT) {
                throw ValidationError("switch stages a-c observe the pattern after delta t (AfterDeltaT)");
            }
        }
    }

    bool operator==(const ProtocolConfig&) const = default;
};

} // namespace duality
