#pragma once

// Executable experiment protocols. Each runner draws every pair from its own
// (seed, pair index) stream, assembles the event log in pair-id order and
// reduces it to per-subset histograms, verdicts and summary statistics.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <exception>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <thread>
#include <utility>
#include <vector>

#include "duality/events.hpp"
#include "duality/models.hpp"
#include "duality/optics.hpp"
#include "duality/protocol_config.hpp"
#include "duality/rng.hpp"
#include "duality/stats.hpp"

namespace duality {

enum class RunStatus { Completed, Refused, Discontinuity };

[[nodiscard]] constexpr std::string_view to_string(RunStatus s) noexcept {
    switch (s) {
    case RunStatus::Completed: return "completed";
    case RunStatus::Refused: return "refused";
    default: return "discontinuity";
    }
}

struct SubsetResult {
    std::string name;
    Histogram histogram;
    std::uint64_t count = 0;
    Classification classification;
    std::optional<double> visibility;
    std::optional<IntervalSet> region; // selection region the verdict is conditioned on
};

struct CoincidenceSummary {
    bool used = false;
    std::uint64_t signals = 0;
    std::uint64_t registered = 0; // idler clicks on the active channels
    std::uint64_t matched = 0;
    std::uint64_t ambiguities = 0;
    std::uint64_t mismatches = 0; // registered clicks not paired with their own signal
    double mismatch_rate = 0.0;
};

struct PredictorSummary {
    double bin_width_m = 0.0;
    std::vector<std::uint64_t> bin_counts;
    std::vector<std::uint64_t> bin_recorded;
    double max_abs_deviation = 0.0;         // vs 1 / (1 + 2 cos^2(pi x / a)) at bin centers
    double min_dark_fringe_posterior = 1.0; // bins with |cos(pi x / a)| < 0.05
    std::size_t dark_fringe_bins = 0;
    double accuracy = 0.0;           // threshold rule on the approximate posterior
    double reference_accuracy = 0.0; // (1/2) integral max(w, p)
    double calibration_error = 0.0;  // count-weighted mean |empirical - predicted|
};

struct RunResult {
    ProtocolConfig config;
    RunStatus status = RunStatus::Completed;
    std::vector<SubsetResult> subsets;
    SubsetResult pooled;
    std::uint64_t unmatched = 0;
    CoincidenceSummary coincidence;
    std::vector<std::string> markers;
    std::vector<std::string> warnings;
    std::optional<FeasibilityReport> feasibility;
    std::optional<PredictorSummary> predictor;
    std::vector<std::pair<std::string, double>> statistics;
    std::string event_digest;
    std::vector<std::string> subset_names;
    std::vector<PhotonPairEvent> events; // kept only when RunOptions::keep_events

    [[nodiscard]] const SubsetResult* subset(std::string_view name) const noexcept {
        for (const auto& s : subsets)
            if (s.name == name) return &s;
        return nullptr;
    }

    [[nodiscard]] std::optional<double> statistic(std::string_view key) const noexcept {
        for (const auto& [k, v] : statistics)
            if (k == key) return v;
        return std::nullopt;
    }

    [[nodiscard]] bool has_marker(std::string_view m) const noexcept {
        return std::find(markers.begin(), markers.end(), m) != markers.end();
    }
};

struct RunOptions {
    unsigned threads = 1;
    bool keep_events = true;
};

namespace markers {
inline constexpr std::string_view outcome_i_contradiction = "outcome_i_contradiction";
inline constexpr std::string_view statistically_indistinguishable = "statistically_indistinguishable";
inline constexpr std::string_view recordable_with_interference = "which_way_recordable_with_interference";
inline constexpr std::string_view discontinuity = "discontinuity";
inline constexpr std::string_view microprocessor_switch = "microprocessor_switch";
inline constexpr std::string_view branch_a = "branch_a_no_objective_subjective_difference";
inline constexpr std::string_view branch_b = "branch_b_intent_adjustment_required";
} // namespace markers

namespace detail {

inline constexpr double kSignalTransitS = 1e-9;

/// One pair in flight per delta t: pair i is created at 1.5 i delta t.
struct Timeline {
    double delta_t;
    [[nodiscard]] double created(std::uint64_t i) const noexcept { return static_cast<double>(i) * delta_t * 1.5; }
    [[nodiscard]] double impact(std::uint64_t i) const noexcept { return created(i) + kSignalTransitS; }
    [[nodiscard]] double detector(std::uint64_t i) const noexcept { return impact(i) + delta_t; }
};

inline double observation_time(const ProtocolConfig& cfg, double t_impact) noexcept {
    return cfg.observation_schedule == ObservationSchedule::AtT0 ? t_impact : t_impact + 1.25 * cfg.delta_t_s;
}

inline PhotonPairEvent base_event(const ProtocolConfig& cfg, std::uint64_t i, Stream& rng) {
    const Timeline tl{cfg.delta_t_s};
    PhotonPairEvent e;
    e.pair_id = i;
    e.t_created = tl.created(i);
    e.t_signal_impact = tl.impact(i);
    e.t_detector = tl.detector(i);
    e.slit = rng.bernoulli(0.5) ? Slit::Slit1 : Slit::Slit2;
    e.availability.observation_time = observation_time(cfg, e.t_signal_impact);
    return e;
}

inline bool available(const PhotonPairEvent& e, const RenderingModel& model) {
    return which_way_available(e.availability, model, evaluation_time(e.availability, model, e.t_signal_impact));
}

inline void draw_impact(PhotonPairEvent& e, const PatternDistribution& law, Stream& rng) {
    e.law = law.kind();
    e.phase_rad = law.phase();
    e.signal_x = law.sample(rng);
}

inline void draw_impact_within(PhotonPairEvent& e, const PatternDistribution& law, const IntervalSet& set, Stream& rng) {
    e.law = law.kind();
    e.phase_rad = law.phase();
    e.signal_x = law.sample_within(set, rng);
}

/// Routes the idler through BS_a (slit 1) or BS_b (slit 2): Reflect sends it
/// to the which-way detector (D3 / D4), Transmit to the eraser. With
/// `use_bsc`, BS_c then splits erased idlers between D1 and D2.
inline void route_idler(PhotonPairEvent& e, Stream& rng, bool splitters_active, bool use_bsc) {
    const Splitter first = e.slit == Slit::Slit1 ? Splitter::BSa : Splitter::BSb;
    const bool coin = rng.bernoulli(0.5);
    const bool reflect = splitters_active && coin;
    e.push_hop(first, reflect ? SplitterDecision::Reflect : SplitterDecision::Transmit);
    if (reflect) {
        e.detector = e.slit == Slit::Slit1 ? Detector::D3 : Detector::D4;
        e.erased = false;
        return;
    }
    e.erased = true;
    const bool bsc_reflect = rng.bernoulli(0.5);
    if (use_bsc) {
        e.push_hop(Splitter::BSc, bsc_reflect ? SplitterDecision::Reflect : SplitterDecision::Transmit);
        e.detector = bsc_reflect ? Detector::D1 : Detector::D2;
    } else {
        e.detector = Detector::D1;
    }
}

inline void mark_which_way_recorded(PhotonPairEvent& e, double at) {
    e.availability.detected = true;
    e.availability.recorded = true;
    e.availability.detected_at = at;
    e.availability.medium = {MediumKind::Persistent};
}

template <class Gen>
std::vector<PhotonPairEvent> generate_pairs(const ProtocolConfig& cfg, unsigned threads, const Gen& gen) {
    const std::uint64_t n = cfg.n_pairs;
    std::vector<PhotonPairEvent> events(n);
    auto work = [&](std::uint64_t begin, std::uint64_t end) {
        for (auto i = begin; i < end; ++i) {
            Stream rng(cfg.seed, i, salt::pair);
            events[i] = gen(i, rng);
        }
    };
    const auto t = static_cast<std::uint64_t>(std::clamp<std::uint64_t>(threads, 1, std::max<std::uint64_t>(1, n)));
    if (t == 1) {
        work(0, n);
        return events;
    }
    std::vector<std::exception_ptr> errors(t);
    {
        std::vector<std::jthread> pool;
        const std::uint64_t chunk = (n + t - 1) / t;
        for (std::uint64_t k = 0; k < t; ++k) {
            pool.emplace_back([&, k] {
                try {
                    work(std::min(n, k * chunk), std::min(n, (k + 1) * chunk));
                } catch (...) {
                    errors[k] = std::current_exception();
                }
            });
        }
    }
    for (auto& e : errors)
        if (e) std::rethrow_exception(e);
    return events;
}

/// Runs the coincidence counter over the given detector channels and stores
/// the matched detector of every signal in `matched`.
template <class ChannelFilter>
CoincidenceSummary apply_coincidence(const std::vector<PhotonPairEvent>& events, const ProtocolConfig& cfg,
                                     const ChannelFilter& active, std::vector<std::optional<Detector>>& matched) {
    std::vector<SignalTag> signals;
    std::vector<DetectorTag> clicks;
    signals.reserve(events.size());
    for (const auto& e : events) {
        signals.push_back({e.pair_id, e.t_signal_impact});
        if (e.detector && active(*e.detector)) clicks.push_back({e.pair_id, e.t_detector, *e.detector});
    }
    const auto res = coincidence_match(signals, clicks, cfg.delta_t_s, cfg.coincidence_window_s);
    CoincidenceSummary s;
    s.used = true;
    s.signals = signals.size();
    s.registered = clicks.size();
    s.matched = res.matched;
    s.ambiguities = res.ambiguities;
    std::uint64_t correct = 0;
    matched.assign(events.size(), std::nullopt);
    for (std::size_t i = 0; i < res.records.size(); ++i) {
        const auto& r = res.records[i];
        if (!r.matched) continue;
        matched[i] = r.detector;
        if (r.detector_pair_id == r.pair_id) ++correct;
    }
    s.mismatches = s.registered - std::min(correct, s.registered);
    s.mismatch_rate = s.registered ? static_cast<double>(s.mismatches) / static_cast<double>(s.registered) : 0.0;
    return s;
}

inline SubsetResult make_subset(std::string name, const OpticsConfig& cfg, std::span<const double> samples,
                                const Histogram& hist, const std::optional<IntervalSet>& region) {
    SubsetResult s;
    s.name = std::move(name);
    s.histogram = hist;
    s.count = samples.size();
    s.region = region;
    if (!samples.empty()) {
        ClassifierOptions opt;
        if (region) {
            opt.region = region;
        } else {
            opt.phase_rad.reset(); // fringe phase fitted from the data
        }
        try {
            s.classification = classify_pattern(samples, cfg, opt);
        } catch (const DomainError&) {
            s.classification = {};
            s.classification.samples = samples.size();
        }
        s.visibility = fringe_visibility(hist);
    }
    return s;
}

/// Builds histograms, verdicts, the pooled subset and the event digest.
inline void assemble(RunResult& r, std::vector<PhotonPairEvent>& events, std::vector<std::string> names,
                     std::vector<std::optional<IntervalSet>> regions, const RunOptions& opt) {
    const auto& cfg = r.config.optics;
    regions.resize(names.size());
    std::vector<std::vector<double>> samples(names.size());
    std::vector<Histogram> hists(names.size(), Histogram::fringe_aligned(cfg));
    std::vector<double> pooled_samples;
    Histogram pooled_hist = Histogram::fringe_aligned(cfg);
    Fnv1a digest;
    r.unmatched = 0;
    for (const auto& e : events) {
        digest.update(event_csv_row(e, names));
        digest.update("\n");
        if (e.subset < 0 || !e.signal_x) {
            ++r.unmatched;
            continue;
        }
        const auto k = static_cast<std::size_t>(e.subset);
        samples[k].push_back(*e.signal_x);
        hists[k].add(*e.signal_x);
        pooled_samples.push_back(*e.signal_x);
        pooled_hist.add(*e.signal_x);
    }
    r.subsets.clear();
    for (std::size_t k = 0; k < names.size(); ++k)
        r.subsets.push_back(make_subset(names[k], cfg, samples[k], hists[k], regions[k]));
    r.pooled = make_subset("pooled", cfg, pooled_samples, pooled_hist, std::nullopt);
    r.event_digest = digest.hex();
    r.subset_names = std::move(names);
    if (opt.keep_events) r.events = std::move(events);
    if (r.coincidence.used && r.coincidence.mismatch_rate > 0.01)
        r.warnings.emplace_back("coincidence mismatch rate above 1%");
}

inline void add_two_subset_tv(RunResult& r) {
    if (r.subsets.size() != 2 || r.subsets[0].count == 0 || r.subsets[1].count == 0) return;
    r.statistics.emplace_back("empirical_tv", tv_distance_empirical(r.subsets[0].histogram, r.subsets[1].histogram));
}

inline RunResult empty_result(const ProtocolConfig& cfg) {
    RunResult r;
    r.config = cfg;
    r.pooled.name = "pooled";
    r.pooled.histogram = Histogram::fringe_aligned(cfg.optics);
    r.event_digest = Fnv1a{}.hex();
    return r;
}

inline void require_protocol(const ProtocolConfig& cfg, Protocol p) {
    cfg.validate();
    if (cfg.protocol != p)
        throw ValidationError("runner for " + std::string(name_of(p)) + " called with protocol " +
                              std::string(name_of(cfg.protocol)));
}

/// Nontrivial selection region for conditioning a verdict, if any.
inline std::optional<IntervalSet> carve_region(const IntervalSet& set, const OpticsConfig& cfg) {
    if (set.empty() || set.complement(cfg).empty()) return std::nullopt;
    return set;
}

} // namespace detail

// ---------------------------------------------------------------------------
// Double slit: which-way detectors at the slits, recording on or off.
// ---------------------------------------------------------------------------

inline RunResult run_double_slit(const ProtocolConfig& cfg, const RunOptions& opt = {}) {
    detail::require_protocol(cfg, Protocol::DoubleSlit);
    RunResult r = detail::empty_result(cfg);
    const PatternBank bank(cfg.optics);
    auto events = detail::generate_pairs(cfg, opt.threads, [&](std::uint64_t i, Stream& rng) {
        auto e = detail::base_event(cfg, i, rng);
        if (cfg.detectors_recording) detail::mark_which_way_recorded(e, e.t_created);
        detail::draw_impact(e, bank.select(detail::available(e, cfg.model)), rng);
        e.subset = 0;
        return e;
    });
    detail::assemble(r, events, {"screen"}, {}, opt);
    return r;
}

// ---------------------------------------------------------------------------
// Delayed choice: the decision to record which-way is taken after the slits.
// ---------------------------------------------------------------------------

inline RunResult run_delayed_choice(const ProtocolConfig& cfg, const RunOptions& opt = {}) {
    detail::require_protocol(cfg, Protocol::DelayedChoice);
    RunResult r = detail::empty_result(cfg);
    const PatternBank bank(cfg.optics);
    auto events = detail::generate_pairs(cfg, opt.threads, [&](std::uint64_t i, Stream& rng) {
        auto e = detail::base_event(cfg, i, rng);
        const bool record = rng.bernoulli(cfg.record_probability);
        if (record) detail::mark_which_way_recorded(e, e.t_created + 0.5 * detail::kSignalTransitS);
        detail::draw_impact(e, bank.select(detail::available(e, cfg.model)), rng);
        e.subset = record ? 0 : 1;
        return e;
    });
    detail::assemble(r, events, {"recorded", "unrecorded"}, {}, opt);
    detail::add_two_subset_tv(r);
    return r;
}

// ---------------------------------------------------------------------------
// Delayed-choice quantum eraser with detectors D1..D4 and a coincidence counter.
// ---------------------------------------------------------------------------

inline RunResult run_quantum_eraser(const ProtocolConfig& cfg, const RunOptions& opt = {}) {
    detail::require_protocol(cfg, Protocol::QuantumEraser);
    RunResult r = detail::empty_result(cfg);
    const PatternBank bank(cfg.optics);
    auto events = detail::generate_pairs(cfg, opt.threads, [&](std::uint64_t i, Stream& rng) {
        auto e = detail::base_event(cfg, i, rng);
        detail::route_idler(e, rng, true, true);
        if (!*e.erased) detail::mark_which_way_recorded(e, e.t_detector);
        // D1 / D2 sort the erased impacts into fringes and anti-fringes.
        detail::draw_impact(e, bank.select(detail::available(e, cfg.model), e.detector == Detector::D2), rng);
        return e;
    });
    std::vector<std::optional<Detector>> matched;
    r.coincidence = detail::apply_coincidence(events, cfg, [](Detector) { return true; }, matched);
    std::array<std::uint64_t, 4> occupancy{};
    std::array<std::uint64_t, 2> pure{};
    for (std::size_t i = 0; i < events.size(); ++i) {
        if (!matched[i]) continue;
        const auto d = static_cast<std::size_t>(*matched[i]);
        events[i].subset = static_cast<std::int32_t>(d);
        ++occupancy[d];
        if (*matched[i] == Detector::D3 && events[i].slit == Slit::Slit1) ++pure[0];
        if (*matched[i] == Detector::D4 && events[i].slit == Slit::Slit2) ++pure[1];
    }
    const auto matched_total = static_cast<double>(r.coincidence.matched);
    constexpr std::array<const char*, 4> names{"D1", "D2", "D3", "D4"};
    for (std::size_t d = 0; d < 4; ++d)
        r.statistics.emplace_back(std::string("occupancy.") + names[d],
                                  matched_total > 0 ? static_cast<double>(occupancy[d]) / matched_total : 0.0);
    r.statistics.emplace_back("slit_purity.D3", occupancy[2] ? static_cast<double>(pure[0]) / static_cast<double>(occupancy[2]) : 1.0);
    r.statistics.emplace_back("slit_purity.D4", occupancy[3] ? static_cast<double>(pure[1]) / static_cast<double>(occupancy[3]) : 1.0);
    detail::assemble(r, events, {"D1", "D2", "D3", "D4"}, {}, opt);
    return r;
}

// ---------------------------------------------------------------------------
// Detecting but not recording which-way.
// ---------------------------------------------------------------------------

inline RunResult run_detect_no_record(const ProtocolConfig& cfg, const RunOptions& opt = {}) {
    detail::require_protocol(cfg, Protocol::DetectNoRecord);
    RunResult r = detail::empty_result(cfg);
    const PatternBank bank(cfg.optics);
    const auto variant = cfg.detect_no_record_variant;
    // No channel here ever records which-way, so under availability rendering
    // every impact belongs to one unsorted interference pattern; the D2
    // anti-fringe only arises when the eraser sorts against a recording channel.
    const bool anti_for_d2 = cfg.model.policy == RenderingPolicy::CollapseAtDetection;

    auto events = detail::generate_pairs(cfg, opt.threads, [&](std::uint64_t i, Stream& rng) {
        auto e = detail::base_event(cfg, i, rng);
        if (variant == DetectNoRecordVariant::SlitDetectors) {
            e.availability.detected = true;
            e.availability.detected_at = e.t_created;
        } else {
            detail::route_idler(e, rng, true, true);
            if (!*e.erased) {
                e.availability.detected = true;
                e.availability.detected_at = e.t_detector;
            }
        }
        e.availability.medium = {MediumKind::None};
        const bool anti = anti_for_d2 && e.detector == Detector::D2;
        detail::draw_impact(e, bank.select(detail::available(e, cfg.model), anti), rng);
        return e;
    });

    std::vector<std::string> names;
    switch (variant) {
    case DetectNoRecordVariant::SlitDetectors:
    case DetectNoRecordVariant::NoCoincidenceCounter:
        names = {"screen"};
        for (auto& e : events) e.subset = 0;
        break;
    case DetectNoRecordVariant::D3D4ChannelsOff: {
        names = {"D1", "D2", "unsorted"};
        std::vector<std::optional<Detector>> matched;
        r.coincidence = detail::apply_coincidence(
            events, cfg, [](Detector d) { return d == Detector::D1 || d == Detector::D2; }, matched);
        for (std::size_t i = 0; i < events.size(); ++i) {
            if (!matched[i])
                events[i].subset = 2;
            else
                events[i].subset = *matched[i] == Detector::D1 ? 0 : 1;
        }
        break;
    }
    }
    detail::assemble(r, events, std::move(names), {}, opt);
    return r;
}

// ---------------------------------------------------------------------------
// Macroscopic erasure: which-way stored on a drive that is destroyed (or not)
// long after detection but before anyone looks at the screen data.
// ---------------------------------------------------------------------------

inline RunResult run_macroscopic_erasure(const ProtocolConfig& cfg, const RunOptions& opt = {}) {
    detail::require_protocol(cfg, Protocol::MacroscopicErasure);
    RunResult r = detail::empty_result(cfg);
    const PatternBank bank(cfg.optics);

    std::vector<std::uint8_t> destroy_subset;
    if (cfg.pairing_mode == PairingMode::ExactHalfSubset) {
        // Uniform over subsets of size n/2: Fisher-Yates on a run-level stream.
        std::vector<std::uint64_t> order(cfg.n_pairs);
        for (std::uint64_t i = 0; i < cfg.n_pairs; ++i) order[i] = i;
        Stream rng(cfg.seed, 0, salt::destruction_subset);
        for (std::uint64_t i = cfg.n_pairs; i > 1; --i) std::swap(order[i - 1], order[rng.below(i)]);
        destroy_subset.assign(cfg.n_pairs, 0);
        for (std::uint64_t k = 0; k < cfg.n_pairs / 2; ++k) destroy_subset[order[k]] = 1;
    }

    auto events = detail::generate_pairs(cfg, opt.threads, [&](std::uint64_t i, Stream& rng) {
        auto e = detail::base_event(cfg, i, rng);
        detail::mark_which_way_recorded(e, e.t_created);
        const bool coin = rng.bernoulli(cfg.destruction_prob);
        const bool destroyed = destroy_subset.empty() ? coin : destroy_subset[i] != 0;
        e.destroyed = destroyed;
        if (destroyed) e.availability.erased_at = e.t_signal_impact + 0.5 * cfg.delta_t_s;
        detail::draw_impact(e, bank.select(detail::available(e, cfg.model)), rng);
        e.subset = destroyed ? 0 : 1;
        return e;
    });
    detail::assemble(r, events, {"destroyed", "surviving"}, {}, opt);
    detail::add_two_subset_tv(r);
    return r;
}

// ---------------------------------------------------------------------------
// Predictor: the signal impact X is read by a microprocessor before the idler
// reaches the splitter and used to predict the erasure flag R.
// ---------------------------------------------------------------------------

inline PredictorSummary summarize_predictor(std::span<const PhotonPairEvent> events, const OpticsConfig& cfg) {
    PredictorSummary s;
    const double a = cfg.fringe_scale();
    s.bin_width_m = a / 50.0;
    const auto bins = static_cast<std::size_t>(std::max(1.0, std::round(cfg.window_width() / s.bin_width_m)));
    s.bin_counts.assign(bins, 0);
    s.bin_recorded.assign(bins, 0);
    std::uint64_t total = 0;
    std::uint64_t correct = 0;
    for (const auto& e : events) {
        if (e.subset < 0 || !e.signal_x || !e.erased) continue;
        const bool recorded = !*e.erased;
        auto b = static_cast<std::ptrdiff_t>(std::floor((*e.signal_x - cfg.window_lo()) / s.bin_width_m));
        b = std::clamp<std::ptrdiff_t>(b, 0, static_cast<std::ptrdiff_t>(bins) - 1);
        ++s.bin_counts[static_cast<std::size_t>(b)];
        if (recorded) ++s.bin_recorded[static_cast<std::size_t>(b)];
        ++total;
        if (e.predicted_recorded && *e.predicted_recorded == recorded) ++correct;
    }
    double weighted = 0.0;
    for (std::size_t b = 0; b < bins; ++b) {
        if (s.bin_counts[b] == 0) continue;
        const double center = cfg.window_lo() + (static_cast<double>(b) + 0.5) * s.bin_width_m;
        const double empirical = static_cast<double>(s.bin_recorded[b]) / static_cast<double>(s.bin_counts[b]);
        const double dev = std::abs(empirical - approx_posterior(center, cfg));
        s.max_abs_deviation = std::max(s.max_abs_deviation, dev);
        weighted += dev * static_cast<double>(s.bin_counts[b]);
        if (std::abs(std::cos(kPi * center / a)) < 0.05) {
            ++s.dark_fringe_bins;
            s.min_dark_fringe_posterior = std::min(s.min_dark_fringe_posterior, empirical);
        }
    }
    s.accuracy = total ? static_cast<double>(correct) / static_cast<double>(total) : 0.0;
    s.calibration_error = total ? weighted / static_cast<double>(total) : 0.0;
    s.reference_accuracy = threshold_predictor_accuracy(cfg);
    return s;
}

inline RunResult run_predictor(const ProtocolConfig& cfg, const RunOptions& opt = {}) {
    detail::require_protocol(cfg, Protocol::PredictorExperiment);
    RunResult r = detail::empty_result(cfg);
    const PatternBank bank(cfg.optics);
    auto events = detail::generate_pairs(cfg, opt.threads, [&](std::uint64_t i, Stream& rng) {
        auto e = detail::base_event(cfg, i, rng);
        // No BS_c here: every erased idler ends on a single eraser detector.
        detail::route_idler(e, rng, true, false);
        if (!*e.erased) detail::mark_which_way_recorded(e, e.t_detector);
        detail::draw_impact(e, bank.select(detail::available(e, cfg.model)), rng);
        e.predicted_recorded = approx_posterior(*e.signal_x, cfg.optics) > 0.5;
        return e;
    });
    std::vector<std::optional<Detector>> matched;
    r.coincidence = detail::apply_coincidence(events, cfg, [](Detector) { return true; }, matched);
    for (std::size_t i = 0; i < events.size(); ++i) {
        if (!matched[i]) continue;
        events[i].subset = (*matched[i] == Detector::D1) ? 1 : 0;
    }
    r.predictor = summarize_predictor(events, cfg.optics);
    r.statistics.emplace_back("predictor.max_abs_deviation", r.predictor->max_abs_deviation);
    r.statistics.emplace_back("predictor.min_dark_fringe_posterior", r.predictor->min_dark_fringe_posterior);
    r.statistics.emplace_back("predictor.accuracy", r.predictor->accuracy);
    r.statistics.emplace_back("predictor.reference_accuracy", r.predictor->reference_accuracy);
    r.statistics.emplace_back("predictor.calibration_error", r.predictor->calibration_error);
    detail::assemble(r, events, {"R1", "R0"}, {}, opt);
    detail::add_two_subset_tv(r);
    return r;
}

// ---------------------------------------------------------------------------
// Switch experiment, stages (a)-(d).
// ---------------------------------------------------------------------------

inline OutcomeHypothesis effective_hypothesis(const ProtocolConfig& cfg) noexcept {
    if (cfg.outcome_hypothesis) return *cfg.outcome_hypothesis;
    // Collapse at detection fixes each subset law by the later physical
    // recording, which is outcome (i); availability rendering predicts (ii).
    return cfg.model.policy == RenderingPolicy::CollapseAtDetection ? OutcomeHypothesis::I : OutcomeHypothesis::II;
}

inline RunResult run_switch_experiment(const ProtocolConfig& cfg, const RunOptions& opt = {}) {
    detail::require_protocol(cfg, Protocol::SwitchParadox);
    RunResult r = detail::empty_result(cfg);
    if (cfg.microprocessor_switch) r.markers.emplace_back(markers::microprocessor_switch);
    const PatternBank bank(cfg.optics);
    const auto& optics = cfg.optics;

    if (cfg.switch_stage != SwitchStage::D) {
        // (a), (b): BS_a / BS_b transparent; (c): switch present but left off.
        auto events = detail::generate_pairs(cfg, opt.threads, [&](std::uint64_t i, Stream& rng) {
            auto e = detail::base_event(cfg, i, rng);
            detail::route_idler(e, rng, false, false);
            if (cfg.switch_stage == SwitchStage::C) e.switch_on = false;
            detail::draw_impact(e, bank.select(detail::available(e, cfg.model)), rng);
            return e;
        });
        std::vector<std::optional<Detector>> matched;
        r.coincidence = detail::apply_coincidence(events, cfg, [](Detector) { return true; }, matched);
        for (std::size_t i = 0; i < events.size(); ++i)
            if (matched[i]) events[i].subset = 0;
        detail::assemble(r, events, {cfg.switch_stage == SwitchStage::C ? "switch_off" : "screen"}, {}, opt);
        return r;
    }

    const auto& strategy = *cfg.strategy;
    const auto hypothesis = effective_hypothesis(cfg);
    const IntervalSet region = strategy.activation_region(optics);
    r.statistics.emplace_back("hypothesis", static_cast<double>(static_cast<int>(hypothesis) + 1));

    if (hypothesis == OutcomeHypothesis::IV) {
        r.status = RunStatus::Discontinuity;
        r.markers.emplace_back(markers::discontinuity);
        return r;
    }

    double particle_weight = 0.0; // outcome (i): probability of the particle component
    if (hypothesis == OutcomeHypothesis::I) {
        auto report = contradiction_margin(region, optics);
        r.feasibility = report;
        r.statistics.emplace_back("delta", report.delta_value);
        if (report.delta_value < cfg.noise_threshold) {
            r.status = RunStatus::Refused;
            r.markers.emplace_back(markers::outcome_i_contradiction);
            return r;
        }
        if (!report.feasible_under_outcome_i) r.markers.emplace_back(markers::statistically_indistinguishable);
        particle_weight = bank.particle().mass(region) / report.delta_value;
    }
    const IntervalSet off_region = region.complement(optics);

    auto events = detail::generate_pairs(cfg, opt.threads, [&](std::uint64_t i, Stream& rng) {
        auto e = detail::base_event(cfg, i, rng);
        switch (hypothesis) {
        case OutcomeHypothesis::I:
            // Particle where the strategy will record, wave elsewhere,
            // renormalized by delta(I) (exact when delta(I) = 1).
            if (rng.uniform() < particle_weight)
                detail::draw_impact_within(e, bank.particle(), region, rng);
            else
                detail::draw_impact_within(e, bank.fringe(), off_region, rng);
            break;
        case OutcomeHypothesis::II: detail::draw_impact(e, bank.particle(), rng); break;
        default: detail::draw_impact(e, bank.fringe(), rng); break;
        }
        return e;
    });

    // The experimenter sees X_i at T = 0 and sets the switch before the idler
    // reaches BS_a / BS_b at delta t / 2.
    std::vector<double> history;
    history.reserve(events.size());
    bool any_on = false;
    for (auto& e : events) {
        const bool on = strategy.activates(*e.signal_x, history, optics);
        history.push_back(*e.signal_x);
        e.switch_on = on;
        any_on = any_on || on;
        const Splitter first = e.slit == Slit::Slit1 ? Splitter::BSa : Splitter::BSb;
        e.push_hop(first, on ? SplitterDecision::Reflect : SplitterDecision::Transmit);
        if (on) {
            e.detector = e.slit == Slit::Slit1 ? Detector::D3 : Detector::D4;
            e.erased = false;
            detail::mark_which_way_recorded(e, e.t_signal_impact + 0.5 * cfg.delta_t_s);
        } else {
            e.detector = Detector::D1;
            e.erased = true;
        }
    }
    if (hypothesis == OutcomeHypothesis::III && any_on) r.markers.emplace_back(markers::recordable_with_interference);

    std::vector<std::optional<Detector>> matched;
    r.coincidence = detail::apply_coincidence(events, cfg, [](Detector) { return true; }, matched);
    for (std::size_t i = 0; i < events.size(); ++i) {
        if (!matched[i]) continue;
        events[i].subset = *matched[i] == Detector::D1 ? 1 : 0;
    }
    detail::assemble(r, events, {"switch_on", "switch_off"},
                     {detail::carve_region(region, optics), detail::carve_region(off_region, optics)}, opt);
    return r;
}

// ---------------------------------------------------------------------------
// Perishable which-way media: record permanently iff the impact lies in I,
// otherwise only observe it and let the medium expire.
// ---------------------------------------------------------------------------

inline RunResult run_perishable_media(const ProtocolConfig& cfg, const RunOptions& opt = {}) {
    detail::require_protocol(cfg, Protocol::PerishableMedia);
    RunResult r = detail::empty_result(cfg);
    const auto& optics = cfg.optics;
    const PatternBank bank(optics);
    const IntervalSet wave_region = (cfg.strategy && cfg.strategy->kind == SwitchStrategy::Kind::Strategy1)
                                        ? cfg.strategy->region
                                        : optimal_interval_set(optics);
    const IntervalSet particle_region = wave_region.complement(optics);
    const bool disjoint = cfg.region_model == RegionModel::Disjoint;
    const bool perishes = std::isfinite(cfg.perishable_ttl_s);
    const bool distinct = cfg.subjective_recording == SubjectiveRecording::Distinct && perishes;

    double particle_weight = 0.0;
    if (distinct) {
        // Objective record -> particle, subjective only -> wave: with the rule
        // above this is outcome (i) for the set I.
        FeasibilityReport report;
        if (disjoint) {
            report.interval_set = wave_region;
            report.delta_value = 0.0; // idealized laws put no mass on the other's region
            report.tv_value = 1.0;
            report.margin = 1.0;
            report.feasible_under_outcome_i = false;
        } else {
            report = contradiction_margin(wave_region, optics);
        }
        r.feasibility = report;
        r.statistics.emplace_back("delta", report.delta_value);
        if (report.delta_value < cfg.noise_threshold) {
            r.status = RunStatus::Refused;
            r.markers.emplace_back(markers::branch_b);
            return r;
        }
        if (!report.feasible_under_outcome_i) r.markers.emplace_back(markers::statistically_indistinguishable);
        particle_weight = bank.particle().mass(wave_region) / report.delta_value;
    }

    auto events = detail::generate_pairs(cfg, opt.threads, [&](std::uint64_t i, Stream& rng) {
        auto e = detail::base_event(cfg, i, rng);
        e.availability.detected = true;
        e.availability.recorded = true;
        e.availability.detected_at = e.t_created;
        e.availability.medium = {MediumKind::Perishable, cfg.perishable_ttl_s};
        if (distinct) {
            if (rng.uniform() < particle_weight)
                detail::draw_impact_within(e, bank.particle(), wave_region, rng);
            else
                detail::draw_impact_within(e, bank.fringe(), particle_region, rng);
        } else {
            const bool avail = detail::available(e, cfg.model);
            const auto& law = bank.select(avail);
            if (!disjoint)
                detail::draw_impact(e, law, rng);
            else
                detail::draw_impact_within(e, law, avail ? particle_region : wave_region, rng);
        }
        const bool in_region = wave_region.contains(*e.signal_x);
        if (in_region) e.availability.medium = {MediumKind::Persistent};
        e.subset = in_region ? 0 : 1;
        return e;
    });
    std::uint64_t in_wave_region = 0;
    for (const auto& e : events) in_wave_region += e.subset == 0 ? 1 : 0;
    r.statistics.emplace_back("impacts_in_wave_region", static_cast<double>(in_wave_region));
    if (!distinct) r.markers.emplace_back(markers::branch_a);
    detail::assemble(r, events, {"objective", "subjective"},
                     {detail::carve_region(wave_region, optics), detail::carve_region(particle_region, optics)}, opt);
    return r;
}

/// Dispatches on cfg.protocol.
inline RunResult run_protocol(const ProtocolConfig& cfg, const RunOptions& opt = {}) {
    switch (cfg.protocol) {
    case Protocol::DoubleSlit: return run_double_slit(cfg, opt);
    case Protocol::DelayedChoice: return run_delayed_choice(cfg, opt);
    case Protocol::QuantumEraser: return run_quantum_eraser(cfg, opt);
    case Protocol::DetectNoRecord: return run_detect_no_record(cfg, opt);
    case Protocol::MacroscopicErasure: return run_macroscopic_erasure(cfg, opt);
    case Protocol::PredictorExperiment: return run_predictor(cfg, opt);
    case Protocol::SwitchParadox: return run_switch_experiment(cfg, opt);
    case Protocol::PerishableMedia: return run_perishable_media(cfg, opt);
    }
    throw ValidationError("unknown protocol");
}

} // namespace duality
