#pragma once

// Per-pair event records, their CSV form, the event-log digest and the
// coincidence counter.

#include <algorithm>
#include <array>
#include <charconv>
#include <cmath>
#include <cstdint>
#include <cstdio>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "duality/models.hpp"
#include "duality/optics.hpp"
#include "duality/protocol_config.hpp"

namespace duality {

enum class Slit { Slit1, Slit2 };
enum class Detector { D1, D2, D3, D4 };
enum class Splitter { BSa, BSb, BSc };
enum class SplitterDecision { Reflect, Transmit };

[[nodiscard]] constexpr std::string_view to_string(Slit s) noexcept { return s == Slit::Slit1 ? "Slit1" : "Slit2"; }
[[nodiscard]] constexpr std::string_view to_string(Detector d) noexcept {
    constexpr std::array<std::string_view, 4> names{"D1", "D2", "D3", "D4"};
    return names[static_cast<std::size_t>(d)];
}
[[nodiscard]] constexpr std::string_view to_string(Splitter s) noexcept {
    constexpr std::array<std::string_view, 3> names{"BSa", "BSb", "BSc"};
    return names[static_cast<std::size_t>(s)];
}

struct SplitterHop {
    Splitter splitter = Splitter::BSa;
    SplitterDecision decision = SplitterDecision::Transmit;
    bool operator==(const SplitterHop&) const = default;
};

/// One entangled pair (or, in the single-photon protocols, one photon).
struct PhotonPairEvent {
    std::uint64_t pair_id = 0;
    double t_created = 0.0;
    Slit slit = Slit::Slit1;
    double t_signal_impact = 0.0;
    std::optional<double> signal_x;
    std::array<SplitterHop, 2> route{};
    std::uint8_t route_len = 0;
    std::optional<Detector> detector;
    double t_detector = 0.0;
    std::optional<bool> erased;
    AvailabilityRecord availability;
    PatternKind law = PatternKind::Wave;
    double phase_rad = 0.0;
    std::optional<bool> switch_on;
    std::optional<bool> destroyed;
    std::optional<bool> predicted_recorded;
    std::int32_t subset = -1; // index into RunResult::subsets; -1 = unmatched

    void push_hop(Splitter s, SplitterDecision d) noexcept {
        if (route_len < route.size()) route[route_len++] = {s, d};
    }
    [[nodiscard]] std::span<const SplitterHop> hops() const noexcept { return {route.data(), route_len}; }
};

namespace detail {

inline void append_double(std::string& out, double v) {
    char buf[32];
    const auto res = std::to_chars(buf, buf + sizeof buf, v);
    out.append(buf, res.ptr);
}

inline void append_bool(std::string& out, std::optional<bool> b) {
    if (b) out += *b ? "1" : "0";
}

} // namespace detail

inline constexpr std::string_view kEventCsvHeader =
    "pair_id,t_created,slit,t_signal_impact,signal_x,idler_route,detector,t_detector,erased,"
    "detected,recorded,medium,detected_at,erased_at,observation_time,law,phase,switch_on,destroyed,"
    "predicted_R,subset";

/// One CSV line (without newline). Doubles use the shortest form that round-trips.
[[nodiscard]] inline std::string event_csv_row(const PhotonPairEvent& e, std::span<const std::string> subset_names) {
    using detail::append_bool;
    using detail::append_double;
    std::string out;
    out.reserve(200);
    out += std::to_string(e.pair_id);
    out += ',';
    append_double(out, e.t_created);
    out += ',';
    out += to_string(e.slit);
    out += ',';
    append_double(out, e.t_signal_impact);
    out += ',';
    if (e.signal_x) append_double(out, *e.signal_x);
    out += ',';
    for (std::size_t i = 0; i < e.route_len; ++i) {
        if (i) out += '|';
        out += to_string(e.route[i].splitter);
        out += e.route[i].decision == SplitterDecision::Reflect ? ":R" : ":T";
    }
    out += ',';
    if (e.detector) out += to_string(*e.detector);
    out += ',';
    if (e.detector) append_double(out, e.t_detector);
    out += ',';
    append_bool(out, e.erased);
    out += ',';
    append_bool(out, e.availability.detected);
    out += ',';
    append_bool(out, e.availability.recorded);
    out += ',';
    out += name_of(e.availability.medium.kind);
    if (e.availability.medium.kind == MediumKind::Perishable) {
        out += ':';
        append_double(out, e.availability.medium.ttl_s);
    }
    out += ',';
    append_double(out, e.availability.detected_at);
    out += ',';
    if (e.availability.erased_at) append_double(out, *e.availability.erased_at);
    out += ',';
    append_double(out, e.availability.observation_time);
    out += ',';
    out += to_string(e.law);
    out += ',';
    append_double(out, e.phase_rad);
    out += ',';
    append_bool(out, e.switch_on);
    out += ',';
    append_bool(out, e.destroyed);
    out += ',';
    append_bool(out, e.predicted_recorded);
    out += ',';
    if (e.subset >= 0 && static_cast<std::size_t>(e.subset) < subset_names.size())
        out += subset_names[static_cast<std::size_t>(e.subset)];
    else
        out += "unmatched";
    return out;
}

/// FNV-1a (64 bit), used for the event-log digest.
class Fnv1a {
public:
    void update(std::string_view bytes) noexcept {
        for (unsigned char c : bytes) {
            hash_ ^= c;
            hash_ *= 0x100000001B3ULL;
        }
    }
    [[nodiscard]] std::uint64_t value() const noexcept { return hash_; }
    [[nodiscard]] std::string hex() const {
        char buf[17];
        std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(hash_));
        return buf;
    }

private:
    std::uint64_t hash_ = 0xCBF29CE484222325ULL;
};

// ---------------------------------------------------------------------------
// Coincidence counter
// ---------------------------------------------------------------------------

struct SignalTag {
    std::uint64_t pair_id = 0;
    double time = 0.0;
};

struct DetectorTag {
    std::uint64_t pair_id = 0;
    double time = 0.0;
    Detector detector = Detector::D1;
};

struct CoincidenceRecord {
    std::uint64_t pair_id = 0;          // signal (D0) pair
    std::uint64_t detector_pair_id = 0; // pair that produced the matched idler click
    double signal_time = 0.0;
    double detector_time = 0.0;
    std::optional<Detector> detector;
    bool matched = false;
};

struct CoincidenceResult {
    std::vector<CoincidenceRecord> records; // one per signal, in input order
    std::size_t matched = 0;
    std::size_t ambiguities = 0; // signals that saw more than one free idler click in the window
};

/// Greedy nearest-in-time matching of D0 impacts to idler clicks expected
/// delta_t later. A click matches when |t_det - t_sig - delta_t| < window;
/// a zero window therefore matches nothing. Both streams must be time-sorted.
[[nodiscard]] inline CoincidenceResult coincidence_match(std::span<const SignalTag> signals,
                                                         std::span<const DetectorTag> detectors, double delta_t_s,
                                                         double window_s) {
    if (!std::is_sorted(signals.begin(), signals.end(), [](auto& l, auto& r) { return l.time < r.time; }) ||
        !std::is_sorted(detectors.begin(), detectors.end(), [](auto& l, auto& r) { return l.time < r.time; }))
        throw ValidationError("coincidence_match expects time-sorted event streams");
    CoincidenceResult out;
    out.records.reserve(signals.size());
    std::vector<bool> used(detectors.size(), false);
    for (const auto& s : signals) {
        CoincidenceRecord rec;
        rec.pair_id = s.pair_id;
        rec.signal_time = s.time;
        if (window_s > 0.0) {
            const double expected = s.time + delta_t_s;
            auto it = std::lower_bound(detectors.begin(), detectors.end(), expected - window_s,
                                       [](const DetectorTag& d, double t) { return d.time < t; });
            std::size_t candidates = 0;
            std::optional<std::size_t> best;
            double best_gap = window_s;
            for (; it != detectors.end() && it->time < expected + window_s; ++it) {
                const auto idx = static_cast<std::size_t>(it - detectors.begin());
                const double gap = std::abs(it->time - expected);
                if (used[idx] || !(gap < window_s)) continue;
                ++candidates;
                if (!best || gap < best_gap) {
                    best = idx;
                    best_gap = gap;
                }
            }
            if (candidates > 1) ++out.ambiguities;
            if (best) {
                used[*best] = true;
                const auto& d = detectors[*best];
                rec.matched = true;
                rec.detector = d.detector;
                rec.detector_pair_id = d.pair_id;
                rec.detector_time = d.time;
                ++out.matched;
            }
        }
        out.records.push_back(rec);
    }
    return out;
}

} // namespace duality
