#pragma once

// Report emission: result JSON (stable key order), CSV event log and an
// 80-column ASCII histogram.

#include <algorithm>
#include <cstdio>
#include <ostream>
#include <string>

#include "duality/config_json.hpp"
#include "duality/events.hpp"
#include "duality/protocols.hpp"

namespace duality {

[[nodiscard]] inline Json to_json(const Histogram& h) {
    return {{"lo", h.lo}, {"hi", h.hi}, {"fringe_period", h.fringe_period}, {"bins", h.bins()}, {"counts", h.counts}};
}

[[nodiscard]] inline Json to_json(const FeasibilityReport& f) {
    return {{"interval_set", to_json(f.interval_set)},
            {"delta", f.delta_value},
            {"tv", f.tv_value},
            {"margin", f.margin},
            {"feasible_under_outcome_i", f.feasible_under_outcome_i}};
}

[[nodiscard]] inline Json to_json(const SubsetResult& s) {
    Json j;
    j["name"] = s.name;
    j["count"] = s.count;
    j["verdict"] = to_string(s.classification.verdict);
    j["log_likelihood_ratio"] = s.classification.log_likelihood_ratio;
    j["phase_rad"] = s.classification.phase_rad;
    j["visibility"] = s.visibility ? Json(*s.visibility) : Json(nullptr);
    j["region"] = s.region ? to_json(*s.region) : Json(nullptr);
    j["histogram"] = to_json(s.histogram);
    return j;
}

[[nodiscard]] inline Json to_json(const PredictorSummary& p) {
    Json j;
    j["bin_width_m"] = p.bin_width_m;
    j["max_abs_deviation"] = p.max_abs_deviation;
    j["min_dark_fringe_posterior"] = p.min_dark_fringe_posterior;
    j["dark_fringe_bins"] = p.dark_fringe_bins;
    j["accuracy"] = p.accuracy;
    j["reference_accuracy"] = p.reference_accuracy;
    j["calibration_error"] = p.calibration_error;
    j["bin_counts"] = p.bin_counts;
    j["bin_recorded"] = p.bin_recorded;
    return j;
}

/// Result document. A run that did not complete carries no histograms.
[[nodiscard]] inline Json to_json(const RunResult& r) {
    const bool completed = r.status == RunStatus::Completed;
    Json j;
    j["name"] = r.config.name;
    j["protocol"] = name_of(r.config.protocol);
    j["status"] = to_string(r.status);
    j["seed"] = r.config.seed;
    j["config"] = to_json(r.config);
    Json subsets = Json::array();
    if (completed)
        for (const auto& s : r.subsets) subsets.push_back(to_json(s));
    j["subsets"] = std::move(subsets);
    j["pooled"] = completed ? to_json(r.pooled) : Json(nullptr);
    j["unmatched"] = r.unmatched;
    if (r.coincidence.used) {
        j["coincidence"] = {{"signals", r.coincidence.signals},
                            {"registered", r.coincidence.registered},
                            {"matched", r.coincidence.matched},
                            {"ambiguities", r.coincidence.ambiguities},
                            {"mismatches", r.coincidence.mismatches},
                            {"mismatch_rate", r.coincidence.mismatch_rate}};
    } else {
        j["coincidence"] = nullptr;
    }
    j["markers"] = r.markers;
    j["warnings"] = r.warnings;
    j["feasibility"] = r.feasibility ? to_json(*r.feasibility) : Json(nullptr);
    j["predictor"] = r.predictor ? to_json(*r.predictor) : Json(nullptr);
    Json stats = Json::object();
    for (const auto& [k, v] : r.statistics) stats[k] = v;
    j["statistics"] = std::move(stats);
    j["event_digest"] = r.event_digest;
    return j;
}

inline void write_event_csv(std::ostream& out, const RunResult& r) {
    out << kEventCsvHeader << '\n';
    for (const auto& e : r.events) out << event_csv_row(e, r.subset_names) << '\n';
}

/// One row per fringe-aligned bin: position in mm, bar, count. Rows fit in 80 columns.
[[nodiscard]] inline std::string ascii_histogram(const Histogram& h, std::string_view title) {
    constexpr std::size_t bar_width = 52;
    std::string out(title);
    out += '\n';
    std::uint64_t peak = 0;
    for (auto c : h.counts) peak = std::max(peak, c);
    char line[96];
    for (std::size_t i = 0; i < h.bins(); ++i) {
        const auto len = peak ? static_cast<std::size_t>(
                                    (static_cast<double>(h.counts[i]) / static_cast<double>(peak)) * bar_width + 0.5)
                              : 0;
        std::snprintf(line, sizeof line, "%+9.4f mm |%-52s %10llu\n", h.bin_center(i) * 1e3,
                      std::string(len, '#').c_str(), static_cast<unsigned long long>(h.counts[i]));
        out += line;
    }
    return out;
}

[[nodiscard]] inline std::string ascii_report(const RunResult& r) {
    std::string out = r.config.name + " (" + std::string(name_of(r.config.protocol)) + ", " +
                      std::string(to_string(r.status)) + ")\n";
    if (r.status != RunStatus::Completed) return out;
    for (const auto& s : r.subsets) {
        char head[128];
        std::snprintf(head, sizeof head, "[%s] n=%llu verdict=%s", s.name.c_str(),
                      static_cast<unsigned long long>(s.count), std::string(to_string(s.classification.verdict)).c_str());
        out += '\n';
        out += ascii_histogram(s.histogram, head);
    }
    return out;
}

} // namespace duality
