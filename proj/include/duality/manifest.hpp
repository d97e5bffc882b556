#pragma once

// Batch runs: manifest parsing and serialization, execution with per-run
// artifact files and a summary document, and the built-in acceptance manifest.

#include <filesystem>
#include <fstream>
#include <optional>
#include <ostream>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include "duality/config_json.hpp"
#include "duality/protocols.hpp"
#include "duality/report.hpp"

namespace duality {

enum class ReportFormat { Json, Csv, Ascii };

[[nodiscard]] constexpr std::string_view to_string(ReportFormat f) noexcept {
    switch (f) {
    case ReportFormat::Json: return "json";
    case ReportFormat::Csv: return "csv";
    default: return "ascii";
    }
}

[[nodiscard]] inline std::optional<ReportFormat> report_format_from_name(std::string_view s) noexcept {
    if (s == "json") return ReportFormat::Json;
    if (s == "csv") return ReportFormat::Csv;
    if (s == "ascii" || s == "ascii-histogram") return ReportFormat::Ascii;
    return std::nullopt;
}

struct RunManifest {
    std::vector<ProtocolConfig> runs;
    std::string output_dir = "out";
    std::vector<ReportFormat> formats{ReportFormat::Json};
    std::optional<std::uint64_t> seed_override;

    [[nodiscard]] bool wants(ReportFormat f) const noexcept {
        return std::find(formats.begin(), formats.end(), f) != formats.end();
    }

    void validate() const {
        if (runs.empty()) throw ConfigError("runs", "manifest needs at least one run");
        std::set<std::string> names;
        for (std::size_t i = 0; i < runs.size(); ++i)
            if (!names.insert(runs[i].name).second)
                throw ConfigError("runs[" + std::to_string(i) + "].name", "duplicate run name '" + runs[i].name + "'");
        if (formats.empty()) throw ConfigError("formats", "at least one report format is required");
    }

    bool operator==(const RunManifest&) const = default;
};

/// Parses a comma separated format list such as "json,csv,ascii".
[[nodiscard]] inline std::vector<ReportFormat> parse_format_list(std::string_view list, const std::string& path) {
    std::vector<ReportFormat> out;
    std::size_t start = 0;
    while (start <= list.size()) {
        const auto end = std::min(list.find(',', start), list.size());
        const auto item = list.substr(start, end - start);
        const auto f = report_format_from_name(item);
        if (!f) throw ConfigError(path, "unknown report format '" + std::string(item) + "'");
        if (std::find(out.begin(), out.end(), *f) == out.end()) out.push_back(*f);
        start = end + 1;
    }
    return out;
}

[[nodiscard]] inline RunManifest manifest_from_json(const Json& j) {
    detail::ObjectReader r(j, "");
    RunManifest m;
    r.string("output_dir", m.output_dir);
    if (const Json* f = r.find("formats")) {
        if (!f->is_array()) throw ConfigError("formats", "expected an array of format names");
        m.formats.clear();
        for (std::size_t i = 0; i < f->size(); ++i) {
            const auto p = "formats[" + std::to_string(i) + "]";
            if (!(*f)[i].is_string()) throw ConfigError(p, "expected a string");
            const auto fmt = report_format_from_name((*f)[i].get<std::string>());
            if (!fmt) throw ConfigError(p, "unknown report format '" + (*f)[i].get<std::string>() + "'");
            if (std::find(m.formats.begin(), m.formats.end(), *fmt) == m.formats.end()) m.formats.push_back(*fmt);
        }
    }
    if (const Json* s = r.find("seed"); s && !s->is_null()) {
        if (!s->is_number_unsigned()) throw ConfigError("seed", "expected a nonnegative integer");
        m.seed_override = s->get<std::uint64_t>();
    }
    const Json& runs = r.require("runs");
    if (!runs.is_array()) throw ConfigError("runs", "expected an array of run configurations");
    for (std::size_t i = 0; i < runs.size(); ++i) {
        const auto path = "runs[" + std::to_string(i) + "]";
        m.runs.push_back(config_from_json(runs[i], path));
        if (!runs[i].contains("name")) m.runs.back().name = "run" + std::to_string(i);
    }
    r.finish();
    m.validate();
    return m;
}

/// Parses the JSON manifest text. Every failure is a ConfigError with a key path.
[[nodiscard]] inline RunManifest parse_manifest(std::string_view text) {
    Json j;
    try {
        j = Json::parse(text);
    } catch (const Json::parse_error& e) {
        throw ConfigError("", std::string("malformed JSON: ") + e.what());
    }
    return manifest_from_json(j);
}

[[nodiscard]] inline Json to_json(const RunManifest& m) {
    Json j;
    j["output_dir"] = m.output_dir;
    Json f = Json::array();
    for (auto fmt : m.formats) f.push_back(to_string(fmt));
    j["formats"] = std::move(f);
    j["seed"] = m.seed_override ? Json(*m.seed_override) : Json(nullptr);
    Json runs = Json::array();
    for (const auto& c : m.runs) runs.push_back(to_json(c));
    j["runs"] = std::move(runs);
    return j;
}

[[nodiscard]] inline std::string serialize_manifest(const RunManifest& m) { return to_json(m).dump(2) + "\n"; }

// ---------------------------------------------------------------------------
// Execution
// ---------------------------------------------------------------------------

struct ExecuteOptions {
    unsigned threads = 1;
    int verbosity = 0;
    std::ostream* log = nullptr;
};

struct RunOutcome {
    std::string name;
    bool ok = false;
    std::string error;
    std::optional<RunResult> result;
};

struct ManifestOutcome {
    std::vector<RunOutcome> runs;
    Json summary;
    int exit_code = 0;
};

/// The configuration a run actually executes with.
[[nodiscard]] inline ProtocolConfig effective_config(const RunManifest& m, const ProtocolConfig& c) {
    ProtocolConfig out = c;
    if (m.seed_override) out.seed = *m.seed_override;
    return out;
}

[[nodiscard]] inline Json summary_entry(const RunOutcome& o) {
    Json j;
    j["name"] = o.name;
    if (!o.ok) {
        j["status"] = "error";
        j["error"] = o.error;
        return j;
    }
    const auto& r = *o.result;
    j["protocol"] = name_of(r.config.protocol);
    j["status"] = to_string(r.status);
    Json verdicts = Json::object();
    for (const auto& s : r.subsets) verdicts[s.name] = to_string(s.classification.verdict);
    if (r.status == RunStatus::Completed) verdicts["pooled"] = to_string(r.pooled.classification.verdict);
    j["verdicts"] = std::move(verdicts);
    j["feasibility"] = r.feasibility ? to_json(*r.feasibility) : Json(nullptr);
    j["markers"] = r.markers;
    j["event_digest"] = r.event_digest;
    return j;
}

inline void write_text(const std::filesystem::path& p, const std::string& text) {
    std::ofstream out(p, std::ios::binary);
    if (!out) throw std::runtime_error("cannot open " + p.string() + " for writing");
    out << text;
    if (!out) throw std::runtime_error("write failed: " + p.string());
}

/// Runs every entry, isolating failures, and writes <name>.json,
/// <name>.events.csv, <name>.hist.txt and summary.json to m.output_dir.
[[nodiscard]] inline ManifestOutcome execute_manifest(const RunManifest& m, const ExecuteOptions& opt = {}) {
    namespace fs = std::filesystem;
    ManifestOutcome outcome;
    const fs::path dir(m.output_dir);
    std::error_code ec;
    fs::create_directories(dir, ec);
    if (ec) throw std::runtime_error("cannot create output directory " + dir.string() + ": " + ec.message());

    for (const auto& base : m.runs) {
        RunOutcome o;
        o.name = base.name;
        try {
            const auto cfg = effective_config(m, base);
            RunOptions ro;
            ro.threads = opt.threads;
            ro.keep_events = m.wants(ReportFormat::Csv);
            auto result = run_protocol(cfg, ro);
            if (m.wants(ReportFormat::Json)) write_text(dir / (cfg.name + ".json"), to_json(result).dump(2) + "\n");
            if (m.wants(ReportFormat::Csv)) {
                std::ostringstream csv;
                write_event_csv(csv, result);
                write_text(dir / (cfg.name + ".events.csv"), csv.str());
            }
            if (m.wants(ReportFormat::Ascii) && result.status == RunStatus::Completed)
                write_text(dir / (cfg.name + ".hist.txt"), ascii_report(result));
            result.events.clear();
            result.events.shrink_to_fit();
            o.ok = true;
            o.result = std::move(result);
        } catch (const std::exception& e) {
            o.error = e.what();
        }
        if (opt.log && (opt.verbosity > 0 || !o.ok)) {
            if (o.ok)
                *opt.log << o.name << ": " << to_string(o.result->status) << '\n';
            else
                *opt.log << o.name << ": error: " << o.error << '\n';
        }
        if (!o.ok) outcome.exit_code = 1;
        outcome.runs.push_back(std::move(o));
    }

    Json runs = Json::array();
    for (const auto& o : outcome.runs) runs.push_back(summary_entry(o));
    outcome.summary["seed"] = m.seed_override ? Json(*m.seed_override) : Json(nullptr);
    outcome.summary["runs"] = std::move(runs);
    write_text(dir / "summary.json", outcome.summary.dump(2) + "\n");
    return outcome;
}

// ---------------------------------------------------------------------------
// Built-in acceptance manifest
// ---------------------------------------------------------------------------

namespace acceptance_runs {
inline constexpr std::string_view predictor = "predictor_posterior";
inline constexpr std::string_view eraser = "quantum_eraser";
inline constexpr std::string_view switch_optimal = "switch_d_outcome_i_optimal";
inline constexpr std::string_view switch_empty = "switch_d_outcome_i_empty";
inline constexpr std::string_view switch_window = "switch_d_outcome_i_window";
} // namespace acceptance_runs

[[nodiscard]] inline RunManifest acceptance_manifest(std::uint64_t seed = 20240917) {
    RunManifest m;
    m.output_dir = "acceptance_out";
    m.formats = {ReportFormat::Json};
    m.seed_override = seed;
    const OpticsConfig optics;

    auto add = [&](std::string name, Protocol p, std::uint64_t n) -> ProtocolConfig& {
        ProtocolConfig c;
        c.name = std::move(name);
        c.protocol = p;
        c.n_pairs = n;
        c.seed = seed;
        m.runs.push_back(c);
        return m.runs.back();
    };

    add("double_slit_recording", Protocol::DoubleSlit, 100000).detectors_recording = true;
    add("double_slit_no_detectors", Protocol::DoubleSlit, 100000).detectors_recording = false;
    add("delayed_choice", Protocol::DelayedChoice, 200000);
    add(std::string(acceptance_runs::eraser), Protocol::QuantumEraser, 400000);
    add(std::string(acceptance_runs::predictor), Protocol::PredictorExperiment, 1000000);

    for (auto policy : {RenderingPolicy::CollapseAtDetection, RenderingPolicy::RenderAtAvailability}) {
        const std::string tag(name_of(policy));
        add("detect_no_record_" + tag, Protocol::DetectNoRecord, 100000).model.policy = policy;
        auto& mac = add("macroscopic_erasure_" + tag, Protocol::MacroscopicErasure, 100000);
        mac.model.policy = policy;
        mac.delta_t_s = presets::long_delay_s;
        mac.coincidence_window_s = 1e-3;
    }

    auto stage_d = [&](std::string_view name, IntervalSet region) {
        auto& c = add(std::string(name), Protocol::SwitchParadox, 100000);
        c.switch_stage = SwitchStage::D;
        c.observation_schedule = ObservationSchedule::AtT0;
        c.outcome_hypothesis = OutcomeHypothesis::I;
        c.strategy = SwitchStrategy::strategy1(std::move(region));
    };
    stage_d(acceptance_runs::switch_optimal, optimal_interval_set(optics));
    stage_d(acceptance_runs::switch_empty, IntervalSet{});
    stage_d(acceptance_runs::switch_window, IntervalSet::full(optics));

    for (auto stage : {SwitchStage::A, SwitchStage::B, SwitchStage::C}) {
        for (auto [tag, dt] : {std::pair{"short", presets::short_delay_s}, std::pair{"long", presets::long_delay_s}}) {
            auto& c = add("switch_" + std::string(name_of(stage)) + "_" + tag, Protocol::SwitchParadox, 100000);
            c.switch_stage = stage;
            c.delta_t_s = dt;
            c.coincidence_window_s = dt / 10.0;
        }
    }

    add("perishable_equivalent", Protocol::PerishableMedia, 100000);
    add("perishable_distinct", Protocol::PerishableMedia, 100000).subjective_recording = SubjectiveRecording::Distinct;
    return m;
}

} // namespace duality
