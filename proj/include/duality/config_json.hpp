#pragma once

// JSON form of ProtocolConfig. Parsing is strict: unknown keys and wrong
// types are ConfigErrors carrying the path of the offending key.

#include <cmath>
#include <limits>
#include <optional>
#include <set>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include <json.hpp>

#include "duality/errors.hpp"
#include "duality/protocol_config.hpp"
#include "duality/stats.hpp"

namespace duality {

using Json = nlohmann::ordered_json;

namespace detail {

/// Walks one JSON object, remembering which keys were read.
class ObjectReader {
public:
    ObjectReader(const Json& j, std::string path) : j_(j), path_(std::move(path)) {
        if (!j_.is_object()) throw ConfigError(path_.empty() ? "$" : path_, "expected an object");
    }

    [[nodiscard]] std::string child(std::string_view key) const {
        return path_.empty() ? std::string(key) : path_ + "." + std::string(key);
    }

    [[nodiscard]] const Json* find(std::string_view key) {
        seen_.emplace(key);
        auto it = j_.find(std::string(key));
        return it == j_.end() ? nullptr : &*it;
    }

    [[nodiscard]] const Json& require(std::string_view key) {
        const Json* v = find(key);
        if (!v) throw ConfigError(child(key), "required key missing");
        return *v;
    }

    void number(std::string_view key, double& out) {
        if (const Json* v = find(key)) out = as_number(*v, child(key));
    }

    void integer(std::string_view key, std::uint64_t& out) {
        if (const Json* v = find(key)) {
            if (!v->is_number_unsigned() && !(v->is_number_integer() && v->get<std::int64_t>() >= 0))
                throw ConfigError(child(key), "expected a nonnegative integer");
            out = v->get<std::uint64_t>();
        }
    }

    void boolean(std::string_view key, bool& out) {
        if (const Json* v = find(key)) {
            if (!v->is_boolean()) throw ConfigError(child(key), "expected true or false");
            out = v->get<bool>();
        }
    }

    void string(std::string_view key, std::string& out) {
        if (const Json* v = find(key)) {
            if (!v->is_string()) throw ConfigError(child(key), "expected a string");
            out = v->get<std::string>();
        }
    }

    template <class E>
    void enumeration(std::string_view key, E& out) {
        if (const Json* v = find(key)) out = as_enum<E>(*v, child(key));
    }

    template <class E>
    void optional_enumeration(std::string_view key, std::optional<E>& out) {
        if (const Json* v = find(key); v && !v->is_null()) out = as_enum<E>(*v, child(key));
    }

    void finish() const {
        for (const auto& [k, v] : j_.items())
            if (!seen_.contains(k)) throw ConfigError(child(k), "unknown key");
    }

    static double as_number(const Json& v, const std::string& path) {
        if (v.is_number()) return v.get<double>();
        if (v.is_string() && v.get<std::string>() == "inf") return std::numeric_limits<double>::infinity();
        throw ConfigError(path, "expected a number");
    }

    template <class E>
    static E as_enum(const Json& v, const std::string& path) {
        if (!v.is_string()) throw ConfigError(path, "expected a string");
        const auto name = v.get<std::string>();
        if (auto e = enum_from_name<E>(name)) return *e;
        std::string allowed;
        for (const auto& [val, n] : EnumNames<E>::values) {
            if (!allowed.empty()) allowed += ", ";
            allowed += n;
        }
        throw ConfigError(path, "unknown value '" + name + "' (allowed: " + allowed + ")");
    }

private:
    const Json& j_;
    std::string path_;
    std::set<std::string, std::less<>> seen_;
};

inline Json number_json(double v) {
    if (std::isinf(v) && v > 0) return "inf";
    return v;
}

} // namespace detail

// ---------------------------------------------------------------------------
// to JSON
// ---------------------------------------------------------------------------

[[nodiscard]] inline Json to_json(const OpticsConfig& o) {
    Json j;
    j["wavelength_m"] = o.wavelength_m;
    j["slit_separation_m"] = o.slit_separation_m;
    j["slit_screen_distance_m"] = o.slit_screen_distance_m;
    j["screen_halfwidth_m"] = o.screen_halfwidth_m;
    j["intensity_scale"] = o.intensity_scale;
    j["envelope_enabled"] = o.envelope_enabled;
    j["slit_width_m"] = o.slit_width_m;
    return j;
}

[[nodiscard]] inline Json to_json(const IntervalSet& s) {
    Json j = Json::array();
    for (const auto& iv : s.intervals()) j.push_back(Json::array({iv.lo, iv.hi}));
    return j;
}

[[nodiscard]] inline Json to_json(const SwitchStrategy& s) {
    Json j;
    j["kind"] = name_of(s.kind);
    if (s.kind == SwitchStrategy::Kind::Strategy1) j["intervals"] = to_json(s.region);
    if (s.kind == SwitchStrategy::Kind::Custom) {
        Json t = Json::array();
        for (bool b : s.decision_table) t.push_back(b);
        j["decision_table"] = std::move(t);
    }
    return j;
}

[[nodiscard]] inline Json to_json(const ProtocolConfig& c) {
    Json j;
    j["name"] = c.name;
    j["protocol"] = name_of(c.protocol);
    j["optics"] = to_json(c.optics);
    j["model"] = {{"policy", name_of(c.model.policy)},
                  {"availability_horizon", name_of(c.model.availability_horizon)}};
    j["n_pairs"] = c.n_pairs;
    j["delta_t_s"] = c.delta_t_s;
    j["coincidence_window_s"] = c.coincidence_window_s;
    j["destruction_prob"] = c.destruction_prob;
    j["pairing_mode"] = name_of(c.pairing_mode);
    j["strategy"] = c.strategy ? to_json(*c.strategy) : Json(nullptr);
    j["outcome_hypothesis"] = c.outcome_hypothesis ? Json(name_of(*c.outcome_hypothesis)) : Json(nullptr);
    j["observation_schedule"] = name_of(c.observation_schedule);
    j["seed"] = c.seed;
    j["detectors_recording"] = c.detectors_recording;
    j["record_probability"] = c.record_probability;
    j["detect_no_record_variant"] = name_of(c.detect_no_record_variant);
    j["switch_stage"] = name_of(c.switch_stage);
    j["microprocessor_switch"] = c.microprocessor_switch;
    j["perishable_ttl_s"] = detail::number_json(c.perishable_ttl_s);
    j["subjective_recording"] = name_of(c.subjective_recording);
    j["region_model"] = name_of(c.region_model);
    j["noise_threshold"] = c.noise_threshold;
    return j;
}

// ---------------------------------------------------------------------------
// from JSON
// ---------------------------------------------------------------------------

[[nodiscard]] inline OpticsConfig optics_from_json(const Json& j, const std::string& path) {
    detail::ObjectReader r(j, path);
    OpticsConfig o;
    r.number("wavelength_m", o.wavelength_m);
    r.number("slit_separation_m", o.slit_separation_m);
    r.number("slit_screen_distance_m", o.slit_screen_distance_m);
    r.number("screen_halfwidth_m", o.screen_halfwidth_m);
    r.number("intensity_scale", o.intensity_scale);
    r.boolean("envelope_enabled", o.envelope_enabled);
    r.number("slit_width_m", o.slit_width_m);
    r.finish();
    return o;
}

/// Interval list `[[lo, hi], ...]`. Intervals may be given in any order and
/// may touch or overlap; they are merged.
[[nodiscard]] inline IntervalSet interval_set_from_json(const Json& j, const std::string& path) {
    if (!j.is_array()) throw ConfigError(path, "expected an array of [lo, hi] pairs");
    std::vector<Interval> pieces;
    for (std::size_t i = 0; i < j.size(); ++i) {
        const auto p = path + "[" + std::to_string(i) + "]";
        const auto& e = j[i];
        if (!e.is_array() || e.size() != 2) throw ConfigError(p, "expected [lo, hi]");
        const double lo = detail::ObjectReader::as_number(e[0], p + "[0]");
        const double hi = detail::ObjectReader::as_number(e[1], p + "[1]");
        if (!(lo < hi)) throw ConfigError(p, "interval needs lo < hi");
        pieces.push_back({lo, hi});
    }
    return IntervalSet::merged(std::move(pieces));
}

[[nodiscard]] inline SwitchStrategy strategy_from_json(const Json& j, const std::string& path,
                                                       const OpticsConfig& optics) {
    detail::ObjectReader r(j, path);
    SwitchStrategy s;
    s.kind = detail::ObjectReader::as_enum<SwitchStrategy::Kind>(r.require("kind"), r.child("kind"));
    if (s.kind == SwitchStrategy::Kind::Strategy1) {
        const Json& iv = r.require("intervals");
        if (iv.is_string() && iv.get<std::string>() == "optimal") {
            try {
                s.region = optimal_interval_set(optics);
            } catch (const std::exception& e) {
                throw ConfigError(r.child("intervals"), e.what());
            }
        } else {
            s.region = interval_set_from_json(iv, r.child("intervals"));
        }
    }
    if (s.kind == SwitchStrategy::Kind::Custom) {
        const Json& t = r.require("decision_table");
        if (!t.is_array()) throw ConfigError(r.child("decision_table"), "expected an array of booleans");
        for (std::size_t i = 0; i < t.size(); ++i) {
            if (!t[i].is_boolean())
                throw ConfigError(r.child("decision_table") + "[" + std::to_string(i) + "]", "expected true or false");
            s.decision_table.push_back(t[i].get<bool>());
        }
    }
    r.finish();
    return s;
}

/// Parses and validates one run. Validation failures are reported against `path`.
[[nodiscard]] inline ProtocolConfig config_from_json(const Json& j, const std::string& path) {
    detail::ObjectReader r(j, path);
    ProtocolConfig c;
    r.string("name", c.name);
    c.protocol = detail::ObjectReader::as_enum<Protocol>(r.require("protocol"), r.child("protocol"));
    if (const Json* o = r.find("optics")) c.optics = optics_from_json(*o, r.child("optics"));
    if (const Json* m = r.find("model")) {
        detail::ObjectReader mr(*m, r.child("model"));
        mr.enumeration("policy", c.model.policy);
        mr.enumeration("availability_horizon", c.model.availability_horizon);
        mr.finish();
    }
    r.integer("n_pairs", c.n_pairs);
    r.number("delta_t_s", c.delta_t_s);
    r.number("coincidence_window_s", c.coincidence_window_s);
    r.number("destruction_prob", c.destruction_prob);
    r.enumeration("pairing_mode", c.pairing_mode);
    if (const Json* s = r.find("strategy"); s && !s->is_null())
        c.strategy = strategy_from_json(*s, r.child("strategy"), c.optics);
    r.optional_enumeration("outcome_hypothesis", c.outcome_hypothesis);
    r.enumeration("observation_schedule", c.observation_schedule);
    r.integer("seed", c.seed);
    r.boolean("detectors_recording", c.detectors_recording);
    r.number("record_probability", c.record_probability);
    r.enumeration("detect_no_record_variant", c.detect_no_record_variant);
    r.enumeration("switch_stage", c.switch_stage);
    r.boolean("microprocessor_switch", c.microprocessor_switch);
    r.number("perishable_ttl_s", c.perishable_ttl_s);
    r.enumeration("subjective_recording", c.subjective_recording);
    r.enumeration("region_model", c.region_model);
    r.number("noise_threshold", c.noise_threshold);
    r.finish();
    try {
        c.validate();
    } catch (const ValidationError& e) {
        throw ConfigError(path, e.what());
    }
    return c;
}

} // namespace duality
