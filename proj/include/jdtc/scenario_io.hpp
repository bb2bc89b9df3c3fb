#pragma once

#include <fstream>
#include <sstream>
#include <stdexcept>
#include <string>

#include <json.hpp>

#include "jdtc/scenario.hpp"

namespace jdtc {

class ConfigError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

namespace detail {

using nlohmann::json;

inline void check_keys(const json& j, std::initializer_list<const char*> allowed,
                       const std::string& where) {
    for (const auto& [key, value] : j.items()) {
        bool ok = false;
        for (const char* a : allowed) ok = ok || key == a;
        if (!ok) throw ConfigError("unknown key '" + key + "' in " + where);
    }
}

inline const json& require(const json& j, const char* key, const std::string& where) {
    auto it = j.find(key);
    if (it == j.end()) throw ConfigError("missing key '" + std::string(key) + "' in " + where);
    return *it;
}

inline double get_num(const json& j, const char* key, const std::string& where) {
    const json& v = require(j, key, where);
    if (!v.is_number()) throw ConfigError("key '" + std::string(key) + "' in " + where + " must be a number");
    return v.get<double>();
}

inline int get_int(const json& j, const char* key, const std::string& where) {
    const json& v = require(j, key, where);
    if (!v.is_number_integer()) throw ConfigError("key '" + std::string(key) + "' in " + where + " must be an integer");
    return v.get<int>();
}

inline std::string get_str(const json& j, const char* key, const std::string& where) {
    const json& v = require(j, key, where);
    if (!v.is_string()) throw ConfigError("key '" + std::string(key) + "' in " + where + " must be a string");
    return v.get<std::string>();
}

inline std::vector<double> get_vec(const json& j, const char* key, const std::string& where,
                                   std::size_t expected = 0) {
    const json& v = require(j, key, where);
    if (!v.is_array()) throw ConfigError("key '" + std::string(key) + "' in " + where + " must be an array");
    std::vector<double> out;
    for (const auto& e : v) {
        if (!e.is_number()) throw ConfigError("array '" + std::string(key) + "' in " + where + " must hold numbers");
        out.push_back(e.get<double>());
    }
    if (expected != 0 && out.size() != expected)
        throw ConfigError("array '" + std::string(key) + "' in " + where + " must have " +
                          std::to_string(expected) + " entries");
    return out;
}

inline int parse_id(const std::string& s, const std::string& where) {
    try {
        std::size_t pos = 0;
        const int v = std::stoi(s, &pos);
        if (pos != s.size()) throw std::invalid_argument(s);
        return v;
    } catch (const std::exception&) {
        throw ConfigError("key '" + s + "' in " + where + " is not an integer id");
    }
}

inline std::pair<int, int> line_column(const std::string& text, std::size_t byte) {
    int line = 1, col = 1;
    for (std::size_t i = 0; i < byte && i < text.size(); ++i) {
        if (text[i] == '\n') {
            ++line;
            col = 1;
        } else {
            ++col;
        }
    }
    return {line, col};
}

}  // namespace detail

inline nlohmann::json config_to_json(const ScenarioConfig& cfg) {
    using nlohmann::json;
    json j;
    j["timesteps"] = cfg.timesteps;
    j["sampling_interval_s"] = cfg.sampling_interval;
    j["survival_probability"] = cfg.survival_probability;

    j["modes"] = json::array();
    for (const auto& m : cfg.modes) {
        json jm;
        jm["id"] = m.id;
        jm["kind"] = m.kind == MotionKind::ConstantVelocity ? "cv" : "ct";
        if (m.kind == MotionKind::CoordinatedTurn) jm["turn_rate_rad_s"] = m.turn_rate;
        jm["sigma_m_s2"] = m.sigma;
        j["modes"].push_back(std::move(jm));
    }

    j["classes"] = json::array();
    for (const auto& c : cfg.classes) {
        json jc;
        jc["id"] = c.id;
        jc["mode_ids"] = c.modes;
        jc["mode_transition"] = c.transition;
        j["classes"].push_back(std::move(jc));
    }

    json jb;
    jb["probability"] = cfg.birth.probability;
    for (const auto& [c, g] : cfg.birth.class_pmf) jb["class_pmf"][std::to_string(c)] = g;
    for (const auto& [c, betas] : cfg.birth.mode_pmf)
        for (const auto& [m, b] : betas)
            jb["mode_pmf"][std::to_string(c)][std::to_string(m)] = b;
    jb["mean_state"] = cfg.birth.mean;
    jb["cov_diag"] = cfg.birth.cov_diag;
    j["birth"] = std::move(jb);

    j["sensors"] = json::array();
    for (const auto& s : cfg.sensors) {
        json js;
        js["id"] = s.id;
        js["position_m"] = {s.x, s.y};
        js["noise_var_m2"] = s.noise_var;
        for (const auto& [c, pd] : s.detection)
            js["detection_probability"][std::to_string(c)] = pd;
        js["clutter_rate"] = s.clutter_rate;
        js["clutter_range_m"] = {s.clutter_lo, s.clutter_hi};
        j["sensors"].push_back(std::move(js));
    }

    j["network"] = {{"topology", cfg.network.topology},
                    {"radius_m", cfg.network.radius},
                    {"consensus_steps", cfg.network.consensus_steps},
                    {"weight_rule", cfg.network.weight_rule}};
    j["reduction"] = {{"prune_threshold", cfg.reduction.prune_threshold},
                      {"merge_threshold", cfg.reduction.merge_threshold},
                      {"max_components", cfg.reduction.max_components}};
    j["ospa"] = {{"order", cfg.ospa.order}, {"cutoff_m", cfg.ospa.cutoff}};
    j["trials"] = cfg.trials;
    j["seed"] = cfg.seed;

    json jt;
    jt["initial_state"] = cfg.truth.initial_state;
    jt["class_id"] = cfg.truth.class_id;
    jt["appear_step"] = cfg.truth.appear_step;
    jt["disappear_step"] = cfg.truth.disappear_step;
    jt["mode_schedule"] = json::array();
    for (const auto& seg : cfg.truth.mode_schedule)
        jt["mode_schedule"].push_back(
            {{"from_step", seg.from_step}, {"to_step", seg.to_step}, {"mode_id", seg.mode_id}});
    jt["noisy"] = cfg.truth.noisy;
    j["truth"] = std::move(jt);

    j["extraction"] = {{"threshold", cfg.extraction.threshold},
                       {"criterion", cfg.extraction.criterion}};
    return j;
}

inline ScenarioConfig config_from_json(const nlohmann::json& j) {
    using detail::check_keys;
    using detail::get_int;
    using detail::get_num;
    using detail::get_str;
    using detail::get_vec;
    using detail::require;

    check_keys(j,
               {"timesteps", "sampling_interval_s", "survival_probability", "modes", "classes",
                "birth", "sensors", "network", "reduction", "ospa", "trials", "seed", "truth",
                "extraction"},
               "config root");

    ScenarioConfig cfg;
    cfg.timesteps = get_int(j, "timesteps", "config root");
    cfg.sampling_interval = get_num(j, "sampling_interval_s", "config root");
    cfg.survival_probability = get_num(j, "survival_probability", "config root");
    cfg.trials = get_int(j, "trials", "config root");
    cfg.seed = require(j, "seed", "config root").get<std::uint64_t>();

    cfg.modes.clear();
    for (const auto& jm : require(j, "modes", "config root")) {
        check_keys(jm, {"id", "kind", "turn_rate_rad_s", "sigma_m_s2"}, "modes[]");
        ScenarioConfig::Mode m;
        m.id = get_int(jm, "id", "modes[]");
        const std::string kind = get_str(jm, "kind", "modes[]");
        if (kind == "cv") {
            m.kind = MotionKind::ConstantVelocity;
            if (jm.contains("turn_rate_rad_s"))
                throw ConfigError("mode " + std::to_string(m.id) + ": 'cv' takes no turn_rate_rad_s");
        } else if (kind == "ct") {
            m.kind = MotionKind::CoordinatedTurn;
            m.turn_rate = get_num(jm, "turn_rate_rad_s", "modes[]");
        } else {
            throw ConfigError("mode " + std::to_string(m.id) + ": kind must be 'cv' or 'ct'");
        }
        m.sigma = get_num(jm, "sigma_m_s2", "modes[]");
        cfg.modes.push_back(std::move(m));
    }

    cfg.classes.clear();
    for (const auto& jc : require(j, "classes", "config root")) {
        check_keys(jc, {"id", "mode_ids", "mode_transition"}, "classes[]");
        ScenarioConfig::Class c;
        c.id = get_int(jc, "id", "classes[]");
        for (const auto& m : require(jc, "mode_ids", "classes[]")) c.modes.push_back(m.get<int>());
        for (const auto& row : require(jc, "mode_transition", "classes[]"))
            c.transition.push_back(row.get<std::vector<double>>());
        cfg.classes.push_back(std::move(c));
    }

    const auto& jb = require(j, "birth", "config root");
    check_keys(jb, {"probability", "class_pmf", "mode_pmf", "mean_state", "cov_diag"}, "birth");
    cfg.birth.probability = get_num(jb, "probability", "birth");
    for (const auto& [key, value] : require(jb, "class_pmf", "birth").items())
        cfg.birth.class_pmf[detail::parse_id(key, "birth.class_pmf")] = value.get<double>();
    for (const auto& [ckey, betas] : require(jb, "mode_pmf", "birth").items()) {
        const ClassId c = detail::parse_id(ckey, "birth.mode_pmf");
        for (const auto& [mkey, b] : betas.items())
            cfg.birth.mode_pmf[c][detail::parse_id(mkey, "birth.mode_pmf")] = b.get<double>();
    }
    cfg.birth.mean = get_vec(jb, "mean_state", "birth", 4);
    cfg.birth.cov_diag = get_vec(jb, "cov_diag", "birth", 4);

    cfg.sensors.clear();
    for (const auto& js : require(j, "sensors", "config root")) {
        check_keys(js,
                   {"id", "position_m", "noise_var_m2", "detection_probability", "clutter_rate",
                    "clutter_range_m"},
                   "sensors[]");
        ScenarioConfig::Sensor s;
        s.id = get_int(js, "id", "sensors[]");
        const auto pos = get_vec(js, "position_m", "sensors[]", 2);
        s.x = pos[0];
        s.y = pos[1];
        s.noise_var = get_num(js, "noise_var_m2", "sensors[]");
        const auto& jd = require(js, "detection_probability", "sensors[]");
        if (jd.is_number()) {
            for (const auto& c : cfg.classes) s.detection[c.id] = jd.get<double>();
        } else if (jd.is_object()) {
            for (const auto& [key, value] : jd.items())
                s.detection[detail::parse_id(key, "detection_probability")] = value.get<double>();
        } else {
            throw ConfigError("sensor " + std::to_string(s.id) +
                              ": detection_probability must be a number or per-class object");
        }
        s.clutter_rate = get_num(js, "clutter_rate", "sensors[]");
        const auto region = get_vec(js, "clutter_range_m", "sensors[]", 2);
        s.clutter_lo = region[0];
        s.clutter_hi = region[1];
        cfg.sensors.push_back(std::move(s));
    }

    const auto& jn = require(j, "network", "config root");
    check_keys(jn, {"topology", "radius_m", "consensus_steps", "weight_rule"}, "network");
    cfg.network.topology = get_str(jn, "topology", "network");
    cfg.network.radius = get_num(jn, "radius_m", "network");
    cfg.network.consensus_steps = get_int(jn, "consensus_steps", "network");
    cfg.network.weight_rule = get_str(jn, "weight_rule", "network");

    const auto& jr = require(j, "reduction", "config root");
    check_keys(jr, {"prune_threshold", "merge_threshold", "max_components"}, "reduction");
    cfg.reduction.prune_threshold = get_num(jr, "prune_threshold", "reduction");
    cfg.reduction.merge_threshold = get_num(jr, "merge_threshold", "reduction");
    cfg.reduction.max_components = get_int(jr, "max_components", "reduction");

    const auto& jo = require(j, "ospa", "config root");
    check_keys(jo, {"order", "cutoff_m"}, "ospa");
    cfg.ospa.order = get_num(jo, "order", "ospa");
    cfg.ospa.cutoff = get_num(jo, "cutoff_m", "ospa");

    const auto& jt = require(j, "truth", "config root");
    check_keys(jt,
               {"initial_state", "class_id", "appear_step", "disappear_step", "mode_schedule",
                "noisy"},
               "truth");
    cfg.truth.initial_state = get_vec(jt, "initial_state", "truth", 4);
    cfg.truth.class_id = get_int(jt, "class_id", "truth");
    cfg.truth.appear_step = get_int(jt, "appear_step", "truth");
    cfg.truth.disappear_step = get_int(jt, "disappear_step", "truth");
    cfg.truth.mode_schedule.clear();
    for (const auto& seg : require(jt, "mode_schedule", "truth")) {
        check_keys(seg, {"from_step", "to_step", "mode_id"}, "truth.mode_schedule[]");
        cfg.truth.mode_schedule.push_back({get_int(seg, "from_step", "truth.mode_schedule[]"),
                                           get_int(seg, "to_step", "truth.mode_schedule[]"),
                                           get_int(seg, "mode_id", "truth.mode_schedule[]")});
    }
    cfg.truth.noisy = jt.contains("noisy") ? jt.at("noisy").get<bool>() : false;

    const auto& je = require(j, "extraction", "config root");
    check_keys(je, {"threshold", "criterion"}, "extraction");
    cfg.extraction.threshold = get_num(je, "threshold", "extraction");
    cfg.extraction.criterion = get_str(je, "criterion", "extraction");

    if (auto res = validate_config(cfg); !res.ok) throw ConfigError(res.message);
    return cfg;
}

inline ScenarioConfig parse_config_string(const std::string& text, const std::string& origin) {
    nlohmann::json j;
    try {
        j = nlohmann::json::parse(text);
    } catch (const nlohmann::json::parse_error& e) {
        const auto [line, col] = detail::line_column(text, e.byte > 0 ? e.byte - 1 : 0);
        throw ConfigError(origin + ":" + std::to_string(line) + ":" + std::to_string(col) +
                          ": " + e.what());
    }
    try {
        return config_from_json(j);
    } catch (const nlohmann::json::exception& e) {
        throw ConfigError(origin + ": " + e.what());
    }
}

inline ScenarioConfig parse_config(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw ConfigError("cannot open config file '" + path + "'");
    std::ostringstream ss;
    ss << in.rdbuf();
    return parse_config_string(ss.str(), path);
}

/// CLI override keys: short aliases for the common tuning knobs plus the
/// scalar config paths. Overrides are applied after the file/preset values.
inline void apply_override(ScenarioConfig& cfg, const std::string& key, const std::string& value) {
    const auto as_num = [&]() {
        try {
            std::size_t pos = 0;
            const double v = std::stod(value, &pos);
            if (pos != value.size()) throw std::invalid_argument(value);
            return v;
        } catch (const std::exception&) {
            throw ConfigError("override " + key + ": '" + value + "' is not a number");
        }
    };

    if (key == "pS" || key == "survival_probability") {
        cfg.survival_probability = as_num();
    } else if (key == "pB" || key == "birth_probability") {
        cfg.birth.probability = as_num();
    } else if (key == "pD" || key == "detection_probability") {
        const double v = as_num();
        for (auto& s : cfg.sensors)
            for (auto& [c, pd] : s.detection) pd = v;
    } else if (key == "lambda" || key == "clutter_rate") {
        const double v = as_num();
        for (auto& s : cfg.sensors) s.clutter_rate = v;
    } else if (key == "R" || key == "noise_var_m2") {
        const double v = as_num();
        for (auto& s : cfg.sensors) s.noise_var = v;
    } else if (key == "L" || key == "consensus_steps") {
        cfg.network.consensus_steps = static_cast<int>(as_num());
    } else if (key == "radius" || key == "topology_radius_m") {
        cfg.network.radius = as_num();
    } else if (key == "weight_rule") {
        cfg.network.weight_rule = value;
    } else if (key == "topology") {
        cfg.network.topology = value;
    } else if (key == "trials") {
        cfg.trials = static_cast<int>(as_num());
    } else if (key == "seed") {
        cfg.seed = static_cast<std::uint64_t>(as_num());
    } else if (key == "timesteps") {
        cfg.timesteps = static_cast<int>(as_num());
    } else if (key == "Tp" || key == "prune_threshold") {
        cfg.reduction.prune_threshold = as_num();
    } else if (key == "Tm" || key == "merge_threshold") {
        cfg.reduction.merge_threshold = as_num();
    } else if (key == "Jmax" || key == "max_components") {
        cfg.reduction.max_components = static_cast<int>(as_num());
    } else if (key == "ospa_cutoff" || key == "cutoff_m") {
        cfg.ospa.cutoff = as_num();
    } else if (key == "ospa_order") {
        cfg.ospa.order = as_num();
    } else if (key == "threshold" || key == "existence_threshold") {
        cfg.extraction.threshold = as_num();
    } else if (key == "criterion") {
        cfg.extraction.criterion = value;
    } else {
        throw ConfigError(
            "unknown override key '" + key +
            "' (known: pS, pB, pD, lambda, R, L, radius, weight_rule, topology, trials, seed, "
            "timesteps, Tp, Tm, Jmax, ospa_cutoff, ospa_order, threshold, criterion)");
    }
}

/// One-line JSON rendering for CSV headers.
inline std::string config_json_line(const ScenarioConfig& cfg) {
    return config_to_json(cfg).dump();
}

}  // namespace jdtc
