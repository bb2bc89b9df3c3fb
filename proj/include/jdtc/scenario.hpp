#pragma once

#include <cmath>
#include <cstdint>
#include <map>
#include <string>
#include <vector>

#include "jdtc/density.hpp"
#include "jdtc/filter.hpp"
#include "jdtc/fusion.hpp"
#include "jdtc/models.hpp"
#include "jdtc/reduction.hpp"

namespace jdtc {

/// Full experiment description. Field units are carried in the config file
/// key names; here everything is SI (m, s, rad).
struct ScenarioConfig {
    struct Mode {
        ModeId id = 0;
        MotionKind kind = MotionKind::ConstantVelocity;
        double turn_rate = 0.0;  // rad/s, CT only
        double sigma = 1.0;
    };

    struct Class {
        ClassId id = 0;
        std::vector<ModeId> modes;
        std::vector<std::vector<double>> transition;  // row = previous mode
    };

    struct Sensor {
        int id = 0;
        double x = 0.0, y = 0.0;
        double noise_var = 25.0;
        std::map<ClassId, double> detection;  // per class
        double clutter_rate = 5.0;
        double clutter_lo = 0.0;
        double clutter_hi = 1.0;
    };

    struct Birth {
        double probability = 0.2;
        std::map<ClassId, double> class_pmf;
        std::map<ClassId, std::map<ModeId, double>> mode_pmf;
        std::vector<double> mean;      // [xi, xi_dot, eta, eta_dot]
        std::vector<double> cov_diag;  // diagonal of P_B
    };

    struct Network {
        std::string topology = "geometric";  // geometric | complete
        double radius = 1500.0;
        int consensus_steps = 3;
        std::string weight_rule = "metropolis";  // metropolis | uniform
    };

    struct ModeSegment {
        int from_step = 0;
        int to_step = 0;
        ModeId mode_id = 0;
    };

    struct Truth {
        std::vector<double> initial_state;
        ClassId class_id = 0;
        int appear_step = 1;
        int disappear_step = 0;
        std::vector<ModeSegment> mode_schedule;
        bool noisy = false;  // reference trajectory is noise-free by default
    };

    struct Ospa {
        double order = 1.0;
        double cutoff = 150.0;
    };

    struct Extraction {
        double threshold = 0.5;
        std::string criterion = "mmse";  // mmse | map
    };

    int timesteps = 100;
    double sampling_interval = 1.0;
    double survival_probability = 0.98;
    std::vector<Mode> modes;
    std::vector<Class> classes;
    Birth birth;
    std::vector<Sensor> sensors;
    Network network;
    ReductionPolicy reduction;
    Ospa ospa;
    int trials = 100;
    std::uint64_t seed = 2024;
    Truth truth;
    Extraction extraction;
};

inline ClassLibrary build_library(const ScenarioConfig& cfg) {
    ClassLibrary lib;
    for (const auto& mc : cfg.modes) {
        lib.motion[mc.id] = mc.kind == MotionKind::ConstantVelocity
                                ? MotionMode::cv(mc.id, mc.sigma, cfg.sampling_interval)
                                : MotionMode::ct(mc.id, mc.turn_rate, mc.sigma,
                                                 cfg.sampling_interval);
    }
    for (const auto& cc : cfg.classes) {
        ClassLibrary::ClassInfo ci;
        ci.id = cc.id;
        ci.modes = cc.modes;
        const auto n = static_cast<Eigen::Index>(cc.modes.size());
        ci.transition.resize(n, n);
        for (Eigen::Index i = 0; i < n; ++i)
            for (Eigen::Index j = 0; j < n; ++j) ci.transition(i, j) = cc.transition[i][j];
        lib.classes.push_back(std::move(ci));
    }
    return lib;
}

inline BirthModel build_birth(const ScenarioConfig& cfg) {
    BirthModel birth;
    birth.probability = cfg.birth.probability;
    birth.pmf.class_pmf = cfg.birth.class_pmf;
    birth.pmf.mode_pmf = cfg.birth.mode_pmf;

    const auto n = static_cast<Eigen::Index>(cfg.birth.mean.size());
    Eigen::VectorXd mean(n);
    for (Eigen::Index i = 0; i < n; ++i) mean(i) = cfg.birth.mean[i];
    Eigen::MatrixXd cov = Eigen::MatrixXd::Zero(n, n);
    for (Eigen::Index i = 0; i < n; ++i) cov(i, i) = cfg.birth.cov_diag[i];

    for (const auto& cc : cfg.classes)
        for (ModeId m : cc.modes)
            if (birth.pmf.mode_prob(cc.id, m) > 0.0)
                birth.spdf[{cc.id, m}] = GaussianMixture{{GaussianComponent(1.0, mean, cov)}};
    return birth;
}

inline std::vector<SensorModel> build_sensors(const ScenarioConfig& cfg) {
    std::vector<SensorModel> out;
    out.reserve(cfg.sensors.size());
    for (const auto& sc : cfg.sensors)
        out.push_back(make_range_sensor(sc.id, {sc.x, sc.y}, sc.noise_var, sc.detection,
                                        sc.clutter_rate, sc.clutter_lo, sc.clutter_hi));
    return out;
}

/// Geometric graph over the sensor positions (edge iff distance < radius) or
/// the complete graph, with the configured consensus weight rule.
inline NetworkGraph build_network(const ScenarioConfig& cfg) {
    NetworkGraph g;
    for (const auto& s : cfg.sensors) g.add_node(s.id);
    if (cfg.network.topology == "complete") {
        for (std::size_t i = 0; i < cfg.sensors.size(); ++i)
            for (std::size_t j = i + 1; j < cfg.sensors.size(); ++j)
                g.add_edge(cfg.sensors[i].id, cfg.sensors[j].id);
    } else if (cfg.network.topology == "geometric") {
        for (std::size_t i = 0; i < cfg.sensors.size(); ++i)
            for (std::size_t j = i + 1; j < cfg.sensors.size(); ++j) {
                const double dx = cfg.sensors[i].x - cfg.sensors[j].x;
                const double dy = cfg.sensors[i].y - cfg.sensors[j].y;
                if (std::hypot(dx, dy) < cfg.network.radius)
                    g.add_edge(cfg.sensors[i].id, cfg.sensors[j].id);
            }
    } else {
        throw std::invalid_argument("network.topology must be 'geometric' or 'complete'");
    }
    return cfg.network.weight_rule == "uniform" ? uniform_weights(std::move(g))
                                                : metropolis_weights(std::move(g));
}

inline ExtractionCriterion build_criterion(const ScenarioConfig& cfg) {
    if (cfg.extraction.criterion == "map") return ExtractionCriterion::MAP;
    if (cfg.extraction.criterion == "mmse") return ExtractionCriterion::MMSE;
    throw std::invalid_argument("extraction.criterion must be 'mmse' or 'map'");
}

/// Initial filter density: no target yet, birth PMFs and mixtures as the
/// (irrelevant, but valid) conditional content.
inline AugmentedBernoulli initial_density(const BirthModel& birth) {
    AugmentedBernoulli d;
    d.r = 0.0;
    d.pmf = birth.pmf;
    d.spdf = birth.spdf;
    return d;
}

/// Consistency checks across the whole configuration; returns the first
/// violation found, mirroring validate() for densities.
inline ValidationResult validate_config(const ScenarioConfig& cfg) {
    if (cfg.timesteps < 1) return detail::violation("timesteps must be >= 1");
    if (!(cfg.sampling_interval > 0.0)) return detail::violation("sampling_interval_s must be > 0");
    if (!(cfg.survival_probability >= 0.0 && cfg.survival_probability <= 1.0))
        return detail::violation("survival_probability outside [0,1]");
    if (!(cfg.birth.probability >= 0.0 && cfg.birth.probability <= 1.0))
        return detail::violation("birth.probability outside [0,1]");
    if (cfg.trials < 1) return detail::violation("trials must be >= 1");

    std::map<ModeId, const ScenarioConfig::Mode*> modes;
    for (const auto& m : cfg.modes) {
        if (modes.count(m.id)) return detail::violation("duplicate mode id " + std::to_string(m.id));
        if (!(m.sigma > 0.0))
            return detail::violation("mode " + std::to_string(m.id) + ": sigma_m_s2 must be > 0");
        if (m.kind == MotionKind::CoordinatedTurn && m.turn_rate == 0.0)
            return detail::violation("mode " + std::to_string(m.id) +
                                     ": coordinated turn requires nonzero turn_rate_rad_s");
        modes[m.id] = &m;
    }
    if (cfg.classes.empty()) return detail::violation("no classes defined");

    std::map<ClassId, const ScenarioConfig::Class*> classes;
    for (const auto& c : cfg.classes) {
        if (classes.count(c.id)) return detail::violation("duplicate class id " + std::to_string(c.id));
        if (c.modes.empty()) return detail::violation("class " + std::to_string(c.id) + " has no modes");
        for (ModeId m : c.modes)
            if (!modes.count(m))
                return detail::violation("class " + std::to_string(c.id) + " references unknown mode " +
                                         std::to_string(m));
        if (c.transition.size() != c.modes.size())
            return detail::violation("class " + std::to_string(c.id) + ": transition rows != |modes|");
        for (const auto& row : c.transition) {
            if (row.size() != c.modes.size())
                return detail::violation("class " + std::to_string(c.id) + ": transition cols != |modes|");
            double s = 0.0;
            for (double p : row) {
                if (p < 0.0) return detail::violation("class " + std::to_string(c.id) +
                                                      ": negative transition probability");
                s += p;
            }
            if (std::abs(s - 1.0) > 1e-12)
                return detail::violation("class " + std::to_string(c.id) + ": transition row sum = " +
                                         std::to_string(s));
        }
        classes[c.id] = &c;
    }

    double gsum = 0.0;
    for (const auto& [c, g] : cfg.birth.class_pmf) {
        if (!classes.count(c))
            return detail::violation("birth.class_pmf references unknown class " + std::to_string(c));
        if (g < 0.0 || g > 1.0) return detail::violation("birth.class_pmf entry outside [0,1]");
        gsum += g;
    }
    if (std::abs(gsum - 1.0) > 1e-12) {
        std::ostringstream os;
        os << "birth.class_pmf sum = " << gsum;
        return detail::violation(os.str());
    }
    for (const auto& c : cfg.classes) {
        auto it = cfg.birth.mode_pmf.find(c.id);
        if (it == cfg.birth.mode_pmf.end())
            return detail::violation("birth.mode_pmf missing class " + std::to_string(c.id));
        double bsum = 0.0;
        for (ModeId m : c.modes) {
            auto jt = it->second.find(m);
            if (jt == it->second.end())
                return detail::violation("birth.mode_pmf class " + std::to_string(c.id) +
                                         " missing mode " + std::to_string(m));
            bsum += jt->second;
        }
        if (std::abs(bsum - 1.0) > 1e-12)
            return detail::violation("birth.mode_pmf sum for class " + std::to_string(c.id) + " != 1");
    }
    if (cfg.birth.mean.size() != 4 || cfg.birth.cov_diag.size() != 4)
        return detail::violation("birth mean/cov must be 4-dim");
    for (double v : cfg.birth.cov_diag)
        if (!(v > 0.0)) return detail::violation("birth.cov_diag entries must be > 0");

    if (cfg.sensors.empty()) return detail::violation("no sensors defined");
    std::map<int, bool> sensor_ids;
    for (const auto& s : cfg.sensors) {
        if (sensor_ids.count(s.id)) return detail::violation("duplicate sensor id " + std::to_string(s.id));
        sensor_ids[s.id] = true;
        if (!(s.noise_var > 0.0))
            return detail::violation("sensor " + std::to_string(s.id) + ": noise_var_m2 must be > 0");
        if (!(s.clutter_rate >= 0.0))
            return detail::violation("sensor " + std::to_string(s.id) + ": clutter_rate must be >= 0");
        if (!(s.clutter_hi > s.clutter_lo))
            return detail::violation("sensor " + std::to_string(s.id) + ": empty clutter region");
        for (const auto& c : cfg.classes) {
            auto it = s.detection.find(c.id);
            if (it == s.detection.end())
                return detail::violation("sensor " + std::to_string(s.id) +
                                         ": missing detection probability for class " +
                                         std::to_string(c.id));
            if (it->second < 0.0 || it->second > 1.0)
                return detail::violation("sensor " + std::to_string(s.id) +
                                         ": detection probability outside [0,1]");
        }
    }

    if (cfg.network.consensus_steps < 1) return detail::violation("network.consensus_steps must be >= 1");
    if (cfg.network.topology != "geometric" && cfg.network.topology != "complete")
        return detail::violation("network.topology must be 'geometric' or 'complete'");
    if (cfg.network.weight_rule != "metropolis" && cfg.network.weight_rule != "uniform")
        return detail::violation("network.weight_rule must be 'metropolis' or 'uniform'");

    if (!(cfg.reduction.prune_threshold >= 0.0)) return detail::violation("reduction.prune_threshold < 0");
    if (!(cfg.reduction.merge_threshold > 0.0)) return detail::violation("reduction.merge_threshold <= 0");
    if (cfg.reduction.max_components < 1) return detail::violation("reduction.max_components < 1");
    if (!(cfg.ospa.cutoff > 0.0)) return detail::violation("ospa.cutoff_m must be > 0");
    if (!(cfg.ospa.order >= 1.0)) return detail::violation("ospa.order must be >= 1");
    if (!(cfg.extraction.threshold >= 0.0 && cfg.extraction.threshold <= 1.0))
        return detail::violation("extraction.threshold outside [0,1]");
    if (cfg.extraction.criterion != "mmse" && cfg.extraction.criterion != "map")
        return detail::violation("extraction.criterion must be 'mmse' or 'map'");

    // ground truth
    const auto& t = cfg.truth;
    if (!classes.count(t.class_id))
        return detail::violation("truth.class_id references unknown class " + std::to_string(t.class_id));
    if (t.appear_step < 1 || t.disappear_step > cfg.timesteps || t.appear_step > t.disappear_step)
        return detail::violation("truth appear/disappear steps outside [1, timesteps]");
    if (t.initial_state.size() != 4) return detail::violation("truth.initial_state must be 4-dim");
    const auto& cls = *classes.at(t.class_id);
    int covered = t.appear_step;
    for (const auto& seg : t.mode_schedule) {
        if (seg.from_step != covered)
            return detail::violation("truth.mode_schedule segments must tile [appear, disappear]");
        if (seg.to_step < seg.from_step) return detail::violation("truth.mode_schedule segment reversed");
        bool in_class = false;
        for (ModeId m : cls.modes) in_class = in_class || m == seg.mode_id;
        if (!in_class)
            return detail::violation("truth.mode_schedule mode " + std::to_string(seg.mode_id) +
                                     " outside the class's mode set");
        covered = seg.to_step + 1;
    }
    if (covered != t.disappear_step + 1)
        return detail::violation("truth.mode_schedule does not cover [appear, disappear]");
    return {};
}

/// The built-in reference scenario: 5 modes, 3 classes, 20 range sensors on a
/// 5x4 grid over the [0, 5000]^2 m surveillance quadrant, Poisson clutter
/// uniform on [0, 5000*sqrt(2)] m of range, survival 0.98, birth 0.2, L = 3
/// consensus steps, GM reduction (1e-15, 20, 6), OSPA order 1 cutoff 150 m.
inline ScenarioConfig paper_reference_config() {
    ScenarioConfig cfg;
    cfg.timesteps = 100;
    cfg.sampling_interval = 1.0;
    cfg.survival_probability = 0.98;
    cfg.trials = 100;
    cfg.seed = 2024;

    cfg.modes = {
        {1, MotionKind::ConstantVelocity, 0.0, 1.0},
        {2, MotionKind::CoordinatedTurn, -0.10, 1.4},
        {3, MotionKind::CoordinatedTurn, 0.15, 1.4},
        {4, MotionKind::CoordinatedTurn, 1.0, 1.4},
        {5, MotionKind::CoordinatedTurn, -1.0, 1.4},
    };
    const std::vector<std::vector<double>> pi3 = {
        {0.8, 0.1, 0.1}, {0.1, 0.8, 0.1}, {0.1, 0.1, 0.8}};
    cfg.classes = {
        {1, {1}, {{1.0}}},
        {2, {1, 2, 3}, pi3},
        {3, {1, 4, 5}, pi3},
    };

    cfg.birth.probability = 0.2;
    for (ClassId c : {1, 2, 3}) cfg.birth.class_pmf[c] = 1.0 / 3.0;
    cfg.birth.mode_pmf[1] = {{1, 1.0}};
    cfg.birth.mode_pmf[2] = {{1, 1.0 / 3.0}, {2, 1.0 / 3.0}, {3, 1.0 / 3.0}};
    cfg.birth.mode_pmf[3] = {{1, 1.0 / 3.0}, {4, 1.0 / 3.0}, {5, 1.0 / 3.0}};
    cfg.birth.mean = {4780.0, -8.0, 3590.0, -100.0};
    cfg.birth.cov_diag = {100.0, 100.0, 100.0, 100.0};

    // 20 range sensors on a 5x4 grid; every sensor-target distance inside the
    // [0, 5000]^2 quadrant stays within the clutter range extension 5000*sqrt(2).
    const double range_max = 5000.0 * std::numbers::sqrt2;
    int id = 1;
    for (int row = 0; row < 4; ++row) {
        for (int col = 0; col < 5; ++col) {
            ScenarioConfig::Sensor s;
            s.id = id++;
            s.x = (col + 0.5) * 1000.0;
            s.y = (row + 0.5) * 1250.0;
            s.noise_var = 25.0;
            for (ClassId c : {1, 2, 3}) s.detection[c] = 0.95;
            s.clutter_rate = 5.0;
            s.clutter_lo = 0.0;
            s.clutter_hi = range_max;
            cfg.sensors.push_back(std::move(s));
        }
    }

    cfg.network.topology = "geometric";
    cfg.network.radius = 1500.0;
    cfg.network.consensus_steps = 3;
    cfg.network.weight_rule = "metropolis";

    cfg.reduction.prune_threshold = 1e-15;
    cfg.reduction.merge_threshold = 20.0;
    cfg.reduction.max_components = 6;

    cfg.ospa.order = 1.0;
    cfg.ospa.cutoff = 150.0;

    cfg.truth.initial_state = {4786.0, -8.3, 3584.0, -100.9};
    cfg.truth.class_id = 2;
    cfg.truth.appear_step = 6;
    cfg.truth.disappear_step = 90;
    cfg.truth.mode_schedule = {
        {6, 25, 1},
        {26, 50, 2},
        {51, 60, 1},
        {61, 90, 3},
    };

    cfg.extraction.threshold = 0.5;
    cfg.extraction.criterion = "mmse";
    return cfg;
}

}  // namespace jdtc
