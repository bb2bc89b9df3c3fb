#pragma once

#include <algorithm>
#include <atomic>
#include <cmath>
#include <map>
#include <optional>
#include <random>
#include <thread>
#include <vector>

#include "jdtc/filter.hpp"
#include "jdtc/fusion.hpp"
#include "jdtc/models.hpp"
#include "jdtc/scenario.hpp"

namespace jdtc {

/// Ground truth at one timestep.
struct TruthRecord {
    bool exists = false;
    Eigen::Vector4d state = Eigen::Vector4d::Zero();
    ClassId class_id = 0;
    ModeId mode_id = 0;
};

/// Per-timestep performance indicators; aggregated over Monte-Carlo trials as
/// per-field means.
struct MetricsFrame {
    int step = 0;
    double ospa = 0.0;
    double existence = 0.0;
    std::map<ClassId, double> class_prob;
    std::map<ClassId, std::map<ModeId, double>> mode_prob;
    double est_class = 0.0;  // 0 when no estimate is produced
    double est_mode = 0.0;
};

/// Deterministic reference trajectory per the configured mode schedule. The
/// rng is consumed only when truth.noisy is set, in which case process noise
/// drawn from the active mode's Q perturbs each transition.
inline std::vector<TruthRecord> generate_truth(const ScenarioConfig& cfg, std::mt19937_64& rng) {
    if (auto res = validate_config(cfg); !res.ok)
        throw std::invalid_argument("generate_truth: " + res.message);
    const ClassLibrary lib = build_library(cfg);
    const auto& t = cfg.truth;

    const auto mode_at = [&](int k) -> ModeId {
        for (const auto& seg : t.mode_schedule)
            if (k >= seg.from_step && k <= seg.to_step) return seg.mode_id;
        throw std::logic_error("generate_truth: step not covered by mode schedule");
    };

    std::vector<TruthRecord> out(cfg.timesteps);
    Eigen::Vector4d x;
    for (int k = 1; k <= cfg.timesteps; ++k) {
        TruthRecord& rec = out[k - 1];
        if (k < t.appear_step || k > t.disappear_step) continue;
        rec.exists = true;
        rec.class_id = t.class_id;
        rec.mode_id = mode_at(k);
        if (k == t.appear_step) {
            for (int i = 0; i < 4; ++i) x(i) = t.initial_state[i];
        } else {
            const MotionMode& mode = lib.motion_mode(rec.mode_id);
            x = mode.F * x;
            if (t.noisy) {
                Eigen::LLT<Eigen::MatrixXd> llt(mode.Q);
                Eigen::Vector4d n;
                for (int i = 0; i < 4; ++i) n(i) = std::normal_distribution<double>(0.0, 1.0)(rng);
                x += llt.matrixL() * n;
            }
        }
        rec.state = x;
    }
    return out;
}

/// Bernoulli detection of the (noisy) target range plus Poisson clutter, per
/// sensor per timestep. Sensors are visited in ascending id order so the
/// random stream — detection coin, measurement noise, clutter — is fixed.
inline std::vector<std::map<int, std::vector<double>>> generate_measurements(
    const std::vector<TruthRecord>& truth, const std::vector<SensorModel>& sensors,
    std::mt19937_64& rng) {
    std::vector<const SensorModel*> ordered;
    for (const auto& s : sensors) ordered.push_back(&s);
    std::sort(ordered.begin(), ordered.end(),
              [](const SensorModel* a, const SensorModel* b) { return a->id < b->id; });

    std::vector<std::map<int, std::vector<double>>> out(truth.size());
    for (std::size_t k = 0; k < truth.size(); ++k) {
        for (const SensorModel* s : ordered) {
            std::vector<double> z;
            if (truth[k].exists) {
                const double pd = s->pd(truth[k].class_id);
                if (std::uniform_real_distribution<double>(0.0, 1.0)(rng) < pd) {
                    const double range = s->h(truth[k].state);
                    z.push_back(range + std::normal_distribution<double>(
                                            0.0, std::sqrt(s->noise_var))(rng));
                }
            }
            for (double c : sample_clutter(*s, rng)) z.push_back(c);
            out[k][s->id] = std::move(z);
        }
    }
    return out;
}

/// Single-target OSPA on planar positions: 0 when both sets are empty, the
/// cutoff on cardinality mismatch, otherwise the cutoff-saturated distance.
inline double ospa(const std::optional<Eigen::Vector2d>& estimate,
                   const std::optional<Eigen::Vector2d>& truth, double order = 1.0,
                   double cutoff = 150.0) {
    if (!estimate && !truth) return 0.0;
    if (!estimate || !truth) return cutoff;
    const double d = std::min(cutoff, (*estimate - *truth).norm());
    return std::pow(std::pow(d, order), 1.0 / order);
}

namespace detail {

inline std::optional<Eigen::Vector2d> position_of(const TruthRecord& rec) {
    if (!rec.exists) return std::nullopt;
    return Eigen::Vector2d(rec.state(0), rec.state(2));
}

inline std::optional<Eigen::Vector2d> position_of(const Estimate& est) {
    if (!est.exists) return std::nullopt;
    return Eigen::Vector2d(est.state(0), est.state(2));
}

inline MetricsFrame make_frame(int step, const AugmentedBernoulli& density, const Estimate& est,
                               const TruthRecord& truth, const ScenarioConfig& cfg) {
    MetricsFrame f;
    f.step = step;
    f.ospa = ospa(position_of(est), position_of(truth), cfg.ospa.order, cfg.ospa.cutoff);
    f.existence = density.r;
    f.class_prob = density.pmf.class_pmf;
    f.mode_prob = density.pmf.mode_pmf;
    f.est_class = est.exists ? static_cast<double>(est.class_id) : 0.0;
    f.est_mode = est.exists ? static_cast<double>(est.mode_id) : 0.0;
    return f;
}

}  // namespace detail

/// One C-JDTC trial: prediction, exact multi-sensor update over all sensors,
/// extraction. Deterministic given the rng state.
inline std::vector<MetricsFrame> run_centralized(const ScenarioConfig& cfg, std::mt19937_64& rng) {
    if (auto res = validate_config(cfg); !res.ok)
        throw std::invalid_argument("run_centralized: " + res.message);
    const ClassLibrary lib = build_library(cfg);
    const BirthModel birth = build_birth(cfg);
    const std::vector<SensorModel> sensors = build_sensors(cfg);
    const ExtractionCriterion criterion = build_criterion(cfg);

    const auto truth = generate_truth(cfg, rng);
    const auto measurements = generate_measurements(truth, sensors, rng);

    std::vector<MetricsFrame> frames;
    frames.reserve(cfg.timesteps);
    AugmentedBernoulli density = initial_density(birth);
    for (int k = 1; k <= cfg.timesteps; ++k) {
        const auto pred = predict(density, birth, cfg.survival_probability, lib);
        density = centralized_update(pred, measurements[k - 1], sensors, lib, cfg.reduction).density;
        const Estimate est = extract(density, cfg.extraction.threshold, criterion);
        frames.push_back(detail::make_frame(k, density, est, truth[k - 1], cfg));
    }
    return frames;
}

struct DistributedRun {
    std::map<int, std::vector<MetricsFrame>> per_node;
    std::vector<MetricsFrame> network_average;
};

/// One D-JDTC trial: per node, prediction and local single-sensor update,
/// then L consensus iterations over the communication graph, then extraction.
inline DistributedRun run_distributed(const ScenarioConfig& cfg, std::mt19937_64& rng,
                                      ConsensusStats* stats = nullptr) {
    if (auto res = validate_config(cfg); !res.ok)
        throw std::invalid_argument("run_distributed: " + res.message);
    const ClassLibrary lib = build_library(cfg);
    const BirthModel birth = build_birth(cfg);
    const std::vector<SensorModel> sensors = build_sensors(cfg);
    const NetworkGraph graph = build_network(cfg);
    const ExtractionCriterion criterion = build_criterion(cfg);

    const auto truth = generate_truth(cfg, rng);
    const auto measurements = generate_measurements(truth, sensors, rng);

    DistributedRun run;
    std::map<int, AugmentedBernoulli> states;
    for (const auto& s : sensors) {
        states[s.id] = initial_density(birth);
        run.per_node[s.id].reserve(cfg.timesteps);
    }

    for (int k = 1; k <= cfg.timesteps; ++k) {
        for (const auto& s : sensors) {
            const auto pred = predict(states[s.id], birth, cfg.survival_probability, lib);
            states[s.id] =
                single_sensor_update(pred, measurements[k - 1].at(s.id), s, lib, cfg.reduction)
                    .density;
        }
        states = consensus_round(states, graph, cfg.network.consensus_steps, lib, cfg.reduction,
                                 stats);

        MetricsFrame avg;
        avg.step = k;
        for (const auto& s : sensors) {
            const Estimate est = extract(states[s.id], cfg.extraction.threshold, criterion);
            MetricsFrame f = detail::make_frame(k, states[s.id], est, truth[k - 1], cfg);
            run.per_node[s.id].push_back(f);

            avg.ospa += f.ospa;
            avg.existence += f.existence;
            for (const auto& [c, g] : f.class_prob) avg.class_prob[c] += g;
            for (const auto& [c, betas] : f.mode_prob)
                for (const auto& [m, b] : betas) avg.mode_prob[c][m] += b;
            avg.est_class += f.est_class;
            avg.est_mode += f.est_mode;
        }
        const double n = static_cast<double>(sensors.size());
        avg.ospa /= n;
        avg.existence /= n;
        for (auto& [c, g] : avg.class_prob) g /= n;
        for (auto& [c, betas] : avg.mode_prob)
            for (auto& [m, b] : betas) b /= n;
        avg.est_class /= n;
        avg.est_mode /= n;
        run.network_average.push_back(std::move(avg));
    }
    return run;
}

namespace detail {

inline void accumulate(std::vector<MetricsFrame>& acc, const std::vector<MetricsFrame>& frames) {
    if (acc.empty()) {
        acc = frames;
        return;
    }
    for (std::size_t i = 0; i < frames.size(); ++i) {
        acc[i].ospa += frames[i].ospa;
        acc[i].existence += frames[i].existence;
        for (const auto& [c, g] : frames[i].class_prob) acc[i].class_prob[c] += g;
        for (const auto& [c, betas] : frames[i].mode_prob)
            for (const auto& [m, b] : betas) acc[i].mode_prob[c][m] += b;
        acc[i].est_class += frames[i].est_class;
        acc[i].est_mode += frames[i].est_mode;
    }
}

inline void divide(std::vector<MetricsFrame>& acc, double n) {
    for (auto& f : acc) {
        f.ospa /= n;
        f.existence /= n;
        for (auto& [c, g] : f.class_prob) g /= n;
        for (auto& [c, betas] : f.mode_prob)
            for (auto& [m, b] : betas) b /= n;
        f.est_class /= n;
        f.est_mode /= n;
    }
}

}  // namespace detail

enum class RunMode { Centralized, Distributed };

struct MonteCarloResult {
    /// Trial-averaged frames: the centralized run's metrics, or the
    /// network-average metrics of the distributed run.
    std::vector<MetricsFrame> frames;
    /// Distributed only: trial-averaged frames per node.
    std::map<int, std::vector<MetricsFrame>> per_node;
    /// Fraction of trials whose estimated class at the last existence step
    /// matches the true class (distributed: averaged over nodes).
    double class_decision_rate = 0.0;
};

/// Averages `trials` independent runs; trial t uses seed base_seed + t, so
/// disjoint seed ranges recombine exactly. Trials run on a small thread pool
/// and are reduced in trial order, keeping results independent of scheduling.
inline MonteCarloResult monte_carlo(const ScenarioConfig& cfg, RunMode mode, int trials,
                                    std::uint64_t base_seed) {
    if (trials < 1) throw std::invalid_argument("monte_carlo: trials must be >= 1");
    if (auto res = validate_config(cfg); !res.ok)
        throw std::invalid_argument("monte_carlo: " + res.message);

    std::vector<std::vector<MetricsFrame>> trial_frames(trials);
    std::vector<std::map<int, std::vector<MetricsFrame>>> trial_nodes(trials);
    std::vector<double> trial_decision(trials, 0.0);

    const auto run_trial = [&](int t) {
        std::mt19937_64 rng(base_seed + static_cast<std::uint64_t>(t));
        if (mode == RunMode::Centralized) {
            trial_frames[t] = run_centralized(cfg, rng);
            const auto& f = trial_frames[t][cfg.truth.disappear_step - 1];
            trial_decision[t] =
                f.est_class == static_cast<double>(cfg.truth.class_id) ? 1.0 : 0.0;
        } else {
            auto run = run_distributed(cfg, rng);
            trial_frames[t] = std::move(run.network_average);
            double correct = 0.0;
            for (const auto& [id, frames] : run.per_node)
                if (frames[cfg.truth.disappear_step - 1].est_class ==
                    static_cast<double>(cfg.truth.class_id))
                    correct += 1.0;
            trial_decision[t] = correct / static_cast<double>(run.per_node.size());
            trial_nodes[t] = std::move(run.per_node);
        }
    };

    const unsigned hw = std::max(1u, std::thread::hardware_concurrency());
    const unsigned workers = std::min<unsigned>(hw, static_cast<unsigned>(trials));
    if (workers <= 1) {
        for (int t = 0; t < trials; ++t) run_trial(t);
    } else {
        std::vector<std::thread> pool;
        std::atomic<int> next{0};
        for (unsigned w = 0; w < workers; ++w)
            pool.emplace_back([&]() {
                for (int t = next.fetch_add(1); t < trials; t = next.fetch_add(1)) run_trial(t);
            });
        for (auto& th : pool) th.join();
    }

    MonteCarloResult result;
    for (int t = 0; t < trials; ++t) {
        detail::accumulate(result.frames, trial_frames[t]);
        for (const auto& [id, frames] : trial_nodes[t]) detail::accumulate(result.per_node[id], frames);
        result.class_decision_rate += trial_decision[t];
    }
    detail::divide(result.frames, trials);
    for (auto& [id, frames] : result.per_node) detail::divide(frames, trials);
    result.class_decision_rate /= trials;
    return result;
}

/// Mean OSPA over the truth's existence window, the headline summary metric.
inline double mean_ospa_over_existence(const std::vector<MetricsFrame>& frames,
                                       const ScenarioConfig& cfg) {
    double sum = 0.0;
    int count = 0;
    for (const auto& f : frames)
        if (f.step >= cfg.truth.appear_step && f.step <= cfg.truth.disappear_step) {
            sum += f.ospa;
            ++count;
        }
    return count == 0 ? 0.0 : sum / count;
}

}  // namespace jdtc
