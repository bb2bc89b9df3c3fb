#pragma once

#include <cmath>
#include <limits>
#include <map>
#include <optional>
#include <stdexcept>
#include <vector>

#include "jdtc/density.hpp"
#include "jdtc/gaussian.hpp"
#include "jdtc/models.hpp"
#include "jdtc/reduction.hpp"

namespace jdtc {

/// Bernoulli prediction over the augmented space.
///
/// Mixes the birth density into the surviving prior:
///   r+ = pB (1 - r) + pS r
/// with class/mode PMFs and per-slot mixtures mixed with the same birth and
/// survival coefficients; surviving components are pushed through the target
/// mode's (F, Q). Component counts grow to J_B(c,m) + sum_m' J(c,m').
///
/// Slots (and whole classes) with zero predicted probability carry the prior's
/// conditional quantities unchanged; they never influence later steps.
inline AugmentedBernoulli predict(const AugmentedBernoulli& prior, const BirthModel& birth,
                                  double survival_prob, const ClassLibrary& lib) {
    if (!(survival_prob >= 0.0 && survival_prob <= 1.0))
        throw std::invalid_argument("predict: survival probability outside [0,1]");
    if (!(birth.probability >= 0.0 && birth.probability <= 1.0))
        throw std::invalid_argument("predict: birth probability outside [0,1]");
    if (auto res = validate(prior); !res.ok)
        throw std::invalid_argument("predict: invalid prior: " + res.message);

    const double a = birth.probability * (1.0 - prior.r);  // birth mass
    const double b = survival_prob * prior.r;               // survival mass
    const double r_pred = a + b;

    AugmentedBernoulli out;
    out.r = r_pred;
    if (r_pred == 0.0) {
        out.pmf = prior.pmf;
        out.spdf = prior.spdf;
        return out;
    }

    // unnormalized predicted mass per slot:
    //   nu(c,m) = a gamma_B(c) beta_B(m|c) + b gamma(c) sum_m' pi_c(m|m') beta(m'|c);
    // gamma and beta come out of the masses so every PMF sums to 1 exactly.
    std::map<ClassId, std::map<ModeId, double>> slot_mass;
    std::map<ClassId, double> class_mass;
    double total_mass = 0.0;
    for (const auto& ci : lib.classes) {
        const ClassId c = ci.id;
        const double gamma_b = birth.pmf.class_prob(c);
        const double gamma_p = prior.pmf.class_prob(c);
        double mass_c = 0.0;
        for (ModeId m : ci.modes) {
            double survive = 0.0;
            for (ModeId mp : ci.modes)
                survive += lib.transition_prob(c, mp, m) * prior.pmf.mode_prob(c, mp);
            const double nu = a * gamma_b * birth.pmf.mode_prob(c, m) + b * gamma_p * survive;
            slot_mass[c][m] = nu;
            mass_c += nu;
        }
        class_mass[c] = mass_c;
        total_mass += mass_c;
    }

    for (const auto& ci : lib.classes) {
        const ClassId c = ci.id;
        const double gamma_b = birth.pmf.class_prob(c);
        const double gamma_p = prior.pmf.class_prob(c);
        out.pmf.class_pmf[c] = class_mass[c] / total_mass;

        auto& beta_out = out.pmf.mode_pmf[c];
        if (class_mass[c] <= 0.0) {
            // dead class: keep the prior conditional as a valid placeholder
            beta_out = prior.pmf.mode_pmf.at(c);
            for (ModeId m : ci.modes) out.spdf[{c, m}] = prior.slot(c, m);
            continue;
        }

        for (ModeId m : ci.modes) {
            const double nu = slot_mass[c][m];
            beta_out[m] = nu / class_mass[c];
            auto& slot = out.spdf[{c, m}];
            if (nu <= 0.0) continue;  // empty placeholder

            const double coeff_b = a * gamma_b * birth.pmf.mode_prob(c, m) / nu;
            for (const auto& comp : birth.slot(c, m).components)
                slot.components.emplace_back(coeff_b * comp.weight, comp.mean, comp.cov);

            const MotionMode& mode = lib.motion_mode(m);
            for (ModeId mp : ci.modes) {
                const double coeff_s = b * gamma_p * lib.transition_prob(c, mp, m) *
                                       prior.pmf.mode_prob(c, mp) / nu;
                for (const auto& comp : prior.slot(c, mp).components) {
                    auto [mean, F] = propagate_state(comp.mean, mode);
                    Eigen::MatrixXd cov = F * comp.cov * F.transpose() + mode.Q;
                    detail::repair_covariance(cov);
                    slot.components.emplace_back(coeff_s * comp.weight, std::move(mean),
                                                 std::move(cov));
                }
            }
            gm_normalize(slot);
        }
    }
    return out;
}

namespace detail {

struct SlotUpdate {
    GaussianMixture mixture;  // normalized posterior for this slot
    double log_normalizer;    // log of the per-sensor likelihood factor
};

/// EKF correction of every component against every measurement, templated on
/// the state dimension for allocation-free fixed-size algebra.
template <int N>
void ekf_detection_components(const GaussianMixture& in, const std::vector<double>& Z,
                              const SensorModel& sensor, double pd, int n,
                              GaussianMixture& out) {
    using Mat = Eigen::Matrix<double, N, N>;
    using Vec = Eigen::Matrix<double, N, 1>;
    using Row = Eigen::Matrix<double, 1, N>;

    struct Linearized {
        double z_hat;
        Row H;
        Vec K;
        Mat cov;     // updated covariance, measurement-independent
        double S;
    };
    std::vector<Linearized> lin;
    lin.reserve(in.size());
    for (const auto& comp : in.components) {
        Linearized l;
        l.z_hat = sensor.h(comp.mean);
        l.H = sensor.jacobian(comp.mean);
        const Mat P = comp.cov;
        l.S = sensor.noise_var + l.H.dot(P * l.H.transpose());
        l.K = P * l.H.transpose() / l.S;
        Mat cov = P - l.K * (l.H * P);
        cov = ((cov + cov.transpose()) * 0.5).eval();
        Eigen::LLT<Mat> llt(cov);
        if (llt.info() != Eigen::Success) cov += 1e-12 * Mat::Identity(n, n);
        l.cov = cov;
        lin.push_back(std::move(l));
    }

    for (double z : Z) {
        double kappa = clutter_intensity(sensor, z);
        if (kappa <= 0.0) {
            if (sensor.clutter_rate > 0.0)
                throw std::domain_error(
                    "update: measurement outside the clutter region (kappa = 0); "
                    "clutter model inconsistent with measurement");
            kappa = 1e-30;  // clutter-free model: pure-detection limit
        }
        for (std::size_t j = 0; j < in.size(); ++j) {
            const auto& comp = in.components[j];
            const auto& l = lin[j];
            const double q = gaussian_pdf_1d(z, l.z_hat, l.S);
            const Vec mean = Vec(comp.mean) + l.K * (z - l.z_hat);
            out.components.emplace_back(pd * comp.weight * q / kappa, mean, l.cov);
        }
    }
}

/// Single-sensor GM/EKF correction of one normalized slot mixture. The
/// posterior keeps one missed-detection copy per component plus one
/// EKF-updated component per (measurement, component) pair.
inline SlotUpdate update_slot(const GaussianMixture& in, const std::vector<double>& Z,
                              const SensorModel& sensor, double pd) {
    GaussianMixture out;
    out.components.reserve(in.size() * (Z.size() + 1));

    for (const auto& comp : in.components)
        out.components.emplace_back((1.0 - pd) * comp.weight, comp.mean, comp.cov);

    if (!Z.empty()) {
        const int n = in.dim();
        switch (n) {
            case 1: ekf_detection_components<1>(in, Z, sensor, pd, n, out); break;
            case 2: ekf_detection_components<2>(in, Z, sensor, pd, n, out); break;
            case 4: ekf_detection_components<4>(in, Z, sensor, pd, n, out); break;
            default: ekf_detection_components<Eigen::Dynamic>(in, Z, sensor, pd, n, out); break;
        }
    }

    const double lambda_total = out.total_weight();
    if (lambda_total <= 0.0)
        return {GaussianMixture{}, -std::numeric_limits<double>::infinity()};
    gm_normalize(out);
    return {std::move(out), std::log(lambda_total)};
}

}  // namespace detail

/// Posterior density plus the per-slot and per-class measurement likelihoods
/// (log domain; multi-sensor products of 20 bracketed factors underflow in
/// linear arithmetic).
struct UpdateResult {
    AugmentedBernoulli density;
    std::map<SlotKey, double> log_mode_likelihood;   // log l(m|c)
    std::map<ClassId, double> log_class_likelihood;  // log l(c)
};

/// Exact centralized multi-sensor update, realized as a composition of
/// single-sensor corrections in ascending sensor-id order. Without a reduction
/// policy the slot component counts equal [prod_i (|Z^i|+1)] * J_pred; with a
/// policy, each sensor step is followed by mixture reduction.
///
/// Sensors without an entry in `measurements` contribute an empty measurement
/// set (their missed-detection evidence still counts).
inline UpdateResult centralized_update(const AugmentedBernoulli& pred,
                                       const std::map<int, std::vector<double>>& measurements,
                                       const std::vector<SensorModel>& sensors,
                                       const ClassLibrary& lib,
                                       const std::optional<ReductionPolicy>& policy = std::nullopt) {
    static const double kNegInf = -std::numeric_limits<double>::infinity();

    for (const auto& [id, z] : measurements) {
        bool known = false;
        for (const auto& s : sensors) known = known || s.id == id;
        if (!known)
            throw std::invalid_argument("centralized_update: measurements reference unregistered sensor " +
                                        std::to_string(id));
    }
    std::vector<const SensorModel*> ordered;
    ordered.reserve(sensors.size());
    for (const auto& s : sensors) ordered.push_back(&s);
    std::sort(ordered.begin(), ordered.end(),
              [](const SensorModel* a, const SensorModel* b) { return a->id < b->id; });

    static const std::vector<double> kEmpty;

    std::map<SlotKey, GaussianMixture> current;
    std::map<SlotKey, double> log_ml;
    for (const auto& ci : lib.classes)
        for (ModeId m : ci.modes) {
            const SlotKey key{ci.id, m};
            if (pred.pmf.mode_prob(ci.id, m) > 0.0) {
                current[key] = pred.slot(ci.id, m);
                log_ml[key] = 0.0;
            } else {
                log_ml[key] = kNegInf;
            }
        }

    for (const SensorModel* sensor : ordered) {
        auto it = measurements.find(sensor->id);
        const std::vector<double>& Z = it == measurements.end() ? kEmpty : it->second;
        for (auto& [key, mixture] : current) {
            if (log_ml[key] == kNegInf) continue;
            auto su = detail::update_slot(mixture, Z, *sensor, sensor->pd(key.first));
            log_ml[key] += su.log_normalizer;
            if (su.log_normalizer == kNegInf) {
                mixture = GaussianMixture{};
                continue;
            }
            mixture = std::move(su.mixture);
            if (policy) mixture = reduce(mixture, *policy);
        }
    }

    UpdateResult result;
    result.log_mode_likelihood = log_ml;

    std::map<ClassId, double> log_lc;
    std::vector<double> class_terms;
    for (const auto& ci : lib.classes) {
        std::vector<double> mode_terms;
        for (ModeId m : ci.modes) {
            const double beta = pred.pmf.mode_prob(ci.id, m);
            if (beta > 0.0 && log_ml[{ci.id, m}] > kNegInf)
                mode_terms.push_back(std::log(beta) + log_ml[{ci.id, m}]);
        }
        const double lc = mode_terms.empty() ? kNegInf : detail::log_sum_exp(mode_terms);
        log_lc[ci.id] = lc;
        const double gamma = pred.pmf.class_prob(ci.id);
        if (gamma > 0.0 && lc > kNegInf) class_terms.push_back(std::log(gamma) + lc);
    }
    result.log_class_likelihood = log_lc;
    const double log_total = class_terms.empty() ? kNegInf : detail::log_sum_exp(class_terms);

    AugmentedBernoulli& post = result.density;
    if (log_total == kNegInf) {
        // no slot explains the data (e.g. pd = 1 everywhere with empty scans)
        post.r = 0.0;
        post.pmf = pred.pmf;
        post.spdf = pred.spdf;
        return result;
    }

    post.r = 1.0 / (1.0 + std::exp(std::log1p(-pred.r) - std::log(pred.r) - log_total));

    double gamma_sum = 0.0;
    for (const auto& ci : lib.classes) {
        const double gamma = pred.pmf.class_prob(ci.id);
        const double g =
            (gamma > 0.0 && log_lc[ci.id] > kNegInf)
                ? std::exp(std::log(gamma) + log_lc[ci.id] - log_total)
                : 0.0;
        post.pmf.class_pmf[ci.id] = g;
        gamma_sum += g;
    }
    for (auto& [c, g] : post.pmf.class_pmf) g /= gamma_sum;

    for (const auto& ci : lib.classes) {
        const ClassId c = ci.id;
        auto& beta_out = post.pmf.mode_pmf[c];
        if (post.pmf.class_pmf[c] <= 0.0 && log_lc[c] == kNegInf) {
            beta_out = pred.pmf.mode_pmf.at(c);
            for (ModeId m : ci.modes) post.spdf[{c, m}] = pred.slot(c, m);
            continue;
        }
        double beta_sum = 0.0;
        for (ModeId m : ci.modes) {
            const double beta = pred.pmf.mode_prob(c, m);
            const double bm = (beta > 0.0 && log_ml[{c, m}] > kNegInf)
                                  ? std::exp(std::log(beta) + log_ml[{c, m}] - log_lc[c])
                                  : 0.0;
            beta_out[m] = bm;
            beta_sum += bm;
        }
        for (ModeId m : ci.modes) {
            beta_out[m] /= beta_sum;
            auto& slot = post.spdf[{c, m}];
            if (beta_out[m] > 0.0) slot = std::move(current[{c, m}]);
        }
    }
    return result;
}

/// Update with a single sensor's measurement set.
inline UpdateResult single_sensor_update(const AugmentedBernoulli& pred,
                                         const std::vector<double>& Z, const SensorModel& sensor,
                                         const ClassLibrary& lib,
                                         const std::optional<ReductionPolicy>& policy = std::nullopt) {
    return centralized_update(pred, {{sensor.id, Z}}, {sensor}, lib, policy);
}

enum class ExtractionCriterion { MMSE, MAP };

/// Point estimate of the augmented state. `exists` is false below the
/// existence threshold and all other fields are then unset.
struct Estimate {
    bool exists = false;
    Eigen::VectorXd state;
    ClassId class_id = 0;
    ModeId mode_id = 0;
};

inline Estimate extract(const AugmentedBernoulli& d, double threshold = 0.5,
                        ExtractionCriterion criterion = ExtractionCriterion::MMSE) {
    Estimate est;
    if (d.r < threshold) return est;
    est.exists = true;

    double best_gamma = -1.0;
    for (const auto& [c, g] : d.pmf.class_pmf)
        if (g > best_gamma) {
            best_gamma = g;
            est.class_id = c;
        }
    double best_beta = -1.0;
    for (const auto& [m, b] : d.pmf.mode_pmf.at(est.class_id))
        if (b > best_beta) {
            best_beta = b;
            est.mode_id = m;
        }

    const GaussianMixture& slot = d.slot(est.class_id, est.mode_id);
    if (slot.empty()) throw std::domain_error("extract: selected slot has no mixture");
    if (criterion == ExtractionCriterion::MMSE) {
        est.state = gm_moments(slot).mean;
    } else {
        const GaussianComponent* heaviest = &slot.components.front();
        for (const auto& c : slot.components)
            if (c.weight > heaviest->weight) heaviest = &c;
        est.state = heaviest->mean;
    }
    return est;
}

}  // namespace jdtc
