#pragma once

#include <cmath>
#include <functional>
#include <map>
#include <random>
#include <stdexcept>
#include <utility>
#include <vector>

#include "jdtc/density.hpp"
#include "jdtc/gaussian.hpp"

namespace jdtc {

enum class MotionKind { ConstantVelocity, CoordinatedTurn };

/// State transition and process-noise matrices for one kinematic mode on the
/// planar state [xi, xi_dot, eta, eta_dot].
///
/// CV uses the white-noise-acceleration discretization
///   Q_axis = sigma * [[T^3/3, T^2/2], [T^2/2, T]]
/// and CT the turn-rate-parameterized transition with
///   Q_axis = sigma * [[3T^4/4, T^3/2], [T^3/2, T^2]].
inline std::pair<Eigen::Matrix4d, Eigen::Matrix4d> mode_matrices(MotionKind kind,
                                                                 double turn_rate,
                                                                 double sigma,
                                                                 double T) {
    if (!(T > 0.0)) throw std::invalid_argument("mode_matrices: sampling interval must be > 0");
    if (!(sigma > 0.0)) throw std::invalid_argument("mode_matrices: sigma must be > 0");

    Eigen::Matrix4d F = Eigen::Matrix4d::Zero();
    Eigen::Matrix4d Q = Eigen::Matrix4d::Zero();

    if (kind == MotionKind::ConstantVelocity) {
        F << 1, T, 0, 0,
             0, 1, 0, 0,
             0, 0, 1, T,
             0, 0, 0, 1;
        const double q11 = T * T * T / 3.0, q12 = T * T / 2.0, q22 = T;
        Q << q11, q12, 0, 0,
             q12, q22, 0, 0,
             0, 0, q11, q12,
             0, 0, q12, q22;
    } else {
        if (turn_rate == 0.0)
            throw std::invalid_argument("mode_matrices: coordinated turn requires nonzero turn rate");
        const double w = turn_rate;
        const double swt = std::sin(w * T), cwt = std::cos(w * T);
        F << 1, swt / w,       0, (cwt - 1) / w,
             0, cwt,           0, -swt,
             0, (1 - cwt) / w, 1, swt / w,
             0, swt,           0, cwt;
        const double q11 = 3.0 * T * T * T * T / 4.0, q12 = T * T * T / 2.0, q22 = T * T;
        Q << q11, q12, 0, 0,
             q12, q22, 0, 0,
             0, 0, q11, q12,
             0, 0, q12, q22;
    }
    Q *= sigma;
    return {F, Q};
}

struct MotionMode {
    ModeId id = 0;
    MotionKind kind = MotionKind::ConstantVelocity;
    double turn_rate = 0.0;  // rad/s, CT only
    double sigma = 1.0;      // process-noise intensity
    Eigen::Matrix4d F;
    Eigen::Matrix4d Q;

    static MotionMode cv(ModeId id, double sigma, double T) {
        MotionMode m;
        m.id = id;
        m.kind = MotionKind::ConstantVelocity;
        m.sigma = sigma;
        std::tie(m.F, m.Q) = mode_matrices(m.kind, 0.0, sigma, T);
        return m;
    }

    static MotionMode ct(ModeId id, double turn_rate, double sigma, double T) {
        MotionMode m;
        m.id = id;
        m.kind = MotionKind::CoordinatedTurn;
        m.turn_rate = turn_rate;
        m.sigma = sigma;
        std::tie(m.F, m.Q) = mode_matrices(m.kind, turn_rate, sigma, T);
        return m;
    }
};

/// f(x, m) = F(m) x with Jacobian F(m). The motion models are linear, so the
/// Jacobian is state-independent; the pair return keeps the EKF call sites
/// uniform with the measurement side.
inline std::pair<Eigen::VectorXd, Eigen::MatrixXd> propagate_state(const Eigen::VectorXd& x,
                                                                   const MotionMode& mode) {
    if (x.size() != 4) throw std::invalid_argument("propagate_state: expected 4-dim state");
    return {mode.F * x, mode.F};
}

/// The class set, each class's admissible modes, and the per-class Markov
/// mode-transition matrices (row = previous mode, column = next mode, both in
/// the order of `modes`).
struct ClassLibrary {
    struct ClassInfo {
        ClassId id = 0;
        std::vector<ModeId> modes;
        Eigen::MatrixXd transition;
    };

    std::vector<ClassInfo> classes;
    std::map<ModeId, MotionMode> motion;

    const ClassInfo& class_info(ClassId c) const {
        for (const auto& ci : classes)
            if (ci.id == c) return ci;
        throw std::invalid_argument("ClassLibrary: unknown class " + std::to_string(c));
    }

    const MotionMode& motion_mode(ModeId m) const {
        auto it = motion.find(m);
        if (it == motion.end())
            throw std::invalid_argument("ClassLibrary: unknown mode " + std::to_string(m));
        return it->second;
    }

    /// pi_c(next | prev)
    double transition_prob(ClassId c, ModeId prev, ModeId next) const {
        const auto& ci = class_info(c);
        int pi = -1, ni = -1;
        for (std::size_t i = 0; i < ci.modes.size(); ++i) {
            if (ci.modes[i] == prev) pi = static_cast<int>(i);
            if (ci.modes[i] == next) ni = static_cast<int>(i);
        }
        if (pi < 0 || ni < 0) return 0.0;
        return ci.transition(pi, ni);
    }

    std::map<ClassId, std::vector<ModeId>> mode_support() const {
        std::map<ClassId, std::vector<ModeId>> s;
        for (const auto& ci : classes) s[ci.id] = ci.modes;
        return s;
    }

    ValidationResult validate() const {
        for (const auto& ci : classes) {
            const auto n = static_cast<Eigen::Index>(ci.modes.size());
            if (ci.transition.rows() != n || ci.transition.cols() != n)
                return detail::violation("class " + std::to_string(ci.id) +
                                         ": transition matrix dimension != |modes|^2");
            for (Eigen::Index i = 0; i < n; ++i) {
                if (std::abs(ci.transition.row(i).sum() - 1.0) > 1e-12)
                    return detail::violation("class " + std::to_string(ci.id) + ": transition row " +
                                             std::to_string(i) + " does not sum to 1");
                if (ci.transition.row(i).minCoeff() < 0.0)
                    return detail::violation("class " + std::to_string(ci.id) + ": negative transition prob");
            }
            for (ModeId m : ci.modes)
                if (motion.find(m) == motion.end())
                    return detail::violation("class " + std::to_string(ci.id) + " references unknown mode " +
                                             std::to_string(m));
        }
        return {};
    }
};

/// Birth density {pB, gamma_B, beta_B, s_B}.
struct BirthModel {
    double probability = 0.0;  // pB
    ClassModePmf pmf;
    std::map<SlotKey, GaussianMixture> spdf;

    const GaussianMixture& slot(ClassId c, ModeId m) const {
        static const GaussianMixture empty;
        auto it = spdf.find({c, m});
        return it == spdf.end() ? empty : it->second;
    }
};

/// A scalar-measurement sensor: measurement function h with Jacobian row,
/// Gaussian noise variance, class-dependent detection probability, and a
/// Poisson clutter model uniform over [clutter_lo, clutter_hi].
struct SensorModel {
    int id = 0;
    Eigen::Vector2d position = Eigen::Vector2d::Zero();
    double noise_var = 1.0;  // R
    std::map<ClassId, double> detection_prob;
    double clutter_rate = 0.0;  // lambda, expected count per scan
    double clutter_lo = 0.0;
    double clutter_hi = 1.0;
    std::function<double(const Eigen::VectorXd&)> h;
    std::function<Eigen::RowVectorXd(const Eigen::VectorXd&)> jacobian;

    double pd(ClassId c) const {
        auto it = detection_prob.find(c);
        if (it == detection_prob.end())
            throw std::invalid_argument("SensorModel: no detection probability for class " +
                                        std::to_string(c));
        return it->second;
    }
};

/// Predicted range and measurement Jacobian for a range-only sensor at
/// `sensor_pos`. Throws when the state coincides with the sensor position.
inline std::pair<double, Eigen::RowVectorXd> range_measure(const Eigen::Vector2d& sensor_pos,
                                                           const Eigen::VectorXd& x) {
    if (x.size() != 4) throw std::invalid_argument("range_measure: expected 4-dim state");
    const double dx = x(0) - sensor_pos(0);
    const double dy = x(2) - sensor_pos(1);
    const double z = std::hypot(dx, dy);
    if (z == 0.0) throw std::domain_error("range_measure: singular geometry (target at sensor position)");
    Eigen::RowVectorXd H(4);
    H << dx / z, 0.0, dy / z, 0.0;
    return {z, H};
}

inline std::pair<double, Eigen::RowVectorXd> range_measure(const SensorModel& sensor,
                                                           const Eigen::VectorXd& x) {
    return range_measure(sensor.position, x);
}

inline SensorModel make_range_sensor(int id, const Eigen::Vector2d& position, double noise_var,
                                     std::map<ClassId, double> detection_prob, double clutter_rate,
                                     double clutter_lo, double clutter_hi) {
    if (!(noise_var > 0.0)) throw std::invalid_argument("make_range_sensor: R must be > 0");
    if (!(clutter_rate >= 0.0)) throw std::invalid_argument("make_range_sensor: lambda must be >= 0");
    if (!(clutter_hi > clutter_lo)) throw std::invalid_argument("make_range_sensor: empty clutter region");
    SensorModel s;
    s.id = id;
    s.position = position;
    s.noise_var = noise_var;
    s.detection_prob = std::move(detection_prob);
    s.clutter_rate = clutter_rate;
    s.clutter_lo = clutter_lo;
    s.clutter_hi = clutter_hi;
    s.h = [position](const Eigen::VectorXd& x) { return range_measure(position, x).first; };
    s.jacobian = [position](const Eigen::VectorXd& x) { return range_measure(position, x).second; };
    return s;
}

/// Clutter PHD kappa(z) = lambda * u(z), with u uniform over the clutter region.
inline double clutter_intensity(const SensorModel& sensor, double z) {
    if (z < sensor.clutter_lo || z > sensor.clutter_hi) return 0.0;
    return sensor.clutter_rate / (sensor.clutter_hi - sensor.clutter_lo);
}

/// Draws a Poisson(lambda) count of clutter points uniform on the region.
inline std::vector<double> sample_clutter(const SensorModel& sensor, std::mt19937_64& rng) {
    std::vector<double> out;
    if (sensor.clutter_rate <= 0.0) return out;
    const int n = std::poisson_distribution<int>(sensor.clutter_rate)(rng);
    out.reserve(n);
    std::uniform_real_distribution<double> u(sensor.clutter_lo, sensor.clutter_hi);
    for (int i = 0; i < n; ++i) out.push_back(u(rng));
    return out;
}

}  // namespace jdtc
