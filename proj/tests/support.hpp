#pragma once

// Shared helpers for the test suites: deterministic random generators for
// valid densities, small class libraries, quadrature, and closed-form Kalman
// oracles. Everything here is independent of the implementation paths it is
// used to check.

#include <cmath>
#include <map>
#include <random>
#include <vector>

#include "jdtc/density.hpp"
#include "jdtc/models.hpp"
#include "jdtc/scenario.hpp"

namespace testsup {

using jdtc::AugmentedBernoulli;
using jdtc::ClassId;
using jdtc::ClassLibrary;
using jdtc::GaussianComponent;
using jdtc::GaussianMixture;
using jdtc::ModeId;

inline Eigen::VectorXd vecd(std::initializer_list<double> vals) {
    Eigen::VectorXd v(static_cast<Eigen::Index>(vals.size()));
    Eigen::Index i = 0;
    for (double x : vals) v(i++) = x;
    return v;
}

inline Eigen::MatrixXd matd1(double p) {
    Eigen::MatrixXd m(1, 1);
    m << p;
    return m;
}

inline Eigen::MatrixXd random_spd(std::mt19937_64& rng, int n, double scale = 1.0) {
    std::normal_distribution<double> g(0.0, 1.0);
    Eigen::MatrixXd A(n, n);
    for (int i = 0; i < n; ++i)
        for (int j = 0; j < n; ++j) A(i, j) = g(rng);
    Eigen::MatrixXd P = scale * (A * A.transpose()) + 0.2 * scale * Eigen::MatrixXd::Identity(n, n);
    return ((P + P.transpose()) * 0.5).eval();
}

inline std::vector<double> random_pmf(std::mt19937_64& rng, std::size_t n) {
    std::uniform_real_distribution<double> u(0.1, 1.0);
    std::vector<double> p(n);
    double s = 0.0;
    for (auto& x : p) {
        x = u(rng);
        s += x;
    }
    for (auto& x : p) x /= s;
    // force exact normalization so inputs satisfy the 1e-12 invariant
    double acc = 0.0;
    for (std::size_t i = 0; i + 1 < n; ++i) acc += p[i];
    p[n - 1] = 1.0 - acc;
    return p;
}

inline GaussianMixture random_gm(std::mt19937_64& rng, int dim, int max_comps,
                                 double mean_range = 5.0) {
    std::uniform_int_distribution<int> nc(1, max_comps);
    std::uniform_real_distribution<double> u(-mean_range, mean_range);
    const int n = nc(rng);
    GaussianMixture gm;
    const auto weights = random_pmf(rng, n);
    for (int i = 0; i < n; ++i) {
        Eigen::VectorXd mu(dim);
        for (int d = 0; d < dim; ++d) mu(d) = u(rng);
        gm.components.emplace_back(weights[i], mu, random_spd(rng, dim));
    }
    return gm;
}

/// Library with one class owning one CV mode; the simplest valid setting.
inline ClassLibrary single_class_library() {
    ClassLibrary lib;
    ClassLibrary::ClassInfo ci;
    ci.id = 1;
    ci.modes = {1};
    ci.transition = Eigen::MatrixXd::Ones(1, 1);
    lib.classes.push_back(ci);
    lib.motion[1] = jdtc::MotionMode::cv(1, 1.0, 1.0);
    return lib;
}

inline ClassLibrary reference_library() { return jdtc::build_library(jdtc::paper_reference_config()); }

/// Valid augmented Bernoulli density over `lib` with random PMFs and random
/// slot mixtures of the given state dimension.
inline AugmentedBernoulli random_density(std::mt19937_64& rng, const ClassLibrary& lib, int dim,
                                         int max_comps = 3) {
    AugmentedBernoulli d;
    std::uniform_real_distribution<double> ur(0.02, 0.98);
    d.r = ur(rng);
    const auto gamma = random_pmf(rng, lib.classes.size());
    std::size_t ci = 0;
    for (const auto& cls : lib.classes) {
        d.pmf.class_pmf[cls.id] = gamma[ci++];
        const auto beta = random_pmf(rng, cls.modes.size());
        std::size_t mi = 0;
        for (ModeId m : cls.modes) {
            d.pmf.mode_pmf[cls.id][m] = beta[mi++];
            d.spdf[{cls.id, m}] = random_gm(rng, dim, max_comps);
        }
    }
    return d;
}

/// Scalar identity-measurement sensor with unit clutter intensity (lambda
/// chosen so kappa == 1 over the region): the clutter-free encoding used by
/// the Kalman oracles.
inline jdtc::SensorModel linear_sensor_1d(int id, double noise_var, double pd,
                                          double lo = -50.0, double hi = 50.0) {
    jdtc::SensorModel s;
    s.id = id;
    s.noise_var = noise_var;
    s.detection_prob = {{1, pd}};
    s.clutter_rate = hi - lo;  // kappa = lambda/|region| = 1
    s.clutter_lo = lo;
    s.clutter_hi = hi;
    s.h = [](const Eigen::VectorXd& x) { return x(0); };
    s.jacobian = [](const Eigen::VectorXd& x) {
        Eigen::RowVectorXd H(x.size());
        H.setZero();
        H(0) = 1.0;
        return H;
    };
    return s;
}

/// Predicted density over the single-class library with a given 1-dim slot.
inline AugmentedBernoulli density_1c1m(double r, GaussianMixture slot) {
    AugmentedBernoulli d;
    d.r = r;
    d.pmf.class_pmf[1] = 1.0;
    d.pmf.mode_pmf[1][1] = 1.0;
    d.spdf[{1, 1}] = std::move(slot);
    return d;
}

/// Conjugate update of N(mean, var) with scalar measurement z = x + v,
/// v ~ N(0, R): returns posterior mean, variance and the evidence
/// N(z; mean, var + R).
struct Kalman1d {
    double mean;
    double var;
    double evidence;
};

inline Kalman1d kalman_update_1d(double mean, double var, double z, double R) {
    const double S = var + R;
    const double K = var / S;
    Kalman1d out;
    out.mean = mean + K * (z - mean);
    out.var = (1.0 - K) * var;
    out.evidence = std::exp(-0.5 * ((z - mean) * (z - mean) / S + std::log(2.0 * M_PI * S)));
    return out;
}

/// Trapezoid quadrature of f over [lo, hi].
template <typename F>
double integrate(F&& f, double lo, double hi, int steps) {
    const double h = (hi - lo) / steps;
    double acc = 0.5 * (f(lo) + f(hi));
    for (int i = 1; i < steps; ++i) acc += f(lo + i * h);
    return acc * h;
}

}  // namespace testsup
