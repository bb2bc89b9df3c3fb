#include <gtest/gtest.h>

#include <cmath>
#include <random>

#include "jdtc/filter.hpp"
#include "jdtc/scenario.hpp"
#include "support.hpp"

namespace {

using jdtc::AugmentedBernoulli;
using jdtc::BirthModel;
using jdtc::GaussianComponent;
using jdtc::GaussianMixture;
using testsup::matd1;
using testsup::vecd;

jdtc::ClassLibrary ref_lib() { return testsup::reference_library(); }
BirthModel ref_birth() { return jdtc::build_birth(jdtc::paper_reference_config()); }

GaussianMixture drop_zero_weight(const GaussianMixture& gm) {
    GaussianMixture out;
    for (const auto& c : gm.components)
        if (c.weight > 0.0) out.components.push_back(c);
    return out;
}

void expect_same_density(const AugmentedBernoulli& a, const AugmentedBernoulli& b, double tol) {
    EXPECT_NEAR(a.r, b.r, tol);
    for (const auto& [c, g] : a.pmf.class_pmf) EXPECT_NEAR(g, b.pmf.class_prob(c), tol);
    for (const auto& [c, betas] : a.pmf.mode_pmf)
        for (const auto& [m, beta] : betas) {
            EXPECT_NEAR(beta, b.pmf.mode_prob(c, m), tol);
            if (beta <= 0.0) continue;
            const auto ga = drop_zero_weight(a.slot(c, m));
            const auto gb = drop_zero_weight(b.slot(c, m));
            ASSERT_EQ(ga.size(), gb.size());
            for (std::size_t i = 0; i < ga.size(); ++i) {
                EXPECT_NEAR(ga.components[i].weight, gb.components[i].weight, tol);
                EXPECT_LT((ga.components[i].mean - gb.components[i].mean).cwiseAbs().maxCoeff(),
                          tol);
                EXPECT_LT((ga.components[i].cov - gb.components[i].cov).cwiseAbs().maxCoeff(),
                          tol);
            }
        }
}

TEST(Predict, EmptyPriorYieldsBirth) {
    const auto lib = ref_lib();
    const auto birth = ref_birth();
    auto prior = jdtc::initial_density(birth);  // r = 0
    const auto pred = jdtc::predict(prior, birth, 0.98, lib);
    EXPECT_DOUBLE_EQ(pred.r, 0.2);
    for (const auto& [c, g] : pred.pmf.class_pmf) EXPECT_NEAR(g, birth.pmf.class_prob(c), 1e-15);
    for (const auto& [c, betas] : pred.pmf.mode_pmf)
        for (const auto& [m, b] : betas) {
            EXPECT_NEAR(b, birth.pmf.mode_prob(c, m), 1e-15);
            if (b <= 0.0) continue;
            const auto slot = drop_zero_weight(pred.slot(c, m));
            const auto& bslot = birth.slot(c, m);
            ASSERT_EQ(slot.size(), bslot.size());
            EXPECT_NEAR(slot.components[0].weight, bslot.components[0].weight, 1e-15);
            EXPECT_TRUE(slot.components[0].mean.isApprox(bslot.components[0].mean));
        }
}

TEST(Predict, CertainPriorKeepsClassPmf) {
    const auto lib = ref_lib();
    const auto birth = ref_birth();
    std::mt19937_64 rng(41);
    auto prior = testsup::random_density(rng, lib, 4);
    prior.r = 1.0;
    const auto pred = jdtc::predict(prior, birth, 0.98, lib);
    EXPECT_NEAR(pred.r, 0.98, 1e-15);
    for (const auto& [c, g] : prior.pmf.class_pmf) EXPECT_NEAR(pred.pmf.class_prob(c), g, 1e-12);
}

TEST(Predict, HandComputedMixing) {
    // r = 0.5, pB = 0.2, pS = 0.98, gamma_prior = (0.5, 0.3, 0.2), gamma_B uniform
    const auto lib = ref_lib();
    const auto birth = ref_birth();
    std::mt19937_64 rng(42);
    auto prior = testsup::random_density(rng, lib, 4);
    prior.r = 0.5;
    prior.pmf.class_pmf = {{1, 0.5}, {2, 0.3}, {3, 0.2}};
    const auto pred = jdtc::predict(prior, birth, 0.98, lib);
    EXPECT_NEAR(pred.r, 0.59, 1e-15);
    const double expected_c1 = (0.1 * (1.0 / 3.0) + 0.49 * 0.5) / 0.59;
    EXPECT_NEAR(expected_c1, 0.47175, 5e-6);
    EXPECT_NEAR(pred.pmf.class_prob(1), expected_c1, 1e-14);
}

TEST(Predict, ComponentCountMatchesBirthPlusSurvivors) {
    const auto lib = ref_lib();
    const auto birth = ref_birth();
    std::mt19937_64 rng(43);
    for (int rep = 0; rep < 20; ++rep) {
        const auto prior = testsup::random_density(rng, lib, 4, 4);
        const auto pred = jdtc::predict(prior, birth, 0.98, lib);
        for (const auto& ci : lib.classes) {
            std::size_t survivors = 0;
            for (auto m : ci.modes) survivors += prior.slot(ci.id, m).size();
            for (auto m : ci.modes) {
                if (pred.pmf.mode_prob(ci.id, m) <= 0.0) continue;
                EXPECT_EQ(pred.slot(ci.id, m).size(),
                          birth.slot(ci.id, m).size() + survivors);
            }
        }
    }
}

TEST(Predict, PreservesNormalizationInvariants) {
    const auto lib = ref_lib();
    const auto birth = ref_birth();
    std::mt19937_64 rng(44);
    for (int rep = 0; rep < 100; ++rep) {
        const auto prior = testsup::random_density(rng, lib, 4);
        const auto pred = jdtc::predict(prior, birth, 0.98, lib);
        const auto res = jdtc::validate(pred);
        EXPECT_TRUE(res.ok) << res.message;
        double gsum = 0.0;
        for (const auto& [c, g] : pred.pmf.class_pmf) gsum += g;
        EXPECT_NEAR(gsum, 1.0, 1e-9);
        for (const auto& [c, betas] : pred.pmf.mode_pmf) {
            double bsum = 0.0;
            for (const auto& [m, b] : betas) bsum += b;
            EXPECT_NEAR(bsum, 1.0, 1e-9);
        }
    }
}

TEST(Predict, MatchesSamplingOracle) {
    // single class, CV mode, no birth: predicted slot moments must match a
    // Monte-Carlo push of the prior through the motion model
    auto lib = testsup::single_class_library();
    BirthModel birth;
    birth.probability = 0.0;
    birth.pmf.class_pmf[1] = 1.0;
    birth.pmf.mode_pmf[1][1] = 1.0;
    birth.spdf[{1, 1}] = GaussianMixture{{GaussianComponent(
        1.0, vecd({0, 0, 0, 0}), Eigen::MatrixXd::Identity(4, 4))}};

    std::mt19937_64 rng(45);
    AugmentedBernoulli prior;
    prior.r = 0.6;
    prior.pmf.class_pmf[1] = 1.0;
    prior.pmf.mode_pmf[1][1] = 1.0;
    prior.spdf[{1, 1}] = GaussianMixture{
        {GaussianComponent(0.3, vecd({10, 1, -5, 2}), testsup::random_spd(rng, 4, 2.0)),
         GaussianComponent(0.7, vecd({-4, -1, 8, 0}), testsup::random_spd(rng, 4, 3.0))}};

    const auto pred = jdtc::predict(prior, birth, 0.98, lib);
    const auto mom = jdtc::gm_moments(pred.slot(1, 1));

    const auto& mode = lib.motion_mode(1);
    Eigen::LLT<Eigen::MatrixXd> lq(mode.Q);
    const int N = 100000;
    std::normal_distribution<double> g(0.0, 1.0);
    std::uniform_real_distribution<double> u(0.0, 1.0);
    Eigen::VectorXd sum = Eigen::VectorXd::Zero(4);
    Eigen::MatrixXd sum2 = Eigen::MatrixXd::Zero(4, 4);
    for (int i = 0; i < N; ++i) {
        const auto& comp =
            prior.spdf[{1, 1}].components[u(rng) < 0.3 ? 0 : 1];
        Eigen::LLT<Eigen::MatrixXd> lp(comp.cov);
        Eigen::VectorXd n4(4);
        for (int d = 0; d < 4; ++d) n4(d) = g(rng);
        Eigen::VectorXd x = comp.mean + lp.matrixL() * n4;
        for (int d = 0; d < 4; ++d) n4(d) = g(rng);
        x = mode.F * x + lq.matrixL() * n4;
        sum += x;
        sum2 += x * x.transpose();
    }
    const Eigen::VectorXd emp_mean = sum / N;
    const Eigen::MatrixXd emp_cov = sum2 / N - emp_mean * emp_mean.transpose();

    for (int i = 0; i < 4; ++i) {
        const double se = std::sqrt(mom.cov(i, i) / N);
        EXPECT_NEAR(emp_mean(i), mom.mean(i), 3.5 * se);
        for (int j = 0; j < 4; ++j) {
            const double se_cov =
                std::sqrt((mom.cov(i, i) * mom.cov(j, j) + mom.cov(i, j) * mom.cov(i, j)) / N);
            EXPECT_NEAR(emp_cov(i, j), mom.cov(i, j), 4.0 * se_cov);
        }
    }
}

TEST(Predict, DegenerateZeroMassKeepsPriorConditional) {
    const auto lib = ref_lib();
    auto birth = ref_birth();
    birth.probability = 0.0;
    std::mt19937_64 rng(46);
    auto prior = testsup::random_density(rng, lib, 4);
    prior.r = 0.0;
    const auto pred = jdtc::predict(prior, birth, 0.98, lib);
    EXPECT_DOUBLE_EQ(pred.r, 0.0);
    EXPECT_EQ(pred.pmf.class_pmf, prior.pmf.class_pmf);
}

TEST(Predict, RejectsInvalidArguments) {
    const auto lib = ref_lib();
    const auto birth = ref_birth();
    std::mt19937_64 rng(47);
    auto prior = testsup::random_density(rng, lib, 4);
    EXPECT_THROW(jdtc::predict(prior, birth, 1.5, lib), std::invalid_argument);
    prior.r = 2.0;
    EXPECT_THROW(jdtc::predict(prior, birth, 0.98, lib), std::invalid_argument);
}

// Class-conditioned outputs depend only on that class's priors (and birth):
// perturbing another class's mode PMF and mixtures must not change them.
TEST(FilterSeparation, ClassConditionalsIndependentAcrossClasses) {
    const auto lib = ref_lib();
    const auto birth = ref_birth();
    std::mt19937_64 rng(48);
    auto prior_a = testsup::random_density(rng, lib, 4);
    auto prior_b = prior_a;
    // perturb class 3: different beta and different mixtures
    prior_b.pmf.mode_pmf[3] = {{1, 0.6}, {4, 0.3}, {5, 0.1}};
    prior_b.spdf[{3, 1}] = testsup::random_gm(rng, 4, 3);
    prior_b.spdf[{3, 4}] = testsup::random_gm(rng, 4, 3);
    prior_b.spdf[{3, 5}] = testsup::random_gm(rng, 4, 3);

    const auto pred_a = jdtc::predict(prior_a, birth, 0.98, lib);
    const auto pred_b = jdtc::predict(prior_b, birth, 0.98, lib);
    EXPECT_DOUBLE_EQ(pred_a.pmf.class_prob(2), pred_b.pmf.class_prob(2));
    for (auto m : {1, 2, 3}) {
        EXPECT_DOUBLE_EQ(pred_a.pmf.mode_prob(2, m), pred_b.pmf.mode_prob(2, m));
        const auto& sa = pred_a.slot(2, m);
        const auto& sb = pred_b.slot(2, m);
        ASSERT_EQ(sa.size(), sb.size());
        for (std::size_t i = 0; i < sa.size(); ++i)
            EXPECT_DOUBLE_EQ(sa.components[i].weight, sb.components[i].weight);
    }

    // and through the update: class-2 mode likelihoods and conditionals agree
    auto sensor = jdtc::make_range_sensor(1, {100.0, -50.0}, 25.0,
                                          {{1, 0.9}, {2, 0.9}, {3, 0.9}}, 2.0, 0.0, 8000.0);
    const std::vector<double> z{40.0, 900.0};
    const auto up_a = jdtc::single_sensor_update(pred_a, z, sensor, lib);
    const auto up_b = jdtc::single_sensor_update(pred_b, z, sensor, lib);
    for (auto m : {1, 2, 3}) {
        EXPECT_DOUBLE_EQ(up_a.log_mode_likelihood.at({2, m}), up_b.log_mode_likelihood.at({2, m}));
        EXPECT_DOUBLE_EQ(up_a.density.pmf.mode_prob(2, m), up_b.density.pmf.mode_prob(2, m));
    }
    EXPECT_DOUBLE_EQ(up_a.log_class_likelihood.at(2), up_b.log_class_likelihood.at(2));
}

TEST(Update, ZeroDetectionProbabilityIsIdentity) {
    const auto lib = ref_lib();
    const auto birth = ref_birth();
    std::mt19937_64 rng(49);
    const auto pred = jdtc::predict(testsup::random_density(rng, lib, 4), birth, 0.98, lib);
    auto sensor = jdtc::make_range_sensor(1, {0.0, 0.0}, 25.0, {{1, 0.0}, {2, 0.0}, {3, 0.0}},
                                          2.0, 0.0, 8000.0);
    const auto up = jdtc::single_sensor_update(pred, {100.0, 2000.0}, sensor, lib);
    expect_same_density(up.density, pred, 1e-12);
    for (const auto& [key, lml] : up.log_mode_likelihood)
        if (pred.pmf.mode_prob(key.first, key.second) > 0.0) EXPECT_NEAR(lml, 0.0, 1e-12);
}

TEST(Update, EmptyScanLowersExistence) {
    const auto lib = ref_lib();
    const auto birth = ref_birth();
    std::mt19937_64 rng(50);
    auto pred = jdtc::predict(testsup::random_density(rng, lib, 4), birth, 0.98, lib);
    pred.r = 0.59;
    auto sensor = jdtc::make_range_sensor(1, {0.0, 0.0}, 25.0,
                                          {{1, 0.95}, {2, 0.95}, {3, 0.95}}, 2.0, 0.0, 8000.0);
    const auto up = jdtc::single_sensor_update(pred, {}, sensor, lib);
    // l(c) = 0.05 for every class, so r = 0.59*0.05 / (0.41 + 0.59*0.05)
    const double expected = 0.59 * 0.05 / (0.41 + 0.59 * 0.05);
    EXPECT_NEAR(expected, 0.06712, 5e-6);
    EXPECT_NEAR(up.density.r, expected, 1e-12);
    EXPECT_LT(up.density.r, pred.r);
    // gamma, beta, s unchanged: the likelihood is constant in x, c, m
    for (const auto& [c, g] : pred.pmf.class_pmf)
        EXPECT_NEAR(up.density.pmf.class_prob(c), g, 1e-12);
    for (const auto& [c, betas] : pred.pmf.mode_pmf)
        for (const auto& [m, b] : betas) EXPECT_NEAR(up.density.pmf.mode_prob(c, m), b, 1e-12);
    for (const auto& [key, gm] : pred.spdf) {
        const auto& ugm = up.density.slot(key.first, key.second);
        if (gm.empty()) continue;
        ASSERT_EQ(ugm.size(), gm.size());
        for (std::size_t i = 0; i < gm.size(); ++i)
            EXPECT_NEAR(ugm.components[i].weight, gm.components[i].weight, 1e-12);
    }
}

TEST(Update, MatchesConjugateKalman1d) {
    const auto lib = testsup::single_class_library();
    const double mu0 = 1.5, p0 = 2.0, r_noise = 0.5, z = 2.3, r_pred = 0.7;
    auto pred = testsup::density_1c1m(
        r_pred, GaussianMixture{{GaussianComponent(1.0, vecd({mu0}), matd1(p0))}});
    auto sensor = testsup::linear_sensor_1d(1, r_noise, 1.0);  // pd = 1, kappa = 1

    const auto up = jdtc::single_sensor_update(pred, {z}, sensor, lib);
    const auto oracle = testsup::kalman_update_1d(mu0, p0, z, r_noise);

    // detected component is the conjugate posterior; missed copy has weight 0
    const auto post = drop_zero_weight(up.density.slot(1, 1));
    ASSERT_EQ(post.size(), 1u);
    EXPECT_NEAR(post.components[0].weight, 1.0, 1e-12);
    EXPECT_NEAR(post.components[0].mean(0), oracle.mean, 1e-12);
    EXPECT_NEAR(post.components[0].cov(0, 0), oracle.var, 1e-12);
    // normalizer: l(m|c) equals the Kalman evidence (kappa == 1)
    EXPECT_NEAR(std::exp(up.log_mode_likelihood.at({1, 1})), oracle.evidence, 1e-12);
    const double r_expected =
        r_pred * oracle.evidence / (1.0 - r_pred + r_pred * oracle.evidence);
    EXPECT_NEAR(up.density.r, r_expected, 1e-12);
}

TEST(Update, CentralizedWithOneSensorEqualsSingle) {
    const auto lib = ref_lib();
    const auto birth = ref_birth();
    std::mt19937_64 rng(51);
    const auto pred = jdtc::predict(testsup::random_density(rng, lib, 4), birth, 0.98, lib);
    auto sensor = jdtc::make_range_sensor(7, {500.0, 500.0}, 25.0,
                                          {{1, 0.95}, {2, 0.95}, {3, 0.95}}, 5.0, 0.0, 8000.0);
    const std::vector<double> z{1200.0, 3000.0};
    const auto a = jdtc::single_sensor_update(pred, z, sensor, lib);
    const auto b = jdtc::centralized_update(pred, {{7, z}}, {sensor}, lib);
    EXPECT_EQ(a.density.r, b.density.r);
    for (const auto& [c, g] : a.density.pmf.class_pmf)
        EXPECT_EQ(g, b.density.pmf.class_prob(c));
    for (const auto& [key, lml] : a.log_mode_likelihood)
        EXPECT_EQ(lml, b.log_mode_likelihood.at(key));
}

TEST(Update, TwoSensorKalmanCompositionAndOrderInvariance) {
    const auto lib = testsup::single_class_library();
    const double mu0 = 0.5, p0 = 3.0, r_pred = 0.4;
    const double r1 = 0.5, r2 = 2.0, z1 = 1.1, z2 = -0.4;
    auto pred = testsup::density_1c1m(
        r_pred, GaussianMixture{{GaussianComponent(1.0, vecd({mu0}), matd1(p0))}});

    auto sa = testsup::linear_sensor_1d(1, r1, 1.0);
    auto sb = testsup::linear_sensor_1d(2, r2, 1.0);
    const auto up = jdtc::centralized_update(pred, {{1, {z1}}, {2, {z2}}}, {sa, sb}, lib);

    const auto k1 = testsup::kalman_update_1d(mu0, p0, z1, r1);
    const auto k2 = testsup::kalman_update_1d(k1.mean, k1.var, z2, r2);
    const auto post = drop_zero_weight(up.density.slot(1, 1));
    // 4 components: (miss,miss)=0, (miss,det)=0, (det,miss)=0, (det,det)
    ASSERT_EQ(post.size(), 1u);
    EXPECT_NEAR(post.components[0].mean(0), k2.mean, 1e-9);
    EXPECT_NEAR(post.components[0].cov(0, 0), k2.var, 1e-9);
    EXPECT_NEAR(std::exp(up.log_mode_likelihood.at({1, 1})), k1.evidence * k2.evidence, 1e-12);

    // swapping which sensor is processed first must not change the posterior
    auto sa_swapped = sa;
    sa_swapped.id = 2;
    auto sb_swapped = sb;
    sb_swapped.id = 1;
    const auto up_swapped = jdtc::centralized_update(pred, {{2, {z1}}, {1, {z2}}},
                                                     {sa_swapped, sb_swapped}, lib);
    EXPECT_NEAR(up.density.r, up_swapped.density.r, 1e-9);
    const auto post_swapped = drop_zero_weight(up_swapped.density.slot(1, 1));
    ASSERT_EQ(post_swapped.size(), 1u);
    EXPECT_NEAR(post_swapped.components[0].mean(0), post.components[0].mean(0), 1e-9);
    EXPECT_NEAR(post_swapped.components[0].cov(0, 0), post.components[0].cov(0, 0), 1e-9);
}

TEST(Update, ComponentCountsFollowMeasurementCount) {
    const auto lib = testsup::single_class_library();
    std::mt19937_64 rng(52);
    for (int rep = 0; rep < 20; ++rep) {
        const int j0 = 1 + static_cast<int>(rng() % 4);
        auto pred = testsup::density_1c1m(0.5, testsup::random_gm(rng, 1, j0));
        while (pred.spdf[{1, 1}].size() < static_cast<std::size_t>(j0))
            pred.spdf[{1, 1}].components.push_back(pred.spdf[{1, 1}].components.front());
        jdtc::gm_normalize(pred.spdf[{1, 1}]);
        const std::size_t J = pred.spdf[{1, 1}].size();

        auto s1 = testsup::linear_sensor_1d(1, 1.0, 0.9);
        auto s2 = testsup::linear_sensor_1d(2, 2.0, 0.9);
        const std::vector<double> z1{0.3, -1.0, 2.0};
        const std::vector<double> z2{1.0};

        const auto single = jdtc::single_sensor_update(pred, z1, s1, lib);
        EXPECT_EQ(single.density.slot(1, 1).size(), (z1.size() + 1) * J);

        const auto multi = jdtc::centralized_update(pred, {{1, z1}, {2, z2}}, {s1, s2}, lib);
        EXPECT_EQ(multi.density.slot(1, 1).size(), (z1.size() + 1) * (z2.size() + 1) * J);
    }
}

TEST(Update, AllEmptyScansMonotoneAndBounded) {
    const auto lib = ref_lib();
    const auto birth = ref_birth();
    std::mt19937_64 rng(53);
    std::vector<jdtc::SensorModel> sensors;
    std::map<int, std::vector<double>> no_meas;
    for (int i = 1; i <= 5; ++i) {
        sensors.push_back(jdtc::make_range_sensor(
            i, {500.0 * i, 200.0}, 25.0, {{1, 0.8}, {2, 0.8}, {3, 0.8}}, 3.0, 0.0, 8000.0));
        no_meas[i] = {};
    }
    for (int rep = 0; rep < 30; ++rep) {
        const auto pred = jdtc::predict(testsup::random_density(rng, lib, 4), birth, 0.98, lib);
        const auto up = jdtc::centralized_update(pred, no_meas, sensors, lib);
        EXPECT_LT(up.density.r, pred.r);
        // l(m|c) >= prod_i (1 - pd_i(c)) > 0
        const double lower = std::pow(0.2, 5);
        for (const auto& [key, lml] : up.log_mode_likelihood)
            if (pred.pmf.mode_prob(key.first, key.second) > 0.0)
                EXPECT_GE(lml, std::log(lower) - 1e-9);
    }
}

TEST(Update, CertainDetectionWithEmptyScanKillsExistence) {
    const auto lib = testsup::single_class_library();
    auto pred = testsup::density_1c1m(
        0.8, GaussianMixture{{GaussianComponent(1.0, vecd({0.0}), matd1(1.0))}});
    auto sensor = testsup::linear_sensor_1d(1, 1.0, 1.0);  // pd = 1
    const auto up = jdtc::single_sensor_update(pred, {}, sensor, lib);
    EXPECT_DOUBLE_EQ(up.density.r, 0.0);
    EXPECT_DOUBLE_EQ(up.density.pmf.class_prob(1), 1.0);
}

TEST(Update, ClutterModelInconsistencies) {
    const auto lib = testsup::single_class_library();
    auto pred = testsup::density_1c1m(
        0.5, GaussianMixture{{GaussianComponent(1.0, vecd({0.0}), matd1(1.0))}});
    // measurement outside the clutter region with lambda > 0: error
    auto sensor = testsup::linear_sensor_1d(1, 1.0, 0.9, -1.0, 1.0);
    EXPECT_THROW(jdtc::single_sensor_update(pred, {5.0}, sensor, lib), std::domain_error);
    // lambda = 0 with a detection: pure-detection limit drives r toward 1
    sensor.clutter_rate = 0.0;
    const auto up = jdtc::single_sensor_update(pred, {0.2}, sensor, lib);
    EXPECT_GT(up.density.r, 0.999999);
}

TEST(Update, UnregisteredSensorRejected) {
    const auto lib = testsup::single_class_library();
    auto pred = testsup::density_1c1m(
        0.5, GaussianMixture{{GaussianComponent(1.0, vecd({0.0}), matd1(1.0))}});
    auto sensor = testsup::linear_sensor_1d(1, 1.0, 0.9);
    EXPECT_THROW(jdtc::centralized_update(pred, {{2, {0.1}}}, {sensor}, lib),
                 std::invalid_argument);
}

TEST(Extract, ThresholdGatesExistence) {
    const auto lib = testsup::single_class_library();
    auto d = testsup::density_1c1m(
        0.4, GaussianMixture{{GaussianComponent(1.0, vecd({2.0}), matd1(1.0))}});
    EXPECT_FALSE(jdtc::extract(d).exists);
    d.r = 0.5;
    EXPECT_TRUE(jdtc::extract(d).exists);  // r >= threshold
}

TEST(Extract, ArgmaxClassAndMode) {
    const auto lib = ref_lib();
    jdtc::AugmentedBernoulli d;
    d.r = 0.9;
    d.pmf.class_pmf = {{1, 0.2}, {2, 0.7}, {3, 0.1}};
    d.pmf.mode_pmf[1] = {{1, 1.0}};
    d.pmf.mode_pmf[2] = {{1, 0.1}, {2, 0.8}, {3, 0.1}};
    d.pmf.mode_pmf[3] = {{1, 1.0}, {4, 0.0}, {5, 0.0}};
    for (const auto& ci : lib.classes)
        for (auto m : ci.modes)
            d.spdf[{ci.id, m}] = GaussianMixture{{GaussianComponent(
                1.0, testsup::vecd({1, 2, 3, 4}), Eigen::MatrixXd::Identity(4, 4))}};
    const auto est = jdtc::extract(d);
    EXPECT_TRUE(est.exists);
    EXPECT_EQ(est.class_id, 2);
    EXPECT_EQ(est.mode_id, 2);
    EXPECT_TRUE(est.state.isApprox(testsup::vecd({1, 2, 3, 4})));
}

TEST(Extract, MapAndMmseCoincideOnSingleComponent) {
    auto d = testsup::density_1c1m(
        0.9, GaussianMixture{{GaussianComponent(1.0, vecd({3.5}), matd1(2.0))}});
    const auto mmse = jdtc::extract(d, 0.5, jdtc::ExtractionCriterion::MMSE);
    const auto map = jdtc::extract(d, 0.5, jdtc::ExtractionCriterion::MAP);
    EXPECT_DOUBLE_EQ(mmse.state(0), 3.5);
    EXPECT_DOUBLE_EQ(map.state(0), 3.5);
}

TEST(Extract, TiesResolveToLowestId) {
    const auto lib = ref_lib();
    jdtc::AugmentedBernoulli d;
    d.r = 1.0;
    d.pmf.class_pmf = {{1, 0.4}, {2, 0.4}, {3, 0.2}};
    d.pmf.mode_pmf[1] = {{1, 1.0}};
    d.pmf.mode_pmf[2] = {{1, 0.5}, {2, 0.5}, {3, 0.0}};
    d.pmf.mode_pmf[3] = {{1, 1.0}, {4, 0.0}, {5, 0.0}};
    for (const auto& ci : lib.classes)
        for (auto m : ci.modes)
            d.spdf[{ci.id, m}] = GaussianMixture{{GaussianComponent(
                1.0, Eigen::VectorXd::Zero(4), Eigen::MatrixXd::Identity(4, 4))}};
    const auto est = jdtc::extract(d);
    EXPECT_EQ(est.class_id, 1);
    EXPECT_EQ(est.mode_id, 1);
}

}  // namespace
