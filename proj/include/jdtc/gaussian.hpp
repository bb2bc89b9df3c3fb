#pragma once

#include <Eigen/Dense>
#include <cmath>
#include <numbers>
#include <stdexcept>
#include <vector>

namespace jdtc {

/// One weighted Gaussian component of a mixture.
struct GaussianComponent {
    double weight = 0.0;
    Eigen::VectorXd mean;
    Eigen::MatrixXd cov;

    GaussianComponent() = default;
    GaussianComponent(double w, Eigen::VectorXd mu, Eigen::MatrixXd P)
        : weight(w), mean(std::move(mu)), cov(std::move(P)) {}

    int dim() const { return static_cast<int>(mean.size()); }
};

/// Weighted sum of Gaussian components. Represents one class&mode-conditioned
/// state density when normalized; intermediate results may be unnormalized.
struct GaussianMixture {
    std::vector<GaussianComponent> components;

    GaussianMixture() = default;
    explicit GaussianMixture(std::vector<GaussianComponent> comps)
        : components(std::move(comps)) {}

    bool empty() const { return components.empty(); }
    std::size_t size() const { return components.size(); }

    double total_weight() const {
        double w = 0.0;
        for (const auto& c : components) w += c.weight;
        return w;
    }

    int dim() const { return components.empty() ? 0 : components.front().dim(); }
};

namespace detail {

inline constexpr double kLogTwoPi = 1.8378770664093454836;

/// Force exact symmetry; EKF/fusion algebra accumulates asymmetric roundoff.
inline void symmetrize(Eigen::MatrixXd& P) {
    P = ((P + P.transpose()) * 0.5).eval();
}

/// Symmetrize, then add 1e-12*I jitter if the matrix fails a Cholesky test.
inline void repair_covariance(Eigen::MatrixXd& P) {
    symmetrize(P);
    Eigen::LLT<Eigen::MatrixXd> llt(P);
    if (llt.info() != Eigen::Success) {
        P += 1e-12 * Eigen::MatrixXd::Identity(P.rows(), P.cols());
    }
}

inline bool is_symmetric(const Eigen::MatrixXd& P, double rel_tol = 1e-9) {
    const double scale = std::max(1.0, P.cwiseAbs().maxCoeff());
    return (P - P.transpose()).cwiseAbs().maxCoeff() <= rel_tol * scale;
}

/// log N(x; mean, cov) via LDLT. Throws on dimension mismatch.
inline double log_gaussian_pdf(const Eigen::VectorXd& x, const Eigen::VectorXd& mean,
                               const Eigen::MatrixXd& cov) {
    if (x.size() != mean.size() || cov.rows() != mean.size() || cov.cols() != mean.size())
        throw std::invalid_argument("log_gaussian_pdf: dimension mismatch");
    const Eigen::VectorXd d = x - mean;
    Eigen::LDLT<Eigen::MatrixXd> ldlt(cov);
    if (ldlt.info() != Eigen::Success)
        throw std::domain_error("log_gaussian_pdf: covariance not factorizable");
    double log_det = 0.0;
    const auto& D = ldlt.vectorD();
    for (Eigen::Index i = 0; i < D.size(); ++i) {
        if (D(i) <= 0.0) throw std::domain_error("log_gaussian_pdf: covariance not positive definite");
        log_det += std::log(D(i));
    }
    const double mahal = d.dot(ldlt.solve(d));
    return -0.5 * (static_cast<double>(x.size()) * kLogTwoPi + log_det + mahal);
}

inline double gaussian_pdf(const Eigen::VectorXd& x, const Eigen::VectorXd& mean,
                           const Eigen::MatrixXd& cov) {
    return std::exp(log_gaussian_pdf(x, mean, cov));
}

/// Scalar N(x; mean, var).
inline double gaussian_pdf_1d(double x, double mean, double var) {
    const double d = x - mean;
    return std::exp(-0.5 * (kLogTwoPi + std::log(var) + d * d / var));
}

/// Numerically stable log(sum(exp(v))) over finite or -inf entries.
inline double log_sum_exp(const std::vector<double>& v) {
    double m = -std::numeric_limits<double>::infinity();
    for (double x : v) m = std::max(m, x);
    if (!std::isfinite(m)) return m;
    double s = 0.0;
    for (double x : v) s += std::exp(x - m);
    return m + std::log(s);
}

}  // namespace detail

/// Mixture density value at x: sum_j alpha_j * N(x; mu_j, P_j).
inline double gm_eval(const GaussianMixture& gm, const Eigen::VectorXd& x) {
    double v = 0.0;
    for (const auto& c : gm.components) {
        if (c.mean.size() != x.size())
            throw std::invalid_argument("gm_eval: dimension mismatch");
        if (c.weight > 0.0) v += c.weight * detail::gaussian_pdf(x, c.mean, c.cov);
    }
    return v;
}

struct GmMoments {
    double weight = 0.0;
    Eigen::VectorXd mean;
    Eigen::MatrixXd cov;
};

/// Moment-match the mixture: total weight, weighted mean, and covariance
/// including the spread-of-means term.
inline GmMoments gm_moments(const GaussianMixture& gm) {
    if (gm.empty()) throw std::invalid_argument("gm_moments: empty mixture");
    const int n = gm.dim();
    const double w = gm.total_weight();
    if (w <= 0.0) throw std::domain_error("gm_moments: zero total weight");

    Eigen::VectorXd mean = Eigen::VectorXd::Zero(n);
    for (const auto& c : gm.components) mean += (c.weight / w) * c.mean;

    Eigen::MatrixXd cov = Eigen::MatrixXd::Zero(n, n);
    for (const auto& c : gm.components) {
        const Eigen::VectorXd d = c.mean - mean;
        cov += (c.weight / w) * (c.cov + d * d.transpose());
    }
    detail::symmetrize(cov);
    return {w, std::move(mean), std::move(cov)};
}

/// Scale all component weights so the total equals `target`.
inline void gm_normalize(GaussianMixture& gm, double target = 1.0) {
    const double w = gm.total_weight();
    if (w <= 0.0) return;
    const double f = target / w;
    for (auto& c : gm.components) c.weight *= f;
}

}  // namespace jdtc
