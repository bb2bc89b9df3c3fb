#pragma once

#include <cmath>
#include <map>
#include <sstream>
#include <string>
#include <utility>
#include <vector>

#include "jdtc/gaussian.hpp"

namespace jdtc {

/// Class and mode labels are small 1-based integers.
using ClassId = int;
using ModeId = int;
using SlotKey = std::pair<ClassId, ModeId>;

/// Class PMF gamma(c) together with the class-conditioned mode PMFs beta(m|c).
struct ClassModePmf {
    std::map<ClassId, double> class_pmf;
    std::map<ClassId, std::map<ModeId, double>> mode_pmf;

    double class_prob(ClassId c) const {
        auto it = class_pmf.find(c);
        return it == class_pmf.end() ? 0.0 : it->second;
    }

    double mode_prob(ClassId c, ModeId m) const {
        auto it = mode_pmf.find(c);
        if (it == mode_pmf.end()) return 0.0;
        auto jt = it->second.find(m);
        return jt == it->second.end() ? 0.0 : jt->second;
    }
};

/// Bernoulli density over the augmented (state, class, mode) space:
/// existence probability r, class/mode PMFs, and one state mixture per
/// (class, mode) slot. Slots with beta(m|c) == 0 hold an empty placeholder
/// mixture and are skipped by every recursion.
struct AugmentedBernoulli {
    double r = 0.0;
    ClassModePmf pmf;
    std::map<SlotKey, GaussianMixture> spdf;

    const GaussianMixture& slot(ClassId c, ModeId m) const {
        static const GaussianMixture empty;
        auto it = spdf.find({c, m});
        return it == spdf.end() ? empty : it->second;
    }
};

struct ValidationResult {
    bool ok = true;
    std::string message;

    explicit operator bool() const { return ok; }
};

namespace detail {

inline ValidationResult violation(std::string msg) { return {false, std::move(msg)}; }

inline ValidationResult check_component(const GaussianComponent& c, const std::string& where) {
    if (!(c.weight >= 0.0))
        return violation(where + ": negative component weight " + std::to_string(c.weight));
    if (c.cov.rows() != c.mean.size() || c.cov.cols() != c.mean.size())
        return violation(where + ": covariance/mean dimension mismatch");
    if (!is_symmetric(c.cov))
        return violation(where + ": non-symmetric covariance");
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(c.cov, Eigen::EigenvaluesOnly);
    if (es.info() != Eigen::Success || es.eigenvalues().minCoeff() <= 0.0)
        return violation(where + ": non-PD covariance");
    return {};
}

}  // namespace detail

/// Checks every invariant of the density; returns the first violation found.
/// When `mode_support` is given (class id -> allowed modes), also checks that
/// each beta(.|c) is supported exactly on the class's mode set.
inline ValidationResult validate(
    const AugmentedBernoulli& d,
    const std::map<ClassId, std::vector<ModeId>>* mode_support = nullptr) {
    if (!(d.r >= 0.0 && d.r <= 1.0))
        return detail::violation("existence probability r = " + std::to_string(d.r) + " outside [0,1]");

    double gamma_sum = 0.0;
    for (const auto& [c, g] : d.pmf.class_pmf) {
        if (!(g >= 0.0 && g <= 1.0))
            return detail::violation("classPmf entry for class " + std::to_string(c) + " outside [0,1]");
        gamma_sum += g;
    }
    if (std::abs(gamma_sum - 1.0) > 1e-12) {
        std::ostringstream os;
        os << "classPmf sum = " << gamma_sum;
        return detail::violation(os.str());
    }

    for (const auto& [c, betas] : d.pmf.mode_pmf) {
        if (d.pmf.class_pmf.find(c) == d.pmf.class_pmf.end())
            return detail::violation("modePmf for class " + std::to_string(c) + " without classPmf entry");
        double beta_sum = 0.0;
        for (const auto& [m, b] : betas) {
            if (!(b >= 0.0 && b <= 1.0))
                return detail::violation("modePmf entry (" + std::to_string(c) + "," + std::to_string(m) +
                                         ") outside [0,1]");
            beta_sum += b;
        }
        if (std::abs(beta_sum - 1.0) > 1e-12) {
            std::ostringstream os;
            os << "modePmf sum for class " << c << " = " << beta_sum;
            return detail::violation(os.str());
        }
        if (mode_support != nullptr) {
            auto it = mode_support->find(c);
            if (it == mode_support->end())
                return detail::violation("class " + std::to_string(c) + " not in library");
            if (betas.size() != it->second.size())
                return detail::violation("modePmf support for class " + std::to_string(c) +
                                         " differs from library mode set");
            for (ModeId m : it->second)
                if (betas.find(m) == betas.end())
                    return detail::violation("modePmf for class " + std::to_string(c) + " missing mode " +
                                             std::to_string(m));
        }
    }
    if (d.pmf.mode_pmf.size() != d.pmf.class_pmf.size())
        return detail::violation("classPmf/modePmf class sets differ");

    int dim = -1;
    for (const auto& [c, betas] : d.pmf.mode_pmf) {
        for (const auto& [m, b] : betas) {
            const std::string where =
                "spdf(" + std::to_string(c) + "," + std::to_string(m) + ")";
            auto it = d.spdf.find({c, m});
            if (b <= 0.0) continue;  // zero-probability slots keep empty placeholders
            if (it == d.spdf.end() || it->second.empty())
                return detail::violation(where + ": missing mixture for beta > 0");
            const auto& gm = it->second;
            for (const auto& comp : gm.components) {
                if (auto res = detail::check_component(comp, where); !res.ok) return res;
                if (dim < 0) dim = comp.dim();
                if (comp.dim() != dim)
                    return detail::violation(where + ": inconsistent state dimension");
            }
            if (std::abs(gm.total_weight() - 1.0) > 1e-9) {
                std::ostringstream os;
                os << where << ": weight sum = " << gm.total_weight();
                return detail::violation(os.str());
            }
        }
    }
    return {};
}

}  // namespace jdtc
