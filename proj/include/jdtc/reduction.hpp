#pragma once

#include <algorithm>
#include <numeric>
#include <stdexcept>
#include <vector>

#include "jdtc/gaussian.hpp"
#include "jdtc/log.hpp"

namespace jdtc {

/// Pruning, merging and capping thresholds for mixture reduction.
struct ReductionPolicy {
    double prune_threshold = 1e-15;  // on normalized weights
    double merge_threshold = 20.0;   // squared Mahalanobis distance
    int max_components = 6;

    void check() const {
        if (!(prune_threshold >= 0.0)) throw std::invalid_argument("ReductionPolicy: prune_threshold < 0");
        if (!(merge_threshold > 0.0)) throw std::invalid_argument("ReductionPolicy: merge_threshold <= 0");
        if (max_components < 1) throw std::invalid_argument("ReductionPolicy: max_components < 1");
    }
};

namespace detail {

/// Moment-matched merge of a set of components: preserves total weight and
/// the first two moments of the merged subset.
inline GaussianComponent merge_components(const std::vector<const GaussianComponent*>& group) {
    double w = 0.0;
    for (const auto* c : group) w += c->weight;
    const int n = group.front()->dim();
    Eigen::VectorXd mean = Eigen::VectorXd::Zero(n);
    for (const auto* c : group) mean += c->weight * c->mean;
    mean /= w;
    Eigen::MatrixXd cov = Eigen::MatrixXd::Zero(n, n);
    for (const auto* c : group) {
        const Eigen::VectorXd d = c->mean - mean;
        cov += c->weight * (c->cov + d * d.transpose());
    }
    cov /= w;
    symmetrize(cov);
    return {w, std::move(mean), std::move(cov)};
}

/// One greedy pass: repeatedly take the heaviest unmerged component as seed
/// and absorb everything within the merge radius, measured in the seed's
/// covariance metric. Returns true if any merge happened.
template <int N>
bool merge_pass_impl(std::vector<GaussianComponent>& comps, double merge_threshold) {
    using Mat = Eigen::Matrix<double, N, N>;
    using Vec = Eigen::Matrix<double, N, 1>;
    std::vector<GaussianComponent> out;
    out.reserve(comps.size());
    std::vector<bool> used(comps.size(), false);
    bool merged_any = false;
    for (;;) {
        int seed = -1;
        double best = -1.0;
        for (std::size_t i = 0; i < comps.size(); ++i)
            if (!used[i] && comps[i].weight > best) {
                best = comps[i].weight;
                seed = static_cast<int>(i);
            }
        if (seed < 0) break;
        const Mat seed_cov = comps[seed].cov;
        const Vec seed_mean = comps[seed].mean;
        Eigen::LDLT<Mat> ldlt(seed_cov);
        std::vector<const GaussianComponent*> group;
        for (std::size_t i = 0; i < comps.size(); ++i) {
            if (used[i]) continue;
            if (static_cast<int>(i) == seed) {
                group.push_back(&comps[i]);
                used[i] = true;
                continue;
            }
            const Vec d = Vec(comps[i].mean) - seed_mean;
            const double dist2 = d.dot(ldlt.solve(d));
            if (dist2 <= merge_threshold) {
                group.push_back(&comps[i]);
                used[i] = true;
            }
        }
        if (group.size() > 1) {
            merged_any = true;
            out.push_back(merge_components(group));
        } else {
            out.push_back(*group.front());
        }
    }
    comps = std::move(out);
    return merged_any;
}

inline bool merge_pass(std::vector<GaussianComponent>& comps, double merge_threshold) {
    const int n = comps.empty() ? 0 : comps.front().dim();
    switch (n) {
        case 1: return merge_pass_impl<1>(comps, merge_threshold);
        case 2: return merge_pass_impl<2>(comps, merge_threshold);
        case 4: return merge_pass_impl<4>(comps, merge_threshold);
        default: return merge_pass_impl<Eigen::Dynamic>(comps, merge_threshold);
    }
}

}  // namespace detail

/// Prune low-weight components, merge close ones (iterated to a fixed point so
/// reduction is idempotent), cap at max_components, and rescale back to the
/// input's total weight so unnormalized intermediates keep their mass.
inline GaussianMixture reduce(const GaussianMixture& gm, const ReductionPolicy& policy) {
    policy.check();
    if (gm.empty()) return gm;
    const double total = gm.total_weight();
    if (total <= 0.0) {
        detail::warn("reduce: mixture with zero total weight left unchanged");
        return gm;
    }

    std::vector<GaussianComponent> comps;
    comps.reserve(gm.size());
    for (const auto& c : gm.components)
        if (c.weight / total >= policy.prune_threshold && c.weight > 0.0) comps.push_back(c);

    if (comps.empty()) {
        detail::warn("reduce: all components pruned; falling back to moment-matched single component");
        auto mom = gm_moments(gm);
        return GaussianMixture{{GaussianComponent(total, std::move(mom.mean), std::move(mom.cov))}};
    }

    while (detail::merge_pass(comps, policy.merge_threshold)) {
    }

    if (static_cast<int>(comps.size()) > policy.max_components) {
        std::stable_sort(comps.begin(), comps.end(),
                         [](const auto& a, const auto& b) { return a.weight > b.weight; });
        comps.resize(policy.max_components);
    }

    GaussianMixture out{std::move(comps)};
    gm_normalize(out, total);
    return out;
}

}  // namespace jdtc
