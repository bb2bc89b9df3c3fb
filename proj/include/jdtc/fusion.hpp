#pragma once

#include <cmath>
#include <map>
#include <optional>
#include <queue>
#include <set>
#include <stdexcept>
#include <vector>

#include "jdtc/density.hpp"
#include "jdtc/gaussian.hpp"
#include "jdtc/log.hpp"
#include "jdtc/models.hpp"
#include "jdtc/reduction.hpp"
#include "jdtc/serialization.hpp"

namespace jdtc {

/// Per-node exponents for a single global GCI fusion; must sum to 1.
using FusionWeights = std::map<int, double>;

/// Undirected communication graph with per-node consensus weights over the
/// in-neighborhood (self included).
struct NetworkGraph {
    std::vector<int> nodes;
    std::map<int, std::set<int>> adjacency;
    std::map<int, std::map<int, double>> weights;

    void add_node(int id) {
        for (int n : nodes)
            if (n == id) return;
        nodes.push_back(id);
        adjacency[id];
    }

    void add_edge(int a, int b) {
        if (a == b) throw std::invalid_argument("NetworkGraph: self loops not allowed");
        add_node(a);
        add_node(b);
        adjacency[a].insert(b);
        adjacency[b].insert(a);
    }

    /// N^i = {i} union adj(i), ascending.
    std::vector<int> neighborhood(int id) const {
        std::vector<int> out{id};
        auto it = adjacency.find(id);
        if (it != adjacency.end()) out.insert(out.end(), it->second.begin(), it->second.end());
        std::sort(out.begin(), out.end());
        return out;
    }

    bool connected() const {
        if (nodes.empty()) return true;
        std::set<int> seen;
        std::queue<int> q;
        q.push(nodes.front());
        seen.insert(nodes.front());
        while (!q.empty()) {
            const int u = q.front();
            q.pop();
            for (int v : adjacency.at(u))
                if (seen.insert(v).second) q.push(v);
        }
        return seen.size() == nodes.size();
    }
};

/// Metropolis consensus weights: w(i,j) = 1 / (1 + max(deg i, deg j)) for
/// adjacent i != j, self weight the remainder. The resulting weight matrix is
/// doubly stochastic, so consensus converges to the uniform-weight fusion.
inline NetworkGraph metropolis_weights(NetworkGraph graph) {
    for (int i : graph.nodes) {
        const auto deg = [&](int n) { return graph.adjacency.at(n).size(); };
        double self = 1.0;
        auto& w = graph.weights[i];
        w.clear();
        for (int j : graph.adjacency.at(i)) {
            const double wij = 1.0 / (1.0 + static_cast<double>(std::max(deg(i), deg(j))));
            w[j] = wij;
            self -= wij;
        }
        w[i] = self;
    }
    return graph;
}

/// w(i,j) = 1/|N^i| for every j in N^i.
inline NetworkGraph uniform_weights(NetworkGraph graph) {
    for (int i : graph.nodes) {
        auto& w = graph.weights[i];
        w.clear();
        const auto hood = graph.neighborhood(i);
        for (int j : hood) w[j] = 1.0 / static_cast<double>(hood.size());
    }
    return graph;
}

namespace detail {

/// Pair kernel for the weighted geometric average, templated on the state
/// dimension so the 4-dim scenario runs allocation-free fixed-size algebra.
template <int N>
GaussianMixture gm_geometric_mean_impl(const GaussianMixture& a, const GaussianMixture& b,
                                       double w, int n) {
    using Mat = Eigen::Matrix<double, N, N>;
    using Vec = Eigen::Matrix<double, N, 1>;
    const Mat I = Mat::Identity(n, n);

    struct Powered {
        double log_weight;  // expo * log(alpha)
        Mat inv;            // P^-1
        Vec info_mean;      // P^-1 mu
        Mat scaled_cov;     // P / expo
        double log_eps;     // normalization constant of [G(.)]^expo
    };
    const auto prepare = [&](const GaussianMixture& gm, double expo) {
        std::vector<Powered> out;
        out.reserve(gm.size());
        for (const auto& c : gm.components) {
            Powered p;
            p.log_weight = c.weight > 0.0 ? expo * std::log(c.weight)
                                          : -std::numeric_limits<double>::infinity();
            const Mat cov = c.cov;
            Eigen::LLT<Mat> llt(cov);
            if (llt.info() != Eigen::Success)
                throw std::domain_error("gm_geometric_mean: singular covariance");
            double log_det = 0.0;
            for (int i = 0; i < n; ++i) log_det += 2.0 * std::log(llt.matrixLLT()(i, i));
            p.inv = llt.solve(I);
            p.info_mean = p.inv * Vec(c.mean);
            p.scaled_cov = cov / expo;
            // 0.5 [ (1-expo) logdet(2 pi P) - n log(expo) ]
            p.log_eps = 0.5 * ((1.0 - expo) * (n * kLogTwoPi + log_det) - n * std::log(expo));
            out.push_back(std::move(p));
        }
        return out;
    };
    const auto pa = prepare(a, w);
    const auto pb = prepare(b, 1.0 - w);

    GaussianMixture out;
    out.components.reserve(a.size() * b.size());
    for (std::size_t i = 0; i < a.size(); ++i) {
        const Vec mean_a = a.components[i].mean;
        for (std::size_t j = 0; j < b.size(); ++j) {
            const Mat fused_info = w * pa[i].inv + (1.0 - w) * pb[j].inv;
            Eigen::LLT<Mat> llt(fused_info);
            if (llt.info() != Eigen::Success)
                throw std::domain_error("gm_geometric_mean: singular covariance combination");
            Mat cov = llt.solve(I);
            cov = ((cov + cov.transpose()) * 0.5).eval();
            const Vec mean = cov * (w * pa[i].info_mean + (1.0 - w) * pb[j].info_mean);

            double weight = 0.0;
            if (std::isfinite(pa[i].log_weight) && std::isfinite(pb[j].log_weight)) {
                const Mat spread = pa[i].scaled_cov + pb[j].scaled_cov;
                Eigen::LLT<Mat> sllt(spread);
                if (sllt.info() != Eigen::Success)
                    throw std::domain_error("gm_geometric_mean: singular spread covariance");
                double log_det = 0.0;
                for (int k = 0; k < n; ++k) log_det += 2.0 * std::log(sllt.matrixLLT()(k, k));
                const Vec d = mean_a - Vec(b.components[j].mean);
                const double mahal = d.dot(sllt.solve(d));
                const double log_g = -0.5 * (n * kLogTwoPi + log_det + mahal);
                weight = std::exp(pa[i].log_weight + pb[j].log_weight + pa[i].log_eps +
                                  pb[j].log_eps + log_g);
            }
            out.components.emplace_back(weight, mean, cov);
        }
    }
    return out;
}

}  // namespace detail

/// GM approximation of [a]^w [b]^(1-w): the cross-product mixture with
/// information-form fused means/covariances and closed-form pair weights.
/// The output is unnormalized; its total weight approximates the integral of
/// the true weighted geometric mean.
inline GaussianMixture gm_geometric_mean(const GaussianMixture& a, const GaussianMixture& b,
                                         double w) {
    if (!(w > 0.0 && w < 1.0))
        throw std::invalid_argument("gm_geometric_mean: weight must be in (0,1)");
    if (a.empty() || b.empty())
        throw std::invalid_argument("gm_geometric_mean: empty mixture");
    if (a.dim() != b.dim())
        throw std::invalid_argument("gm_geometric_mean: dimension mismatch");
    switch (a.dim()) {
        case 1: return detail::gm_geometric_mean_impl<1>(a, b, w, 1);
        case 2: return detail::gm_geometric_mean_impl<2>(a, b, w, 2);
        case 4: return detail::gm_geometric_mean_impl<4>(a, b, w, 4);
        default: return detail::gm_geometric_mean_impl<Eigen::Dynamic>(a, b, w, a.dim());
    }
}

/// GCI fusion of two augmented Bernoulli densities with exponents (w, 1-w).
///
/// All constituents fuse as normalized weighted geometric means; the per-slot
/// integrals of the unnormalized fused mixtures reweight the PMFs and the
/// existence odds. Classes or slots whose fused mass vanishes keep the first
/// input's conditional quantities as placeholders.
inline AugmentedBernoulli fuse_pair(const AugmentedBernoulli& f1, const AugmentedBernoulli& f2,
                                    double w, const ClassLibrary& lib) {
    if (!(w > 0.0 && w < 1.0)) throw std::invalid_argument("fuse_pair: weight must be in (0,1)");

    const bool f1_certain = f1.r == 0.0 || f1.r == 1.0;
    const bool f2_certain = f2.r == 0.0 || f2.r == 1.0;
    if (f1_certain && f2_certain && f1.r != f2.r) {
        detail::warn("fuse_pair: contradictory certain existence probabilities; keeping the "
                     "dominant side");
        return w >= 0.5 ? f1 : f2;
    }

    const double r_geo = std::pow(f1.r, w) * std::pow(f2.r, 1.0 - w);
    const double zeta_geo = std::pow(1.0 - f1.r, w) * std::pow(1.0 - f2.r, 1.0 - w);

    AugmentedBernoulli out;
    std::map<ClassId, double> class_mass;  // gamma_tilde(c) * sum_m beta_tilde * integral
    std::map<SlotKey, double> slot_mass;
    std::map<SlotKey, GaussianMixture> fused_slots;

    double denom = 0.0;
    for (const auto& ci : lib.classes) {
        const ClassId c = ci.id;
        const double gamma_t =
            std::pow(f1.pmf.class_prob(c), w) * std::pow(f2.pmf.class_prob(c), 1.0 - w);
        double mass_c = 0.0;
        for (ModeId m : ci.modes) {
            const SlotKey key{c, m};
            const double beta_t = std::pow(f1.pmf.mode_prob(c, m), w) *
                                  std::pow(f2.pmf.mode_prob(c, m), 1.0 - w);
            double integral = 0.0;
            if (gamma_t > 0.0 && beta_t > 0.0) {
                auto fused = gm_geometric_mean(f1.slot(c, m), f2.slot(c, m), w);
                integral = fused.total_weight();
                fused_slots[key] = std::move(fused);
            }
            slot_mass[key] = beta_t * integral;
            mass_c += beta_t * integral;
        }
        class_mass[c] = gamma_t * mass_c;
        denom += gamma_t * mass_c;
    }
    if (denom <= 0.0)
        throw std::domain_error("fuse_pair: fused density has no mass (disjoint supports)");

    out.r = (r_geo * denom) / (zeta_geo + r_geo * denom);

    for (const auto& ci : lib.classes) {
        const ClassId c = ci.id;
        out.pmf.class_pmf[c] = class_mass[c] / denom;
        auto& beta_out = out.pmf.mode_pmf[c];
        if (class_mass[c] <= 0.0) {
            beta_out = f1.pmf.mode_pmf.at(c);
            for (ModeId m : ci.modes) out.spdf[{c, m}] = f1.slot(c, m);
            continue;
        }
        double mass_c = 0.0;
        for (ModeId m : ci.modes) mass_c += slot_mass[{c, m}];
        for (ModeId m : ci.modes) {
            const SlotKey key{c, m};
            beta_out[m] = slot_mass[key] / mass_c;
            auto& slot = out.spdf[key];
            if (beta_out[m] > 0.0) {
                slot = std::move(fused_slots[key]);
                gm_normalize(slot);
            }
        }
    }
    return out;
}

namespace detail {

inline void reduce_slots(AugmentedBernoulli& d, const std::optional<ReductionPolicy>& policy) {
    if (!policy) return;
    for (auto& [key, gm] : d.spdf)
        if (!gm.empty()) gm = reduce(gm, *policy);
}

/// Left-fold of pairwise fusions over ascending ids with running weight
/// renormalization; exact for single-Gaussian single-slot densities.
inline AugmentedBernoulli fuse_weighted(const std::vector<std::pair<double, const AugmentedBernoulli*>>& inputs,
                                        const ClassLibrary& lib,
                                        const std::optional<ReductionPolicy>& policy) {
    if (inputs.empty()) throw std::invalid_argument("fuse: no densities");
    if (inputs.size() == 1) return *inputs.front().second;
    AugmentedBernoulli acc = *inputs.front().second;
    double w_acc = inputs.front().first;
    for (std::size_t k = 1; k < inputs.size(); ++k) {
        const double w_k = inputs[k].first;
        acc = fuse_pair(acc, *inputs[k].second, w_acc / (w_acc + w_k), lib);
        reduce_slots(acc, policy);
        w_acc += w_k;
    }
    return acc;
}

}  // namespace detail

/// Single-shot GCI fusion of several densities (the consensus fixed point).
inline AugmentedBernoulli fuse_all(const std::map<int, AugmentedBernoulli>& densities,
                                   const FusionWeights& weights, const ClassLibrary& lib,
                                   const std::optional<ReductionPolicy>& policy = std::nullopt) {
    double sum = 0.0;
    for (const auto& [id, w] : weights) sum += w;
    if (std::abs(sum - 1.0) > 1e-12)
        throw std::invalid_argument("fuse_all: fusion weights must sum to 1");
    std::vector<std::pair<double, const AugmentedBernoulli*>> inputs;
    for (const auto& [id, d] : densities) inputs.emplace_back(weights.at(id), &d);
    return detail::fuse_weighted(inputs, lib, policy);
}

struct ConsensusStats {
    std::size_t rounds = 0;
    std::size_t bytes_exchanged = 0;  // sum of serialized in-neighbor messages
};

/// L synchronized consensus iterations: at each, every node fuses the previous
/// iteration's densities over its in-neighborhood with its consensus weights.
inline std::map<int, AugmentedBernoulli> consensus_round(
    const std::map<int, AugmentedBernoulli>& states, const NetworkGraph& graph, int L,
    const ClassLibrary& lib, const std::optional<ReductionPolicy>& policy = std::nullopt,
    ConsensusStats* stats = nullptr) {
    if (L < 1) throw std::invalid_argument("consensus_round: L must be >= 1");
    if (graph.weights.empty())
        throw std::invalid_argument("consensus_round: graph has no consensus weights");
    if (!graph.connected())
        detail::warn("consensus_round: graph is disconnected; no network-wide convergence");
    for (int id : graph.nodes)
        if (states.find(id) == states.end())
            throw std::invalid_argument("consensus_round: missing density for node " +
                                        std::to_string(id));

    std::map<int, AugmentedBernoulli> cur = states;
    for (int l = 0; l < L; ++l) {
        std::map<int, AugmentedBernoulli> next;
        for (int i : graph.nodes) {
            const auto hood = graph.neighborhood(i);
            if (stats != nullptr)
                for (int j : hood)
                    if (j != i) stats->bytes_exchanged += serialized_size(cur.at(j), lib);
            if (hood.size() == 1) {
                next[i] = cur.at(i);
                continue;
            }
            std::vector<std::pair<double, const AugmentedBernoulli*>> inputs;
            inputs.reserve(hood.size());
            for (int j : hood) inputs.emplace_back(graph.weights.at(i).at(j), &cur.at(j));
            next[i] = detail::fuse_weighted(inputs, lib, policy);
        }
        cur = std::move(next);
        if (stats != nullptr) ++stats->rounds;
    }
    return cur;
}

}  // namespace jdtc
