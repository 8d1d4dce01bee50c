#pragma once

// The conditional flow chain P_phi: support, prefix tree of flow prefixes,
// conditional one-step probabilities on tree edges, and marginals. Flow
// prefixes shared across atoms are interned into one node per distinct
// prefix value.

#include "cmfg/strategy.hpp"

#include <vector>

namespace cmfg {

template <typename S>
class ConditionalChain {
  public:
    struct Node {
        int t = 0;              // time of the last entry of the prefix
        int parent = -1;        // -1 for roots at t = 0
        int flow_rep = 0;       // index of some member flow; dist at s is flows[flow_rep][s]
        S marginal;             // P_phi(mu^{(t)} = this prefix)
        std::vector<int> members;              // flow indices passing through
        std::vector<std::pair<int, S>> edges;  // (child node, P_phi(mu_{t+1} | prefix))
    };

    ConditionalChain(RestrictedStrategy phi, S phi_mass, std::vector<MeasureFlow<S>> flows,
                     std::vector<S> flow_prob)
        : phi_(std::move(phi)), phi_mass_(std::move(phi_mass)), flows_(std::move(flows)),
          flow_prob_(std::move(flow_prob)) {
        build();
    }

    const RestrictedStrategy& phi() const { return phi_; }
    const S& phi_mass() const { return phi_mass_; }
    int horizon() const { return flows_.front().horizon(); }
    const std::vector<MeasureFlow<S>>& flows() const { return flows_; }
    const S& flow_prob(int f) const { return flow_prob_[f]; }
    int support_size() const { return static_cast<int>(flows_.size()); }

    const Node& node(int id) const { return nodes_[id]; }
    int n_nodes() const { return static_cast<int>(nodes_.size()); }
    const std::vector<int>& roots() const { return roots_; }
    const std::vector<int>& layer(int t) const { return layers_[t]; }

    /// Distribution at time s along the prefix ending at `id` (s <= node.t).
    const FiniteDist<S>& dist_at(int id, int s) const {
        return flows_[nodes_[id].flow_rep][s];
    }

    /// Node of the prefix m^{(t)} of flow f.
    int node_of_flow(int f, int t) const { return flow_nodes_[f][t]; }

    /// Leaf-level node of flow f (t = T).
    int leaf_of_flow(int f) const { return flow_nodes_[f][horizon()]; }

  private:
    void build() {
        int T = horizon();
        layers_.assign(T + 1, {});
        flow_nodes_.assign(flows_.size(), std::vector<int>(T + 1, -1));
        // Layer 0: group flows by their time-0 entry.
        std::vector<int> all(flows_.size());
        for (int f = 0; f < static_cast<int>(flows_.size()); ++f) all[f] = f;
        group_children(-1, all, 0);
        for (int t = 0; t < T; ++t)
            for (int id : layers_[t]) group_children(id, nodes_[id].members, t + 1);
    }

    // Partition `members` by the value of their flow at time t and append
    // one node per group (children of `parent` when parent >= 0).
    void group_children(int parent, const std::vector<int>& members, int t) {
        std::vector<std::vector<int>> groups;
        for (int f : members) {
            bool placed = false;
            for (auto& grp : groups)
                if (flows_[grp.front()][t] == flows_[f][t]) {
                    grp.push_back(f);
                    placed = true;
                    break;
                }
            if (!placed) groups.push_back({f});
        }
        S parent_mass = parent < 0 ? phi_norm() : nodes_[parent].marginal;
        for (auto& grp : groups) {
            Node n;
            n.t = t;
            n.parent = parent;
            n.flow_rep = grp.front();
            n.members = grp;
            S mass = scalar_traits<S>::zero();
            for (int f : grp) mass += flow_prob_[f];
            n.marginal = mass;
            int id = static_cast<int>(nodes_.size());
            nodes_.push_back(std::move(n));
            layers_[t].push_back(id);
            for (int f : grp) flow_nodes_[f][t] = id;
            if (parent < 0)
                roots_.push_back(id);
            else
                nodes_[parent].edges.emplace_back(id, mass / parent_mass);
        }
    }

    S phi_norm() const {
        S acc = scalar_traits<S>::zero();
        for (const S& p : flow_prob_) acc += p;
        return acc;
    }

    RestrictedStrategy phi_;
    S phi_mass_;
    std::vector<MeasureFlow<S>> flows_;
    std::vector<S> flow_prob_;  // P_phi(mu = m), sums to 1
    std::vector<Node> nodes_;
    std::vector<int> roots_;
    std::vector<std::vector<int>> layers_;      // per t, node ids
    std::vector<std::vector<int>> flow_nodes_;  // [flow][t] -> node id
};

/// Conditional chain of rho given Phi = phi. Throws if phi has zero mass.
template <typename S>
ConditionalChain<S> conditional_chain(const SuggestionAtoms<S>& rho, const RestrictedStrategy& phi) {
    using tr = scalar_traits<S>;
    std::vector<MeasureFlow<S>> flows;
    std::vector<S> mass;
    S total = tr::zero();
    for (const auto& a : rho.atoms()) {
        if (a.strategy != phi) continue;
        total += a.weight;
        bool found = false;
        for (int i = 0; i < static_cast<int>(flows.size()); ++i)
            if (flows[i] == a.flow) {
                mass[i] += a.weight;
                found = true;
                break;
            }
        if (!found) {
            flows.push_back(a.flow);
            mass.push_back(a.weight);
        }
    }
    if (flows.empty() || total <= tr::zero())
        throw input_error("conditional_chain: strategy has zero mass under rho");
    for (S& p : mass) p = p / total;
    return ConditionalChain<S>(phi, total, std::move(flows), std::move(mass));
}

}  // namespace cmfg
