#pragma once

// The conditional dynamic programming principle over the joint history tree
// (own state history x^{(t)}, flow prefix m^{(t)}) for a fixed suggestion
// phi, plus the exact forward joint law and the cost functional J.
//
// State and flow advance conditionally independently given the current
// node: state transitions use the kernel at the rule's action, flow
// transitions use the conditional chain edges.

#include "cmfg/chain.hpp"
#include "cmfg/game.hpp"

#include <cstdint>
#include <functional>
#include <map>
#include <sstream>
#include <vector>

namespace cmfg {

/// View of a flow prefix m^{(t)} as a chain node; rules can read entries
/// only up to their time, which enforces progressive measurability.
template <typename S>
class FlowPrefix {
  public:
    FlowPrefix(const ConditionalChain<S>* chain, int node) : chain_(chain), node_(node) {}
    int t() const { return chain_->node(node_).t; }
    int node_id() const { return node_; }
    const ConditionalChain<S>& chain() const { return *chain_; }
    const FiniteDist<S>& dist(int s) const {
        if (s < 0 || s > t()) throw input_error("FlowPrefix: entry beyond current time");
        return chain_->dist_at(node_, s);
    }

  private:
    const ConditionalChain<S>* chain_;
    int node_;
};

/// Action rule on the joint history tree of one suggestion branch.
template <typename S>
using ProgressiveRule =
    std::function<int(int t, const std::vector<int>& xhist, const FlowPrefix<S>& prefix)>;

/// Map from the mediator's recommendation to the progressive strategy
/// actually played. The identity map is "obey the mediator".
template <typename S>
struct DeviationMap {
    std::function<int(const RestrictedStrategy&, int t, const std::vector<int>& xhist,
                      const FlowPrefix<S>& prefix)>
        act;

    static DeviationMap identity() {
        DeviationMap d;
        d.act = [](const RestrictedStrategy& phi, int t, const std::vector<int>& xh,
                   const FlowPrefix<S>&) { return phi(t, xh.back()); };
        return d;
    }

    ProgressiveRule<S> rule_for(const RestrictedStrategy& phi) const {
        auto f = act;
        return [f, phi](int t, const std::vector<int>& xh, const FlowPrefix<S>& pfx) {
            return f(phi, t, xh, pfx);
        };
    }
};

namespace detail {

inline std::vector<int> decode_xhist(std::uint64_t code, int len, int nx) {
    std::vector<int> xs(len);
    for (int i = 0; i < len; ++i) {
        xs[i] = static_cast<int>(code % nx);
        code /= nx;
    }
    return xs;
}

inline std::uint64_t push_state(std::uint64_t code, int len, int nx, int y) {
    std::uint64_t p = 1;
    for (int i = 0; i < len; ++i) p *= nx;
    return code + p * static_cast<std::uint64_t>(y);
}

}  // namespace detail

/// Exact joint forward law over (x-history, flow-prefix) nodes per layer.
template <typename S>
struct JointLaw {
    using Key = std::pair<int, std::uint64_t>;  // (chain node id, x-history code)
    std::vector<std::map<Key, S>> layers;       // index t = 0..T
};

template <typename S>
struct ForwardResult {
    JointLaw<S> law;
    S expected_cost;  // E_phi[sum_t f + F] under the rule
};

template <typename S>
int checked_action(const ProgressiveRule<S>& rule, int t, const std::vector<int>& xh,
                   const FlowPrefix<S>& pfx, int n_actions) {
    int a = rule(t, xh, pfx);
    if (a < 0 || a >= n_actions) {
        std::ostringstream os;
        os << "deviation undefined (action " << a << ") at t=" << t;
        throw input_error(os.str());
    }
    return a;
}

/// Forward pass of the joint chain under `rule`, also accumulating the
/// expected cost.
template <typename S>
ForwardResult<S> forward_chain(const GameSpec<S>& g, const ConditionalChain<S>& chain,
                               const ProgressiveRule<S>& rule) {
    using tr = scalar_traits<S>;
    const int T = chain.horizon();
    const int nx = g.n_states();
    ForwardResult<S> out;
    out.law.layers.assign(T + 1, {});
    out.expected_cost = tr::zero();

    for (int root : chain.roots())
        for (int x0 = 0; x0 < nx; ++x0) {
            S p = chain.node(root).marginal * g.initial[x0];
            if (p > tr::zero()) out.law.layers[0][{root, static_cast<std::uint64_t>(x0)}] = p;
        }

    for (int t = 0; t <= T; ++t) {
        for (const auto& [key, prob] : out.law.layers[t]) {
            auto [nid, xcode] = key;
            std::vector<int> xh = detail::decode_xhist(xcode, t + 1, nx);
            const FiniteDist<S>& mt = chain.dist_at(nid, t);
            if (t == T) {
                out.expected_cost += prob * g.terminal(xh.back(), mt);
                continue;
            }
            FlowPrefix<S> pfx(&chain, nid);
            int a = checked_action(rule, t, xh, pfx, g.n_actions());
            out.expected_cost += prob * g.running(t, xh.back(), mt, a);
            FiniteDist<S> law = transition(g, t, xh.back(), mt, a);
            for (const auto& [child, pe] : chain.node(nid).edges)
                for (int y = 0; y < nx; ++y) {
                    S q = prob * law[y] * pe;
                    if (q > tr::zero())
                        out.law.layers[t + 1][{child, detail::push_state(xcode, t + 1, nx, y)}] += q;
                }
        }
    }
    return out;
}

/// Joint law under the given deviation (identity by default).
template <typename S>
JointLaw<S> state_chain(const GameSpec<S>& g, const SuggestionAtoms<S>& rho,
                        const RestrictedStrategy& phi,
                        const DeviationMap<S>& dev = DeviationMap<S>::identity()) {
    ConditionalChain<S> chain = conditional_chain(rho, phi);
    return forward_chain(g, chain, dev.rule_for(phi)).law;
}

/// P_phi(X_t = x | mu^{(t)} = prefix at `node`), read off a joint law.
/// By conditional independence of the state history and the future flow
/// given the prefix, this equals P_phi(X_t = x | mu = m) for every flow m
/// through the node.
template <typename S>
FiniteDist<S> state_marginal_at(const JointLaw<S>& law, int t, int node, int nx) {
    using tr = scalar_traits<S>;
    std::vector<S> w(nx, tr::zero());
    S total = tr::zero();
    std::uint64_t stride = 1;
    for (int i = 0; i < t; ++i) stride *= nx;
    for (const auto& [key, p] : law.layers[t]) {
        if (key.first != node) continue;
        w[static_cast<int>(key.second / stride)] += p;
        total += p;
    }
    if (total <= tr::zero()) throw input_error("state_marginal_at: node has zero mass");
    for (S& x : w) x = x / total;
    return FiniteDist<S>(std::move(w));
}

/// Cost functional J(m_0, rho, w) for a deviation map w.
template <typename S>
S evaluate_J(const GameSpec<S>& g, const SuggestionAtoms<S>& rho, const DeviationMap<S>& dev) {
    using tr = scalar_traits<S>;
    S acc = tr::zero();
    for (const auto& [phi, mass] : rho.strategy_marginal()) {
        ConditionalChain<S> chain = conditional_chain(rho, phi);
        acc += mass * forward_chain(g, chain, dev.rule_for(phi)).expected_cost;
    }
    return acc;
}

/// Conditional value function over the joint history tree of one branch.
template <typename S>
class ValueTable {
  public:
    struct Entry {
        S value;
        int argmin = -1;  // terminal layer has no action
        bool tie = false;
    };
    using Key = std::pair<int, std::uint64_t>;

    ValueTable(ConditionalChain<S> chain, const GameSpec<S>* g, const Tols& tols)
        : chain_(std::move(chain)), tols_(tols) {
        solve(*g);
    }

    const ConditionalChain<S>& chain() const { return chain_; }
    bool a1_warning() const { return a1_warning_; }
    int horizon() const { return chain_.horizon(); }

    const Entry& at(int t, int node, std::uint64_t xcode) const {
        auto it = layers_[t].find({node, xcode});
        if (it == layers_[t].end()) throw input_error("ValueTable: node absent (unreachable)");
        return it->second;
    }
    const std::map<Key, Entry>& layer(int t) const { return layers_[t]; }

    /// E_{x0 ~ m0}[V(0, x0)], mixing over chain roots.
    S expected_initial(const FiniteDist<S>& m0) const {
        using tr = scalar_traits<S>;
        S acc = tr::zero();
        for (int root : chain_.roots())
            for (int x0 = 0; x0 < m0.size(); ++x0)
                acc += chain_.node(root).marginal * m0[x0] *
                       at(0, root, static_cast<std::uint64_t>(x0)).value;
        return acc;
    }

    /// Recompute the recursion at every interior node from stored children
    /// and compare with the stored values.
    bool reverify(const GameSpec<S>& g) const {
        for (int t = 0; t <= horizon(); ++t)
            for (const auto& [key, e] : layers_[t]) {
                Entry r = compute_entry(g, t, key.first, key.second);
                if (!scalar_traits<S>::eq(r.value, e.value, tols_) || r.argmin != e.argmin ||
                    r.tie != e.tie)
                    return false;
            }
        return true;
    }

  private:
    void solve(const GameSpec<S>& g) {
        using tr = scalar_traits<S>;
        const int T = horizon();
        const int nx = g.n_states();
        // (A1) diagnostic over the chain's interior distributions.
        std::vector<FiniteDist<S>> dists;
        for (int t = 0; t < T; ++t)
            for (int id : chain_.layer(t)) dists.push_back(chain_.dist_at(id, t));
        a1_warning_ = !check_nondegeneracy(g, dists).pass;

        // Forward reachability: a (node, xhist) is reachable when some
        // action sequence gives it positive probability.
        layers_.assign(T + 1, {});
        for (int root : chain_.roots())
            for (int x0 = 0; x0 < nx; ++x0)
                if (g.initial[x0] > tr::zero())
                    layers_[0].emplace(Key{root, static_cast<std::uint64_t>(x0)}, Entry{});
        for (int t = 0; t < T; ++t)
            for (const auto& [key, unused] : layers_[t]) {
                auto [nid, xcode] = key;
                int xt = static_cast<int>(detail::decode_xhist(xcode, t + 1, nx).back());
                const FiniteDist<S>& mt = chain_.dist_at(nid, t);
                for (int a = 0; a < g.n_actions(); ++a) {
                    FiniteDist<S> law = transition(g, t, xt, mt, a);
                    for (const auto& [child, pe] : chain_.node(nid).edges)
                        for (int y = 0; y < nx; ++y)
                            if (law[y] > tr::zero() && pe > tr::zero())
                                layers_[t + 1].emplace(
                                    Key{child, detail::push_state(xcode, t + 1, nx, y)}, Entry{});
                }
            }
        // Backward induction.
        for (int t = T; t >= 0; --t)
            for (auto& [key, e] : layers_[t]) e = compute_entry(g, t, key.first, key.second);
    }

    Entry compute_entry(const GameSpec<S>& g, int t, int nid, std::uint64_t xcode) const {
        using tr = scalar_traits<S>;
        const int nx = g.n_states();
        std::vector<int> xh = detail::decode_xhist(xcode, t + 1, nx);
        const FiniteDist<S>& mt = chain_.dist_at(nid, t);
        if (t == horizon()) return Entry{g.terminal(xh.back(), mt), -1, false};
        std::vector<S> q;
        q.reserve(g.n_actions());
        for (int a = 0; a < g.n_actions(); ++a) {
            S acc = g.running(t, xh.back(), mt, a);
            FiniteDist<S> law = transition(g, t, xh.back(), mt, a);
            for (const auto& [child, pe] : chain_.node(nid).edges)
                for (int y = 0; y < nx; ++y)
                    if (law[y] > tr::zero() && pe > tr::zero())
                        acc += law[y] * pe * at(t + 1, child, detail::push_state(xcode, t + 1, nx, y)).value;
            q.push_back(acc);
        }
        Entry e;
        e.value = q[0];
        for (int a = 1; a < static_cast<int>(q.size()); ++a)
            if (q[a] < e.value) e.value = q[a];
        int hits = 0;
        for (int a = static_cast<int>(q.size()) - 1; a >= 0; --a)
            if (tr::close(q[a], e.value, tols_)) {
                e.argmin = a;  // lowest index among (tolerance-)minima
                ++hits;
            }
        e.tie = hits > 1;
        return e;
    }

    ConditionalChain<S> chain_;
    Tols tols_;
    bool a1_warning_ = false;
    std::vector<std::map<Key, Entry>> layers_;
};

/// Backward induction for the conditional value function of one branch.
template <typename S>
ValueTable<S> dpp_solve(const GameSpec<S>& g, const SuggestionAtoms<S>& rho,
                        const RestrictedStrategy& phi, const Tols& tols = {}) {
    return ValueTable<S>(conditional_chain(rho, phi), &g, tols);
}

}  // namespace cmfg
