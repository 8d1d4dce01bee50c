#pragma once

// The four checks on a candidate correlated solution: the (R1) structure
// check, the (R2) conditional-independence factorization, the consistency
// condition (Con), and the optimality condition (Opt) via the conditional
// DPP. All equalities are exact in rational mode.

#include "cmfg/dpp.hpp"

#include <sstream>
#include <string>
#include <vector>

#include "json.hpp"

namespace cmfg {

struct CheckReport {
    std::string name;
    bool pass = true;
    std::vector<std::string> notes;
    std::vector<std::string> witnesses;
    std::vector<std::pair<std::string, std::string>> figures;  // label -> exact value string

    void fail(std::string witness) {
        pass = false;
        witnesses.push_back(std::move(witness));
    }

    nlohmann::json to_json() const {
        nlohmann::json j;
        j["check"] = name;
        j["pass"] = pass;
        j["notes"] = notes;
        j["witnesses"] = witnesses;
        nlohmann::json figs = nlohmann::json::object();
        for (const auto& [k, v] : figures) figs[k] = v;
        j["figures"] = figs;
        return j;
    }
};

/// (R1): finite atom list, positive normalized weights, and all-positive
/// conditional flow probabilities for every suggestion of positive mass.
template <typename S>
CheckReport validate_r1(const SuggestionAtoms<S>& rho, const Tols& tols = {}) {
    using tr = scalar_traits<S>;
    CheckReport rep;
    rep.name = "R1";
    S sum = tr::zero();
    for (int i = 0; i < rho.size(); ++i) {
        const auto& a = rho.atoms()[i];
        if (a.weight <= tr::zero()) {
            std::ostringstream os;
            os << "atom #" << i << " has non-positive weight " << tr::str(a.weight);
            rep.fail(os.str());
        }
        sum += a.weight;
    }
    if (!tr::eq(sum, tr::one(), tols))
        rep.fail("weights sum to " + tr::str(sum) + ", expected 1");
    if (!rep.pass) return rep;

    for (const auto& [phi, mass] : rho.strategy_marginal()) {
        ConditionalChain<S> chain = conditional_chain(rho, phi);
        std::ostringstream key;
        key << "|P_phi| (mass " << tr::str(mass) << ")";
        rep.figures.emplace_back(key.str(), std::to_string(chain.support_size()));
        for (int f = 0; f < chain.support_size(); ++f)
            if (chain.flow_prob(f) <= tr::zero()) {
                std::ostringstream os;
                os << "conditional flow probability not positive for flow #" << f;
                rep.fail(os.str());
            }
    }
    return rep;
}

namespace detail {

/// Key for grouping flows by the value of their prefix 0..t.
template <typename S>
int find_prefix_group(std::vector<std::pair<const MeasureFlow<S>*, int>>& groups,
                      const MeasureFlow<S>& flow, int upto) {
    for (auto& [rep_flow, id] : groups)
        if (rep_flow->prefix_equal(flow, upto)) return id;
    groups.emplace_back(&flow, static_cast<int>(groups.size()));
    return groups.back().second;
}

}  // namespace detail

/// (R2) via its factorization consequence: for each t, Phi^{(t)} and mu are
/// conditionally independent given mu^{(t+1)}. Tested exactly over the
/// finite support.
template <typename S>
CheckReport check_r2(const SuggestionAtoms<S>& rho, const Tols& tols = {}) {
    using tr = scalar_traits<S>;
    CheckReport rep;
    rep.name = "R2";
    CheckReport r1 = validate_r1(rho, tols);
    if (!r1.pass) {
        rep.fail("precondition failed: R1 does not hold");
        return rep;
    }
    const int T = rho.horizon();
    for (int t = 0; t < T; ++t) {
        // Group atoms by the value of mu^{(t+1)}, the conditioning event.
        std::vector<std::pair<const MeasureFlow<S>*, int>> prefix_groups;
        std::vector<int> atom_group(rho.size());
        for (int i = 0; i < rho.size(); ++i)
            atom_group[i] = detail::find_prefix_group(prefix_groups, rho.atoms()[i].flow, t + 1);
        int n_groups = static_cast<int>(prefix_groups.size());

        for (int gid = 0; gid < n_groups; ++gid) {
            // Within the group: joint over (restriction class of Phi up to t,
            // full flow value), then test exact factorization.
            std::vector<std::vector<int>> phi_classes;  // restriction tables
            std::vector<const MeasureFlow<S>*> flow_vals;
            auto class_of = [&](const RestrictedStrategy& s) {
                std::vector<int> r = s.restriction(t);
                for (int c = 0; c < static_cast<int>(phi_classes.size()); ++c)
                    if (phi_classes[c] == r) return c;
                phi_classes.push_back(std::move(r));
                return static_cast<int>(phi_classes.size()) - 1;
            };
            auto flow_of = [&](const MeasureFlow<S>& m) {
                for (int f = 0; f < static_cast<int>(flow_vals.size()); ++f)
                    if (*flow_vals[f] == m) return f;
                flow_vals.push_back(&m);
                return static_cast<int>(flow_vals.size()) - 1;
            };
            std::map<std::pair<int, int>, S> joint;
            std::map<int, S> marg_phi, marg_mu;
            S mass = tr::zero();
            for (int i = 0; i < rho.size(); ++i) {
                if (atom_group[i] != gid) continue;
                const auto& a = rho.atoms()[i];
                int c = class_of(a.strategy), f = flow_of(a.flow);
                joint[{c, f}] += a.weight;
                marg_phi[c] += a.weight;
                marg_mu[f] += a.weight;
                mass += a.weight;
            }
            if (mass <= tr::zero()) {
                rep.notes.push_back("zero-probability prefix skipped at t=" + std::to_string(t));
                continue;
            }
            for (const auto& [c, wc] : marg_phi)
                for (const auto& [f, wf] : marg_mu) {
                    S lhs = tr::zero();
                    auto it = joint.find({c, f});
                    if (it != joint.end()) lhs = it->second;
                    // P(c, f | G) = P(c | G) P(f | G)  <=>  lhs * mass = wc * wf
                    if (!tr::close(lhs * mass, wc * wf, tols)) {
                        std::ostringstream os;
                        os << "factorization fails at t=" << t << " (prefix group " << gid
                           << "): P(joint)=" << tr::str(lhs / mass)
                           << " vs P(phi^(t))*P(mu)=" << tr::str((wc / mass) * (wf / mass));
                        rep.fail(os.str());
                    }
                }
        }
    }
    return rep;
}

/// (Con): for every flow atom m, P(X_t = . | mu = m) computed by Bayes over
/// the exact joint laws aggregated across suggestions equals m_t.
template <typename S>
CheckReport check_consistency(const GameSpec<S>& g, const SuggestionAtoms<S>& rho,
                              const Tols& tols = {}) {
    using tr = scalar_traits<S>;
    CheckReport rep;
    rep.name = "Con";
    const int T = rho.horizon();
    const int nx = g.n_states();

    // Per-suggestion forward laws under the identity modification.
    struct Branch {
        ConditionalChain<S> chain;
        JointLaw<S> law;
        S mass;
    };
    std::vector<Branch> branches;
    for (const auto& [phi, mass] : rho.strategy_marginal()) {
        ConditionalChain<S> chain = conditional_chain(rho, phi);
        auto fwd = forward_chain(g, chain, DeviationMap<S>::identity().rule_for(phi));
        branches.push_back({std::move(chain), std::move(fwd.law), mass});
    }

    int flow_idx = 0;
    for (const auto& [flow, flow_mass] : rho.flow_marginal()) {
        if (flow_mass <= tr::zero()) throw input_error("check_consistency: zero-probability flow");
        for (int t = 0; t <= T; ++t) {
            std::vector<S> acc(nx, tr::zero());
            S denom = tr::zero();
            for (const auto& b : branches) {
                for (int f = 0; f < b.chain.support_size(); ++f) {
                    if (b.chain.flows()[f] != flow) continue;
                    // P(Phi = phi, mu = m) * P_phi(X_t | mu^{(t)} node of m)
                    S w = b.mass * b.chain.flow_prob(f);
                    FiniteDist<S> marg =
                        state_marginal_at(b.law, t, b.chain.node_of_flow(f, t), nx);
                    for (int x = 0; x < nx; ++x) acc[x] += w * marg[x];
                    denom += w;
                }
            }
            for (int x = 0; x < nx; ++x) {
                if (!tr::close(acc[x], flow[t][x] * denom, tols)) {
                    std::ostringstream os;
                    os << "(Con) fails at t=" << t << ", flow #" << flow_idx << ", state "
                       << g.state_names[x] << ": flow says " << tr::str(flow[t][x])
                       << ", conditional law gives " << tr::str(acc[x] / denom);
                    rep.fail(os.str());
                }
            }
        }
        ++flow_idx;
    }
    return rep;
}

template <typename S>
struct OptimalityResult {
    CheckReport report;
    S j_identity;     // J(rho, identity)
    S value_optimum;  // sum_phi P(phi) E[V_phi(0, .)]
    S gap;            // j_identity - value_optimum >= 0
};

/// (Opt): obeying the mediator attains the conditional DPP optimum:
/// J(rho, identity) = sum_phi P(Phi=phi) E_{x0~m0}[V_phi(0, x0)].
/// On failure the witnesses list the argmin table entries where the optimal
/// action differs from the suggestion.
template <typename S>
OptimalityResult<S> check_optimality(const GameSpec<S>& g, const SuggestionAtoms<S>& rho,
                                     const Tols& tols = {}) {
    using tr = scalar_traits<S>;
    OptimalityResult<S> out;
    out.report.name = "Opt";
    out.j_identity = evaluate_J(g, rho, DeviationMap<S>::identity());
    out.value_optimum = tr::zero();

    int branch = 0;
    std::vector<std::string> deviations;
    for (const auto& [phi, mass] : rho.strategy_marginal()) {
        ValueTable<S> table = dpp_solve(g, rho, phi, tols);
        if (table.a1_warning())
            out.report.notes.push_back("(A1) fails on the solution flows; conditionals may be fragile");
        out.value_optimum += mass * table.expected_initial(g.initial);
        for (int t = 0; t < table.horizon(); ++t)
            for (const auto& [key, e] : table.layer(t)) {
                std::vector<int> xh = detail::decode_xhist(key.second, t + 1, g.n_states());
                int suggested = phi(t, xh.back());
                if (e.argmin != suggested && !e.tie) {
                    std::ostringstream os;
                    os << "branch #" << branch << ": t=" << t << " x-hist=(";
                    for (size_t i = 0; i < xh.size(); ++i)
                        os << (i ? "," : "") << g.state_names[xh[i]];
                    os << ") flow-node=" << key.first << " suggested " << g.action_names[suggested]
                       << " but optimal is " << g.action_names[e.argmin];
                    deviations.push_back(os.str());
                }
            }
        ++branch;
    }
    out.gap = out.j_identity - out.value_optimum;
    out.report.figures.emplace_back("J(identity)", tr::str(out.j_identity));
    out.report.figures.emplace_back("sum_phi P(phi) E[V_phi(0)]", tr::str(out.value_optimum));
    out.report.figures.emplace_back("gap", tr::str(out.gap));
    if (!tr::close(out.j_identity, out.value_optimum, tols)) {
        out.report.pass = false;
        out.report.witnesses = std::move(deviations);
        if (out.report.witnesses.empty())
            out.report.witnesses.push_back("gap positive but all argmin differences are ties");
    }
    return out;
}

}  // namespace cmfg
