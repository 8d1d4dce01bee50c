#pragma once

// Monte Carlo cost of an admissible (possibly randomized) history-dependent
// policy in the mean field game. The policy sees the suggestion, its own
// state history and the flow prefix revealed so far, plus a private stream
// for randomization.

#include "cmfg/dpp.hpp"
#include "cmfg/rng.hpp"

#include <cmath>
#include <functional>

namespace cmfg {

/// Policy sampler: (rng, suggested strategy, t, own history, flow prefix
/// entries 0..t) -> action.
using PolicySampler =
    std::function<int(RngStream&, const RestrictedStrategy&, int t, const std::vector<int>& xhist,
                      const MeasureFlow<double>& flow, int visible_upto)>;

struct McEstimate {
    double mean = 0.0;
    double stderr_ = 0.0;
    long long reps = 0;
};

/// Follow-the-suggestion policy.
inline PolicySampler identity_policy() {
    return [](RngStream&, const RestrictedStrategy& phi, int t, const std::vector<int>& xh,
              const MeasureFlow<double>&, int) { return phi(t, xh.back()); };
}

template <typename Fn>
McEstimate mc_accumulate(long long reps, Fn&& one_rep) {
    if (reps < 2) throw input_error("mc: need reps >= 2");
    double sum = 0.0, sumsq = 0.0;
    for (long long r = 0; r < reps; ++r) {
        double c = one_rep(r);
        sum += c;
        sumsq += c * c;
    }
    McEstimate e;
    e.reps = reps;
    e.mean = sum / static_cast<double>(reps);
    double var = (sumsq - sum * sum / static_cast<double>(reps)) / static_cast<double>(reps - 1);
    e.stderr_ = std::sqrt(std::max(var, 0.0) / static_cast<double>(reps));
    return e;
}

/// Monte Carlo estimate of the policy's cost in the mean field game.
inline McEstimate mc_policy_cost(const GameSpec<double>& g, const SuggestionAtoms<double>& rho,
                                 const PolicySampler& policy, long long reps, RngStream root) {
    const int T = rho.horizon();
    // Cumulative weights over atoms for the (phi, mu) draw.
    std::vector<double> cum;
    double acc = 0.0;
    for (const auto& a : rho.atoms()) {
        acc += a.weight;
        cum.push_back(acc);
    }
    auto m0cum = noise_partition(g.initial);

    return mc_accumulate(reps, [&](long long r) {
        RngStream rs = root.derive(static_cast<std::uint64_t>(r));
        RngStream draw = rs.derive(0);
        RngStream policy_rng = rs.derive(1);
        RngStream noise = rs.derive(2);
        int atom = sample_index(cum, draw.uniform() * acc);
        const auto& phi = rho.atoms()[atom].strategy;
        const auto& flow = rho.atoms()[atom].flow;
        std::vector<int> xh{sample_index(m0cum, draw.uniform())};
        double cost = 0.0;
        for (int t = 0; t < T; ++t) {
            int a = policy(policy_rng, phi, t, xh, flow, t);
            if (a < 0 || a >= g.n_actions()) throw input_error("mc: policy returned bad action");
            cost += g.running(t, xh.back(), flow[t], a);
            RngStream step = noise.derive(t);
            xh.push_back(sample_next(g, step, t, xh.back(), flow[t], a));
        }
        return cost + g.terminal(xh.back(), flow[T]);
    });
}

}  // namespace cmfg
