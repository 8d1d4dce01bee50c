#pragma once

// The two-state instance: builders for the game and the eight-atom candidate
// suggestion rho(beta, c0, c1), the closed-form flows, and the window-scan
// oracle that maps out the feasible (c0, c1) region by exact verification.

#include "cmfg/verify.hpp"

#include <array>
#include <string>
#include <vector>

namespace cmfg {

template <typename S>
struct ToyParams {
    S beta;  // in (0, 1/4); gamma := 1/4 - beta
    S c0;    // > 0
    S c1;    // > 0

    static ToyParams parse(const std::string& b, const std::string& c0s, const std::string& c1s) {
        using tr = scalar_traits<S>;
        return ToyParams{tr::parse(b), tr::parse(c0s), tr::parse(c1s)};
    }

    // Boundary cost values (c0 = 0 or c1 = 0) are accepted as inputs: they
    // violate the feasibility window, and the point of the verifier is to
    // report that rather than refuse the question.
    void validate() const {
        using tr = scalar_traits<S>;
        if (!(beta > tr::zero() && beta < tr::from_ratio(1, 4)))
            throw input_error("toy: beta must lie in (0, 1/4)");
        if (c0 < tr::zero()) throw input_error("toy: c0 must be nonnegative");
        if (c1 < tr::zero()) throw input_error("toy: c1 must be nonnegative");
    }

    S gamma() const { return scalar_traits<S>::from_ratio(1, 4) - beta; }
};

/// T=2, X={+1,-1}, actions {0,1}; action 0 stays with probability 1/2,
/// action 1 stays with probability 3/4. Running cost c0*(1-t)*a + t*(c1*a -
/// x*M(m)), terminal cost -x*M(m).
template <typename S>
GameSpec<S> toy_game(const ToyParams<S>& p) {
    using tr = scalar_traits<S>;
    p.validate();
    GameSpec<S> g;
    g.horizon = 2;
    g.state_names = {"+1", "-1"};
    g.action_names = {"0", "1"};
    g.state_values = {tr::one(), -tr::one()};
    g.initial = FiniteDist<S>::uniform(2);
    g.kernel_m_independent = true;
    g.kernel = [](int, int x, const FiniteDist<S>&, int a) {
        S stay = a == 0 ? tr::from_ratio(1, 2) : tr::from_ratio(3, 4);
        std::vector<S> w(2);
        w[x] = stay;
        w[1 - x] = tr::one() - stay;
        return FiniteDist<S>(std::move(w));
    };
    std::vector<S> vals = g.state_values;
    S c0 = p.c0, c1 = p.c1;
    g.running = [c0, c1, vals](int t, int x, const FiniteDist<S>& m, int a) {
        S act = a == 0 ? tr::zero() : tr::one();
        if (t == 0) return c0 * act;
        return c1 * act - vals[x] * mean_under(vals, m);
    };
    g.terminal = [vals](int x, const FiniteDist<S>& m) { return -vals[x] * mean_under(vals, m); };
    return g;
}

namespace toy_detail {

template <typename S>
FiniteDist<S> two_state(S plus_mass) {
    std::vector<S> w{plus_mass, scalar_traits<S>::one() - plus_mass};
    return FiniteDist<S>(std::move(w));
}

}  // namespace toy_detail

/// Strategy tables (t, x) -> action for the five named suggestions.
/// State index 0 is +1, index 1 is -1.
inline RestrictedStrategy toy_phi0() { return RestrictedStrategy(2, 2, {0, 0, 0, 0}); }
inline RestrictedStrategy toy_phi_plus() { return RestrictedStrategy(2, 2, {1, 0, 1, 0}); }
inline RestrictedStrategy toy_phi_minus() { return RestrictedStrategy(2, 2, {0, 1, 0, 1}); }
inline RestrictedStrategy toy_phihat_plus() { return RestrictedStrategy(2, 2, {1, 0, 0, 0}); }
inline RestrictedStrategy toy_phihat_minus() { return RestrictedStrategy(2, 2, {0, 1, 0, 0}); }

inline const std::vector<std::pair<std::string, RestrictedStrategy>>& toy_strategy_names() {
    static const std::vector<std::pair<std::string, RestrictedStrategy>> names = {
        {"phi0", toy_phi0()},
        {"phi+", toy_phi_plus()},
        {"phi-", toy_phi_minus()},
        {"phihat+", toy_phihat_plus()},
        {"phihat-", toy_phihat_minus()},
    };
    return names;
}

/// The four-parameter suggestion with weights (b1, b2, b3, b4) summing to
/// 1/2: b1 on (phi+-, m+-), b2 on (phi0, m+-), b3 on (phihat+-, mhat+-),
/// b4 on (phi0, mhat+-). Flows follow the closed forms
///   m1+ = (5 b1 + 4 b2) / (8 (b1 + b2)) on +1,
///   m2+ = (21 b1 + 16 b2) / (32 (b1 + b2)) on +1,
/// with mirrored minus versions, and mhat+- = (m0, m1+-, m0).
template <typename S>
SuggestionAtoms<S> toy_rho4(const S& b1, const S& b2, const S& b3, const S& b4) {
    using tr = scalar_traits<S>;
    for (const S* b : {&b1, &b2, &b3, &b4})
        if (!(*b > tr::zero())) throw input_error("toy_rho4: weights must be positive");
    if (b1 + b2 + b3 + b4 != tr::from_ratio(1, 2)) {
        if constexpr (scalar_traits<S>::exact)
            throw input_error("toy_rho4: weights must sum to 1/2");
    }
    S denom1 = 8 * (b1 + b2), denom2 = 32 * (b1 + b2);
    S m1p = (5 * b1 + 4 * b2) / denom1;
    S m2p = (21 * b1 + 16 * b2) / denom2;
    FiniteDist<S> m0 = FiniteDist<S>::uniform(2);
    FiniteDist<S> d1p = toy_detail::two_state(m1p), d1m = toy_detail::two_state(tr::one() - m1p);
    FiniteDist<S> d2p = toy_detail::two_state(m2p), d2m = toy_detail::two_state(tr::one() - m2p);
    MeasureFlow<S> flow_p({m0, d1p, d2p}), flow_m({m0, d1m, d2m});
    MeasureFlow<S> flow_hp({m0, d1p, m0}), flow_hm({m0, d1m, m0});

    using Atom = typename SuggestionAtoms<S>::Atom;
    std::vector<Atom> atoms = {
        {toy_phi_plus(), flow_p, b1},
        {toy_phi_minus(), flow_m, b1},
        {toy_phi0(), flow_p, b2},
        {toy_phi0(), flow_m, b2},
        {toy_phihat_plus(), flow_hp, b3},
        {toy_phihat_minus(), flow_hm, b3},
        {toy_phi0(), flow_hp, b4},
        {toy_phi0(), flow_hm, b4},
    };
    return SuggestionAtoms<S>(std::move(atoms));
}

/// The (R2)-compatible slice b1 = b3 = beta, b2 = b4 = 1/4 - beta.
template <typename S>
SuggestionAtoms<S> toy_rho(const ToyParams<S>& p) {
    p.validate();
    return toy_rho4(p.beta, p.gamma(), p.beta, p.gamma());
}

}  // namespace cmfg
