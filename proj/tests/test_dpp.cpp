#include "cmfg/dpp.hpp"
#include "cmfg/toy.hpp"
#include "cmfg/verify.hpp"
#include "support/enum_oracle.hpp"

#include <catch2/catch_amalgamated.hpp>

using namespace cmfg;
using tr = scalar_traits<Rational>;

namespace {

ToyParams<Rational> params(const char* b = "1/5", const char* c0 = "1/20", const char* c1 = "3/32") {
    return ToyParams<Rational>::parse(b, c0, c1);
}

Rational rmin(const Rational& a, const Rational& b) { return a < b ? a : b; }

/// Pseudorandom deterministic deviation, a pure function of its seed.
DeviationMap<Rational> random_deviation(std::uint64_t seed, int na) {
    DeviationMap<Rational> d;
    d.act = [seed, na](const RestrictedStrategy&, int t, const std::vector<int>& xh,
                       const FlowPrefix<Rational>& pfx) {
        std::uint64_t h = seed;
        h = detail::mix64(h ^ (static_cast<std::uint64_t>(t) + 11));
        for (int x : xh) h = detail::mix64(h ^ (static_cast<std::uint64_t>(x) + 101));
        h = detail::mix64(h ^ (static_cast<std::uint64_t>(pfx.node_id()) + 1009));
        return static_cast<int>(h % na);
    };
    return d;
}

}  // namespace

TEST_CASE("dpp_solve: closed-form branch values across a parameter sweep") {
    // Sampled on both sides of every kink so the piecewise-linear identities
    // pin the symbolic forms.
    const std::vector<std::array<const char*, 3>> combos = {
        {"1/5", "1/20", "3/32"},  {"1/5", "1/11", "1/9"},   {"1/8", "1/100", "1/17"},
        {"1/8", "1/3", "1/3"},    {"3/16", "1/7", "1/50"},  {"1/16", "1/40", "1/30"},
        {"1/5", "1/10", "1/16"},  {"1/5", "2/25", "1/8"},   {"7/40", "1/2", "1/2"},
        {"1/10", "1/19", "1/23"}, {"9/40", "1/21", "1/13"}, {"1/6", "1/12", "5/48"},
    };
    for (const auto& [b, c0s, c1s] : combos) {
        auto p = params(b, c0s, c1s);
        auto g = toy_game(p);
        auto rho = toy_rho(p);
        Rational beta = p.beta, c0 = p.c0, c1 = p.c1;

        // V_{phi_0}(0, x) = min{0, c0} + (1/2) min{0, c1 - (5/16) beta}; the
        // second term vanishes on the feasible window, leaving min{0, c0}.
        auto v0 = dpp_solve(g, rho, toy_phi0());
        int root0 = v0.chain().roots()[0];
        Rational tail = rmin(Rational(0), c1 - Rational(5, 16) * beta) / 2;
        CHECK(v0.at(0, root0, 0).value == rmin(Rational(0), c0) + tail);
        CHECK(v0.at(0, root0, 1).value == rmin(Rational(0), c0) + tail);
        if (c1 >= Rational(5, 16) * beta) {
            CHECK(v0.at(0, root0, 0).value == rmin(Rational(0), c0));
            CHECK(v0.at(0, root0, 0).argmin == 0);
        }

        // Vhat_+(0, +1) = min{0, c0 - beta/2}; Vhat_+(0, -1) = min{0, c0 + beta/2}.
        auto vh = dpp_solve(g, rho, toy_phihat_plus());
        int rooth = vh.chain().roots()[0];
        CHECK(vh.at(0, rooth, 0).value == rmin(Rational(0), c0 - beta / 2));
        CHECK(vh.at(0, rooth, 1).value == rmin(Rational(0), c0 + beta / 2));

        // Vhat_+(1, (x0, x1)) = -x1 M(m_1^+) with action 0 optimal.
        // History codes are little-endian: xcode = x0 + 2 x1.
        int node1 = vh.chain().layer(1)[0];
        for (std::uint64_t x0 = 0; x0 < 2; ++x0) {
            CHECK(vh.at(1, node1, x0 + 0).value == -beta);  // x1 = +1
            CHECK(vh.at(1, node1, x0 + 2).value == beta);   // x1 = -1
            CHECK(vh.at(1, node1, x0 + 0).argmin == 0);
            CHECK(vh.at(1, node1, x0 + 2).argmin == 0);
        }

        // V_+(2, .) = -x2 M(m_2^+) with M(m_2^+) = (5/4) beta from the flow
        // closed form.
        auto vp = dpp_solve(g, rho, toy_phi_plus());
        int leaf = vp.chain().leaf_of_flow(0);
        CHECK(vp.at(2, leaf, 0).value == -Rational(5, 4) * beta);  // x = (+1,+1,+1)
        CHECK(vp.at(2, leaf, 4).value == Rational(5, 4) * beta);   // x = (+1,+1,-1)

        // V_{phi_0}(1, (x0,+1), m_+^{(1)}) = -beta + min{0, c1 - (5/16) beta}.
        // Identify the m_+^{(1)} node by its t=1 mass at +1 exceeding 1/2.
        for (int id : v0.chain().layer(1)) {
            bool plus = v0.chain().dist_at(id, 1)[0] > Rational(1, 2);
            Rational expect =
                plus ? -beta + rmin(Rational(0), c1 - Rational(5, 16) * beta)
                     : beta + rmin(Rational(0), c1 + Rational(5, 16) * beta);
            CHECK(v0.at(1, id, 0).value == expect);  // x1 = +1, x0 = +1
            CHECK(v0.at(1, id, 1).value == expect);  // x1 = +1, x0 = -1
        }
    }
}

TEST_CASE("dpp_solve: tie flags at the window boundaries") {
    // c0 = beta/2 ties the t=0 decision of the phihat_+ branch at x0 = +1.
    auto p = params("1/5", "1/10", "3/32");
    auto g = toy_game(p);
    auto rho = toy_rho(p);
    auto vh = dpp_solve(g, rho, toy_phihat_plus());
    auto root = vh.chain().roots()[0];
    CHECK(vh.at(0, root, 0).tie);
    CHECK(vh.at(0, root, 0).argmin == 0);  // ties break toward the lowest index
    CHECK_FALSE(vh.at(0, root, 1).tie);

    // c1 = (5/8) beta ties the t=1 decision of the phi_+ branch at x1 = +1.
    auto p2 = params("1/5", "1/20", "1/8");
    auto v2 = dpp_solve(toy_game(p2), toy_rho(p2), toy_phi_plus());
    int node1 = v2.chain().layer(1)[0];
    CHECK(v2.at(1, node1, 0).tie);

    // c1 = (5/16) beta ties the t=1 decision of the phi_0 branch on the
    // m_+^{(1)} prefix.
    auto p3 = params("1/5", "1/20", "1/16");
    auto v3 = dpp_solve(toy_game(p3), toy_rho(p3), toy_phi0());
    bool found_tie = false;
    for (int id : v3.chain().layer(1))
        if (v3.chain().dist_at(id, 1)[0] > Rational(1, 2)) found_tie = v3.at(1, id, 0).tie;
    CHECK(found_tie);
}

TEST_CASE("dpp_solve: a1 warning and re-verification") {
    auto p = params();
    auto g = toy_game(p);
    auto rho = toy_rho(p);
    for (const auto& [name, phi] : toy_strategy_names()) {
        auto table = dpp_solve(g, rho, phi);
        CHECK_FALSE(table.a1_warning());
        CHECK(table.reverify(g));
        CHECK_THROWS_AS(table.at(0, 99, 0), input_error);
    }
}

TEST_CASE("state_chain: layer laws and conditional masses") {
    auto p = params();
    auto g = toy_game(p);
    auto rho = toy_rho(p);

    // Law of X_0 equals m_0 on every branch.
    for (const auto& [name, phi] : toy_strategy_names()) {
        auto law = state_chain(g, rho, phi);
        Rational plus = 0;
        for (const auto& [key, pr] : law.layers[0])
            if (key.second == 0) plus += pr;
        CHECK(plus == Rational(1, 2));
    }

    // Per-branch forward marginals: under phi_+ the t=1 mass at +1 is 5/8
    // and the t=2 mass is 21/32.
    auto chain_p = conditional_chain(rho, toy_phi_plus());
    auto fwd = forward_chain(g, chain_p, DeviationMap<Rational>::identity().rule_for(toy_phi_plus()));
    auto m1 = state_marginal_at(fwd.law, 1, chain_p.node_of_flow(0, 1), 2);
    CHECK(m1[0] == Rational(5, 8));
    auto m2 = state_marginal_at(fwd.law, 2, chain_p.node_of_flow(0, 2), 2);
    CHECK(m2[0] == Rational(21, 32));

    // Aggregated across suggestions, the conditional law given mu = m_+
    // reproduces the flow: 3/5 at t=1 and 5/8 at t=2 for beta = 1/5.
    auto flow_plus = chain_p.flows()[0];
    for (int t : {1, 2}) {
        Rational num = 0, den = 0;
        for (const auto& [phi, mass] : rho.strategy_marginal()) {
            auto chain = conditional_chain(rho, phi);
            for (int f = 0; f < chain.support_size(); ++f) {
                if (chain.flows()[f] != flow_plus) continue;
                auto b = forward_chain(g, chain, DeviationMap<Rational>::identity().rule_for(phi));
                auto marg = state_marginal_at(b.law, t, chain.node_of_flow(f, t), 2);
                num += mass * chain.flow_prob(f) * marg[0];
                den += mass * chain.flow_prob(f);
            }
        }
        CHECK(num / den == flow_plus[t][0]);
        CHECK(num / den == (t == 1 ? Rational(3, 5) : Rational(5, 8)));
    }
}

TEST_CASE("evaluate_J: frozen identity cost and deviation dominance") {
    auto p = params();
    auto g = toy_game(p);
    auto rho = toy_rho(p);

    // Hand-derived value at (beta, c0, c1) = (1/5, 1/20, 3/32).
    Rational j = evaluate_J(g, rho, DeviationMap<Rational>::identity());
    CHECK(j == Rational(-89, 3200));

    Rational vsum = 0;
    for (const auto& [phi, mass] : rho.strategy_marginal())
        vsum += mass * dpp_solve(g, rho, phi).expected_initial(g.initial);
    CHECK(vsum == j);

    // J(rho, w) >= sum_phi P(phi) E[V_phi(0)] for random deviations.
    for (int k = 0; k < 100; ++k) {
        Rational jw = evaluate_J(g, rho, random_deviation(k, 2));
        CHECK(jw >= vsum);
    }
}

TEST_CASE("evaluate_J: zero-cost game costs nothing under any deviation") {
    auto p = params();
    auto g = toy_game(p);
    g.running = [](int, int, const FiniteDist<Rational>&, int) { return Rational(0); };
    g.terminal = [](int, const FiniteDist<Rational>&) { return Rational(0); };
    auto rho = toy_rho(p);
    CHECK(evaluate_J(g, rho, DeviationMap<Rational>::identity()) == 0);
    for (int k = 0; k < 10; ++k) CHECK(evaluate_J(g, rho, random_deviation(k, 2)) == 0);
}

TEST_CASE("dpp_solve equals brute-force enumeration over all progressive deviations") {
    auto p = params();
    auto g = toy_game(p);
    auto rho = toy_rho(p);
    for (const auto& [name, phi] : toy_strategy_names()) {
        auto chain = conditional_chain(rho, phi);
        auto table = dpp_solve(g, rho, phi);
        auto oracle = cmfg_test::branch_bruteforce_min(g, chain);
        INFO("branch " << name << " over " << oracle.rules_evaluated << " rules");
        CHECK(table.expected_initial(g.initial) == oracle.minimum);
    }
}

TEST_CASE("deviation returning an out-of-range action is an input error") {
    auto p = params();
    auto g = toy_game(p);
    auto rho = toy_rho(p);
    DeviationMap<Rational> bad;
    bad.act = [](const RestrictedStrategy&, int, const std::vector<int>&,
                 const FlowPrefix<Rational>&) { return 7; };
    CHECK_THROWS_AS(evaluate_J(g, rho, bad), input_error);
}
