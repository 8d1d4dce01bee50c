#include "cmfg/chain.hpp"
#include "cmfg/toy.hpp"

#include <catch2/catch_amalgamated.hpp>

using namespace cmfg;

namespace {
ToyParams<Rational> params() { return ToyParams<Rational>::parse("1/5", "1/20", "3/32"); }
}

TEST_CASE("conditional_chain: phi0 prefix tree of the toy suggestion") {
    auto rho = toy_rho(params());
    auto chain = conditional_chain(rho, toy_phi0());

    CHECK(chain.phi_mass() == Rational(1, 10) * 2);  // 2 b2 + 2 b4 = 4 gamma = 1/5
    CHECK(chain.support_size() == 4);
    for (int f = 0; f < 4; ++f) CHECK(chain.flow_prob(f) == Rational(1, 4));

    // One root (m_0), two prefixes at t=1, four at t=2.
    REQUIRE(chain.roots().size() == 1);
    CHECK(chain.layer(1).size() == 2);
    CHECK(chain.layer(2).size() == 4);

    int root = chain.roots()[0];
    CHECK(chain.node(root).marginal == 1);
    // P(mu^{(1)} = m_+^{(1)}) = 1/2 on each branch.
    for (const auto& [child, p] : chain.node(root).edges) CHECK(p == Rational(1, 2));
    // P(mu^{(2)} = m_+ | mu^{(1)} = m_+^{(1)}) = 1/2.
    for (int id : chain.layer(1)) {
        CHECK(chain.node(id).marginal == Rational(1, 2));
        REQUIRE(chain.node(id).edges.size() == 2);
        for (const auto& [child, p] : chain.node(id).edges) CHECK(p == Rational(1, 2));
    }
    // Path products reproduce the flow marginals.
    for (int f = 0; f < 4; ++f) {
        Rational prod = chain.node(chain.roots()[0]).marginal;
        int id = chain.leaf_of_flow(f);
        Rational marg = chain.node(id).marginal;
        CHECK(marg == chain.flow_prob(f));
    }
}

TEST_CASE("conditional_chain: edge probabilities out of each node sum to 1") {
    auto rho = toy_rho(params());
    for (const auto& [name, phi] : toy_strategy_names()) {
        auto chain = conditional_chain(rho, phi);
        for (int t = 0; t < chain.horizon(); ++t)
            for (int id : chain.layer(t)) {
                Rational sum = 0;
                for (const auto& [child, p] : chain.node(id).edges) sum += p;
                CHECK(sum == 1);
            }
        // Root marginals sum to one as well.
        Rational rsum = 0;
        for (int id : chain.roots()) rsum += chain.node(id).marginal;
        CHECK(rsum == 1);
    }
}

TEST_CASE("conditional_chain: singleton supports for the pinned suggestions") {
    auto rho = toy_rho(params());
    auto chain = conditional_chain(rho, toy_phi_plus());
    CHECK(chain.support_size() == 1);
    CHECK(chain.flow_prob(0) == 1);
    CHECK(chain.layer(2).size() == 1);
    // P_{phi_+} = {m_+}: the t=1 mass at +1 is 3/5 for beta = 1/5.
    CHECK(chain.dist_at(chain.layer(1)[0], 1)[0] == Rational(3, 5));
    CHECK(chain.dist_at(chain.leaf_of_flow(0), 2)[0] == Rational(5, 8));
}

TEST_CASE("conditional_chain: zero-mass strategy is an input error") {
    auto rho = toy_rho(params());
    RestrictedStrategy never(2, 2, {1, 1, 1, 1});
    CHECK_THROWS_AS(conditional_chain(rho, never), input_error);
}
