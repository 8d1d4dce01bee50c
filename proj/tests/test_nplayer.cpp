#include "cmfg/nplayer.hpp"
#include "cmfg/toy.hpp"
#include "cmfg/verify.hpp"

#include <catch2/catch_amalgamated.hpp>

#include <algorithm>

using namespace cmfg;

namespace {

ToyParams<Rational> rparams() { return ToyParams<Rational>::parse("1/5", "1/20", "3/32"); }
ToyParams<double> dparams() { return ToyParams<double>::parse("1/5", "1/20", "3/32"); }

GameSpec<Rational> zero_cost_game() {
    auto g = toy_game(rparams());
    g.running = [](int, int, const FiniteDist<Rational>&, int) { return Rational(0); };
    g.terminal = [](int, const FiniteDist<Rational>&) { return Rational(0); };
    return g;
}

/// Two-atom T=1 instance for the literal best-response cross-check.
struct TinyInstance {
    GameSpec<Rational> g;
    SuggestionAtoms<Rational> rho;
};

TinyInstance tiny_t1() {
    GameSpec<Rational> g;
    g.horizon = 1;
    g.state_names = {"a", "b"};
    g.action_names = {"0", "1"};
    g.state_values = {Rational(1), Rational(-1)};
    g.initial = FiniteDist<Rational>(std::vector<Rational>{Rational(2, 3), Rational(1, 3)});
    g.kernel = [](int, int x, const FiniteDist<Rational>&, int a) {
        Rational stay = a == 0 ? Rational(3, 5) : Rational(1, 5);
        std::vector<Rational> w(2);
        w[x] = stay;
        w[1 - x] = Rational(1) - stay;
        return FiniteDist<Rational>(std::move(w));
    };
    g.running = [](int, int x, const FiniteDist<Rational>& m, int a) {
        return Rational(a) * Rational(1, 4) - Rational(x == 0 ? 1 : -1) * m[0];
    };
    g.terminal = [](int x, const FiniteDist<Rational>& m) {
        return Rational(x == 0 ? -1 : 1) * (m[0] - m[1]);
    };
    RestrictedStrategy phiA(1, 2, {0, 1}), phiB(1, 2, {1, 0});
    auto m0 = g.initial;
    FiniteDist<Rational> mA({Rational(1, 2), Rational(1, 2)});
    FiniteDist<Rational> mB({Rational(2, 5), Rational(3, 5)});
    SuggestionAtoms<Rational> rho({
        {phiA, MeasureFlow<Rational>({m0, mA}), Rational(2, 5)},
        {phiB, MeasureFlow<Rational>({m0, mB}), Rational(3, 5)},
    });
    return {std::move(g), std::move(rho)};
}

}  // namespace

TEST_CASE("gamma sampler: exact decomposition tables") {
    auto rho = toy_rho(rparams());
    GammaSampler<Rational> sampler(rho);
    REQUIRE(sampler.n_flows() == 4);
    for (int f = 0; f < 4; ++f) CHECK(sampler.flow_mass(f) == Rational(1, 4));

    // Conditional weights: the pinned strategy gets 4*beta, phi0 gets 4*gamma.
    int phi0 = -1;
    for (int s = 0; s < sampler.n_strategies(); ++s)
        if (sampler.strategy(s) == toy_phi0()) phi0 = s;
    REQUIRE(phi0 >= 0);
    for (int f = 0; f < 4; ++f) {
        REQUIRE(sampler.cond(f).size() == 2);
        for (const auto& [si, w] : sampler.cond(f))
            CHECK(w == (si == phi0 ? Rational(1, 5) : Rational(4, 5)));
    }

    // N = 1 marginal equals rho_1; matches the suggestion's own marginal.
    auto marg = sampler.strategy_marginal();
    for (const auto& [phi, mass] : rho.strategy_marginal()) {
        bool found = false;
        for (int s = 0; s < sampler.n_strategies(); ++s)
            if (sampler.strategy(s) == phi) {
                CHECK(marg[s] == mass);
                found = true;
            }
        CHECK(found);
    }

    // P(all three players receive phi0) = sum_m rho2(m) rho1(phi0|m)^3.
    Rational p3(0);
    for (int f = 0; f < 4; ++f)
        for (const auto& [si, w] : sampler.cond(f))
            if (si == phi0) p3 += sampler.flow_mass(f) * w * w * w;
    CHECK(p3 == Rational(1, 125));
}

TEST_CASE("sample_gamma_n: empirical frequencies match the product form") {
    auto rho = toy_rho(ToyParams<double>::parse("1/5", "1/20", "3/32"));
    GammaSampler<double> sampler(rho);
    RngStream root(404);
    const int draws = 100000;
    int plus_given_mplus = 0, mplus = 0, all_phi0 = 0;
    int phi_plus_idx = -1, phi0_idx = -1, mplus_idx = -1;
    for (int s = 0; s < sampler.n_strategies(); ++s) {
        if (sampler.strategy(s) == toy_phi_plus()) phi_plus_idx = s;
        if (sampler.strategy(s) == toy_phi0()) phi0_idx = s;
    }
    for (int f = 0; f < sampler.n_flows(); ++f)
        if (scalar_traits<double>::to_double(sampler.flow(f)[2][0]) > 0.6) mplus_idx = f;
    REQUIRE(mplus_idx >= 0);
    for (int r = 0; r < draws; ++r) {
        auto a = sample_gamma_n(sampler, 3, root.derive(r));
        if (a.flow == mplus_idx) {
            ++mplus;
            if (a.strategies[0] == phi_plus_idx) ++plus_given_mplus;
        }
        if (std::all_of(a.strategies.begin(), a.strategies.end(),
                        [&](int s) { return s == phi0_idx; }))
            ++all_phi0;
    }
    // P(phi_+ | m_+) = 4 beta = 0.8; binomial 3 sigma.
    double freq = static_cast<double>(plus_given_mplus) / mplus;
    double sigma = std::sqrt(0.8 * 0.2 / mplus);
    CHECK(std::abs(freq - 0.8) <= 3 * sigma);
    // P(all three get phi0) = 1/125.
    double f3 = static_cast<double>(all_phi0) / draws;
    double s3 = std::sqrt((1.0 / 125) * (124.0 / 125) / draws);
    CHECK(std::abs(f3 - 1.0 / 125) <= 3 * s3);
}

TEST_CASE("simulate agrees with exact_j1n at N = 2 and 3") {
    auto gr = toy_game(rparams());
    auto rhor = toy_rho(rparams());
    auto gd = toy_game(dparams());
    auto rhod = toy_rho(dparams());
    for (int n : {2, 3}) {
        double exact = scalar_traits<Rational>::to_double(exact_j1n(gr, rhor, n));
        auto est = simulate(gd, rhod, n, nullptr, 50000, RngStream(7000 + n));
        INFO("N = " << n << " exact = " << exact << " est = " << est.mean);
        CHECK(std::abs(est.mean - exact) <= 3.5 * est.stderr_);
    }
}

TEST_CASE("simulate matches the mean field cost at moderate N") {
    auto gd = toy_game(dparams());
    auto rhod = toy_rho(dparams());
    double j = evaluate_J(gd, rhod, DeviationMap<double>::identity());
    auto est = simulate(gd, rhod, 100, nullptr, 20000, RngStream(31));
    CHECK(std::abs(est.mean - j) <= 3.5 * est.stderr_);
}

TEST_CASE("zero-cost game: zero cost, zero variance, zero defect") {
    auto g = zero_cost_game();
    auto rho = toy_rho(rparams());
    CHECK(exact_j1n(g, rho, 2) == 0);

    GameSpec<double> gd = toy_game(dparams());
    gd.running = [](int, int, const FiniteDist<double>&, int) { return 0.0; };
    gd.terminal = [](int, const FiniteDist<double>&) { return 0.0; };
    auto est = simulate(gd, toy_rho(dparams()), 3, nullptr, 1000, RngStream(1));
    CHECK(est.mean == 0.0);
    CHECK(est.stderr_ == 0.0);

    auto br = best_response_bruteforce(g, rho, 2);
    CHECK(br.value == 0);
    CHECK(br.epsilon == 0);
}

TEST_CASE("exchangeability: permuting players 2..N with their streams is invisible") {
    auto gd = toy_game(dparams());
    auto rhod = toy_rho(dparams());
    GammaSampler<double> sampler(rhod);
    detail::NPlayerRun engine(gd, sampler, 4);
    std::vector<int> perm{0, 3, 1, 2};
    SimOptions permuted;
    permuted.stream_permutation = &perm;
    RngStream root(99);
    for (int r = 0; r < 200; ++r) {
        double a = engine.run(root.derive(r), nullptr, {});
        double b = engine.run(root.derive(r), nullptr, permuted);
        CHECK(a == b);
    }
}

TEST_CASE("identity deviation rule reproduces the no-deviation run bit for bit") {
    auto gd = toy_game(dparams());
    auto rhod = toy_rho(dparams());
    auto family = default_deviation_family(gd);
    REQUIRE(family.front().name == "identity");
    GammaSampler<double> sampler(rhod);
    detail::NPlayerRun engine(gd, sampler, 5);
    RngStream root(123);
    for (int r = 0; r < 200; ++r) {
        double a = engine.run(root.derive(r), nullptr, {});
        double b = engine.run(root.derive(r), &family.front(), {});
        CHECK(a == b);
    }
}

TEST_CASE("best response: exact value, witness achieves it, nothing beats it") {
    auto g = toy_game(rparams());
    auto rho = toy_rho(rparams());
    auto br = best_response_bruteforce(g, rho, 2);
    CHECK(br.epsilon >= 0);
    CHECK(br.epsilon > 0);  // strict at generic interior parameters
    CHECK(br.identity_value == exact_j1n(g, rho, 2));
    // The witness rule realizes exactly the claimed optimum.
    CHECK(exact_j1n(g, rho, 2, &br.witness) == br.value);

    // No family rule beats the exact best response.
    auto family = default_deviation_family(g);
    for (const auto& rule : family) CHECK(exact_j1n(g, rho, 2, &rule) >= br.value);
}

TEST_CASE("best response equals literal enumeration on a T=1 instance") {
    auto [g, rho] = tiny_t1();
    auto br = best_response_bruteforce(g, rho, 2);
    CHECK(exact_j1n(g, rho, 2, &br.witness) == br.value);

    // Literal enumeration: a deviation assigns an action to each of the
    // 2 (suggestions) x 2 (own state) x 2 (observed other state) info sets.
    GammaSampler<Rational> sampler(rho);
    Rational best(0);
    bool first = true;
    for (int mask = 0; mask < 256; ++mask) {
        NRule<Rational> rule;
        rule.name = "enum";
        rule.act = [mask, &sampler](const RestrictedStrategy& phi, int t,
                                    const std::vector<int>& xh,
                                    const std::vector<FiniteDist<Rational>>& emp, RngStream*) {
            int s1 = sampler.strategy(0) == phi ? 0 : 1;
            int other = emp.back()[0] == 1 ? 0 : 1;
            int slot = s1 * 4 + xh.back() * 2 + other;
            return (mask >> slot) & 1;
        };
        Rational v = exact_j1n(g, rho, 2, &rule);
        if (first || v < best) {
            best = v;
            first = false;
        }
    }
    CHECK(best == br.value);
    CHECK(br.identity_value - best == br.epsilon);
}

TEST_CASE("exact_j1n: constant-action deviation never beats the best response") {
    auto g = toy_game(rparams());
    auto rho = toy_rho(rparams());
    auto br = best_response_bruteforce(g, rho, 2);
    NRule<Rational> always0{"const_0", [](const RestrictedStrategy&, int, const std::vector<int>&,
                                          const std::vector<FiniteDist<Rational>>&, RngStream*) {
                                return 0;
                            }};
    CHECK(exact_j1n(g, rho, 2, &always0) >= br.value);
}

TEST_CASE("epsilon_report: identity-only family clips to zero") {
    auto gd = toy_game(dparams());
    auto rhod = toy_rho(dparams());
    auto family = default_deviation_family(gd);
    std::vector<NRule<double>> identity_only{family.front()};
    auto table = epsilon_report(gd, rhod, {2, 5}, identity_only, 500, RngStream(5));
    for (const auto& row : table.rows) CHECK(row.improvement == 0.0);
    for (const auto& s : table.summaries) CHECK(s.family_improvement == 0.0);
}

TEST_CASE("epsilon_report: exact family improvement at N=2 is below exact epsilon_2") {
    auto g = toy_game(rparams());
    auto rho = toy_rho(rparams());
    auto br = best_response_bruteforce(g, rho, 2);
    auto family = default_deviation_family(g);
    Rational identity = exact_j1n(g, rho, 2);
    Rational best_improvement(0);
    for (const auto& rule : family) {
        Rational impr = identity - exact_j1n(g, rho, 2, &rule);
        if (impr > best_improvement) best_improvement = impr;
    }
    CHECK(best_improvement <= br.epsilon);
}

TEST_CASE("nplayer guards") {
    auto g = toy_game(rparams());
    auto rho = toy_rho(rparams());
    CHECK_THROWS_AS(exact_j1n(g, rho, 1), input_error);
    CHECK_THROWS_AS(exact_j1n(g, rho, 8), input_error);  // term guard
    CHECK_THROWS_AS(best_response_bruteforce(g, rho, 4), input_error);
    auto gd = toy_game(dparams());
    auto rhod = toy_rho(dparams());
    CHECK_THROWS_AS(simulate(gd, rhod, 1, nullptr, 100, RngStream(1)), input_error);
    CHECK_THROWS_AS(simulate(gd, rhod, 2, nullptr, 1, RngStream(1)), input_error);
    CHECK_THROWS_AS(
        epsilon_report(gd, rhod, {2}, std::vector<NRule<double>>{}, 100, RngStream(1)),
        input_error);
}
