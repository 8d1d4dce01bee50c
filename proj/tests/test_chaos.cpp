#include "cmfg/chaos.hpp"
#include "cmfg/toy.hpp"

#include <catch2/catch_amalgamated.hpp>

using namespace cmfg;

namespace {

ToyParams<double> dparams() { return ToyParams<double>::parse("1/5", "1/20", "3/32"); }

/// One-state game: the only distribution is the point mass, so the
/// empirical flow always coincides with the announced flow.
std::pair<GameSpec<double>, SuggestionAtoms<double>> one_state() {
    GameSpec<double> g;
    g.horizon = 2;
    g.state_names = {"s"};
    g.action_names = {"0"};
    g.state_values = {0.0};
    g.initial = FiniteDist<double>::delta(0, 1);
    g.kernel_m_independent = true;
    g.kernel = [](int, int, const FiniteDist<double>&, int) { return FiniteDist<double>::delta(0, 1); };
    g.running = [](int, int, const FiniteDist<double>&, int) { return 0.0; };
    g.terminal = [](int, const FiniteDist<double>&) { return 0.0; };
    auto d = FiniteDist<double>::delta(0, 1);
    SuggestionAtoms<double> rho(
        {{RestrictedStrategy(2, 1, {0, 0}), MeasureFlow<double>({d, d, d}), 1.0}});
    return {std::move(g), std::move(rho)};
}

}  // namespace

TEST_CASE("chaos_curve: estimates shrink with N") {
    auto g = toy_game(dparams());
    auto rho = toy_rho(dparams());
    auto curve = chaos_curve(g, rho, {10, 50, 200}, 2000, RngStream(2718));
    REQUIRE(curve.rows.size() == 3);
    // Weakly decreasing up to 3 sigma, strictly from first to last.
    for (size_t i = 1; i < curve.rows.size(); ++i) {
        double slack = 3.0 * std::hypot(curve.rows[i].stderr_, curve.rows[i - 1].stderr_);
        CHECK(curve.rows[i].estimate <= curve.rows[i - 1].estimate + slack);
    }
    CHECK(curve.rows.back().estimate < curve.rows.front().estimate);
    for (const auto& row : curve.rows) {
        CHECK(row.estimate >= 0.0);
        CHECK(row.flow_atom == "mixed");
    }
}

TEST_CASE("chaos_curve: conditioning on a fixed flow atom shows the same trend") {
    auto g = toy_game(dparams());
    auto rho = toy_rho(dparams());
    auto curve = chaos_curve(g, rho, {10, 50, 200}, 2000, RngStream(2719), 0);
    REQUIRE(curve.rows.size() == 3);
    CHECK(curve.rows.back().estimate < curve.rows.front().estimate);
    CHECK(curve.rows.front().flow_atom == "0");
}

TEST_CASE("chaos_curve: single-state space gives exactly zero") {
    auto [g, rho] = one_state();
    auto curve = chaos_curve(g, rho, {2, 10, 50}, 100, RngStream(3));
    for (const auto& row : curve.rows) CHECK(row.estimate == 0.0);
}

TEST_CASE("chaos_curve: input validation") {
    auto g = toy_game(dparams());
    auto rho = toy_rho(dparams());
    CHECK_THROWS_AS(chaos_curve(g, rho, {1, 10}, 100, RngStream(1)), input_error);
    CHECK_THROWS_AS(chaos_curve(g, rho, {10, 10}, 100, RngStream(1)), input_error);
}

TEST_CASE("slope_fit: synthetic curves") {
    ChaosCurve exact_half;
    for (int n : {10, 100, 1000, 10000})
        exact_half.rows.push_back({n, 3.0 / std::sqrt(static_cast<double>(n)), 0.0, 1, "mixed"});
    CHECK(std::abs(slope_fit(exact_half) + 0.5) <= 1e-9);

    ChaosCurve flat;
    for (int n : {10, 100, 1000}) flat.rows.push_back({n, 0.25, 0.0, 1, "mixed"});
    CHECK(std::abs(slope_fit(flat)) <= 1e-12);

    ChaosCurve two;
    two.rows = {{10, 1.0, 0.0, 1, "mixed"}, {20, 0.5, 0.0, 1, "mixed"}};
    CHECK_THROWS_AS(slope_fit(two), input_error);

    ChaosCurve zero;
    zero.rows = {{10, 1.0, 0.0, 1, "m"}, {20, 0.0, 0.0, 1, "m"}, {40, 0.1, 0.0, 1, "m"}};
    CHECK_THROWS_AS(slope_fit(zero), input_error);
}

TEST_CASE("slope_fit: toy curve sits near the CLT rate") {
    auto g = toy_game(dparams());
    auto rho = toy_rho(dparams());
    auto curve = chaos_curve(g, rho, {10, 100, 1000}, 3000, RngStream(1414));
    double slope = slope_fit(curve);
    CHECK(slope >= -0.7);
    CHECK(slope <= -0.3);
}
