#pragma once

// Feasible-window oracle for the toy instance: scans a (c0, c1) grid with
// the exact (Con) and (Opt) verifiers, refines the tie-locus boundaries by
// bisection, and reports the scanned window side by side with the window
// stated in the source write-up. Discrepancies are listed, never silently
// reconciled.

#include "cmfg/toy.hpp"

#include <functional>
#include <sstream>
#include <vector>

namespace cmfg {

struct WindowGridRow {
    Rational c0, c1;
    bool consistency_pass = false;
    bool optimality_pass = false;
    std::string first_failing_branch;  // empty when both pass
};

struct WindowBounds {
    Rational c0_lo, c0_hi, c1_lo, c1_hi;
};

struct WindowScanResult {
    Rational beta;
    std::vector<WindowGridRow> rows;
    bool region_nonempty = false;
    WindowBounds hull;    // rectangular hull of passing grid points
    WindowBounds oracle;  // bisection-refined boundaries (width <= 1e-6)
    WindowBounds stated;  // the window as stated in the write-up
    std::vector<std::string> discrepancies;  // side-by-side mismatches
};

namespace detail {

/// First branch (by toy naming) whose identity cost exceeds its DPP value;
/// empty when optimality holds.
template <typename S>
std::string first_failing_branch(const GameSpec<S>& g, const SuggestionAtoms<S>& rho,
                                 const Tols& tols) {
    using tr = scalar_traits<S>;
    for (const auto& [name, phi] : toy_strategy_names()) {
        ValueTable<S> table = dpp_solve(g, rho, phi, tols);
        auto fwd = forward_chain(g, conditional_chain(rho, phi),
                                 DeviationMap<S>::identity().rule_for(phi));
        if (!tr::close(fwd.expected_cost, table.expected_initial(g.initial), tols)) return name;
    }
    return "";
}

/// Bisection on a pass/fail predicate; requires pass(lo) and !pass(hi).
inline Rational bisect(const std::function<bool(const Rational&)>& pass, Rational lo, Rational hi,
                       const Rational& width) {
    if (!pass(lo) || pass(hi)) throw input_error("window_scan: bisection bracket not pass/fail");
    Rational gap = hi < lo ? lo - hi : hi - lo;
    while (gap > width) {
        Rational mid = (lo + hi) / 2;
        (pass(mid) ? lo : hi) = mid;
        gap = hi < lo ? lo - hi : hi - lo;
    }
    return (lo + hi) / 2;
}

}  // namespace detail

/// Scan the (c0, c1) feasibility window at fixed beta over a grid of `grid`
/// points per axis covering (0, beta] x (0, beta].
inline WindowScanResult window_scan(const Rational& beta, int grid) {
    using tr = scalar_traits<Rational>;
    if (grid < 8) throw input_error("window_scan: need at least 8 grid points per axis");
    WindowScanResult out;
    out.beta = beta;

    struct Point {
        bool con, opt;
        std::string branch;
    };
    auto eval_point = [&](const Rational& c0, const Rational& c1) -> Point {
        ToyParams<Rational> p{beta, c0, c1};
        GameSpec<Rational> g = toy_game(p);
        SuggestionAtoms<Rational> rho = toy_rho(p);
        Point pt;
        pt.con = check_consistency(g, rho).pass;
        pt.opt = check_optimality(g, rho).report.pass;
        if (!pt.opt)
            pt.branch = detail::first_failing_branch(g, rho, Tols{});
        else if (!pt.con)
            pt.branch = "consistency";
        return pt;
    };
    auto passes = [&](const Rational& c0, const Rational& c1) {
        Point pt = eval_point(c0, c1);
        return pt.con && pt.opt;
    };

    bool any = false;
    for (int i = 1; i <= grid; ++i)
        for (int j = 1; j <= grid; ++j) {
            WindowGridRow row;
            row.c0 = beta * Rational(i, grid);
            row.c1 = beta * Rational(j, grid);
            Point pt = eval_point(row.c0, row.c1);
            row.consistency_pass = pt.con;
            row.optimality_pass = pt.opt;
            row.first_failing_branch = pt.branch;
            if (pt.con && pt.opt) {
                if (!any) {
                    out.hull = {row.c0, row.c0, row.c1, row.c1};
                    any = true;
                } else {
                    out.hull.c0_lo = std::min(out.hull.c0_lo, row.c0);
                    out.hull.c0_hi = std::max(out.hull.c0_hi, row.c0);
                    out.hull.c1_lo = std::min(out.hull.c1_lo, row.c1);
                    out.hull.c1_hi = std::max(out.hull.c1_hi, row.c1);
                }
            }
            out.rows.push_back(std::move(row));
        }
    out.region_nonempty = any;
    if (!any) return out;

    // Boundary refinement by bisection at the tie loci, to width 1e-6.
    const Rational width(1, 1000000);
    Rational c0_mid = (out.hull.c0_lo + out.hull.c0_hi) / 2;
    Rational c1_mid = (out.hull.c1_lo + out.hull.c1_hi) / 2;
    auto pass_c0 = [&](const Rational& c) { return passes(c, c1_mid); };
    auto pass_c1 = [&](const Rational& c) { return passes(c0_mid, c); };
    out.oracle.c0_hi = pass_c0(beta) ? beta : detail::bisect(pass_c0, out.hull.c0_hi, beta, width);
    out.oracle.c0_lo = pass_c0(width) ? tr::zero()
                                      : detail::bisect([&](const Rational& c) { return !pass_c0(c); },
                                                       width, out.hull.c0_lo, width);
    out.oracle.c1_hi = pass_c1(beta) ? beta : detail::bisect(pass_c1, out.hull.c1_hi, beta, width);
    out.oracle.c1_lo = pass_c1(width) ? tr::zero()
                                      : detail::bisect([&](const Rational& c) { return !pass_c1(c); },
                                                       width, out.hull.c1_lo, width);

    // Window as stated in the write-up: 0 < c0 < beta/2, 5 beta/32 < c1 < 5 beta/16.
    out.stated = {tr::zero(), beta / 2, beta * Rational(5, 32), beta * Rational(5, 16)};

    auto compare = [&](const char* label, const Rational& got, const Rational& expect) {
        if (tr::abs(got - expect) > width * 2) {
            std::ostringstream os;
            os << label << ": scan finds " << tr::str(got) << " (~" << tr::to_double(got)
               << "), write-up states " << tr::str(expect) << " (~" << tr::to_double(expect) << ")";
            out.discrepancies.push_back(os.str());
        }
    };
    compare("c0 lower bound", out.oracle.c0_lo, out.stated.c0_lo);
    compare("c0 upper bound", out.oracle.c0_hi, out.stated.c0_hi);
    compare("c1 lower bound", out.oracle.c1_lo, out.stated.c1_lo);
    compare("c1 upper bound", out.oracle.c1_hi, out.stated.c1_hi);
    return out;
}

}  // namespace cmfg
