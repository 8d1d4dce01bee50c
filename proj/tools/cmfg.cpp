// Command-line driver: verification, DPP tables, N-player simulation, the
// equilibrium-defect scan, the chaos scan, and the feasibility-window scan.
// Exit codes: 0 all checks pass / run complete, 1 a verification check
// failed, 2 malformed input.

#include "cmfg/chaos.hpp"
#include "cmfg/config.hpp"
#include "cmfg/io.hpp"
#include "cmfg/mc.hpp"
#include "cmfg/nplayer.hpp"
#include "cmfg/verify.hpp"
#include "cmfg/window.hpp"

#include <chrono>
#include <cstdlib>
#include <iostream>
#include <optional>
#include <string>
#include <vector>

#include "CLI11.hpp"

namespace {

using namespace cmfg;

struct GameArgs {
    std::string game;  // "toy" or a config path
    std::string beta = "1/5", c0 = "1/20", c1 = "3/32";
    std::uint64_t seed = 1;
    long long reps = 10000;
    std::string mode = "rational";
    std::string out;

    bool is_toy() const { return game == "toy"; }

    std::string descriptor() const {
        if (is_toy()) return "toy;beta=" + beta + ";c0=" + c0 + ";c1=" + c1;
        std::ifstream in(game, std::ios::binary);
        if (!in) throw input_error("cannot open config file: " + game);
        std::ostringstream ss;
        ss << in.rdbuf();
        return ss.str();
    }

    template <typename S>
    std::pair<GameSpec<S>, SuggestionAtoms<S>> load() const {
        if (is_toy()) {
            auto p = ToyParams<S>::parse(beta, c0, c1);
            return {toy_game(p), toy_rho(p)};
        }
        json j = load_json_file(game);
        auto g = game_from_json<S>(j.at("game"));
        if (!j.contains("suggestion")) throw input_error("config: missing suggestion block");
        auto rho = suggestion_from_json<S>(j.at("suggestion"), g);
        return {std::move(g), std::move(rho)};
    }
};

void add_game_options(CLI::App* cmd, GameArgs& a, bool with_costs = true) {
    cmd->add_option("game", a.game, "built-in game name (\"toy\") or config file path")->required();
    cmd->add_option("--beta", a.beta, "toy beta, rational string");
    if (with_costs) {
        cmd->add_option("--c0", a.c0, "toy time-0 action cost");
        cmd->add_option("--c1", a.c1, "toy time-1 action cost");
    }
    cmd->add_option("--seed", a.seed, "meta seed for all derived streams");
    cmd->add_option("--reps", a.reps, "Monte Carlo replications");
    cmd->add_option("--mode", a.mode, "arithmetic mode: rational | float")
        ->check(CLI::IsMember({"rational", "float"}));
    cmd->add_option("--out", a.out, "output file (CSV/JSON; manifest written next to it)");
}

std::string default_out_dir() {
    const char* d = std::getenv("CMFG_OUT_DIR");
    return d ? std::string(d) : std::string();
}

std::string resolve_out(const std::string& out) {
    std::string dir = default_out_dir();
    if (out.empty() || out.find('/') != std::string::npos || dir.empty()) return out;
    return dir + "/" + out;
}

std::string fmt(double x) { return scalar_traits<double>::str(x); }

void emit(const GameArgs& a, const std::string& command, const std::string& data,
          std::chrono::steady_clock::time_point t0, const std::string& descriptor = "") {
    if (a.out.empty()) {
        std::cout << data;
        return;
    }
    RunManifest m;
    m.command = command;
    m.config_hash = fnv1a64(descriptor.empty() ? a.descriptor() : descriptor);
    m.meta_seed = a.seed;
    m.mode = a.mode;
    m.wall_clock_s =
        std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    write_with_manifest(resolve_out(a.out), data, m);
}

// ---------------------------------------------------------------- verify --

template <typename S>
int run_verify(const GameArgs& a, std::chrono::steady_clock::time_point t0) {
    auto [g, rho] = a.load<S>();
    std::vector<CheckReport> reports;
    reports.push_back(validate_r1(rho));
    reports.push_back(check_r2(rho));
    if (reports[0].pass) {
        reports.push_back(check_consistency(g, rho));
        auto opt = check_optimality(g, rho);
        reports.push_back(opt.report);
    }
    bool all = true;
    nlohmann::json jrep = nlohmann::json::array();
    for (const auto& r : reports) {
        all = all && r.pass;
        std::cout << (r.pass ? "[PASS] " : "[FAIL] ") << r.name << "\n";
        for (const auto& [k, v] : r.figures) std::cout << "       " << k << " = " << v << "\n";
        for (const auto& n : r.notes) std::cout << "       note: " << n << "\n";
        for (const auto& w : r.witnesses) std::cout << "       witness: " << w << "\n";
        jrep.push_back(r.to_json());
    }
    if (!a.out.empty()) emit(a, "verify", jrep.dump(2) + "\n", t0);
    return all ? 0 : 1;
}

// ------------------------------------------------------------------- dpp --

template <typename S>
int run_dpp(const GameArgs& a, const std::string& phi_name,
            std::chrono::steady_clock::time_point t0) {
    auto [g, rho] = a.load<S>();
    // Resolve the branch: a toy name, or an index into the strategy marginal.
    std::optional<RestrictedStrategy> phi;
    if (a.is_toy()) {
        for (const auto& [name, p] : toy_strategy_names())
            if (name == phi_name) phi = p;
    }
    if (!phi) {
        try {
            int idx = std::stoi(phi_name);
            auto marg = rho.strategy_marginal();
            if (idx >= 0 && idx < static_cast<int>(marg.size())) phi = marg[idx].first;
        } catch (const std::exception&) {
        }
    }
    if (!phi) throw input_error("unknown --phi: " + phi_name);

    auto table = dpp_solve(g, rho, *phi);
    CsvWriter csv({"t", "flow_node", "x_hist", "value", "argmin_action", "tie"});
    for (int t = 0; t <= table.horizon(); ++t)
        for (const auto& [key, e] : table.layer(t)) {
            std::ostringstream xs;
            auto xh = detail::decode_xhist(key.second, t + 1, g.n_states());
            for (size_t i = 0; i < xh.size(); ++i) xs << (i ? "|" : "") << g.state_names[xh[i]];
            csv.row({std::to_string(t), std::to_string(key.first), xs.str(),
                     scalar_traits<S>::str(e.value),
                     e.argmin < 0 ? "" : g.action_names[e.argmin], e.tie ? "1" : "0"});
        }
    std::ostringstream head;
    head << "V table for branch " << phi_name << " (P(phi) = "
         << scalar_traits<S>::str(conditional_chain(rho, *phi).phi_mass())
         << ", E[V(0)] = " << scalar_traits<S>::str(table.expected_initial(g.initial)) << ")\n";
    if (table.a1_warning()) head << "warning: (A1) fails on the solution flows\n";
    std::cout << head.str();
    emit(a, "dpp", csv.str(), t0);
    if (a.out.empty()) return 0;
    std::cout << csv.str();
    return 0;
}

// -------------------------------------------------------------- simulate --

int run_simulate(const GameArgs& a, int n, const std::string& deviation,
                 std::chrono::steady_clock::time_point t0) {
    auto [g, rho] = a.load<double>();
    RngStream root(a.seed);
    CsvWriter csv({"N", "deviation_name", "reps", "estimate", "stderr", "improvement",
                   "improvement_stderr"});
    if (deviation.empty() || deviation == "identity") {
        auto est = simulate(g, rho, n, nullptr, a.reps, root);
        csv.row({std::to_string(n), "identity", std::to_string(a.reps), fmt(est.mean),
                 fmt(est.stderr_), "0", "0"});
    } else {
        auto family = default_deviation_family(g);
        const NRule<double>* rule = nullptr;
        for (const auto& r : family)
            if (r.name == deviation) rule = &r;
        if (!rule) throw input_error("unknown deviation rule: " + deviation);
        auto table = epsilon_report(g, rho, {n}, {*rule}, a.reps, root);
        const auto& row = table.rows.front();
        csv.row({std::to_string(n), row.deviation_name, std::to_string(row.reps),
                 fmt(row.estimate), fmt(row.stderr_), fmt(row.improvement),
                 fmt(row.improvement_stderr)});
    }
    emit(a, "simulate", csv.str(), t0);
    if (!a.out.empty()) std::cout << "wrote " << resolve_out(a.out) << "\n";
    return 0;
}

// ---------------------------------------------------------- epsilon-scan --

int run_epsilon_scan(const GameArgs& a, const std::vector<int>& n_list,
                     std::chrono::steady_clock::time_point t0) {
    auto [g, rho] = a.load<double>();
    auto family = default_deviation_family(g);
    auto table = epsilon_report(g, rho, n_list, family, a.reps, RngStream(a.seed));
    CsvWriter csv({"N", "deviation_name", "reps", "estimate", "stderr", "improvement",
                   "improvement_stderr"});
    for (const auto& row : table.rows)
        csv.row({std::to_string(row.n), row.deviation_name, std::to_string(row.reps),
                 fmt(row.estimate), fmt(row.stderr_), fmt(row.improvement),
                 fmt(row.improvement_stderr)});
    for (const auto& s : table.summaries)
        csv.row({std::to_string(s.n), "family_max[" + s.best_rule + "]", std::to_string(a.reps),
                 "", "", fmt(s.family_improvement), fmt(s.stderr_)});
    emit(a, "epsilon-scan", csv.str(), t0);
    if (!a.out.empty()) std::cout << "wrote " << resolve_out(a.out) << "\n";
    return 0;
}

// ------------------------------------------------------------ chaos-scan --

int run_chaos_scan(const GameArgs& a, const std::vector<int>& n_list, int flow_atom,
                   std::chrono::steady_clock::time_point t0) {
    auto [g, rho] = a.load<double>();
    std::optional<int> fixed;
    if (flow_atom >= 0) fixed = flow_atom;
    auto curve = chaos_curve(g, rho, n_list, a.reps, RngStream(a.seed), fixed);
    CsvWriter csv({"N", "estimate", "stderr", "reps", "flow_atom"});
    for (const auto& row : curve.rows)
        csv.row({std::to_string(row.n), fmt(row.estimate), fmt(row.stderr_),
                 std::to_string(row.reps), row.flow_atom});
    if (curve.rows.size() >= 3)
        std::cout << "log-log slope = " << fmt(slope_fit(curve)) << "\n";
    emit(a, "chaos-scan", csv.str(), t0);
    if (!a.out.empty()) std::cout << "wrote " << resolve_out(a.out) << "\n";
    return 0;
}

// ----------------------------------------------------------- window-scan --

int run_window_scan(const GameArgs& a, int grid, std::chrono::steady_clock::time_point t0) {
    Rational beta = scalar_traits<Rational>::parse(a.beta);
    auto res = window_scan(beta, grid);
    CsvWriter csv({"c0", "c1", "consistency_pass", "optimality_pass", "first_failing_branch"});
    using tr = scalar_traits<Rational>;
    for (const auto& row : res.rows)
        csv.row({tr::str(row.c0), tr::str(row.c1), row.consistency_pass ? "1" : "0",
                 row.optimality_pass ? "1" : "0", row.first_failing_branch});

    nlohmann::json summary;
    summary["beta"] = tr::str(res.beta);
    summary["region_nonempty"] = res.region_nonempty;
    auto bounds = [&](const WindowBounds& b) {
        nlohmann::json j;
        j["c0_lo"] = tr::str(b.c0_lo);
        j["c0_hi"] = tr::str(b.c0_hi);
        j["c1_lo"] = tr::str(b.c1_lo);
        j["c1_hi"] = tr::str(b.c1_hi);
        return j;
    };
    if (res.region_nonempty) {
        summary["grid_hull"] = bounds(res.hull);
        summary["scan_window"] = bounds(res.oracle);
        summary["stated_window"] = bounds(res.stated);
        summary["discrepancies"] = res.discrepancies;
    }
    std::cout << summary.dump(2) << "\n";
    emit(a, "window-scan", csv.str(), t0, "window;beta=" + a.beta + ";grid=" + std::to_string(grid));
    if (!a.out.empty()) {
        write_file(resolve_out(a.out) + ".summary.json", summary.dump(2) + "\n");
        std::cout << "wrote " << resolve_out(a.out) << "\n";
    }
    return 0;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"correlated mean field game verification and simulation toolkit"};
    app.require_subcommand(1);

    GameArgs a;
    std::string phi_name = "phi0", deviation, n_csv = "2";
    int n_single = 2, grid = 16, flow_atom = -1;

    auto* verify = app.add_subcommand("verify", "run the R1/R2/(Con)/(Opt) checks");
    add_game_options(verify, a);

    auto* dpp = app.add_subcommand("dpp", "print the conditional value table of one branch");
    add_game_options(dpp, a);
    dpp->add_option("--phi", phi_name, "branch: phi0, phi+, phi-, phihat+, phihat-, or index");

    auto* sim = app.add_subcommand("simulate", "Monte Carlo estimate of J_1^N");
    add_game_options(sim, a);
    sim->add_option("--N", n_single, "number of players")->required();
    sim->add_option("--deviation", deviation, "deviation rule name for player 1");

    auto* eps = app.add_subcommand("epsilon-scan", "observed-improvement table over N");
    add_game_options(eps, a);
    eps->add_option("--N", n_csv, "comma-separated player counts")->required();

    auto* chaos = app.add_subcommand("chaos-scan", "E[dist_T(mu^1N, mu)] over N");
    add_game_options(chaos, a);
    chaos->add_option("--N", n_csv, "comma-separated player counts")->required();
    chaos->add_option("--flow", flow_atom, "condition on one flow atom index");

    auto* window = app.add_subcommand("window-scan", "map the feasible (c0, c1) window");
    window->add_option("--beta", a.beta, "toy beta, rational string");
    window->add_option("--grid", grid, "grid points per axis (>= 8)");
    window->add_option("--out", a.out, "output CSV path");
    window->add_option("--seed", a.seed, "meta seed (recorded in the manifest)");
    window->add_option("--mode", a.mode, "arithmetic mode (the scan is always exact)");

    CLI11_PARSE(app, argc, argv);
    auto t0 = std::chrono::steady_clock::now();

    auto parse_n_list = [&]() {
        std::vector<int> out;
        std::stringstream ss(n_csv);
        std::string item;
        while (std::getline(ss, item, ',')) {
            try {
                out.push_back(std::stoi(item));
            } catch (const std::exception&) {
                throw cmfg::input_error("bad --N list entry: " + item);
            }
        }
        if (out.empty()) throw cmfg::input_error("empty --N list");
        return out;
    };

    try {
        if (app.got_subcommand(verify))
            return a.mode == "float" ? run_verify<double>(a, t0) : run_verify<cmfg::Rational>(a, t0);
        if (app.got_subcommand(dpp))
            return a.mode == "float" ? run_dpp<double>(a, phi_name, t0)
                                     : run_dpp<cmfg::Rational>(a, phi_name, t0);
        if (app.got_subcommand(sim)) return run_simulate(a, n_single, deviation, t0);
        if (app.got_subcommand(eps)) return run_epsilon_scan(a, parse_n_list(), t0);
        if (app.got_subcommand(chaos)) return run_chaos_scan(a, parse_n_list(), flow_atom, t0);
        if (app.got_subcommand(window)) return run_window_scan(a, grid, t0);
    } catch (const cmfg::input_error& e) {
        std::cerr << "input error: " << e.what() << "\n";
        return 2;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 2;
    }
    return 2;
}
