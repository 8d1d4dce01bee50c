#pragma once

// Config ingestion: one self-describing JSON document with game, suggestion
// and experiment blocks. All probabilities and costs are strings so the
// exact mode never sees a rounded value. Kernels and costs are either
// m-independent tensors over (t, x, a) or per-measure-atom tables; atom
// tables dispatch by nearest measure in dist (ties to the lowest index).

#include "cmfg/toy.hpp"

#include <fstream>
#include <memory>
#include <string>
#include <vector>

#include "json.hpp"

namespace cmfg {

using json = nlohmann::json;

inline json load_json_file(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw input_error("cannot open config file: " + path);
    json j;
    try {
        in >> j;
    } catch (const json::exception& e) {
        throw input_error("config parse error in " + path + ": " + e.what());
    }
    return j;
}

namespace detail {

template <typename S>
S parse_scalar(const json& j, const std::string& where) {
    if (j.is_string()) return scalar_traits<S>::parse(j.get<std::string>());
    if (j.is_number_integer()) return scalar_traits<S>::from_ratio(j.get<long long>(), 1);
    throw input_error("expected a number string at " + where);
}

template <typename S>
FiniteDist<S> parse_dist(const json& j, int expect, const std::string& where) {
    if (!j.is_array() || static_cast<int>(j.size()) != expect)
        throw input_error("expected a distribution of size " + std::to_string(expect) + " at " + where);
    std::vector<S> w;
    for (const auto& x : j) w.push_back(parse_scalar<S>(x, where));
    try {
        return FiniteDist<S>(std::move(w));
    } catch (const input_error& e) {
        throw input_error(where + ": " + e.what());
    }
}

/// Tensor [t][x][a] -> value, or per-measure-atom list of such tensors.
template <typename S, typename Leaf>
struct MTable {
    bool by_atoms = false;
    std::vector<FiniteDist<S>> measures;
    std::vector<std::vector<Leaf>> tables;  // [atom][t*nx*na + x*na + a]

    const Leaf& at(int t, int x, int a, const FiniteDist<S>& m, int nx, int na) const {
        int atom = 0;
        if (by_atoms) {
            S best = dist(m, measures[0]);
            for (int i = 1; i < static_cast<int>(measures.size()); ++i) {
                S d = dist(m, measures[i]);
                if (d < best) {
                    best = d;
                    atom = i;
                }
            }
        }
        return tables[atom][(t * nx + x) * na + a];
    }
};

template <typename S, typename Leaf, typename ParseLeaf>
MTable<S, Leaf> parse_mtable(const json& j, int T, int nx, int na, const std::string& where,
                             ParseLeaf&& leaf) {
    MTable<S, Leaf> out;
    auto parse_tensor = [&](const json& tens) {
        if (!tens.is_array() || static_cast<int>(tens.size()) != T)
            throw input_error(where + ": tensor must have " + std::to_string(T) + " time layers");
        std::vector<Leaf> flat;
        for (int t = 0; t < T; ++t) {
            const auto& xs = tens[t];
            if (!xs.is_array() || static_cast<int>(xs.size()) != nx)
                throw input_error(where + ": state layer size mismatch");
            for (int x = 0; x < nx; ++x) {
                const auto& as = xs[x];
                if (!as.is_array() || static_cast<int>(as.size()) != na)
                    throw input_error(where + ": action layer size mismatch");
                for (int a = 0; a < na; ++a) flat.push_back(leaf(as[a]));
            }
        }
        return flat;
    };
    std::string type = j.value("type", "tensor");
    if (type == "tensor") {
        out.tables.push_back(parse_tensor(j.at(j.contains("probs") ? "probs" : "values")));
    } else if (type == "atoms") {
        for (const auto& m : j.at("measures")) out.measures.push_back(parse_dist<S>(m, nx, where));
        for (const auto& t : j.at("tables")) out.tables.push_back(parse_tensor(t));
        if (out.measures.empty() || out.measures.size() != out.tables.size())
            throw input_error(where + ": measures and tables must align");
        out.by_atoms = true;
    } else {
        throw input_error(where + ": unknown table type '" + type + "'");
    }
    return out;
}

}  // namespace detail

template <typename S>
GameSpec<S> game_from_json(const json& jgame) {
    using tr = scalar_traits<S>;
    if (jgame.contains("builtin")) {
        std::string name = jgame.at("builtin").get<std::string>();
        if (name != "toy") throw input_error("unknown builtin game: " + name);
        const auto& p = jgame.at("params");
        ToyParams<S> tp{detail::parse_scalar<S>(p.at("beta"), "params.beta"),
                        detail::parse_scalar<S>(p.at("c0"), "params.c0"),
                        detail::parse_scalar<S>(p.at("c1"), "params.c1")};
        return toy_game(tp);
    }
    GameSpec<S> g;
    g.horizon = jgame.at("horizon").get<int>();
    if (g.horizon < 1) throw input_error("game.horizon must be >= 1");
    for (const auto& s : jgame.at("states")) g.state_names.push_back(s.get<std::string>());
    for (const auto& a : jgame.at("actions")) g.action_names.push_back(a.get<std::string>());
    const int nx = g.n_states(), na = g.n_actions();
    if (nx < 1 || na < 1) throw input_error("game needs nonempty state and action sets");
    if (jgame.contains("state_values"))
        for (const auto& v : jgame.at("state_values"))
            g.state_values.push_back(detail::parse_scalar<S>(v, "state_values"));
    else
        for (int x = 0; x < nx; ++x) g.state_values.push_back(tr::from_ratio(x, 1));
    if (static_cast<int>(g.state_values.size()) != nx)
        throw input_error("state_values size mismatch");
    g.initial = detail::parse_dist<S>(jgame.at("initial"), nx, "game.initial");

    auto kern = std::make_shared<detail::MTable<S, FiniteDist<S>>>(
        detail::parse_mtable<S, FiniteDist<S>>(jgame.at("kernel"), g.horizon, nx, na, "game.kernel",
                                               [&](const json& leaf) {
                                                   return detail::parse_dist<S>(leaf, nx,
                                                                                "game.kernel");
                                               }));
    g.kernel_m_independent = !kern->by_atoms;
    g.kernel = [kern, nx, na](int t, int x, const FiniteDist<S>& m, int a) {
        return kern->at(t, x, a, m, nx, na);
    };
    auto run = std::make_shared<detail::MTable<S, S>>(detail::parse_mtable<S, S>(
        jgame.at("running"), g.horizon, nx, na, "game.running",
        [&](const json& leaf) { return detail::parse_scalar<S>(leaf, "game.running"); }));
    g.running = [run, nx, na](int t, int x, const FiniteDist<S>& m, int a) {
        return run->at(t, x, a, m, nx, na);
    };
    // Terminal costs: flat over states, or per-atom lists.
    const auto& jterm = jgame.at("terminal");
    std::string ttype = jterm.value("type", "tensor");
    auto parse_term = [&](const json& v) {
        if (!v.is_array() || static_cast<int>(v.size()) != nx)
            throw input_error("game.terminal: need one value per state");
        std::vector<S> out;
        for (const auto& x : v) out.push_back(detail::parse_scalar<S>(x, "game.terminal"));
        return out;
    };
    if (ttype == "tensor") {
        auto vals = std::make_shared<std::vector<S>>(parse_term(jterm.at("values")));
        g.terminal = [vals](int x, const FiniteDist<S>&) { return (*vals)[x]; };
    } else if (ttype == "atoms") {
        auto measures = std::make_shared<std::vector<FiniteDist<S>>>();
        auto vals = std::make_shared<std::vector<std::vector<S>>>();
        for (const auto& m : jterm.at("measures"))
            measures->push_back(detail::parse_dist<S>(m, nx, "game.terminal"));
        for (const auto& t : jterm.at("tables")) vals->push_back(parse_term(t));
        if (measures->empty() || measures->size() != vals->size())
            throw input_error("game.terminal: measures and tables must align");
        g.terminal = [measures, vals](int x, const FiniteDist<S>& m) {
            int atom = 0;
            S best = dist(m, (*measures)[0]);
            for (int i = 1; i < static_cast<int>(measures->size()); ++i) {
                S d = dist(m, (*measures)[i]);
                if (d < best) {
                    best = d;
                    atom = i;
                }
            }
            return (*vals)[atom][x];
        };
    } else {
        throw input_error("game.terminal: unknown table type '" + ttype + "'");
    }
    return g;
}

template <typename S>
SuggestionAtoms<S> suggestion_from_json(const json& jsug, const GameSpec<S>& g) {
    if (jsug.contains("builtin")) {
        std::string name = jsug.at("builtin").get<std::string>();
        if (name != "toy") throw input_error("unknown builtin suggestion: " + name);
        const auto& p = jsug.at("params");
        ToyParams<S> tp{detail::parse_scalar<S>(p.at("beta"), "params.beta"),
                        scalar_traits<S>::one(), scalar_traits<S>::one()};
        return toy_rho(tp);
    }
    const int T = g.horizon, nx = g.n_states(), na = g.n_actions();
    std::vector<typename SuggestionAtoms<S>::Atom> atoms;
    for (const auto& ja : jsug.at("atoms")) {
        const auto& jst = ja.at("strategy");
        if (!jst.is_array() || static_cast<int>(jst.size()) != T)
            throw input_error("suggestion.strategy: need T rows");
        std::vector<int> tab;
        for (const auto& row : jst) {
            if (!row.is_array() || static_cast<int>(row.size()) != nx)
                throw input_error("suggestion.strategy: need |X| entries per row");
            for (const auto& a : row) {
                int act = a.get<int>();
                if (act < 0 || act >= na) throw input_error("suggestion.strategy: bad action index");
                tab.push_back(act);
            }
        }
        const auto& jf = ja.at("flow");
        if (!jf.is_array() || static_cast<int>(jf.size()) != T + 1)
            throw input_error("suggestion.flow: need T+1 distributions");
        std::vector<FiniteDist<S>> entries;
        for (const auto& d : jf) entries.push_back(detail::parse_dist<S>(d, nx, "suggestion.flow"));
        atoms.push_back({RestrictedStrategy(T, nx, std::move(tab)),
                         MeasureFlow<S>(std::move(entries)),
                         detail::parse_scalar<S>(ja.at("weight"), "suggestion.weight")});
    }
    return SuggestionAtoms<S>(std::move(atoms));
}

/// Serialization of a suggestion back to the config schema.
template <typename S>
json suggestion_to_json(const SuggestionAtoms<S>& rho) {
    json out;
    out["atoms"] = json::array();
    for (const auto& a : rho.atoms()) {
        json ja;
        ja["weight"] = scalar_traits<S>::str(a.weight);
        json st = json::array();
        for (int t = 0; t < a.strategy.horizon(); ++t) {
            json row = json::array();
            for (int x = 0; x < a.strategy.n_states(); ++x) row.push_back(a.strategy(t, x));
            st.push_back(row);
        }
        ja["strategy"] = st;
        json fl = json::array();
        for (int t = 0; t < a.flow.length(); ++t) {
            json d = json::array();
            for (int x = 0; x < a.flow[t].size(); ++x)
                d.push_back(scalar_traits<S>::str(a.flow[t][x]));
            fl.push_back(d);
        }
        ja["flow"] = fl;
        out["atoms"].push_back(ja);
    }
    return out;
}

}  // namespace cmfg
