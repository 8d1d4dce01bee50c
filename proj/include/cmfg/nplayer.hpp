#pragma once

// The N-player side: the induced correlated suggestion gamma^N (one flow,
// then i.i.d. strategies conditionally on it), Monte Carlo simulation of the
// N-player system with a deviating first player, the exact small-N cost
// enumerator, the exact best response over all progressive deviations of
// player 1 (N <= 3), and the equilibrium-defect report.
//
// Stream layout, all derived from one meta seed:
//   run r            -> root.derive(r)
//   flow draw        -> run.derive(0)
//   player j         -> run.derive(1 + j)
//     initial state  -> player.derive(0)
//     strategy draw  -> player.derive(1)
//     transition t   -> player.derive(2 + t)
//     rule noise t   -> player.derive(2 + T + t)

#include "cmfg/dpp.hpp"
#include "cmfg/mc.hpp"

#include <algorithm>
#include <map>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

namespace cmfg {

/// rho decomposed as rho_2 (flow marginal) and rho_1(.|m) (conditional
/// strategy tables), the product form behind gamma^N.
template <typename S>
class GammaSampler {
  public:
    explicit GammaSampler(const SuggestionAtoms<S>& rho) {
        using tr = scalar_traits<S>;
        for (const auto& a : rho.atoms()) {
            int f = find_flow(a.flow);
            int s = find_strategy(a.strategy);
            if (f == static_cast<int>(flows_.size())) {
                flows_.push_back(a.flow);
                flow_mass_.push_back(tr::zero());
                cond_.emplace_back();
            }
            if (s == static_cast<int>(strategies_.size())) strategies_.push_back(a.strategy);
            flow_mass_[f] += a.weight;
            bool hit = false;
            for (auto& [si, w] : cond_[f])
                if (si == s) {
                    w += a.weight;
                    hit = true;
                }
            if (!hit) cond_[f].emplace_back(s, a.weight);
        }
        for (int f = 0; f < n_flows(); ++f)
            for (auto& [si, w] : cond_[f]) w = w / flow_mass_[f];
        // Cumulative tables for sampling.
        double acc = 0.0;
        for (int f = 0; f < n_flows(); ++f) {
            acc += scalar_traits<S>::to_double(flow_mass_[f]);
            flow_cum_.push_back(acc);
        }
        flow_cum_.back() = 1.0;
        for (int f = 0; f < n_flows(); ++f) {
            std::vector<double> c;
            double a2 = 0.0;
            for (auto& [si, w] : cond_[f]) {
                a2 += scalar_traits<S>::to_double(w);
                c.push_back(a2);
            }
            c.back() = 1.0;
            cond_cum_.push_back(std::move(c));
        }
    }

    int n_flows() const { return static_cast<int>(flows_.size()); }
    int n_strategies() const { return static_cast<int>(strategies_.size()); }
    const MeasureFlow<S>& flow(int f) const { return flows_[f]; }
    const S& flow_mass(int f) const { return flow_mass_[f]; }
    const RestrictedStrategy& strategy(int s) const { return strategies_[s]; }
    /// rho_1(.|m) as (strategy index, conditional probability) pairs.
    const std::vector<std::pair<int, S>>& cond(int f) const { return cond_[f]; }

    /// rho_1 = sum_m rho_2(m) rho_1(.|m), indexed like strategies().
    std::vector<S> strategy_marginal() const {
        std::vector<S> out(n_strategies(), scalar_traits<S>::zero());
        for (int f = 0; f < n_flows(); ++f)
            for (const auto& [si, w] : cond_[f]) out[si] += flow_mass_[f] * w;
        return out;
    }

    int sample_flow(RngStream rng) const {
        double u = rng.uniform();
        for (int f = 0; f + 1 < n_flows(); ++f)
            if (u <= flow_cum_[f]) return f;
        return n_flows() - 1;
    }

    int sample_strategy(int f, RngStream rng) const {
        double u = rng.uniform();
        const auto& c = cond_cum_[f];
        for (int i = 0; i + 1 < static_cast<int>(c.size()); ++i)
            if (u <= c[i]) return cond_[f][i].first;
        return cond_[f].back().first;
    }

  private:
    int find_flow(const MeasureFlow<S>& m) const {
        for (int f = 0; f < n_flows(); ++f)
            if (flows_[f] == m) return f;
        return n_flows();
    }
    int find_strategy(const RestrictedStrategy& s) const {
        for (int i = 0; i < n_strategies(); ++i)
            if (strategies_[i] == s) return i;
        return n_strategies();
    }

    std::vector<MeasureFlow<S>> flows_;
    std::vector<S> flow_mass_;
    std::vector<RestrictedStrategy> strategies_;
    std::vector<std::vector<std::pair<int, S>>> cond_;
    std::vector<double> flow_cum_;
    std::vector<std::vector<double>> cond_cum_;
};

/// Suggestion assignment for one N-player run: marginal law equals gamma^N.
struct GammaAssignment {
    int flow = 0;
    std::vector<int> strategies;  // per player, indices into the sampler pool
};

template <typename S>
GammaAssignment sample_gamma_n(const GammaSampler<S>& sampler, int n_players, RngStream run) {
    GammaAssignment a;
    a.flow = sampler.sample_flow(run.derive(0));
    a.strategies.resize(n_players);
    for (int j = 0; j < n_players; ++j)
        a.strategies[j] = sampler.sample_strategy(a.flow, run.derive(1 + j).derive(1));
    return a;
}

/// Progressive deviation rule for player 1 in the N-player game. The rule
/// sees the suggested strategy, its own state history, and the observed
/// exclude-one empirical measures; `extra` carries the randomization device
/// of a randomized modification (null on exact evaluation paths).
template <typename S>
struct NRule {
    std::string name;
    std::function<int(const RestrictedStrategy&, int t, const std::vector<int>& xhist,
                      const std::vector<FiniteDist<S>>& emp_hist, RngStream* extra)>
        act;
};

struct SimOptions {
    // Relabels which per-player stream player j consumes; used by the
    // exchangeability test. Identity when null.
    const std::vector<int>* stream_permutation = nullptr;
    // Condition every replication on this flow atom (chaos diagnostics).
    std::optional<int> fixed_flow = std::nullopt;
};

struct SimEstimate {
    double mean = 0.0;
    double stderr_ = 0.0;
    long long reps = 0;
    std::vector<double> mean_own_state;  // player 1's mean state value per time
};

namespace detail {

/// Shared per-run state machine for the N-player system.
class NPlayerRun {
  public:
    NPlayerRun(const GameSpec<double>& g, const GammaSampler<double>& sampler, int n)
        : g_(&g), sampler_(&sampler), n_(n), states_(n), next_(n), counts_(g.n_states()) {
        if (n < 2) throw input_error("nplayer: need N >= 2");
        m0_cum_ = noise_partition(g.initial);
        if (g.kernel_m_independent) {
            // Kernel tables indexed [t][x][a] -> cumulative law.
            auto m = g.initial;
            for (int t = 0; t < g.horizon; ++t) {
                std::vector<std::vector<std::vector<double>>> xs;
                for (int x = 0; x < g.n_states(); ++x) {
                    std::vector<std::vector<double>> as;
                    for (int a = 0; a < g.n_actions(); ++a)
                        as.push_back(noise_partition(transition(g, t, x, m, a)));
                    xs.push_back(std::move(as));
                }
                kernel_cum_.push_back(std::move(xs));
            }
        }
    }

    /// Simulate one replication; returns player 1's realized cost.
    /// `traj` (optional) receives player 1's state per time; `emp_flow`
    /// (optional) receives the exclude-1 empirical distribution per time.
    double run(RngStream rs, const NRule<double>* deviation, const SimOptions& opt,
               std::vector<int>* traj = nullptr, std::vector<FiniteDist<double>>* emp_flow = nullptr,
               int* flow_out = nullptr) {
        const int T = g_->horizon;
        int flow = opt.fixed_flow ? *opt.fixed_flow : sampler_->sample_flow(rs.derive(0));
        if (flow_out) *flow_out = flow;

        auto player_stream = [&](int j) {
            int key = opt.stream_permutation ? (*opt.stream_permutation)[j] : j;
            return rs.derive(1 + static_cast<std::uint64_t>(key));
        };
        strategies_.resize(n_);
        for (int j = 0; j < n_; ++j) {
            RngStream ps = player_stream(j);
            states_[j] = sample_index(m0_cum_, ps.derive(0).uniform());
            strategies_[j] = sampler_->sample_strategy(flow, ps.derive(1));
        }

        double cost = 0.0;
        std::vector<int> xhist{states_[0]};
        std::vector<FiniteDist<double>> emp_hist;
        if (traj) *traj = {states_[0]};
        for (int t = 0; t <= T; ++t) {
            std::fill(counts_.begin(), counts_.end(), 0);
            for (int j = 0; j < n_; ++j) ++counts_[states_[j]];
            FiniteDist<double> e1 = exclude_one(states_[0]);
            emp_hist.push_back(e1);
            if (emp_flow) emp_flow->push_back(e1);
            if (t == T) {
                cost += g_->terminal(states_[0], e1);
                break;
            }
            // Player 1's action via the deviation (or the suggestion).
            int a0;
            if (deviation) {
                RngStream extra = player_stream(0).derive(2 + T + t);
                a0 = deviation->act(sampler_->strategy(strategies_[0]), t, xhist, emp_hist, &extra);
                if (a0 < 0 || a0 >= g_->n_actions())
                    throw input_error("nplayer: deviation returned bad action");
            } else {
                a0 = sampler_->strategy(strategies_[0])(t, states_[0]);
            }
            cost += g_->running(t, states_[0], e1, a0);
            for (int j = 0; j < n_; ++j) {
                int a = j == 0 ? a0 : sampler_->strategy(strategies_[j])(t, states_[j]);
                double u = player_stream(j).derive(2 + t).uniform();
                if (!kernel_cum_.empty()) {
                    next_[j] = sample_index(kernel_cum_[t][states_[j]][a], u);
                } else {
                    FiniteDist<double> ej = exclude_one(states_[j]);
                    next_[j] = sample_index(noise_partition(transition(*g_, t, states_[j], ej, a)), u);
                }
            }
            states_.swap(next_);
            xhist.push_back(states_[0]);
            if (traj) traj->push_back(states_[0]);
        }
        return cost;
    }

  private:
    FiniteDist<double> exclude_one(int own_state) const {
        std::vector<double> w(counts_.size());
        for (size_t x = 0; x < counts_.size(); ++x) {
            int c = counts_[x] - (static_cast<int>(x) == own_state ? 1 : 0);
            w[x] = static_cast<double>(c) / static_cast<double>(n_ - 1);
        }
        return FiniteDist<double>(std::move(w));
    }

    const GameSpec<double>* g_;
    const GammaSampler<double>* sampler_;
    int n_;
    std::vector<int> states_, next_, strategies_;
    std::vector<int> counts_;
    std::vector<double> m0_cum_;
    std::vector<std::vector<std::vector<std::vector<double>>>> kernel_cum_;
};

}  // namespace detail

/// Monte Carlo estimate of J_1^N under gamma^N with player 1 following the
/// suggestion (deviation = null) or the given progressive rule.
inline SimEstimate simulate(const GameSpec<double>& g, const SuggestionAtoms<double>& rho, int n,
                            const NRule<double>* deviation, long long reps, RngStream root,
                            const SimOptions& opt = {}) {
    if (reps < 2) throw input_error("simulate: need reps >= 2");
    GammaSampler<double> sampler(rho);
    detail::NPlayerRun engine(g, sampler, n);
    std::vector<double> own_sum(g.horizon + 1, 0.0);
    std::vector<int> traj;
    McEstimate mc = mc_accumulate(reps, [&](long long r) {
        double c = engine.run(root.derive(static_cast<std::uint64_t>(r)), deviation, opt, &traj);
        for (int t = 0; t <= g.horizon; ++t)
            own_sum[t] += scalar_traits<double>::to_double(g.state_values[traj[t]]);
        return c;
    });
    SimEstimate est{mc.mean, mc.stderr_, mc.reps, {}};
    est.mean_own_state.resize(g.horizon + 1);
    for (int t = 0; t <= g.horizon; ++t)
        est.mean_own_state[t] = own_sum[t] / static_cast<double>(reps);
    return est;
}

/// Exact rational J_1^N by full enumeration of suggestion assignments and
/// joint state trajectories. Guarded by the term-count bound.
inline Rational exact_j1n(const GameSpec<Rational>& g, const SuggestionAtoms<Rational>& rho, int n,
                          const NRule<Rational>* deviation = nullptr) {
    using R = Rational;
    if (n < 2) throw input_error("exact_j1n: need N >= 2");
    const int T = g.horizon;
    const int nx = g.n_states();
    double terms = std::pow(static_cast<double>(nx), n * (T + 1)) * rho.size();
    if (terms > 1e7) throw input_error("exact_j1n: enumeration guard exceeded");

    GammaSampler<R> sampler(rho);
    long long n_paths = 1;
    for (int i = 0; i < n * (T + 1); ++i) n_paths *= nx;

    R total(0);
    std::vector<int> strat(n);
    std::vector<std::vector<int>> x(T + 1, std::vector<int>(n));
    for (int f = 0; f < sampler.n_flows(); ++f) {
        // Enumerate strategy assignments from rho_1(.|m)^{otimes n}.
        const auto& cond = sampler.cond(f);
        long long n_assign = 1;
        for (int j = 0; j < n; ++j) n_assign *= static_cast<long long>(cond.size());
        for (long long ai = 0; ai < n_assign; ++ai) {
            long long code = ai;
            R w_assign = sampler.flow_mass(f);
            for (int j = 0; j < n; ++j) {
                int pick = static_cast<int>(code % cond.size());
                code /= cond.size();
                strat[j] = cond[pick].first;
                w_assign = w_assign * cond[pick].second;
            }
            for (long long pi = 0; pi < n_paths; ++pi) {
                long long pc = pi;
                for (int t = 0; t <= T; ++t)
                    for (int j = 0; j < n; ++j) {
                        x[t][j] = static_cast<int>(pc % nx);
                        pc /= nx;
                    }
                R prob = w_assign;
                for (int j = 0; j < n; ++j) prob = prob * g.initial[x[0][j]];
                if (prob == 0) continue;
                R cost(0);
                std::vector<int> xhist{x[0][0]};
                std::vector<FiniteDist<R>> emp_hist;
                for (int t = 0; t <= T; ++t) {
                    FiniteDist<R> e1 = empirical<R>(x[t], nx, 0);
                    emp_hist.push_back(e1);
                    if (t == T) {
                        cost += g.terminal(x[t][0], e1);
                        break;
                    }
                    int a0 = deviation
                                 ? deviation->act(sampler.strategy(strat[0]), t, xhist, emp_hist, nullptr)
                                 : sampler.strategy(strat[0])(t, x[t][0]);
                    if (a0 < 0 || a0 >= g.n_actions())
                        throw input_error("exact_j1n: deviation returned bad action");
                    cost += g.running(t, x[t][0], e1, a0);
                    for (int j = 0; j < n && prob != 0; ++j) {
                        int a = j == 0 ? a0 : sampler.strategy(strat[j])(t, x[t][j]);
                        FiniteDist<R> ej = empirical<R>(x[t], nx, j);
                        prob = prob * transition(g, t, x[t][j], ej, a)[x[t + 1][j]];
                    }
                    if (prob == 0) break;
                    xhist.push_back(x[t + 1][0]);
                }
                if (prob != 0) total += prob * cost;
            }
        }
    }
    return total;
}

/// Exact best response of player 1 against gamma^N: the minimum of J_1^N
/// over every progressive deviation. Solved by backward induction on the
/// observation tree (own history, observed empirical history) with exact
/// Bayes posteriors over the hidden flow, the other players' strategies and
/// their current states; the posteriors do not depend on player 1's policy,
/// so the per-node minimization attains the global minimum over the full
/// deviation class.
struct BestResponse {
    Rational value;
    Rational identity_value;
    Rational epsilon;  // identity_value - value >= 0
    NRule<Rational> witness;
};

inline BestResponse best_response_bruteforce(const GameSpec<Rational>& g,
                                             const SuggestionAtoms<Rational>& rho, int n) {
    using R = Rational;
    if (n > 3 || g.horizon > 2) throw input_error("best_response_bruteforce: N <= 3 and T <= 2 only");
    if (n < 2) throw input_error("best_response_bruteforce: need N >= 2");
    const int T = g.horizon;
    const int nx = g.n_states();
    const int n_others = n - 1;
    GammaSampler<R> sampler(rho);

    // Ordered state vectors of the other players.
    std::vector<std::vector<int>> others_states;
    {
        long long count = 1;
        for (int j = 0; j < n_others; ++j) count *= nx;
        for (long long c = 0; c < count; ++c) {
            long long code = c;
            std::vector<int> v(n_others);
            for (int j = 0; j < n_others; ++j) {
                v[j] = static_cast<int>(code % nx);
                code /= nx;
            }
            others_states.push_back(std::move(v));
        }
    }
    auto counts_of = [&](const std::vector<int>& v) {
        std::vector<int> c(nx, 0);
        for (int s : v) ++c[s];
        return c;
    };
    auto counts_dist = [&](const std::vector<int>& c) {
        std::vector<R> w(nx);
        for (int xx = 0; xx < nx; ++xx) w[xx] = R(c[xx], n_others);
        return FiniteDist<R>(std::move(w));
    };

    // Hidden configuration: (flow, strategies of others, ordered states).
    struct Hidden {
        int flow;
        std::vector<int> strat;  // per other player
        std::vector<int> state;
    };

    struct Node {
        int t;
        std::vector<int> xhist;
        std::vector<std::vector<int>> ehist;  // observed counts per time
        std::vector<Hidden> hidden;
        std::vector<R> belief;  // unnormalized, same order as hidden
        R reach_weight;         // policy-independent part of the reach probability
        std::map<std::pair<int, std::vector<int>>, int> children;  // (y, counts) -> node
        R value;
        int argmin = -1;
    };

    // The witness rule's decision table, keyed by the full observable
    // history of a node plus the suggested strategy index.
    auto table = std::make_shared<
        std::map<std::tuple<int, int, std::vector<int>, std::vector<std::vector<int>>>, int>>();

    R total_value(0);
    std::vector<R> phi_mass = sampler.strategy_marginal();
    for (int s1 = 0; s1 < sampler.n_strategies(); ++s1) {
        if (phi_mass[s1] == 0) continue;
        std::vector<Node> nodes;
        std::vector<int> roots;

        // Root layer: own x0 and observed e0; belief over hidden configs.
        for (int x0 = 0; x0 < nx; ++x0) {
            if (g.initial[x0] == 0) continue;
            std::map<std::vector<int>, int> by_counts;
            for (const auto& sv : others_states) {
                std::vector<int> c = counts_of(sv);
                int id;
                auto it = by_counts.find(c);
                if (it == by_counts.end()) {
                    Node nd;
                    nd.t = 0;
                    nd.xhist = {x0};
                    nd.ehist = {c};
                    nd.reach_weight = g.initial[x0];
                    id = static_cast<int>(nodes.size());
                    by_counts.emplace(c, id);
                    nodes.push_back(std::move(nd));
                    roots.push_back(id);
                } else {
                    id = it->second;
                }
                // Belief entries: P(flow | phi1) * prod cond * prod m0.
                for (int f = 0; f < sampler.n_flows(); ++f) {
                    R pf(0);
                    for (const auto& [si, w] : sampler.cond(f))
                        if (si == s1) pf = sampler.flow_mass(f) * w;
                    if (pf == 0) continue;
                    long long n_assign = 1;
                    const auto& cond = sampler.cond(f);
                    for (int j = 0; j < n_others; ++j) n_assign *= static_cast<long long>(cond.size());
                    for (long long ai = 0; ai < n_assign; ++ai) {
                        long long code = ai;
                        Hidden h;
                        h.flow = f;
                        h.state = sv;
                        R w = pf;
                        for (int j = 0; j < n_others; ++j) {
                            int pick = static_cast<int>(code % cond.size());
                            code /= cond.size();
                            h.strat.push_back(cond[pick].first);
                            w = w * cond[pick].second;
                        }
                        for (int j = 0; j < n_others; ++j) w = w * g.initial[sv[j]];
                        nodes[id].hidden.push_back(std::move(h));
                        nodes[id].belief.push_back(w);
                    }
                }
            }
        }

        // Expand layers forward. Transitions of the others depend on their
        // own exclude-one empirical measures, which include player 1's
        // current state.
        std::vector<int> frontier = roots;
        for (int t = 0; t < T; ++t) {
            std::vector<int> next_frontier;
            for (int id : frontier) {
                int own = nodes[id].xhist.back();
                // Distribution of the others' next ordered vector per hidden.
                // child key: (own next y, next counts)
                std::map<std::pair<int, std::vector<int>>, int> children;
                for (size_t hi = 0; hi < nodes[id].hidden.size(); ++hi) {
                    const Hidden& h = nodes[id].hidden[hi];
                    for (const auto& sv : others_states) {
                        R p(1);
                        for (int j = 0; j < n_others && p != 0; ++j) {
                            // Empirical seen by other j: everyone but j.
                            std::vector<int> c(nx, 0);
                            ++c[own];
                            for (int k = 0; k < n_others; ++k)
                                if (k != j) ++c[h.state[k]];
                            std::vector<R> w(nx);
                            for (int xx = 0; xx < nx; ++xx) w[xx] = R(c[xx], n - 1);
                            FiniteDist<R> ej(std::move(w));
                            int a = sampler.strategy(h.strat[j])(t, h.state[j]);
                            p = p * transition(g, t, h.state[j], ej, a)[sv[j]];
                        }
                        if (p == 0) continue;
                        std::vector<int> c = counts_of(sv);
                        for (int y = 0; y < nx; ++y) {
                            auto key = std::make_pair(y, c);
                            auto it = nodes[id].children.find(key);
                            int cid;
                            if (it == nodes[id].children.end()) {
                                Node nd;
                                nd.t = t + 1;
                                nd.xhist = nodes[id].xhist;
                                nd.xhist.push_back(y);
                                nd.ehist = nodes[id].ehist;
                                nd.ehist.push_back(c);
                                nd.reach_weight = R(0);
                                cid = static_cast<int>(nodes.size());
                                nodes.push_back(std::move(nd));
                                nodes[id].children.emplace(key, cid);
                                next_frontier.push_back(cid);
                            } else {
                                cid = it->second;
                            }
                            Hidden hh;
                            hh.flow = h.flow;
                            hh.strat = h.strat;
                            hh.state = sv;
                            // Merge identical hidden configs.
                            bool merged = false;
                            for (size_t k = 0; k < nodes[cid].hidden.size(); ++k) {
                                const Hidden& ex = nodes[cid].hidden[k];
                                if (ex.flow == hh.flow && ex.strat == hh.strat &&
                                    ex.state == hh.state) {
                                    nodes[cid].belief[k] += nodes[id].belief[hi] * p;
                                    merged = true;
                                    break;
                                }
                            }
                            if (!merged) {
                                nodes[cid].hidden.push_back(std::move(hh));
                                nodes[cid].belief.push_back(nodes[id].belief[hi] * p);
                            }
                        }
                    }
                }
            }
            frontier = std::move(next_frontier);
        }

        // Backward induction over the observation tree. Node masses are the
        // unnormalized beliefs; values are conditional expectations, so each
        // step renormalizes by the node mass.
        for (int id = static_cast<int>(nodes.size()) - 1; id >= 0; --id) {
            Node& nd = nodes[id];
            R mass(0);
            for (const R& b : nd.belief) mass += b;
            std::vector<int> ecounts = nd.ehist.back();
            FiniteDist<R> et = counts_dist(ecounts);
            if (nd.t == T) {
                nd.value = g.terminal(nd.xhist.back(), et);
                continue;
            }
            bool first = true;
            for (int a = 0; a < g.n_actions(); ++a) {
                R q = g.running(nd.t, nd.xhist.back(), et, a) * mass;
                FiniteDist<R> law = transition(g, nd.t, nd.xhist.back(), et, a);
                for (const auto& [key, cid] : nd.children) {
                    // Child mass already aggregates P(next counts | hidden);
                    // multiply by player 1's own kernel factor.
                    R cmass(0);
                    for (const R& b : nodes[cid].belief) cmass += b;
                    q += law[key.first] * cmass * nodes[cid].value;
                }
                q = q / mass;
                if (first || q < nd.value) {
                    nd.value = q;
                    nd.argmin = a;
                    first = false;
                }
            }
            (*table)[{s1, nd.t, nd.xhist, nd.ehist}] = nd.argmin;
        }

        // Branch value: sum over roots of P(x0) P(phi1, e0) V(root); the
        // node masses already carry P(phi1), so no outer reweighting.
        for (int id : roots) {
            R mass(0);
            for (const R& b : nodes[id].belief) mass += b;
            total_value += nodes[id].reach_weight * mass * nodes[id].value;
        }
    }

    BestResponse out;
    out.value = total_value;
    out.identity_value = exact_j1n(g, rho, n);
    out.epsilon = out.identity_value - out.value;
    out.witness.name = "best_response";
    int n_states = nx;
    auto sampler_copy = std::make_shared<GammaSampler<R>>(rho);
    out.witness.act = [table, sampler_copy, n_states, n](
                          const RestrictedStrategy& phi, int t, const std::vector<int>& xh,
                          const std::vector<FiniteDist<R>>& emp, RngStream*) {
        int s1 = -1;
        for (int s = 0; s < sampler_copy->n_strategies(); ++s)
            if (sampler_copy->strategy(s) == phi) s1 = s;
        std::vector<std::vector<int>> ehist;
        for (const auto& e : emp) {
            std::vector<int> c(n_states);
            for (int xx = 0; xx < n_states; ++xx) {
                Rational cnt = e[xx] * (n - 1);
                c[xx] = static_cast<int>(numerator(cnt).convert_to<long long>() /
                                         denominator(cnt).convert_to<long long>());
            }
            ehist.push_back(std::move(c));
        }
        auto it = table->find({s1, t, xh, ehist});
        if (it == table->end()) throw input_error("best response witness: unreachable node");
        return it->second;
    };
    return out;
}

/// The built-in deviation family: identity, constant actions, the
/// suggestion flip, a myopic one-step lookahead against the observed
/// empirical measure, and threshold rules on the observed empirical mean.
template <typename S>
std::vector<NRule<S>> default_deviation_family(const GameSpec<S>& g) {
    using tr = scalar_traits<S>;
    std::vector<NRule<S>> family;
    family.push_back({"identity", [](const RestrictedStrategy& phi, int t, const std::vector<int>& xh,
                                     const std::vector<FiniteDist<S>>&, RngStream*) {
                          return phi(t, xh.back());
                      }});
    for (int a = 0; a < g.n_actions(); ++a)
        family.push_back({"const_" + g.action_names[a],
                          [a](const RestrictedStrategy&, int, const std::vector<int>&,
                              const std::vector<FiniteDist<S>>&, RngStream*) { return a; }});
    int na = g.n_actions();
    family.push_back({"flip", [na](const RestrictedStrategy& phi, int t, const std::vector<int>& xh,
                                   const std::vector<FiniteDist<S>>&, RngStream*) {
                          return (phi(t, xh.back()) + 1) % na;
                      }});
    const GameSpec<S>* gp = &g;
    family.push_back(
        {"myopic", [gp](const RestrictedStrategy& phi, int t, const std::vector<int>& xh,
                        const std::vector<FiniteDist<S>>& emp, RngStream*) {
             // One-step lookahead against the observed empirical mean: only
             // the current action is optimized; the tail follows the
             // suggestion, with the observed empirical transported forward
             // by the suggested strategy as the measure proxy.
             const int T = gp->horizon;
             const int nx = gp->n_states();
             int x = xh.back();
             std::vector<FiniteDist<S>> e(T + 1, emp.back());
             for (int s = t; s < T; ++s) {
                 std::vector<S> next(nx, tr::zero());
                 for (int xx = 0; xx < nx; ++xx) {
                     if (e[s][xx] == tr::zero()) continue;
                     FiniteDist<S> law = gp->kernel(s, xx, e[s], phi(s, xx));
                     for (int y = 0; y < nx; ++y) next[y] += e[s][xx] * law[y];
                 }
                 e[s + 1] = FiniteDist<S>(std::move(next));
             }
             // Suggested-strategy cost-to-go from (s, y) along the proxy.
             std::vector<std::vector<S>> tail(T + 1, std::vector<S>(nx));
             for (int y = 0; y < nx; ++y) tail[T][y] = gp->terminal(y, e[T]);
             for (int s = T - 1; s > t; --s)
                 for (int y = 0; y < nx; ++y) {
                     int a = phi(s, y);
                     S q = gp->running(s, y, e[s], a);
                     FiniteDist<S> law = gp->kernel(s, y, e[s], a);
                     for (int z = 0; z < nx; ++z) q += law[z] * tail[s + 1][z];
                     tail[s][y] = q;
                 }
             int best = 0;
             S bestq = tr::zero();
             for (int a = 0; a < gp->n_actions(); ++a) {
                 S q = gp->running(t, x, e[t], a);
                 FiniteDist<S> law = gp->kernel(t, x, e[t], a);
                 for (int y = 0; y < nx; ++y) q += law[y] * tail[t + 1][y];
                 if (a == 0 || q < bestq) {
                     bestq = q;
                     best = a;
                 }
             }
             return best;
         }});
    const std::vector<std::pair<std::string, S>> thresholds = {
        {"thr_0", tr::zero()},          {"thr_+1/4", tr::from_ratio(1, 4)},
        {"thr_-1/4", tr::from_ratio(-1, 4)}, {"thr_+1/2", tr::from_ratio(1, 2)},
        {"thr_-1/2", tr::from_ratio(-1, 2)},
    };
    for (const auto& [name, thr] : thresholds)
        family.push_back({name, [gp, thr, na](const RestrictedStrategy&, int, const std::vector<int>&,
                                              const std::vector<FiniteDist<S>>& emp, RngStream*) {
                              S m = mean_under(gp->state_values, emp.back());
                              return m >= thr ? na - 1 : 0;
                          }});
    return family;
}

struct EpsilonRow {
    int n;
    std::string deviation_name;
    long long reps;
    double estimate;     // J_1^N under the deviation
    double stderr_;      // of the estimate
    double improvement;  // paired J_1^N(identity) - J_1^N(deviation)
    double improvement_stderr;
};

struct EpsilonSummary {
    int n;
    std::string best_rule;
    double family_improvement;  // max over the family, clipped at 0
    double stderr_;             // of the best rule's paired estimator
};

struct EpsilonTable {
    std::vector<EpsilonRow> rows;
    std::vector<EpsilonSummary> summaries;
};

/// Observed-improvement table: for each N, the paired common-random-number
/// estimate of J_1^N(identity) - J_1^N(deviation) per family rule. The
/// family maximum is a LOWER bound on the equilibrium defect epsilon_N,
/// never epsilon_N itself.
inline EpsilonTable epsilon_report(const GameSpec<double>& g, const SuggestionAtoms<double>& rho,
                                   const std::vector<int>& n_list,
                                   const std::vector<NRule<double>>& family, long long reps,
                                   RngStream root) {
    if (family.empty()) throw input_error("epsilon_report: empty deviation family");
    if (reps < 2) throw input_error("epsilon_report: need reps >= 2");
    EpsilonTable out;
    GammaSampler<double> sampler(rho);
    for (size_t ni = 0; ni < n_list.size(); ++ni) {
        int n = n_list[ni];
        detail::NPlayerRun engine(g, sampler, n);
        RngStream base = root.derive(ni);
        std::vector<double> iota_cost(reps);
        for (long long r = 0; r < reps; ++r)
            iota_cost[r] = engine.run(base.derive(static_cast<std::uint64_t>(r)), nullptr, {});
        EpsilonSummary best{n, "", 0.0, 0.0};
        bool first = true;
        for (const auto& rule : family) {
            double sum = 0.0, sumsq = 0.0, dsum = 0.0, dsumsq = 0.0;
            for (long long r = 0; r < reps; ++r) {
                double c = engine.run(base.derive(static_cast<std::uint64_t>(r)), &rule, {});
                double d = iota_cost[r] - c;
                sum += c;
                sumsq += c * c;
                dsum += d;
                dsumsq += d * d;
            }
            EpsilonRow row;
            row.n = n;
            row.deviation_name = rule.name;
            row.reps = reps;
            row.estimate = sum / reps;
            row.stderr_ = std::sqrt(
                std::max((sumsq - sum * sum / reps) / (reps - 1), 0.0) / static_cast<double>(reps));
            row.improvement = dsum / reps;
            row.improvement_stderr = std::sqrt(
                std::max((dsumsq - dsum * dsum / reps) / (reps - 1), 0.0) / static_cast<double>(reps));
            if (first || row.improvement > best.family_improvement) {
                best.best_rule = rule.name;
                best.family_improvement = row.improvement;
                best.stderr_ = row.improvement_stderr;
                first = false;
            }
            out.rows.push_back(std::move(row));
        }
        if (best.family_improvement < 0.0) {
            best.family_improvement = 0.0;  // identity is always available
            best.best_rule = "identity";
            best.stderr_ = 0.0;
        }
        out.summaries.push_back(std::move(best));
    }
    return out;
}

}  // namespace cmfg
