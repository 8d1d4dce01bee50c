#pragma once

// Game primitives: horizon, labeled state/action spaces, initial law, the
// transition kernel (law of the system function under uniform noise),
// running/terminal costs, and the assumption diagnostics.
//
// The kernel is the primary object; the noise realization is derived from it
// by inverse CDF in the fixed state order, which makes couplings across
// different measure arguments reproducible.

#include "cmfg/dist.hpp"
#include "cmfg/rng.hpp"
#include "cmfg/scalar.hpp"

#include <functional>
#include <sstream>
#include <string>
#include <vector>

namespace cmfg {

template <typename S>
struct GameSpec {
    int horizon = 0;  // T
    std::vector<std::string> state_names;
    std::vector<std::string> action_names;
    std::vector<S> state_values;  // numeric reading of the state labels
    FiniteDist<S> initial;        // m_0
    // (t, x, m, a) -> law of the next state, t in [0, T-1]
    std::function<FiniteDist<S>(int, int, const FiniteDist<S>&, int)> kernel;
    // (t, x, m, a) -> running cost f
    std::function<S(int, int, const FiniteDist<S>&, int)> running;
    // (x, m) -> terminal cost F
    std::function<S(int, const FiniteDist<S>&)> terminal;
    // True when the kernel ignores its measure argument; enables the
    // precomputed fast path in the N-player simulator.
    bool kernel_m_independent = false;

    int n_states() const { return static_cast<int>(state_names.size()); }
    int n_actions() const { return static_cast<int>(action_names.size()); }

    void require_time(int t) const {
        if (t < 0 || t >= horizon) throw input_error("time index out of range");
    }
};

/// Law of the next state. Validates the time index and the returned law.
template <typename S>
FiniteDist<S> transition(const GameSpec<S>& g, int t, int x, const FiniteDist<S>& m, int a,
                         const Tols& tols = {}) {
    g.require_time(t);
    FiniteDist<S> out = g.kernel(t, x, m, a);
    if (out.size() != g.n_states()) throw input_error("kernel: wrong support size");
    // Re-validate: the invariants must hold for every queried argument.
    return FiniteDist<S>(out.weights(), tols);
}

/// Interval partition of [0,1] realizing a law by inverse CDF in the fixed
/// state order: state i owns (c_{i-1}, c_i] with c_i the running sum.
template <typename S>
std::vector<S> noise_partition(const FiniteDist<S>& law) {
    std::vector<S> cum(law.size());
    S acc = scalar_traits<S>::zero();
    for (int i = 0; i < law.size(); ++i) {
        acc += law[i];
        cum[i] = acc;
    }
    return cum;
}

/// Inverse-CDF draw against the partition: smallest positive-mass i with
/// u <= c_i (zero-length intervals own no draws).
template <typename S>
int sample_index(const std::vector<S>& cum, double u) {
    int n = static_cast<int>(cum.size());
    double prev = 0.0;
    for (int i = 0; i + 1 < n; ++i) {
        double c = scalar_traits<S>::to_double(cum[i]);
        if (c > prev && u <= c) return i;
        prev = c;
    }
    return n - 1;
}

/// State drawn by inverse CDF; equal uniforms yield the monotone coupling.
template <typename S>
int sample_next(const GameSpec<S>& g, RngStream& rng, int t, int x, const FiniteDist<S>& m, int a) {
    FiniteDist<S> law = transition(g, t, x, m, a);
    return sample_index(noise_partition(law), rng.uniform());
}

template <typename S>
struct NondegReport {
    bool pass = true;
    bool vacuous = false;  // empty measure list
    S min_entry = scalar_traits<S>::one();
    std::vector<std::string> violations;  // "(t,x,m#,a) -> y has zero mass"
};

/// (A1): every kernel entry strictly positive for all (t,x,a) and all
/// supplied measures.
template <typename S>
NondegReport<S> check_nondegeneracy(const GameSpec<S>& g, const std::vector<FiniteDist<S>>& m_list) {
    NondegReport<S> rep;
    if (m_list.empty()) {
        rep.vacuous = true;
        return rep;
    }
    for (int t = 0; t < g.horizon; ++t)
        for (int x = 0; x < g.n_states(); ++x)
            for (int a = 0; a < g.n_actions(); ++a)
                for (int mi = 0; mi < static_cast<int>(m_list.size()); ++mi) {
                    FiniteDist<S> law = transition(g, t, x, m_list[mi], a);
                    for (int y = 0; y < law.size(); ++y) {
                        if (law[y] < rep.min_entry) rep.min_entry = law[y];
                        if (law[y] <= scalar_traits<S>::zero()) {
                            rep.pass = false;
                            std::ostringstream os;
                            os << "P(y=" << g.state_names[y] << " | t=" << t
                               << ", x=" << g.state_names[x] << ", m#" << mi
                               << ", a=" << g.action_names[a] << ") = 0";
                            rep.violations.push_back(os.str());
                        }
                    }
                }
    return rep;
}

struct LipschitzReport {
    double ratio_f = 0.0;  // max |f(..m) - f(..m~)| / dist(m, m~)
    double ratio_F = 0.0;
    double max_ratio = 0.0;
    int pairs = 0;
};

/// (A4) spot check: empirical lower bound on the Lipschitz constant of the
/// costs in the measure argument, over randomly sampled measure pairs.
template <typename S>
LipschitzReport lipschitz_spotcheck(const GameSpec<S>& g, int samples, RngStream rng) {
    using tr = scalar_traits<S>;
    if (samples < 2) throw input_error("lipschitz_spotcheck: need samples >= 2");
    auto random_dist = [&](RngStream& r) {
        // Weights on a 1/2^20 grid so the rational mode stays exact.
        const long long grid = 1 << 20;
        std::vector<long long> raw(g.n_states());
        long long total = 0;
        for (auto& v : raw) {
            v = 1 + static_cast<long long>(r.below(grid));
            total += v;
        }
        std::vector<S> w(g.n_states());
        S acc = tr::zero();
        for (int i = 0; i + 1 < g.n_states(); ++i) {
            w[i] = tr::from_ratio(raw[i], 1) / tr::from_ratio(total, 1);
            acc += w[i];
        }
        w[g.n_states() - 1] = tr::one() - acc;
        return FiniteDist<S>(std::move(w));
    };
    LipschitzReport rep;
    for (int k = 0; k < samples; ++k) {
        RngStream rk = rng.derive(k);
        FiniteDist<S> m = random_dist(rk), mt = random_dist(rk);
        S d = dist(m, mt);
        if (d == tr::zero()) continue;
        ++rep.pairs;
        for (int t = 0; t < g.horizon; ++t)
            for (int x = 0; x < g.n_states(); ++x)
                for (int a = 0; a < g.n_actions(); ++a) {
                    double r = tr::to_double(tr::abs(g.running(t, x, m, a) - g.running(t, x, mt, a))) /
                               tr::to_double(d);
                    rep.ratio_f = std::max(rep.ratio_f, r);
                }
        for (int x = 0; x < g.n_states(); ++x) {
            double r = tr::to_double(tr::abs(g.terminal(x, m) - g.terminal(x, mt))) / tr::to_double(d);
            rep.ratio_F = std::max(rep.ratio_F, r);
        }
    }
    rep.max_ratio = std::max(rep.ratio_f, rep.ratio_F);
    return rep;
}

}  // namespace cmfg
