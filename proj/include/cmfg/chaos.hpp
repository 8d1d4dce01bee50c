#pragma once

// Propagation-of-chaos diagnostics: how fast the exclude-one empirical flow
// of a suggestion-following population concentrates on the mediator's
// announced flow.

#include "cmfg/nplayer.hpp"

#include <cmath>
#include <optional>
#include <string>
#include <vector>

namespace cmfg {

struct ChaosRow {
    int n;
    double estimate;  // E[dist_T(mu^{1,N}, mu)]
    double stderr_;
    long long reps;
    std::string flow_atom;  // "mixed" or the conditioned atom index
};

struct ChaosCurve {
    std::vector<ChaosRow> rows;
};

/// Estimates E[dist_T(mu^{1,N}, mu)] for each N, with all players following
/// their suggestions. `fixed_flow` conditions every replication on one flow
/// atom (the proof works conditionally on {mu = m} throughout).
inline ChaosCurve chaos_curve(const GameSpec<double>& g, const SuggestionAtoms<double>& rho,
                              const std::vector<int>& n_list, long long reps, RngStream root,
                              std::optional<int> fixed_flow = std::nullopt) {
    for (size_t i = 0; i < n_list.size(); ++i) {
        if (n_list[i] < 2) throw input_error("chaos_curve: need N >= 2");
        if (i > 0 && n_list[i] <= n_list[i - 1])
            throw input_error("chaos_curve: N list must be strictly increasing");
    }
    GammaSampler<double> sampler(rho);
    ChaosCurve out;
    for (size_t ni = 0; ni < n_list.size(); ++ni) {
        int n = n_list[ni];
        detail::NPlayerRun engine(g, sampler, n);
        SimOptions opt;
        opt.fixed_flow = fixed_flow;
        RngStream base = root.derive(ni);
        std::vector<FiniteDist<double>> emp;
        auto est = mc_accumulate(reps, [&](long long r) {
            emp.clear();
            int flow = 0;
            engine.run(base.derive(static_cast<std::uint64_t>(r)), nullptr, opt, nullptr, &emp, &flow);
            const MeasureFlow<double>& target = sampler.flow(flow);
            double acc = 0.0;
            for (int t = 0; t <= g.horizon; ++t) acc += dist(emp[t], target[t]);
            return acc;
        });
        ChaosRow row;
        row.n = n;
        row.estimate = est.mean;
        row.stderr_ = est.stderr_;
        row.reps = reps;
        row.flow_atom = fixed_flow ? std::to_string(*fixed_flow) : "mixed";
        out.rows.push_back(row);
    }
    return out;
}

/// Least-squares slope of log(estimate) against log(N).
inline double slope_fit(const ChaosCurve& curve) {
    if (curve.rows.size() < 3) throw input_error("slope_fit: need at least 3 rows");
    double sx = 0, sy = 0, sxx = 0, sxy = 0;
    const double n = static_cast<double>(curve.rows.size());
    for (const auto& row : curve.rows) {
        if (row.estimate <= 0.0) throw input_error("slope_fit: zero estimate");
        double x = std::log(static_cast<double>(row.n));
        double y = std::log(row.estimate);
        sx += x;
        sy += y;
        sxx += x * x;
        sxy += x * y;
    }
    return (n * sxy - sx * sy) / (n * sxx - sx * sx);
}

}  // namespace cmfg
