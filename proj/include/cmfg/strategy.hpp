#pragma once

// Restricted (Markov, own-state) strategies and correlated suggestions as
// finite atom lists over (strategy, measure flow) pairs.

#include "cmfg/dist.hpp"
#include "cmfg/scalar.hpp"

#include <string>
#include <vector>

namespace cmfg {

/// A table (t, x) -> action index, t in [0, T-1].
class RestrictedStrategy {
  public:
    RestrictedStrategy() = default;
    RestrictedStrategy(int horizon, int n_states, std::vector<int> actions)
        : T_(horizon), nx_(n_states), a_(std::move(actions)) {
        if (static_cast<int>(a_.size()) != T_ * nx_)
            throw input_error("RestrictedStrategy: table size mismatch");
    }

    int horizon() const { return T_; }
    int n_states() const { return nx_; }
    int operator()(int t, int x) const { return a_[t * nx_ + x]; }
    const std::vector<int>& table() const { return a_; }

    bool operator==(const RestrictedStrategy& o) const {
        return T_ == o.T_ && nx_ == o.nx_ && a_ == o.a_;
    }
    bool operator!=(const RestrictedStrategy& o) const { return !(*this == o); }
    bool operator<(const RestrictedStrategy& o) const { return a_ < o.a_; }

    /// Actions for times 0..t inclusive; the restriction class of the
    /// strategy used by the (R2) factorization test.
    std::vector<int> restriction(int t) const {
        return std::vector<int>(a_.begin(), a_.begin() + (t + 1) * nx_);
    }

  private:
    int T_ = 0, nx_ = 0;
    std::vector<int> a_;
};

/// Finite-support correlated suggestion: atoms (strategy, flow, weight).
template <typename S>
class SuggestionAtoms {
  public:
    struct Atom {
        RestrictedStrategy strategy;
        MeasureFlow<S> flow;
        S weight;
    };

    SuggestionAtoms() = default;

    /// Shape checks only; weight positivity and normalization are the (R1)
    /// verifier's job so that malformed suggestions yield check reports.
    explicit SuggestionAtoms(std::vector<Atom> atoms) : atoms_(std::move(atoms)) {
        if (atoms_.empty()) throw input_error("SuggestionAtoms: no atoms");
        const auto& first = atoms_.front();
        for (const auto& a : atoms_) {
            if (a.flow.length() != first.flow.length() ||
                a.strategy.horizon() != first.strategy.horizon() ||
                a.strategy.n_states() != first.strategy.n_states())
                throw input_error("SuggestionAtoms: inconsistent atom shapes");
            if (a.flow.length() != a.strategy.horizon() + 1)
                throw input_error("SuggestionAtoms: flow length must be T+1");
            if (a.flow[0].size() != a.strategy.n_states())
                throw input_error("SuggestionAtoms: flow support must match state space");
        }
    }

    const std::vector<Atom>& atoms() const { return atoms_; }
    int size() const { return static_cast<int>(atoms_.size()); }
    int horizon() const { return atoms_.front().strategy.horizon(); }
    int n_states() const { return atoms_.front().strategy.n_states(); }

    /// Merge atoms with identical (strategy, flow) by adding weights.
    SuggestionAtoms merged() const {
        std::vector<Atom> out;
        for (const auto& a : atoms_) {
            bool found = false;
            for (auto& b : out)
                if (b.strategy == a.strategy && b.flow == a.flow) {
                    b.weight += a.weight;
                    found = true;
                    break;
                }
            if (!found) out.push_back(a);
        }
        return SuggestionAtoms(std::move(out));
    }

    /// Distinct strategies with their total mass P(Phi = phi).
    std::vector<std::pair<RestrictedStrategy, S>> strategy_marginal() const {
        std::vector<std::pair<RestrictedStrategy, S>> out;
        for (const auto& a : atoms_) {
            bool found = false;
            for (auto& [phi, w] : out)
                if (phi == a.strategy) {
                    w += a.weight;
                    found = true;
                    break;
                }
            if (!found) out.emplace_back(a.strategy, a.weight);
        }
        return out;
    }

    /// Distinct flows (by value) with their total mass P(mu = m).
    std::vector<std::pair<MeasureFlow<S>, S>> flow_marginal() const {
        std::vector<std::pair<MeasureFlow<S>, S>> out;
        for (const auto& a : atoms_) {
            bool found = false;
            for (auto& [m, w] : out)
                if (m == a.flow) {
                    w += a.weight;
                    found = true;
                    break;
                }
            if (!found) out.emplace_back(a.flow, a.weight);
        }
        return out;
    }

  private:
    std::vector<Atom> atoms_;
};

}  // namespace cmfg
