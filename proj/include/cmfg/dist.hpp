#pragma once

// Finite probability distributions, measure flows and the total-variation
// metric dist(mu, nu) = 1/2 sum |mu - nu|. Values are immutable once built.

#include "cmfg/scalar.hpp"

#include <algorithm>
#include <optional>
#include <span>
#include <string>
#include <vector>

namespace cmfg {

template <typename S>
class FiniteDist {
  public:
    FiniteDist() = default;

    explicit FiniteDist(std::vector<S> weights, const Tols& tols = {}) : w_(std::move(weights)) {
        using tr = scalar_traits<S>;
        if (w_.empty()) throw input_error("FiniteDist: empty support");
        S sum = tr::zero();
        for (const S& x : w_) {
            if (x < tr::zero()) throw input_error("FiniteDist: negative weight");
            sum += x;
        }
        if (!tr::eq(sum, tr::one(), tols))
            throw input_error("FiniteDist: weights sum to " + tr::str(sum) + ", expected 1");
    }

    static FiniteDist delta(int point, int support_size) {
        std::vector<S> w(support_size, scalar_traits<S>::zero());
        w.at(point) = scalar_traits<S>::one();
        return FiniteDist(std::move(w));
    }

    static FiniteDist uniform(int support_size) {
        std::vector<S> w(support_size, scalar_traits<S>::from_ratio(1, support_size));
        return FiniteDist(std::move(w));
    }

    int size() const { return static_cast<int>(w_.size()); }
    const S& operator[](int i) const { return w_[i]; }
    const std::vector<S>& weights() const { return w_; }

    bool operator==(const FiniteDist& o) const { return w_ == o.w_; }
    bool operator!=(const FiniteDist& o) const { return !(*this == o); }

  private:
    std::vector<S> w_;
};

/// dist(a,b) = 1/2 sum_e |a(e) - b(e)|; lies in [0,1].
template <typename S>
S dist(const FiniteDist<S>& a, const FiniteDist<S>& b) {
    using tr = scalar_traits<S>;
    if (a.size() != b.size()) throw input_error("dist: support mismatch");
    S acc = tr::zero();
    for (int i = 0; i < a.size(); ++i) acc += tr::abs(a[i] - b[i]);
    return acc / 2;
}

/// A length-(T+1) sequence of distributions over the state space.
template <typename S>
class MeasureFlow {
  public:
    MeasureFlow() = default;
    explicit MeasureFlow(std::vector<FiniteDist<S>> entries) : e_(std::move(entries)) {
        if (e_.empty()) throw input_error("MeasureFlow: empty");
        for (const auto& d : e_)
            if (d.size() != e_.front().size()) throw input_error("MeasureFlow: ragged supports");
    }

    int length() const { return static_cast<int>(e_.size()); }  // T + 1
    int horizon() const { return length() - 1; }
    const FiniteDist<S>& operator[](int t) const { return e_[t]; }
    const std::vector<FiniteDist<S>>& entries() const { return e_; }

    bool operator==(const MeasureFlow& o) const { return e_ == o.e_; }
    bool operator!=(const MeasureFlow& o) const { return !(*this == o); }

    /// Prefix equality on entries 0..t inclusive.
    bool prefix_equal(const MeasureFlow& o, int t) const {
        if (t >= length() || t >= o.length()) throw input_error("prefix_equal: t out of range");
        for (int s = 0; s <= t; ++s)
            if (e_[s] != o.e_[s]) return false;
        return true;
    }

  private:
    std::vector<FiniteDist<S>> e_;
};

/// dist_T(a,b) = sum_t dist(a_t, b_t); lies in [0, T+1].
template <typename S>
S dist_T(const MeasureFlow<S>& a, const MeasureFlow<S>& b) {
    if (a.length() != b.length()) throw input_error("dist_T: length mismatch");
    S acc = scalar_traits<S>::zero();
    for (int t = 0; t < a.length(); ++t) acc += dist(a[t], b[t]);
    return acc;
}

/// Expectation of a state table under a distribution.
template <typename S>
S mean_under(std::span<const S> f, const FiniteDist<S>& m) {
    if (static_cast<int>(f.size()) != m.size()) throw input_error("mean_under: support mismatch");
    S acc = scalar_traits<S>::zero();
    for (int i = 0; i < m.size(); ++i) acc += f[i] * m[i];
    return acc;
}

template <typename S>
S mean_under(const std::vector<S>& f, const FiniteDist<S>& m) {
    return mean_under(std::span<const S>(f), m);
}

/// Normalized histogram of state indices, optionally excluding one entry
/// (denominator N-1 in that case).
template <typename S>
FiniteDist<S> empirical(const std::vector<int>& states, int n_states,
                        std::optional<int> exclude = std::nullopt) {
    long long n = static_cast<long long>(states.size()) - (exclude ? 1 : 0);
    if (n <= 0) throw input_error("empirical: empty after exclusion");
    std::vector<long long> counts(n_states, 0);
    for (int i = 0; i < static_cast<int>(states.size()); ++i) {
        if (exclude && *exclude == i) continue;
        if (states[i] < 0 || states[i] >= n_states) throw input_error("empirical: state out of range");
        ++counts[states[i]];
    }
    std::vector<S> w(n_states);
    for (int x = 0; x < n_states; ++x) w[x] = scalar_traits<S>::from_ratio(counts[x], n);
    return FiniteDist<S>(std::move(w));
}

}  // namespace cmfg
