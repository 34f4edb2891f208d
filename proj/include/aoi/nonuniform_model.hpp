#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <numeric>
#include <span>
#include <stdexcept>
#include <utility>
#include <vector>

#include "aoi/types.hpp"

namespace aoi {

/// PMF of the transmission time of an update, over a bounded integer support.
/// Every size must take at least two slots.
struct SizeDistribution {
  std::vector<int> support;
  std::vector<double> probs;

  void validate() const {
    if (support.empty() || support.size() != probs.size())
      throw std::invalid_argument("size distribution: empty or mismatched");
    for (std::size_t k = 0; k < support.size(); ++k) {
      if (support[k] < 2)
        throw std::invalid_argument("update sizes must be >= 2 slots");
      if (k > 0 && support[k] <= support[k - 1])
        throw std::invalid_argument("support must be strictly increasing");
      if (!(probs[k] > 0.0))
        throw std::invalid_argument("size probabilities must be positive");
    }
    const double total = std::accumulate(probs.begin(), probs.end(), 0.0);
    if (std::abs(total - 1.0) > 1e-12)
      throw std::invalid_argument("size probabilities must sum to 1");
  }

  int min_size() const { return support.front(); }
  int max_size() const { return support.back(); }
};

struct NonUniformParams {
  double p = 0.14;
  SizeDistribution sizes;
  int delta_max = 1000;

  void validate() const {
    if (!(p > 0.0 && p < 1.0))
      throw std::invalid_argument("p must lie in (0,1)");
    sizes.validate();
    if (delta_max < 2 * sizes.max_size())
      throw std::invalid_argument("delta_max must be >= 2*max size");
  }
};

/// State (delta, l, c, b): AoI, remaining slots of the in-service update,
/// its total size, and the size of this slot's arrival (0 = none).
/// Idle is l = c = 0; mid-service states satisfy 1 <= l <= c-1.
struct NonUniformState {
  int delta = 0;
  int l = 0;
  int c = 0;
  int b = 0;

  friend bool operator==(const NonUniformState&,
                         const NonUniformState&) = default;
};

class NonUniformModel {
 public:
  explicit NonUniformModel(NonUniformParams params) : params_(params) {
    params_.validate();
    // Service configurations: idle first, then (c ascending, l = 1..c-1).
    configs_.push_back({0, 0});
    for (int c : params_.sizes.support)
      for (int l = 1; l <= c - 1; ++l) configs_.push_back({l, c});
    config_pos_.assign(
        static_cast<std::size_t>(params_.sizes.max_size() + 1) *
            (params_.sizes.max_size() + 1),
        -1);
    for (std::size_t k = 0; k < configs_.size(); ++k)
      config_pos_[config_key(configs_[k].first, configs_[k].second)] =
          static_cast<int>(k);

    b_values_.push_back(0);
    for (int b : params_.sizes.support) b_values_.push_back(b);
    b_pos_.assign(params_.sizes.max_size() + 1, -1);
    for (std::size_t j = 0; j < b_values_.size(); ++j)
      b_pos_[b_values_[j]] = static_cast<int>(j);

    weights_.push_back(1.0 - params_.p);
    for (double f : params_.sizes.probs) weights_.push_back(params_.p * f);

    delta_min_ = params_.sizes.min_size();
    n_delta_ = params_.delta_max - delta_min_ + 1;

    const std::size_t n = size();
    cost_.resize(n);
    succ_skip_.resize(n);
    succ_switch_.resize(n, 0);
    for (std::size_t i = 0; i < n; ++i) {
      const NonUniformState s = state_at(i);
      cost_[i] = static_cast<double>(s.delta);
      succ_skip_[i] = core_base(skip_core(s));
      if (s.b != 0) succ_switch_[i] = core_base({cap(s.delta + 1), s.b - 1, s.b});
    }
  }

  const NonUniformParams& params() const { return params_; }

  std::size_t size() const {
    return static_cast<std::size_t>(n_delta_) * configs_.size() *
           b_values_.size();
  }

  std::size_t config_count() const { return configs_.size(); }
  std::size_t arrival_count() const { return b_values_.size(); }
  std::pair<int, int> config(std::size_t k) const { return configs_[k]; }
  int arrival_value(std::size_t j) const { return b_values_[j]; }

  std::size_t index_of(const NonUniformState& s) const {
    check_state(s);
    const int cfg = config_pos_[config_key(s.l, s.c)];
    const int bj = b_pos_[s.b];
    return (static_cast<std::size_t>(s.delta - delta_min_) * configs_.size() +
            cfg) *
               b_values_.size() +
           bj;
  }

  NonUniformState state_at(std::size_t i) const {
    const std::size_t nb = b_values_.size();
    const int b = b_values_[i % nb];
    const std::size_t core = i / nb;
    const auto [l, c] = configs_[core % configs_.size()];
    const int delta = delta_min_ + static_cast<int>(core / configs_.size());
    return {delta, l, c, b};
  }

  bool is_valid(const NonUniformState& s) const {
    if (s.delta < delta_min_ || s.delta > params_.delta_max) return false;
    if (s.b != 0 && b_index(s.b) < 0) return false;
    if (s.l == 0 && s.c == 0) return true;
    if (s.l < 1 || s.c < 2 || s.l > s.c - 1) return false;
    return b_index(s.c) > 0;  // in-service size must come from the support
  }

  /// Whether the chain can occupy this state: the in-service update started
  /// c - l slots ago, when the AoI was delta - (c - l), which can never be
  /// below the smallest delivery reset.
  bool is_reachable(const NonUniformState& s) const {
    return s.l == 0 || s.delta - (s.c - s.l) >= delta_min_;
  }

  static std::vector<Action> allowed_actions(const NonUniformState& s) {
    if (s.b != 0) return {Action::kSkip, Action::kSwitch};
    return {Action::kSkip};
  }

  /// One-step distribution: deterministic (delta,l,c) core plus the arrival
  /// component b' (0 with prob 1-p, size k with prob p*f_b(k)).
  std::vector<std::pair<NonUniformState, double>> transition(
      const NonUniformState& s, Action w) const {
    check_state(s);
    if (w == Action::kSwitch && s.b == 0)
      throw std::invalid_argument("switch requires an arrival (b != 0)");
    std::array<int, 3> core{};
    if (w == Action::kSwitch) {
      core = {cap(s.delta + 1), s.b - 1, s.b};
    } else {
      core = skip_core(s);
    }
    std::vector<std::pair<NonUniformState, double>> out;
    out.reserve(b_values_.size());
    for (std::size_t j = 0; j < b_values_.size(); ++j)
      out.push_back(
          {{core[0], core[1], core[2], b_values_[j]}, weights_[j]});
    return out;
  }

  static double cost(const NonUniformState& s) {
    return static_cast<double>(s.delta);
  }

  // --- flat interface used by the solvers ---

  double cost_at(std::size_t i) const { return cost_[i]; }

  bool has_choice(std::size_t i) const {
    return (i % b_values_.size()) != 0;
  }

  std::uint32_t succ_base(std::size_t i, Action w) const {
    return w == Action::kSkip ? succ_skip_[i] : succ_switch_[i];
  }

  std::span<const double> arrival_weights() const {
    return {weights_.data(), weights_.size()};
  }

  /// Reference state (min size, 0, 0, 0).
  std::size_t reference_index() const { return 0; }

 private:
  std::array<int, 3> skip_core(const NonUniformState& s) const {
    if (s.l == 1) return {s.c, 0, 0};  // delivery; c <= b_max < delta_max
    if (s.l == 0) return {cap(s.delta + 1), 0, 0};
    return {cap(s.delta + 1), s.l - 1, s.c};
  }

  int cap(int delta) const {
    return delta < params_.delta_max ? delta : params_.delta_max;
  }

  std::uint32_t core_base(std::array<int, 3> core) const {
    const int cfg = config_pos_[config_key(core[1], core[2])];
    return static_cast<std::uint32_t>(
        (static_cast<std::size_t>(core[0] - delta_min_) * configs_.size() +
         cfg) *
        b_values_.size());
  }

  std::size_t config_key(int l, int c) const {
    return static_cast<std::size_t>(l) * (params_.sizes.max_size() + 1) + c;
  }

  int b_index(int b) const {
    return (b >= 0 && b <= params_.sizes.max_size()) ? b_pos_[b] : -1;
  }

  void check_state(const NonUniformState& s) const {
    if (!is_valid(s)) throw std::invalid_argument("state outside model bounds");
  }

  NonUniformParams params_;
  int delta_min_ = 0;
  int n_delta_ = 0;
  std::vector<std::pair<int, int>> configs_;  // (l, c); idle first
  std::vector<int> config_pos_;
  std::vector<int> b_values_;  // 0, then the support ascending
  std::vector<int> b_pos_;
  std::vector<double> weights_;
  std::vector<double> cost_;
  std::vector<std::uint32_t> succ_skip_;
  std::vector<std::uint32_t> succ_switch_;
};

inline std::vector<NonUniformState> enumerate_states_nonuniform(
    const NonUniformParams& params) {
  NonUniformModel m(params);
  std::vector<NonUniformState> out;
  out.reserve(m.size());
  for (std::size_t i = 0; i < m.size(); ++i) out.push_back(m.state_at(i));
  return out;
}

}  // namespace aoi
