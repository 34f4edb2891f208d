#pragma once

#include <array>
#include <cstdint>
#include <span>
#include <stdexcept>
#include <utility>
#include <vector>

#include "aoi/types.hpp"

namespace aoi {

/// Parameters of the uniform-update-size MDP: every update takes exactly d
/// slots to transmit, arrivals are Bernoulli(p) per slot, and the AoI is
/// capped at delta_max to make the state space finite.
struct UniformParams {
  int d = 10;
  double p = 0.07;
  int delta_max = 1000;

  void validate() const {
    if (d < 2) throw std::invalid_argument("d must be >= 2");
    if (!(p > 0.0 && p < 1.0))
      throw std::invalid_argument("p must lie in (0,1)");
    if (delta_max < 2 * d)
      throw std::invalid_argument("delta_max must be >= 2*d");
  }
};

/// State at the start of a slot: AoI delta, age u of the unfinished update
/// (0 = idle), and the arrival indicator a.
struct UniformState {
  int delta = 0;
  int u = 0;
  int a = 0;

  friend bool operator==(const UniformState&, const UniformState&) = default;
};

class UniformModel {
 public:
  explicit UniformModel(UniformParams params) : params_(params) {
    params_.validate();
    n_delta_ = params_.delta_max - params_.d + 1;
    const std::size_t n = size();
    cost_.resize(n);
    succ_skip_.resize(n);
    succ_switch_.resize(n);
    weights_ = {1.0 - params_.p, params_.p};
    for (std::size_t i = 0; i < n; ++i) {
      const UniformState s = state_at(i);
      cost_[i] = static_cast<double>(s.delta);
      succ_skip_[i] = core_base(step_core(s.delta, s.u, Action::kSkip));
      // Stored for every state; solvers only read it where a = 1.
      succ_switch_[i] = core_base(step_core(s.delta, s.u, Action::kSwitch));
    }
  }

  const UniformParams& params() const { return params_; }

  std::size_t size() const {
    return static_cast<std::size_t>(n_delta_) * params_.d * 2;
  }

  std::size_t index_of(const UniformState& s) const {
    check_state(s);
    return (static_cast<std::size_t>(s.delta - params_.d) * params_.d + s.u) *
               2 +
           s.a;
  }

  UniformState state_at(std::size_t i) const {
    const int a = static_cast<int>(i & 1);
    const std::size_t core = i >> 1;
    const int u = static_cast<int>(core % params_.d);
    const int delta = params_.d + static_cast<int>(core / params_.d);
    return {delta, u, a};
  }

  bool is_valid(const UniformState& s) const {
    return s.delta >= params_.d && s.delta <= params_.delta_max && s.u >= 0 &&
           s.u <= params_.d - 1 && (s.a == 0 || s.a == 1);
  }

  /// Whether the chain can actually occupy this state: a mid-service update
  /// must have started while the AoI was already >= d, i.e. delta - u >= d.
  /// The full rectangle is still enumerated; unreachable corners only exist
  /// as value-iteration scratch space.
  bool is_reachable(const UniformState& s) const {
    return s.u == 0 || s.delta - s.u >= params_.d;
  }

  /// W(s) = {0,1} when an update arrived this slot, {0} otherwise.
  static std::vector<Action> allowed_actions(const UniformState& s) {
    if (s.a == 1) return {Action::kSkip, Action::kSwitch};
    return {Action::kSkip};
  }

  /// One-step distribution. The (delta,u) part is deterministic; the arrival
  /// bit of the successor is Bernoulli(p) independent of everything else.
  std::array<std::pair<UniformState, double>, 2> transition(
      const UniformState& s, Action w) const {
    check_state(s);
    if (w == Action::kSwitch && s.a == 0)
      throw std::invalid_argument("switch requires an arrival (a=1)");
    const auto [delta1, u1] = step_core(s.delta, s.u, w);
    return {{{{delta1, u1, 1}, params_.p}, {{delta1, u1, 0}, 1.0 - params_.p}}};
  }

  /// Stage cost C(s,w) = instantaneous AoI.
  static double cost(const UniformState& s) {
    return static_cast<double>(s.delta);
  }

  // --- flat interface used by the solvers ---

  double cost_at(std::size_t i) const { return cost_[i]; }

  bool has_choice(std::size_t i) const { return (i & 1) != 0; }

  /// Index of the successor core (delta',u') times 2; add the arrival bit of
  /// the successor to obtain its full state index.
  std::uint32_t succ_base(std::size_t i, Action w) const {
    return w == Action::kSkip ? succ_skip_[i] : succ_switch_[i];
  }

  std::span<const double> arrival_weights() const {
    return {weights_.data(), weights_.size()};
  }

  /// Reference state s0 = (d, 0, 0).
  std::size_t reference_index() const { return 0; }

 private:
  // Deterministic (delta,u) dynamics; delivery happens when a transmission
  // in its last slot (u = d-1) is kept.
  std::pair<int, int> step_core(int delta, int u, Action w) const {
    if (w == Action::kSwitch) return {cap(delta + 1), 1};
    if (u == params_.d - 1) return {params_.d, 0};
    const int u1 = (u > 0) ? u + 1 : 0;
    return {cap(delta + 1), u1};
  }

  int cap(int delta) const {
    return delta < params_.delta_max ? delta : params_.delta_max;
  }

  std::uint32_t core_base(std::pair<int, int> core) const {
    const auto [delta, u] = core;
    return static_cast<std::uint32_t>(
        (static_cast<std::size_t>(delta - params_.d) * params_.d + u) * 2);
  }

  void check_state(const UniformState& s) const {
    if (!is_valid(s)) throw std::invalid_argument("state outside model bounds");
  }

  UniformParams params_;
  int n_delta_ = 0;
  std::vector<double> cost_;
  std::vector<std::uint32_t> succ_skip_;
  std::vector<std::uint32_t> succ_switch_;
  std::array<double, 2> weights_{};
};

/// All states in the fixed lexicographic (delta, u, a) order the solvers use.
inline std::vector<UniformState> enumerate_states(const UniformParams& params) {
  UniformModel m(params);
  std::vector<UniformState> out;
  out.reserve(m.size());
  for (std::size_t i = 0; i < m.size(); ++i) out.push_back(m.state_at(i));
  return out;
}

}  // namespace aoi
