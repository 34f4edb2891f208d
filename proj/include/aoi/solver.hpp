#pragma once

#include <algorithm>
#include <concepts>
#include <cstdint>
#include <limits>
#include <span>
#include <stdexcept>
#include <vector>

#include "aoi/nonuniform_model.hpp"
#include "aoi/types.hpp"
#include "aoi/uniform_model.hpp"

namespace aoi {

/// Any finite truncated MDP whose transition factorizes into a deterministic
/// core (indexed by succ_base) and an i.i.d. arrival component (weights).
template <class M>
concept TruncatedMdp = requires(const M& m, std::size_t i, Action w) {
  { m.size() } -> std::convertible_to<std::size_t>;
  { m.cost_at(i) } -> std::convertible_to<double>;
  { m.has_choice(i) } -> std::convertible_to<bool>;
  { m.succ_base(i, w) } -> std::convertible_to<std::uint32_t>;
  { m.arrival_weights() } -> std::convertible_to<std::span<const double>>;
  { m.reference_index() } -> std::convertible_to<std::size_t>;
};

struct SolveOptions {
  int max_iters = 10000;
  double tol = 1e-8;

  void validate() const {
    if (max_iters < 1) throw std::invalid_argument("max_iters must be >= 1");
    if (!(tol > 0.0)) throw std::invalid_argument("tol must be positive");
  }
};

/// Relative value function, normalized so V(s0) = 0. `gain` is the Bellman
/// constant at the reference state evaluated on the final iterate; `span` is
/// the span seminorm of the last successive difference.
struct ValueFunction {
  std::vector<double> values;
  double gain = 0.0;
  int iterations_run = 0;
  double span = std::numeric_limits<double>::infinity();
  bool converged = false;
};

/// Deterministic stationary policy, one action per enumerated state.
/// Entries are kSkip wherever the action set is {0}.
struct PolicyTable {
  std::vector<Action> actions;
};

struct SolveResult {
  ValueFunction value;
  PolicyTable policy;
};

/// Shortcut bookkeeping of one structured solve (counts are per whole run).
struct StructuredStats {
  std::uint64_t argmin_evals = 0;
  std::uint64_t forced_no_arrival = 0;
  std::uint64_t idle_rule = 0;        // non-uniform: l=c=0, b>0 -> switch
  std::uint64_t delta_rule = 0;       // skip inherited from smaller delta
  std::uint64_t u_rule = 0;           // uniform: switch inherited from smaller u
  std::uint64_t c_rule = 0;           // non-uniform: skip inherited from larger c
  std::uint64_t b_rule = 0;           // non-uniform: switch inherited from larger b
  std::uint64_t small_b_rule = 0;     // non-uniform: b <= l -> switch
};

namespace detail {

// Ties within kTieEps resolve to skip so that the plain and structured
// solvers are comparable state by state.
inline constexpr double kTieEps = 1e-9;

inline Action pick_action(double q_skip, double q_switch) {
  return q_switch < q_skip - kTieEps ? Action::kSwitch : Action::kSkip;
}

template <TruncatedMdp M>
double expected_next(const M& m, const std::vector<double>& v, std::size_t i,
                     Action w) {
  const std::span<const double> wts = m.arrival_weights();
  const std::uint32_t base = m.succ_base(i, w);
  double acc = 0.0;
  for (std::size_t j = 0; j < wts.size(); ++j) acc += wts[j] * v[base + j];
  return acc;
}

template <TruncatedMdp M>
double greedy_backup(const M& m, const std::vector<double>& v, std::size_t i) {
  const double q0 = m.cost_at(i) + expected_next(m, v, i, Action::kSkip);
  if (!m.has_choice(i)) return q0;
  const double q1 = m.cost_at(i) + expected_next(m, v, i, Action::kSwitch);
  return pick_action(q0, q1) == Action::kSwitch ? q1 : q0;
}

// Normalizes the raw backup in `next` by its reference entry, updates the
// span of the successive difference, and swaps the iterates.
inline double normalize_and_span(std::vector<double>& v,
                                 std::vector<double>& next, std::size_t ref) {
  const double shift = next[ref];
  double lo = std::numeric_limits<double>::infinity();
  double hi = -std::numeric_limits<double>::infinity();
  for (std::size_t s = 0; s < v.size(); ++s) {
    next[s] -= shift;
    const double diff = next[s] - v[s];
    lo = std::min(lo, diff);
    hi = std::max(hi, diff);
  }
  v.swap(next);
  return hi - lo;
}

}  // namespace detail

/// Plain relative value iteration:
///   V_{n+1}(s) = min_w C(s,w) + E[V_n(s')|s,w] - (same at s0),
/// from V_0 = 0, stopping when the span of successive differences drops
/// below tol. Returns the greedy policy of the final iterate. On iteration
/// exhaustion the last iterate is still returned with converged = false.
template <TruncatedMdp M>
SolveResult relative_value_iteration(const M& m, const SolveOptions& opts = {}) {
  opts.validate();
  const std::size_t n = m.size();
  const std::size_t ref = m.reference_index();
  ValueFunction vf;
  vf.values.assign(n, 0.0);
  std::vector<double> next(n, 0.0);

  for (int iter = 1; iter <= opts.max_iters; ++iter) {
    for (std::size_t s = 0; s < n; ++s)
      next[s] = detail::greedy_backup(m, vf.values, s);
    vf.span = detail::normalize_and_span(vf.values, next, ref);
    vf.iterations_run = iter;
    if (vf.span < opts.tol) {
      vf.converged = true;
      break;
    }
  }

  PolicyTable policy;
  policy.actions.assign(n, Action::kSkip);
  for (std::size_t s = 0; s < n; ++s) {
    if (!m.has_choice(s)) continue;
    const double q0 = m.cost_at(s) + detail::expected_next(m, vf.values, s, Action::kSkip);
    const double q1 = m.cost_at(s) + detail::expected_next(m, vf.values, s, Action::kSwitch);
    policy.actions[s] = detail::pick_action(q0, q1);
  }
  vf.gain = detail::greedy_backup(m, vf.values, ref) - vf.values[ref];
  return {std::move(vf), std::move(policy)};
}

namespace detail {

// One structured action-selection sweep for the uniform model, in
// lexicographic (delta, u, a) order so every neighbor a rule consults is
// already decided within the same sweep. Writes raw backups into `next`
// when it is non-null.
inline void structured_sweep_uniform(const UniformModel& m,
                                     const std::vector<double>& v,
                                     std::vector<double>* next,
                                     std::vector<Action>& actions,
                                     StructuredStats& stats) {
  const int d = m.params().d;
  const std::size_t n = m.size();
  // skip_seen[u]: some (delta' < delta, u, 1) already chose skip this sweep.
  std::vector<char> skip_seen(static_cast<std::size_t>(d), 0);
  bool switch_seen = false;  // some (delta, u' >= 1, u' < u, 1) chose switch
  for (std::size_t s = 0; s < n; ++s) {
    const std::size_t core = s >> 1;
    const int u = static_cast<int>(core % d);
    if (u == 0 && (s & 1) == 0) switch_seen = false;  // new delta slice
    Action w = Action::kSkip;
    if ((s & 1) == 0) {
      ++stats.forced_no_arrival;
    } else if (skip_seen[u]) {
      w = Action::kSkip;
      ++stats.delta_rule;
    } else if (u >= 1 && switch_seen) {
      w = Action::kSwitch;
      ++stats.u_rule;
    } else {
      const double q0 = m.cost_at(s) + expected_next(m, v, s, Action::kSkip);
      const double q1 = m.cost_at(s) + expected_next(m, v, s, Action::kSwitch);
      w = pick_action(q0, q1);
      ++stats.argmin_evals;
    }
    if ((s & 1) == 1) {
      if (w == Action::kSkip)
        skip_seen[u] = 1;
      else if (u >= 1)
        switch_seen = true;
    }
    actions[s] = w;
    if (next) (*next)[s] = m.cost_at(s) + expected_next(m, v, s, w);
  }
}

}  // namespace detail

/// Structured relative value iteration for the uniform model. Shares the
/// fixed point with relative_value_iteration but decides most actions from
/// the threshold structure instead of comparing both Q-values:
/// no arrival -> skip; skip seen at smaller delta (same u) -> skip;
/// switch seen at smaller in-service age (same delta, u' >= 1) -> switch.
/// The idle row u = 0 is exempt from the inherited-switch rule; it would
/// otherwise leak the always-switch-when-idle action into every state.
inline SolveResult structured_vi_uniform(const UniformModel& m,
                                         const SolveOptions& opts = {},
                                         StructuredStats* stats_out = nullptr) {
  opts.validate();
  const std::size_t n = m.size();
  const std::size_t ref = m.reference_index();
  ValueFunction vf;
  vf.values.assign(n, 0.0);
  std::vector<double> next(n, 0.0);
  PolicyTable policy;
  policy.actions.assign(n, Action::kSkip);
  StructuredStats stats;

  for (int iter = 1; iter <= opts.max_iters; ++iter) {
    detail::structured_sweep_uniform(m, vf.values, &next, policy.actions, stats);
    vf.span = detail::normalize_and_span(vf.values, next, ref);
    vf.iterations_run = iter;
    if (vf.span < opts.tol) {
      vf.converged = true;
      break;
    }
  }
  // Re-derive the reported policy from the converged values so it matches
  // what the last value update actually used.
  detail::structured_sweep_uniform(m, vf.values, nullptr, policy.actions, stats);
  vf.gain = detail::greedy_backup(m, vf.values, ref) - vf.values[ref];
  if (stats_out) *stats_out = stats;
  return {std::move(vf), std::move(policy)};
}

namespace detail {

// Structured selection sweep for the non-uniform model. Sweep order within a
// delta slice is c descending then b descending, so the neighbors consulted
// by the inherited-skip (larger c) and inherited-switch (larger b) rules are
// already decided; smaller delta slices are complete before larger ones.
inline void structured_sweep_nonuniform(const NonUniformModel& m,
                                        const std::vector<double>& v,
                                        std::vector<double>* next,
                                        std::vector<Action>& actions,
                                        StructuredStats& stats) {
  const std::size_t n_cfg = m.config_count();
  const std::size_t n_b = m.arrival_count();
  const int b_max = m.params().sizes.max_size();
  const std::size_t n_delta = m.size() / (n_cfg * n_b);
  // skip at (delta' < delta, l, c, b) this sweep, keyed by (config, b).
  std::vector<char> skip_below(n_cfg * n_b, 0);
  // skip at (delta, l, c' > c, b) within the current slice, keyed by (l, b).
  std::vector<char> skip_larger_c(static_cast<std::size_t>(b_max) * n_b, 0);

  for (std::size_t ds = 0; ds < n_delta; ++ds) {
    std::fill(skip_larger_c.begin(), skip_larger_c.end(), 0);
    for (std::size_t k = n_cfg; k-- > 0;) {
      const auto [l, c] = m.config(k);
      bool switch_larger_b = false;
      for (std::size_t bj = n_b; bj-- > 0;) {
        const std::size_t s = (ds * n_cfg + k) * n_b + bj;
        const int b = m.arrival_value(bj);
        Action w = Action::kSkip;
        if (bj == 0) {
          ++stats.forced_no_arrival;
        } else if (l == 0) {
          w = Action::kSwitch;
          ++stats.idle_rule;
        } else if (skip_below[k * n_b + bj]) {
          ++stats.delta_rule;
        } else if (skip_larger_c[static_cast<std::size_t>(l - 1) * n_b + bj]) {
          ++stats.c_rule;
        } else if (switch_larger_b) {
          w = Action::kSwitch;
          ++stats.b_rule;
        } else if (b <= l) {
          w = Action::kSwitch;
          ++stats.small_b_rule;
        } else {
          const double q0 = m.cost_at(s) + expected_next(m, v, s, Action::kSkip);
          const double q1 = m.cost_at(s) + expected_next(m, v, s, Action::kSwitch);
          w = pick_action(q0, q1);
          ++stats.argmin_evals;
        }
        if (bj > 0) {
          if (w == Action::kSkip) {
            skip_below[k * n_b + bj] = 1;
            if (l >= 1)
              skip_larger_c[static_cast<std::size_t>(l - 1) * n_b + bj] = 1;
          } else {
            switch_larger_b = true;
          }
        }
        actions[s] = w;
        if (next) (*next)[s] = m.cost_at(s) + expected_next(m, v, s, w);
      }
    }
  }
}

}  // namespace detail

/// Structured relative value iteration for the non-uniform model. Shortcut
/// rules, in precedence order: no arrival -> skip; idle -> switch; skip seen
/// at smaller delta -> skip; skip seen at larger in-service size -> skip;
/// switch seen at larger arrival size -> switch; arrival no longer than the
/// remaining service time -> switch; otherwise compare Q-values.
inline SolveResult structured_vi_nonuniform(const NonUniformModel& m,
                                            const SolveOptions& opts = {},
                                            StructuredStats* stats_out = nullptr) {
  opts.validate();
  const std::size_t n = m.size();
  const std::size_t ref = m.reference_index();
  ValueFunction vf;
  vf.values.assign(n, 0.0);
  std::vector<double> next(n, 0.0);
  PolicyTable policy;
  policy.actions.assign(n, Action::kSkip);
  StructuredStats stats;

  for (int iter = 1; iter <= opts.max_iters; ++iter) {
    detail::structured_sweep_nonuniform(m, vf.values, &next, policy.actions,
                                        stats);
    vf.span = detail::normalize_and_span(vf.values, next, ref);
    vf.iterations_run = iter;
    if (vf.span < opts.tol) {
      vf.converged = true;
      break;
    }
  }
  detail::structured_sweep_nonuniform(m, vf.values, nullptr, policy.actions,
                                      stats);
  vf.gain = detail::greedy_backup(m, vf.values, ref) - vf.values[ref];
  if (stats_out) *stats_out = stats;
  return {std::move(vf), std::move(policy)};
}

/// Value iteration for the alpha-discounted problem,
///   V_{n+1}(s) = min_w C(s,w) + alpha E[V_n(s')|s,w],
/// from V_0 = 0, stopping when the sup-norm change drops below tol.
/// gain holds (1-alpha) V(s0), the discounted proxy for the average age.
template <TruncatedMdp M>
ValueFunction discounted_value_iteration(const M& m, double alpha,
                                         const SolveOptions& opts = {}) {
  opts.validate();
  if (!(alpha > 0.0 && alpha < 1.0))
    throw std::invalid_argument("alpha must lie in (0,1)");
  const std::size_t n = m.size();
  ValueFunction vf;
  vf.values.assign(n, 0.0);
  std::vector<double> next(n, 0.0);

  for (int iter = 1; iter <= opts.max_iters; ++iter) {
    double sup = 0.0;
    for (std::size_t s = 0; s < n; ++s) {
      const double q0 =
          m.cost_at(s) + alpha * detail::expected_next(m, vf.values, s, Action::kSkip);
      double q = q0;
      if (m.has_choice(s)) {
        const double q1 = m.cost_at(s) +
                          alpha * detail::expected_next(m, vf.values, s, Action::kSwitch);
        q = std::min(q0, q1);
      }
      next[s] = q;
      sup = std::max(sup, std::abs(q - vf.values[s]));
    }
    vf.values.swap(next);
    vf.span = sup;
    vf.iterations_run = iter;
    if (sup < opts.tol) {
      vf.converged = true;
      break;
    }
  }
  vf.gain = (1.0 - alpha) * vf.values[m.reference_index()];
  return vf;
}

/// Long-run average age of a fixed policy on the truncated model, via
/// fixed-policy relative value iteration.
template <TruncatedMdp M>
ValueFunction evaluate_policy(const M& m, const PolicyTable& policy,
                              const SolveOptions& opts = {}) {
  opts.validate();
  const std::size_t n = m.size();
  if (policy.actions.size() != n)
    throw std::invalid_argument("policy does not cover the state space");
  for (std::size_t s = 0; s < n; ++s)
    if (policy.actions[s] == Action::kSwitch && !m.has_choice(s))
      throw std::invalid_argument("policy switches where only skip is allowed");

  const std::size_t ref = m.reference_index();
  ValueFunction vf;
  vf.values.assign(n, 0.0);
  std::vector<double> next(n, 0.0);
  for (int iter = 1; iter <= opts.max_iters; ++iter) {
    for (std::size_t s = 0; s < n; ++s)
      next[s] =
          m.cost_at(s) + detail::expected_next(m, vf.values, s, policy.actions[s]);
    vf.span = detail::normalize_and_span(vf.values, next, ref);
    vf.iterations_run = iter;
    if (vf.span < opts.tol) {
      vf.converged = true;
      break;
    }
  }
  vf.gain = m.cost_at(ref) +
            detail::expected_next(m, vf.values, ref, policy.actions[ref]) -
            vf.values[ref];
  return vf;
}

}  // namespace aoi
