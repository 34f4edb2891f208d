#pragma once

// Test-only oracles, deliberately on different computational paths than the
// production code they check:
//  - exact_uniform_gain: renewal-reward gain of an arbitrary stationary
//    policy on the truncated uniform chain, by backward substitution over
//    one epoch (the solver computes the same number via value iteration).
//  - numeric_always_skip_moments: plain numeric summation of the geometric
//    first-arrival law (the oracle module uses closed forms).
//  - pattern_threshold_moments: epoch moments of a threshold policy by
//    enumerating stopped arrival-pattern trees slot by slot.

#include <cmath>
#include <functional>
#include <limits>
#include <vector>

#include "aoi/types.hpp"
#include "aoi/uniform_model.hpp"

namespace aoitest {

// Adds prob * value, treating a positive-probability infinite branch as
// infinite (0 * inf must not appear).
inline double acc(double prob, double value) {
  if (prob <= 0.0) return 0.0;
  if (std::isinf(value)) return std::numeric_limits<double>::infinity();
  return prob * value;
}

/// Exact long-run average age of the policy `pol(delta, u) -> action on
/// arrival` on the truncated uniform model. Policies that stop delivering
/// end up pinned at the cap, so their average is delta_max.
inline double exact_uniform_gain(
    const aoi::UniformParams& params,
    const std::function<aoi::Action(int, int)>& pol) {
  const int d = params.d;
  const int dmax = params.delta_max;
  const double p = params.p;
  const double q = 1.0 - p;
  const double inf = std::numeric_limits<double>::infinity();

  auto p_switch = [&](int delta, int u) {
    return pol(delta, u) == aoi::Action::kSwitch ? p : 0.0;
  };

  // Capped slice first. Busy states only move upward in u or restart at
  // u = 1, so express T(dmax,u) = A[u] + B[u] * T(dmax,1) and close the loop.
  std::vector<double> t_next(d, 0.0), r_next(d, 0.0);
  {
    std::vector<double> a(d, 0.0), ar(d, 0.0), b(d, 0.0);
    for (int u = d - 1; u >= 1; --u) {
      const double ps = p_switch(dmax, u);
      const double stay = q + (p - ps);  // continue transmitting
      if (u == d - 1) {
        a[u] = 1.0;
        ar[u] = dmax;
        b[u] = ps;
      } else {
        a[u] = 1.0 + stay * a[u + 1];
        ar[u] = dmax + stay * ar[u + 1];
        b[u] = stay * b[u + 1] + ps;
      }
    }
    const double t1 = a[1] / (1.0 - b[1]);
    const double r1 = ar[1] / (1.0 - b[1]);
    for (int u = d - 1; u >= 1; --u) {
      t_next[u] = a[u] + b[u] * t1;
      r_next[u] = ar[u] + b[u] * r1;
    }
    const double ps0 = p_switch(dmax, 0);
    if (ps0 > 0.0) {
      t_next[0] = (1.0 + ps0 * t1) / ps0;
      r_next[0] = (dmax + ps0 * r1) / ps0;
    } else {
      t_next[0] = inf;
      r_next[0] = inf;
    }
  }

  std::vector<double> t_cur(d, 0.0), r_cur(d, 0.0);
  for (int delta = dmax - 1; delta >= d; --delta) {
    for (int u = 0; u <= d - 1; ++u) {
      const double ps = p_switch(delta, u);
      const double stay = q + (p - ps);
      double t = 1.0, r = delta;
      if (u == d - 1) {
        t += acc(ps, t_next[1]);
        r += acc(ps, r_next[1]);
      } else {
        const int u1 = (u > 0) ? u + 1 : 0;
        t += acc(stay, t_next[u1]) + acc(ps, t_next[1]);
        r += acc(stay, r_next[u1]) + acc(ps, r_next[1]);
      }
      t_cur[u] = t;
      r_cur[u] = r;
    }
    t_next = t_cur;
    r_next = r_cur;
  }
  const double t_epoch = t_next[0];
  const double r_epoch = r_next[0];
  if (std::isinf(t_epoch)) return dmax;
  return r_epoch / t_epoch;
}

struct EnumMoments {
  double m1 = 0.0;
  double m2 = 0.0;
};

/// Always-skip epoch moments by direct numeric summation over the first
/// arrival slot; remainder beyond `terms` is a geometric tail.
inline EnumMoments numeric_always_skip_moments(double p, int d, int terms) {
  EnumMoments out;
  const double q = 1.0 - p;
  double pw = p;
  for (int w = 1; w <= terms; ++w) {
    const double x = w + d - 1;
    out.m1 += pw * x;
    out.m2 += pw * x * x;
    pw *= q;
  }
  return out;
}

namespace detail {

// Walks every arrival pattern after the service start at slot `start`,
// stopping each branch at its delivery; probabilities over the stopped tree
// sum to one. Switch decisions follow the per-slot threshold rule.
inline void pattern_walk(double p, int d, const std::vector<int>& taus,
                         int in_service_start, int slot, double weight,
                         EnumMoments& out) {
  const int K = static_cast<int>(taus.size());
  const int i = in_service_start;
  const int delivery = i + d - 1;
  if (slot > delivery) {
    const double x = delivery;
    out.m1 += weight * x;
    out.m2 += weight * x * x;
    return;
  }
  const double q = 1.0 - p;
  // No arrival this slot.
  pattern_walk(p, d, taus, i, slot + 1, weight * q, out);
  // Arrival this slot: switch iff i <= K and slot <= tau_i.
  const bool sw = i <= K && slot <= taus[i - 1];
  if (sw) {
    pattern_walk(p, d, taus, slot, slot + 1, weight * p, out);
  } else {
    // Skipped once, skip until delivery: the branch ends at `delivery`
    // regardless of later arrivals.
    const double x = delivery;
    out.m1 += weight * p * x;
    out.m2 += weight * p * x * x;
  }
}

}  // namespace detail

/// Threshold-policy epoch moments by stopped pattern-tree enumeration, with
/// the first-arrival slot summed numerically out to `first_arrival_terms`.
inline EnumMoments pattern_threshold_moments(double p, int d,
                                             const std::vector<int>& taus,
                                             int first_arrival_terms) {
  EnumMoments out;
  const double q = 1.0 - p;
  const int K = static_cast<int>(taus.size());
  double pw = p;
  for (int w = 1; w <= first_arrival_terms; ++w) {
    if (w > K) {
      // Service starting after slot K runs to completion.
      const double x = w + d - 1;
      out.m1 += pw * x;
      out.m2 += pw * x * x;
    } else {
      detail::pattern_walk(p, d, taus, w, w + 1, pw, out);
    }
    pw *= q;
  }
  return out;
}

}  // namespace aoitest
