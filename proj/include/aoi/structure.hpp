#pragma once

#include <cstddef>
#include <string>
#include <vector>

#include "aoi/nonuniform_model.hpp"
#include "aoi/solver.hpp"
#include "aoi/types.hpp"
#include "aoi/uniform_model.hpp"

namespace aoi {

/// Epoch-slot thresholds of a uniform-model policy: with the in-service
/// update started at epoch slot i <= K, a new arrival at slot j is accepted
/// iff j <= taus[i-1]. K = 0 means arrivals are never accepted mid-service.
///
/// A state (i,j) only exists for j <= i+d-1 (the in-service update is gone
/// afterwards), so when a whole row switches the recorded value i+d-1 is
/// just a lower bound on the underlying threshold; such entries are flagged
/// in `censored`. Ordering violations are only witnessed where the larger
/// entry is uncensored.
struct ThresholdSummary {
  std::vector<int> taus;
  std::vector<char> censored;
  int K = 0;

  std::vector<std::string> ordering_violations;
};

/// Summary for a hand-specified threshold vector (tau_1, tau_2, ...).
inline ThresholdSummary make_thresholds(std::vector<int> taus) {
  ThresholdSummary out;
  out.K = static_cast<int>(taus.size());
  out.censored.assign(taus.size(), 0);
  out.taus = std::move(taus);
  return out;
}

/// Reads the threshold structure out of a uniform-model policy table.
/// Epoch coordinates of a mid-service state (delta,u,1), u >= 1:
///   i = delta - d - u + 1 (epoch slot the in-service update arrived),
///   j = delta - d + 1     (epoch slot of the new arrival).
/// Only states with i >= 1 describe in-epoch situations the chain can reach.
/// Throws StructureViolation when the switch set is not downward closed in j
/// for some i (a switch above a skip), since then no threshold reproduces
/// the table.
inline ThresholdSummary extract_thresholds(const UniformModel& m,
                                           const PolicyTable& policy) {
  const int d = m.params().d;
  const int max_i = m.params().delta_max - d;  // largest i with any u >= 1
  std::vector<int> tau_raw(static_cast<std::size_t>(std::max(max_i, 0)) + 2, 0);
  std::vector<int> skip_min_j(tau_raw.size(), 0);

  for (int delta = d; delta <= m.params().delta_max; ++delta) {
    for (int u = 1; u <= d - 1; ++u) {
      const int i = delta - d - u + 1;
      if (i < 1) continue;
      const int j = delta - d + 1;
      const std::size_t s = m.index_of({delta, u, 1});
      if (policy.actions[s] == Action::kSwitch) {
        tau_raw[i] = std::max(tau_raw[i], j);
      } else if (skip_min_j[i] == 0 || j < skip_min_j[i]) {
        skip_min_j[i] = j;
      }
    }
  }

  ThresholdSummary out;
  int K = 0;
  for (int i = 1; i <= max_i; ++i)
    if (tau_raw[i] >= i) K = i;
  out.K = K;
  for (int i = 1; i <= K; ++i) {
    if (tau_raw[i] < i)
      throw StructureViolation("no switch states for epoch slot i=" +
                               std::to_string(i) + " inside K");
    if (skip_min_j[i] != 0 && skip_min_j[i] <= tau_raw[i])
      throw StructureViolation(
          "policy is not threshold-form in j at i=" + std::to_string(i) +
          ": skip at j=" + std::to_string(skip_min_j[i]) +
          " below switch at j=" + std::to_string(tau_raw[i]));
    out.taus.push_back(tau_raw[i]);
    const int j_cap = std::min(i + d - 1, m.params().delta_max - d + 1);
    out.censored.push_back(tau_raw[i] >= j_cap ? 1 : 0);
  }
  for (int i = 1; i < K; ++i)
    if (out.taus[i] > out.taus[i - 1] && !out.censored[i])
      out.ordering_violations.push_back(
          "tau_" + std::to_string(i + 1) + "=" + std::to_string(out.taus[i]) +
          " exceeds tau_" + std::to_string(i) + "=" +
          std::to_string(out.taus[i - 1]));
  return out;
}

/// Outcome of a structural audit; `violations` holds at most `kept` notes.
struct StructureReport {
  bool ok = true;
  std::size_t checked = 0;
  std::size_t violation_count = 0;
  std::vector<std::string> violations;

  void add(std::string note) {
    ok = false;
    ++violation_count;
    if (violations.size() < 20) violations.push_back(std::move(note));
  }
};

/// Monotonicity of a uniform-model policy: skip propagates to larger delta
/// (fixed u >= 1), switch propagates to larger in-service age (fixed delta),
/// and an idle source always takes an arrival.
inline StructureReport check_uniform_policy_structure(const UniformModel& m,
                                                      const PolicyTable& pol) {
  StructureReport rep;
  const int d = m.params().d;
  const int dmax = m.params().delta_max;
  auto act = [&](int delta, int u) {
    return pol.actions[m.index_of({delta, u, 1})];
  };
  for (int delta = d; delta <= dmax; ++delta) {
    for (int u = 1; u <= d - 1; ++u) {
      ++rep.checked;
      if (delta < dmax && act(delta, u) == Action::kSkip &&
          act(delta + 1, u) == Action::kSwitch)
        rep.add("skip at (" + std::to_string(delta) + "," + std::to_string(u) +
                ") but switch at delta+1");
      if (u < d - 1 && act(delta, u) == Action::kSwitch &&
          act(delta, u + 1) == Action::kSkip)
        rep.add("switch at (" + std::to_string(delta) + "," +
                std::to_string(u) + ") but skip at u+1");
    }
    if (act(delta, 0) != Action::kSwitch)
      rep.add("idle state (" + std::to_string(delta) + ",0,1) does not switch");
  }
  return rep;
}

/// The five structural properties of the optimal non-uniform policy, audited
/// over every arrival state:
///   (a) switch propagates to smaller arrival sizes b' < b,
///   (b) b <= l forces a switch,
///   (c) switch propagates to larger in-service sizes c' > c,
///   (d) an idle source takes any arrival,
///   (e) skip propagates to larger delta.
inline StructureReport check_nonuniform_policy_structure(
    const NonUniformModel& m, const PolicyTable& pol) {
  StructureReport rep;
  const auto& support = m.params().sizes.support;
  const int dmax = m.params().delta_max;
  auto act = [&](const NonUniformState& s) {
    return pol.actions[m.index_of(s)];
  };
  for (std::size_t s = 0; s < m.size(); ++s) {
    const NonUniformState st = m.state_at(s);
    if (st.b == 0) continue;
    ++rep.checked;
    const Action w = pol.actions[s];
    auto tag = [&] {
      return "(" + std::to_string(st.delta) + "," + std::to_string(st.l) +
             "," + std::to_string(st.c) + "," + std::to_string(st.b) + ")";
    };
    if (w == Action::kSwitch) {
      for (int b2 : support)
        if (b2 < st.b && act({st.delta, st.l, st.c, b2}) != Action::kSwitch)
          rep.add("(a) switch at " + tag() + " but skip at b'=" +
                  std::to_string(b2));
      if (st.l >= 1)
        for (int c2 : support)
          if (c2 > st.c && act({st.delta, st.l, c2, st.b}) != Action::kSwitch)
            rep.add("(c) switch at " + tag() + " but skip at c'=" +
                    std::to_string(c2));
    } else {
      if (st.b <= st.l) rep.add("(b) skip at " + tag() + " with b <= l");
      if (st.l == 0 && st.c == 0) rep.add("(d) skip at idle " + tag());
      if (st.delta < dmax &&
          act({st.delta + 1, st.l, st.c, st.b}) == Action::kSwitch)
        rep.add("(e) skip at " + tag() + " but switch at delta+1");
    }
  }
  return rep;
}

/// Monotonicity of a non-uniform value function in delta, in c (c > 0, fixed
/// delta,l,b), and in b (b > 0, fixed delta,l,c). `eps` absorbs float noise.
inline StructureReport check_value_monotonicity(const NonUniformModel& m,
                                                const std::vector<double>& v,
                                                double eps = 1e-9) {
  StructureReport rep;
  const auto& support = m.params().sizes.support;
  const int dmax = m.params().delta_max;
  auto val = [&](const NonUniformState& s) { return v[m.index_of(s)]; };
  for (std::size_t s = 0; s < m.size(); ++s) {
    const NonUniformState st = m.state_at(s);
    ++rep.checked;
    auto tag = [&] {
      return "(" + std::to_string(st.delta) + "," + std::to_string(st.l) +
             "," + std::to_string(st.c) + "," + std::to_string(st.b) + ")";
    };
    if (st.delta < dmax &&
        val({st.delta + 1, st.l, st.c, st.b}) < v[s] - eps)
      rep.add("V not nondecreasing in delta at " + tag());
    if (st.l >= 1)
      for (int c2 : support)
        if (c2 > st.c && val({st.delta, st.l, c2, st.b}) < v[s] - eps)
          rep.add("V not nondecreasing in c at " + tag());
    if (st.b > 0)
      for (int b2 : support)
        if (b2 > st.b && val({st.delta, st.l, st.c, b2}) < v[s] - eps)
          rep.add("V not nondecreasing in b at " + tag());
  }
  return rep;
}

}  // namespace aoi
