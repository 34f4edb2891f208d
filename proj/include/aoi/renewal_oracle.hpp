#pragma once

#include <algorithm>
#include <cmath>
#include <stdexcept>
#include <vector>

#include "aoi/structure.hpp"

namespace aoi {

/// First two epoch-length moments of a renewal (sequential-switching) policy
/// under uniform update size, and the renewal-reward average age
///   E[R]/E[X] = d + E[X^2] / (2 E[X])
/// in the continuous-style accounting; the per-slot (discrete) accounting is
/// exactly 1/2 lower.
struct RenewalMoments {
  double mean_x = 0.0;
  double mean_x2 = 0.0;
  double avg_aoi_paper = 0.0;
  double avg_aoi_discrete = 0.0;
};

namespace detail {

inline RenewalMoments finish_moments(int d, double m1, double m2) {
  RenewalMoments out;
  out.mean_x = m1;
  out.mean_x2 = m2;
  out.avg_aoi_paper = d + m2 / (2.0 * m1);
  out.avg_aoi_discrete = out.avg_aoi_paper - 0.5;
  return out;
}

// Partial moments of the geometric first-arrival law over {m, m+1, ...}:
//   g0 = sum q^{w-1} p, g1 = sum w q^{w-1} p, g2 = sum w^2 q^{w-1} p.
struct GeometricTail {
  double g0, g1, g2;
};

inline GeometricTail geometric_tail(double p, int m) {
  const double q = 1.0 - p;
  const double head = std::pow(q, m - 1);
  GeometricTail t;
  t.g0 = head;
  t.g1 = head * (m + q / p);
  t.g2 = head * (static_cast<double>(m) * m + 2.0 * m * q / p +
                 q * (1.0 + q) / (p * p));
  return t;
}

}  // namespace detail

/// Epoch moments when every mid-service arrival is dropped: the epoch is
/// X = W + d - 1 with W the geometric waiting time for the first arrival.
inline RenewalMoments always_skip_moments(double p, int d) {
  if (!(p > 0.0 && p < 1.0)) throw std::invalid_argument("p must lie in (0,1)");
  if (d < 2) throw std::invalid_argument("d must be >= 2");
  const double ew = 1.0 / p;
  const double ew2 = (2.0 - p) / (p * p);
  const double m1 = ew + (d - 1);
  const double m2 = ew2 + 2.0 * (d - 1) * ew +
                    static_cast<double>(d - 1) * (d - 1);
  return detail::finish_moments(d, m1, m2);
}

/// Exact epoch moments of the threshold policy described by `ts` (switch to
/// an arrival at slot j iff the in-service update started at slot i <= K and
/// j <= tau_i). The epoch tree over service start slots is finite once i
/// exceeds K, and both the first-arrival law and the no-more-switches branch
/// are summed in closed form, so there is no truncation anywhere.
inline RenewalMoments threshold_policy_moments(double p, int d,
                                               const ThresholdSummary& ts) {
  if (!(p > 0.0 && p < 1.0)) throw std::invalid_argument("p must lie in (0,1)");
  if (d < 2) throw std::invalid_argument("d must be >= 2");
  const int K = ts.K;
  if (K != static_cast<int>(ts.taus.size()))
    throw std::invalid_argument("threshold summary: K != taus.size()");
  // tau_i >= i keeps the policy well defined; censored summaries may carry
  // cap-clipped entries that are not non-increasing, which is fine here
  // because slots beyond i+d-1 never come into play anyway.
  for (int i = 1; i <= K; ++i)
    if (ts.taus[i - 1] < i)
      throw std::invalid_argument("threshold summary: tau_i < i");
  if (K == 0) return always_skip_moments(p, d);

  const double q = 1.0 - p;
  // m1[i], m2[i]: epoch-length moments given the in-service update started
  // at epoch slot i; solved from i = K downward since switches only move the
  // start slot forward.
  std::vector<double> m1(K + 1, 0.0), m2(K + 1, 0.0);
  auto end_m1 = [&](int i) { return static_cast<double>(i + d - 1); };
  auto moments_from = [&](int j, double& o1, double& o2) {
    if (j <= K) {
      o1 = m1[j];
      o2 = m2[j];
    } else {
      o1 = end_m1(j);
      o2 = o1 * o1;
    }
  };
  for (int i = K; i >= 1; --i) {
    const int ci = std::min(ts.taus[i - 1], i + d - 1);
    const double p_end = std::pow(q, ci - i);
    double a1 = p_end * end_m1(i);
    double a2 = p_end * end_m1(i) * end_m1(i);
    double pg = p;  // q^{g-1} p
    for (int g = 1; g <= ci - i; ++g) {
      double o1, o2;
      moments_from(i + g, o1, o2);
      a1 += pg * o1;
      a2 += pg * o2;
      pg *= q;
    }
    m1[i] = a1;
    m2[i] = a2;
  }

  // First arrival at slot w: service starts there; beyond K the epoch is the
  // deterministic w + d - 1 and the whole tail collapses to geometric
  // partial moments.
  double t1 = 0.0, t2 = 0.0;
  double pw = p;  // q^{w-1} p
  for (int w = 1; w <= K; ++w) {
    t1 += pw * m1[w];
    t2 += pw * m2[w];
    pw *= q;
  }
  const detail::GeometricTail tail = detail::geometric_tail(p, K + 1);
  t1 += tail.g1 + (d - 1) * tail.g0;
  t2 += tail.g2 + 2.0 * (d - 1) * tail.g1 +
        static_cast<double>(d - 1) * (d - 1) * tail.g0;
  return detail::finish_moments(d, t1, t2);
}

}  // namespace aoi
