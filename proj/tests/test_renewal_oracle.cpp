#include <catch_amalgamated.hpp>

#include "aoi/renewal_oracle.hpp"
#include "support/oracles.hpp"

using namespace aoi;

TEST_CASE("always-skip moments, hand-checked point") {
  // W ~ geometric(1/2): E W = 2, E W^2 = 6; X = W + 1.
  auto mom = always_skip_moments(0.5, 2);
  CHECK(mom.mean_x == Catch::Approx(3.0).margin(1e-12));
  CHECK(mom.mean_x2 == Catch::Approx(11.0).margin(1e-12));
  CHECK(mom.avg_aoi_paper == Catch::Approx(2.0 + 11.0 / 6.0).margin(1e-12));
  CHECK(mom.avg_aoi_discrete == Catch::Approx(1.5 + 11.0 / 6.0).margin(1e-12));
}

TEST_CASE("always-skip moments against plain numeric summation") {
  for (double p : {0.07, 0.2, 0.6}) {
    for (int d : {2, 5, 10}) {
      auto mom = always_skip_moments(p, d);
      auto num = aoitest::numeric_always_skip_moments(p, d, 1000000);
      CHECK(mom.mean_x == Catch::Approx(num.m1).epsilon(1e-10));
      CHECK(mom.mean_x2 == Catch::Approx(num.m2).epsilon(1e-10));
    }
  }
}

TEST_CASE("deterministic epoch limit as p approaches 1") {
  auto mom = always_skip_moments(1.0 - 1e-9, 4);
  CHECK(mom.mean_x == Catch::Approx(4.0).margin(1e-6));
  CHECK(mom.avg_aoi_paper == Catch::Approx(4.0 + 2.0).margin(1e-6));
}

TEST_CASE("degenerate threshold vector reduces to always-skip") {
  auto skip = always_skip_moments(0.13, 7);
  auto thr = threshold_policy_moments(0.13, 7, make_thresholds({}));
  CHECK(thr.mean_x == Catch::Approx(skip.mean_x).margin(1e-12));
  CHECK(thr.mean_x2 == Catch::Approx(skip.mean_x2).margin(1e-12));
}

TEST_CASE("threshold moments against stopped pattern-tree enumeration") {
  struct Case {
    double p;
    int d;
    std::vector<int> taus;
  };
  const Case cases[] = {
      {0.2, 2, {2}},        {0.2, 2, {3, 2}},     {0.5, 2, {2, 2}},
      {0.3, 3, {4, 3}},     {0.25, 4, {6, 5, 4}}, {0.4, 3, {3, 2}},
      {0.2, 4, {4, 5, 4}},  // censored-style, not non-increasing
  };
  for (const auto& c : cases) {
    auto mom = threshold_policy_moments(c.p, c.d, make_thresholds(c.taus));
    auto ref = aoitest::pattern_threshold_moments(c.p, c.d, c.taus, 400);
    CHECK(mom.mean_x == Catch::Approx(ref.m1).epsilon(1e-9));
    CHECK(mom.mean_x2 == Catch::Approx(ref.m2).epsilon(1e-9));
  }
}

TEST_CASE("accepting arrivals can only help at the reference point") {
  auto skip = always_skip_moments(0.07, 10);
  auto thr = threshold_policy_moments(0.07, 10, make_thresholds({9, 8, 7, 6}));
  CHECK(thr.avg_aoi_discrete < skip.avg_aoi_discrete);
  // Both conventions sit exactly half a slot apart.
  CHECK(thr.avg_aoi_paper - thr.avg_aoi_discrete == Catch::Approx(0.5));
}

TEST_CASE("input validation") {
  CHECK_THROWS_AS(always_skip_moments(0.0, 5), std::invalid_argument);
  CHECK_THROWS_AS(always_skip_moments(0.5, 1), std::invalid_argument);
  ThresholdSummary bad_k = make_thresholds({5, 4});
  bad_k.K = 3;
  CHECK_THROWS_AS(threshold_policy_moments(0.2, 4, bad_k),
                  std::invalid_argument);
  CHECK_THROWS_AS(threshold_policy_moments(0.2, 4, make_thresholds({5, 1})),
                  std::invalid_argument);  // tau_2 < 2
}

TEST_CASE("moment sanity: variance nonnegative, mean above d") {
  for (double p : {0.05, 0.3, 0.8}) {
    for (int d : {2, 6}) {
      auto mom = threshold_policy_moments(
          p, d, make_thresholds({d + 1, d}));
      CHECK(mom.mean_x >= d);
      CHECK(mom.mean_x2 >= mom.mean_x * mom.mean_x - 1e-9);
    }
  }
}
