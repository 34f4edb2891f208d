#include <catch_amalgamated.hpp>

#include <cstdio>
#include <random>

#include "aoi/policies.hpp"
#include "aoi/solver.hpp"

using namespace aoi;

TEST_CASE("always-skip takes arrivals only when idle") {
  PolicyKind pol = AlwaysSkipPolicy{};
  CHECK(decide(pol, UniformObs{12, 0, true}) == Action::kSwitch);
  CHECK(decide(pol, UniformObs{12, 4, true}) == Action::kSkip);
  CHECK(decide(pol, UniformObs{12, 0, false}) == Action::kSkip);
  CHECK(decide(pol, NonUniformObs{9, 0, 0, 5}) == Action::kSwitch);
  CHECK(decide(pol, NonUniformObs{9, 2, 5, 8}) == Action::kSkip);
}

TEST_CASE("always-switch takes every arrival") {
  PolicyKind pol = AlwaysSwitchPolicy{};
  CHECK(decide(pol, UniformObs{12, 4, true}) == Action::kSwitch);
  CHECK(decide(pol, UniformObs{12, 4, false}) == Action::kSkip);
  CHECK(decide(pol, NonUniformObs{9, 2, 5, 8}) == Action::kSwitch);
  CHECK(decide(pol, NonUniformObs{9, 2, 5, 0}) == Action::kSkip);
}

TEST_CASE("threshold policy follows the epoch-slot rule") {
  PolicyKind pol = ThresholdPolicy{10, {9, 8, 7, 6}};
  // i = delta-d-u+1, j = delta-d+1; tau_2 = 8 accepts j = 8, rejects j = 9.
  CHECK(decide(pol, UniformObs{17, 6, true}) == Action::kSwitch);  // i=2, j=8
  CHECK(decide(pol, UniformObs{18, 7, true}) == Action::kSkip);    // i=2, j=9
  CHECK(decide(pol, UniformObs{30, 0, true}) == Action::kSwitch);  // idle
  CHECK(decide(pol, UniformObs{30, 4, true}) == Action::kSkip);    // i=18 > K
  CHECK(decide(pol, UniformObs{17, 6, false}) == Action::kSkip);
  // Far beyond any threshold, e.g. an uncapped simulation excursion.
  CHECK(decide(pol, UniformObs{100000, 3, true}) == Action::kSkip);
}

TEST_CASE("tabular policies look up their table, clamped at the cap") {
  UniformParams params{3, 0.2, 12};
  UniformModel m(params);
  PolicyTable table;
  table.actions.assign(m.size(), Action::kSkip);
  table.actions[m.index_of({5, 1, 1})] = Action::kSwitch;
  table.actions[m.index_of({12, 2, 1})] = Action::kSwitch;
  PolicyKind pol = TabularUniformPolicy{params, table};
  CHECK(decide(pol, UniformObs{5, 1, true}) == Action::kSwitch);
  CHECK(decide(pol, UniformObs{5, 2, true}) == Action::kSkip);
  CHECK(decide(pol, UniformObs{5, 1, false}) == Action::kSkip);
  // delta above delta_max uses the delta_max row.
  CHECK(decide(pol, UniformObs{4000, 2, true}) == Action::kSwitch);
}

TEST_CASE("observation kind must match the policy kind") {
  CHECK_THROWS_AS(decide(PolicyKind{ThresholdPolicy{5, {4}}},
                         NonUniformObs{9, 2, 5, 8}),
                  std::invalid_argument);
  UniformParams params{3, 0.2, 12};
  UniformModel m(params);
  PolicyTable table;
  table.actions.assign(m.size(), Action::kSkip);
  CHECK_THROWS_AS(decide(PolicyKind{TabularUniformPolicy{params, table}},
                         NonUniformObs{9, 2, 5, 8}),
                  std::invalid_argument);
  NonUniformParams np{0.2, {{2, 3}, {0.5, 0.5}}, 10};
  NonUniformModel nm(np);
  PolicyTable nt;
  nt.actions.assign(nm.size(), Action::kSkip);
  CHECK_THROWS_AS(decide(PolicyKind{TabularNonUniformPolicy{np, nt}},
                         UniformObs{5, 1, true}),
                  std::invalid_argument);
}

TEST_CASE("no policy ever switches without an arrival") {
  NonUniformParams np{0.2, {{2, 3}, {0.5, 0.5}}, 10};
  NonUniformModel nm(np);
  PolicyTable nt;
  nt.actions.assign(nm.size(), Action::kSkip);
  for (std::size_t s = 0; s < nm.size(); ++s)
    if (nm.has_choice(s)) nt.actions[s] = Action::kSwitch;

  std::mt19937 rng(3);
  for (int rep = 0; rep < 200; ++rep) {
    const long long delta = 5 + static_cast<int>(rng() % 50);
    const int u = static_cast<int>(rng() % 5);
    const UniformObs uo{delta, u, false};
    CHECK(decide(PolicyKind{AlwaysSkipPolicy{}}, uo) == Action::kSkip);
    CHECK(decide(PolicyKind{AlwaysSwitchPolicy{}}, uo) == Action::kSkip);
    CHECK(decide(PolicyKind{ThresholdPolicy{6, {7, 6, 5}}}, uo) ==
          Action::kSkip);

    const int c = (rng() % 2) ? 2 : 3;
    const int l = 1 + static_cast<int>(rng() % (c - 1));
    const NonUniformObs no{std::min(delta, 10LL), l, c, 0};
    CHECK(decide(PolicyKind{AlwaysSkipPolicy{}}, no) == Action::kSkip);
    CHECK(decide(PolicyKind{AlwaysSwitchPolicy{}}, no) == Action::kSkip);
    CHECK(decide(PolicyKind{TabularNonUniformPolicy{np, nt}}, no) ==
          Action::kSkip);
  }
}

TEST_CASE("json round trip preserves decisions") {
  UniformParams params{4, 0.15, 20};
  UniformModel m(params);
  std::mt19937 rng(11);
  PolicyTable table;
  table.actions.assign(m.size(), Action::kSkip);
  for (std::size_t s = 0; s < m.size(); ++s)
    if (m.has_choice(s) && rng() % 2) table.actions[s] = Action::kSwitch;

  const PolicyKind original = TabularUniformPolicy{params, table};
  const PolicyKind restored = policy_from_json(policy_to_json(original));
  const auto& rt = std::get<TabularUniformPolicy>(restored);
  CHECK(rt.params.d == params.d);
  CHECK(rt.params.p == params.p);
  CHECK(rt.params.delta_max == params.delta_max);
  CHECK(rt.table.actions == table.actions);

  NonUniformParams np{0.2, {{2, 3}, {0.25, 0.75}}, 12};
  NonUniformModel nm(np);
  PolicyTable nt;
  nt.actions.assign(nm.size(), Action::kSkip);
  for (std::size_t s = 0; s < nm.size(); ++s)
    if (nm.has_choice(s) && rng() % 2) nt.actions[s] = Action::kSwitch;
  const PolicyKind nu = TabularNonUniformPolicy{np, nt};
  const PolicyKind nu_restored = policy_from_json(policy_to_json(nu));
  const auto& nrt = std::get<TabularNonUniformPolicy>(nu_restored);
  CHECK(nrt.table.actions == nt.actions);
  CHECK(nrt.model->params().sizes.support == np.sizes.support);

  const PolicyKind thr = ThresholdPolicy{10, {9, 8, 7, 6}};
  const PolicyKind thr_restored = policy_from_json(policy_to_json(thr));
  const auto& trt = std::get<ThresholdPolicy>(thr_restored);
  CHECK(trt.d == 10);
  CHECK(trt.taus == std::vector<int>{9, 8, 7, 6});

  CHECK(std::holds_alternative<AlwaysSkipPolicy>(
      policy_from_json(policy_to_json(AlwaysSkipPolicy{}))));
  CHECK(std::holds_alternative<AlwaysSwitchPolicy>(
      policy_from_json(policy_to_json(AlwaysSwitchPolicy{}))));
}

TEST_CASE("json loader rejects malformed documents") {
  CHECK_THROWS(policy_from_json({{"kind", "mystery"}}));
  // Entries must cover the whole space.
  nlohmann::json j{{"kind", "tabular_uniform"},
                   {"params", {{"d", 3}, {"p", 0.2}, {"delta_max", 8}}},
                   {"entries", nlohmann::json::array()}};
  j["entries"].push_back({{"state", {3, 0, 0}}, {"action", 0}});
  CHECK_THROWS_AS(policy_from_json(j), std::invalid_argument);
  // Threshold vectors must be non-increasing with tau_i >= i.
  CHECK_THROWS_AS(policy_from_json({{"kind", "threshold"},
                                    {"params", {{"d", 5}, {"taus", {3, 4}}}}}),
                  std::invalid_argument);
}

TEST_CASE("file save and load") {
  const std::string path = "policy_roundtrip_test.json";
  save_policy(ThresholdPolicy{6, {7, 6, 5}}, path);
  const auto& pol = std::get<ThresholdPolicy>(load_policy(path));
  CHECK(pol.d == 6);
  CHECK(pol.taus == std::vector<int>{7, 6, 5});
  std::remove(path.c_str());
  CHECK_THROWS(load_policy("does_not_exist_anywhere.json"));
}
