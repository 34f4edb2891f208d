#pragma once

#include <algorithm>
#include <fstream>
#include <memory>
#include <stdexcept>
#include <string>
#include <variant>
#include <vector>

#include <json.hpp>

#include "aoi/nonuniform_model.hpp"
#include "aoi/solver.hpp"
#include "aoi/structure.hpp"
#include "aoi/types.hpp"
#include "aoi/uniform_model.hpp"

namespace aoi {

/// What a uniform-link policy sees at the start of a slot. delta is not
/// capped here; simulation lets it run free.
struct UniformObs {
  long long delta = 0;
  int u = 0;
  bool arrival = false;
};

struct NonUniformObs {
  long long delta = 0;
  int l = 0;
  int c = 0;
  int b = 0;  // 0 = no arrival
};

/// Never preempts; an idle source still takes an arrival (a policy that
/// refused would never transmit at all).
struct AlwaysSkipPolicy {};

/// Takes every arrival, preempting whatever is in service.
struct AlwaysSwitchPolicy {};

/// Epoch-slot threshold policy for uniform size d. Switch to an arrival at
/// epoch slot j iff idle, or the in-service update started at slot i <= K
/// and j <= taus[i-1].
struct ThresholdPolicy {
  int d = 2;
  std::vector<int> taus;
};

struct TabularUniformPolicy {
  UniformParams params;
  PolicyTable table;
};

/// Tabular non-uniform policy; keeps its model around for state indexing.
struct TabularNonUniformPolicy {
  TabularNonUniformPolicy(NonUniformParams params, PolicyTable table)
      : model(std::make_shared<NonUniformModel>(params)),
        table(std::move(table)) {}

  std::shared_ptr<const NonUniformModel> model;
  PolicyTable table;
};

using PolicyKind = std::variant<AlwaysSkipPolicy, AlwaysSwitchPolicy,
                                ThresholdPolicy, TabularUniformPolicy,
                                TabularNonUniformPolicy>;

namespace detail {

[[noreturn]] inline void mismatch(const char* kind, const char* obs) {
  throw std::invalid_argument(std::string(kind) + " policy queried with " +
                              obs + " observation");
}

}  // namespace detail

inline Action decide(const PolicyKind& policy, const UniformObs& o) {
  if (!o.arrival) return Action::kSkip;
  return std::visit(
      [&](const auto& pol) -> Action {
        using P = std::decay_t<decltype(pol)>;
        if constexpr (std::is_same_v<P, AlwaysSkipPolicy>) {
          return o.u == 0 ? Action::kSwitch : Action::kSkip;
        } else if constexpr (std::is_same_v<P, AlwaysSwitchPolicy>) {
          return Action::kSwitch;
        } else if constexpr (std::is_same_v<P, ThresholdPolicy>) {
          if (o.u == 0) return Action::kSwitch;
          const long long i = o.delta - pol.d - o.u + 1;
          const long long j = o.delta - pol.d + 1;
          if (i >= 1 && i <= static_cast<long long>(pol.taus.size()) &&
              j <= pol.taus[static_cast<std::size_t>(i - 1)])
            return Action::kSwitch;
          return Action::kSkip;
        } else if constexpr (std::is_same_v<P, TabularUniformPolicy>) {
          const auto& pr = pol.params;
          if (o.u < 0 || o.u > pr.d - 1)
            throw std::invalid_argument("observation u outside 0..d-1");
          const int delta = static_cast<int>(std::clamp<long long>(
              o.delta, pr.d, pr.delta_max));
          const std::size_t idx =
              (static_cast<std::size_t>(delta - pr.d) * pr.d + o.u) * 2 + 1;
          return pol.table.actions[idx];
        } else {
          detail::mismatch("non-uniform tabular", "uniform");
        }
      },
      policy);
}

inline Action decide(const PolicyKind& policy, const NonUniformObs& o) {
  if (o.b == 0) return Action::kSkip;
  return std::visit(
      [&](const auto& pol) -> Action {
        using P = std::decay_t<decltype(pol)>;
        if constexpr (std::is_same_v<P, AlwaysSkipPolicy>) {
          return (o.l == 0 && o.c == 0) ? Action::kSwitch : Action::kSkip;
        } else if constexpr (std::is_same_v<P, AlwaysSwitchPolicy>) {
          return Action::kSwitch;
        } else if constexpr (std::is_same_v<P, TabularNonUniformPolicy>) {
          const auto& pr = pol.model->params();
          const int delta = static_cast<int>(std::clamp<long long>(
              o.delta, pr.sizes.min_size(), pr.delta_max));
          return pol.table.actions[pol.model->index_of(
              {delta, o.l, o.c, o.b})];
        } else {
          detail::mismatch("uniform-only", "non-uniform");
        }
      },
      policy);
}

// --- JSON form: {kind, params, entries:[{state, action}]} ---

inline nlohmann::json policy_to_json(const PolicyKind& policy) {
  using nlohmann::json;
  return std::visit(
      [](const auto& pol) -> json {
        using P = std::decay_t<decltype(pol)>;
        if constexpr (std::is_same_v<P, AlwaysSkipPolicy>) {
          return {{"kind", "always_skip"}, {"params", json::object()}};
        } else if constexpr (std::is_same_v<P, AlwaysSwitchPolicy>) {
          return {{"kind", "always_switch"}, {"params", json::object()}};
        } else if constexpr (std::is_same_v<P, ThresholdPolicy>) {
          return {{"kind", "threshold"},
                  {"params", {{"d", pol.d}, {"taus", pol.taus}}}};
        } else if constexpr (std::is_same_v<P, TabularUniformPolicy>) {
          json entries = json::array();
          UniformModel m(pol.params);
          for (std::size_t s = 0; s < m.size(); ++s) {
            const UniformState st = m.state_at(s);
            entries.push_back({{"state", {st.delta, st.u, st.a}},
                               {"action", to_int(pol.table.actions[s])}});
          }
          return {{"kind", "tabular_uniform"},
                  {"params",
                   {{"d", pol.params.d},
                    {"p", pol.params.p},
                    {"delta_max", pol.params.delta_max}}},
                  {"entries", std::move(entries)}};
        } else {
          json entries = json::array();
          const NonUniformModel& m = *pol.model;
          for (std::size_t s = 0; s < m.size(); ++s) {
            const NonUniformState st = m.state_at(s);
            entries.push_back(
                {{"state", {st.delta, st.l, st.c, st.b}},
                 {"action", to_int(pol.table.actions[s])}});
          }
          const auto& pr = m.params();
          return {{"kind", "tabular_nonuniform"},
                  {"params",
                   {{"p", pr.p},
                    {"support", pr.sizes.support},
                    {"probs", pr.sizes.probs},
                    {"delta_max", pr.delta_max}}},
                  {"entries", std::move(entries)}};
        }
      },
      policy);
}

inline PolicyKind policy_from_json(const nlohmann::json& j) {
  const std::string kind = j.at("kind").get<std::string>();
  if (kind == "always_skip") return AlwaysSkipPolicy{};
  if (kind == "always_switch") return AlwaysSwitchPolicy{};
  if (kind == "threshold") {
    ThresholdPolicy pol;
    pol.d = j.at("params").at("d").get<int>();
    pol.taus = j.at("params").at("taus").get<std::vector<int>>();
    for (std::size_t i = 0; i < pol.taus.size(); ++i) {
      if (pol.taus[i] < static_cast<int>(i) + 1 ||
          (i > 0 && pol.taus[i] > pol.taus[i - 1]))
        throw std::invalid_argument("threshold policy: invalid taus");
    }
    return pol;
  }
  if (kind == "tabular_uniform") {
    UniformParams pr;
    pr.d = j.at("params").at("d").get<int>();
    pr.p = j.at("params").at("p").get<double>();
    pr.delta_max = j.at("params").at("delta_max").get<int>();
    UniformModel m(pr);
    PolicyTable table;
    table.actions.assign(m.size(), Action::kSkip);
    std::vector<char> seen(m.size(), 0);
    for (const auto& e : j.at("entries")) {
      const auto st = e.at("state");
      const UniformState s{st.at(0).get<int>(), st.at(1).get<int>(),
                           st.at(2).get<int>()};
      const std::size_t idx = m.index_of(s);
      table.actions[idx] = action_from_int(e.at("action").get<int>());
      seen[idx] = 1;
    }
    if (std::count(seen.begin(), seen.end(), 1) !=
        static_cast<long>(m.size()))
      throw std::invalid_argument("tabular_uniform: entries not total");
    return TabularUniformPolicy{pr, std::move(table)};
  }
  if (kind == "tabular_nonuniform") {
    NonUniformParams pr;
    pr.p = j.at("params").at("p").get<double>();
    pr.sizes.support = j.at("params").at("support").get<std::vector<int>>();
    pr.sizes.probs = j.at("params").at("probs").get<std::vector<double>>();
    pr.delta_max = j.at("params").at("delta_max").get<int>();
    NonUniformModel m(pr);
    PolicyTable table;
    table.actions.assign(m.size(), Action::kSkip);
    std::vector<char> seen(m.size(), 0);
    for (const auto& e : j.at("entries")) {
      const auto st = e.at("state");
      const NonUniformState s{st.at(0).get<int>(), st.at(1).get<int>(),
                              st.at(2).get<int>(), st.at(3).get<int>()};
      const std::size_t idx = m.index_of(s);
      table.actions[idx] = action_from_int(e.at("action").get<int>());
      seen[idx] = 1;
    }
    if (std::count(seen.begin(), seen.end(), 1) !=
        static_cast<long>(m.size()))
      throw std::invalid_argument("tabular_nonuniform: entries not total");
    return TabularNonUniformPolicy{pr, std::move(table)};
  }
  throw std::invalid_argument("unknown policy kind: " + kind);
}

inline void save_policy(const PolicyKind& policy, const std::string& path) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot open " + path + " for writing");
  out << policy_to_json(policy).dump(2) << '\n';
  if (!out) throw std::runtime_error("write failed: " + path);
}

inline PolicyKind load_policy(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open " + path);
  nlohmann::json j;
  in >> j;
  return policy_from_json(j);
}

}  // namespace aoi
