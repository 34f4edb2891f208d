#pragma once

#include <atomic>
#include <charconv>
#include <cstdlib>
#include <exception>
#include <fstream>
#include <iostream>
#include <mutex>
#include <optional>
#include <sstream>
#include <string>
#include <thread>
#include <vector>

#include <json.hpp>

#include "aoi/policies.hpp"
#include "aoi/renewal_oracle.hpp"
#include "aoi/simulator.hpp"
#include "aoi/solver.hpp"
#include "aoi/structure.hpp"

namespace aoi {

// Process exit codes of the experiment driver.
inline constexpr int kExitOk = 0;
inline constexpr int kExitConfig = 2;        // bad or inconsistent config
inline constexpr int kExitNonConverged = 3;  // solver hit max_iters above tol
inline constexpr int kExitIo = 4;            // file open/write failures

/// Declarative experiment description. Loaded from a JSON config file and/or
/// set by CLI flags; flags win. Unset fields fall back to the defaults of
/// the selected mode (delta_max 1000, 10000 iterations, tol 1e-8, T 10000).
struct ExperimentConfig {
  std::string mode;
  std::optional<double> p;
  std::optional<int> d;
  std::optional<SizeDistribution> sizes;
  std::optional<int> delta_max;
  std::optional<int> iters;
  std::optional<double> tol;
  std::string method = "structured";  // solve-*: structured | plain
  std::optional<long long> horizon;
  std::optional<std::uint64_t> seed;
  std::optional<int> reps;
  std::vector<double> p_grid;
  std::string model = "uniform";  // sweep: uniform | nonuniform
  std::string policy_file;
  std::string trace_file;
  std::string out;
  std::string which;  // figure: 2a | 2b | 3 | 4 | 5 | 6
};

/// Parses "5:0.5,8:0.5" into a size distribution.
inline SizeDistribution parse_sizes(const std::string& text) {
  SizeDistribution out;
  std::stringstream ss(text);
  std::string item;
  while (std::getline(ss, item, ',')) {
    const auto colon = item.find(':');
    if (colon == std::string::npos)
      throw std::invalid_argument("sizes: expected SIZE:PROB pairs");
    out.support.push_back(std::stoi(item.substr(0, colon)));
    out.probs.push_back(std::stod(item.substr(colon + 1)));
  }
  out.validate();
  return out;
}

inline ExperimentConfig config_from_json(const nlohmann::json& j) {
  ExperimentConfig cfg;
  if (j.contains("mode")) cfg.mode = j.at("mode").get<std::string>();
  if (j.contains("p")) cfg.p = j.at("p").get<double>();
  if (j.contains("d")) cfg.d = j.at("d").get<int>();
  if (j.contains("sizes")) {
    const auto& js = j.at("sizes");
    if (js.is_string()) {
      cfg.sizes = parse_sizes(js.get<std::string>());
    } else {
      SizeDistribution f;
      f.support = js.at("support").get<std::vector<int>>();
      f.probs = js.at("probs").get<std::vector<double>>();
      f.validate();
      cfg.sizes = std::move(f);
    }
  }
  if (j.contains("delta_max")) cfg.delta_max = j.at("delta_max").get<int>();
  if (j.contains("iters")) cfg.iters = j.at("iters").get<int>();
  if (j.contains("tol")) cfg.tol = j.at("tol").get<double>();
  if (j.contains("method")) cfg.method = j.at("method").get<std::string>();
  if (j.contains("T")) cfg.horizon = j.at("T").get<long long>();
  if (j.contains("seed")) cfg.seed = j.at("seed").get<std::uint64_t>();
  if (j.contains("reps")) cfg.reps = j.at("reps").get<int>();
  if (j.contains("p_grid")) cfg.p_grid = j.at("p_grid").get<std::vector<double>>();
  if (j.contains("model")) cfg.model = j.at("model").get<std::string>();
  if (j.contains("policy")) cfg.policy_file = j.at("policy").get<std::string>();
  if (j.contains("trace")) cfg.trace_file = j.at("trace").get<std::string>();
  if (j.contains("out")) cfg.out = j.at("out").get<std::string>();
  if (j.contains("which")) cfg.which = j.at("which").get<std::string>();
  return cfg;
}

inline ExperimentConfig load_config(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open config " + path);
  nlohmann::json j;
  in >> j;
  return config_from_json(j);
}

// --- worker pool -----------------------------------------------------------

/// AOI_WORKERS env var, else hardware concurrency.
inline int worker_count() {
  if (const char* env = std::getenv("AOI_WORKERS")) {
    const int v = std::atoi(env);
    if (v >= 1) return v;
  }
  const unsigned hc = std::thread::hardware_concurrency();
  return hc > 0 ? static_cast<int>(hc) : 1;
}

/// Runs f(0..n-1) on the worker pool. Results must be written to
/// pre-allocated slots; ordering of outputs is up to the caller.
template <class F>
void parallel_for(std::size_t n, F&& f) {
  const int workers = std::min<std::size_t>(worker_count(), n);
  if (workers <= 1) {
    for (std::size_t i = 0; i < n; ++i) f(i);
    return;
  }
  std::atomic<std::size_t> next{0};
  std::exception_ptr first_error;
  std::mutex error_mutex;
  std::vector<std::thread> pool;
  pool.reserve(workers);
  for (int w = 0; w < workers; ++w) {
    pool.emplace_back([&] {
      for (;;) {
        const std::size_t i = next.fetch_add(1);
        if (i >= n) return;
        try {
          f(i);
        } catch (...) {
          std::lock_guard<std::mutex> lock(error_mutex);
          if (!first_error) first_error = std::current_exception();
        }
      }
    });
  }
  for (auto& t : pool) t.join();
  if (first_error) std::rethrow_exception(first_error);
}

// --- CSV -------------------------------------------------------------------

namespace detail {

inline std::string fmt_double(double v) {
  char buf[64];
  const auto res = std::to_chars(buf, buf + sizeof(buf), v);
  return std::string(buf, res.ptr);
}

// RFC 4180: CRLF records, '.' decimal separator, plain UTF-8.
class CsvWriter {
 public:
  explicit CsvWriter(const std::string& path)
      : out_(path, std::ios::binary) {
    if (!out_) throw std::runtime_error("cannot open " + path + " for writing");
  }

  void row(const std::vector<std::string>& cells) {
    for (std::size_t i = 0; i < cells.size(); ++i) {
      if (i) out_ << ',';
      out_ << cells[i];
    }
    out_ << "\r\n";
  }

  void close() {
    out_.close();
    if (!out_) throw std::runtime_error("csv write failed");
  }

 private:
  std::ofstream out_;
};

inline std::string summary_path_for(const std::string& policy_path) {
  const std::string suffix = ".json";
  if (policy_path.size() > suffix.size() &&
      policy_path.compare(policy_path.size() - suffix.size(), suffix.size(),
                          suffix) == 0)
    return policy_path.substr(0, policy_path.size() - suffix.size()) +
           ".summary.json";
  return policy_path + ".summary.json";
}

inline void write_json(const std::string& path, const nlohmann::json& j) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot open " + path + " for writing");
  out << j.dump(2) << '\n';
  if (!out) throw std::runtime_error("write failed: " + path);
}

inline nlohmann::json value_summary(const ValueFunction& vf) {
  const auto [lo, hi] =
      std::minmax_element(vf.values.begin(), vf.values.end());
  return {{"min", *lo}, {"max", *hi}, {"span", vf.span},
          {"iterations_run", vf.iterations_run}};
}

}  // namespace detail

// --- run modes --------------------------------------------------------------

inline int run_solve_uniform(const ExperimentConfig& cfg) {
  UniformParams params{cfg.d.value_or(10), cfg.p.value_or(0.07),
                       cfg.delta_max.value_or(1000)};
  SolveOptions opts{cfg.iters.value_or(10000), cfg.tol.value_or(1e-8)};
  UniformModel model(params);
  SolveResult res = cfg.method == "plain"
                        ? relative_value_iteration(model, opts)
                        : structured_vi_uniform(model, opts);
  const ThresholdSummary ts = extract_thresholds(model, res.policy);

  nlohmann::json summary{
      {"mode", "solve-uniform"},
      {"method", cfg.method},
      {"params",
       {{"d", params.d}, {"p", params.p}, {"delta_max", params.delta_max}}},
      {"gain", res.value.gain},
      {"iterations_run", res.value.iterations_run},
      {"span", res.value.span},
      {"converged", res.value.converged},
      {"value_function", detail::value_summary(res.value)},
      {"thresholds",
       {{"taus", ts.taus},
        {"censored", std::vector<int>(ts.censored.begin(), ts.censored.end())},
        {"K", ts.K},
        {"ordering_violations", ts.ordering_violations}}},
  };
  if (!cfg.out.empty()) {
    save_policy(TabularUniformPolicy{params, res.policy}, cfg.out);
    detail::write_json(detail::summary_path_for(cfg.out), summary);
  }
  std::cout << summary.dump(2) << '\n';
  if (!res.value.converged) {
    std::cerr << "solver did not converge: span " << res.value.span
              << " after " << res.value.iterations_run << " iterations\n";
    return kExitNonConverged;
  }
  return kExitOk;
}

inline int run_solve_nonuniform(const ExperimentConfig& cfg) {
  if (!cfg.sizes) throw std::invalid_argument("solve-nonuniform needs --sizes");
  NonUniformParams params{cfg.p.value_or(0.14), *cfg.sizes,
                          cfg.delta_max.value_or(1000)};
  SolveOptions opts{cfg.iters.value_or(10000), cfg.tol.value_or(1e-8)};
  NonUniformModel model(params);
  SolveResult res = cfg.method == "plain"
                        ? relative_value_iteration(model, opts)
                        : structured_vi_nonuniform(model, opts);
  const StructureReport rep =
      check_nonuniform_policy_structure(model, res.policy);

  nlohmann::json summary{
      {"mode", "solve-nonuniform"},
      {"method", cfg.method},
      {"params",
       {{"p", params.p},
        {"support", params.sizes.support},
        {"probs", params.sizes.probs},
        {"delta_max", params.delta_max}}},
      {"gain", res.value.gain},
      {"iterations_run", res.value.iterations_run},
      {"span", res.value.span},
      {"converged", res.value.converged},
      {"value_function", detail::value_summary(res.value)},
      {"structure",
       {{"ok", rep.ok},
        {"states_checked", rep.checked},
        {"violation_count", rep.violation_count},
        {"violations", rep.violations}}},
  };
  if (!cfg.out.empty()) {
    save_policy(TabularNonUniformPolicy{params, res.policy}, cfg.out);
    detail::write_json(detail::summary_path_for(cfg.out), summary);
  }
  std::cout << summary.dump(2) << '\n';
  if (!res.value.converged) {
    std::cerr << "solver did not converge: span " << res.value.span
              << " after " << res.value.iterations_run << " iterations\n";
    return kExitNonConverged;
  }
  return kExitOk;
}

inline int run_simulate(const ExperimentConfig& cfg) {
  if (cfg.policy_file.empty())
    throw std::invalid_argument("simulate needs --policy");
  const PolicyKind policy = load_policy(cfg.policy_file);

  SimConfig sim;
  sim.horizon = cfg.horizon.value_or(10000);
  sim.seed = cfg.seed.value_or(1);
  sim.record_trace = !cfg.trace_file.empty();
  // Model parameters come from the policy file where it carries them;
  // explicit flags override.
  std::optional<double> p;
  std::visit(
      [&](const auto& pol) {
        using P = std::decay_t<decltype(pol)>;
        if constexpr (std::is_same_v<P, TabularUniformPolicy>) {
          p = pol.params.p;
          sim.uniform_d = pol.params.d;
        } else if constexpr (std::is_same_v<P, TabularNonUniformPolicy>) {
          p = pol.model->params().p;
          sim.sizes = pol.model->params().sizes;
        } else if constexpr (std::is_same_v<P, ThresholdPolicy>) {
          sim.uniform_d = pol.d;
        }
      },
      policy);
  if (cfg.p) p = *cfg.p;
  if (cfg.d) sim.uniform_d = *cfg.d;
  if (cfg.sizes) {
    sim.sizes = *cfg.sizes;
    sim.uniform_d.reset();
  }
  if (!sim.uniform_d && !sim.sizes)
    throw std::invalid_argument("simulate: policy carries no model; pass --d or --sizes");
  if (!p) throw std::invalid_argument("simulate: p not set; pass --p");
  sim.p = *p;

  const SimStats stats = simulate(policy, sim);
  nlohmann::json out = stats_to_json(stats);
  out["T"] = sim.horizon;
  out["seed"] = sim.seed;
  if (!cfg.trace_file.empty()) write_trace_csv(cfg.trace_file, stats.trace);
  if (!cfg.out.empty()) detail::write_json(cfg.out, out);
  std::cout << out.dump(2) << '\n';
  return kExitOk;
}

// One sweep point: the solver gain plus simulated averages of the optimal,
// Always Skip, and Always Switch policies (same seeds for all three).
struct SweepRow {
  double p = 0.0;
  double j_opt = 0.0;
  double sim_opt = 0.0;
  double sim_skip = 0.0;
  double sim_switch = 0.0;
  bool converged = true;
};

inline SweepRow sweep_point_uniform(double p, int d, int delta_max,
                                    const SolveOptions& opts, long long T,
                                    std::uint64_t base_seed, int reps,
                                    std::size_t point_index) {
  UniformParams params{d, p, delta_max};
  UniformModel model(params);
  SolveResult res = structured_vi_uniform(model, opts);
  SweepRow row;
  row.p = p;
  row.j_opt = res.value.gain;
  row.converged = res.value.converged;
  const PolicyKind opt = TabularUniformPolicy{params, res.policy};
  const PolicyKind skip = AlwaysSkipPolicy{};
  const PolicyKind always = AlwaysSwitchPolicy{};
  SimConfig sim;
  sim.horizon = T;
  sim.p = p;
  sim.uniform_d = d;
  double a_opt = 0, a_skip = 0, a_switch = 0;
  for (int r = 0; r < reps; ++r) {
    sim.seed = derive_seed(base_seed, point_index, r);
    a_opt += simulate(opt, sim).time_avg_aoi;
    a_skip += simulate(skip, sim).time_avg_aoi;
    a_switch += simulate(always, sim).time_avg_aoi;
  }
  row.sim_opt = a_opt / reps;
  row.sim_skip = a_skip / reps;
  row.sim_switch = a_switch / reps;
  return row;
}

inline SweepRow sweep_point_nonuniform(double p, const SizeDistribution& sizes,
                                       int delta_max, const SolveOptions& opts,
                                       long long T, std::uint64_t base_seed,
                                       int reps, std::size_t point_index) {
  NonUniformParams params{p, sizes, delta_max};
  NonUniformModel model(params);
  SolveResult res = structured_vi_nonuniform(model, opts);
  SweepRow row;
  row.p = p;
  row.j_opt = res.value.gain;
  row.converged = res.value.converged;
  const PolicyKind opt = TabularNonUniformPolicy{params, res.policy};
  const PolicyKind skip = AlwaysSkipPolicy{};
  const PolicyKind always = AlwaysSwitchPolicy{};
  SimConfig sim;
  sim.horizon = T;
  sim.p = p;
  sim.sizes = sizes;
  double a_opt = 0, a_skip = 0, a_switch = 0;
  for (int r = 0; r < reps; ++r) {
    sim.seed = derive_seed(base_seed, point_index, r);
    a_opt += simulate(opt, sim).time_avg_aoi;
    a_skip += simulate(skip, sim).time_avg_aoi;
    a_switch += simulate(always, sim).time_avg_aoi;
  }
  row.sim_opt = a_opt / reps;
  row.sim_skip = a_skip / reps;
  row.sim_switch = a_switch / reps;
  return row;
}

inline std::vector<double> default_p_grid() {
  return {0.01, 0.02, 0.03, 0.05, 0.07, 0.10, 0.15, 0.20, 0.25, 0.30};
}

inline std::vector<SweepRow> run_sweep_rows(const ExperimentConfig& cfg) {
  std::vector<double> grid = cfg.p_grid.empty() ? default_p_grid() : cfg.p_grid;
  std::sort(grid.begin(), grid.end());
  SolveOptions opts{cfg.iters.value_or(10000), cfg.tol.value_or(1e-8)};
  const int delta_max = cfg.delta_max.value_or(1000);
  const long long T = cfg.horizon.value_or(10000);
  const std::uint64_t seed = cfg.seed.value_or(1);
  const int reps = cfg.reps.value_or(1);
  const bool nonuniform = cfg.model == "nonuniform";
  if (nonuniform && !cfg.sizes)
    throw std::invalid_argument("nonuniform sweep needs sizes");
  const int d = cfg.d.value_or(10);

  std::vector<SweepRow> rows(grid.size());
  parallel_for(grid.size(), [&](std::size_t i) {
    rows[i] = nonuniform
                  ? sweep_point_nonuniform(grid[i], *cfg.sizes, delta_max,
                                           opts, T, seed, reps, i)
                  : sweep_point_uniform(grid[i], d, delta_max, opts, T, seed,
                                        reps, i);
  });
  return rows;
}

inline int run_sweep(const ExperimentConfig& cfg) {
  if (cfg.out.empty()) throw std::invalid_argument("sweep needs --out");
  const std::vector<SweepRow> rows = run_sweep_rows(cfg);
  detail::CsvWriter csv(cfg.out);
  csv.row({"p", "J_opt", "sim_opt", "sim_skip", "sim_switch",
           "gap_skip_minus_opt"});
  bool all_converged = true;
  for (const SweepRow& r : rows) {
    all_converged = all_converged && r.converged;
    csv.row({detail::fmt_double(r.p), detail::fmt_double(r.j_opt),
             detail::fmt_double(r.sim_opt), detail::fmt_double(r.sim_skip),
             detail::fmt_double(r.sim_switch),
             detail::fmt_double(r.sim_skip - r.sim_opt)});
  }
  csv.close();
  if (!all_converged) {
    std::cerr << "one or more sweep points did not converge\n";
    return kExitNonConverged;
  }
  return kExitOk;
}

inline int run_figure(const ExperimentConfig& cfg) {
  if (cfg.out.empty()) throw std::invalid_argument("figure needs --out");
  const std::string which = cfg.which;
  SolveOptions opts{cfg.iters.value_or(10000), cfg.tol.value_or(1e-8)};

  if (which == "2a" || which == "2b") {
    UniformParams params{cfg.d.value_or(10), cfg.p.value_or(0.07),
                         cfg.delta_max.value_or(1000)};
    UniformModel model(params);
    SolveResult res = structured_vi_uniform(model, opts);
    detail::CsvWriter csv(cfg.out);
    if (which == "2a") {
      csv.row({"delta", "u", "action"});
      for (int delta = params.d; delta <= params.delta_max; ++delta)
        for (int u = 0; u <= params.d - 1; ++u)
          csv.row({std::to_string(delta), std::to_string(u),
                   std::to_string(to_int(
                       res.policy.actions[model.index_of({delta, u, 1})]))});
    } else {
      csv.row({"i", "j", "action"});
      for (int delta = params.d; delta <= params.delta_max; ++delta)
        for (int u = 1; u <= params.d - 1; ++u) {
          const int i = delta - params.d - u + 1;
          if (i < 1) continue;
          const int j = delta - params.d + 1;
          csv.row({std::to_string(i), std::to_string(j),
                   std::to_string(to_int(
                       res.policy.actions[model.index_of({delta, u, 1})]))});
        }
    }
    csv.close();
    return res.value.converged ? kExitOk : kExitNonConverged;
  }

  if (which == "5") {
    SizeDistribution sizes =
        cfg.sizes ? *cfg.sizes : SizeDistribution{{5, 8}, {0.5, 0.5}};
    NonUniformParams params{cfg.p.value_or(0.14), sizes,
                            cfg.delta_max.value_or(1000)};
    NonUniformModel model(params);
    SolveResult res = structured_vi_nonuniform(model, opts);
    detail::CsvWriter csv(cfg.out);
    csv.row({"c", "b", "delta", "l", "action"});
    for (std::size_t s = 0; s < model.size(); ++s) {
      const NonUniformState st = model.state_at(s);
      if (st.b == 0) continue;
      csv.row({std::to_string(st.c), std::to_string(st.b),
               std::to_string(st.delta), std::to_string(st.l),
               std::to_string(to_int(res.policy.actions[s]))});
    }
    csv.close();
    return res.value.converged ? kExitOk : kExitNonConverged;
  }

  if (which == "3" || which == "6") {
    ExperimentConfig sweep_cfg = cfg;
    sweep_cfg.model = (which == "6") ? "nonuniform" : "uniform";
    if (which == "6" && !sweep_cfg.sizes)
      sweep_cfg.sizes = SizeDistribution{{5, 8}, {0.5, 0.5}};
    return run_sweep(sweep_cfg);
  }

  if (which == "4") {
    ExperimentConfig sweep_cfg = cfg;
    sweep_cfg.model = "uniform";
    const std::vector<SweepRow> rows = run_sweep_rows(sweep_cfg);
    detail::CsvWriter csv(cfg.out);
    csv.row({"p", "gap_skip_minus_opt", "gap_exact"});
    bool all_converged = true;
    for (const SweepRow& r : rows) {
      all_converged = all_converged && r.converged;
      const double skip_exact =
          always_skip_moments(r.p, cfg.d.value_or(10)).avg_aoi_discrete;
      csv.row({detail::fmt_double(r.p),
               detail::fmt_double(r.sim_skip - r.sim_opt),
               detail::fmt_double(skip_exact - r.j_opt)});
    }
    csv.close();
    return all_converged ? kExitOk : kExitNonConverged;
  }

  throw std::invalid_argument("unknown figure id: " + which);
}

/// Dispatches a validated config; maps failures to the exit-code contract.
inline int run(const ExperimentConfig& cfg) {
  try {
    if (cfg.mode == "solve-uniform") return run_solve_uniform(cfg);
    if (cfg.mode == "solve-nonuniform") return run_solve_nonuniform(cfg);
    if (cfg.mode == "simulate") return run_simulate(cfg);
    if (cfg.mode == "sweep") return run_sweep(cfg);
    if (cfg.mode == "figure") return run_figure(cfg);
    throw std::invalid_argument("unknown mode: " + cfg.mode);
  } catch (const std::invalid_argument& e) {
    std::cerr << "config error: " << e.what() << '\n';
    return kExitConfig;
  } catch (const std::exception& e) {
    std::cerr << "i/o error: " << e.what() << '\n';
    return kExitIo;
  }
}

}  // namespace aoi
