#include "opinionpool/experiments.hpp"

#include <algorithm>
#include <stdexcept>
#include <tuple>

#include "opinionpool/parallel.hpp"
#include "opinionpool/rng.hpp"
#include "opinionpool/version.hpp"

namespace opinionpool {

namespace {

constexpr Method kAllMethods[] = {Method::poe, Method::moe, Method::holder05, Method::hellinger,
                                  Method::wb};

Eigen::VectorXd vec2(double a, double b) {
  Eigen::VectorXd v(2);
  v << a, b;
  return v;
}

std::uint64_t cell_seed(const ScenarioConfig& config, Method method) {
  return rng::derive(config.seed,
                     {static_cast<std::uint64_t>(config.n_good),
                      static_cast<std::uint64_t>(config.n_bad),
                      static_cast<std::uint64_t>(method)});
}

}  // namespace

std::string_view method_id(Method m) {
  switch (m) {
    case Method::poe:
      return "poe";
    case Method::moe:
      return "moe";
    case Method::holder05:
      return "holder05";
    case Method::hellinger:
      return "hellinger";
    case Method::wb:
      return "wb";
  }
  throw std::logic_error("unreachable method");
}

Method parse_method(std::string_view id) {
  for (Method m : kAllMethods) {
    if (method_id(m) == id) {
      return m;
    }
  }
  std::string valid;
  for (Method m : kAllMethods) {
    if (!valid.empty()) {
      valid += ", ";
    }
    valid += method_id(m);
  }
  throw std::invalid_argument("unknown method '" + std::string(id) + "'; valid methods: " + valid);
}

DiagonalGaussian default_good_expert() { return {vec2(0.0, 0.0), vec2(0.5, 0.5)}; }

DiagonalGaussian default_bad_expert() { return {vec2(4.0, 4.0), vec2(0.2, 0.2)}; }

DiagonalGaussian default_truth() { return {vec2(0.0, 0.0), vec2(1.0, 1.0)}; }

ExpertSet build_scenario_experts(const ScenarioConfig& config) {
  if (config.explicit_experts) {
    return ExpertSet(*config.explicit_experts);
  }
  if (config.n_good < 0 || config.n_bad < 0 || config.n_good + config.n_bad < 1) {
    throw std::invalid_argument("a scenario needs n_good >= 0, n_bad >= 0, and at least 1 expert");
  }
  std::vector<DiagonalGaussian> experts;
  experts.reserve(static_cast<std::size_t>(config.n_good + config.n_bad));
  for (int i = 0; i < config.n_good; ++i) {
    experts.push_back(config.good_spec);
  }
  for (int i = 0; i < config.n_bad; ++i) {
    experts.push_back(config.bad_spec);
  }
  return ExpertSet(std::move(experts));
}

ExpertSet build_figure1_scenario() {
  std::vector<DiagonalGaussian> experts;
  experts.emplace_back(vec2(0.0, 0.0), vec2(0.5, 0.5));
  experts.emplace_back(vec2(1.0, 0.2), vec2(0.6, 0.6));
  experts.emplace_back(vec2(4.0, 0.0), vec2(0.2, 0.2));
  return ExpertSet(std::move(experts));
}

MetricReport evaluate_method(Method method, const ExpertSet& experts,
                             const DiagonalGaussian& truth, std::size_t n_samples,
                             std::uint64_t seed) {
  const std::uint64_t nll_seed = rng::derive(seed, {0});
  const std::uint64_t bc_seed = rng::derive(seed, {1});
  const std::uint64_t sharp_seed = rng::derive(seed, {2});
  const std::uint64_t norm_seed = rng::derive(seed, {3});

  MetricReport report;
  report.n_samples = n_samples;
  report.seed = seed;

  switch (method) {
    case Method::poe:
    case Method::hellinger:
    case Method::wb: {
      const DiagonalGaussian g = method == Method::poe         ? poe_aggregate(experts)
                                 : method == Method::hellinger ? hellinger_aggregate(experts)
                                                               : wasserstein_barycenter(experts);
      report.nll = mc_nll(g, truth, n_samples, nll_seed);
      report.bc = mc_bhattacharyya(g, truth, n_samples, bc_seed);
      report.sharpness = {sharpness(g), 0.0};
      return report;
    }
    case Method::moe: {
      const PooledDensity pd = PooledDensity::moe(experts);
      report.nll = mc_nll(pd, truth, n_samples, nll_seed);
      report.bc = mc_bhattacharyya(pd, truth, n_samples, bc_seed);
      report.sharpness = sharpness_sampled(pd, n_samples, sharp_seed);
      return report;
    }
    case Method::holder05: {
      PooledDensity pd = PooledDensity::holder(experts, 0.5);
      pd.normalize(n_samples, norm_seed);
      report.nll = mc_nll(pd, truth, n_samples, nll_seed);
      report.bc = mc_bhattacharyya(pd, truth, n_samples, bc_seed);
      report.sharpness = sharpness_sampled(pd, n_samples, sharp_seed);
      return report;
    }
  }
  throw std::logic_error("unreachable method");
}

std::vector<std::pair<Method, MetricReport>> run_scenario(const ScenarioConfig& config) {
  const ExpertSet experts = build_scenario_experts(config);
  std::vector<std::pair<Method, MetricReport>> out;
  out.reserve(config.methods.size());
  for (Method m : config.methods) {
    out.emplace_back(
        m, evaluate_method(m, experts, config.truth, config.n_samples, cell_seed(config, m)));
  }
  return out;
}

SweepResult run_sweep(const std::vector<ScenarioConfig>& grid, unsigned jobs) {
  struct Task {
    const ScenarioConfig* config;
    Method method;
  };
  std::vector<Task> tasks;
  for (const auto& config : grid) {
    for (Method m : config.methods) {
      tasks.push_back({&config, m});
    }
  }

  SweepResult result;
  result.rows.resize(tasks.size());
  parallel_for(tasks.size(), jobs, [&](std::size_t i) {
    const Task& task = tasks[i];
    const ExpertSet experts = build_scenario_experts(*task.config);
    SweepRow row;
    row.n_good = task.config->n_good;
    row.n_bad = task.config->n_bad;
    row.method = task.method;
    row.report = evaluate_method(task.method, experts, task.config->truth, task.config->n_samples,
                                 cell_seed(*task.config, task.method));
    result.rows[i] = std::move(row);
  });

  std::stable_sort(result.rows.begin(), result.rows.end(), [](const SweepRow& a, const SweepRow& b) {
    return std::make_tuple(a.n_good, a.n_bad, method_id(a.method)) <
           std::make_tuple(b.n_good, b.n_bad, method_id(b.method));
  });

  if (!grid.empty()) {
    result.provenance.root_seed = grid.front().seed;
    result.provenance.n_samples = grid.front().n_samples;
  }
  result.provenance.version = kVersion;
  return result;
}

std::vector<ScenarioConfig> figure1_grid(std::uint64_t root_seed, std::size_t n_samples) {
  ScenarioConfig config;
  config.n_good = 2;
  config.n_bad = 1;
  config.explicit_experts = build_figure1_scenario().experts();
  config.methods = {Method::poe, Method::moe, Method::holder05, Method::hellinger};
  config.n_samples = n_samples;
  config.seed = root_seed;
  return {config};
}

std::vector<ScenarioConfig> figure2_grid(std::uint64_t root_seed, std::size_t n_samples) {
  std::vector<ScenarioConfig> grid;
  for (int n_good = 1; n_good <= 8; ++n_good) {
    ScenarioConfig config;
    config.n_good = n_good;
    config.n_bad = 2;
    config.methods = {Method::poe, Method::moe, Method::holder05, Method::hellinger};
    config.n_samples = n_samples;
    config.seed = root_seed;
    grid.push_back(std::move(config));
  }
  return grid;
}

std::vector<ScenarioConfig> figure7_grid(std::uint64_t root_seed, std::size_t n_samples) {
  std::vector<ScenarioConfig> grid;
  for (int n_bad = 0; n_bad <= 3; ++n_bad) {
    for (int n_good = 1; n_good <= 8; ++n_good) {
      ScenarioConfig config;
      config.n_good = n_good;
      config.n_bad = n_bad;
      config.methods = {Method::poe, Method::moe, Method::holder05, Method::hellinger, Method::wb};
      config.n_samples = n_samples;
      config.seed = root_seed;
      grid.push_back(std::move(config));
    }
  }
  return grid;
}

}  // namespace opinionpool
