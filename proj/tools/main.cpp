#include <cstdio>
#include <cstdlib>
#include <iostream>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <json.hpp>

#include "opinionpool/experiments.hpp"
#include "opinionpool/io.hpp"
#include "opinionpool/metrics.hpp"
#include "opinionpool/pooling.hpp"
#include "opinionpool/version.hpp"

namespace op = opinionpool;

namespace {

constexpr int kExitOk = 0;
constexpr int kExitConfig = 2;
constexpr int kExitIo = 3;

enum class PoolMethod { poe, moe, holder05, hellinger, mohel, wb };

const char* pool_method_id(PoolMethod m) {
  switch (m) {
    case PoolMethod::poe:
      return "poe";
    case PoolMethod::moe:
      return "moe";
    case PoolMethod::holder05:
      return "holder05";
    case PoolMethod::hellinger:
      return "hellinger";
    case PoolMethod::mohel:
      return "mohel";
    case PoolMethod::wb:
      return "wb";
  }
  return "";
}

PoolMethod parse_pool_method(const std::string& id) {
  for (PoolMethod m : {PoolMethod::poe, PoolMethod::moe, PoolMethod::holder05,
                       PoolMethod::hellinger, PoolMethod::mohel, PoolMethod::wb}) {
    if (id == pool_method_id(m)) {
      return m;
    }
  }
  throw op::ConfigError("unknown method '" + id +
                        "'; valid methods: poe, moe, holder05, hellinger, mohel, wb");
}

op::ExpertSet load_config(const std::string& path) {
  try {
    return op::load_expert_set(path);
  } catch (const op::IoError& e) {
    // An unreadable input config is a config problem, not an output failure.
    throw op::ConfigError(e.what());
  }
}

std::uint64_t resolve_seed(const std::optional<std::uint64_t>& flag) {
  if (flag) {
    return *flag;
  }
  if (const char* env = std::getenv("OPINIONPOOL_SEED")) {
    char* end = nullptr;
    const unsigned long long v = std::strtoull(env, &end, 10);
    if (end == env || *end != '\0') {
      throw op::ConfigError("OPINIONPOOL_SEED must be a non-negative integer");
    }
    return static_cast<std::uint64_t>(v);
  }
  return 0;
}

std::string fmt9(double x) {
  char buf[40];
  std::snprintf(buf, sizeof(buf), "%.9g", x);
  return buf;
}

struct PoolOutput {
  std::vector<op::DiagonalGaussian> components;
  Eigen::VectorXd weights;
  std::optional<op::NormEstimate> normalization;  // holder05 only
};

PoolOutput run_pool_method(PoolMethod method, const op::ExpertSet& experts, std::size_t n_samples,
                           std::uint64_t seed) {
  PoolOutput out;
  switch (method) {
    case PoolMethod::poe:
      out.components = {op::poe_aggregate(experts)};
      break;
    case PoolMethod::hellinger:
      out.components = {op::hellinger_aggregate(experts)};
      break;
    case PoolMethod::wb:
      out.components = {op::wasserstein_barycenter(experts)};
      break;
    case PoolMethod::moe:
      out.components = experts.experts();
      out.weights = experts.weights();
      return out;
    case PoolMethod::mohel: {
      op::GaussianMixture mix = op::mohel_aggregate(experts);
      out.components = std::move(mix.components);
      out.weights = std::move(mix.weights);
      return out;
    }
    case PoolMethod::holder05:
      out.components = experts.experts();
      out.weights = experts.weights();
      out.normalization = op::holder_normalize(experts, 0.5, n_samples, seed);
      return out;
  }
  out.weights = Eigen::VectorXd::Ones(1);
  return out;
}

nlohmann::json pool_output_to_json(PoolMethod method, const PoolOutput& out,
                                   std::size_t n_samples, std::uint64_t seed) {
  nlohmann::json experts = nlohmann::json::array();
  for (const auto& g : out.components) {
    experts.push_back(op::gaussian_to_json(g));
  }
  nlohmann::json weights = nlohmann::json::array();
  for (Eigen::Index i = 0; i < out.weights.size(); ++i) {
    weights.push_back(out.weights[i]);
  }
  nlohmann::json j = {{"method", pool_method_id(method)},
                      {"experts", std::move(experts)},
                      {"weights", std::move(weights)}};
  if (out.normalization) {
    j["alpha"] = 0.5;
    j["normalization"] = {{"log_norm", out.normalization->log_norm},
                          {"std_err", out.normalization->std_err},
                          {"ess", out.normalization->ess},
                          {"low_ess", out.normalization->low_ess},
                          {"n_samples", n_samples},
                          {"seed", seed}};
  }
  return j;
}

std::string pool_output_to_csv(PoolMethod method, const PoolOutput& out) {
  const Eigen::Index d = out.components.front().dim();
  std::ostringstream csv;
  csv << "method,component,weight,alpha,log_norm,log_norm_se,ess";
  for (Eigen::Index k = 0; k < d; ++k) {
    csv << ",mean_" << k;
  }
  for (Eigen::Index k = 0; k < d; ++k) {
    csv << ",var_" << k;
  }
  csv << '\n';
  for (std::size_t i = 0; i < out.components.size(); ++i) {
    csv << pool_method_id(method) << ',' << i << ',' << fmt9(out.weights[static_cast<Eigen::Index>(i)]);
    if (out.normalization) {
      csv << ",0.5," << fmt9(out.normalization->log_norm) << ','
          << fmt9(out.normalization->std_err) << ',' << fmt9(out.normalization->ess);
    } else {
      csv << ",,,,";
    }
    const auto& g = out.components[i];
    for (Eigen::Index k = 0; k < d; ++k) {
      csv << ',' << fmt9(g.mean()[k]);
    }
    for (Eigen::Index k = 0; k < d; ++k) {
      csv << ',' << fmt9(g.variance()[k]);
    }
    csv << '\n';
  }
  return csv.str();
}

int cmd_pool(const std::string& config_path, const std::string& method_str,
             const std::vector<double>& weights, const std::string& output_path,
             const std::string& format, std::size_t n_samples,
             const std::optional<std::uint64_t>& seed_flag) {
  const std::string started_at = op::utc_timestamp_now();
  const PoolMethod method = parse_pool_method(method_str);
  op::ExpertSet experts = load_config(config_path);
  if (!weights.empty()) {
    Eigen::VectorXd w = Eigen::Map<const Eigen::VectorXd>(weights.data(),
                                                          static_cast<Eigen::Index>(weights.size()));
    try {
      experts = op::ExpertSet(experts.experts(), std::move(w));
    } catch (const std::invalid_argument& e) {
      throw op::ConfigError(e.what());
    }
  }
  const std::uint64_t seed = resolve_seed(seed_flag);

  const PoolOutput out = run_pool_method(method, experts, n_samples, seed);
  std::string payload;
  if (format == "json") {
    payload = pool_output_to_json(method, out, n_samples, seed).dump(2) + "\n";
  } else {
    payload = pool_output_to_csv(method, out);
  }
  op::write_text_file(output_path, payload);

  op::RunManifest manifest;
  manifest.command = "pool";
  manifest.config_digest = op::config_digest_hex(op::expert_set_to_json(experts));
  manifest.root_seed = seed;
  manifest.started_at = started_at;
  manifest.version = op::kVersion;
  op::write_manifest(output_path, manifest);
  return kExitOk;
}

nlohmann::json canonical_sweep_json(const std::vector<op::ScenarioConfig>& grid) {
  nlohmann::json cells = nlohmann::json::array();
  for (const auto& config : grid) {
    cells.push_back({{"n_good", config.n_good}, {"n_bad", config.n_bad}});
  }
  const auto& front = grid.front();
  nlohmann::json methods = nlohmann::json::array();
  for (op::Method m : front.methods) {
    methods.push_back(std::string(op::method_id(m)));
  }
  nlohmann::json j = {{"cells", std::move(cells)},
                      {"methods", std::move(methods)},
                      {"good", op::gaussian_to_json(front.good_spec)},
                      {"bad", op::gaussian_to_json(front.bad_spec)},
                      {"truth", op::gaussian_to_json(front.truth)},
                      {"n_samples", front.n_samples},
                      {"seed", front.seed}};
  if (front.explicit_experts) {
    nlohmann::json experts = nlohmann::json::array();
    for (const auto& g : *front.explicit_experts) {
      experts.push_back(op::gaussian_to_json(g));
    }
    j["experts"] = std::move(experts);
  }
  return j;
}

int cmd_experiment(const std::string& preset, const std::string& config_path,
                   const std::string& output_path, const std::string& format,
                   const std::optional<std::uint64_t>& seed_flag,
                   const std::optional<std::size_t>& samples_flag, unsigned jobs) {
  const std::string started_at = op::utc_timestamp_now();
  const std::uint64_t seed = resolve_seed(seed_flag);

  std::vector<op::ScenarioConfig> grid;
  if (!preset.empty()) {
    const std::size_t n = samples_flag.value_or(100000);
    if (preset == "figure1") {
      grid = op::figure1_grid(seed, n);
    } else if (preset == "figure2") {
      grid = op::figure2_grid(seed, n);
    } else if (preset == "figure7") {
      grid = op::figure7_grid(seed, n);
    } else {
      throw op::ConfigError("unknown preset '" + preset +
                            "'; valid presets: figure1, figure2, figure7");
    }
  } else {
    try {
      grid = op::load_sweep_config(config_path);
    } catch (const op::IoError& e) {
      throw op::ConfigError(e.what());
    }
    for (auto& config : grid) {
      if (seed_flag || std::getenv("OPINIONPOOL_SEED")) {
        config.seed = seed;
      }
      if (samples_flag) {
        config.n_samples = *samples_flag;
      }
    }
  }

  const nlohmann::json canonical = canonical_sweep_json(grid);
  const op::SweepResult result = op::run_sweep(grid, jobs);

  std::string payload;
  if (format == "json") {
    payload = op::sweep_to_json(result).dump(2) + "\n";
  } else {
    payload = op::sweep_to_csv(result);
  }
  op::write_text_file(output_path, payload);

  op::RunManifest manifest;
  manifest.command = "experiment";
  manifest.config_digest = op::config_digest_hex(canonical);
  manifest.root_seed = grid.front().seed;
  manifest.started_at = started_at;
  manifest.version = op::kVersion;
  op::write_manifest(output_path, manifest);
  return kExitOk;
}

int cmd_divergence(const std::string& config_path, double alpha, std::size_t n_samples,
                   const std::optional<std::uint64_t>& seed_flag) {
  const op::ExpertSet experts = load_config(config_path);
  if (experts.size() != 2) {
    throw op::ConfigError("divergence needs a config with exactly two experts");
  }
  const std::uint64_t seed = resolve_seed(seed_flag);
  op::Estimate est;
  try {
    est = op::estimate_alpha_divergence(experts.expert(0), experts.expert(1), alpha, n_samples,
                                        seed);
  } catch (const std::invalid_argument& e) {
    throw op::ConfigError(e.what());
  }
  const nlohmann::json j = {{"alpha", alpha},
                            {"estimate", est.value},
                            {"std_err", est.std_err},
                            {"n_samples", n_samples},
                            {"seed", seed}};
  std::cout << j.dump(2) << std::endl;
  return kExitOk;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Opinion pooling of Gaussian expert densities"};
  app.require_subcommand(1);

  std::string config_path;
  std::string method;
  std::vector<double> weights;
  std::string output_path;
  std::string format = "json";
  std::size_t samples = 100000;
  std::uint64_t seed_value = 0;
  std::size_t samples_value = 0;

  auto* pool = app.add_subcommand("pool", "Aggregate an expert config with one method");
  pool->add_option("config", config_path, "Expert-set JSON config")->required();
  pool->add_option("--method", method, "poe|moe|holder05|hellinger|mohel|wb")->required();
  pool->add_option("--weights", weights, "Override expert weights (must sum to 1)");
  pool->add_option("-o,--output", output_path, "Output file")->required();
  pool->add_option("--format", format, "json|csv")->check(CLI::IsMember({"json", "csv"}));
  pool->add_option("--samples", samples, "Normalizer sample count for holder05");
  auto* pool_seed = pool->add_option("--seed", seed_value, "Root seed");

  std::string preset;
  std::string sweep_config;
  std::string exp_output;
  std::string exp_format = "csv";
  unsigned jobs = 0;

  auto* experiment = app.add_subcommand("experiment", "Run a scenario sweep");
  auto* preset_opt =
      experiment->add_option("--preset", preset, "figure1|figure2|figure7");
  auto* config_opt = experiment->add_option("--config", sweep_config, "Sweep JSON config");
  preset_opt->excludes(config_opt);
  experiment->add_option("-o,--output", exp_output, "Output file")->required();
  experiment->add_option("--format", exp_format, "csv|json")
      ->check(CLI::IsMember({"json", "csv"}));
  auto* exp_seed = experiment->add_option("--seed", seed_value, "Root seed");
  auto* exp_samples = experiment->add_option("--samples", samples_value, "MC samples per metric");
  experiment->add_option("--jobs", jobs, "Worker threads (0 = hardware)");

  std::string div_config;
  double alpha = 0.5;
  std::size_t div_samples = 100000;

  auto* divergence = app.add_subcommand("divergence", "Estimate an alpha divergence");
  divergence->add_option("config", div_config, "Two-expert JSON config")->required();
  divergence->add_option("--alpha", alpha, "Divergence order in (0,1)")->required();
  divergence->add_option("--samples", div_samples, "MC sample count");
  auto* div_seed = divergence->add_option("--seed", seed_value, "Root seed");

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return kExitConfig;
  }

  const auto opt_seed = [&](CLI::Option* o) -> std::optional<std::uint64_t> {
    return o->count() ? std::optional<std::uint64_t>(seed_value) : std::nullopt;
  };

  try {
    if (pool->parsed()) {
      return cmd_pool(config_path, method, weights, output_path, format, samples,
                      opt_seed(pool_seed));
    }
    if (experiment->parsed()) {
      if (preset.empty() && sweep_config.empty()) {
        throw op::ConfigError("experiment needs either --preset or --config");
      }
      const std::optional<std::size_t> samples_opt =
          exp_samples->count() ? std::optional<std::size_t>(samples_value) : std::nullopt;
      return cmd_experiment(preset, sweep_config, exp_output, exp_format, opt_seed(exp_seed),
                            samples_opt, jobs);
    }
    if (divergence->parsed()) {
      return cmd_divergence(div_config, alpha, div_samples, opt_seed(div_seed));
    }
  } catch (const op::ConfigError& e) {
    std::cerr << "error: " << e.what() << std::endl;
    return kExitConfig;
  } catch (const op::IoError& e) {
    std::cerr << "error: " << e.what() << std::endl;
    return kExitIo;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << std::endl;
    return kExitConfig;
  }
  return kExitConfig;
}
