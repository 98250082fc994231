#include "opinionpool/io.hpp"

#include <cinttypes>
#include <cstdio>
#include <ctime>
#include <fstream>
#include <sstream>

namespace opinionpool {

namespace {

Eigen::VectorXd parse_real_vector(const nlohmann::json& j, const std::string& what) {
  if (!j.is_array() || j.empty()) {
    throw ConfigError(what + " must be a non-empty array of numbers");
  }
  Eigen::VectorXd out(static_cast<Eigen::Index>(j.size()));
  Eigen::Index i = 0;
  for (const auto& v : j) {
    if (!v.is_number()) {
      throw ConfigError(what + " must contain only numbers");
    }
    out[i++] = v.get<double>();
  }
  return out;
}

DiagonalGaussian parse_gaussian(const nlohmann::json& j, const std::string& what) {
  if (!j.is_object() || !j.contains("mean") || !j.contains("variance")) {
    throw ConfigError(what + " must be an object with 'mean' and 'variance' arrays");
  }
  const Eigen::VectorXd mean = parse_real_vector(j.at("mean"), what + ".mean");
  const Eigen::VectorXd variance = parse_real_vector(j.at("variance"), what + ".variance");
  if (mean.size() != variance.size()) {
    throw ConfigError(what + ": mean and variance must have the same length");
  }
  if (!mean.allFinite()) {
    throw ConfigError(what + ".mean must be finite");
  }
  if (!variance.allFinite() || (variance.array() <= 0.0).any()) {
    throw ConfigError(what + ".variance entries must be positive");
  }
  return {mean, variance};
}

std::string fmt9(double x) {
  char buf[40];
  std::snprintf(buf, sizeof(buf), "%.9g", x);
  return buf;
}

nlohmann::json vector_to_json(const Eigen::VectorXd& v) {
  nlohmann::json out = nlohmann::json::array();
  for (Eigen::Index i = 0; i < v.size(); ++i) {
    out.push_back(v[i]);
  }
  return out;
}

}  // namespace

ExpertSet parse_expert_set(const nlohmann::json& j) {
  if (!j.is_object() || !j.contains("experts")) {
    throw ConfigError("config must be an object with an 'experts' array");
  }
  const auto& experts_json = j.at("experts");
  if (!experts_json.is_array() || experts_json.empty()) {
    throw ConfigError("'experts' must be a non-empty array");
  }
  std::vector<DiagonalGaussian> experts;
  experts.reserve(experts_json.size());
  std::size_t idx = 0;
  for (const auto& e : experts_json) {
    experts.push_back(parse_gaussian(e, "experts[" + std::to_string(idx++) + "]"));
  }
  try {
    if (j.contains("weights")) {
      Eigen::VectorXd weights = parse_real_vector(j.at("weights"), "weights");
      return {std::move(experts), std::move(weights)};
    }
    return ExpertSet(std::move(experts));
  } catch (const std::invalid_argument& err) {
    throw ConfigError(err.what());
  }
}

ExpertSet load_expert_set(const std::filesystem::path& path) {
  const std::string text = read_text_file(path);
  nlohmann::json j = nlohmann::json::parse(text, nullptr, false);
  if (j.is_discarded()) {
    throw ConfigError("could not parse JSON in " + path.string());
  }
  return parse_expert_set(j);
}

nlohmann::json gaussian_to_json(const DiagonalGaussian& g) {
  return {{"mean", vector_to_json(g.mean())}, {"variance", vector_to_json(g.variance())}};
}

nlohmann::json expert_set_to_json(const ExpertSet& experts) {
  nlohmann::json list = nlohmann::json::array();
  for (const auto& e : experts.experts()) {
    list.push_back(gaussian_to_json(e));
  }
  return {{"experts", std::move(list)}, {"weights", vector_to_json(experts.weights())}};
}

std::vector<ScenarioConfig> parse_sweep_config(const nlohmann::json& j) {
  if (!j.is_object() || !j.contains("cells")) {
    throw ConfigError("sweep config must be an object with a 'cells' array");
  }
  const auto& cells = j.at("cells");
  if (!cells.is_array() || cells.empty()) {
    throw ConfigError("'cells' must be a non-empty array");
  }

  ScenarioConfig base;
  if (j.contains("good")) {
    base.good_spec = parse_gaussian(j.at("good"), "good");
  }
  if (j.contains("bad")) {
    base.bad_spec = parse_gaussian(j.at("bad"), "bad");
  }
  if (j.contains("truth")) {
    base.truth = parse_gaussian(j.at("truth"), "truth");
  }
  if (j.contains("methods")) {
    const auto& methods = j.at("methods");
    if (!methods.is_array() || methods.empty()) {
      throw ConfigError("'methods' must be a non-empty array of method ids");
    }
    base.methods.clear();
    for (const auto& m : methods) {
      if (!m.is_string()) {
        throw ConfigError("'methods' must contain strings");
      }
      try {
        base.methods.push_back(parse_method(m.get<std::string>()));
      } catch (const std::invalid_argument& err) {
        throw ConfigError(err.what());
      }
    }
  }
  if (j.contains("n_samples")) {
    if (!j.at("n_samples").is_number_unsigned() || j.at("n_samples").get<std::uint64_t>() < 2) {
      throw ConfigError("'n_samples' must be an integer >= 2");
    }
    base.n_samples = j.at("n_samples").get<std::size_t>();
  }
  if (j.contains("seed")) {
    if (!j.at("seed").is_number_unsigned()) {
      throw ConfigError("'seed' must be a non-negative integer");
    }
    base.seed = j.at("seed").get<std::uint64_t>();
  }

  std::vector<ScenarioConfig> grid;
  grid.reserve(cells.size());
  std::size_t idx = 0;
  for (const auto& cell : cells) {
    const std::string what = "cells[" + std::to_string(idx++) + "]";
    if (!cell.is_object() || !cell.contains("n_good") || !cell.contains("n_bad")) {
      throw ConfigError(what + " must be an object with 'n_good' and 'n_bad'");
    }
    if (!cell.at("n_good").is_number_integer() || !cell.at("n_bad").is_number_integer()) {
      throw ConfigError(what + ": 'n_good' and 'n_bad' must be integers");
    }
    ScenarioConfig config = base;
    config.n_good = cell.at("n_good").get<int>();
    config.n_bad = cell.at("n_bad").get<int>();
    if (config.n_good < 0 || config.n_bad < 0 || config.n_good + config.n_bad < 1) {
      throw ConfigError(what + ": needs n_good >= 0, n_bad >= 0, and at least one expert");
    }
    grid.push_back(std::move(config));
  }
  return grid;
}

std::vector<ScenarioConfig> load_sweep_config(const std::filesystem::path& path) {
  const std::string text = read_text_file(path);
  nlohmann::json j = nlohmann::json::parse(text, nullptr, false);
  if (j.is_discarded()) {
    throw ConfigError("could not parse JSON in " + path.string());
  }
  return parse_sweep_config(j);
}

std::string sweep_to_csv(const SweepResult& result) {
  std::ostringstream out;
  out << "n_good,n_bad,method,nll,nll_se,bc,bc_se,sharpness,sharpness_se,n_samples,seed\n";
  for (const auto& row : result.rows) {
    out << row.n_good << ',' << row.n_bad << ',' << method_id(row.method) << ','
        << fmt9(row.report.nll.value) << ',' << fmt9(row.report.nll.std_err) << ','
        << fmt9(row.report.bc.value) << ',' << fmt9(row.report.bc.std_err) << ','
        << fmt9(row.report.sharpness.value) << ',' << fmt9(row.report.sharpness.std_err) << ','
        << row.report.n_samples << ',' << row.report.seed << '\n';
  }
  return out.str();
}

nlohmann::json sweep_to_json(const SweepResult& result) {
  nlohmann::json rows = nlohmann::json::array();
  for (const auto& row : result.rows) {
    rows.push_back({{"n_good", row.n_good},
                    {"n_bad", row.n_bad},
                    {"method", std::string(method_id(row.method))},
                    {"nll", row.report.nll.value},
                    {"nll_se", row.report.nll.std_err},
                    {"bc", row.report.bc.value},
                    {"bc_se", row.report.bc.std_err},
                    {"sharpness", row.report.sharpness.value},
                    {"sharpness_se", row.report.sharpness.std_err},
                    {"n_samples", row.report.n_samples},
                    {"seed", row.report.seed}});
  }
  return {{"rows", std::move(rows)},
          {"provenance",
           {{"root_seed", result.provenance.root_seed},
            {"n_samples", result.provenance.n_samples},
            {"version", result.provenance.version}}}};
}

std::string read_text_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) {
    throw IoError("could not open " + path.string() + " for reading");
  }
  std::ostringstream buf;
  buf << in.rdbuf();
  if (in.bad()) {
    throw IoError("failed while reading " + path.string());
  }
  return buf.str();
}

void write_text_file(const std::filesystem::path& path, const std::string& content) {
  std::filesystem::path tmp = path;
  tmp += ".tmp";
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) {
      throw IoError("could not open " + tmp.string() + " for writing");
    }
    out << content;
    out.flush();
    if (!out) {
      throw IoError("failed while writing " + tmp.string());
    }
  }
  std::error_code ec;
  std::filesystem::rename(tmp, path, ec);
  if (ec) {
    throw IoError("could not move " + tmp.string() + " to " + path.string() + ": " + ec.message());
  }
}

std::string config_digest_hex(const nlohmann::json& canonical) {
  const std::string dump = canonical.dump();
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (unsigned char c : dump) {
    h ^= c;
    h *= 0x100000001b3ULL;
  }
  char buf[17];
  std::snprintf(buf, sizeof(buf), "%016" PRIx64, h);
  return buf;
}

std::string utc_timestamp_now() {
  const std::time_t now = std::time(nullptr);
  std::tm tm{};
  gmtime_r(&now, &tm);
  char buf[32];
  std::strftime(buf, sizeof(buf), "%Y-%m-%dT%H:%M:%SZ", &tm);
  return buf;
}

void write_manifest(const std::filesystem::path& output_path, const RunManifest& manifest) {
  nlohmann::json j = {{"command", manifest.command},
                      {"config_digest", manifest.config_digest},
                      {"root_seed", manifest.root_seed},
                      {"started_at", manifest.started_at},
                      {"version", manifest.version}};
  std::filesystem::path path = output_path;
  path += ".manifest.json";
  write_text_file(path, j.dump(2) + "\n");
}

}  // namespace opinionpool
