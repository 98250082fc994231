#pragma once

#include <cstdint>
#include <filesystem>
#include <stdexcept>
#include <string>
#include <vector>

#include <json.hpp>

#include "opinionpool/experiments.hpp"
#include "opinionpool/pooling.hpp"

namespace opinionpool {

/// Malformed input: bad JSON, schema violations, invalid parameters.
class ConfigError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Filesystem failures while reading or writing outputs.
class IoError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Expert-set config: {"experts": [{"mean": [...], "variance": [...]}, ...],
/// "weights": [...]?}. Unknown keys are ignored, which lets pool outputs be
/// fed back in as configs. Throws ConfigError on schema or value problems.
ExpertSet parse_expert_set(const nlohmann::json& j);
ExpertSet load_expert_set(const std::filesystem::path& path);

nlohmann::json gaussian_to_json(const DiagonalGaussian& g);
nlohmann::json expert_set_to_json(const ExpertSet& experts);

/// Sweep config: {"cells": [{"n_good": int, "n_bad": int}, ...],
/// "methods": [ids...]?, "good"/"bad"/"truth": gaussian?, "n_samples": int?,
/// "seed": int?}. Omitted fields fall back to the ScenarioConfig defaults.
std::vector<ScenarioConfig> parse_sweep_config(const nlohmann::json& j);
std::vector<ScenarioConfig> load_sweep_config(const std::filesystem::path& path);

/// CSV with one row per (cell, method):
/// n_good,n_bad,method,nll,nll_se,bc,bc_se,sharpness,sharpness_se,n_samples,seed
/// Floats carry 9 significant digits.
std::string sweep_to_csv(const SweepResult& result);
nlohmann::json sweep_to_json(const SweepResult& result);

/// Reads a whole file; throws IoError on failure.
std::string read_text_file(const std::filesystem::path& path);

/// Writes atomically-ish (temp file then rename); throws IoError on failure.
void write_text_file(const std::filesystem::path& path, const std::string& content);

/// FNV-1a 64-bit digest of a canonical JSON dump, as 16 hex digits.
std::string config_digest_hex(const nlohmann::json& canonical);

/// Sidecar provenance written next to every output file.
struct RunManifest {
  std::string command;
  std::string config_digest;
  std::uint64_t root_seed = 0;
  std::string started_at;  // UTC, RFC 3339
  std::string version;
};

std::string utc_timestamp_now();

/// Writes <output_path>.manifest.json.
void write_manifest(const std::filesystem::path& output_path, const RunManifest& manifest);

}  // namespace opinionpool
