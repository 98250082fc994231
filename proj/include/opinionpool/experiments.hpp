#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "opinionpool/metrics.hpp"
#include "opinionpool/pooling.hpp"

namespace opinionpool {

enum class Method { poe, moe, holder05, hellinger, wb };

std::string_view method_id(Method m);

/// Throws std::invalid_argument listing the valid ids on an unknown id.
Method parse_method(std::string_view id);

/// Expert templates for the synthetic contaminated-panel setup: good experts
/// sit on the truth's mode with moderate spread, bad experts are sharp and
/// far off, the truth is a unit Gaussian.
DiagonalGaussian default_good_expert();
DiagonalGaussian default_bad_expert();
DiagonalGaussian default_truth();

/// One sweep cell: n_good copies of good_spec plus n_bad copies of bad_spec,
/// uniform weights, scored against truth by every listed method.
/// explicit_experts, when set, replaces the template construction and
/// n_good/n_bad become labels only.
struct ScenarioConfig {
  int n_good = 1;
  int n_bad = 0;
  DiagonalGaussian good_spec = default_good_expert();
  DiagonalGaussian bad_spec = default_bad_expert();
  DiagonalGaussian truth = default_truth();
  std::vector<Method> methods = {Method::poe, Method::moe, Method::holder05, Method::hellinger};
  std::size_t n_samples = 100000;
  std::uint64_t seed = 0;  // sweep root seed, shared across cells
  std::optional<std::vector<DiagonalGaussian>> explicit_experts;
};

/// The expert panel a cell describes (good experts first, uniform weights).
ExpertSet build_scenario_experts(const ScenarioConfig& config);

/// The fixed 3-expert panel used by the figure1 preset: two experts near the
/// truth's mode and one sharp outlier.
ExpertSet build_figure1_scenario();

/// Scores one method on one cell. The metric streams are derived from
/// (config.seed, n_good, n_bad, method), so a cell's row does not depend on
/// which other cells run or in what order.
MetricReport evaluate_method(Method method, const ExpertSet& experts,
                             const DiagonalGaussian& truth, std::size_t n_samples,
                             std::uint64_t cell_seed);

std::vector<std::pair<Method, MetricReport>> run_scenario(const ScenarioConfig& config);

struct SweepRow {
  int n_good = 0;
  int n_bad = 0;
  Method method = Method::poe;
  MetricReport report;
};

struct SweepProvenance {
  std::uint64_t root_seed = 0;
  std::size_t n_samples = 0;
  std::string version;
};

struct SweepResult {
  std::vector<SweepRow> rows;  // sorted by (n_good, n_bad, method id)
  SweepProvenance provenance;
};

/// Runs every (cell, method) pair, in parallel when jobs != 1. Results are
/// deterministic for a fixed root seed regardless of jobs. jobs = 0 means
/// hardware concurrency.
SweepResult run_sweep(const std::vector<ScenarioConfig>& grid, unsigned jobs = 0);

/// Preset grids. figure1: the fixed 3-expert panel, labeled n_good=2 /
/// n_bad=1. figure2: n_good in 1..8, n_bad = 2, four methods. figure7:
/// n_good in 1..8 crossed with n_bad in 0..3, five methods.
std::vector<ScenarioConfig> figure1_grid(std::uint64_t root_seed, std::size_t n_samples);
std::vector<ScenarioConfig> figure2_grid(std::uint64_t root_seed, std::size_t n_samples);
std::vector<ScenarioConfig> figure7_grid(std::uint64_t root_seed, std::size_t n_samples);

}  // namespace opinionpool
