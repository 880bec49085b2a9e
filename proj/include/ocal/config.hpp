#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

#include "ocal/data.hpp"
#include "ocal/kernel.hpp"
#include "ocal/learners.hpp"
#include "ocal/metrics.hpp"
#include "ocal/strategies.hpp"

namespace ocal {

using json = nlohmann::json;

/// Where a dataset comes from and how it is resampled. Exactly one of `path`
/// and `blob` is set.
struct DatasetRef {
  std::string name;
  std::string path;
  std::optional<BlobSpec> blob;
  /// Resampling is applied when outlier_rate is set.
  std::optional<double> outlier_rate;
  std::size_t max_n = 1000;
  /// Resample seed (CSV) or generation seed (synthetic).
  std::uint64_t seed = 0;
};

struct PoolSpec {
  PoolStrategy strategy = PoolStrategy::Pu;
  double param = 0.0;
};

struct SplitSpec {
  SplitStrategy strategy = SplitStrategy::Sf;
  double train_fraction = 0.8;
};

struct LearnerSpec {
  LearnerKind kind = LearnerKind::svddneg;
  double kappa = 0.0;
  /// Absolute C2; defaults to C1.
  std::optional<double> c2;
};

/// One cell of the experiment grid.
struct ExperimentConfig {
  DatasetRef dataset;
  PoolSpec pool;
  SplitSpec split;
  LearnerSpec learner;
  GammaHeuristic gamma;
  StrategyConfig strategy;
  /// When unset, p(in) is the true inlier share of the dataset.
  std::optional<double> prior_inlier;
  std::vector<std::string> metrics{"mcc"};
  std::size_t budget = 50;
  std::uint64_t seed = 0;
  double expected_outlier_fraction = 0.05;
  double oracle_noise = 0.0;
  SolverOptions solver;
  bool audit = false;
  bool record_timing = false;
};

json to_json(const DatasetRef& d);
DatasetRef dataset_ref_from_json(const json& j);
json to_json(const ExperimentConfig& c);
ExperimentConfig config_from_json(const json& j);

/// Canonical serialization (sorted keys, round-trip doubles) of the fields
/// that determine the outcome. Timing and audit switches are excluded.
std::string canonical_string(const ExperimentConfig& c);
/// 16 hex digits of FNV-1a over canonical_string().
std::string fingerprint(const ExperimentConfig& c);
std::uint64_t fnv1a64(std::string_view bytes);

/// Declarative grid: the cartesian product of every list.
struct GridSpec {
  std::string name = "grid";
  /// Each entry expands over its seeds.
  struct DatasetEntry {
    DatasetRef ref;
    std::vector<std::uint64_t> seeds;
  };
  std::vector<DatasetEntry> datasets;
  std::vector<PoolSpec> pools;
  std::vector<SplitSpec> splits;
  std::vector<LearnerSpec> learners;
  std::vector<GammaHeuristic> gammas;
  std::vector<StrategyKind> strategies;
  StrategyConfig strategy_params;
  std::optional<double> prior_inlier;
  std::vector<std::string> metrics{"mcc"};
  std::size_t budget = 50;
  std::vector<std::uint64_t> seeds{1};
  double expected_outlier_fraction = 0.05;
  double oracle_noise = 0.0;
  SolverOptions solver;
  bool audit = false;
  bool record_timing = false;
  /// Relative dataset paths resolve against this directory.
  std::filesystem::path base_dir;
};

GridSpec grid_from_json(const json& j, std::filesystem::path base_dir = {});
GridSpec load_grid(const std::filesystem::path& path);
json to_json(const GridSpec& g);

}  // namespace ocal
