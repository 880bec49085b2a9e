#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <map>
#include <memory>
#include <mutex>
#include <optional>
#include <string>
#include <vector>

#include "ocal/config.hpp"

namespace ocal {

/// Simulated label source. With noise_rate > 0 each answer is flipped with that
/// probability, drawn from a stream keyed by the queried index.
class Oracle {
 public:
  Oracle(std::vector<Label> truth, double noise_rate = 0.0, std::uint64_t seed = 0);

  Label ask(std::size_t i) const;
  double noise_rate() const { return noise_; }

 private:
  std::vector<Label> truth_;
  double noise_;
  std::uint64_t seed_;
};

enum class RunStatus { ok, truncated, failed, infeasible };
const char* to_string(RunStatus s) noexcept;
RunStatus parse_run_status(std::string_view s);

struct ResultRecord {
  std::string fingerprint;
  ExperimentConfig config;
  ProgressCurve curve;
  /// Wall-clock per record; empty unless timing was requested.
  std::vector<double> timing_ms;
  /// Per-record model dumps when auditing.
  std::vector<json> audit;
  /// Per-record strategy notes: exploratory, fallback, modified.
  std::vector<std::vector<std::string>> flags;
  std::vector<std::string> warnings;
  RunStatus status = RunStatus::ok;
  std::string error;
};

/// Shared read-only caches for datasets, Gram matrices and neighbor tables,
/// keyed by their defining configuration. Safe to use from several workers.
class RunCache {
 public:
  explicit RunCache(std::filesystem::path base_dir = {}) : base_dir_(std::move(base_dir)) {}

  std::shared_ptr<const Dataset> dataset(const DatasetRef& ref);
  std::shared_ptr<const GramMatrix> gram(const DatasetRef& ref, const Dataset& d, double gamma);
  std::shared_ptr<const NeighborIndex> neighbors(const DatasetRef& ref, const Dataset& d, std::size_t k);

 private:
  std::filesystem::path base_dir_;
  std::mutex mu_;
  std::map<std::string, std::shared_ptr<const Dataset>> datasets_;
  std::map<std::string, std::shared_ptr<const GramMatrix>> grams_;
  std::map<std::string, std::shared_ptr<const NeighborIndex>> neighbors_;
};

/// Loads or generates the dataset a reference describes, then resamples it.
Dataset materialize(const DatasetRef& ref, const std::filesystem::path& base_dir = {});

/// The active-learning loop for one grid cell.
ResultRecord run_experiment(const ExperimentConfig& cfg, RunCache* cache = nullptr);

struct Exclusion {
  ExperimentConfig config;
  std::string reason;
};

struct GridExpansion {
  std::vector<ExperimentConfig> configs;
  std::vector<Exclusion> exclusions;
};

/// Cartesian product of the grid minus cells the feasibility gate or the
/// budget invariant rejects.
GridExpansion expand_grid(const GridSpec& spec, RunCache* cache = nullptr);

struct GridOutcome {
  std::size_t cells = 0;
  std::size_t failed = 0;
  std::size_t truncated = 0;
  std::vector<Exclusion> exclusions;
};

/// Worker count: OCAL_WORKERS when set, else `requested`, else hardware threads.
std::size_t resolve_workers(std::size_t requested);

/// Expands and runs a grid, writing one result file per cell and a manifest.
GridOutcome run_grid(const GridSpec& spec, const std::filesystem::path& out_dir, std::size_t workers = 0);

// ---------------------------------------------------------------------------
// Result store

/// One JSON object per record: t, queried_index, oracle_label, metrics,
/// timing_ms, flags (and model when audited).
std::string serialize_curve(const ResultRecord& r);
json record_meta(const ResultRecord& r);

void write_result(const std::filesystem::path& dir, const ResultRecord& r);
void write_manifest(const std::filesystem::path& dir, const GridSpec& spec, const std::vector<ResultRecord>& results,
                    const std::vector<Exclusion>& exclusions);
ResultRecord read_result(const std::filesystem::path& dir, const std::string& fingerprint);
/// Every cell listed in the manifest, plus excluded cells as infeasible records.
std::vector<ResultRecord> load_results(const std::filesystem::path& dir);

// ---------------------------------------------------------------------------
// Aggregation and plot data

enum class Statistic { median, mean };
Statistic parse_statistic(std::string_view s);

/// Group keys: dataset, dataset_seed, pool, split, learner, kappa, gamma,
/// strategy, seed.
std::string group_value(const ExperimentConfig& c, std::string_view key);

struct SummaryTable {
  std::vector<std::string> columns;
  std::vector<std::vector<std::string>> rows;

  std::string to_tsv() const;
};

/// One row per group, one column per summary. Groups without a successful,
/// computable value show "-".
SummaryTable aggregate(const std::vector<ResultRecord>& results, const std::vector<std::string>& group_by,
                       Statistic statistic, const std::vector<SummarySpec>& summaries, const std::string& metric);

double median(std::vector<double> v);
double mean(const std::vector<double>& v);

/// One CSV per (experiment, metric) plus summary.csv. Returns written paths.
std::vector<std::filesystem::path> emit_curves(const std::vector<ResultRecord>& results,
                                               const std::filesystem::path& out_dir,
                                               const std::vector<SummarySpec>& summaries = {});

/// Summaries stored with each result: sq, qr, roq and ru/aeq/ls at k = 5.
std::vector<SummarySpec> default_summaries();

}  // namespace ocal
