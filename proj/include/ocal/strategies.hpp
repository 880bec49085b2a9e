#pragma once

#include <cstddef>
#include <cstdint>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "ocal/data.hpp"
#include "ocal/density.hpp"
#include "ocal/kernel.hpp"
#include "ocal/learners.hpp"

namespace ocal {

enum class StrategyKind { mm, emm, eme, ml, hc, db, nb, bnc, rand, rand_out };

const char* to_string(StrategyKind k) noexcept;
StrategyKind parse_strategy(std::string_view name);
const std::vector<StrategyKind>& all_strategies();
/// Strategies that score with density estimates of labeled inliers.
bool is_data_based(StrategyKind k) noexcept;

struct StrategyConfig {
  StrategyKind kind = StrategyKind::db;
  /// p(in) for MM and ML; the harness sets it to the true inlier share.
  double prior_inlier = 0.95;
  double eta_nb = 0.5;
  std::size_t k_nn = 10;
  double eta_bnc = 0.7;
  double p_bnc = 0.15;
  std::uint64_t rng_seed = 0;
  PxSupport px_support = PxSupport::all;

  void validate() const;
};

// ---------------------------------------------------------------------------
// Pointwise informativeness

/// Density ratios are clamped to this before use.
inline constexpr double kMaxDensityRatio = 1e3;
/// Below this marginal density a point scores 0.
inline constexpr double kMinDensity = 1e-300;

double density_ratio(double p_x_in, double p_x);

double tau_mm(double p_x_in, double p_x, double prior_inlier);
double tau_emm(double p_x_in, double p_x);
double tau_eme(double p_x_in, double p_x);
/// Closed forms on the clamped ratio r = p(x|in)/p(x).
double tau_emm_ratio(double r);
double tau_eme_ratio(double r);

double tau_hc(double f);
double tau_db(double f);
/// eta * tau_db + (1 - eta) * -(0.5 + inlier_neighbors / (2k)).
double tau_nb(double f, std::size_t inlier_neighbors, std::size_t k, double eta);

/// Minimum-loss scoring. Densities are leave-one-out Gaussian KDEs over the
/// labeled inliers; subtrahends over labeled outliers are dropped in
/// modified mode.
class MinimumLoss {
 public:
  struct Parts {
    double in = 0.0;
    double out = 0.0;
    double total = 0.0;
  };

  MinimumLoss(const Matrix& X, IndexSet inliers, IndexSet outliers, double gamma, double prior_inlier,
              bool modified, const GramMatrix* gram = nullptr);

  Parts score(std::span<const double> x) const;
  /// Score for row j of X using the Gram cache.
  Parts score_row(std::size_t j) const;
  bool modified() const { return modified_; }

 private:
  Parts combine(double k_in, double k_out) const;

  const Matrix& X_;
  IndexSet in_, out_;
  double gamma_, prior_, normalizer_;
  bool modified_;
  const GramMatrix* gram_;
  double in_pair_sum_ = 0.0;   // sum over i != s in L_in of k(x_i, x_s)
  double cross_sum_ = 0.0;     // sum over o in L_out, s in L_in of k(x_o, x_s)
};

// ---------------------------------------------------------------------------
// Neighborhoods

/// k nearest neighbors of every row (Euclidean, self excluded, ties by index).
class NeighborIndex {
 public:
  NeighborIndex() = default;
  NeighborIndex(const Matrix& X, std::size_t k);

  std::size_t k() const { return k_; }
  std::span<const std::size_t> neighbors(std::size_t i) const { return {nn_.data() + i * k_, k_}; }
  double nearest_distance(std::size_t i) const { return nn1_.at(i); }

 private:
  std::size_t k_ = 0;
  std::vector<std::size_t> nn_;
  std::vector<double> nn1_;
};

/// Eq.-13 style boundary/neighbor combination over a candidate set, given |f|
/// and nearest-neighbor distances in candidate order. Zero denominators give a
/// zero term.
std::vector<double> bnc_scores(std::span<const double> abs_f, std::span<const double> nn_distance, double eta);

// ---------------------------------------------------------------------------
// Scoring and selection

struct InformativenessVector {
  IndexSet eligible;
  std::vector<double> scores;
  /// BNC took the random branch this iteration.
  bool exploratory = false;
  /// rand_out had no predicted outliers and fell back to rand.
  bool fallback = false;
  /// ML ran without the labeled-outlier subtrahends.
  bool modified = false;
};

struct StrategyContext {
  const Matrix& X;
  const GramMatrix& gram;
  const PoolState& pool;
  /// U intersected with the query domain.
  const IndexSet& eligible;
  /// Rows the marginal density may use (the query domain).
  const IndexSet& domain;
  /// Decision values f for every row.
  std::span<const double> decision;
  const NeighborIndex* neighbors = nullptr;
  /// Per-iteration stream seed for the random strategies.
  std::uint64_t iteration_seed = 0;
};

InformativenessVector score(const StrategyConfig& cfg, const StrategyContext& ctx);

InformativenessVector tau_rand(const IndexSet& eligible, std::uint64_t seed);
InformativenessVector tau_rand_out(const IndexSet& eligible, std::span<const double> decision, std::uint64_t seed);

/// Argmax with ties broken by the lowest observation index.
std::size_t select_query(const InformativenessVector& v);

// ---------------------------------------------------------------------------
// Feasibility

struct Feasibility {
  bool ok = true;
  /// Feasible only with the ML subtrahends omitted.
  bool modified = false;
  std::string reason;
};

Feasibility feasibility_gate(StrategyKind strategy, std::size_t labeled_inliers, std::size_t labeled_outliers,
                             std::size_t dims, PoolStrategy pool, SplitStrategy split, LearnerKind learner);

}  // namespace ocal
