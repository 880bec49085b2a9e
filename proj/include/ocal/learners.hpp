#pragma once

#include <cmath>
#include <cstddef>
#include <cstdint>
#include <span>
#include <string_view>
#include <vector>

#include "ocal/data.hpp"
#include "ocal/kernel.hpp"

namespace ocal {

enum class LearnerKind { svdd, svddneg, ssad };

const char* to_string(LearnerKind k) noexcept;
LearnerKind parse_learner(std::string_view name);

struct SolverOptions {
  /// Stopping tolerance on the maximal KKT violation of the dual.
  double tolerance = 1e-6;
  std::size_t max_steps = 100000;
};

/// Training input. `train_idx` selects rows of the data matrix handed to fit();
/// `labels` holds one status per training row (same order).
struct FitRequest {
  IndexSet train_idx;
  std::vector<LabelStatus> labels;
  LearnerKind learner = LearnerKind::svdd;
  KernelConfig kernel;
  CostConfig costs;
  SolverOptions solver;
};

/// A fitted SVDD-family model. The center is the kernel expansion
/// a = sum_i alpha_i * signs_i * phi(x_i) over the training rows.
struct TrainedModel {
  LearnerKind learner = LearnerKind::svdd;
  std::vector<double> alpha;
  std::vector<int> signs;
  double radius_sq = 0.0;
  /// SSAD margin tau; zero for the other learners.
  double margin = 0.0;
  KernelConfig kernel;
  CostConfig costs;
  IndexSet train_idx;
  /// Label status of each training row at fit time.
  std::vector<LabelStatus> labels;

  /// ||a||^2, cached for decision values.
  double center_norm_sq = 0.0;
  /// Final maximal KKT violation reported by the solver.
  double kkt_residual = 0.0;
  std::size_t solver_steps = 0;
  /// SSAD only: kappa exceeded the largest attainable labeled dual mass and
  /// was lowered to it.
  bool kappa_clamped = false;
  double effective_kappa = 0.0;

  /// Compact copy of the rows with nonzero coefficient, for evaluation
  /// without the training matrix.
  Matrix support;
  std::vector<double> support_coef;
  IndexSet support_rows;

  double radius() const { return std::sqrt(radius_sq); }
};

/// Fits the requested program. `gram`, when given, must be the kernel matrix of
/// X under req.kernel and is used instead of recomputing entries.
TrainedModel fit(const Matrix& X, const FitRequest& req, const GramMatrix* gram = nullptr);

/// f(x) = ||phi(x) - a|| - R.
double decision_value(const TrainedModel& m, std::span<const double> x);
double decision_value(const TrainedModel& m, const Matrix& X_train, std::span<const double> x);

/// f for every row of the matrix the Gram cache was built on.
std::vector<double> decision_values(const TrainedModel& m, const GramMatrix& gram);

/// Outlier iff f(x) exceeds kBoundaryTolerance.
Label predict(const TrainedModel& m, std::span<const double> x);
Label classify(double decision) noexcept;

/// Largest violation of the primal optimality conditions (primal constraints
/// with slacks recomputed from f, complementary slackness, dual box and the
/// equality constraint), measured in squared feature-space distance.
double kkt_certificate(const TrainedModel& m, const Matrix& X);

/// Dual objective sum_i s_i a_i K_ii - sum_ij s_i a_i s_j a_j K_ij (+ SSAD margin
/// term), the quantity the solver maximizes.
double dual_objective(const TrainedModel& m, const Matrix& X);

}  // namespace ocal
