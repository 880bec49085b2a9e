#pragma once

#include <cstddef>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "ocal/data.hpp"

namespace ocal {

/// Outlier is the positive class.
struct ConfusionMatrix {
  std::size_t tp = 0, fp = 0, tn = 0, fn = 0;

  std::size_t total() const { return tp + fp + tn + fn; }
};

ConfusionMatrix confusion(std::span<const Label> truth, std::span<const Label> predicted);

double mcc(const ConfusionMatrix& cm);
double kappa(const ConfusionMatrix& cm);

/// Probability that an outlier scores above an inlier, ties counted half.
/// Returns 0.5 when one class is absent.
double auc(std::span<const double> scores, std::span<const Label> truth);

/// ROC area over FPR in [0, fpr_max], divided by fpr_max, with linear
/// interpolation at the cutoff. Returns fpr_max / 2 when one class is absent.
double pauc(std::span<const double> scores, std::span<const Label> truth, double fpr_max = 0.1);

/// Registry entry: `mcc`, `kappa`, `auc`, `pauc:<fpr_max>` (plain `pauc` = 0.1).
struct MetricSpec {
  enum class Kind { mcc, kappa, auc, pauc };
  Kind kind = Kind::mcc;
  double fpr_max = 0.1;

  std::string name() const;
};

MetricSpec parse_metric(std::string_view text);

/// Evaluates a metric from decision values (f above kBoundaryTolerance predicts outlier).
double evaluate_metric(const MetricSpec& spec, std::span<const double> decision, std::span<const Label> truth);

// ---------------------------------------------------------------------------
// Progress curves

struct CurveRecord {
  std::size_t t = 0;
  std::optional<std::size_t> queried;
  std::optional<Label> label;
  /// One value per metric, in ProgressCurve::metrics order.
  std::vector<double> values;
};

struct ProgressCurve {
  std::vector<std::string> metrics;
  /// records[0] is t_init; each later record carries exactly one query.
  std::vector<CurveRecord> records;

  std::size_t queries() const { return records.empty() ? 0 : records.size() - 1; }
  std::vector<double> series(std::size_t metric) const;
  std::size_t metric_index(std::string_view name) const;
};

/// Registry entry for a curve summary: sq, qr, roq, ru:<k>, aeq:<k>, ls:<k>.
struct SummarySpec {
  enum class Kind { sq, ru, qr, aeq, ls, roq };
  Kind kind = Kind::sq;
  std::size_t k = 0;

  std::string name() const;
};

SummarySpec parse_summary(std::string_view text);
std::vector<SummarySpec> parse_summary_list(std::string_view csv);

double start_quality(std::span<const double> qm);
double ramp_up(std::span<const double> qm, std::size_t k);
/// QM(t_j) - QM(t_i), positions into the curve.
double quality_range(std::span<const double> qm, std::size_t i, std::size_t j);
double average_end_quality(std::span<const double> qm, std::size_t k);
/// `queries` is |L_end \ L_init|.
double learning_stability(std::span<const double> qm, std::size_t k, std::size_t queries);
double ratio_of_outlier_queries(const ProgressCurve& curve);

double summarize(const ProgressCurve& curve, std::size_t metric, const SummarySpec& spec);

}  // namespace ocal
