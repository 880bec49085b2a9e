#include "ocal/metrics.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <cstdint>
#include <numeric>
#include <sstream>

#include "ocal/error.hpp"

namespace ocal {

ConfusionMatrix confusion(std::span<const Label> truth, std::span<const Label> predicted) {
  if (truth.size() != predicted.size()) raise(ErrorCode::invalid_argument, "confusion: size mismatch");
  ConfusionMatrix cm;
  for (std::size_t i = 0; i < truth.size(); ++i) {
    const bool t = truth[i] == Label::outlier;
    const bool p = predicted[i] == Label::outlier;
    if (t && p) ++cm.tp;
    else if (!t && p) ++cm.fp;
    else if (!t && !p) ++cm.tn;
    else ++cm.fn;
  }
  return cm;
}

double mcc(const ConfusionMatrix& cm) {
  const double tp = static_cast<double>(cm.tp), fp = static_cast<double>(cm.fp);
  const double tn = static_cast<double>(cm.tn), fn = static_cast<double>(cm.fn);
  const double den = (tp + fp) * (tp + fn) * (tn + fp) * (tn + fn);
  if (den == 0.0) return 0.0;
  return (tp * tn - fp * fn) / std::sqrt(den);
}

double kappa(const ConfusionMatrix& cm) {
  const double n = static_cast<double>(cm.total());
  if (n == 0.0) return 0.0;
  const double po = static_cast<double>(cm.tp + cm.tn) / n;
  const double pe = (static_cast<double>(cm.tp + cm.fp) * static_cast<double>(cm.tp + cm.fn) +
                     static_cast<double>(cm.tn + cm.fn) * static_cast<double>(cm.tn + cm.fp)) /
                    (n * n);
  if (pe >= 1.0) return 0.0;
  return (po - pe) / (1.0 - pe);
}

namespace {

struct RocPoint {
  double fpr, tpr;
};

// ROC vertices from the highest threshold down; tied scores form one step.
std::vector<RocPoint> roc(std::span<const double> scores, std::span<const Label> truth, std::size_t& pos,
                          std::size_t& neg) {
  if (scores.size() != truth.size()) raise(ErrorCode::invalid_argument, "roc: size mismatch");
  std::vector<std::size_t> order(scores.size());
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) { return scores[a] > scores[b]; });
  pos = static_cast<std::size_t>(std::count(truth.begin(), truth.end(), Label::outlier));
  neg = truth.size() - pos;
  std::vector<RocPoint> pts{{0.0, 0.0}};
  if (pos == 0 || neg == 0) return pts;
  std::size_t tp = 0, fp = 0;
  for (std::size_t r = 0; r < order.size();) {
    const double s = scores[order[r]];
    while (r < order.size() && scores[order[r]] == s) {
      (truth[order[r]] == Label::outlier ? tp : fp) += 1;
      ++r;
    }
    pts.push_back({static_cast<double>(fp) / static_cast<double>(neg), static_cast<double>(tp) / static_cast<double>(pos)});
  }
  return pts;
}

double area_until(const std::vector<RocPoint>& pts, double cutoff) {
  double area = 0.0;
  for (std::size_t i = 1; i < pts.size(); ++i) {
    const RocPoint a = pts[i - 1], b = pts[i];
    if (a.fpr >= cutoff) break;
    if (b.fpr <= cutoff) {
      area += (b.fpr - a.fpr) * (a.tpr + b.tpr) * 0.5;
    } else {
      const double t = (cutoff - a.fpr) / (b.fpr - a.fpr);
      const double tpr_cut = a.tpr + t * (b.tpr - a.tpr);
      area += (cutoff - a.fpr) * (a.tpr + tpr_cut) * 0.5;
      break;
    }
  }
  return area;
}

}  // namespace

double auc(std::span<const double> scores, std::span<const Label> truth) {
  std::size_t pos = 0, neg = 0;
  const auto pts = roc(scores, truth, pos, neg);
  if (pos == 0 || neg == 0) return 0.5;
  // Integer count of half-credit pairs keeps the result exact.
  std::uint64_t twice = 0, tp_before = 0;
  for (std::size_t i = 1; i < pts.size(); ++i) {
    const auto tp = static_cast<std::uint64_t>(std::llround(pts[i].tpr * static_cast<double>(pos)));
    const auto dfp = static_cast<std::uint64_t>(std::llround((pts[i].fpr - pts[i - 1].fpr) * static_cast<double>(neg)));
    twice += dfp * (tp_before + tp);
    tp_before = tp;
  }
  return static_cast<double>(twice) / (2.0 * static_cast<double>(pos) * static_cast<double>(neg));
}

double pauc(std::span<const double> scores, std::span<const Label> truth, double fpr_max) {
  if (!(fpr_max > 0.0 && fpr_max <= 1.0)) raise(ErrorCode::invalid_argument, "pauc: fpr_max must lie in (0,1]");
  std::size_t pos = 0, neg = 0;
  const auto pts = roc(scores, truth, pos, neg);
  if (pos == 0 || neg == 0) return 0.5 * fpr_max;
  return area_until(pts, fpr_max) / fpr_max;
}

std::string MetricSpec::name() const {
  switch (kind) {
    case Kind::mcc: return "mcc";
    case Kind::kappa: return "kappa";
    case Kind::auc: return "auc";
    case Kind::pauc: {
      std::ostringstream os;
      os << "pauc:" << fpr_max;
      return os.str();
    }
  }
  return "?";
}

namespace {
double parse_real(std::string_view s, const char* what) {
  const std::string v(s);
  std::size_t used = 0;
  double x = 0.0;
  try {
    x = std::stod(v, &used);
  } catch (const std::exception&) {
    used = 0;
  }
  if (used != v.size() || !std::isfinite(x)) raise(ErrorCode::invalid_argument, std::string("bad ") + what + " '" + v + "'");
  return x;
}

std::size_t parse_count(std::string_view s, const char* what) {
  std::size_t k = 0;
  auto [p, ec] = std::from_chars(s.data(), s.data() + s.size(), k);
  if (ec != std::errc{} || p != s.data() + s.size() || k == 0)
    raise(ErrorCode::invalid_argument, std::string("bad ") + what + " '" + std::string(s) + "'");
  return k;
}
}  // namespace

MetricSpec parse_metric(std::string_view text) {
  MetricSpec m;
  if (text == "mcc") return m;
  if (text == "kappa") {
    m.kind = MetricSpec::Kind::kappa;
    return m;
  }
  if (text == "auc") {
    m.kind = MetricSpec::Kind::auc;
    return m;
  }
  if (text == "pauc" || text.starts_with("pauc:")) {
    m.kind = MetricSpec::Kind::pauc;
    if (text.size() > 4) m.fpr_max = parse_real(text.substr(5), "pauc cutoff");
    if (!(m.fpr_max > 0.0 && m.fpr_max <= 1.0)) raise(ErrorCode::invalid_argument, "pauc cutoff must lie in (0,1]");
    return m;
  }
  raise(ErrorCode::invalid_argument, "unknown metric '" + std::string(text) + "'");
}

double evaluate_metric(const MetricSpec& spec, std::span<const double> decision, std::span<const Label> truth) {
  if (decision.size() != truth.size()) raise(ErrorCode::invalid_argument, "metric: size mismatch");
  switch (spec.kind) {
    case MetricSpec::Kind::mcc:
    case MetricSpec::Kind::kappa: {
      std::vector<Label> pred(decision.size());
      for (std::size_t i = 0; i < decision.size(); ++i) pred[i] = decision[i] > kBoundaryTolerance ? Label::outlier : Label::inlier;
      const auto cm = confusion(truth, pred);
      return spec.kind == MetricSpec::Kind::mcc ? mcc(cm) : kappa(cm);
    }
    case MetricSpec::Kind::auc: return auc(decision, truth);
    case MetricSpec::Kind::pauc: return pauc(decision, truth, spec.fpr_max);
  }
  raise(ErrorCode::internal, "unhandled metric");
}

// ---------------------------------------------------------------------------
// Curves and summaries

std::vector<double> ProgressCurve::series(std::size_t metric) const {
  std::vector<double> out;
  out.reserve(records.size());
  for (const auto& r : records) out.push_back(r.values.at(metric));
  return out;
}

std::size_t ProgressCurve::metric_index(std::string_view name) const {
  for (std::size_t i = 0; i < metrics.size(); ++i)
    if (metrics[i] == name) return i;
  raise(ErrorCode::invalid_argument, "curve has no metric '" + std::string(name) + "'");
}

std::string SummarySpec::name() const {
  switch (kind) {
    case Kind::sq: return "sq";
    case Kind::qr: return "qr";
    case Kind::roq: return "roq";
    case Kind::ru: return "ru:" + std::to_string(k);
    case Kind::aeq: return "aeq:" + std::to_string(k);
    case Kind::ls: return "ls:" + std::to_string(k);
  }
  return "?";
}

SummarySpec parse_summary(std::string_view text) {
  SummarySpec s;
  if (text == "sq") return s;
  if (text == "qr") {
    s.kind = SummarySpec::Kind::qr;
    return s;
  }
  if (text == "roq") {
    s.kind = SummarySpec::Kind::roq;
    return s;
  }
  const auto colon = text.find(':');
  if (colon != std::string_view::npos) {
    const auto head = text.substr(0, colon);
    s.k = parse_count(text.substr(colon + 1), "summary window");
    if (head == "ru") s.kind = SummarySpec::Kind::ru;
    else if (head == "aeq") s.kind = SummarySpec::Kind::aeq;
    else if (head == "ls") s.kind = SummarySpec::Kind::ls;
    else raise(ErrorCode::invalid_argument, "unknown summary '" + std::string(text) + "'");
    return s;
  }
  raise(ErrorCode::invalid_argument, "unknown summary '" + std::string(text) + "'");
}

std::vector<SummarySpec> parse_summary_list(std::string_view csv) {
  std::vector<SummarySpec> out;
  std::size_t start = 0;
  while (start <= csv.size()) {
    const auto end = std::min(csv.find(',', start), csv.size());
    if (end > start) out.push_back(parse_summary(csv.substr(start, end - start)));
    start = end + 1;
  }
  return out;
}

namespace {
void require_nonempty(std::span<const double> qm) {
  if (qm.empty()) raise(ErrorCode::invalid_argument, "empty progress curve");
}
void require_window(std::span<const double> qm, std::size_t k) {
  require_nonempty(qm);
  if (k == 0 || k > qm.size() - 1)
    raise(ErrorCode::invalid_argument, "summary window " + std::to_string(k) + " exceeds " +
                                           std::to_string(qm.size() - 1) + " progress steps");
}
}  // namespace

double start_quality(std::span<const double> qm) {
  require_nonempty(qm);
  return qm.front();
}

double ramp_up(std::span<const double> qm, std::size_t k) {
  require_window(qm, k);
  return qm[k] - qm[0];
}

double quality_range(std::span<const double> qm, std::size_t i, std::size_t j) {
  require_nonempty(qm);
  if (i >= qm.size() || j >= qm.size()) raise(ErrorCode::invalid_argument, "quality range index out of range");
  return qm[j] - qm[i];
}

double average_end_quality(std::span<const double> qm, std::size_t k) {
  require_window(qm, k);
  double s = 0.0;
  for (std::size_t i = 0; i < k; ++i) s += qm[qm.size() - 1 - i];
  return s / static_cast<double>(k);
}

double learning_stability(std::span<const double> qm, std::size_t k, std::size_t queries) {
  require_window(qm, k);
  const std::size_t end = qm.size() - 1;
  const double overall = quality_range(qm, 0, end);
  if (!(overall > 0.0) || queries == 0) return 0.0;
  const double recent = quality_range(qm, end - k, end);
  return (recent / static_cast<double>(k)) / (overall / static_cast<double>(queries));
}

double ratio_of_outlier_queries(const ProgressCurve& curve) {
  if (curve.records.empty()) raise(ErrorCode::invalid_argument, "empty progress curve");
  std::size_t queries = 0, outliers = 0;
  for (std::size_t r = 1; r < curve.records.size(); ++r) {
    if (!curve.records[r].label) continue;
    ++queries;
    if (*curve.records[r].label == Label::outlier) ++outliers;
  }
  return queries == 0 ? 0.0 : static_cast<double>(outliers) / static_cast<double>(queries);
}

double summarize(const ProgressCurve& curve, std::size_t metric, const SummarySpec& spec) {
  if (curve.records.empty()) raise(ErrorCode::invalid_argument, "empty progress curve");
  const auto qm = curve.series(metric);
  switch (spec.kind) {
    case SummarySpec::Kind::sq: return start_quality(qm);
    case SummarySpec::Kind::ru: return ramp_up(qm, spec.k);
    case SummarySpec::Kind::qr: return quality_range(qm, 0, qm.size() - 1);
    case SummarySpec::Kind::aeq: return average_end_quality(qm, spec.k);
    case SummarySpec::Kind::ls: return learning_stability(qm, spec.k, curve.queries());
    case SummarySpec::Kind::roq: return ratio_of_outlier_queries(curve);
  }
  raise(ErrorCode::internal, "unhandled summary");
}

}  // namespace ocal
