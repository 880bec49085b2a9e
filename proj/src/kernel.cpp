#include "ocal/kernel.hpp"

#include <charconv>
#include <cmath>
#include <sstream>

#include "ocal/error.hpp"

namespace ocal {

void KernelConfig::validate() const {
  if (!(gamma > 0.0) || !std::isfinite(gamma))
    raise(ErrorCode::invalid_argument, "gamma must be positive and finite");
}

void CostConfig::validate() const {
  if (!(c > 0.0 && c <= 1.0)) raise(ErrorCode::invalid_argument, "C must lie in (0,1]");
  if (!(c1 > 0.0) || !(c2 > 0.0)) raise(ErrorCode::invalid_argument, "C1 and C2 must be positive");
  if (!(kappa >= 0.0) || !std::isfinite(kappa)) raise(ErrorCode::invalid_argument, "kappa must be >= 0");
}

double squared_distance(std::span<const double> a, std::span<const double> b) {
  if (a.size() != b.size())
    raise(ErrorCode::invalid_argument, "dimension mismatch: " + std::to_string(a.size()) + " vs " +
                                           std::to_string(b.size()));
  double s = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    const double d = a[i] - b[i];
    s += d * d;
  }
  return s;
}

double rbf(std::span<const double> x, std::span<const double> x2, const KernelConfig& cfg) {
  return std::exp(-cfg.gamma * squared_distance(x, x2));
}

GramMatrix::GramMatrix(const Matrix& X, const KernelConfig& cfg) : cfg_(cfg) {
  cfg.validate();
  const std::size_t n = static_cast<std::size_t>(X.rows());
  K_.resize(X.rows(), X.rows());
  for (std::size_t i = 0; i < n; ++i) {
    K_(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(i)) = 1.0;
    const auto xi = row(X, i);
    for (std::size_t j = i + 1; j < n; ++j) {
      const double v = std::exp(-cfg.gamma * squared_distance(xi, row(X, j)));
      K_(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)) = v;
      K_(static_cast<Eigen::Index>(j), static_cast<Eigen::Index>(i)) = v;
    }
  }
}

GramMatrix gram_matrix(const Matrix& X, const KernelConfig& cfg) { return GramMatrix(X, cfg); }

double gamma_scott(const Matrix& X) {
  const auto n = X.rows();
  const auto m = X.cols();
  if (n < 2 || m < 1) raise(ErrorCode::invalid_argument, "Scott's rule needs at least two observations");
  double sigma_sum = 0.0;
  for (Eigen::Index j = 0; j < m; ++j) {
    const double mean = X.col(j).mean();
    const double ss = (X.col(j).array() - mean).square().sum();
    sigma_sum += std::sqrt(ss / static_cast<double>(n - 1));
  }
  const double sigma = sigma_sum / static_cast<double>(m);
  if (!(sigma > 0.0)) raise(ErrorCode::invalid_argument, "all columns are constant: zero bandwidth");
  const double h = std::pow(static_cast<double>(n), -1.0 / (static_cast<double>(m) + 4.0)) * sigma;
  return 1.0 / (2.0 * h * h);
}

CostConfig cost_tax(std::size_t n, double expected_outlier_fraction) {
  if (n == 0) raise(ErrorCode::invalid_argument, "cost_tax needs N >= 1");
  if (!(expected_outlier_fraction > 0.0 && expected_outlier_fraction < 1.0))
    raise(ErrorCode::invalid_argument, "expected outlier fraction must lie in (0,1)");
  const double raw = 1.0 / (static_cast<double>(n) * expected_outlier_fraction);
  CostConfig c;
  c.c = std::min(1.0, raw);
  c.c1 = c.c;
  c.c2 = c.c1;
  return c;
}

std::string GammaHeuristic::name() const {
  switch (kind) {
    case Kind::scott: return "scott";
    case Kind::wang: return "wang";
    case Kind::fixed: {
      std::ostringstream os;
      os.precision(17);
      os << "fixed:" << value;
      return os.str();
    }
  }
  return "?";
}

GammaHeuristic parse_gamma_heuristic(std::string_view text) {
  GammaHeuristic h;
  if (text == "scott") return h;
  if (text == "wang") {
    h.kind = GammaHeuristic::Kind::wang;
    return h;
  }
  constexpr std::string_view prefix = "fixed:";
  if (text.starts_with(prefix)) {
    const std::string v(text.substr(prefix.size()));
    std::size_t used = 0;
    double g = 0.0;
    try {
      g = std::stod(v, &used);
    } catch (const std::exception&) {
      used = 0;
    }
    if (used != v.size() || !(g > 0.0) || !std::isfinite(g))
      raise(ErrorCode::invalid_argument, "bad fixed gamma '" + v + "'");
    h.kind = GammaHeuristic::Kind::fixed;
    h.value = g;
    return h;
  }
  raise(ErrorCode::invalid_argument, "unknown gamma heuristic '" + std::string(text) + "'");
}

double resolve_gamma(const GammaHeuristic& h, const Matrix& X) {
  switch (h.kind) {
    case GammaHeuristic::Kind::scott: return gamma_scott(X);
    case GammaHeuristic::Kind::fixed: return h.value;
    case GammaHeuristic::Kind::wang:
      raise(ErrorCode::unsupported, "gamma heuristic 'wang' (self-adaptive data shifting) is not implemented");
  }
  raise(ErrorCode::internal, "unhandled gamma heuristic");
}

}  // namespace ocal
