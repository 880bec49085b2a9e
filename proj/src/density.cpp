#include "ocal/density.hpp"

#include <cmath>
#include <numbers>

#include "ocal/error.hpp"

namespace ocal {

double gaussian_normalizer(double gamma, std::size_t dims) {
  return std::pow(gamma / std::numbers::pi, 0.5 * static_cast<double>(dims));
}

DensityModel kde_fit(const Matrix& X, const IndexSet& support, double gamma) {
  if (support.empty()) raise(ErrorCode::infeasible, "density estimate needs a nonempty support");
  if (!(gamma > 0.0) || !std::isfinite(gamma)) raise(ErrorCode::invalid_argument, "gamma must be positive");
  for (std::size_t i : support)
    if (i >= static_cast<std::size_t>(X.rows())) raise(ErrorCode::invalid_argument, "support index out of range");
  DensityModel m;
  m.support = support;
  m.gamma = gamma;
  m.dims = static_cast<std::size_t>(X.cols());
  m.normalizer = gaussian_normalizer(gamma, m.dims);
  return m;
}

double kde_eval(const DensityModel& m, const Matrix& X, std::span<const double> x) {
  if (x.size() != m.dims) raise(ErrorCode::invalid_argument, "dimension mismatch in kde_eval");
  double s = 0.0;
  for (std::size_t i : m.support) s += std::exp(-m.gamma * squared_distance(row(X, i), x));
  return m.normalizer * s / static_cast<double>(m.support.size());
}

double kde_loo_eval(const DensityModel& m, const Matrix& X, std::size_t pos) {
  if (m.support.size() < 2) raise(ErrorCode::invalid_argument, "leave-one-out needs at least two support points");
  if (pos >= m.support.size()) raise(ErrorCode::invalid_argument, "support position out of range");
  const auto xi = row(X, m.support[pos]);
  double s = 0.0;
  for (std::size_t k = 0; k < m.support.size(); ++k)
    if (k != pos) s += std::exp(-m.gamma * squared_distance(row(X, m.support[k]), xi));
  return m.normalizer * s / static_cast<double>(m.support.size() - 1);
}

std::vector<double> kde_eval_all(const DensityModel& m, const GramMatrix& gram) {
  if (gram.config().gamma != m.gamma) raise(ErrorCode::invalid_argument, "kernel cache gamma mismatch");
  const std::size_t n = gram.size();
  std::vector<double> out(n, 0.0);
  for (std::size_t s : m.support) {
    const double* k = gram.row_ptr(s);
    for (std::size_t j = 0; j < n; ++j) out[j] += k[j];
  }
  const double scale = m.normalizer / static_cast<double>(m.support.size());
  for (double& v : out) v *= scale;
  return out;
}

}  // namespace ocal
