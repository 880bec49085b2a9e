#pragma once

#include <cstddef>
#include <span>

#include "ocal/data.hpp"
#include "ocal/kernel.hpp"

namespace ocal {

/// Gaussian kernel density estimate over a subset of rows, with the
/// bandwidth tied to the RBF gamma:
///   g(x) = 1/|S| * sum_{s in S} (gamma/pi)^(M/2) * exp(-gamma ||x - x_s||^2)
struct DensityModel {
  IndexSet support;
  double gamma = 1.0;
  double normalizer = 1.0;
  std::size_t dims = 0;
};

/// Which rows estimate the marginal p(x).
enum class PxSupport { all, unlabeled };

double gaussian_normalizer(double gamma, std::size_t dims);

DensityModel kde_fit(const Matrix& X, const IndexSet& support, double gamma);
double kde_eval(const DensityModel& m, const Matrix& X, std::span<const double> x);
/// Density at the support point support[pos] from the remaining support.
double kde_loo_eval(const DensityModel& m, const Matrix& X, std::size_t pos);

/// Density at every row of the Gram cache's matrix. Uses K directly, so the
/// cache gamma must equal the model gamma.
std::vector<double> kde_eval_all(const DensityModel& m, const GramMatrix& gram);

}  // namespace ocal
