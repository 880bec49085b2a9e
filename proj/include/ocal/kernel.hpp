#pragma once

#include <cstddef>
#include <span>
#include <string>
#include <string_view>

#include "ocal/data.hpp"

namespace ocal {

/// RBF kernel k(x, x') = exp(-gamma * ||x - x'||^2).
struct KernelConfig {
  double gamma = 1.0;

  void validate() const;
};

/// Cost parameters for the SVDD family. `c` bounds SVDD duals, `c1` the
/// unlabeled (and, for SVDDneg, labeled-inlier) points, `c2` the labeled ones.
/// `kappa` weights the SSAD margin.
struct CostConfig {
  double c = 1.0;
  double c1 = 1.0;
  double c2 = 1.0;
  double kappa = 0.0;

  void validate() const;
};

double squared_distance(std::span<const double> a, std::span<const double> b);
double rbf(std::span<const double> x, std::span<const double> x2, const KernelConfig& cfg);

/// Dense N x N kernel matrix over the rows of X, computed once and shared
/// read-only between fits and strategies.
class GramMatrix {
 public:
  GramMatrix() = default;
  GramMatrix(const Matrix& X, const KernelConfig& cfg);

  std::size_t size() const { return static_cast<std::size_t>(K_.rows()); }
  double operator()(std::size_t i, std::size_t j) const {
    return K_(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j));
  }
  const double* row_ptr(std::size_t i) const { return K_.data() + i * size(); }
  const Matrix& values() const { return K_; }
  const KernelConfig& config() const { return cfg_; }

 private:
  KernelConfig cfg_;
  Matrix K_;
};

GramMatrix gram_matrix(const Matrix& X, const KernelConfig& cfg);

/// Scott's rule bandwidth h = N^(-1/(M+4)) * mean column standard deviation,
/// mapped to gamma = 1 / (2 h^2).
double gamma_scott(const Matrix& X);

/// Tax initialization C = 1 / (N * fraction), clamped to (0, 1]. C1 = C, C2 = C1.
CostConfig cost_tax(std::size_t n, double expected_outlier_fraction);

/// Registry entry for a gamma heuristic: `scott`, `wang` or `fixed:<value>`.
struct GammaHeuristic {
  enum class Kind { scott, wang, fixed };
  Kind kind = Kind::scott;
  double value = 0.0;

  std::string name() const;
};

GammaHeuristic parse_gamma_heuristic(std::string_view text);
double resolve_gamma(const GammaHeuristic& h, const Matrix& X);

}  // namespace ocal
