#pragma once

#include <cmath>
#include <vector>

#include "ocal/density.hpp"
#include "ocal/kernel.hpp"
#include "ocal/strategies.hpp"

namespace scenario {

/// Standard normal quantile by bisection on erfc.
inline double normal_quantile(double p) {
  double lo = -12.0, hi = 12.0;
  for (int i = 0; i < 200; ++i) {
    const double m = 0.5 * (lo + hi);
    (0.5 * std::erfc(-m / std::sqrt(2.0)) < p ? lo : hi) = m;
  }
  return 0.5 * (lo + hi);
}

/// 1-D two-Gaussian landscape: inliers N(0,1) at weight 0.9, outliers N(3,1)
/// at 0.1, represented by evenly spaced quantiles so there is no sampling noise.
struct TwoGaussians {
  static constexpr std::size_t n_in = 90, n_out = 10;
  static constexpr double prior_inlier = 0.9;
  ocal::Matrix X;
  ocal::IndexSet inliers, outliers, all;
  double gamma = 0.0;

  TwoGaussians() : X(n_in + n_out, 1) {
    for (std::size_t i = 0; i < n_in; ++i) {
      X(static_cast<Eigen::Index>(i), 0) = normal_quantile((static_cast<double>(i) + 0.5) / n_in);
      inliers.push_back(i);
    }
    for (std::size_t i = 0; i < n_out; ++i) {
      X(static_cast<Eigen::Index>(n_in + i), 0) = 3.0 + normal_quantile((static_cast<double>(i) + 0.5) / n_out);
      outliers.push_back(n_in + i);
    }
    for (std::size_t i = 0; i < n_in + n_out; ++i) all.push_back(i);
    gamma = ocal::gamma_scott(X);
  }

  struct Argmax {
    double mm, emm, eme, ml;
  };

  /// Grid argmax of each data-based score over 2001 points on [-5, 8].
  Argmax argmax() const {
    using namespace ocal;
    const auto in = kde_fit(X, inliers, gamma), px = kde_fit(X, all, gamma);
    MinimumLoss ml(X, inliers, outliers, gamma, prior_inlier, false);
    double best[4] = {-1e300, -1e300, -1e300, -1e300};
    double at[4] = {0, 0, 0, 0};
    for (int k = 0; k <= 2000; ++k) {
      std::vector<double> x{-5.0 + 13.0 * k / 2000.0};
      const double pi = kde_eval(in, X, x), p = kde_eval(px, X, x);
      const double s[4] = {tau_mm(pi, p, prior_inlier), tau_emm(pi, p), tau_eme(pi, p), ml.score(x).total};
      for (int j = 0; j < 4; ++j)
        if (s[j] > best[j]) {
          best[j] = s[j];
          at[j] = x[0];
        }
    }
    return {at[0], at[1], at[2], at[3]};
  }
};

}  // namespace scenario
