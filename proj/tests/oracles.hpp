#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <vector>

#include "ocal/data.hpp"
#include "ocal/kernel.hpp"
#include "ocal/metrics.hpp"
#include "ocal/rng.hpp"

namespace oracle {

/// Best SVDD dual value 1 - a'Ka over the grid {a : a_i in step*Z, 0 <= a_i <= C,
/// sum a = 1}. Enumerates the first N-1 coordinates; the quadratic form is
/// accumulated incrementally so each leaf costs O(1).
inline double svdd_grid_dual(const ocal::Matrix& K, double C, double step = 0.01) {
  const int n = static_cast<int>(K.rows());
  const int units = static_cast<int>(std::lround(1.0 / step));
  const int cap = static_cast<int>(std::floor(C / step + 1e-9));
  double best = -1e300;
  std::vector<int> a(static_cast<std::size_t>(n), 0);
  // q: partial a'Ka over fixed coordinates; p[j]: sum_i<d a_i K_ij.
  std::vector<std::vector<double>> p(static_cast<std::size_t>(n), std::vector<double>(static_cast<std::size_t>(n), 0.0));
  auto rec = [&](auto&& self, int d, int remaining, double q) -> void {
    const auto& pd = p[static_cast<std::size_t>(d)];
    if (d == n - 1) {
      if (remaining > cap) return;
      const double r = remaining * step;
      const double total = q + r * r * K(d, d) + 2.0 * r * pd[static_cast<std::size_t>(d)];
      best = std::max(best, 1.0 - total);
      return;
    }
    // The remaining coordinates must be able to absorb what is left.
    const int rest_cap = cap * (n - 1 - d);
    const int lo = std::max(0, remaining - rest_cap);
    const int hi = std::min(cap, remaining);
    for (int v = lo; v <= hi; ++v) {
      const double x = v * step;
      const double nq = q + x * x * K(d, d) + 2.0 * x * pd[static_cast<std::size_t>(d)];
      auto& next = p[static_cast<std::size_t>(d + 1)];
      for (int j = d + 1; j < n; ++j) next[static_cast<std::size_t>(j)] = pd[static_cast<std::size_t>(j)] + x * K(d, j);
      self(self, d + 1, remaining - v, nq);
    }
  };
  rec(rec, 0, units, 0.0);
  return best;
}

inline ocal::Matrix random_points(std::size_t n, std::size_t m, ocal::Rng& rng) {
  ocal::Matrix X(static_cast<Eigen::Index>(n), static_cast<Eigen::Index>(m));
  for (Eigen::Index i = 0; i < X.rows(); ++i)
    for (Eigen::Index j = 0; j < X.cols(); ++j) X(i, j) = rng.uniform();
  return X;
}

inline double mcc_direct(const ocal::ConfusionMatrix& c) {
  const double tp = static_cast<double>(c.tp), fp = static_cast<double>(c.fp), tn = static_cast<double>(c.tn),
               fn = static_cast<double>(c.fn);
  const double den = std::sqrt((tp + fp) * (tp + fn) * (tn + fp) * (tn + fn));
  return den == 0.0 ? 0.0 : (tp * tn - fp * fn) / den;
}

inline double kappa_direct(const ocal::ConfusionMatrix& c) {
  const double n = static_cast<double>(c.total());
  const double po = static_cast<double>(c.tp + c.tn) / n;
  const double pe = (static_cast<double>(c.tp + c.fp) * static_cast<double>(c.tp + c.fn) +
                     static_cast<double>(c.tn + c.fn) * static_cast<double>(c.tn + c.fp)) /
                    (n * n);
  return pe == 1.0 ? 0.0 : (po - pe) / (1.0 - pe);
}

/// Pair counting: P(outlier scores above inlier), ties half.
inline double auc_pairs(const std::vector<double>& s, const std::vector<ocal::Label>& y) {
  double num = 0.0, den = 0.0;
  for (std::size_t i = 0; i < s.size(); ++i) {
    if (y[i] != ocal::Label::outlier) continue;
    for (std::size_t j = 0; j < s.size(); ++j) {
      if (y[j] != ocal::Label::inlier) continue;
      den += 1.0;
      num += s[i] > s[j] ? 1.0 : (s[i] == s[j] ? 0.5 : 0.0);
    }
  }
  return den == 0.0 ? 0.5 : num / den;
}

/// ROC by sweeping every threshold, trapezoids truncated at fpr_max.
inline double pauc_sweep(const std::vector<double>& s, const std::vector<ocal::Label>& y, double fpr_max) {
  std::vector<double> th(s);
  std::sort(th.begin(), th.end(), std::greater<>());
  th.erase(std::unique(th.begin(), th.end()), th.end());
  double P = 0, N = 0;
  for (auto l : y) (l == ocal::Label::outlier ? P : N) += 1;
  std::vector<std::pair<double, double>> pts{{0.0, 0.0}};
  for (double t : th) {
    double tp = 0, fp = 0;
    for (std::size_t i = 0; i < s.size(); ++i)
      if (s[i] >= t) (y[i] == ocal::Label::outlier ? tp : fp) += 1;
    pts.emplace_back(fp / N, tp / P);
  }
  double area = 0.0;
  for (std::size_t k = 1; k < pts.size(); ++k) {
    auto [x0, y0] = pts[k - 1];
    auto [x1, y1] = pts[k];
    if (x0 >= fpr_max) break;
    if (x1 > fpr_max) {
      const double yc = y0 + (y1 - y0) * (fpr_max - x0) / (x1 - x0);
      area += (fpr_max - x0) * (y0 + yc) / 2.0;
      break;
    }
    area += (x1 - x0) * (y0 + y1) / 2.0;
  }
  return area / fpr_max;
}

}  // namespace oracle
