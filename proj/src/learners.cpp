#include "ocal/learners.hpp"

#include <algorithm>
#include <limits>
#include <string>

#include "ocal/error.hpp"

// Dual of the SVDD family.
//
// All three programs share one signed dual. With s_i = -1 for labeled
// outliers (SVDDneg, SSAD) and +1 otherwise, and c_i = s_i * alpha_i:
//
//   max  sum_i c_i K_ii - sum_ij c_i c_j K_ij + tau * sum_{i in L} alpha_i
//   s.t. sum_i s_i alpha_i = 1,   0 <= alpha_i <= u_i
//
// The center is a = sum_i c_i phi(x_i). The tau term only exists for SSAD,
// where L is the labeled set and tau the margin. For fixed tau the problem is
// solved with a two-variable working set (libsvm-style, second-order choice of
// the partner). SSAD's margin constraint sum_{i in L} alpha_i >= kappa (dual of
// the -kappa*tau objective term with tau >= 0) is handled by Lagrangian
// relaxation: the labeled dual mass h(tau) = sum_{L} alpha*(tau) is
// nondecreasing in tau, and the optimal tau is the root of h(tau) = kappa, or
// zero if h(0) >= kappa.
//
// The multiplier lambda of the equality constraint gives the radius:
// for a free point, s_i G_i = ||a||^2 - d_i^2 - s_i tau [i in L], so
// R^2 = ||a||^2 - lambda.

namespace ocal {

const char* to_string(LearnerKind k) noexcept {
  switch (k) {
    case LearnerKind::svdd: return "svdd";
    case LearnerKind::svddneg: return "svddneg";
    case LearnerKind::ssad: return "ssad";
  }
  return "?";
}

LearnerKind parse_learner(std::string_view name) {
  if (name == "svdd" || name == "SVDD") return LearnerKind::svdd;
  if (name == "svddneg" || name == "SVDDneg") return LearnerKind::svddneg;
  if (name == "ssad" || name == "SSAD") return LearnerKind::ssad;
  raise(ErrorCode::invalid_argument, "unknown learner '" + std::string(name) + "'");
}

namespace {

constexpr double kBoxEps = 1e-8;
constexpr double kTau = 1e-12;
constexpr double kInf = std::numeric_limits<double>::infinity();

class SignedDualSolver {
 public:
  SignedDualSolver(Matrix K, std::vector<int> y, std::vector<double> ub, std::vector<char> labeled)
      : n_(y.size()), K_(std::move(K)), y_(std::move(y)), ub_(std::move(ub)), labeled_(std::move(labeled)) {
    alpha_.assign(n_, 0.0);
    initial_point();
  }

  /// Solves for a fixed margin tau, starting from the current alpha.
  void solve(double tau, const SolverOptions& opt) {
    tau_ = tau;
    p_.resize(n_);
    for (std::size_t i = 0; i < n_; ++i) p_[i] = -y_[i] * K(i, i) - (labeled_[i] ? tau : 0.0);
    G_.assign(n_, 0.0);
    for (std::size_t i = 0; i < n_; ++i) {
      double g = p_[i];
      for (std::size_t j = 0; j < n_; ++j)
        if (alpha_[j] != 0.0) g += Q(i, j) * alpha_[j];
      G_[i] = g;
    }

    for (;;) {
      std::size_t i = 0, j = 0;
      gap_ = select_pair(i, j);
      if (gap_ < opt.tolerance || n_ < 2) break;
      if (steps_ >= opt.max_steps)
        raise(ErrorCode::solver, "dual solver did not converge after " + std::to_string(steps_) +
                                     " steps; KKT violation " + std::to_string(gap_));
      ++steps_;
      update_pair(i, j);
    }
  }

  double labeled_mass() const {
    double s = 0.0;
    for (std::size_t i = 0; i < n_; ++i)
      if (labeled_[i]) s += alpha_[i];
    return s;
  }

  /// Largest labeled mass attainable under the box and equality constraints.
  double max_labeled_mass() const {
    double cap_pos_unl = 0.0, cap_pos_lab = 0.0, cap_neg_lab = 0.0, cap_neg_unl = 0.0;
    for (std::size_t i = 0; i < n_; ++i) {
      if (y_[i] > 0) (labeled_[i] ? cap_pos_lab : cap_pos_unl) += ub_[i];
      else (labeled_[i] ? cap_neg_lab : cap_neg_unl) += ub_[i];
    }
    // Maximize P_lab + N_lab subject to P_unl + P_lab - N_lab - N_unl = 1.
    // Unlabeled negatives never help; start with every labeled box full.
    double p_lab = cap_pos_lab, n_lab = cap_neg_lab;
    double p_unl = 1.0 - p_lab + n_lab;
    if (p_unl < 0.0) {
      p_unl = 0.0;
      p_lab = 1.0 + n_lab;
    } else if (p_unl > cap_pos_unl) {
      p_unl = cap_pos_unl;
      n_lab = std::max(0.0, p_unl + p_lab - 1.0);
    }
    return p_lab + n_lab;
  }

  double lambda() const {
    double ub = kInf, lb = -kInf, sum = 0.0;
    std::size_t nfree = 0;
    for (std::size_t i = 0; i < n_; ++i) {
      const double yg = y_[i] * G_[i];
      if (alpha_[i] > kBoxEps && alpha_[i] < ub_[i] - kBoxEps) {
        ++nfree;
        sum += yg;
      } else if (alpha_[i] >= ub_[i] - kBoxEps) {
        if (y_[i] > 0) lb = std::max(lb, yg);
        else ub = std::min(ub, yg);
      } else {
        if (y_[i] > 0) ub = std::min(ub, yg);
        else lb = std::max(lb, yg);
      }
    }
    if (nfree > 0) return sum / static_cast<double>(nfree);
    if (std::isinf(ub) && std::isinf(lb)) return 0.0;
    if (std::isinf(ub)) return lb;
    if (std::isinf(lb)) return ub;
    return 0.5 * (ub + lb);
  }

  double center_norm_sq() const {
    double s = 0.0;
    for (std::size_t i = 0; i < n_; ++i) {
      if (alpha_[i] == 0.0) continue;
      double inner = 0.0;
      for (std::size_t j = 0; j < n_; ++j)
        if (alpha_[j] != 0.0) inner += y_[j] * alpha_[j] * K(i, j);
      s += y_[i] * alpha_[i] * inner;
    }
    return s;
  }

  const std::vector<double>& alpha() const { return alpha_; }
  void set_alpha(std::vector<double> a) { alpha_ = std::move(a); }
  std::size_t steps() const { return steps_; }
  double gap() const { return gap_; }

 private:
  double K(std::size_t i, std::size_t j) const {
    return K_(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j));
  }
  double Q(std::size_t i, std::size_t j) const { return 2.0 * y_[i] * y_[j] * K(i, j); }

  bool in_up(std::size_t t) const {
    return y_[t] > 0 ? alpha_[t] < ub_[t] : alpha_[t] > 0.0;
  }
  bool in_low(std::size_t t) const {
    return y_[t] > 0 ? alpha_[t] > 0.0 : alpha_[t] < ub_[t];
  }

  void initial_point() {
    double remaining = 1.0;
    for (std::size_t i = 0; i < n_ && remaining > 0.0; ++i) {
      if (y_[i] < 0) continue;
      const double a = std::min(ub_[i], remaining);
      alpha_[i] = a;
      remaining -= a;
    }
    if (remaining > 1e-12)
      raise(ErrorCode::infeasible, "box constraints admit no feasible dual point (sum of bounds " +
                                       std::to_string(1.0 - remaining) + " < 1); raise C");
    if (remaining > 0.0) {
      // Absorb rounding residue in the last filled coordinate.
      for (std::size_t i = n_; i-- > 0;)
        if (y_[i] > 0 && alpha_[i] > 0.0) {
          alpha_[i] += remaining;
          break;
        }
    }
  }

  // Maximal violating i, second-order partner j. Returns the KKT gap.
  double select_pair(std::size_t& out_i, std::size_t& out_j) const {
    double gmax = -kInf, gmax2 = -kInf;
    std::size_t i = n_;
    for (std::size_t t = 0; t < n_; ++t)
      if (in_up(t) && -y_[t] * G_[t] > gmax) {
        gmax = -y_[t] * G_[t];
        i = t;
      }
    std::size_t j = n_;
    double obj_min = kInf;
    for (std::size_t t = 0; t < n_; ++t) {
      if (!in_low(t)) continue;
      const double yg = y_[t] * G_[t];
      gmax2 = std::max(gmax2, yg);
      if (i == n_) continue;
      const double b = gmax + yg;
      if (b > 0.0) {
        double a = 2.0 * (K(i, i) + K(t, t) - 2.0 * K(i, t));
        if (a <= 0.0) a = kTau;
        const double obj = -(b * b) / a;
        if (obj < obj_min) {
          obj_min = obj;
          j = t;
        }
      }
    }
    if (i == n_ || j == n_) return 0.0;
    out_i = i;
    out_j = j;
    return gmax + gmax2;
  }

  void update_pair(std::size_t i, std::size_t j) {
    const double Ci = ub_[i], Cj = ub_[j];
    const double old_i = alpha_[i], old_j = alpha_[j];
    double& ai = alpha_[i];
    double& aj = alpha_[j];
    const double Qii = Q(i, i), Qjj = Q(j, j), Qij = Q(i, j);
    if (y_[i] != y_[j]) {
      double quad = Qii + Qjj + 2.0 * Qij;
      if (quad <= 0.0) quad = kTau;
      const double delta = (-G_[i] - G_[j]) / quad;
      const double diff = ai - aj;
      ai += delta;
      aj += delta;
      if (diff > 0.0) {
        if (aj < 0.0) { aj = 0.0; ai = diff; }
      } else {
        if (ai < 0.0) { ai = 0.0; aj = -diff; }
      }
      if (diff > Ci - Cj) {
        if (ai > Ci) { ai = Ci; aj = Ci - diff; }
      } else {
        if (aj > Cj) { aj = Cj; ai = Cj + diff; }
      }
    } else {
      double quad = Qii + Qjj - 2.0 * Qij;
      if (quad <= 0.0) quad = kTau;
      const double delta = (G_[i] - G_[j]) / quad;
      const double sum = ai + aj;
      ai -= delta;
      aj += delta;
      if (sum > Ci) {
        if (ai > Ci) { ai = Ci; aj = sum - Ci; }
      } else {
        if (aj < 0.0) { aj = 0.0; ai = sum; }
      }
      if (sum > Cj) {
        if (aj > Cj) { aj = Cj; ai = sum - Cj; }
      } else {
        if (ai < 0.0) { ai = 0.0; aj = sum; }
      }
    }
    const double di = ai - old_i, dj = aj - old_j;
    for (std::size_t t = 0; t < n_; ++t) G_[t] += Q(t, i) * di + Q(t, j) * dj;
  }

  std::size_t n_;
  Matrix K_;
  std::vector<int> y_;
  std::vector<double> ub_;
  std::vector<char> labeled_;
  std::vector<double> alpha_, G_, p_;
  double tau_ = 0.0;
  double gap_ = 0.0;
  std::size_t steps_ = 0;
};

struct Orientation {
  std::vector<int> signs;
  std::vector<double> bounds;
  std::vector<char> margin_points;
};

Orientation orient(const FitRequest& req) {
  const std::size_t n = req.train_idx.size();
  Orientation o;
  o.signs.assign(n, 1);
  o.bounds.assign(n, 0.0);
  o.margin_points.assign(n, 0);
  for (std::size_t i = 0; i < n; ++i) {
    const LabelStatus s = req.labels[i];
    switch (req.learner) {
      case LearnerKind::svdd:
        o.bounds[i] = req.costs.c;
        break;
      case LearnerKind::svddneg:
        if (s == LabelStatus::labeled_outlier) {
          o.signs[i] = -1;
          o.bounds[i] = req.costs.c2;
        } else {
          o.bounds[i] = req.costs.c1;
        }
        break;
      case LearnerKind::ssad:
        if (s == LabelStatus::unlabeled) {
          o.bounds[i] = req.costs.c1;
        } else {
          o.signs[i] = s == LabelStatus::labeled_outlier ? -1 : 1;
          o.bounds[i] = req.costs.c2;
          o.margin_points[i] = 1;
        }
        break;
    }
  }
  return o;
}

Matrix local_kernel(const Matrix& X, const IndexSet& idx, const KernelConfig& cfg, const GramMatrix* gram) {
  const std::size_t n = idx.size();
  Matrix K(static_cast<Eigen::Index>(n), static_cast<Eigen::Index>(n));
  for (std::size_t a = 0; a < n; ++a) {
    for (std::size_t b = a; b < n; ++b) {
      const double v = a == b ? 1.0 : gram ? (*gram)(idx[a], idx[b]) : rbf(row(X, idx[a]), row(X, idx[b]), cfg);
      K(static_cast<Eigen::Index>(a), static_cast<Eigen::Index>(b)) = v;
      K(static_cast<Eigen::Index>(b), static_cast<Eigen::Index>(a)) = v;
    }
  }
  return K;
}

// Root of h(tau) = labeled_mass(tau) - kappa on [lo, hi] by regula falsi with
// the Illinois modification; h is piecewise linear and nondecreasing.
double solve_margin(SignedDualSolver& s, double kappa, const SolverOptions& opt) {
  constexpr double kMassTol = 1e-9;
  double lo = 0.0, h_lo = s.labeled_mass() - kappa;
  std::vector<double> a_lo = s.alpha(), a_hi;
  double hi = 1.0, h_hi = 0.0;
  for (int k = 0;; ++k) {
    s.solve(hi, opt);
    h_hi = s.labeled_mass() - kappa;
    if (h_hi >= -kMassTol) break;
    lo = hi;
    h_lo = h_hi;
    a_lo = s.alpha();
    hi *= 2.0;
    if (k > 80) raise(ErrorCode::solver, "SSAD margin search did not bracket the root");
  }
  if (std::abs(h_hi) <= kMassTol) return hi;
  a_hi = s.alpha();
  double m_lo = h_lo, m_hi = h_hi;  // unscaled residuals at the bracket ends
  int side = 0;
  for (int iter = 0; iter < 200 && hi - lo > 1e-14 * std::max(1.0, hi); ++iter) {
    double mid = (lo * h_hi - hi * h_lo) / (h_hi - h_lo);
    if (!(mid > lo && mid < hi)) mid = 0.5 * (lo + hi);
    s.solve(mid, opt);
    const double h = s.labeled_mass() - kappa;
    if (std::abs(h) <= kMassTol) return mid;
    if (h < 0.0) {
      lo = mid;
      h_lo = m_lo = h;
      a_lo = s.alpha();
      if (side == -1) h_hi *= 0.5;
      side = -1;
    } else {
      hi = mid;
      h_hi = m_hi = h;
      a_hi = s.alpha();
      if (side == 1) h_lo *= 0.5;
      side = 1;
    }
  }
  // The labeled mass jumps at the root: every convex combination of the two
  // end solutions is optimal there, so pick the one carrying exactly kappa.
  const double theta = m_hi / (m_hi - m_lo);
  std::vector<double> a(a_lo.size());
  for (std::size_t i = 0; i < a.size(); ++i) a[i] = theta * a_lo[i] + (1.0 - theta) * a_hi[i];
  s.set_alpha(std::move(a));
  const double tau = 0.5 * (lo + hi);
  s.solve(tau, opt);
  return tau;
}

void finalize_support(TrainedModel& m, const Matrix& X) {
  std::size_t count = 0;
  for (double a : m.alpha)
    if (a > 0.0) ++count;
  m.support.resize(static_cast<Eigen::Index>(count), X.cols());
  m.support_coef.clear();
  m.support_rows.clear();
  std::size_t r = 0;
  for (std::size_t i = 0; i < m.alpha.size(); ++i) {
    if (!(m.alpha[i] > 0.0)) continue;
    m.support.row(static_cast<Eigen::Index>(r++)) = X.row(static_cast<Eigen::Index>(m.train_idx[i]));
    m.support_coef.push_back(m.signs[i] * m.alpha[i]);
    m.support_rows.push_back(m.train_idx[i]);
  }
}

}  // namespace

TrainedModel fit(const Matrix& X, const FitRequest& req, const GramMatrix* gram) {
  if (req.train_idx.empty()) raise(ErrorCode::invalid_argument, "training set is empty");
  if (req.labels.size() != req.train_idx.size())
    raise(ErrorCode::invalid_argument, "labels must match the training set size");
  for (std::size_t i : req.train_idx)
    if (i >= static_cast<std::size_t>(X.rows())) raise(ErrorCode::invalid_argument, "training index out of range");
  req.kernel.validate();
  req.costs.validate();
  if (gram && (gram->size() != static_cast<std::size_t>(X.rows()) || gram->config().gamma != req.kernel.gamma))
    raise(ErrorCode::invalid_argument, "kernel cache does not match the data or gamma");

  Orientation o = orient(req);
  TrainedModel m;
  m.learner = req.learner;
  m.kernel = req.kernel;
  m.costs = req.costs;
  m.train_idx = req.train_idx;
  m.signs = o.signs;
  m.labels = req.labels;

  const bool has_margin =
      req.learner == LearnerKind::ssad &&
      std::any_of(o.margin_points.begin(), o.margin_points.end(), [](char c) { return c != 0; });
  SignedDualSolver solver(local_kernel(X, req.train_idx, req.kernel, gram), o.signs, o.bounds,
                          o.margin_points);
  solver.solve(0.0, req.solver);
  double tau = 0.0;
  double residual = solver.gap();
  if (has_margin && req.costs.kappa > 0.0) {
    double kappa = req.costs.kappa;
    const double cap = solver.max_labeled_mass();
    if (kappa > cap) {
      kappa = cap;
      m.kappa_clamped = true;
    }
    m.effective_kappa = kappa;
    if (solver.labeled_mass() < kappa) {
      tau = solve_margin(solver, kappa, req.solver);
      residual = std::max(solver.gap(), std::abs(solver.labeled_mass() - kappa));
    }
  }
  m.margin = tau;
  m.alpha = solver.alpha();
  m.solver_steps = solver.steps();
  m.kkt_residual = std::max(0.0, residual);
  m.center_norm_sq = solver.center_norm_sq();
  m.radius_sq = std::max(0.0, m.center_norm_sq - solver.lambda());
  finalize_support(m, X);
  return m;
}

double decision_value(const TrainedModel& m, std::span<const double> x) {
  if (x.size() != static_cast<std::size_t>(m.support.cols()))
    raise(ErrorCode::invalid_argument, "dimension mismatch in decision_value");
  double cross = 0.0;
  for (std::size_t r = 0; r < m.support_coef.size(); ++r)
    cross += m.support_coef[r] * rbf(row(m.support, r), x, m.kernel);
  const double d2 = std::max(0.0, 1.0 - 2.0 * cross + m.center_norm_sq);
  return std::sqrt(d2) - m.radius();
}

double decision_value(const TrainedModel& m, const Matrix& X_train, std::span<const double> x) {
  if (x.size() != static_cast<std::size_t>(X_train.cols()))
    raise(ErrorCode::invalid_argument, "dimension mismatch in decision_value");
  double cross = 0.0;
  for (std::size_t i = 0; i < m.alpha.size(); ++i)
    if (m.alpha[i] != 0.0) cross += m.signs[i] * m.alpha[i] * rbf(row(X_train, m.train_idx[i]), x, m.kernel);
  const double d2 = std::max(0.0, 1.0 - 2.0 * cross + m.center_norm_sq);
  return std::sqrt(d2) - m.radius();
}

std::vector<double> decision_values(const TrainedModel& m, const GramMatrix& gram) {
  if (gram.config().gamma != m.kernel.gamma) raise(ErrorCode::invalid_argument, "kernel cache gamma mismatch");
  const std::size_t n = gram.size();
  std::vector<double> cross(n, 0.0);
  for (std::size_t r = 0; r < m.support_rows.size(); ++r) {
    const double c = m.support_coef[r];
    const double* k = gram.row_ptr(m.support_rows[r]);
    for (std::size_t j = 0; j < n; ++j) cross[j] += c * k[j];
  }
  const double R = m.radius();
  std::vector<double> f(n);
  for (std::size_t j = 0; j < n; ++j) f[j] = std::sqrt(std::max(0.0, 1.0 - 2.0 * cross[j] + m.center_norm_sq)) - R;
  return f;
}

Label classify(double decision) noexcept { return decision > kBoundaryTolerance ? Label::outlier : Label::inlier; }

Label predict(const TrainedModel& m, std::span<const double> x) { return classify(decision_value(m, x)); }

namespace {

// Squared distances ||phi(x_i) - a||^2 for all training rows.
std::vector<double> training_distances(const TrainedModel& m, const Matrix& X) {
  const std::size_t n = m.train_idx.size();
  std::vector<double> d2(n);
  for (std::size_t i = 0; i < n; ++i) {
    double cross = 0.0;
    for (std::size_t j = 0; j < n; ++j)
      if (m.alpha[j] != 0.0)
        cross += m.signs[j] * m.alpha[j] * rbf(row(X, m.train_idx[i]), row(X, m.train_idx[j]), m.kernel);
    d2[i] = 1.0 - 2.0 * cross + m.center_norm_sq;
  }
  return d2;
}

double bound_of(const TrainedModel& m, std::size_t i, bool labeled) {
  switch (m.learner) {
    case LearnerKind::svdd: return m.costs.c;
    case LearnerKind::svddneg: return m.signs[i] < 0 ? m.costs.c2 : m.costs.c1;
    case LearnerKind::ssad: return labeled ? m.costs.c2 : m.costs.c1;
  }
  return 0.0;
}

bool carries_margin(const TrainedModel& m, std::size_t i) {
  return m.learner == LearnerKind::ssad && m.labels[i] != LabelStatus::unlabeled;
}

}  // namespace

double kkt_certificate(const TrainedModel& m, const Matrix& X) {
  const std::size_t n = m.train_idx.size();
  const auto d2 = training_distances(m, X);
  const double R2 = m.radius_sq;
  double worst = 0.0;
  double eq = 0.0, mass = 0.0;
  bool any_margin = false;
  for (std::size_t i = 0; i < n; ++i) {
    const bool margin = carries_margin(m, i);
    const double a = m.alpha[i];
    const double u = bound_of(m, i, margin);
    eq += m.signs[i] * a;
    if (margin) {
      mass += a;
      any_margin = true;
    }
    worst = std::max({worst, -a, a - u});
    // g_i <= xi_i is the primal constraint with xi_i >= 0.
    const double g = m.signs[i] * (d2[i] - R2) + (margin ? m.margin : 0.0);
    if (a <= kBoxEps) worst = std::max(worst, g);            // xi = 0, inside
    else if (a >= u - kBoxEps) worst = std::max(worst, -g);  // on or beyond boundary
    else worst = std::max(worst, std::abs(g));               // on the boundary
  }
  worst = std::max(worst, std::abs(eq - 1.0));
  if (any_margin && m.effective_kappa > 0.0) {
    worst = std::max(worst, m.margin > 0.0 ? std::abs(mass - m.effective_kappa)
                                           : std::max(0.0, m.effective_kappa - mass));
  }
  worst = std::max(worst, -m.margin);
  return worst;
}

double dual_objective(const TrainedModel& m, const Matrix& X) {
  (void)X;  // RBF: K_ii = 1
  double lin = 0.0, mass = 0.0;
  for (std::size_t i = 0; i < m.alpha.size(); ++i) {
    lin += m.signs[i] * m.alpha[i];
    if (carries_margin(m, i)) mass += m.alpha[i];
  }
  return lin - m.center_norm_sq + m.margin * (mass - m.effective_kappa);
}

}  // namespace ocal
