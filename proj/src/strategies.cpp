#include "ocal/strategies.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include "ocal/error.hpp"
#include "ocal/rng.hpp"

namespace ocal {

const char* to_string(StrategyKind k) noexcept {
  switch (k) {
    case StrategyKind::mm: return "mm";
    case StrategyKind::emm: return "emm";
    case StrategyKind::eme: return "eme";
    case StrategyKind::ml: return "ml";
    case StrategyKind::hc: return "hc";
    case StrategyKind::db: return "db";
    case StrategyKind::nb: return "nb";
    case StrategyKind::bnc: return "bnc";
    case StrategyKind::rand: return "rand";
    case StrategyKind::rand_out: return "rand_out";
  }
  return "?";
}

const std::vector<StrategyKind>& all_strategies() {
  static const std::vector<StrategyKind> v{StrategyKind::mm, StrategyKind::emm, StrategyKind::eme,
                                           StrategyKind::ml, StrategyKind::hc,  StrategyKind::db,
                                           StrategyKind::nb, StrategyKind::bnc, StrategyKind::rand,
                                           StrategyKind::rand_out};
  return v;
}

StrategyKind parse_strategy(std::string_view name) {
  for (StrategyKind k : all_strategies())
    if (name == to_string(k)) return k;
  if (name == "rand-out") return StrategyKind::rand_out;
  raise(ErrorCode::invalid_argument, "unknown query strategy '" + std::string(name) + "'");
}

bool is_data_based(StrategyKind k) noexcept {
  return k == StrategyKind::mm || k == StrategyKind::emm || k == StrategyKind::eme || k == StrategyKind::ml;
}

void StrategyConfig::validate() const {
  if (!(prior_inlier > 0.0 && prior_inlier < 1.0)) raise(ErrorCode::invalid_argument, "p(in) must lie in (0,1)");
  if (!(eta_nb >= 0.0 && eta_nb <= 1.0)) raise(ErrorCode::invalid_argument, "eta_nb must lie in [0,1]");
  if (!(eta_bnc >= 0.0 && eta_bnc <= 1.0)) raise(ErrorCode::invalid_argument, "eta_bnc must lie in [0,1]");
  if (!(p_bnc >= 0.0 && p_bnc <= 1.0)) raise(ErrorCode::invalid_argument, "p_bnc must lie in [0,1]");
  if (k_nn == 0) raise(ErrorCode::invalid_argument, "k_nn must be positive");
}

// ---------------------------------------------------------------------------
// Pointwise

double density_ratio(double p_x_in, double p_x) {
  return std::clamp(p_x_in / p_x, 0.0, kMaxDensityRatio);
}

double tau_mm(double p_x_in, double p_x, double prior_inlier) {
  if (!(p_x >= kMinDensity)) return 0.0;
  const double r = density_ratio(p_x_in, p_x);
  return -std::abs(2.0 * r * prior_inlier - 1.0);
}

double tau_emm_ratio(double r) {
  const double d = 0.5 - r;
  const double sign = d > 0.0 ? 1.0 : (d < 0.0 ? -1.0 : 0.0);
  return (r - 1.0) * sign;
}

double tau_eme_ratio(double r) {
  if (!(r > 0.0) || r >= 1.0) return 0.0;
  const double first = (-r * r * std::log(r) + r) / (2.0 * r);
  const double second = (r - 1.0) * (r - 1.0) * std::log(1.0 - r) / (2.0 * r);
  return first + second;
}

double tau_emm(double p_x_in, double p_x) {
  if (!(p_x >= kMinDensity)) return 0.0;
  return tau_emm_ratio(density_ratio(p_x_in, p_x));
}

double tau_eme(double p_x_in, double p_x) {
  if (!(p_x >= kMinDensity)) return 0.0;
  return tau_eme_ratio(density_ratio(p_x_in, p_x));
}

double tau_hc(double f) { return f; }

double tau_db(double f) { return -std::abs(f); }

double tau_nb(double f, std::size_t inlier_neighbors, std::size_t k, double eta) {
  const double hat = -(0.5 + static_cast<double>(inlier_neighbors) / (2.0 * static_cast<double>(k)));
  return eta * tau_db(f) + (1.0 - eta) * hat;
}

// ---------------------------------------------------------------------------
// Minimum loss
//
// With n = |L_in|, m = |L_out|, kernel sums k_in(x) = sum_{s in L_in} k(x_s, x)
// and k_out(x) = sum_{o in L_out} k(x_o, x), A = sum_{i != s in L_in} k(x_i, x_s)
// and B = sum_{o, s} k(x_o, x_s), the leave-one-out means collapse to
//   in-case first term  = nu (A + 2 k_in(x)) / (n (n+1))
//   in-case subtrahend  = nu (B + k_out(x)) / (m (n+1))
//   out-case first term = nu A / (n (n-1))
//   out-case subtrahend = nu (B + k_in(x)) / (n (m+1))
// where nu is the Gaussian normalizer.

MinimumLoss::MinimumLoss(const Matrix& X, IndexSet inliers, IndexSet outliers, double gamma,
                         double prior_inlier, bool modified, const GramMatrix* gram)
    : X_(X),
      in_(std::move(inliers)),
      out_(std::move(outliers)),
      gamma_(gamma),
      prior_(prior_inlier),
      normalizer_(gaussian_normalizer(gamma, static_cast<std::size_t>(X.cols()))),
      modified_(modified),
      gram_(gram) {
  if (in_.empty()) raise(ErrorCode::infeasible, "minimum-loss needs at least one labeled inlier");
  if (!modified_ && out_.empty())
    raise(ErrorCode::infeasible, "minimum-loss without modification needs labeled outliers");
  if (gram_ && gram_->config().gamma != gamma) raise(ErrorCode::invalid_argument, "kernel cache gamma mismatch");
  auto k = [&](std::size_t a, std::size_t b) {
    return gram_ ? (*gram_)(a, b) : std::exp(-gamma_ * squared_distance(row(X_, a), row(X_, b)));
  };
  for (std::size_t a = 0; a < in_.size(); ++a)
    for (std::size_t b = 0; b < in_.size(); ++b)
      if (a != b) in_pair_sum_ += k(in_[a], in_[b]);
  for (std::size_t o : out_)
    for (std::size_t s : in_) cross_sum_ += k(o, s);
}

MinimumLoss::Parts MinimumLoss::combine(double k_in, double k_out) const {
  const double n = static_cast<double>(in_.size());
  const double m = static_cast<double>(out_.size());
  const double nu = normalizer_;
  Parts p;
  p.in = nu * (in_pair_sum_ + 2.0 * k_in) / (n * (n + 1.0));
  p.out = in_.size() >= 2 ? nu * in_pair_sum_ / (n * (n - 1.0)) : 0.0;
  if (!modified_) {
    p.in -= nu * (cross_sum_ + k_out) / (m * (n + 1.0));
    p.out -= nu * (cross_sum_ + k_in) / (n * (m + 1.0));
  }
  p.total = prior_ * p.in + (1.0 - prior_) * p.out;
  return p;
}

MinimumLoss::Parts MinimumLoss::score(std::span<const double> x) const {
  double k_in = 0.0, k_out = 0.0;
  for (std::size_t s : in_) k_in += std::exp(-gamma_ * squared_distance(row(X_, s), x));
  for (std::size_t o : out_) k_out += std::exp(-gamma_ * squared_distance(row(X_, o), x));
  return combine(k_in, k_out);
}

MinimumLoss::Parts MinimumLoss::score_row(std::size_t j) const {
  if (!gram_) return score(row(X_, j));
  double k_in = 0.0, k_out = 0.0;
  const double* kj = gram_->row_ptr(j);
  for (std::size_t s : in_) k_in += kj[s];
  for (std::size_t o : out_) k_out += kj[o];
  return combine(k_in, k_out);
}

// ---------------------------------------------------------------------------
// Neighborhoods

NeighborIndex::NeighborIndex(const Matrix& X, std::size_t k) {
  const std::size_t n = static_cast<std::size_t>(X.rows());
  if (n < 2) raise(ErrorCode::invalid_argument, "neighbor index needs at least two rows");
  k_ = std::min(k, n - 1);
  if (k_ == 0) raise(ErrorCode::invalid_argument, "k must be positive");
  nn_.resize(n * k_);
  nn1_.resize(n);
  std::vector<std::pair<double, std::size_t>> d(n - 1);
  for (std::size_t i = 0; i < n; ++i) {
    std::size_t c = 0;
    for (std::size_t j = 0; j < n; ++j)
      if (j != i) d[c++] = {squared_distance(row(X, i), row(X, j)), j};
    std::partial_sort(d.begin(), d.begin() + static_cast<std::ptrdiff_t>(k_), d.end());
    for (std::size_t r = 0; r < k_; ++r) nn_[i * k_ + r] = d[r].second;
    nn1_[i] = std::sqrt(d[0].first);
  }
}

std::vector<double> bnc_scores(std::span<const double> abs_f, std::span<const double> nn_distance, double eta) {
  if (abs_f.size() != nn_distance.size()) raise(ErrorCode::invalid_argument, "bnc input size mismatch");
  std::vector<double> out(abs_f.size(), 0.0);
  if (abs_f.empty()) return out;
  const auto [fmin, fmax] = std::minmax_element(abs_f.begin(), abs_f.end());
  const auto [dmin, dmax] = std::minmax_element(nn_distance.begin(), nn_distance.end());
  for (std::size_t i = 0; i < abs_f.size(); ++i) {
    const double boundary = *fmax > 0.0 ? -(abs_f[i] - *fmin) / *fmax : 0.0;
    const double neighbor = *dmax > 0.0 ? -(nn_distance[i] - *dmin) / *dmax : 0.0;
    out[i] = (1.0 - eta) * boundary + eta * neighbor;
  }
  return out;
}

// ---------------------------------------------------------------------------
// Scoring

InformativenessVector tau_rand(const IndexSet& eligible, std::uint64_t seed) {
  InformativenessVector v;
  v.eligible = eligible;
  Rng rng(derive_seed(seed, "rand"));
  v.scores.reserve(eligible.size());
  for (std::size_t r = 0; r < eligible.size(); ++r) v.scores.push_back(1.0 - rng.uniform());
  return v;
}

InformativenessVector tau_rand_out(const IndexSet& eligible, std::span<const double> decision, std::uint64_t seed) {
  auto outside = [&](std::size_t i) { return classify(decision[i]) == Label::outlier; };
  const bool any = std::any_of(eligible.begin(), eligible.end(), outside);
  if (!any) {
    auto v = tau_rand(eligible, seed);
    v.fallback = true;
    return v;
  }
  InformativenessVector v;
  v.eligible = eligible;
  Rng rng(derive_seed(seed, "rand_out"));
  v.scores.reserve(eligible.size());
  for (std::size_t i : eligible) {
    const double u = 1.0 - rng.uniform();
    v.scores.push_back(outside(i) ? u : 0.0);
  }
  return v;
}

namespace {

struct DensityPair {
  std::vector<double> p_x_in;
  std::vector<double> p_x;
};

DensityPair densities(const StrategyConfig& cfg, const StrategyContext& ctx) {
  const double gamma = ctx.gram.config().gamma;
  const IndexSet in = ctx.pool.labeled_inliers();
  IndexSet px_support;
  if (cfg.px_support == PxSupport::all) {
    px_support = ctx.domain;
  } else {
    for (std::size_t i : ctx.domain)
      if (!ctx.pool.is_labeled(i)) px_support.push_back(i);
  }
  DensityPair d;
  d.p_x_in = kde_eval_all(kde_fit(ctx.X, in, gamma), ctx.gram);
  d.p_x = kde_eval_all(kde_fit(ctx.X, px_support, gamma), ctx.gram);
  return d;
}

}  // namespace

InformativenessVector score(const StrategyConfig& cfg, const StrategyContext& ctx) {
  cfg.validate();
  if (ctx.decision.size() != static_cast<std::size_t>(ctx.X.rows()))
    raise(ErrorCode::invalid_argument, "decision values must cover every row");
  const IndexSet& U = ctx.eligible;

  switch (cfg.kind) {
    case StrategyKind::rand: return tau_rand(U, ctx.iteration_seed);
    case StrategyKind::rand_out: return tau_rand_out(U, ctx.decision, ctx.iteration_seed);
    default: break;
  }

  InformativenessVector v;
  v.eligible = U;
  v.scores.reserve(U.size());

  switch (cfg.kind) {
    case StrategyKind::mm:
    case StrategyKind::emm:
    case StrategyKind::eme: {
      const auto d = densities(cfg, ctx);
      for (std::size_t i : U) {
        const double s = cfg.kind == StrategyKind::mm    ? tau_mm(d.p_x_in[i], d.p_x[i], cfg.prior_inlier)
                         : cfg.kind == StrategyKind::emm ? tau_emm(d.p_x_in[i], d.p_x[i])
                                                         : tau_eme(d.p_x_in[i], d.p_x[i]);
        v.scores.push_back(s);
      }
      break;
    }
    case StrategyKind::ml: {
      const std::size_t M = static_cast<std::size_t>(ctx.X.cols());
      IndexSet out = ctx.pool.labeled_outliers();
      const bool modified = out.size() < M;
      MinimumLoss ml(ctx.X, ctx.pool.labeled_inliers(), std::move(out), ctx.gram.config().gamma,
                     cfg.prior_inlier, modified, &ctx.gram);
      v.modified = modified;
      for (std::size_t i : U) v.scores.push_back(ml.score_row(i).total);
      break;
    }
    case StrategyKind::hc:
      for (std::size_t i : U) v.scores.push_back(tau_hc(ctx.decision[i]));
      break;
    case StrategyKind::db:
      for (std::size_t i : U) v.scores.push_back(tau_db(ctx.decision[i]));
      break;
    case StrategyKind::nb: {
      if (!ctx.neighbors) raise(ErrorCode::invalid_argument, "neighborhood strategy needs a neighbor index");
      const std::size_t k = std::min(cfg.k_nn, ctx.neighbors->k());
      for (std::size_t i : U) {
        const auto nn = ctx.neighbors->neighbors(i);
        std::size_t labeled_in = 0;
        for (std::size_t r = 0; r < k; ++r)
          if (ctx.pool.status(nn[r]) == LabelStatus::labeled_inlier) ++labeled_in;
        v.scores.push_back(tau_nb(ctx.decision[i], labeled_in, k, cfg.eta_nb));
      }
      break;
    }
    case StrategyKind::bnc: {
      Rng coin(derive_seed(ctx.iteration_seed, "bnc"));
      if (coin.bernoulli(cfg.p_bnc)) {
        auto r = tau_rand(U, derive_seed(ctx.iteration_seed, "bnc-explore"));
        r.exploratory = true;
        return r;
      }
      if (!ctx.neighbors) raise(ErrorCode::invalid_argument, "boundary-neighbor strategy needs a neighbor index");
      std::vector<double> abs_f, nn;
      abs_f.reserve(U.size());
      nn.reserve(U.size());
      for (std::size_t i : U) {
        abs_f.push_back(std::abs(ctx.decision[i]));
        nn.push_back(ctx.neighbors->nearest_distance(i));
      }
      v.scores = bnc_scores(abs_f, nn, cfg.eta_bnc);
      break;
    }
    default:
      raise(ErrorCode::internal, "unhandled strategy");
  }
  for (double s : v.scores)
    if (!std::isfinite(s)) raise(ErrorCode::internal, "non-finite informativeness");
  return v;
}

std::size_t select_query(const InformativenessVector& v) {
  if (v.eligible.empty()) raise(ErrorCode::infeasible, "no eligible observation left to query");
  if (v.scores.size() != v.eligible.size()) raise(ErrorCode::invalid_argument, "score vector size mismatch");
  std::size_t best = 0;
  for (std::size_t r = 1; r < v.scores.size(); ++r) {
    if (v.scores[r] > v.scores[best] || (v.scores[r] == v.scores[best] && v.eligible[r] < v.eligible[best]))
      best = r;
  }
  return v.eligible[best];
}

// ---------------------------------------------------------------------------
// Feasibility

Feasibility feasibility_gate(StrategyKind strategy, std::size_t labeled_inliers, std::size_t labeled_outliers,
                             std::size_t dims, PoolStrategy pool, SplitStrategy split, LearnerKind learner) {
  Feasibility f;
  auto reject = [&](std::string why) {
    f.ok = false;
    f.modified = false;
    f.reason = std::move(why);
    return f;
  };
  if (pool == PoolStrategy::Pu && split == SplitStrategy::Si)
    return reject("Pu with Si leaves the inlier-only training set empty");
  if (learner == LearnerKind::svdd && split != SplitStrategy::Si)
    return reject("unsupervised SVDD can only react to feedback under Si");
  if (is_data_based(strategy)) {
    if (pool == PoolStrategy::Pu || labeled_inliers == 0)
      return reject(std::string(to_string(strategy)) + " needs labeled inliers for density estimation");
    if (labeled_inliers < dims)
      return reject(std::string(to_string(strategy)) + " needs |L_in| >= M (" + std::to_string(labeled_inliers) +
                    " < " + std::to_string(dims) + ")");
    if (strategy == StrategyKind::ml && labeled_outliers < dims) f.modified = true;
  }
  if (strategy == StrategyKind::hc && labeled_inliers + labeled_outliers == 0)
    return reject("hc is infeasible without any labeled observation");
  return f;
}

}  // namespace ocal
