#include <doctest.h>

#include <cmath>
#include <numeric>

#include "ocal/error.hpp"
#include "ocal/learners.hpp"
#include "oracles.hpp"

using namespace ocal;

namespace {

FitRequest request(std::size_t n, LearnerKind learner, double gamma, double c1, double c2 = -1.0,
                   double kappa = 0.0) {
  FitRequest r;
  r.train_idx.resize(n);
  std::iota(r.train_idx.begin(), r.train_idx.end(), 0);
  r.labels.assign(n, LabelStatus::unlabeled);
  r.learner = learner;
  r.kernel.gamma = gamma;
  r.costs.c = r.costs.c1 = c1;
  r.costs.c2 = c2 > 0 ? c2 : c1;
  r.costs.kappa = kappa;
  return r;
}

void check_invariants(const TrainedModel& m, const Matrix& X) {
  double sum = 0.0;
  for (std::size_t i = 0; i < m.alpha.size(); ++i) {
    sum += m.signs[i] * m.alpha[i];
    CHECK(m.alpha[i] >= 0.0);
  }
  CHECK(sum == doctest::Approx(1.0).epsilon(1e-8));
  CHECK(m.radius_sq >= 0.0);
  CHECK(kkt_certificate(m, X) <= 1e-6);
}

}  // namespace

TEST_CASE("single point is its own center") {
  Matrix X(1, 2);
  X << 0.3, 0.4;
  auto m = fit(X, request(1, LearnerKind::svdd, 1.0, 1.0));
  CHECK(m.alpha == std::vector<double>{1.0});
  CHECK(m.radius_sq == doctest::Approx(0.0).epsilon(1e-12));
  CHECK(std::abs(decision_value(m, row(X, 0))) <= 1e-6);
}

TEST_CASE("two symmetric points share a boundary distance") {
  Matrix X(2, 2);
  X << -0.5, 0.2, 0.5, 0.2;
  auto m = fit(X, request(2, LearnerKind::svdd, 0.1, 1.0));
  CHECK(decision_value(m, row(X, 0)) == doctest::Approx(decision_value(m, row(X, 1))).epsilon(1e-9));
  CHECK(m.alpha[0] == doctest::Approx(0.5));
}

TEST_CASE("N=5 dual matches the projected grid") {
  Rng rng(2024);
  for (int rep = 0; rep < 5; ++rep) {
    Matrix X = oracle::random_points(5, 2, rng);
    auto req = request(5, LearnerKind::svdd, 1.0, 0.5);
    auto m = fit(X, req);
    GramMatrix K(X, req.kernel);
    const double grid = oracle::svdd_grid_dual(K.values(), 0.5);
    const double ours = dual_objective(m, X);
    CHECK(ours >= grid - 1e-9);
    CHECK(ours - grid <= 1e-4);
    check_invariants(m, X);
  }
}

TEST_CASE("decision function") {
  Rng rng(7);
  Matrix X = oracle::random_points(12, 2, rng);
  auto m = fit(X, request(12, LearnerKind::svdd, 2.0, 1.0));

  SUBCASE("C=1 encloses every training point") {
    for (std::size_t i = 0; i < 12; ++i) CHECK(decision_value(m, row(X, i)) <= 1e-6);
  }
  SUBCASE("free support vectors sit on the boundary") {
    for (std::size_t i = 0; i < 12; ++i)
      if (m.alpha[i] > 1e-8 && m.alpha[i] < 1.0 - 1e-8) CHECK(std::abs(decision_value(m, row(X, i))) <= 1e-6);
  }
  SUBCASE("far point approaches sqrt(1 + |a|^2) - R") {
    std::vector<double> far{40.0, -40.0};
    CHECK(decision_value(m, far) == doctest::Approx(std::sqrt(1.0 + m.center_norm_sq) - m.radius()).epsilon(1e-12));
    CHECK(decision_value(m, far) > 0.0);
  }
  SUBCASE("compact and training-matrix evaluation agree") {
    Rng r2(3);
    for (int k = 0; k < 10; ++k) {
      std::vector<double> x{r2.uniform(), r2.uniform()};
      CHECK(decision_value(m, x) == doctest::Approx(decision_value(m, X, x)).epsilon(1e-12));
    }
  }
  SUBCASE("gram evaluation agrees") {
    GramMatrix K(X, m.kernel);
    auto f = decision_values(m, K);
    for (std::size_t i = 0; i < 12; ++i) CHECK(f[i] == doctest::Approx(decision_value(m, row(X, i))).epsilon(1e-12));
  }
}

TEST_CASE("prediction rule") {
  CHECK(classify(0.0) == Label::inlier);
  CHECK(classify(0.3) == Label::outlier);
  CHECK(classify(-0.3) == Label::inlier);
}

TEST_CASE("KKT certificate on every learner") {
  Rng rng(99);
  for (int rep = 0; rep < 20; ++rep) {
    const std::size_t n = 8 + rng.below(20);
    Matrix X = oracle::random_points(n, 2, rng);
    const double gamma = 0.5 + 4.0 * rng.uniform();
    const double c = std::min(1.0, 1.0 / (static_cast<double>(n) * (0.05 + 0.3 * rng.uniform())));
    for (auto learner : {LearnerKind::svdd, LearnerKind::svddneg, LearnerKind::ssad}) {
      auto req = request(n, learner, gamma, c, c * (0.5 + rng.uniform()), learner == LearnerKind::ssad ? 0.5 : 0.0);
      if (learner != LearnerKind::svdd)
        for (std::size_t i = 0; i < n; ++i) {
          const double u = rng.uniform();
          if (u < 0.15) req.labels[i] = LabelStatus::labeled_outlier;
          else if (u < 0.35) req.labels[i] = LabelStatus::labeled_inlier;
        }
      auto m = fit(X, req);
      INFO("rep " << rep << " learner " << to_string(learner));
      check_invariants(m, X);
      for (std::size_t i = 0; i < n; ++i) {
        const double ub = learner == LearnerKind::svdd                    ? req.costs.c
                          : req.labels[i] == LabelStatus::unlabeled      ? req.costs.c1
                          : learner == LearnerKind::svddneg &&
                                    req.labels[i] == LabelStatus::labeled_inlier
                              ? req.costs.c1
                              : req.costs.c2;
        CHECK(m.alpha[i] <= ub + 1e-12);
      }
    }
  }
}

TEST_CASE("SVDDneg without labeled outliers equals SVDD") {
  Rng rng(5);
  for (int rep = 0; rep < 10; ++rep) {
    Matrix X = oracle::random_points(15, 2, rng);
    auto a = fit(X, request(15, LearnerKind::svdd, 3.0, 0.2));
    auto req = request(15, LearnerKind::svddneg, 3.0, 0.2, 0.7);
    req.labels[3] = LabelStatus::labeled_inlier;
    auto b = fit(X, req);
    for (std::size_t i = 0; i < 15; ++i)
      CHECK(std::abs(decision_value(a, row(X, i)) - decision_value(b, row(X, i))) <= 1e-6);
  }
}

TEST_CASE("SSAD with kappa 0 and no labels equals SVDD") {
  Rng rng(6);
  for (int rep = 0; rep < 10; ++rep) {
    Matrix X = oracle::random_points(15, 2, rng);
    auto a = fit(X, request(15, LearnerKind::svdd, 3.0, 0.25));
    auto b = fit(X, request(15, LearnerKind::ssad, 3.0, 0.25, 0.9, 0.0));
    for (std::size_t i = 0; i < 15; ++i)
      CHECK(std::abs(decision_value(a, row(X, i)) - decision_value(b, row(X, i))) <= 1e-6);
  }
}

TEST_CASE("labeling an outlier does not pull it inside") {
  Rng rng(12);
  for (int rep = 0; rep < 10; ++rep) {
    Matrix X = oracle::random_points(20, 2, rng);
    auto req = request(20, LearnerKind::svddneg, 4.0, 0.1);
    auto before = fit(X, req);
    const std::size_t j = rng.below(20);
    req.labels[j] = LabelStatus::labeled_outlier;
    auto after = fit(X, req);
    CHECK(decision_value(after, row(X, j)) >= decision_value(before, row(X, j)) - 1e-6);
  }
}

TEST_CASE("SSAD margin and kappa clamp") {
  Rng rng(31);
  Matrix X = oracle::random_points(20, 2, rng);
  auto req = request(20, LearnerKind::ssad, 2.0, 0.1, 0.1, 1.0);
  req.labels[0] = LabelStatus::labeled_inlier;
  req.labels[1] = LabelStatus::labeled_outlier;
  auto m = fit(X, req);
  CHECK(m.margin >= 0.0);
  CHECK(kkt_certificate(m, X) <= 1e-6);

  req.costs.kappa = 100.0;
  auto clamped = fit(X, req);
  CHECK(clamped.kappa_clamped);
  CHECK(clamped.effective_kappa < 100.0);
  CHECK(kkt_certificate(clamped, X) <= 1e-6);
}

TEST_CASE("fits are deterministic") {
  Rng rng(1);
  Matrix X = oracle::random_points(30, 3, rng);
  auto req = request(30, LearnerKind::svddneg, 1.5, 0.1);
  req.labels[4] = LabelStatus::labeled_outlier;
  auto a = fit(X, req), b = fit(X, req);
  CHECK(a.alpha == b.alpha);
  CHECK(a.radius_sq == b.radius_sq);
}

TEST_CASE("gram cache gives identical fits") {
  Rng rng(17);
  Matrix X = oracle::random_points(25, 2, rng);
  FitRequest req = request(25, LearnerKind::svdd, 2.0, 0.2);
  req.train_idx = {1, 4, 5, 9, 10, 11, 20, 24};
  req.labels.assign(req.train_idx.size(), LabelStatus::unlabeled);
  GramMatrix K(X, req.kernel);
  auto a = fit(X, req), b = fit(X, req, &K);
  CHECK(a.alpha == b.alpha);
}

TEST_CASE("argument and solver errors") {
  Rng rng(3);
  Matrix X = oracle::random_points(10, 2, rng);
  auto req = request(10, LearnerKind::svdd, 1.0, 0.5);
  SUBCASE("empty") {
    FitRequest e = req;
    e.train_idx.clear();
    e.labels.clear();
    CHECK_THROWS_AS(fit(X, e), Error);
  }
  SUBCASE("label mismatch") {
    req.labels.pop_back();
    CHECK_THROWS_AS(fit(X, req), Error);
  }
  SUBCASE("box too small to hold unit mass") {
    req.costs.c = req.costs.c1 = req.costs.c2 = 0.05;
    CHECK_THROWS_AS(fit(X, req), Error);
  }
  SUBCASE("step limit") {
    req.costs.c = req.costs.c1 = req.costs.c2 = 0.15;
    req.solver.max_steps = 1;
    try {
      fit(X, req);
      FAIL("expected a solver error");
    } catch (const Error& e) {
      CHECK(e.code() == ErrorCode::solver);
    }
  }
}

TEST_CASE("learner names") {
  for (auto k : {LearnerKind::svdd, LearnerKind::svddneg, LearnerKind::ssad}) CHECK(parse_learner(to_string(k)) == k);
  CHECK_THROWS_AS(parse_learner("ocsvm"), Error);
}
