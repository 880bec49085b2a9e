#include <doctest.h>

#include <cmath>

#include "ocal/error.hpp"
#include "ocal/metrics.hpp"
#include "oracles.hpp"

using namespace ocal;

namespace {

constexpr Label I = Label::inlier, O = Label::outlier;

ConfusionMatrix random_cm(Rng& rng) {
  return {rng.below(50), rng.below(50), rng.below(50), rng.below(50)};
}

ProgressCurve curve(std::vector<double> qm, std::vector<Label> labels = {}) {
  ProgressCurve c;
  c.metrics = {"mcc"};
  for (std::size_t t = 0; t < qm.size(); ++t) {
    CurveRecord r;
    r.t = t;
    r.values = {qm[t]};
    if (t > 0) {
      r.queried = t - 1;
      r.label = labels.empty() ? I : labels[t - 1];
    }
    c.records.push_back(r);
  }
  return c;
}

}  // namespace

TEST_CASE("confusion") {
  std::vector<Label> y{O, O, I, I, I}, p{O, I, O, I, I};
  auto c = confusion(y, p);
  CHECK(c.tp == 1);
  CHECK(c.fn == 1);
  CHECK(c.fp == 1);
  CHECK(c.tn == 2);
  std::vector<Label> shorter{O};
  CHECK_THROWS_AS(confusion(y, shorter), Error);
}

TEST_CASE("mcc and kappa") {
  ConfusionMatrix perfect{5, 0, 95, 0}, inverted{0, 95, 0, 5};
  CHECK(mcc(perfect) == 1.0);
  CHECK(kappa(perfect) == 1.0);
  CHECK(mcc(inverted) == doctest::Approx(-1.0));
  // Worked example, evaluated by hand from the closed forms.
  ConfusionMatrix cm{4, 1, 90, 5};
  CHECK(mcc(cm) == doctest::Approx(0.569167).epsilon(1e-6));
  CHECK(kappa(cm) == doctest::Approx(0.541985).epsilon(1e-6));
  // Predictions independent of the truth.
  ConfusionMatrix chance{2, 8, 72, 18};
  CHECK(kappa(chance) == doctest::Approx(0.0).epsilon(1e-15));
  CHECK(mcc(chance) == doctest::Approx(0.0).epsilon(1e-15));
  // Degenerate marginals.
  CHECK(mcc(ConfusionMatrix{0, 0, 10, 0}) == 0.0);
  CHECK(kappa(ConfusionMatrix{0, 0, 10, 0}) == 0.0);
  CHECK(mcc(ConfusionMatrix{}) == 0.0);
}

TEST_CASE("mcc and kappa against direct formulas") {
  Rng rng(77);
  for (int rep = 0; rep < 100; ++rep) {
    auto cm = random_cm(rng);
    CHECK(mcc(cm) == doctest::Approx(oracle::mcc_direct(cm)).epsilon(1e-14));
    CHECK(kappa(cm) == doctest::Approx(oracle::kappa_direct(cm)).epsilon(1e-14));
    // Swapping the roles of the classes changes nothing.
    ConfusionMatrix sw{cm.tn, cm.fn, cm.tp, cm.fp};
    CHECK(mcc(sw) == doctest::Approx(mcc(cm)).epsilon(1e-14));
    CHECK(kappa(sw) == doctest::Approx(kappa(cm)).epsilon(1e-14));
  }
}

TEST_CASE("auc") {
  std::vector<Label> y{I, I, O, I, O};
  std::vector<double> good{0.1, 0.2, 0.9, 0.3, 0.8}, bad{0.9, 0.8, 0.1, 0.7, 0.2};
  CHECK(auc(good, y) == 1.0);
  CHECK(auc(bad, y) == 0.0);
  std::vector<double> flat(5, 0.4);
  CHECK(auc(flat, y) == 0.5);
  std::vector<Label> one_class(5, I);
  CHECK(auc(good, one_class) == 0.5);

  Rng rng(5);
  for (int rep = 0; rep < 100; ++rep) {
    std::vector<double> s(20);
    std::vector<Label> t(20);
    for (std::size_t i = 0; i < 20; ++i) {
      s[i] = std::round(rng.uniform() * 10.0) / 10.0;  // coarse grid forces ties
      t[i] = rng.uniform() < 0.3 ? O : I;
    }
    t[0] = O;
    t[1] = I;
    CHECK(auc(s, t) == oracle::auc_pairs(s, t));
    std::vector<double> g(s), neg(s);
    for (double& v : g) v = std::exp(2.0 * v);
    for (double& v : neg) v = -v;
    CHECK(auc(g, t) == auc(s, t));
    CHECK(auc(s, t) + auc(neg, t) == doctest::Approx(1.0).epsilon(1e-15));
  }
}

TEST_CASE("partial auc") {
  std::vector<Label> y{I, I, O, I, O};
  std::vector<double> good{0.1, 0.2, 0.9, 0.3, 0.8};
  for (double c : {0.05, 0.1, 0.5, 1.0}) CHECK(pauc(good, y, c) == doctest::Approx(1.0));
  CHECK_THROWS_AS(pauc(good, y, 0.0), Error);
  CHECK_THROWS_AS(pauc(good, y, 1.5), Error);

  Rng rng(6);
  for (int rep = 0; rep < 100; ++rep) {
    std::vector<double> s(20);
    std::vector<Label> t(20);
    for (std::size_t i = 0; i < 20; ++i) {
      s[i] = std::round(rng.uniform() * 20.0) / 20.0;
      t[i] = rng.uniform() < 0.4 ? O : I;
    }
    t[0] = O;
    t[1] = I;
    CHECK(std::abs(pauc(s, t, 1.0) - auc(s, t)) <= 1e-12);
    for (double c : {0.1, 0.25, 0.6}) CHECK(std::abs(pauc(s, t, c) - oracle::pauc_sweep(s, t, c)) <= 1e-12);
  }
}

TEST_CASE("metric registry") {
  CHECK(parse_metric("mcc").kind == MetricSpec::Kind::mcc);
  CHECK(parse_metric("pauc").fpr_max == 0.1);
  CHECK(parse_metric("pauc:0.2").fpr_max == 0.2);
  CHECK(parse_metric(parse_metric("pauc:0.2").name()).fpr_max == 0.2);
  CHECK_THROWS_AS(parse_metric("f1"), Error);
  CHECK_THROWS_AS(parse_metric("pauc:x"), Error);

  std::vector<Label> y{I, O, I};
  std::vector<double> f{-0.5, 0.3, 1e-9};
  CHECK(evaluate_metric(parse_metric("mcc"), f, y) == 1.0);
  CHECK(evaluate_metric(parse_metric("auc"), f, y) == 1.0);
}

TEST_CASE("curve summaries") {
  const std::vector<double> qm{0.1, 0.3, 0.2, 0.5};
  auto c = curve(qm, {O, I, O});
  CHECK(summarize(c, 0, parse_summary("sq")) == 0.1);
  CHECK(summarize(c, 0, parse_summary("ru:1")) == doctest::Approx(0.2).epsilon(1e-15));
  CHECK(summarize(c, 0, parse_summary("qr")) == doctest::Approx(0.4).epsilon(1e-15));
  CHECK(summarize(c, 0, parse_summary("aeq:2")) == doctest::Approx(0.35).epsilon(1e-15));
  CHECK(summarize(c, 0, parse_summary("roq")) == doctest::Approx(2.0 / 3.0));
  CHECK(summarize(c, 0, parse_summary("aeq:1")) == qm.back());
  CHECK(summarize(c, 0, parse_summary("ru:3")) == summarize(c, 0, parse_summary("qr")));

  auto ramp = curve({0.0, 0.2, 0.4, 0.6, 0.8, 1.0});
  CHECK(summarize(ramp, 0, parse_summary("ls:2")) == doctest::Approx(1.0).epsilon(1e-14));
  CHECK(learning_stability(std::vector<double>{0.0, 0.2, 0.4, 0.6, 0.8, 1.0}, 2, 5) ==
        doctest::Approx(1.0).epsilon(1e-14));

  auto flat = curve({0.4, 0.4, 0.4});
  CHECK(summarize(flat, 0, parse_summary("ls:1")) == 0.0);
  auto worse = curve({0.5, 0.4, 0.3});
  CHECK(summarize(worse, 0, parse_summary("ls:1")) == 0.0);
  CHECK(summarize(worse, 0, parse_summary("qr")) == doctest::Approx(-0.2));

  CHECK(quality_range(qm, 1, 2) == doctest::Approx(-0.1));
  CHECK_THROWS_AS(summarize(c, 0, parse_summary("aeq:4")), Error);
  CHECK_THROWS_AS(summarize(ProgressCurve{}, 0, parse_summary("sq")), Error);
  CHECK(ratio_of_outlier_queries(curve({0.3})) == 0.0);
}

TEST_CASE("summary registry") {
  auto list = parse_summary_list("sq,ru:5,qr,aeq:5,ls:5,roq");
  REQUIRE(list.size() == 6);
  CHECK(list[1].kind == SummarySpec::Kind::ru);
  CHECK(list[1].k == 5);
  for (const auto& s : list) CHECK(parse_summary(s.name()).name() == s.name());
  CHECK_THROWS_AS(parse_summary("ru"), Error);
  CHECK_THROWS_AS(parse_summary("median"), Error);
}
