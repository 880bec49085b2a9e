#include <doctest.h>

#include <algorithm>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>

#include "ocal/error.hpp"
#include "ocal/harness.hpp"
#include "ocal/rng.hpp"

using namespace ocal;
namespace fs = std::filesystem;

namespace {

ExperimentConfig blob_config(StrategyKind s, std::uint64_t seed = 1, std::size_t budget = 10) {
  ExperimentConfig c;
  c.dataset.name = "blob";
  c.dataset.blob = BlobSpec{60, 6, 2};
  c.dataset.seed = seed;
  c.pool.strategy = PoolStrategy::Pu;
  c.split.strategy = SplitStrategy::Sf;
  c.learner.kind = LearnerKind::svddneg;
  c.strategy.kind = s;
  c.metrics = {"mcc", "auc"};
  c.budget = budget;
  c.seed = seed;
  return c;
}

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::ostringstream os;
  os << in.rdbuf();
  return os.str();
}

fs::path scratch(const std::string& name) {
  fs::path p = fs::temp_directory_path() / ("ocal_test_" + name + "_" + std::to_string(::getpid()));
  fs::remove_all(p);
  fs::create_directories(p);
  return p;
}

GridSpec small_grid() {
  GridSpec g;
  g.name = "t";
  GridSpec::DatasetEntry a, b;
  a.ref.name = "a";
  a.ref.blob = BlobSpec{40, 4, 2};
  a.seeds = {1};
  b.ref.name = "b";
  b.ref.blob = BlobSpec{40, 4, 3};
  b.seeds = {2};
  g.datasets = {a, b};
  g.pools = {{PoolStrategy::Pu, 0.0}};
  g.splits = {{SplitStrategy::Sf, 1.0}};
  g.learners = {{LearnerKind::svddneg, 0.0, std::nullopt}};
  g.strategies = {StrategyKind::db, StrategyKind::rand};
  g.budget = 5;
  return g;
}

}  // namespace

TEST_CASE("oracle") {
  std::vector<Label> y{Label::inlier, Label::outlier, Label::inlier};
  Oracle exact(y);
  for (std::size_t i = 0; i < 3; ++i) CHECK(exact.ask(i) == y[i]);
  CHECK_THROWS_AS(Oracle(y, 1.0), Error);
  std::vector<Label> many(2000, Label::inlier);
  Oracle flip(many, 0.3, 3);
  int flipped = 0;
  for (std::size_t i = 0; i < many.size(); ++i) flipped += flip.ask(i) == Label::outlier;
  CHECK(flipped > 500);
  CHECK(flipped < 700);
  Oracle noisy(y, 0.5, 9);
  CHECK(noisy.ask(1) == noisy.ask(1));
}

TEST_CASE("zero budget records only the initial model") {
  auto r = run_experiment(blob_config(StrategyKind::db, 1, 0));
  CHECK(r.status == RunStatus::ok);
  REQUIRE(r.curve.records.size() == 1);
  CHECK(!r.curve.records[0].queried);
  CHECK(r.curve.queries() == 0);
}

TEST_CASE("one run per record, each query new") {
  auto r = run_experiment(blob_config(StrategyKind::db, 2, 15));
  CHECK(r.status == RunStatus::ok);
  REQUIRE(r.curve.records.size() == 16);
  std::vector<std::size_t> q;
  for (std::size_t t = 1; t < 16; ++t) {
    CHECK(r.curve.records[t].t == t);
    q.push_back(*r.curve.records[t].queried);
  }
  std::sort(q.begin(), q.end());
  CHECK(std::adjacent_find(q.begin(), q.end()) == q.end());
  CHECK(r.flags.size() == 16);
}

TEST_CASE("runs are deterministic") {
  for (StrategyKind s : {StrategyKind::rand, StrategyKind::bnc, StrategyKind::db}) {
    const auto cfg = blob_config(s, 5);
    auto a = run_experiment(cfg), b = run_experiment(cfg);
    CHECK(a.fingerprint == b.fingerprint);
    CHECK(serialize_curve(a) == serialize_curve(b));
    const fs::path d1 = scratch("det1"), d2 = scratch("det2");
    write_result(d1, a);
    write_result(d2, b);
    const std::string name = "cells/" + a.fingerprint + ".jsonl";
    CHECK(slurp(d1 / name) == slurp(d2 / name));
    CHECK(!slurp(d1 / name).empty());
    fs::remove_all(d1);
    fs::remove_all(d2);
  }
}

TEST_CASE("holdout rows are never queried") {
  auto cfg = blob_config(StrategyKind::db, 3, 20);
  cfg.split = {SplitStrategy::Sh, 0.7};
  cfg.pool = {PoolStrategy::Pn, 4};
  auto r = run_experiment(cfg);
  REQUIRE(r.status == RunStatus::ok);
  const Dataset d = materialize(cfg.dataset);
  const auto split = make_split(d, SplitStrategy::Sh, 0.7, derive_seed(cfg.seed, "split"));
  for (std::size_t t = 1; t < r.curve.records.size(); ++t)
    CHECK(std::binary_search(split.train_idx.begin(), split.train_idx.end(), *r.curve.records[t].queried));
}

TEST_CASE("outlier query ratio follows the ground truth") {
  auto cfg = blob_config(StrategyKind::rand_out, 4, 12);
  auto r = run_experiment(cfg);
  REQUIRE(r.status == RunStatus::ok);
  const Dataset d = materialize(cfg.dataset);
  double outliers = 0;
  for (std::size_t t = 1; t < r.curve.records.size(); ++t) {
    CHECK(*r.curve.records[t].label == d.y[*r.curve.records[t].queried]);
    outliers += d.y[*r.curve.records[t].queried] == Label::outlier;
  }
  CHECK(summarize(r.curve, 0, parse_summary("roq")) == outliers / 12.0);
}

TEST_CASE("infeasible and failing cells") {
  auto pu_mm = blob_config(StrategyKind::mm);
  auto r = run_experiment(pu_mm);
  CHECK(r.status == RunStatus::infeasible);
  CHECK(!r.error.empty());
  CHECK(r.curve.records.empty());

  auto big = blob_config(StrategyKind::db, 1, 1000);
  CHECK(run_experiment(big).status == RunStatus::infeasible);

  auto missing = blob_config(StrategyKind::db);
  missing.dataset.blob.reset();
  missing.dataset.path = "/nonexistent/file.csv";
  CHECK(run_experiment(missing).status == RunStatus::failed);
}

TEST_CASE("grid expansion") {
  auto g = small_grid();
  auto e = expand_grid(g);
  CHECK(e.configs.size() == 4);
  CHECK(e.exclusions.empty());

  g.splits.push_back({SplitStrategy::Si, 1.0});
  g.strategies.push_back(StrategyKind::mm);
  e = expand_grid(g);
  // Sf keeps db and rand; Si and mm are rejected under Pu.
  CHECK(e.configs.size() == 4);
  CHECK(e.exclusions.size() == 8);
  bool saw_si = false, saw_mm = false;
  for (const auto& x : e.exclusions) {
    CHECK(!x.reason.empty());
    saw_si |= x.config.split.strategy == SplitStrategy::Si;
    saw_mm |= x.config.strategy.kind == StrategyKind::mm;
  }
  CHECK(saw_si);
  CHECK(saw_mm);
}

TEST_CASE("grid run, store and aggregation") {
  const fs::path out = scratch("grid");
  auto g = small_grid();
  g.strategies.push_back(StrategyKind::mm);
  auto outcome = run_grid(g, out, 2);
  CHECK(outcome.cells == 4);
  CHECK(outcome.failed == 0);
  CHECK(outcome.exclusions.size() == 2);
  CHECK(fs::exists(out / "manifest.json"));

  auto results = load_results(out);
  CHECK(results.size() == 6);
  for (const auto& r : results) {
    if (r.status != RunStatus::ok) continue;
    auto again = read_result(out, r.fingerprint);
    CHECK(serialize_curve(again) == serialize_curve(r));
    CHECK(again.curve.records.size() == 6);
  }

  auto table = aggregate(results, {"strategy"}, Statistic::median, parse_summary_list("qr,sq"), "mcc");
  REQUIRE(table.rows.size() == 3);
  CHECK(table.columns.front() == "strategy");
  for (const auto& row : table.rows)
    if (row[0] == "mm") CHECK(row[1] == "-");
  CHECK(table.to_tsv().find("strategy\t") == 0);

  // Re-running a cell lands on the same bytes.
  const auto first = results.front().status == RunStatus::ok ? results.front() : results.back();
  const auto before = slurp(out / "cells" / (first.fingerprint + ".jsonl"));
  write_result(out, run_experiment(first.config));
  CHECK(slurp(out / "cells" / (first.fingerprint + ".jsonl")) == before);
  fs::remove_all(out);
}

TEST_CASE("aggregation statistics") {
  CHECK(median({0.1, 0.5, 0.9}) == 0.5);
  CHECK(median({0.9, 0.1}) == doctest::Approx(0.5));
  CHECK(median({0.3}) == 0.3);
  CHECK(mean({1.0, 2.0, 6.0}) == 3.0);
  CHECK(parse_statistic("mean") == Statistic::mean);
  CHECK_THROWS_AS(parse_statistic("mode"), Error);

  std::vector<ResultRecord> rs;
  for (double end : {0.1, 0.5, 0.9}) {
    ResultRecord r;
    r.config = blob_config(StrategyKind::db);
    r.curve.metrics = {"mcc"};
    r.curve.records = {CurveRecord{0, std::nullopt, std::nullopt, {0.0}},
                       CurveRecord{1, 3, Label::inlier, {end}}};
    rs.push_back(r);
  }
  ResultRecord infeasible;
  infeasible.config = blob_config(StrategyKind::mm);
  infeasible.status = RunStatus::infeasible;
  rs.push_back(infeasible);
  auto t = aggregate(rs, {"strategy"}, Statistic::median, {parse_summary("qr")}, "mcc");
  REQUIRE(t.rows.size() == 2);
  CHECK(t.rows[0][0] == "db");
  CHECK(t.rows[0][1] == "0.5000");
  CHECK(t.rows[1][1] == "-");
}

TEST_CASE("curve emission") {
  const fs::path out = scratch("curves");
  auto cfg = blob_config(StrategyKind::db, 6, 50);
  cfg.dataset.blob = BlobSpec{80, 6, 2};
  auto r = run_experiment(cfg);
  auto cfg2 = cfg;
  cfg2.strategy.kind = StrategyKind::rand;
  auto r2 = run_experiment(cfg2);
  REQUIRE(r.status == RunStatus::ok);
  auto files = emit_curves({r, r2}, out);
  CHECK(files.size() == 5);  // two strategies times two metrics, plus the summary
  const fs::path mcc = out / (r.fingerprint + "_mcc.csv");
  REQUIRE(fs::exists(mcc));
  const std::string text = slurp(mcc);
  CHECK(std::count(text.begin(), text.end(), '\n') == 52);  // header plus init plus 50
  CHECK(text.rfind("iteration,value,queried_label\n", 0) == 0);
  CHECK(fs::exists(out / "summary.csv"));

  const fs::path out2 = scratch("curves2");
  emit_curves({r, r2}, out2);
  for (const auto& f : files) CHECK(slurp(f) == slurp(out2 / f.filename()));
  fs::remove_all(out);
  fs::remove_all(out2);
}

TEST_CASE("config round trip and fingerprint") {
  auto c = blob_config(StrategyKind::nb, 11);
  c.prior_inlier = 0.93;
  c.learner = {LearnerKind::ssad, 0.5, 0.2};
  c.split = {SplitStrategy::Sh, 0.75};
  auto back = config_from_json(to_json(c));
  CHECK(canonical_string(back) == canonical_string(c));
  CHECK(fingerprint(back) == fingerprint(c));
  CHECK(fingerprint(c).size() == 16);

  auto timed = c;
  timed.record_timing = true;
  timed.audit = true;
  CHECK(fingerprint(timed) == fingerprint(c));
  auto other = c;
  other.seed = 12;
  CHECK(fingerprint(other) != fingerprint(c));

  CHECK(fnv1a64("") == 0xcbf29ce484222325ULL);
  CHECK(fnv1a64("a") == 0xaf63dc4c8601ec8cULL);

  auto g = small_grid();
  auto g2 = grid_from_json(to_json(g));
  CHECK(expand_grid(g2).configs.size() == 4);
  CHECK_THROWS_AS(config_from_json(json::parse(R"({"learner": 3})")), Error);
}

TEST_CASE("worker count") {
  ::setenv("OCAL_WORKERS", "3", 1);
  CHECK(resolve_workers(8) == 3);
  ::unsetenv("OCAL_WORKERS");
  CHECK(resolve_workers(2) == 2);
  CHECK(resolve_workers(0) >= 1);
}

TEST_CASE("run status names") {
  for (auto s : {RunStatus::ok, RunStatus::truncated, RunStatus::failed, RunStatus::infeasible})
    CHECK(parse_run_status(to_string(s)) == s);
}
