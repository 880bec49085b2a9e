#include "ocal/harness.hpp"

#include <algorithm>
#include <atomic>
#include <chrono>
#include <cstdlib>
#include <thread>

#include "ocal/error.hpp"
#include "ocal/rng.hpp"

namespace ocal {

Oracle::Oracle(std::vector<Label> truth, double noise_rate, std::uint64_t seed)
    : truth_(std::move(truth)), noise_(noise_rate), seed_(seed) {
  if (!(noise_rate >= 0.0 && noise_rate < 1.0)) raise(ErrorCode::invalid_argument, "oracle noise must lie in [0,1)");
}

Label Oracle::ask(std::size_t i) const {
  Label l = truth_.at(i);
  if (noise_ > 0.0 && Rng(derive_seed(seed_, "oracle", i)).bernoulli(noise_))
    l = l == Label::inlier ? Label::outlier : Label::inlier;
  return l;
}

const char* to_string(RunStatus s) noexcept {
  switch (s) {
    case RunStatus::ok: return "ok";
    case RunStatus::truncated: return "truncated";
    case RunStatus::failed: return "failed";
    case RunStatus::infeasible: return "infeasible";
  }
  return "?";
}

RunStatus parse_run_status(std::string_view s) {
  for (auto r : {RunStatus::ok, RunStatus::truncated, RunStatus::failed, RunStatus::infeasible})
    if (s == to_string(r)) return r;
  raise(ErrorCode::parse, "unknown run status '" + std::string(s) + "'");
}

Dataset materialize(const DatasetRef& ref, const std::filesystem::path& base_dir) {
  Dataset d;
  if (ref.blob) {
    d = make_blob_dataset(*ref.blob, ref.seed, ref.name);
  } else {
    std::filesystem::path p(ref.path);
    if (p.is_relative() && !base_dir.empty()) p = base_dir / p;
    d = load_csv(p);
    d.name = ref.name;
  }
  if (ref.outlier_rate) {
    auto warnings = d.warnings;
    d = resample(d, *ref.outlier_rate, ref.max_n, ref.seed);
    d.warnings.insert(d.warnings.begin(), warnings.begin(), warnings.end());
  }
  return d;
}

namespace {

std::string key_of(const DatasetRef& ref) { return to_json(ref).dump(); }

}  // namespace

std::shared_ptr<const Dataset> RunCache::dataset(const DatasetRef& ref) {
  const std::string key = key_of(ref);
  {
    std::lock_guard lock(mu_);
    if (auto it = datasets_.find(key); it != datasets_.end()) return it->second;
  }
  auto d = std::make_shared<const Dataset>(materialize(ref, base_dir_));
  std::lock_guard lock(mu_);
  return datasets_.emplace(key, d).first->second;
}

std::shared_ptr<const GramMatrix> RunCache::gram(const DatasetRef& ref, const Dataset& d, double gamma) {
  json k{{"d", key_of(ref)}, {"g", gamma}};
  const std::string key = k.dump();
  {
    std::lock_guard lock(mu_);
    if (auto it = grams_.find(key); it != grams_.end()) return it->second;
  }
  auto g = std::make_shared<const GramMatrix>(d.X, KernelConfig{gamma});
  std::lock_guard lock(mu_);
  return grams_.emplace(key, g).first->second;
}

std::shared_ptr<const NeighborIndex> RunCache::neighbors(const DatasetRef& ref, const Dataset& d, std::size_t k) {
  const std::string key = key_of(ref) + "#" + std::to_string(k);
  {
    std::lock_guard lock(mu_);
    if (auto it = neighbors_.find(key); it != neighbors_.end()) return it->second;
  }
  auto n = std::make_shared<const NeighborIndex>(d.X, k);
  std::lock_guard lock(mu_);
  return neighbors_.emplace(key, n).first->second;
}

namespace {

IndexSet intersect(const IndexSet& a, const IndexSet& b) {
  IndexSet out;
  std::set_intersection(a.begin(), a.end(), b.begin(), b.end(), std::back_inserter(out));
  return out;
}

IndexSet all_rows(std::size_t n) {
  IndexSet v(n);
  for (std::size_t i = 0; i < n; ++i) v[i] = i;
  return v;
}

json audit_dump(const TrainedModel& m) {
  return json{{"alpha", m.alpha},
              {"signs", m.signs},
              {"train_idx", m.train_idx},
              {"radius_sq", m.radius_sq},
              {"margin", m.margin},
              {"kappa", m.effective_kappa},
              {"kappa_clamped", m.kappa_clamped},
              {"gamma", m.kernel.gamma},
              {"costs", {{"c", m.costs.c}, {"c1", m.costs.c1}, {"c2", m.costs.c2}}},
              {"kkt_residual", m.kkt_residual},
              {"solver_steps", m.solver_steps}};
}

struct Cell {
  const ExperimentConfig& cfg;
  const Dataset& d;
  const GramMatrix& gram;
  const SplitAssignment& split;
  const IndexSet& eval_idx;
  std::vector<Label> eval_truth;
  std::vector<MetricSpec> metrics;

  TrainedModel fit_model(const PoolState& pool) const {
    FitRequest req;
    req.train_idx = fit_indices(split, pool);
    if (req.train_idx.empty()) raise(ErrorCode::infeasible, "empty training set");
    req.labels.reserve(req.train_idx.size());
    for (std::size_t i : req.train_idx) req.labels.push_back(pool.status(i));
    req.learner = cfg.learner.kind;
    req.kernel = gram.config();
    req.costs = cost_tax(req.train_idx.size(), cfg.expected_outlier_fraction);
    if (cfg.learner.c2) req.costs.c2 = *cfg.learner.c2;
    req.costs.kappa = cfg.learner.kind == LearnerKind::ssad ? cfg.learner.kappa : 0.0;
    req.solver = cfg.solver;
    return fit(d.X, req, &gram);
  }

  std::vector<double> evaluate(std::span<const double> f) const {
    std::vector<double> fe;
    fe.reserve(eval_idx.size());
    for (std::size_t i : eval_idx) fe.push_back(f[i]);
    std::vector<double> out;
    for (const auto& m : metrics) out.push_back(evaluate_metric(m, fe, eval_truth));
    return out;
  }
};

}  // namespace

ResultRecord run_experiment(const ExperimentConfig& cfg, RunCache* cache) {
  using clock = std::chrono::steady_clock;
  ResultRecord r;
  r.config = cfg;
  r.fingerprint = fingerprint(cfg);
  r.curve.metrics = cfg.metrics;

  RunCache local;
  RunCache& rc = cache ? *cache : local;

  try {
    auto dp = rc.dataset(cfg.dataset);
    const Dataset& d = *dp;
    r.warnings = d.warnings;
    const std::size_t N = d.size();

    std::vector<MetricSpec> metrics;
    for (const auto& m : cfg.metrics) metrics.push_back(parse_metric(m));

    const double gamma = resolve_gamma(cfg.gamma, d.X);
    auto gp = rc.gram(cfg.dataset, d, gamma);

    const SplitAssignment split =
        make_split(d, cfg.split.strategy, cfg.split.train_fraction, derive_seed(cfg.seed, "split"));
    const IndexSet within = cfg.split.strategy == SplitStrategy::Sh ? split.train_idx : IndexSet{};
    PoolState pool = make_initial_pool(d, cfg.pool.strategy, cfg.pool.param, derive_seed(cfg.seed, "pool"), within);

    const Feasibility gate =
        feasibility_gate(cfg.strategy.kind, pool.count(LabelStatus::labeled_inlier),
                         pool.count(LabelStatus::labeled_outlier), d.dims(), cfg.pool.strategy, cfg.split.strategy,
                         cfg.learner.kind);
    if (!gate.ok) raise(ErrorCode::infeasible, gate.reason);
    if (cfg.budget + pool.labeled_count() > N)
      raise(ErrorCode::infeasible, "budget plus initial pool exceeds the number of observations");

    StrategyConfig scfg = cfg.strategy;
    scfg.prior_inlier = cfg.prior_inlier ? *cfg.prior_inlier : 1.0 - d.outlier_rate();
    scfg.validate();

    std::shared_ptr<const NeighborIndex> nn;
    if (scfg.kind == StrategyKind::nb || scfg.kind == StrategyKind::bnc) nn = rc.neighbors(cfg.dataset, d, scfg.k_nn);

    const IndexSet eval_idx = cfg.split.strategy == SplitStrategy::Sh ? split.test_idx : all_rows(N);
    const IndexSet& domain = split.train_idx;
    Cell cell{cfg, d, *gp, split, eval_idx, {}, metrics};
    for (std::size_t i : eval_idx) cell.eval_truth.push_back(d.y[i]);

    const Oracle oracle(d.y, cfg.oracle_noise, derive_seed(cfg.seed, "oracle"));

    auto t0 = clock::now();
    TrainedModel model = cell.fit_model(pool);
    std::vector<double> f = decision_values(model, *gp);
    r.curve.records.push_back(CurveRecord{0, std::nullopt, std::nullopt, cell.evaluate(f)});
    r.flags.emplace_back();
    if (cfg.audit) r.audit.push_back(audit_dump(model));
    if (cfg.record_timing)
      r.timing_ms.push_back(std::chrono::duration<double, std::milli>(clock::now() - t0).count());

    for (std::size_t t = 1; t <= cfg.budget; ++t) {
      t0 = clock::now();
      const IndexSet eligible = intersect(pool.unlabeled(), domain);
      if (eligible.empty()) {
        r.status = RunStatus::truncated;
        r.warnings.push_back("pool exhausted after " + std::to_string(t - 1) + " queries");
        break;
      }
      StrategyContext ctx{d.X, *gp, pool, eligible, domain, f, nn.get(), derive_seed(cfg.seed, "query", t)};
      const InformativenessVector v = score(scfg, ctx);
      const std::size_t q = select_query(v);
      const Label label = oracle.ask(q);
      pool.assign(q, label);

      model = cell.fit_model(pool);
      f = decision_values(model, *gp);
      r.curve.records.push_back(CurveRecord{t, q, label, cell.evaluate(f)});
      auto& notes = r.flags.emplace_back();
      if (v.exploratory) notes.push_back("exploratory");
      if (v.fallback) notes.push_back("fallback");
      if (v.modified) notes.push_back("modified");
      if (cfg.audit) r.audit.push_back(audit_dump(model));
      if (cfg.record_timing)
        r.timing_ms.push_back(std::chrono::duration<double, std::milli>(clock::now() - t0).count());
    }
  } catch (const Error& e) {
    r.status = e.code() == ErrorCode::infeasible && r.curve.records.empty() ? RunStatus::infeasible : RunStatus::failed;
    r.error = std::string(to_string(e.code())) + ": " + e.what();
  } catch (const std::exception& e) {
    r.status = RunStatus::failed;
    r.error = std::string("internal: ") + e.what();
  }
  return r;
}

GridExpansion expand_grid(const GridSpec& spec, RunCache* cache) {
  RunCache local(spec.base_dir);
  RunCache& rc = cache ? *cache : local;
  GridExpansion out;
  const std::vector<GammaHeuristic> gammas = spec.gammas.empty() ? std::vector<GammaHeuristic>{{}} : spec.gammas;

  for (const auto& entry : spec.datasets) {
    for (std::uint64_t dseed : entry.seeds) {
      DatasetRef ref = entry.ref;
      ref.seed = dseed;
      std::shared_ptr<const Dataset> d;
      std::string load_error;
      try {
        d = rc.dataset(ref);
      } catch (const Error& e) {
        load_error = e.what();
      }
      for (const auto& pool : spec.pools)
        for (const auto& split : spec.splits)
          for (const auto& learner : spec.learners)
            for (const auto& gamma : gammas)
              for (StrategyKind s : spec.strategies)
                for (std::uint64_t seed : spec.seeds) {
                  ExperimentConfig c;
                  c.dataset = ref;
                  c.pool = pool;
                  c.split = split;
                  c.learner = learner;
                  c.gamma = gamma;
                  c.strategy = spec.strategy_params;
                  c.strategy.kind = s;
                  c.prior_inlier = spec.prior_inlier;
                  c.metrics = spec.metrics;
                  c.budget = spec.budget;
                  c.seed = seed;
                  c.expected_outlier_fraction = spec.expected_outlier_fraction;
                  c.oracle_noise = spec.oracle_noise;
                  c.solver = spec.solver;
                  c.audit = spec.audit;
                  c.record_timing = spec.record_timing;

                  if (!d) {
                    out.exclusions.push_back({c, "dataset unavailable: " + load_error});
                    continue;
                  }
                  std::size_t n_in = 0, n_out = 0, labeled = 0;
                  try {
                    auto sp = make_split(*d, split.strategy, split.train_fraction, derive_seed(seed, "split"));
                    IndexSet within = split.strategy == SplitStrategy::Sh ? sp.train_idx : IndexSet{};
                    PoolState p = make_initial_pool(*d, pool.strategy, pool.param, derive_seed(seed, "pool"), within);
                    n_in = p.count(LabelStatus::labeled_inlier);
                    n_out = p.count(LabelStatus::labeled_outlier);
                    labeled = p.labeled_count();
                  } catch (const Error& e) {
                    out.exclusions.push_back({c, e.what()});
                    continue;
                  }
                  const Feasibility g =
                      feasibility_gate(s, n_in, n_out, d->dims(), pool.strategy, split.strategy, learner.kind);
                  if (!g.ok) {
                    out.exclusions.push_back({c, g.reason});
                  } else if (c.budget + labeled > d->size()) {
                    out.exclusions.push_back({c, "budget plus initial pool exceeds the number of observations"});
                  } else {
                    out.configs.push_back(std::move(c));
                  }
                }
    }
  }
  return out;
}

std::size_t resolve_workers(std::size_t requested) {
  if (const char* env = std::getenv("OCAL_WORKERS"); env && *env) {
    char* end = nullptr;
    const unsigned long v = std::strtoul(env, &end, 10);
    if (end && *end == '\0' && v > 0) return v;
  }
  if (requested > 0) return requested;
  return std::max(1u, std::thread::hardware_concurrency());
}

GridOutcome run_grid(const GridSpec& spec, const std::filesystem::path& out_dir, std::size_t workers) {
  RunCache cache(spec.base_dir);
  GridExpansion ex = expand_grid(spec, &cache);
  std::filesystem::create_directories(out_dir / "cells");

  std::vector<ResultRecord> results(ex.configs.size());
  std::atomic<std::size_t> next{0};
  std::mutex err_mu;
  std::string io_error;
  auto work = [&] {
    for (std::size_t i = next++; i < ex.configs.size(); i = next++) {
      results[i] = run_experiment(ex.configs[i], &cache);
      try {
        write_result(out_dir, results[i]);
      } catch (const std::exception& e) {
        std::lock_guard lock(err_mu);
        io_error = e.what();
      }
    }
  };
  const std::size_t n = std::min(resolve_workers(workers), std::max<std::size_t>(ex.configs.size(), 1));
  std::vector<std::thread> pool;
  for (std::size_t w = 1; w < n; ++w) pool.emplace_back(work);
  work();
  for (auto& t : pool) t.join();
  if (!io_error.empty()) raise(ErrorCode::io, io_error);

  write_manifest(out_dir, spec, results, ex.exclusions);
  GridOutcome o;
  o.cells = results.size();
  for (const auto& r : results) {
    if (r.status == RunStatus::failed || r.status == RunStatus::infeasible) ++o.failed;
    if (r.status == RunStatus::truncated) ++o.truncated;
  }
  o.exclusions = std::move(ex.exclusions);
  return o;
}

}  // namespace ocal
