#include "ocal/config.hpp"

#include <cstdio>
#include <fstream>

#include "ocal/error.hpp"

namespace ocal {

namespace {

template <typename T>
T get_or(const json& j, const char* key, T fallback) {
  if (!j.contains(key) || j.at(key).is_null()) return fallback;
  return j.at(key).get<T>();
}

const char* px_name(PxSupport p) { return p == PxSupport::all ? "all" : "unlabeled"; }

PxSupport parse_px(const std::string& s) {
  if (s == "all") return PxSupport::all;
  if (s == "unlabeled") return PxSupport::unlabeled;
  raise(ErrorCode::invalid_argument, "px_support must be 'all' or 'unlabeled'");
}

json blob_json(const BlobSpec& b) {
  return json{{"kind", "blob"},
              {"inliers", b.inliers},
              {"outliers", b.outliers},
              {"dims", b.dims},
              {"spread", b.spread},
              {"outlier_box", b.outlier_box},
              {"min_outlier_distance", b.min_outlier_distance}};
}

BlobSpec blob_from_json(const json& j) {
  if (get_or<std::string>(j, "kind", "blob") != "blob")
    raise(ErrorCode::invalid_argument, "only synthetic kind 'blob' is supported");
  BlobSpec b;
  b.inliers = get_or<std::size_t>(j, "inliers", b.inliers);
  b.outliers = get_or<std::size_t>(j, "outliers", b.outliers);
  b.dims = get_or<std::size_t>(j, "dims", b.dims);
  b.spread = get_or<double>(j, "spread", b.spread);
  b.outlier_box = get_or<double>(j, "outlier_box", b.outlier_box);
  b.min_outlier_distance = get_or<double>(j, "min_outlier_distance", b.min_outlier_distance);
  return b;
}

json pool_json(const PoolSpec& p) { return json{{"strategy", to_string(p.strategy)}, {"param", p.param}}; }
PoolSpec pool_from_json(const json& j) {
  PoolSpec p;
  p.strategy = parse_pool_strategy(j.at("strategy").get<std::string>());
  p.param = get_or<double>(j, "param", 0.0);
  return p;
}

json split_json(const SplitSpec& s) {
  return json{{"strategy", to_string(s.strategy)},
              {"train_fraction", s.strategy == SplitStrategy::Sh ? s.train_fraction : 1.0}};
}
SplitSpec split_from_json(const json& j) {
  SplitSpec s;
  s.strategy = parse_split_strategy(j.at("strategy").get<std::string>());
  s.train_fraction = get_or<double>(j, "train_fraction", 0.8);
  if (s.strategy != SplitStrategy::Sh) s.train_fraction = 1.0;
  return s;
}

json learner_json(const LearnerSpec& l) {
  json j{{"name", to_string(l.kind)}, {"kappa", l.kind == LearnerKind::ssad ? l.kappa : 0.0}};
  j["c2"] = l.c2 ? json(*l.c2) : json(nullptr);
  return j;
}
LearnerSpec learner_from_json(const json& j) {
  LearnerSpec l;
  l.kind = parse_learner(j.at("name").get<std::string>());
  l.kappa = get_or<double>(j, "kappa", l.kind == LearnerKind::ssad ? 1.0 : 0.0);
  if (l.kind != LearnerKind::ssad) l.kappa = 0.0;
  if (j.contains("c2") && !j.at("c2").is_null()) l.c2 = j.at("c2").get<double>();
  return l;
}

json strategy_params_json(const StrategyConfig& s) {
  return json{{"eta_nb", s.eta_nb},   {"k_nn", s.k_nn},   {"eta_bnc", s.eta_bnc},
              {"p_bnc", s.p_bnc},     {"px_support", px_name(s.px_support)}};
}
void strategy_params_from_json(const json& j, StrategyConfig& s) {
  s.eta_nb = get_or<double>(j, "eta_nb", s.eta_nb);
  s.k_nn = get_or<std::size_t>(j, "k_nn", s.k_nn);
  s.eta_bnc = get_or<double>(j, "eta_bnc", s.eta_bnc);
  s.p_bnc = get_or<double>(j, "p_bnc", s.p_bnc);
  s.px_support = parse_px(get_or<std::string>(j, "px_support", "all"));
}

json solver_json(const SolverOptions& s) { return json{{"tolerance", s.tolerance}, {"max_steps", s.max_steps}}; }
SolverOptions solver_from_json(const json& j) {
  SolverOptions s;
  s.tolerance = get_or<double>(j, "tolerance", s.tolerance);
  s.max_steps = get_or<std::size_t>(j, "max_steps", s.max_steps);
  return s;
}

}  // namespace

json to_json(const DatasetRef& d) {
  json j{{"name", d.name}, {"seed", d.seed}, {"max_n", d.max_n}};
  j["path"] = d.path.empty() ? json(nullptr) : json(d.path);
  j["synthetic"] = d.blob ? blob_json(*d.blob) : json(nullptr);
  j["outlier_rate"] = d.outlier_rate ? json(*d.outlier_rate) : json(nullptr);
  return j;
}

DatasetRef dataset_ref_from_json(const json& j) {
  DatasetRef d;
  d.name = get_or<std::string>(j, "name", "");
  d.path = get_or<std::string>(j, "path", "");
  if (j.contains("synthetic") && !j.at("synthetic").is_null()) d.blob = blob_from_json(j.at("synthetic"));
  if (d.path.empty() == !d.blob.has_value())
    raise(ErrorCode::invalid_argument, "dataset '" + d.name + "' needs exactly one of 'path' or 'synthetic'");
  if (j.contains("resample") && !j.at("resample").is_null()) {
    const auto& r = j.at("resample");
    d.outlier_rate = get_or<double>(r, "outlier_rate", 0.05);
    d.max_n = get_or<std::size_t>(r, "max_n", 1000);
  }
  if (j.contains("outlier_rate") && !j.at("outlier_rate").is_null()) d.outlier_rate = j.at("outlier_rate").get<double>();
  d.max_n = get_or<std::size_t>(j, "max_n", d.max_n);
  d.seed = get_or<std::uint64_t>(j, "seed", 0);
  if (d.name.empty()) d.name = d.blob ? "blob" : std::filesystem::path(d.path).stem().string();
  return d;
}

json to_json(const ExperimentConfig& c) {
  json j;
  j["dataset"] = to_json(c.dataset);
  j["pool"] = pool_json(c.pool);
  j["split"] = split_json(c.split);
  j["learner"] = learner_json(c.learner);
  j["gamma"] = c.gamma.name();
  j["strategy"] = to_string(c.strategy.kind);
  j["strategy_params"] = strategy_params_json(c.strategy);
  j["prior_inlier"] = c.prior_inlier ? json(*c.prior_inlier) : json(nullptr);
  j["metrics"] = c.metrics;
  j["budget"] = c.budget;
  j["seed"] = c.seed;
  j["expected_outlier_fraction"] = c.expected_outlier_fraction;
  j["oracle_noise"] = c.oracle_noise;
  j["solver"] = solver_json(c.solver);
  j["audit"] = c.audit;
  j["record_timing"] = c.record_timing;
  return j;
}

ExperimentConfig config_from_json(const json& j) {
  try {
    ExperimentConfig c;
    c.dataset = dataset_ref_from_json(j.at("dataset"));
    c.pool = pool_from_json(j.at("pool"));
    c.split = split_from_json(j.at("split"));
    c.learner = learner_from_json(j.at("learner"));
    c.gamma = parse_gamma_heuristic(get_or<std::string>(j, "gamma", "scott"));
    c.strategy.kind = parse_strategy(j.at("strategy").get<std::string>());
    if (j.contains("strategy_params")) strategy_params_from_json(j.at("strategy_params"), c.strategy);
    if (j.contains("prior_inlier") && !j.at("prior_inlier").is_null()) c.prior_inlier = j.at("prior_inlier").get<double>();
    c.metrics = get_or<std::vector<std::string>>(j, "metrics", c.metrics);
    for (const auto& m : c.metrics) parse_metric(m);
    c.budget = get_or<std::size_t>(j, "budget", c.budget);
    c.seed = get_or<std::uint64_t>(j, "seed", c.seed);
    c.expected_outlier_fraction = get_or<double>(j, "expected_outlier_fraction", c.expected_outlier_fraction);
    c.oracle_noise = get_or<double>(j, "oracle_noise", c.oracle_noise);
    if (j.contains("solver")) c.solver = solver_from_json(j.at("solver"));
    c.audit = get_or<bool>(j, "audit", false);
    c.record_timing = get_or<bool>(j, "record_timing", false);
    return c;
  } catch (const json::exception& e) {
    raise(ErrorCode::parse, std::string("experiment config: ") + e.what());
  }
}

std::string canonical_string(const ExperimentConfig& c) {
  json j = to_json(c);
  j.erase("audit");
  j.erase("record_timing");
  return j.dump();
}

std::uint64_t fnv1a64(std::string_view bytes) {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (char ch : bytes) {
    h ^= static_cast<unsigned char>(ch);
    h *= 0x100000001b3ULL;
  }
  return h;
}

std::string fingerprint(const ExperimentConfig& c) {
  char buf[17];
  std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(fnv1a64(canonical_string(c))));
  return buf;
}

GridSpec grid_from_json(const json& j, std::filesystem::path base_dir) {
  try {
    GridSpec g;
    g.base_dir = std::move(base_dir);
    g.name = get_or<std::string>(j, "name", g.name);
    for (const auto& d : j.at("datasets")) {
      GridSpec::DatasetEntry e;
      e.ref = dataset_ref_from_json(d);
      if (d.contains("resample") && d.at("resample").contains("seeds"))
        e.seeds = d.at("resample").at("seeds").get<std::vector<std::uint64_t>>();
      else if (d.contains("seeds"))
        e.seeds = d.at("seeds").get<std::vector<std::uint64_t>>();
      else
        e.seeds = {e.ref.seed};
      g.datasets.push_back(std::move(e));
    }
    for (const auto& p : j.at("pools")) g.pools.push_back(pool_from_json(p));
    for (const auto& s : j.at("splits")) g.splits.push_back(split_from_json(s));
    for (const auto& l : j.at("learners")) g.learners.push_back(learner_from_json(l));
    for (const auto& s : get_or<std::vector<std::string>>(j, "gamma", {"scott"}))
      g.gammas.push_back(parse_gamma_heuristic(s));
    for (const auto& s : j.at("strategies")) g.strategies.push_back(parse_strategy(s.get<std::string>()));
    if (j.contains("strategy_params")) {
      strategy_params_from_json(j.at("strategy_params"), g.strategy_params);
      const auto& sp = j.at("strategy_params");
      if (sp.contains("prior_inlier") && !sp.at("prior_inlier").is_null())
        g.prior_inlier = sp.at("prior_inlier").get<double>();
    }
    g.metrics = get_or<std::vector<std::string>>(j, "metrics", g.metrics);
    for (const auto& m : g.metrics) parse_metric(m);
    g.budget = get_or<std::size_t>(j, "budget", g.budget);
    g.seeds = get_or<std::vector<std::uint64_t>>(j, "seeds", g.seeds);
    g.expected_outlier_fraction = get_or<double>(j, "expected_outlier_fraction", g.expected_outlier_fraction);
    g.oracle_noise = get_or<double>(j, "oracle_noise", g.oracle_noise);
    if (j.contains("solver")) g.solver = solver_from_json(j.at("solver"));
    g.audit = get_or<bool>(j, "audit", false);
    g.record_timing = get_or<bool>(j, "record_timing", false);
    if (g.datasets.empty() || g.pools.empty() || g.splits.empty() || g.learners.empty() || g.strategies.empty())
      raise(ErrorCode::invalid_argument, "grid needs at least one dataset, pool, split, learner and strategy");
    return g;
  } catch (const json::exception& e) {
    raise(ErrorCode::parse, std::string("grid spec: ") + e.what());
  }
}

GridSpec load_grid(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) raise(ErrorCode::io, "cannot open " + path.string());
  json j;
  try {
    in >> j;
  } catch (const json::exception& e) {
    raise(ErrorCode::parse, path.string() + ": " + e.what());
  }
  return grid_from_json(j, path.parent_path());
}

json to_json(const GridSpec& g) {
  json j;
  j["name"] = g.name;
  json ds = json::array();
  for (const auto& e : g.datasets) {
    json d = to_json(e.ref);
    d["seeds"] = e.seeds;
    ds.push_back(d);
  }
  j["datasets"] = ds;
  for (const auto& p : g.pools) j["pools"].push_back(pool_json(p));
  for (const auto& s : g.splits) j["splits"].push_back(split_json(s));
  for (const auto& l : g.learners) j["learners"].push_back(learner_json(l));
  for (const auto& h : g.gammas) j["gamma"].push_back(h.name());
  for (auto k : g.strategies) j["strategies"].push_back(to_string(k));
  j["strategy_params"] = strategy_params_json(g.strategy_params);
  j["strategy_params"]["prior_inlier"] = g.prior_inlier ? json(*g.prior_inlier) : json(nullptr);
  j["metrics"] = g.metrics;
  j["budget"] = g.budget;
  j["seeds"] = g.seeds;
  j["expected_outlier_fraction"] = g.expected_outlier_fraction;
  j["oracle_noise"] = g.oracle_noise;
  j["solver"] = solver_json(g.solver);
  j["audit"] = g.audit;
  j["record_timing"] = g.record_timing;
  return j;
}

}  // namespace ocal
