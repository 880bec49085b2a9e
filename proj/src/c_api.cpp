#include "ocal/ocal.h"

#include <cstdlib>
#include <cstring>
#include <new>
#include <string>

#include "ocal/config.hpp"
#include "ocal/error.hpp"
#include "ocal/harness.hpp"

struct ocal_dataset {
  ocal::Dataset d;
};

struct ocal_model {
  ocal::TrainedModel m;
};

struct ocal_grid {
  ocal::GridSpec spec;
};

namespace {

thread_local std::string g_last_error;

ocal_status status_of(ocal::ErrorCode c) {
  switch (c) {
    case ocal::ErrorCode::invalid_argument: return OCAL_ERR_INVALID_ARGUMENT;
    case ocal::ErrorCode::io: return OCAL_ERR_IO;
    case ocal::ErrorCode::parse: return OCAL_ERR_PARSE;
    case ocal::ErrorCode::infeasible: return OCAL_ERR_INFEASIBLE;
    case ocal::ErrorCode::solver: return OCAL_ERR_SOLVER;
    case ocal::ErrorCode::unsupported: return OCAL_ERR_UNSUPPORTED;
    case ocal::ErrorCode::internal: return OCAL_ERR_INTERNAL;
  }
  return OCAL_ERR_INTERNAL;
}

template <typename F>
ocal_status guarded(F&& f) {
  try {
    f();
    g_last_error.clear();
    return OCAL_OK;
  } catch (const ocal::Error& e) {
    g_last_error = e.what();
    return status_of(e.code());
  } catch (const std::bad_alloc&) {
    g_last_error = "out of memory";
    return OCAL_ERR_INTERNAL;
  } catch (const std::exception& e) {
    g_last_error = e.what();
    return OCAL_ERR_INTERNAL;
  }
}

void require(bool ok, const char* what) {
  if (!ok) ocal::raise(ocal::ErrorCode::invalid_argument, what);
}

char* dup_string(const std::string& s) {
  char* p = static_cast<char*>(std::malloc(s.size() + 1));
  if (!p) throw std::bad_alloc();
  std::memcpy(p, s.c_str(), s.size() + 1);
  return p;
}

std::vector<std::string> split_csv(const char* text) {
  std::vector<std::string> out;
  if (!text) return out;
  std::string cur;
  for (const char* p = text;; ++p) {
    if (*p == ',' || *p == '\0') {
      if (!cur.empty()) out.push_back(cur);
      cur.clear();
      if (*p == '\0') break;
    } else if (*p != ' ') {
      cur += *p;
    }
  }
  return out;
}

}  // namespace

extern "C" {

const char* ocal_last_error(void) { return g_last_error.c_str(); }

const char* ocal_version(void) { return "0.1.0"; }

const char* ocal_status_name(ocal_status s) {
  switch (s) {
    case OCAL_OK: return "ok";
    case OCAL_ERR_INVALID_ARGUMENT: return "invalid_argument";
    case OCAL_ERR_IO: return "io";
    case OCAL_ERR_PARSE: return "parse";
    case OCAL_ERR_INFEASIBLE: return "infeasible";
    case OCAL_ERR_SOLVER: return "solver";
    case OCAL_ERR_UNSUPPORTED: return "unsupported";
    case OCAL_ERR_INTERNAL: return "internal";
  }
  return "unknown";
}

void ocal_string_free(char* s) { std::free(s); }

ocal_status ocal_dataset_load_csv(const char* path, ocal_dataset** out) {
  return guarded([&] {
    require(path && out, "null argument");
    *out = new ocal_dataset{ocal::load_csv(path)};
  });
}

ocal_status ocal_dataset_from_arrays(const double* values, const int* labels, size_t n, size_t m,
                                     ocal_dataset** out) {
  return guarded([&] {
    require(values && labels && out, "null argument");
    require(n > 0 && m > 0, "empty dataset");
    auto h = std::make_unique<ocal_dataset>();
    h->d.name = "arrays";
    h->d.X.resize(static_cast<Eigen::Index>(n), static_cast<Eigen::Index>(m));
    std::memcpy(h->d.X.data(), values, n * m * sizeof(double));
    for (size_t i = 0; i < n; ++i) {
      require(labels[i] == 0 || labels[i] == 1, "labels must be 0 or 1");
      h->d.y.push_back(labels[i] ? ocal::Label::outlier : ocal::Label::inlier);
    }
    *out = h.release();
  });
}

ocal_status ocal_dataset_blob(size_t inliers, size_t outliers, size_t dims, uint64_t seed, ocal_dataset** out) {
  return guarded([&] {
    require(out, "null argument");
    ocal::BlobSpec spec;
    spec.inliers = inliers;
    spec.outliers = outliers;
    spec.dims = dims;
    *out = new ocal_dataset{ocal::make_blob_dataset(spec, seed)};
  });
}

ocal_status ocal_dataset_shape(const ocal_dataset* d, size_t* n, size_t* m) {
  return guarded([&] {
    require(d, "null dataset");
    if (n) *n = d->d.size();
    if (m) *m = d->d.dims();
  });
}

ocal_status ocal_dataset_copy(const ocal_dataset* d, double* values, int* labels) {
  return guarded([&] {
    require(d, "null dataset");
    if (values) std::memcpy(values, d->d.X.data(), d->d.size() * d->d.dims() * sizeof(double));
    if (labels)
      for (size_t i = 0; i < d->d.size(); ++i) labels[i] = d->d.y[i] == ocal::Label::outlier ? 1 : 0;
  });
}

void ocal_dataset_free(ocal_dataset* d) { delete d; }

void ocal_fit_options_init(ocal_fit_options* o) {
  if (!o) return;
  o->learner = "svdd";
  o->gamma = 0.0;
  o->c1 = 0.0;
  o->c2 = 0.0;
  o->kappa = 0.0;
  o->outlier_fraction = 0.05;
  o->tolerance = 1e-6;
  o->max_steps = 100000;
}

ocal_status ocal_model_fit(const ocal_dataset* d, const size_t* train_idx, size_t n_train, const int* status,
                           const ocal_fit_options* opts, ocal_model** out) {
  return guarded([&] {
    require(d && train_idx && opts && out && opts->learner, "null argument");
    require(n_train > 0, "empty training set");
    ocal::FitRequest req;
    req.train_idx.assign(train_idx, train_idx + n_train);
    for (size_t i = 0; i < n_train; ++i) {
      require(train_idx[i] < d->d.size(), "training index out of range");
      const int s = status ? status[i] : OCAL_UNLABELED;
      require(s >= OCAL_UNLABELED && s <= OCAL_LABELED_OUTLIER, "bad label status");
      req.labels.push_back(static_cast<ocal::LabelStatus>(s));
    }
    req.learner = ocal::parse_learner(opts->learner);
    req.kernel.gamma = opts->gamma > 0.0 ? opts->gamma : ocal::gamma_scott(d->d.X);
    req.costs = ocal::cost_tax(n_train, opts->outlier_fraction);
    if (opts->c1 > 0.0) req.costs.c = req.costs.c1 = req.costs.c2 = opts->c1;
    if (opts->c2 > 0.0) req.costs.c2 = opts->c2;
    req.costs.kappa = opts->kappa;
    req.solver.tolerance = opts->tolerance;
    req.solver.max_steps = opts->max_steps;
    *out = new ocal_model{ocal::fit(d->d.X, req)};
  });
}

ocal_status ocal_model_decision(const ocal_model* m, const double* x, size_t dims, double* f) {
  return guarded([&] {
    require(m && x && f, "null argument");
    require(dims == static_cast<size_t>(m->m.support.cols()), "dimension mismatch");
    *f = ocal::decision_value(m->m, std::span<const double>(x, dims));
  });
}

ocal_status ocal_model_info(const ocal_model* m, double* radius_sq, double* gamma, double* kkt_residual) {
  return guarded([&] {
    require(m, "null model");
    if (radius_sq) *radius_sq = m->m.radius_sq;
    if (gamma) *gamma = m->m.kernel.gamma;
    if (kkt_residual) *kkt_residual = m->m.kkt_residual;
  });
}

ocal_status ocal_model_dump(const ocal_model* m, char** out) {
  return guarded([&] {
    require(m && out, "null argument");
    const auto& t = m->m;
    ocal::json j{{"learner", ocal::to_string(t.learner)},
                 {"alpha", t.alpha},
                 {"signs", t.signs},
                 {"train_idx", t.train_idx},
                 {"radius_sq", t.radius_sq},
                 {"margin", t.margin},
                 {"kappa", t.effective_kappa},
                 {"kappa_clamped", t.kappa_clamped},
                 {"gamma", t.kernel.gamma},
                 {"costs", {{"c", t.costs.c}, {"c1", t.costs.c1}, {"c2", t.costs.c2}}},
                 {"kkt_residual", t.kkt_residual},
                 {"solver_steps", t.solver_steps}};
    *out = dup_string(j.dump());
  });
}

void ocal_model_free(ocal_model* m) { delete m; }

ocal_status ocal_grid_load(const char* path, ocal_grid** out) {
  return guarded([&] {
    require(path && out, "null argument");
    *out = new ocal_grid{ocal::load_grid(path)};
  });
}

ocal_status ocal_grid_parse(const char* json_text, const char* base_dir, ocal_grid** out) {
  return guarded([&] {
    require(json_text && out, "null argument");
    ocal::json j;
    try {
      j = ocal::json::parse(json_text);
    } catch (const ocal::json::exception& e) {
      ocal::raise(ocal::ErrorCode::parse, e.what());
    }
    *out = new ocal_grid{ocal::grid_from_json(j, base_dir ? base_dir : "")};
  });
}

ocal_status ocal_grid_validate(const ocal_grid* g, char** report) {
  return guarded([&] {
    require(g && report, "null argument");
    const ocal::GridExpansion ex = ocal::expand_grid(g->spec);
    ocal::json cells = ocal::json::array();
    for (const auto& c : ex.configs) {
      ocal::json cell{{"fingerprint", ocal::fingerprint(c)}};
      for (const char* k : {"dataset", "dataset_seed", "pool", "split", "learner", "gamma", "strategy", "seed"})
        cell[k] = ocal::group_value(c, k);
      cells.push_back(cell);
    }
    ocal::json excl = ocal::json::array();
    for (const auto& e : ex.exclusions) {
      ocal::json cell{{"reason", e.reason}};
      for (const char* k : {"dataset", "dataset_seed", "pool", "split", "learner", "gamma", "strategy", "seed"})
        cell[k] = ocal::group_value(e.config, k);
      excl.push_back(cell);
    }
    *report = dup_string(ocal::json{{"cells", cells}, {"exclusions", excl}}.dump(2));
  });
}

ocal_status ocal_grid_run(const ocal_grid* g, const char* out_dir, size_t workers, int flags,
                          ocal_run_summary* summary) {
  return guarded([&] {
    require(g && out_dir, "null argument");
    ocal::GridSpec spec = g->spec;
    if (flags & OCAL_RUN_AUDIT) spec.audit = true;
    if (flags & OCAL_RUN_TIMING) spec.record_timing = true;
    const ocal::GridOutcome o = ocal::run_grid(spec, out_dir, workers);
    if (summary) *summary = ocal_run_summary{o.cells, o.failed, o.truncated, o.exclusions.size()};
  });
}

void ocal_grid_free(ocal_grid* g) { delete g; }

ocal_status ocal_summarize(const char* results_dir, const char* group_by, const char* statistic,
                           const char* summaries, const char* metric, char** table) {
  return guarded([&] {
    require(results_dir && table, "null argument");
    const auto results = ocal::load_results(results_dir);
    std::vector<std::string> keys = split_csv(group_by);
    if (keys.empty()) keys = {"strategy"};
    const auto specs = summaries ? ocal::parse_summary_list(summaries) : ocal::default_summaries();
    const auto stat = ocal::parse_statistic(statistic ? statistic : "median");
    *table = dup_string(ocal::aggregate(results, keys, stat, specs, metric ? metric : "mcc").to_tsv());
  });
}

ocal_status ocal_emit_curves(const char* results_dir, const char* out_dir, const char* summaries,
                             size_t* files_written) {
  return guarded([&] {
    require(results_dir && out_dir, "null argument");
    const auto results = ocal::load_results(results_dir);
    const auto specs = summaries ? ocal::parse_summary_list(summaries) : std::vector<ocal::SummarySpec>{};
    const auto files = ocal::emit_curves(results, out_dir, specs);
    if (files_written) *files_written = files.size();
  });
}

ocal_status ocal_list_strategies(char** out) {
  return guarded([&] {
    require(out, "null argument");
    std::string s;
    for (auto k : ocal::all_strategies()) s += std::string(ocal::to_string(k)) + "\n";
    *out = dup_string(s);
  });
}

ocal_status ocal_list_learners(char** out) {
  return guarded([&] {
    require(out, "null argument");
    std::string s;
    for (auto k : {ocal::LearnerKind::svdd, ocal::LearnerKind::svddneg, ocal::LearnerKind::ssad})
      s += std::string(ocal::to_string(k)) + "\n";
    *out = dup_string(s);
  });
}

}  // extern "C"
