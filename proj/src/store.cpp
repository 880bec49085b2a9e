#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <numeric>
#include <sstream>

#include "ocal/error.hpp"
#include "ocal/harness.hpp"

namespace ocal {

namespace fs = std::filesystem;

namespace {

void write_file(const fs::path& path, const std::string& content) {
  fs::path tmp = path;
  tmp += ".tmp";
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) raise(ErrorCode::io, "cannot write " + tmp.string());
    out << content;
    if (!out) raise(ErrorCode::io, "write failed for " + tmp.string());
  }
  std::error_code ec;
  fs::rename(tmp, path, ec);
  if (ec) raise(ErrorCode::io, "cannot rename " + tmp.string() + ": " + ec.message());
}

json read_json(const fs::path& path) {
  std::ifstream in(path);
  if (!in) raise(ErrorCode::io, "cannot open " + path.string());
  try {
    return json::parse(in);
  } catch (const json::exception& e) {
    raise(ErrorCode::parse, path.string() + ": " + e.what());
  }
}

Label parse_label(const std::string& s) {
  if (s == "inlier") return Label::inlier;
  if (s == "outlier") return Label::outlier;
  raise(ErrorCode::parse, "bad label '" + s + "'");
}

std::string fmt(double v, const char* spec = "%.6g") {
  char buf[64];
  std::snprintf(buf, sizeof buf, spec, v);
  return buf;
}

std::string sanitize(std::string s) {
  for (char& c : s)
    if (!std::isalnum(static_cast<unsigned char>(c)) && c != '-' && c != '_' && c != '.') c = '_';
  return s;
}

std::optional<double> try_summary(const ResultRecord& r, const std::string& metric, const SummarySpec& s) {
  if (r.status == RunStatus::failed || r.status == RunStatus::infeasible || r.curve.records.empty())
    return std::nullopt;
  try {
    const double v = summarize(r.curve, r.curve.metric_index(metric), s);
    if (!std::isfinite(v)) return std::nullopt;
    return v;
  } catch (const Error&) {
    return std::nullopt;
  }
}

}  // namespace

std::vector<SummarySpec> default_summaries() {
  return parse_summary_list("sq,ru:5,qr,aeq:5,ls:5,roq");
}

std::string serialize_curve(const ResultRecord& r) {
  std::string out;
  for (std::size_t n = 0; n < r.curve.records.size(); ++n) {
    const auto& rec = r.curve.records[n];
    json line;
    line["t"] = rec.t;
    line["queried_index"] = rec.queried ? json(*rec.queried) : json(nullptr);
    line["oracle_label"] = rec.label ? json(to_string(*rec.label)) : json(nullptr);
    json m = json::object();
    for (std::size_t k = 0; k < r.curve.metrics.size() && k < rec.values.size(); ++k)
      m[r.curve.metrics[k]] = rec.values[k];
    line["metrics"] = m;
    line["timing_ms"] = n < r.timing_ms.size() ? json(r.timing_ms[n]) : json(nullptr);
    line["flags"] = n < r.flags.size() ? json(r.flags[n]) : json::array();
    if (n < r.audit.size()) line["model"] = r.audit[n];
    out += line.dump();
    out += '\n';
  }
  return out;
}

json record_meta(const ResultRecord& r) {
  json j;
  j["fingerprint"] = r.fingerprint;
  j["config"] = to_json(r.config);
  j["status"] = to_string(r.status);
  j["error"] = r.error.empty() ? json(nullptr) : json(r.error);
  j["warnings"] = r.warnings;
  j["queries"] = r.curve.queries();
  json summaries = json::object();
  for (const auto& metric : r.curve.metrics) {
    json s = json::object();
    for (const auto& spec : default_summaries()) {
      auto v = try_summary(r, metric, spec);
      s[spec.name()] = v ? json(*v) : json(nullptr);
    }
    summaries[metric] = s;
  }
  j["summaries"] = summaries;
  return j;
}

void write_result(const fs::path& dir, const ResultRecord& r) {
  fs::create_directories(dir / "cells");
  write_file(dir / "cells" / (r.fingerprint + ".jsonl"), serialize_curve(r));
  write_file(dir / "cells" / (r.fingerprint + ".meta.json"), record_meta(r).dump(2) + "\n");
}

void write_manifest(const fs::path& dir, const GridSpec& spec, const std::vector<ResultRecord>& results,
                    const std::vector<Exclusion>& exclusions) {
  json j;
  j["grid"] = to_json(spec);
  json cells = json::array();
  for (const auto& r : results)
    cells.push_back({{"fingerprint", r.fingerprint}, {"status", to_string(r.status)}});
  j["cells"] = cells;
  json ex = json::array();
  for (const auto& e : exclusions) ex.push_back({{"config", to_json(e.config)}, {"reason", e.reason}});
  j["exclusions"] = ex;
  fs::create_directories(dir);
  write_file(dir / "manifest.json", j.dump(2) + "\n");
}

ResultRecord read_result(const fs::path& dir, const std::string& fp) {
  const json meta = read_json(dir / "cells" / (fp + ".meta.json"));
  ResultRecord r;
  r.fingerprint = meta.at("fingerprint").get<std::string>();
  r.config = config_from_json(meta.at("config"));
  r.status = parse_run_status(meta.at("status").get<std::string>());
  if (!meta.at("error").is_null()) r.error = meta.at("error").get<std::string>();
  r.warnings = meta.at("warnings").get<std::vector<std::string>>();
  r.curve.metrics = r.config.metrics;

  const fs::path lines = dir / "cells" / (fp + ".jsonl");
  std::ifstream in(lines);
  if (!in) raise(ErrorCode::io, "cannot open " + lines.string());
  std::string text;
  std::size_t lineno = 0;
  while (std::getline(in, text)) {
    ++lineno;
    if (text.empty()) continue;
    try {
      const json l = json::parse(text);
      CurveRecord rec;
      rec.t = l.at("t").get<std::size_t>();
      if (!l.at("queried_index").is_null()) rec.queried = l.at("queried_index").get<std::size_t>();
      if (!l.at("oracle_label").is_null()) rec.label = parse_label(l.at("oracle_label").get<std::string>());
      for (const auto& m : r.curve.metrics) {
        const auto& v = l.at("metrics").at(m);
        rec.values.push_back(v.is_null() ? std::nan("") : v.get<double>());
      }
      if (!l.at("timing_ms").is_null()) r.timing_ms.push_back(l.at("timing_ms").get<double>());
      r.flags.push_back(l.value("flags", std::vector<std::string>{}));
      if (l.contains("model")) r.audit.push_back(l.at("model"));
      r.curve.records.push_back(std::move(rec));
    } catch (const json::exception& e) {
      raise(ErrorCode::parse, lines.string() + ":" + std::to_string(lineno) + ": " + e.what());
    }
  }
  return r;
}

std::vector<ResultRecord> load_results(const fs::path& dir) {
  const json manifest = read_json(dir / "manifest.json");
  std::vector<ResultRecord> out;
  for (const auto& c : manifest.at("cells")) out.push_back(read_result(dir, c.at("fingerprint").get<std::string>()));
  for (const auto& e : manifest.at("exclusions")) {
    ResultRecord r;
    r.config = config_from_json(e.at("config"));
    r.fingerprint = fingerprint(r.config);
    r.status = RunStatus::infeasible;
    r.error = e.at("reason").get<std::string>();
    r.curve.metrics = r.config.metrics;
    out.push_back(std::move(r));
  }
  return out;
}

Statistic parse_statistic(std::string_view s) {
  if (s == "median") return Statistic::median;
  if (s == "mean") return Statistic::mean;
  raise(ErrorCode::invalid_argument, "statistic must be 'median' or 'mean'");
}

std::string group_value(const ExperimentConfig& c, std::string_view key) {
  if (key == "dataset") return c.dataset.name;
  if (key == "dataset_seed") return std::to_string(c.dataset.seed);
  if (key == "pool") {
    std::string s = to_string(c.pool.strategy);
    if (c.pool.strategy == PoolStrategy::Pp || c.pool.strategy == PoolStrategy::Pn) s += ":" + fmt(c.pool.param, "%g");
    return s;
  }
  if (key == "split") return to_string(c.split.strategy);
  if (key == "learner") return to_string(c.learner.kind);
  if (key == "kappa") return fmt(c.learner.kappa, "%g");
  if (key == "gamma") return c.gamma.name();
  if (key == "strategy") return to_string(c.strategy.kind);
  if (key == "seed") return std::to_string(c.seed);
  raise(ErrorCode::invalid_argument, "unknown group key '" + std::string(key) + "'");
}

double median(std::vector<double> v) {
  if (v.empty()) raise(ErrorCode::invalid_argument, "median of empty set");
  std::sort(v.begin(), v.end());
  const std::size_t n = v.size();
  return n % 2 ? v[n / 2] : 0.5 * (v[n / 2 - 1] + v[n / 2]);
}

double mean(const std::vector<double>& v) {
  if (v.empty()) raise(ErrorCode::invalid_argument, "mean of empty set");
  return std::accumulate(v.begin(), v.end(), 0.0) / static_cast<double>(v.size());
}

std::string SummaryTable::to_tsv() const {
  std::string out;
  auto line = [&](const std::vector<std::string>& cells) {
    for (std::size_t i = 0; i < cells.size(); ++i) {
      if (i) out += '\t';
      out += cells[i];
    }
    out += '\n';
  };
  line(columns);
  for (const auto& r : rows) line(r);
  return out;
}

SummaryTable aggregate(const std::vector<ResultRecord>& results, const std::vector<std::string>& group_by,
                       Statistic statistic, const std::vector<SummarySpec>& summaries, const std::string& metric) {
  SummaryTable t;
  t.columns = group_by;
  for (const auto& s : summaries) t.columns.push_back(s.name());
  t.columns.push_back("n");

  std::vector<std::vector<std::string>> keys;
  std::vector<std::vector<const ResultRecord*>> members;
  for (const auto& r : results) {
    std::vector<std::string> k;
    for (const auto& g : group_by) k.push_back(group_value(r.config, g));
    auto it = std::find(keys.begin(), keys.end(), k);
    if (it == keys.end()) {
      keys.push_back(k);
      members.push_back({&r});
    } else {
      members[static_cast<std::size_t>(it - keys.begin())].push_back(&r);
    }
  }

  for (std::size_t g = 0; g < keys.size(); ++g) {
    std::vector<std::string> row = keys[g];
    std::size_t used = 0;
    for (const auto& s : summaries) {
      std::vector<double> vals;
      for (const ResultRecord* r : members[g])
        if (auto v = try_summary(*r, metric, s)) vals.push_back(*v);
      used = std::max(used, vals.size());
      if (vals.empty())
        row.push_back("-");
      else
        row.push_back(fmt(statistic == Statistic::median ? median(vals) : mean(vals), "%.4f"));
    }
    row.push_back(std::to_string(used));
    t.rows.push_back(std::move(row));
  }
  return t;
}

std::vector<fs::path> emit_curves(const std::vector<ResultRecord>& results, const fs::path& out_dir,
                                  const std::vector<SummarySpec>& summaries_in) {
  const std::vector<SummarySpec> summaries = summaries_in.empty() ? default_summaries() : summaries_in;
  fs::create_directories(out_dir);
  std::vector<fs::path> written;

  std::string summary = "fingerprint,dataset,dataset_seed,pool,split,learner,kappa,gamma,strategy,seed,status,metric";
  for (const auto& s : summaries) summary += "," + s.name();
  summary += '\n';

  for (const auto& r : results) {
    const auto& c = r.config;
    for (std::size_t m = 0; m < r.curve.metrics.size(); ++m) {
      const std::string& metric = r.curve.metrics[m];
      if (!r.curve.records.empty()) {
        std::string csv = "iteration,value,queried_label\n";
        for (const auto& rec : r.curve.records) {
          csv += std::to_string(rec.t);
          csv += ',';
          csv += fmt(rec.values.at(m), "%.10g");
          csv += ',';
          if (rec.label) csv += to_string(*rec.label);
          csv += '\n';
        }
        fs::path p = out_dir / (r.fingerprint + "_" + sanitize(metric) + ".csv");
        write_file(p, csv);
        written.push_back(p);
      }
      summary += r.fingerprint;
      for (const char* k : {"dataset", "dataset_seed", "pool", "split", "learner", "kappa", "gamma", "strategy", "seed"})
        summary += "," + group_value(c, k);
      summary += std::string(",") + to_string(r.status) + "," + metric;
      for (const auto& s : summaries) {
        auto v = try_summary(r, metric, s);
        summary += "," + (v ? fmt(*v, "%.10g") : std::string("-"));
      }
      summary += '\n';
    }
  }
  fs::path p = out_dir / "summary.csv";
  write_file(p, summary);
  written.push_back(p);
  return written;
}

}  // namespace ocal
