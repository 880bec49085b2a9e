#include "ocal/data.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <map>
#include <numbers>
#include <set>
#include <sstream>

#include "ocal/error.hpp"
#include "ocal/rng.hpp"

namespace ocal {

const char* to_string(Label label) noexcept { return label == Label::inlier ? "inlier" : "outlier"; }

std::size_t Dataset::outlier_count() const {
  return static_cast<std::size_t>(std::count(y.begin(), y.end(), Label::outlier));
}

double Dataset::outlier_rate() const {
  return y.empty() ? 0.0 : static_cast<double>(outlier_count()) / static_cast<double>(y.size());
}

IndexSet Dataset::indices_of(Label label) const {
  IndexSet out;
  for (std::size_t i = 0; i < y.size(); ++i)
    if (y[i] == label) out.push_back(i);
  return out;
}

Dataset Dataset::subset(const IndexSet& idx) const {
  Dataset out;
  out.name = name;
  out.seed = seed;
  out.outlier_limited = outlier_limited;
  out.warnings = warnings;
  out.X.resize(static_cast<Eigen::Index>(idx.size()), X.cols());
  out.y.reserve(idx.size());
  for (std::size_t r = 0; r < idx.size(); ++r) {
    out.X.row(static_cast<Eigen::Index>(r)) = X.row(static_cast<Eigen::Index>(idx[r]));
    out.y.push_back(y.at(idx[r]));
  }
  return out;
}

// ---------------------------------------------------------------------------
// CSV loading

namespace {

std::string trim(std::string_view s) {
  auto b = s.find_first_not_of(" \t\r");
  if (b == std::string_view::npos) return {};
  auto e = s.find_last_not_of(" \t\r");
  return std::string(s.substr(b, e - b + 1));
}

std::vector<std::string> split_fields(const std::string& line) {
  std::vector<std::string> out;
  std::string field;
  std::istringstream ss(line);
  while (std::getline(ss, field, ',')) out.push_back(trim(field));
  if (!line.empty() && line.back() == ',') out.emplace_back();
  return out;
}

[[noreturn]] void parse_fail(std::size_t line_no, const std::string& what) {
  raise(ErrorCode::parse, "line " + std::to_string(line_no) + ": " + what);
}

Label parse_label(const std::string& v, std::size_t line_no) {
  std::string s;
  s.reserve(v.size());
  for (char c : v) s.push_back(static_cast<char>(std::tolower(static_cast<unsigned char>(c))));
  if (s == "inlier" || s == "0") return Label::inlier;
  if (s == "outlier" || s == "1") return Label::outlier;
  parse_fail(line_no, "unrecognized label '" + v + "'");
}

}  // namespace

Dataset parse_csv(std::istream& in, std::string name, const CsvSchema& schema) {
  std::string line;
  std::size_t line_no = 0;
  std::vector<std::string> header;
  while (std::getline(in, line)) {
    ++line_no;
    if (!trim(line).empty()) {
      header = split_fields(line);
      break;
    }
  }
  if (header.empty()) raise(ErrorCode::parse, "missing header row");
  if (header.back() != schema.label_column)
    parse_fail(line_no, "last column must be '" + schema.label_column + "', found '" + header.back() + "'");
  const std::size_t m = header.size() - 1;
  if (m == 0) parse_fail(line_no, "no feature columns");

  std::vector<double> values;
  std::vector<Label> labels;
  while (std::getline(in, line)) {
    ++line_no;
    if (trim(line).empty()) continue;
    auto fields = split_fields(line);
    if (fields.size() != header.size())
      parse_fail(line_no, "expected " + std::to_string(header.size()) + " fields, found " +
                              std::to_string(fields.size()));
    for (std::size_t j = 0; j < m; ++j) {
      const auto& f = fields[j];
      if (f.empty()) parse_fail(line_no, "missing value in column '" + header[j] + "'");
      std::size_t used = 0;
      double v = 0.0;
      try {
        v = std::stod(f, &used);
      } catch (const std::exception&) {
        used = 0;
      }
      if (used != f.size() || !std::isfinite(v))
        parse_fail(line_no, "malformed number '" + f + "' in column '" + header[j] + "'");
      values.push_back(v);
    }
    labels.push_back(parse_label(fields[m], line_no));
  }
  if (labels.empty()) raise(ErrorCode::parse, "no data rows");

  Dataset d;
  d.name = std::move(name);
  d.X = Eigen::Map<const Matrix>(values.data(), static_cast<Eigen::Index>(labels.size()),
                                 static_cast<Eigen::Index>(m));
  d.y = std::move(labels);
  for (std::size_t j : normalize_min_max(d.X))
    d.warnings.push_back("constant column '" + header[j] + "' normalized to zero");
  if (std::size_t removed = remove_duplicates(d); removed > 0)
    d.warnings.push_back("removed " + std::to_string(removed) + " duplicate rows");
  return d;
}

Dataset load_csv(const std::filesystem::path& path, const CsvSchema& schema) {
  std::ifstream in(path);
  if (!in) raise(ErrorCode::io, "cannot open " + path.string());
  return parse_csv(in, path.stem().string(), schema);
}

std::vector<std::size_t> normalize_min_max(Matrix& X) {
  std::vector<std::size_t> constant;
  for (Eigen::Index j = 0; j < X.cols(); ++j) {
    const double lo = X.col(j).minCoeff();
    const double hi = X.col(j).maxCoeff();
    if (!(hi > lo)) {
      X.col(j).setZero();
      constant.push_back(static_cast<std::size_t>(j));
      continue;
    }
    X.col(j) = (X.col(j).array() - lo) / (hi - lo);
  }
  return constant;
}

std::size_t remove_duplicates(Dataset& d) {
  std::set<std::vector<long long>> seen;
  IndexSet keep;
  const double scale = 1e12;
  for (std::size_t i = 0; i < d.size(); ++i) {
    std::vector<long long> key;
    key.reserve(d.dims());
    for (double v : row(d.X, i)) key.push_back(std::llround(v * scale));
    if (seen.insert(std::move(key)).second) keep.push_back(i);
  }
  const std::size_t removed = d.size() - keep.size();
  if (removed > 0) {
    auto w = d.warnings;
    d = d.subset(keep);
    d.warnings = std::move(w);
  }
  return removed;
}

// ---------------------------------------------------------------------------
// Resampling and pools

std::size_t round_half_up(double v) {
  return v <= 0.0 ? 0 : static_cast<std::size_t>(std::floor(v + 0.5));
}

namespace {

IndexSet sample_without_replacement(IndexSet from, std::size_t k, Rng& rng) {
  rng.shuffle(from);
  from.resize(std::min(k, from.size()));
  std::sort(from.begin(), from.end());
  return from;
}

IndexSet merge(IndexSet a, const IndexSet& b) {
  a.insert(a.end(), b.begin(), b.end());
  std::sort(a.begin(), a.end());
  return a;
}

}  // namespace

Dataset resample(const Dataset& d, double outlier_rate, std::size_t max_n, std::uint64_t seed) {
  if (!(outlier_rate > 0.0 && outlier_rate < 1.0))
    raise(ErrorCode::invalid_argument, "outlier_rate must lie in (0,1)");
  if (max_n == 0) raise(ErrorCode::invalid_argument, "max_n must be positive");
  const IndexSet inliers = d.indices_of(Label::inlier);
  const IndexSet outliers = d.indices_of(Label::outlier);
  if (inliers.empty() || outliers.empty())
    raise(ErrorCode::invalid_argument, "resampling needs at least one inlier and one outlier");

  std::size_t total = std::min(max_n, d.size());
  std::size_t n_out = round_half_up(outlier_rate * static_cast<double>(total));
  std::size_t n_in = total - n_out;
  bool limited = false;
  if (n_in > inliers.size()) {
    n_in = inliers.size();
    n_out = round_half_up(static_cast<double>(n_in) * outlier_rate / (1.0 - outlier_rate));
  }
  if (n_out > outliers.size()) {
    limited = true;
    n_out = outliers.size();
    n_in = std::min(inliers.size(),
                    round_half_up(static_cast<double>(n_out) * (1.0 - outlier_rate) / outlier_rate));
  }
  n_out = std::max<std::size_t>(n_out, 1);

  Rng rng(derive_seed(seed, "resample"));
  IndexSet keep = merge(sample_without_replacement(inliers, n_in, rng),
                        sample_without_replacement(outliers, n_out, rng));
  Dataset out = d.subset(keep);
  out.seed = seed;
  out.outlier_limited = limited;
  if (limited)
    out.warnings.push_back("only " + std::to_string(outliers.size()) +
                           " outliers available; inliers downsampled to keep the requested rate");
  return out;
}

void PoolState::assign(std::size_t i, Label label) {
  if (status_.at(i) != LabelStatus::unlabeled)
    raise(ErrorCode::invalid_argument, "observation " + std::to_string(i) + " is already labeled");
  status_[i] = label == Label::inlier ? LabelStatus::labeled_inlier : LabelStatus::labeled_outlier;
}

namespace {
IndexSet collect(const std::vector<LabelStatus>& s, auto pred) {
  IndexSet out;
  for (std::size_t i = 0; i < s.size(); ++i)
    if (pred(s[i])) out.push_back(i);
  return out;
}
}  // namespace

IndexSet PoolState::unlabeled() const {
  return collect(status_, [](LabelStatus s) { return s == LabelStatus::unlabeled; });
}
IndexSet PoolState::labeled() const {
  return collect(status_, [](LabelStatus s) { return s != LabelStatus::unlabeled; });
}
IndexSet PoolState::labeled_inliers() const {
  return collect(status_, [](LabelStatus s) { return s == LabelStatus::labeled_inlier; });
}
IndexSet PoolState::labeled_outliers() const {
  return collect(status_, [](LabelStatus s) { return s == LabelStatus::labeled_outlier; });
}
std::size_t PoolState::count(LabelStatus s) const {
  return static_cast<std::size_t>(std::count(status_.begin(), status_.end(), s));
}

const char* to_string(PoolStrategy s) noexcept {
  switch (s) {
    case PoolStrategy::Pu: return "Pu";
    case PoolStrategy::Pp: return "Pp";
    case PoolStrategy::Pn: return "Pn";
    case PoolStrategy::Pa: return "Pa";
  }
  return "?";
}

const char* to_string(SplitStrategy s) noexcept {
  switch (s) {
    case SplitStrategy::Sh: return "Sh";
    case SplitStrategy::Sf: return "Sf";
    case SplitStrategy::Si: return "Si";
  }
  return "?";
}

PoolStrategy parse_pool_strategy(std::string_view name) {
  if (name == "Pu" || name == "pu") return PoolStrategy::Pu;
  if (name == "Pp" || name == "pp") return PoolStrategy::Pp;
  if (name == "Pn" || name == "pn") return PoolStrategy::Pn;
  if (name == "Pa" || name == "pa") return PoolStrategy::Pa;
  raise(ErrorCode::invalid_argument, "unknown pool strategy '" + std::string(name) + "'");
}

SplitStrategy parse_split_strategy(std::string_view name) {
  if (name == "Sh" || name == "sh") return SplitStrategy::Sh;
  if (name == "Sf" || name == "sf") return SplitStrategy::Sf;
  if (name == "Si" || name == "si") return SplitStrategy::Si;
  raise(ErrorCode::invalid_argument, "unknown split strategy '" + std::string(name) + "'");
}

PoolState make_initial_pool(const Dataset& d, PoolStrategy strategy, double param, std::uint64_t seed,
                            const IndexSet& within) {
  PoolState pool(d.size());
  IndexSet candidates = within;
  if (candidates.empty()) {
    candidates.resize(d.size());
    for (std::size_t i = 0; i < d.size(); ++i) candidates[i] = i;
  }
  IndexSet in, out;
  for (std::size_t i : candidates) (d.y.at(i) == Label::inlier ? in : out).push_back(i);
  Rng rng(derive_seed(seed, "pool"));

  auto stratified = [&](std::size_t n) {
    if (n == 0 || n > candidates.size())
      raise(ErrorCode::invalid_argument, "pool size " + std::to_string(n) + " outside (0, " +
                                             std::to_string(candidates.size()) + "]");
    const double rate = static_cast<double>(out.size()) / static_cast<double>(candidates.size());
    std::size_t n_out = std::min(round_half_up(static_cast<double>(n) * rate), out.size());
    std::size_t n_in = n - n_out;
    if (n_in > in.size()) {
      n_in = in.size();
      n_out = std::min(n - n_in, out.size());
    }
    for (std::size_t i : sample_without_replacement(in, n_in, rng)) pool.assign(i, Label::inlier);
    for (std::size_t i : sample_without_replacement(out, n_out, rng)) pool.assign(i, Label::outlier);
  };

  switch (strategy) {
    case PoolStrategy::Pu:
      break;
    case PoolStrategy::Pp:
      if (!(param > 0.0 && param < 1.0)) raise(ErrorCode::invalid_argument, "Pp requires 0 < p < 1");
      stratified(std::max<std::size_t>(1, round_half_up(param * static_cast<double>(candidates.size()))));
      break;
    case PoolStrategy::Pn:
      if (!(param >= 1.0) || param != std::floor(param))
        raise(ErrorCode::invalid_argument, "Pn requires a positive integer n");
      stratified(static_cast<std::size_t>(param));
      break;
    case PoolStrategy::Pa:
      if (d.dims() > in.size())
        raise(ErrorCode::infeasible, "Pa needs " + std::to_string(d.dims()) + " inliers, only " +
                                         std::to_string(in.size()) + " available");
      for (std::size_t i : sample_without_replacement(in, d.dims(), rng)) pool.assign(i, Label::inlier);
      break;
  }
  return pool;
}

SplitAssignment make_split(const Dataset& d, SplitStrategy strategy, double train_fraction,
                           std::uint64_t seed) {
  SplitAssignment split;
  split.strategy = strategy;
  IndexSet all(d.size());
  for (std::size_t i = 0; i < d.size(); ++i) all[i] = i;
  if (strategy != SplitStrategy::Sh) {
    split.train_idx = all;
    split.test_idx = all;
    split.train_fraction = 1.0;
    return split;
  }
  if (!(train_fraction > 0.0 && train_fraction < 1.0))
    raise(ErrorCode::invalid_argument, "Sh requires 0 < train_fraction < 1");
  split.train_fraction = train_fraction;
  const IndexSet in = d.indices_of(Label::inlier);
  const IndexSet out = d.indices_of(Label::outlier);
  const std::size_t n_train = round_half_up(train_fraction * static_cast<double>(d.size()));
  std::size_t n_train_out = std::min(round_half_up(train_fraction * static_cast<double>(out.size())), out.size());
  std::size_t n_train_in = std::min(n_train - std::min(n_train, n_train_out), in.size());
  n_train_out = n_train - n_train_in;
  Rng rng(derive_seed(seed, "split"));
  split.train_idx = merge(sample_without_replacement(in, n_train_in, rng),
                          sample_without_replacement(out, n_train_out, rng));
  std::set_difference(all.begin(), all.end(), split.train_idx.begin(), split.train_idx.end(),
                      std::back_inserter(split.test_idx));
  return split;
}

IndexSet fit_indices(const SplitAssignment& split, const PoolState& pool) {
  if (split.strategy == SplitStrategy::Si) return pool.labeled_inliers();
  return split.train_idx;
}

Dataset make_blob_dataset(const BlobSpec& spec, std::uint64_t seed, std::string name) {
  if (spec.dims == 0 || spec.inliers == 0) raise(ErrorCode::invalid_argument, "blob needs dims and inliers");
  Rng rng(derive_seed(seed, "blob"));
  auto normal = [&rng] {
    double u1 = rng.uniform();
    while (u1 <= 0.0) u1 = rng.uniform();
    const double u2 = rng.uniform();
    return std::sqrt(-2.0 * std::log(u1)) * std::cos(2.0 * std::numbers::pi * u2);
  };
  const std::size_t n = spec.inliers + spec.outliers;
  Dataset d;
  d.name = std::move(name);
  d.seed = seed;
  d.X.resize(static_cast<Eigen::Index>(n), static_cast<Eigen::Index>(spec.dims));
  d.y.assign(n, Label::inlier);
  for (std::size_t i = 0; i < spec.inliers; ++i)
    for (std::size_t j = 0; j < spec.dims; ++j)
      d.X(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)) = spec.spread * normal();
  for (std::size_t i = spec.inliers; i < n; ++i) {
    d.y[i] = Label::outlier;
    for (;;) {
      double r2 = 0.0;
      for (std::size_t j = 0; j < spec.dims; ++j) {
        const double v = (2.0 * rng.uniform() - 1.0) * spec.outlier_box * spec.spread;
        d.X(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)) = v;
        r2 += v * v;
      }
      if (std::sqrt(r2) >= spec.min_outlier_distance * spec.spread) break;
    }
  }
  normalize_min_max(d.X);
  remove_duplicates(d);
  return d;
}

}  // namespace ocal
