#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include <Eigen/Core>

namespace ocal {

using Matrix = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;

/// Sorted ascending, duplicate free.
using IndexSet = std::vector<std::size_t>;

enum class Label : std::uint8_t { inlier, outlier };

enum class LabelStatus : std::uint8_t { unlabeled, labeled_inlier, labeled_outlier };

const char* to_string(Label label) noexcept;

/// Decision values within this distance of zero lie on the boundary and count
/// as inliers; the solver only places free support vectors on it to this accuracy.
inline constexpr double kBoundaryTolerance = 1e-6;

inline std::span<const double> row(const Matrix& X, std::size_t i) {
  return {X.data() + i * static_cast<std::size_t>(X.cols()), static_cast<std::size_t>(X.cols())};
}

struct Dataset {
  std::string name;
  Matrix X;
  std::vector<Label> y;
  std::uint64_t seed = 0;
  /// Set by resample() when there were too few outliers for the requested rate.
  bool outlier_limited = false;
  std::vector<std::string> warnings;

  std::size_t size() const { return y.size(); }
  std::size_t dims() const { return static_cast<std::size_t>(X.cols()); }
  std::size_t outlier_count() const;
  double outlier_rate() const;
  IndexSet indices_of(Label label) const;
  /// Rows in the order given by idx.
  Dataset subset(const IndexSet& idx) const;
};

struct CsvSchema {
  std::string label_column = "label";
};

/// Reads a CSV file with a header row, real-valued feature columns and a final
/// label column (inlier/outlier or 0/1). Columns are min-max normalized and
/// duplicate rows dropped.
Dataset load_csv(const std::filesystem::path& path, const CsvSchema& schema = {});
Dataset parse_csv(std::istream& in, std::string name, const CsvSchema& schema = {});

/// Per-column min-max scaling to [0,1]. Constant columns become zero; their
/// indices are returned.
std::vector<std::size_t> normalize_min_max(Matrix& X);

/// Removes rows whose feature vectors agree after rounding to 12 decimals.
/// Keeps the first occurrence. Returns the number removed.
std::size_t remove_duplicates(Dataset& d);

/// Draws a subsample with the requested outlier share and at most max_n rows.
/// If there are too few outliers, all of them are kept, inliers are
/// downsampled to match the rate and outlier_limited is set.
Dataset resample(const Dataset& d, double outlier_rate, std::size_t max_n, std::uint64_t seed);

class PoolState {
 public:
  PoolState() = default;
  explicit PoolState(std::size_t n) : status_(n, LabelStatus::unlabeled) {}

  std::size_t size() const { return status_.size(); }
  LabelStatus status(std::size_t i) const { return status_.at(i); }
  bool is_labeled(std::size_t i) const { return status(i) != LabelStatus::unlabeled; }
  /// Labels an unlabeled observation. Relabeling is an error.
  void assign(std::size_t i, Label label);

  IndexSet unlabeled() const;
  IndexSet labeled() const;
  IndexSet labeled_inliers() const;
  IndexSet labeled_outliers() const;
  std::size_t count(LabelStatus s) const;
  std::size_t labeled_count() const { return size() - count(LabelStatus::unlabeled); }

  const std::vector<LabelStatus>& statuses() const { return status_; }

  friend bool operator==(const PoolState&, const PoolState&) = default;

 private:
  std::vector<LabelStatus> status_;
};

enum class PoolStrategy { Pu, Pp, Pn, Pa };
enum class SplitStrategy { Sh, Sf, Si };

const char* to_string(PoolStrategy s) noexcept;
const char* to_string(SplitStrategy s) noexcept;
PoolStrategy parse_pool_strategy(std::string_view name);
SplitStrategy parse_split_strategy(std::string_view name);

/// Round half up, the convention for every stratified count.
std::size_t round_half_up(double v);

/// Initial labeled pool drawn from ground truth. `within` restricts sampling
/// to a candidate subset (the training split under Sh); empty means all rows.
/// `param` is p for Pp and n for Pn; ignored otherwise.
PoolState make_initial_pool(const Dataset& d, PoolStrategy strategy, double param, std::uint64_t seed,
                            const IndexSet& within = {});

struct SplitAssignment {
  SplitStrategy strategy = SplitStrategy::Sf;
  /// Query domain. For Si the fit set is L_in and is resolved by fit_indices().
  IndexSet train_idx;
  IndexSet test_idx;
  double train_fraction = 1.0;
};

SplitAssignment make_split(const Dataset& d, SplitStrategy strategy, double train_fraction,
                           std::uint64_t seed);

/// Rows the learner is fitted on: train split for Sh/Sf, labeled inliers for Si.
IndexSet fit_indices(const SplitAssignment& split, const PoolState& pool);

/// Synthetic benchmark: one Gaussian blob of inliers plus uniformly scattered
/// outliers kept at least `min_outlier_distance` (in blob standard deviations)
/// from the blob center. Normalized like a loaded dataset.
struct BlobSpec {
  std::size_t inliers = 150;
  std::size_t outliers = 8;
  std::size_t dims = 2;
  double spread = 1.0;
  double outlier_box = 8.0;
  double min_outlier_distance = 4.0;
};
Dataset make_blob_dataset(const BlobSpec& spec, std::uint64_t seed, std::string name = "blob");

}  // namespace ocal
