#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <utility>
#include <variant>
#include <vector>

#include "essr/numerics.hpp"

namespace essr {

struct Dataset {
  Matrix features;              // n x m, one column per sample
  std::vector<int> labels;      // length m, each < k
  int k = 0;
  std::vector<std::string> label_names;  // label_names[j] = original name of class j
  std::string provenance;

  Eigen::Index dim() const noexcept { return features.rows(); }
  Eigen::Index samples() const noexcept { return features.cols(); }
  std::vector<int> class_counts() const;
  Dataset subset(const std::vector<Eigen::Index>& columns) const;
  void validate() const;  // labels length and range
};

/// Label column addressed by header name or zero-based index. Unset = the
/// column named "label" if the header has one, else the last column.
using ColumnRef = std::variant<std::monostate, std::string, int>;

struct CsvOptions {
  ColumnRef label_column;
  bool header = true;
  std::vector<ColumnRef> ignore_columns;
};

Dataset load_csv(const std::string& path, const CsvOptions& options = {});

/// One row per sample: features then the label name. Header x0..x{n-1},label.
void write_csv(const std::string& path, const Dataset& ds, int precision = 17);

Dataset balance_undersample(const Dataset& ds, std::uint64_t seed);

/// Nc seeded Gaussian filters of filter_len taps, each normalized to unit
/// l2 norm. 0 = default min(n, 9).
std::vector<Vector> lifting_filters(int channels, int filter_len, Eigen::Index n, std::uint64_t seed);

/// Circular convolution of every sample with each filter; the channel
/// outputs are stacked into one vector of length Nc * n (channel-major).
Dataset lift(const Dataset& ds, int channels, int filter_len, std::uint64_t seed);
Dataset lift_with_filters(const Dataset& ds, const std::vector<Vector>& filters);
Matrix lift_matrix(const Matrix& features, const std::vector<Vector>& filters);

Dataset normalize_sphere(const Dataset& ds);

struct ZScoreStats {
  Vector mean;
  Vector stddev;
};
ZScoreStats zscore_fit(const Matrix& features);
Matrix zscore_apply(const Matrix& features, const ZScoreStats& stats);

/// Fitted preprocessing, replayed identically on train and test data:
/// optional z-score, optional lifting, then sphere normalization.
struct Preprocessing {
  std::optional<ZScoreStats> zscore;
  std::vector<Vector> filters;  // empty = no lifting

  Eigen::Index input_dim = 0;
  Matrix apply(const Matrix& raw) const;
};

struct SyntheticSpec {
  int k = 2;
  int ambient_dim = 10;
  std::vector<int> subspace_dims{2};  // one entry applies to every class
  std::vector<int> samples_per_class{100};  // one entry applies to every class
  double noise_sigma = 0.0;
  std::uint64_t seed = 0;

  int dim_of(int j) const { return subspace_dims.size() == 1 ? subspace_dims[0] : subspace_dims[static_cast<std::size_t>(j)]; }
  int count_of(int j) const {
    return samples_per_class.size() == 1 ? samples_per_class[0] : samples_per_class[static_cast<std::size_t>(j)];
  }
};

struct SyntheticData {
  Dataset dataset;
  std::vector<Matrix> bases;  // ground-truth orthonormal basis per class
  bool orthogonal = false;
};

/// Classes get pairwise orthogonal bases when sum of dims <= n, otherwise
/// independent random bases. Samples are class-major.
SyntheticData generate_synthetic(const SyntheticSpec& spec);

/// Stratified, seeded. Per class round(test_fraction * size) samples go to test.
std::pair<Dataset, Dataset> split(const Dataset& ds, double test_fraction, std::uint64_t seed);

}  // namespace essr
