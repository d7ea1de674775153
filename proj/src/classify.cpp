#include "essr/classify.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include "essr/error.hpp"

namespace essr {

SubspaceModel fit_nsc(const Matrix& z_mat, std::span<const int> labels, int k, double energy_fraction,
                      std::optional<int> fixed_rank) {
  if (static_cast<Eigen::Index>(labels.size()) != z_mat.cols()) {
    throw Error(ErrorKind::LengthMismatch, "label count does not match sample count");
  }
  if (!(energy_fraction > 0.0 && energy_fraction <= 1.0)) {
    throw Error(ErrorKind::ConfigInvalid, "energy_fraction must be in (0, 1]");
  }
  SubspaceModel model;
  model.energy_fraction = energy_fraction;
  for (int j = 0; j < k; ++j) {
    std::vector<Eigen::Index> cols;
    for (std::size_t i = 0; i < labels.size(); ++i) {
      if (labels[i] < 0 || labels[i] >= k) throw Error(ErrorKind::LabelOutOfRange, "label " + std::to_string(labels[i]));
      if (labels[i] == j) cols.push_back(static_cast<Eigen::Index>(i));
    }
    if (cols.empty()) throw Error(ErrorKind::EmptyClass, "class " + std::to_string(j) + " has no samples");
    Matrix block(z_mat.rows(), static_cast<Eigen::Index>(cols.size()));
    for (std::size_t c = 0; c < cols.size(); ++c) block.col(static_cast<Eigen::Index>(c)) = z_mat.col(cols[c]);

    Eigen::BDCSVD<Matrix> svd(block, Eigen::ComputeThinU);
    const Vector& s = svd.singularValues();
    const Eigen::Index limit = std::min(block.rows(), block.cols());
    const double smax = s.size() ? s[0] : 0.0;
    Eigen::Index numeric_rank = 0;
    for (Eigen::Index i = 0; i < s.size(); ++i) {
      if (s[i] > kDefaultRankTol * smax) ++numeric_rank;
    }
    numeric_rank = std::max<Eigen::Index>(numeric_rank, 1);

    Eigen::Index r = 0;
    if (fixed_rank) {
      r = std::clamp<Eigen::Index>(*fixed_rank, 1, limit);
    } else {
      // squared singular values below the rank tolerance carry round-off only
      const double total = s.head(numeric_rank).squaredNorm();
      double acc = 0.0;
      while (r < numeric_rank) {
        acc += s[r] * s[r];
        ++r;
        if (acc >= energy_fraction * total * (1.0 - 1e-12)) break;
      }
    }
    model.bases.push_back(svd.matrixU().leftCols(r));
    model.ranks.push_back(static_cast<int>(r));
  }
  return model;
}

std::vector<double> nsc_residuals(const Vector& z, const SubspaceModel& model) {
  std::vector<double> res;
  res.reserve(model.bases.size());
  const double zz = z.squaredNorm();
  for (const Matrix& u : model.bases) {
    if (u.rows() != z.size()) throw Error(ErrorKind::DimensionMismatch, "feature dimension does not match subspace model");
    res.push_back(zz - (u.transpose() * z).squaredNorm());
  }
  return res;
}

int nsc_classify(const Vector& z, const SubspaceModel& model) {
  const std::vector<double> res = nsc_residuals(z, model);
  return static_cast<int>(std::min_element(res.begin(), res.end()) - res.begin());
}

std::vector<int> nsc_classify(const Matrix& z_mat, const SubspaceModel& model) {
  std::vector<int> out;
  out.reserve(static_cast<std::size_t>(z_mat.cols()));
  for (Eigen::Index i = 0; i < z_mat.cols(); ++i) out.push_back(nsc_classify(Vector(z_mat.col(i)), model));
  return out;
}

int knn_classify(const Vector& z, const Matrix& train, std::span<const int> train_labels, int k_neighbors) {
  if (train.cols() == 0) throw Error(ErrorKind::EmptyTrainSet, "KNN needs at least one training sample");
  if (k_neighbors < 1) throw Error(ErrorKind::ConfigInvalid, "k_neighbors must be >= 1");
  if (train.rows() != z.size()) throw Error(ErrorKind::DimensionMismatch, "query dimension does not match training set");
  if (static_cast<Eigen::Index>(train_labels.size()) != train.cols()) {
    throw Error(ErrorKind::LengthMismatch, "label count does not match training set");
  }
  std::vector<std::pair<double, Eigen::Index>> dist;
  dist.reserve(static_cast<std::size_t>(train.cols()));
  for (Eigen::Index i = 0; i < train.cols(); ++i) dist.emplace_back((train.col(i) - z).squaredNorm(), i);
  const auto kk = std::min<std::size_t>(static_cast<std::size_t>(k_neighbors), dist.size());
  std::partial_sort(dist.begin(), dist.begin() + static_cast<std::ptrdiff_t>(kk), dist.end());

  const int classes = *std::max_element(train_labels.begin(), train_labels.end()) + 1;
  std::vector<int> votes(static_cast<std::size_t>(classes), 0);
  for (std::size_t t = 0; t < kk; ++t) votes[static_cast<std::size_t>(train_labels[static_cast<std::size_t>(dist[t].second)])] += 1;
  return static_cast<int>(std::max_element(votes.begin(), votes.end()) - votes.begin());
}

std::vector<int> knn_classify(const Matrix& queries, const Matrix& train, std::span<const int> train_labels,
                              int k_neighbors) {
  std::vector<int> out;
  out.reserve(static_cast<std::size_t>(queries.cols()));
  for (Eigen::Index i = 0; i < queries.cols(); ++i) {
    out.push_back(knn_classify(Vector(queries.col(i)), train, train_labels, k_neighbors));
  }
  return out;
}

double accuracy(std::span<const int> predictions, std::span<const int> truth) {
  if (predictions.size() != truth.size()) throw Error(ErrorKind::LengthMismatch, "prediction and truth lengths differ");
  if (truth.empty()) return 0.0;
  std::size_t hits = 0;
  for (std::size_t i = 0; i < truth.size(); ++i) hits += predictions[i] == truth[i] ? 1 : 0;
  return static_cast<double>(hits) / static_cast<double>(truth.size());
}

GramBlockStats gram_block_stats(const Matrix& z_mat, std::span<const int> labels) {
  if (static_cast<Eigen::Index>(labels.size()) != z_mat.cols()) {
    throw Error(ErrorKind::LengthMismatch, "label count does not match sample count");
  }
  const Matrix g = (z_mat.transpose() * z_mat).cwiseAbs();
  double off = 0.0;
  double within = 0.0;
  std::size_t n_off = 0;
  std::size_t n_within = 0;
  for (Eigen::Index b = 0; b < g.cols(); ++b) {
    for (Eigen::Index a = 0; a < g.rows(); ++a) {
      if (a == b) continue;
      if (labels[static_cast<std::size_t>(a)] == labels[static_cast<std::size_t>(b)]) {
        within += g(a, b);
        ++n_within;
      } else {
        off += g(a, b);
        ++n_off;
      }
    }
  }
  return {n_off ? off / static_cast<double>(n_off) : 0.0, n_within ? within / static_cast<double>(n_within) : 0.0};
}

}  // namespace essr
