#include "essr/membership.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "essr/error.hpp"
#include "essr/kernels.hpp"
#include "essr/rate.hpp"

namespace essr {

MembershipEncoding::MembershipEncoding(Matrix weights) : weights_(std::move(weights)) {
  require_finite(weights_);
  for (Eigen::Index i = 0; i < weights_.rows(); ++i) {
    for (Eigen::Index j = 0; j < weights_.cols(); ++j) {
      const double v = weights_(i, j);
      if (v < 0.0 || v > 1.0) throw Error(ErrorKind::ConfigInvalid, "membership weight outside [0,1]");
    }
    if (std::abs(weights_.row(i).sum() - 1.0) > 1e-9) {
      throw Error(ErrorKind::ConfigInvalid, "membership row " + std::to_string(i) + " does not sum to 1");
    }
  }
}

MembershipEncoding MembershipEncoding::from_labels(std::span<const int> labels, int k) {
  if (k < 1) throw Error(ErrorKind::ConfigInvalid, "class count must be >= 1");
  Matrix w = Matrix::Zero(static_cast<Eigen::Index>(labels.size()), k);
  for (std::size_t i = 0; i < labels.size(); ++i) {
    if (labels[i] < 0 || labels[i] >= k) {
      throw Error(ErrorKind::LabelOutOfRange,
                  "label " + std::to_string(labels[i]) + " at sample " + std::to_string(i) + " not in [0," +
                      std::to_string(k) + ")");
    }
    w(static_cast<Eigen::Index>(i), labels[i]) = 1.0;
  }
  MembershipEncoding out;
  out.weights_ = std::move(w);
  return out;
}

std::vector<double> MembershipEncoding::class_sizes() const {
  std::vector<double> out(static_cast<std::size_t>(k()));
  for (int j = 0; j < k(); ++j) out[static_cast<std::size_t>(j)] = class_size(j);
  return out;
}

std::vector<int> MembershipEncoding::hard_labels() const {
  std::vector<int> out(static_cast<std::size_t>(samples()));
  for (int i = 0; i < samples(); ++i) {
    const Vector row = weights_.row(i).transpose();
    out[static_cast<std::size_t>(i)] = argmax_lowest({row.data(), static_cast<std::size_t>(row.size())});
  }
  return out;
}

int argmax_lowest(std::span<const double> v) {
  int best = 0;
  for (std::size_t j = 1; j < v.size(); ++j) {
    if (v[j] > v[static_cast<std::size_t>(best)]) best = static_cast<int>(j);
  }
  return best;
}

Vector softmax_membership(std::span<const double> norms, double lambda) {
  const auto k = static_cast<Eigen::Index>(norms.size());
  Vector logits(k);
  for (Eigen::Index j = 0; j < k; ++j) logits[j] = -lambda * norms[static_cast<std::size_t>(j)];
  const double top = logits.maxCoeff();
  double total = 0.0;
  for (Eigen::Index j = 0; j < k; ++j) {
    logits[j] = std::exp(logits[j] - top);
    total += logits[j];
  }
  return logits / total;
}

Vector estimate_membership(const Vector& z, const OperatorSet& ops, const EstimationConfig& cfg) {
  if (z.size() != ops.dim()) throw Error(ErrorKind::DimensionMismatch, "feature dimension does not match operators");
  const auto n = static_cast<std::size_t>(z.size());
  std::vector<double> norms(static_cast<std::size_t>(ops.k()));
  Vector cz(z.size());
  for (int j = 0; j < ops.k(); ++j) {
    kernels::symv({ops.compressions[static_cast<std::size_t>(j)].data(), n * n}, {z.data(), n}, {cz.data(), n});
    norms[static_cast<std::size_t>(j)] = std::sqrt(kernels::norm_sq({cz.data(), n}));
  }
  return softmax_membership(norms, cfg.lambda);
}

Matrix estimate_memberships(const Matrix& z_mat, const OperatorSet& ops, const EstimationConfig& cfg) {
  Matrix out(z_mat.cols(), ops.k());
  for (Eigen::Index i = 0; i < z_mat.cols(); ++i) {
    out.row(i) = estimate_membership(z_mat.col(i), ops, cfg).transpose();
  }
  return out;
}

EstimationReport count_estimation_errors(const Matrix& estimates, const MembershipEncoding& truth) {
  if (estimates.rows() != truth.samples() || estimates.cols() != truth.k()) {
    throw Error(ErrorKind::DimensionMismatch, "estimates and truth disagree in shape");
  }
  const std::vector<int> labels = truth.hard_labels();
  EstimationReport rep;
  rep.confusion = Eigen::MatrixXi::Zero(truth.k(), truth.k());
  for (Eigen::Index i = 0; i < estimates.rows(); ++i) {
    const Vector row = estimates.row(i).transpose();
    const int est = argmax_lowest({row.data(), static_cast<std::size_t>(row.size())});
    const int tru = labels[static_cast<std::size_t>(i)];
    rep.confusion(tru, est) += 1;
    if (est != tru) ++rep.errors;
  }
  return rep;
}

EstimationReport estimation_errors(const Matrix& z_mat, const OperatorSet& ops, const EstimationConfig& cfg,
                                   const MembershipEncoding& truth) {
  return count_estimation_errors(estimate_memberships(z_mat, ops, cfg), truth);
}

}  // namespace essr
