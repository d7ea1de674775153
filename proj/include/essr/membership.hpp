#pragma once

#include <span>
#include <vector>

#include "essr/numerics.hpp"

namespace essr {

struct OperatorSet;

/// Per-sample class memberships: row i holds sample i's (possibly soft)
/// weights over the k classes; column j is the diagonal of Pi^j.
class MembershipEncoding {
 public:
  MembershipEncoding() = default;
  explicit MembershipEncoding(Matrix weights);  // validates entries and row sums

  static MembershipEncoding from_labels(std::span<const int> labels, int k);

  int k() const noexcept { return static_cast<int>(weights_.cols()); }
  int samples() const noexcept { return static_cast<int>(weights_.rows()); }
  const Matrix& weights() const noexcept { return weights_; }
  Vector column(int j) const { return weights_.col(j); }
  double class_size(int j) const { return weights_.col(j).sum(); }  // tr(Pi^j)
  std::vector<double> class_sizes() const;

  // argmax of each row, ties to the lowest class index
  std::vector<int> hard_labels() const;

 private:
  Matrix weights_;
};

struct EstimationConfig {
  double lambda = 100.0;
};

/// Softmax of -lambda * norms with max subtraction.
Vector softmax_membership(std::span<const double> norms, double lambda);

/// pi_hat^j(z) = softmax_j(-lambda ||C^j z||).
Vector estimate_membership(const Vector& z, const OperatorSet& ops, const EstimationConfig& cfg);

/// Every column of Z estimated; returns an m x k matrix of simplex rows.
Matrix estimate_memberships(const Matrix& z_mat, const OperatorSet& ops, const EstimationConfig& cfg);

int argmax_lowest(std::span<const double> v);

struct EstimationReport {
  int errors = 0;
  Eigen::MatrixXi confusion;  // (true class, estimated class) counts
};

EstimationReport count_estimation_errors(const Matrix& estimates, const MembershipEncoding& truth);
EstimationReport estimation_errors(const Matrix& z_mat, const OperatorSet& ops, const EstimationConfig& cfg,
                                   const MembershipEncoding& truth);

}  // namespace essr
