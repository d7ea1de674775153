#pragma once

#include <vector>

#include "essr/membership.hpp"
#include "essr/numerics.hpp"

namespace essr {

struct RateParams {
  double epsilon_sq = 0.1;

  // n / (count * eps^2); count is m for the whole set, tr(Pi^j) per class
  double alpha(Eigen::Index n, double count) const { return static_cast<double>(n) / (count * epsilon_sq); }
};

struct OperatorSet {
  Matrix expansion;                  // E = a (I + a Z Z^T)^{-1}
  std::vector<Matrix> compressions;  // C^j = a_j (I + a_j Z Pi^j Z^T)^{-1}
  std::vector<double> gammas;        // tr(Pi^j) / m
  std::vector<double> alphas;        // a_j
  double alpha = 0.0;

  int k() const noexcept { return static_cast<int>(compressions.size()); }
  Eigen::Index dim() const noexcept { return expansion.rows(); }
};

/// Z * diag(sqrt(w)) restricted to columns with w > 0, so that
/// W W^T == Z Pi Z^T for Pi = diag(w).
Matrix weighted_columns(const Matrix& z_mat, const Vector& weights);

/// log det(I + a W W^T), through the smaller of the n x n and p x p Gram forms.
double logdet_regularized(const Matrix& w, double alpha);

double coding_rate(const Matrix& z_mat, const RateParams& params);
double class_coding_rate(const Matrix& z_mat, const MembershipEncoding& pi, const RateParams& params);
double rate_reduction(const Matrix& z_mat, const MembershipEncoding& pi, const RateParams& params);

OperatorSet build_operators(const Matrix& z_mat, const MembershipEncoding& pi, const RateParams& params,
                            InverseForm form = InverseForm::Auto);

/// dDeltaR/dZ = E Z - sum_j gamma_j C^j Z Pi^j (true-membership gradient).
Matrix objective_gradient(const Matrix& z_mat, const MembershipEncoding& pi, const RateParams& params);

}  // namespace essr
