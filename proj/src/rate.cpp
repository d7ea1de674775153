#include "essr/rate.hpp"

#include <cmath>
#include <string>

#include "essr/error.hpp"

namespace essr {

namespace {

void require_matching(const Matrix& z_mat, const MembershipEncoding& pi) {
  if (pi.samples() != z_mat.cols()) {
    throw Error(ErrorKind::DimensionMismatch, "membership covers " + std::to_string(pi.samples()) +
                                                  " samples but Z has " + std::to_string(z_mat.cols()));
  }
}

double checked_class_size(const MembershipEncoding& pi, int j) {
  const double size = pi.class_size(j);
  if (!(size > 0.0)) throw Error(ErrorKind::EmptyClass, "class " + std::to_string(j) + " has zero membership");
  return size;
}

}  // namespace

Matrix weighted_columns(const Matrix& z_mat, const Vector& weights) {
  Eigen::Index kept = 0;
  for (Eigen::Index i = 0; i < weights.size(); ++i) kept += weights[i] > 0.0 ? 1 : 0;
  Matrix w(z_mat.rows(), kept);
  Eigen::Index c = 0;
  for (Eigen::Index i = 0; i < weights.size(); ++i) {
    if (weights[i] <= 0.0) continue;
    // hard labels keep Z's columns untouched (sqrt(1) == 1 exactly)
    w.col(c++) = weights[i] == 1.0 ? Vector(z_mat.col(i)) : Vector(std::sqrt(weights[i]) * z_mat.col(i));
  }
  return w;
}

double logdet_regularized(const Matrix& w, double alpha) {
  if (w.cols() < w.rows()) {
    // Sylvester: det(I_n + a W W^T) = det(I_p + a W^T W)
    return logdet_psd(regularized_gram(w.transpose(), alpha));
  }
  return logdet_psd(regularized_gram(w, alpha));
}

double coding_rate(const Matrix& z_mat, const RateParams& params) {
  const double alpha = params.alpha(z_mat.rows(), static_cast<double>(z_mat.cols()));
  return 0.5 * logdet_regularized(z_mat, alpha);
}

double class_coding_rate(const Matrix& z_mat, const MembershipEncoding& pi, const RateParams& params) {
  require_matching(z_mat, pi);
  const double m = static_cast<double>(z_mat.cols());
  double total = 0.0;
  for (int j = 0; j < pi.k(); ++j) {
    const double size = checked_class_size(pi, j);
    const double alpha_j = params.alpha(z_mat.rows(), size);
    const double gamma_j = size / m;
    total += 0.5 * gamma_j * logdet_regularized(weighted_columns(z_mat, pi.column(j)), alpha_j);
  }
  return total;
}

double rate_reduction(const Matrix& z_mat, const MembershipEncoding& pi, const RateParams& params) {
  return coding_rate(z_mat, params) - class_coding_rate(z_mat, pi, params);
}

OperatorSet build_operators(const Matrix& z_mat, const MembershipEncoding& pi, const RateParams& params,
                            InverseForm form) {
  require_matching(z_mat, pi);
  const Eigen::Index n = z_mat.rows();
  const double m = static_cast<double>(z_mat.cols());

  OperatorSet ops;
  ops.alpha = params.alpha(n, m);
  ops.expansion = ops.alpha * regularized_gram_inverse(z_mat, ops.alpha, form);
  for (int j = 0; j < pi.k(); ++j) {
    const double size = checked_class_size(pi, j);
    const double alpha_j = params.alpha(n, size);
    ops.alphas.push_back(alpha_j);
    ops.gammas.push_back(size / m);
    ops.compressions.push_back(alpha_j * regularized_gram_inverse(weighted_columns(z_mat, pi.column(j)), alpha_j, form));
  }
  return ops;
}

Matrix objective_gradient(const Matrix& z_mat, const MembershipEncoding& pi, const RateParams& params) {
  const OperatorSet ops = build_operators(z_mat, pi, params);
  Matrix grad = ops.expansion * z_mat;
  for (int j = 0; j < ops.k(); ++j) {
    const auto ju = static_cast<std::size_t>(j);
    grad.noalias() -= ops.gammas[ju] * (ops.compressions[ju] * z_mat) * pi.column(j).asDiagonal();
  }
  return grad;
}

}  // namespace essr
