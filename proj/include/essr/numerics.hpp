#pragma once

#include <Eigen/Dense>
#include <limits>
#include <vector>

namespace essr {

using Matrix = Eigen::MatrixXd;
using Vector = Eigen::VectorXd;

inline constexpr double kDefaultRankTol = 1e-6;
inline constexpr double kSymmetryTol = 1e-10;
inline constexpr double kZeroNorm = 1e-30;

struct SpectralSummary {
  std::vector<double> singular_values;  // nonincreasing
  int numerical_rank = 0;
  double condition_number = 1.0;        // +inf when sigma_min == 0
  bool infinite_condition = false;
};

// Throws ConfigInvalid if any entry is NaN or Inf.
void require_finite(const Matrix& m);

/// Natural-log determinant of a symmetric positive-definite matrix via
/// Cholesky (2 * sum log diag L). The input is symmetrized after a relative
/// symmetry check at kSymmetryTol.
double logdet_psd(const Matrix& m);

SpectralSummary spectral_summary(const Matrix& m, double rank_tol = kDefaultRankTol);

/// v / ||v||_2. Throws ZeroVector when ||v|| < kZeroNorm.
Vector project_sphere(const Vector& v);

/// Independent ridge-regression route to E z: solves the m x m system
/// (I + alpha Z^T Z) beta = alpha Z^T z directly and returns alpha (z - Z beta).
Vector ridge_residual_oracle(const Matrix& z_mat, const Vector& z, double alpha);

/// (M + M^T) / 2.
Matrix symmetrize(const Matrix& m);

/// Inverse of I + alpha * W W^T (W is n x p) computed through whichever
/// Cholesky system is smaller: the n x n form directly, or the p x p
/// Woodbury form  I - alpha W (I + alpha W^T W)^{-1} W^T.
enum class InverseForm { Auto, Direct, Woodbury };
Matrix regularized_gram_inverse(const Matrix& w, double alpha, InverseForm form = InverseForm::Auto);

/// I + alpha W W^T, exactly symmetric.
Matrix regularized_gram(const Matrix& w, double alpha);

}  // namespace essr
