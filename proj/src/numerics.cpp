#include "essr/numerics.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "essr/error.hpp"

namespace essr {

void require_finite(const Matrix& m) {
  if (!m.allFinite()) throw Error(ErrorKind::ConfigInvalid, "matrix has non-finite entries");
}

Matrix symmetrize(const Matrix& m) { return 0.5 * (m + m.transpose()); }

namespace {

void require_symmetric(const Matrix& m) {
  if (m.rows() != m.cols()) {
    throw Error(ErrorKind::DimensionMismatch,
                "expected square matrix, got " + std::to_string(m.rows()) + "x" + std::to_string(m.cols()));
  }
  const double scale = std::max(m.cwiseAbs().maxCoeff(), 1.0);
  const double asym = (m - m.transpose()).cwiseAbs().maxCoeff();
  if (asym > kSymmetryTol * scale) {
    throw Error(ErrorKind::NotPositiveDefinite, "matrix is not symmetric (asymmetry " + std::to_string(asym) + ")");
  }
}

}  // namespace

double logdet_psd(const Matrix& m) {
  require_finite(m);
  require_symmetric(m);
  const Eigen::LLT<Matrix> llt(symmetrize(m));
  if (llt.info() != Eigen::Success) throw Error(ErrorKind::NotPositiveDefinite, "Cholesky factorization failed");
  const auto diag = llt.matrixLLT().diagonal();
  double acc = 0.0;
  for (Eigen::Index i = 0; i < diag.size(); ++i) {
    if (!(diag[i] > 0.0)) throw Error(ErrorKind::NotPositiveDefinite, "nonpositive pivot");
    acc += std::log(diag[i]);
  }
  return 2.0 * acc;
}

SpectralSummary spectral_summary(const Matrix& m, double rank_tol) {
  if (m.size() == 0) throw Error(ErrorKind::DimensionMismatch, "spectral_summary of empty matrix");
  require_finite(m);
  const Eigen::BDCSVD<Matrix> svd(m);
  const Vector& s = svd.singularValues();

  SpectralSummary out;
  out.singular_values.assign(s.data(), s.data() + s.size());
  std::sort(out.singular_values.begin(), out.singular_values.end(), std::greater<>());
  for (double& v : out.singular_values) v = std::max(v, 0.0);

  const double smax = out.singular_values.front();
  const double smin = out.singular_values.back();
  out.numerical_rank = static_cast<int>(
      std::count_if(out.singular_values.begin(), out.singular_values.end(),
                    [&](double v) { return v > rank_tol * smax; }));
  if (smin > 0.0) {
    out.condition_number = std::max(1.0, smax / smin);
  } else {
    out.condition_number = std::numeric_limits<double>::infinity();
    out.infinite_condition = true;
  }
  return out;
}

Vector project_sphere(const Vector& v) {
  const double norm = v.norm();
  if (!(norm >= kZeroNorm)) throw Error(ErrorKind::ZeroVector, "cannot project a zero vector onto the sphere");
  return v / norm;
}

Vector ridge_residual_oracle(const Matrix& z_mat, const Vector& z, double alpha) {
  if (!(alpha > 0.0)) throw Error(ErrorKind::ConfigInvalid, "ridge alpha must be positive");
  if (z_mat.rows() != z.size()) throw Error(ErrorKind::DimensionMismatch, "feature matrix and vector disagree on n");
  const Eigen::Index m = z_mat.cols();
  Matrix system = Matrix::Identity(m, m) + alpha * (z_mat.transpose() * z_mat);
  const Vector rhs = alpha * (z_mat.transpose() * z);
  const Eigen::FullPivLU<Matrix> lu(system);
  if (!lu.isInvertible()) throw Error(ErrorKind::SolveFailure, "ridge system is numerically singular");
  const Vector beta = lu.solve(rhs);
  return alpha * (z - z_mat * beta);
}

Matrix regularized_gram(const Matrix& w, double alpha) {
  const Eigen::Index n = w.rows();
  Matrix g = Matrix::Identity(n, n);
  g.selfadjointView<Eigen::Lower>().rankUpdate(w, alpha);
  return g.selfadjointView<Eigen::Lower>();
}

Matrix regularized_gram_inverse(const Matrix& w, double alpha, InverseForm form) {
  const Eigen::Index n = w.rows();
  const Eigen::Index p = w.cols();
  if (form == InverseForm::Auto) form = (p < n) ? InverseForm::Woodbury : InverseForm::Direct;

  if (form == InverseForm::Direct) {
    const Eigen::LLT<Matrix> llt(regularized_gram(w, alpha));
    if (llt.info() != Eigen::Success) throw Error(ErrorKind::NotPositiveDefinite, "I + aWW^T not positive definite");
    return symmetrize(llt.solve(Matrix::Identity(n, n)));
  }

  Matrix small = Matrix::Identity(p, p);
  small.selfadjointView<Eigen::Lower>().rankUpdate(w.transpose(), alpha);
  const Eigen::LLT<Matrix> llt(Matrix(small.selfadjointView<Eigen::Lower>()));
  if (llt.info() != Eigen::Success) throw Error(ErrorKind::NotPositiveDefinite, "I + aW^TW not positive definite");
  const Matrix inner = llt.solve(w.transpose());  // p x n
  Matrix out = Matrix::Identity(n, n) - alpha * (w * inner);
  return symmetrize(out);
}

}  // namespace essr
