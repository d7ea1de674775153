#pragma once

// Test-side helpers and oracles. Nothing here calls into the library's
// numerical kernels so the results stay independent of what they check.

#include <cmath>
#include <cstdint>
#include <vector>

#include <Eigen/Dense>

#include "essr/rng.hpp"

namespace essr_test {

using Matrix = Eigen::MatrixXd;
using Vector = Eigen::VectorXd;

inline Matrix gaussian(essr::SplitMix64& rng, Eigen::Index rows, Eigen::Index cols) {
  Matrix g(rows, cols);
  for (Eigen::Index c = 0; c < cols; ++c)
    for (Eigen::Index r = 0; r < rows; ++r) g(r, c) = rng.normal();
  return g;
}

inline Matrix unit_columns(essr::SplitMix64& rng, Eigen::Index n, Eigen::Index m) {
  Matrix z = gaussian(rng, n, m);
  for (Eigen::Index i = 0; i < m; ++i) z.col(i) /= z.col(i).norm();
  return z;
}

inline std::vector<int> balanced_labels(int m, int k) {
  std::vector<int> l(static_cast<std::size_t>(m));
  for (int i = 0; i < m; ++i) l[static_cast<std::size_t>(i)] = i % k;
  return l;
}

// log det via the product of eigenvalues from a symmetric eigensolver.
inline double logdet_eig(const Matrix& m) {
  const Eigen::SelfAdjointEigenSolver<Matrix> es(m);
  double acc = 0.0;
  for (Eigen::Index i = 0; i < es.eigenvalues().size(); ++i) acc += std::log(es.eigenvalues()[i]);
  return acc;
}

// Coding-rate objective written straight from its definition with dense
// n x n matrices, for one-hot or soft memberships (rows of pi sum to one).
inline double delta_r_direct(const Matrix& z, const Matrix& pi, double eps_sq) {
  const double n = static_cast<double>(z.rows());
  const double m = static_cast<double>(z.cols());
  const Matrix id = Matrix::Identity(z.rows(), z.rows());
  const double r = 0.5 * logdet_eig(id + n / (m * eps_sq) * z * z.transpose());
  double rc = 0.0;
  for (Eigen::Index j = 0; j < pi.cols(); ++j) {
    const double tr = pi.col(j).sum();
    const Matrix zp = z * pi.col(j).asDiagonal() * z.transpose();
    rc += tr / (2.0 * m) * logdet_eig(id + n / (tr * eps_sq) * zp);
  }
  return r - rc;
}

inline Matrix one_hot(const std::vector<int>& labels, int k) {
  Matrix p = Matrix::Zero(static_cast<Eigen::Index>(labels.size()), k);
  for (std::size_t i = 0; i < labels.size(); ++i) p(static_cast<Eigen::Index>(i), labels[i]) = 1.0;
  return p;
}

}  // namespace essr_test
