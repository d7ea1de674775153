#include "essr/ess_control.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "essr/error.hpp"

namespace essr {

Matrix class_confusion_probs(const Matrix& estimates, const MembershipEncoding& truth) {
  if (estimates.rows() != truth.samples() || estimates.cols() != truth.k()) {
    throw Error(ErrorKind::DimensionMismatch, "estimates and truth disagree in shape");
  }
  const int k = truth.k();
  const std::vector<int> labels = truth.hard_labels();
  Matrix sums = Matrix::Zero(k, k);
  std::vector<int> counts(static_cast<std::size_t>(k), 0);
  for (Eigen::Index l = 0; l < estimates.rows(); ++l) {
    const int i = labels[static_cast<std::size_t>(l)];
    sums.row(i) += estimates.row(l);
    counts[static_cast<std::size_t>(i)] += 1;
  }
  for (int i = 0; i < k; ++i) {
    const int count = counts[static_cast<std::size_t>(i)];
    if (count == 0) throw Error(ErrorKind::EmptyClass, "class " + std::to_string(i) + " has no samples");
    sums.row(i) /= static_cast<double>(count);
  }
  return sums;
}

Vector class_priors(const MembershipEncoding& truth) {
  Vector p(truth.k());
  for (int j = 0; j < truth.k(); ++j) p[j] = truth.class_size(j) / static_cast<double>(truth.samples());
  return p;
}

PosteriorResult posterior_from_confusion(const Matrix& confusion, const Vector& priors) {
  const Eigen::Index k = confusion.rows();
  if (confusion.cols() != k || priors.size() != k) {
    throw Error(ErrorKind::DimensionMismatch, "confusion must be k x k with k priors");
  }
  PosteriorResult out;
  out.posterior = Matrix::Zero(k, k);
  for (Eigen::Index j = 0; j < k; ++j) {
    double evidence = 0.0;
    for (Eigen::Index i = 0; i < k; ++i) evidence += priors[i] * confusion(i, j);
    if (!(evidence > 0.0)) {
      out.posterior(j, j) = 1.0;
      out.degenerate_columns.push_back(static_cast<int>(j));
      continue;
    }
    for (Eigen::Index i = 0; i < k; ++i) out.posterior(i, j) = priors[i] * confusion(i, j) / evidence;
  }
  return out;
}

Vector corrected_estimation(const Vector& pi_hat, const Matrix& posterior) {
  if (posterior.cols() != pi_hat.size()) throw Error(ErrorKind::DimensionMismatch, "posterior and estimate disagree on k");
  const Eigen::Index k = pi_hat.size();
  Vector out(k);
  // explicit loop keeps the summation order fixed (train and test must agree bitwise)
  for (Eigen::Index i = 0; i < k; ++i) {
    double acc = 0.0;
    for (Eigen::Index j = 0; j < k; ++j) acc += posterior(i, j) * pi_hat[j];
    out[i] = acc;
  }
  return out;
}

double expansion_weight(const ExpansionSchedule& schedule) { return std::min(std::exp(schedule.tau), schedule.cap); }

ExpansionSchedule advance_schedule(ExpansionSchedule schedule) {
  schedule.tau += schedule.step;
  return schedule;
}

}  // namespace essr
