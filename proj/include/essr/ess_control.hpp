#pragma once

#include <vector>

#include "essr/membership.hpp"
#include "essr/numerics.hpp"

namespace essr {

/// Column-stochastic k x k matrix: entry (i, j) = P(sample in class i | estimated as j).
struct PosteriorResult {
  Matrix posterior;
  std::vector<int> degenerate_columns;  // columns replaced by e_j
};

/// Row i averages the estimates of every sample whose true class is i.
Matrix class_confusion_probs(const Matrix& estimates, const MembershipEncoding& truth);

/// Class frequencies m_i / m of a one-hot truth encoding.
Vector class_priors(const MembershipEncoding& truth);

/// Bayes rule per estimated class j. A column with zero evidence gets the
/// identity column and is listed in degenerate_columns.
PosteriorResult posterior_from_confusion(const Matrix& confusion, const Vector& priors);

/// p_c^i = sum_j posterior(i, j) * pi_hat^j
Vector corrected_estimation(const Vector& pi_hat, const Matrix& posterior);

struct ExpansionSchedule {
  double tau = 0.0;
  double step = 0.1;
  double cap = 10.0;
};

/// min(exp(tau), cap)
double expansion_weight(const ExpansionSchedule& schedule);
ExpansionSchedule advance_schedule(ExpansionSchedule schedule);

}  // namespace essr
