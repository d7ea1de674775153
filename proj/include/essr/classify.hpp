#pragma once

#include <optional>
#include <span>
#include <vector>

#include "essr/numerics.hpp"

namespace essr {

struct SubspaceModel {
  std::vector<Matrix> bases;  // U_j, n x r_j with orthonormal columns
  std::vector<int> ranks;     // r_j
  double energy_fraction = 0.95;
};

/// Per class: leading left singular vectors capturing energy_fraction of the
/// squared singular values. fixed_rank overrides the fraction (clamped to the
/// block's rank bounds).
SubspaceModel fit_nsc(const Matrix& z_mat, std::span<const int> labels, int k, double energy_fraction = 0.95,
                      std::optional<int> fixed_rank = std::nullopt);

/// ||z||^2 - ||U_j^T z||^2 for every class.
std::vector<double> nsc_residuals(const Vector& z, const SubspaceModel& model);
int nsc_classify(const Vector& z, const SubspaceModel& model);
std::vector<int> nsc_classify(const Matrix& z_mat, const SubspaceModel& model);

/// Majority vote over the nearest training columns. Equal distances are
/// ordered by training index, vote ties go to the lowest class.
int knn_classify(const Vector& z, const Matrix& train, std::span<const int> train_labels, int k_neighbors);
std::vector<int> knn_classify(const Matrix& queries, const Matrix& train, std::span<const int> train_labels,
                              int k_neighbors);

double accuracy(std::span<const int> predictions, std::span<const int> truth);

struct GramBlockStats {
  double offblock_mean = 0.0;  // mean |z_a^T z_b| over pairs from different classes
  double within_mean = 0.0;    // same class, a != b
};
GramBlockStats gram_block_stats(const Matrix& z_mat, std::span<const int> labels);

}  // namespace essr
