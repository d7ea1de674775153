#pragma once

#include <functional>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "essr/ess_control.hpp"
#include "essr/numerics.hpp"
#include "essr/rate.hpp"

namespace essr {

/// baseline = plain ReduNet; bayes = posterior correction only; expand =
/// expansion weight only; ess = both.
enum class Mode { Baseline, Bayes, Expand, Ess };

std::string_view to_string(Mode mode) noexcept;
Mode parse_mode(std::string_view text);  // throws ConfigInvalid

struct StoppingConfig {
  bool enabled = true;
  int stride = 10;     // layers between condition-number checks
  int window = 5;      // consecutive checks that must agree
  double tol = 1e-3;   // max relative change tolerated inside the window
};

struct Hyperparams {
  double epsilon_sq = 0.1;
  double eta = 0.1;
  double lambda = 100.0;
  double cap = 10.0;
  double tau_step = 0.1;
  int max_layers = 3000;
  Mode mode = Mode::Ess;
  StoppingConfig stopping;
  double rank_tol = kDefaultRankTol;
  int diagnostics_stride = 1;  // ranks / condition numbers every this many layers (checks always get them)
  int threads = 1;             // sample-parallel updates; results do not depend on it
  bool force_identity_posterior = false;

  /// eps^2 > 0, L >= 1, eta * cap <= 1, stopping parameters sane.
  void validate() const;
};

struct LayerParams {
  Matrix expansion;
  std::vector<Matrix> compressions;
  std::vector<double> gammas;
  double weight = 1.0;
  bool bayes_active = false;
  Matrix posterior;  // identity when bayes is inactive

  int k() const noexcept { return static_cast<int>(compressions.size()); }
};

enum class StopReason { ConditionNumber, MaxLayers };
std::string_view to_string(StopReason reason) noexcept;

struct TrainedModel {
  Hyperparams hyperparams;
  Eigen::Index dim = 0;
  int k = 0;
  std::vector<LayerParams> layers;
  int stopped_at = 0;
  StopReason stop_reason = StopReason::MaxLayers;
};

struct LayerMetrics {
  int layer = 0;
  double rate = 0.0;             // R(Z)
  double class_rate = 0.0;       // Rc(Z | Pi), true labels
  double delta_rate = 0.0;       // R - Rc
  double class_rate_est = 0.0;   // Rc(Z | pi_hat)
  double delta_rate_est = 0.0;
  int estimation_errors = 0;
  Eigen::MatrixXi confusion;
  bool diagnostics = false;      // rank and condition fields filled on this layer
  int rank = 0;
  std::vector<int> class_ranks;
  std::vector<double> condition_numbers;  // I + aZZ^T first, then each class
  double weight = 1.0;
  bool bayes_active = false;
  double tau = 0.0;
  int vanishing = 0;
  double max_step = 0.0;         // max |z_pre - z| over the layer, before projection
  std::vector<int> degenerate_columns;
};

struct TrainResult {
  TrainedModel model;
  std::vector<LayerMetrics> metrics;
  Matrix features;  // Z after the last constructed layer
};

using LayerObserver = std::function<void(const LayerMetrics&)>;

/// Training phase: constructs layers forward from the unit-normalized
/// columns of x until the condition-number rule fires or max_layers is hit.
TrainResult train(const Matrix& x, std::span<const int> labels, int k, const Hyperparams& hp,
                  const LayerObserver& observer = {});

/// One layer applied to one unit feature with explicit memberships.
/// z' = P_S(z + eta (w E z - sum_j gamma_j C^j z mem_j)). Throws ZeroVector
/// if the pre-projection vector vanishes.
Vector layer_update(const Vector& z, const LayerParams& layer, const Vector& memberships, double eta);

/// Test phase: normalize, then replay every stored layer.
Matrix transform(const Matrix& x, const TrainedModel& model);
Vector transform(const Vector& x, const TrainedModel& model);

struct StopDecision {
  bool stop = false;
  double max_change = 0.0;
};

/// history holds one tuple of k+1 condition numbers per check.
StopDecision stopping_check(std::span<const std::vector<double>> history, const StoppingConfig& cfg);

}  // namespace essr
