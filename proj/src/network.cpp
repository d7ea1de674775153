#include "essr/network.hpp"

#include <cmath>
#include <cstdlib>
#include <limits>
#include <string>

#include "essr/error.hpp"
#include "essr/kernels.hpp"
#include "essr/membership.hpp"
#include "parallel.hpp"

namespace essr {

std::string_view to_string(Mode mode) noexcept {
  switch (mode) {
    case Mode::Baseline: return "baseline";
    case Mode::Bayes: return "bayes";
    case Mode::Expand: return "expand";
    case Mode::Ess: return "ess";
  }
  return "unknown";
}

Mode parse_mode(std::string_view text) {
  if (text == "baseline") return Mode::Baseline;
  if (text == "bayes") return Mode::Bayes;
  if (text == "expand") return Mode::Expand;
  if (text == "ess") return Mode::Ess;
  throw Error(ErrorKind::ConfigInvalid, "unknown mode '" + std::string(text) + "'");
}

std::string_view to_string(StopReason reason) noexcept {
  return reason == StopReason::ConditionNumber ? "condition_number" : "max_layers";
}

void Hyperparams::validate() const {
  if (!(epsilon_sq > 0.0)) throw Error(ErrorKind::ConfigInvalid, "epsilon_sq must be > 0");
  if (!(eta >= 0.0)) throw Error(ErrorKind::ConfigInvalid, "eta must be >= 0");
  if (!(cap >= 1.0)) throw Error(ErrorKind::ConfigInvalid, "expansion cap u must be >= 1");
  if (eta * cap > 1.0 + 1e-12) {
    throw Error(ErrorKind::ConfigInvalid,
                "eta * u = " + std::to_string(eta * cap) + " exceeds 1 (expansion weight would dominate)");
  }
  if (!(tau_step >= 0.0)) throw Error(ErrorKind::ConfigInvalid, "tau_step must be >= 0");
  if (!std::isfinite(lambda) || lambda < 0.0) throw Error(ErrorKind::ConfigInvalid, "lambda must be finite and >= 0");
  if (max_layers < 1) throw Error(ErrorKind::ConfigInvalid, "max_layers must be >= 1");
  if (stopping.stride < 1 || stopping.window < 2 || !(stopping.tol > 0.0)) {
    throw Error(ErrorKind::ConfigInvalid, "stopping needs stride >= 1, window >= 2, tol > 0");
  }
  if (diagnostics_stride < 1) throw Error(ErrorKind::ConfigInvalid, "diagnostics_stride must be >= 1");
}

namespace {

int resolve_threads(int requested) {
  if (const char* env = std::getenv("ESSR_THREADS")) {
    const int v = std::atoi(env);
    if (v > 0) return v;
  }
  return std::max(requested, 1);
}

// Scale column to unit length with the kernel path; false if it vanished.
bool normalize_in_place(double* v, std::size_t n) {
  const double norm = std::sqrt(kernels::norm_sq({v, n}));
  if (!(norm >= kZeroNorm)) return false;
  kernels::scale({v, n}, 1.0 / norm);
  return true;
}

// Per-sample quantities shared by the estimate and the update: E z, C^j z
// and pi_hat. Training and testing both go through these two functions so
// replaying a model reproduces the training features exactly.
struct SampleView {
  double* e;
  std::vector<double*> c;
};

void probe_sample(const double* z, const LayerParams& layer, double lambda, SampleView out, double* pi_hat,
                  std::size_t n) {
  const std::size_t k = layer.compressions.size();
  kernels::symv({layer.expansion.data(), n * n}, {z, n}, {out.e, n});
  std::vector<double> norms(k);
  for (std::size_t j = 0; j < k; ++j) {
    kernels::symv({layer.compressions[j].data(), n * n}, {z, n}, {out.c[j], n});
    norms[j] = std::sqrt(kernels::norm_sq({out.c[j], n}));
  }
  const Vector p = softmax_membership(norms, lambda);
  for (std::size_t j = 0; j < k; ++j) pi_hat[j] = p[static_cast<Eigen::Index>(j)];
}

struct StepOutcome {
  bool vanished = false;
  double max_step = 0.0;
};

StepOutcome advance_sample(const double* z, const SampleView& view, const LayerParams& layer, const double* memberships,
                           double eta, double* out, std::size_t n) {
  const std::size_t k = layer.compressions.size();
  std::vector<double> coef(k);
  for (std::size_t j = 0; j < k; ++j) coef[j] = layer.gammas[j] * memberships[j];
  std::vector<const double*> cptr(view.c.begin(), view.c.end());
  kernels::active().increment(z, view.e, cptr.data(), coef.data(), k, eta, layer.weight, out, n);

  StepOutcome res;
  for (std::size_t i = 0; i < n; ++i) res.max_step = std::max(res.max_step, std::abs(out[i] - z[i]));
  if (!normalize_in_place(out, n)) {
    std::copy(z, z + n, out);
    res.vanished = true;
  }
  return res;
}

Matrix normalized_columns(const Matrix& x) {
  Matrix z = x;
  const auto n = static_cast<std::size_t>(z.rows());
  for (Eigen::Index i = 0; i < z.cols(); ++i) {
    if (!normalize_in_place(z.col(i).data(), n)) {
      throw Error(ErrorKind::ZeroVector, "sample " + std::to_string(i) + " has zero norm");
    }
  }
  return z;
}

// Applies one stored layer to every column of z (test phase).
Matrix replay_layer(const Matrix& z, const LayerParams& layer, const Hyperparams& hp, int threads) {
  const auto n = static_cast<std::size_t>(z.rows());
  const std::size_t k = layer.compressions.size();
  Matrix out(z.rows(), z.cols());
  detail::parallel_for(z.cols(), threads, [&](std::int64_t begin, std::int64_t end) {
    Vector e(z.rows());
    std::vector<Vector> c(k, Vector(z.rows()));
    SampleView view{e.data(), {}};
    for (auto& v : c) view.c.push_back(v.data());
    Vector pi_hat(static_cast<Eigen::Index>(k));
    for (std::int64_t i = begin; i < end; ++i) {
      const double* zi = z.col(i).data();
      probe_sample(zi, layer, hp.lambda, view, pi_hat.data(), n);
      const Vector mem = layer.bayes_active ? corrected_estimation(pi_hat, layer.posterior) : pi_hat;
      advance_sample(zi, view, layer, mem.data(), hp.eta, out.col(i).data(), n);
    }
  });
  return out;
}

std::vector<int> class_ranks(const Matrix& z, std::span<const int> labels, int k, double rank_tol) {
  std::vector<int> out;
  for (int j = 0; j < k; ++j) {
    std::vector<Eigen::Index> cols;
    for (std::size_t i = 0; i < labels.size(); ++i) {
      if (labels[i] == j) cols.push_back(static_cast<Eigen::Index>(i));
    }
    out.push_back(spectral_summary(z(Eigen::all, cols), rank_tol).numerical_rank);
  }
  return out;
}

std::vector<double> condition_numbers(const Matrix& z, const MembershipEncoding& truth, const OperatorSet& ops) {
  std::vector<double> out;
  out.push_back(spectral_summary(regularized_gram(z, ops.alpha)).condition_number);
  for (int j = 0; j < truth.k(); ++j) {
    const Matrix w = weighted_columns(z, truth.column(j));
    out.push_back(spectral_summary(regularized_gram(w, ops.alphas[static_cast<std::size_t>(j)])).condition_number);
  }
  return out;
}

}  // namespace

StopDecision stopping_check(std::span<const std::vector<double>> history, const StoppingConfig& cfg) {
  StopDecision d;
  const auto window = static_cast<std::size_t>(cfg.window);
  if (history.size() < window || window < 2) {
    d.max_change = std::numeric_limits<double>::infinity();
    return d;
  }
  const auto recent = history.subspan(history.size() - window);
  for (std::size_t t = 1; t < recent.size(); ++t) {
    const auto& prev = recent[t - 1];
    const auto& cur = recent[t];
    if (prev.size() != cur.size()) throw Error(ErrorKind::DimensionMismatch, "condition tuples differ in length");
    for (std::size_t q = 0; q < cur.size(); ++q) {
      if (!std::isfinite(prev[q]) || !std::isfinite(cur[q])) {
        d.max_change = std::numeric_limits<double>::infinity();
        return d;
      }
      d.max_change = std::max(d.max_change, std::abs(cur[q] - prev[q]) / std::abs(prev[q]));
    }
  }
  d.stop = d.max_change < cfg.tol;
  return d;
}

Vector layer_update(const Vector& z, const LayerParams& layer, const Vector& memberships, double eta) {
  const auto n = static_cast<std::size_t>(z.size());
  if (z.size() != layer.expansion.rows()) throw Error(ErrorKind::DimensionMismatch, "feature dimension mismatch");
  if (memberships.size() != layer.k()) throw Error(ErrorKind::DimensionMismatch, "membership length mismatch");
  Vector e(z.size());
  std::vector<Vector> c(static_cast<std::size_t>(layer.k()), Vector(z.size()));
  SampleView view{e.data(), {}};
  for (auto& v : c) view.c.push_back(v.data());
  const auto sn = n;
  kernels::symv({layer.expansion.data(), sn * sn}, {z.data(), sn}, {e.data(), sn});
  for (std::size_t j = 0; j < c.size(); ++j) {
    kernels::symv({layer.compressions[j].data(), sn * sn}, {z.data(), sn}, {c[j].data(), sn});
  }
  Vector out(z.size());
  if (advance_sample(z.data(), view, layer, memberships.data(), eta, out.data(), n).vanished) {
    throw Error(ErrorKind::ZeroVector, "pre-projection vector vanished");
  }
  return out;
}

TrainResult train(const Matrix& x, std::span<const int> labels, int k, const Hyperparams& hp,
                  const LayerObserver& observer) {
  hp.validate();
  require_finite(x);
  if (static_cast<Eigen::Index>(labels.size()) != x.cols()) {
    throw Error(ErrorKind::DimensionMismatch, "label count does not match sample count");
  }
  const MembershipEncoding truth = MembershipEncoding::from_labels(labels, k);
  for (int j = 0; j < k; ++j) {
    if (truth.class_size(j) == 0.0) throw Error(ErrorKind::EmptyClass, "class " + std::to_string(j) + " has no samples");
  }
  for (Eigen::Index i = 0; i < x.cols(); ++i) {
    if (std::abs(x.col(i).norm() - 1.0) > 1e-9) {
      throw Error(ErrorKind::ConfigInvalid, "training column " + std::to_string(i) + " is not unit-normalized");
    }
  }

  const int threads = resolve_threads(hp.threads);
  const RateParams rate{hp.epsilon_sq};
  const Vector priors = class_priors(truth);
  const Eigen::Index n = x.rows();
  const Eigen::Index m = x.cols();
  const auto nu = static_cast<std::size_t>(n);
  const auto ku = static_cast<std::size_t>(k);

  TrainResult result;
  TrainedModel& model = result.model;
  model.hyperparams = hp;
  model.dim = n;
  model.k = k;
  model.stop_reason = StopReason::MaxLayers;

  Matrix z = normalized_columns(x);
  Matrix ez(n, m);
  std::vector<Matrix> cz(ku, Matrix(n, m));
  Matrix pi_hat(k, m);  // column i = sample i's estimate
  Matrix next(n, m);
  ExpansionSchedule schedule{0.0, hp.tau_step, hp.cap};
  std::vector<std::vector<double>> cond_history;

  for (int layer_index = 1; layer_index <= hp.max_layers; ++layer_index) {
    const OperatorSet ops = build_operators(z, truth, rate);
    LayerParams layer;
    layer.expansion = ops.expansion;
    layer.compressions = ops.compressions;
    layer.gammas = ops.gammas;
    layer.posterior = Matrix::Identity(k, k);

    detail::parallel_for(m, threads, [&](std::int64_t begin, std::int64_t end) {
      for (std::int64_t i = begin; i < end; ++i) {
        SampleView view{ez.col(i).data(), {}};
        for (auto& c : cz) view.c.push_back(c.col(i).data());
        probe_sample(z.col(i).data(), layer, hp.lambda, view, pi_hat.col(i).data(), nu);
      }
    });

    const Matrix estimates = pi_hat.transpose();
    const EstimationReport report = count_estimation_errors(estimates, truth);

    LayerMetrics met;
    met.layer = layer_index;
    met.estimation_errors = report.errors;
    met.confusion = report.confusion;

    Matrix memberships = pi_hat;
    const bool correcting = report.errors > 0 && hp.mode != Mode::Baseline;
    if (correcting && (hp.mode == Mode::Bayes || hp.mode == Mode::Ess)) {
      PosteriorResult post = posterior_from_confusion(class_confusion_probs(estimates, truth), priors);
      met.degenerate_columns = post.degenerate_columns;
      layer.posterior = hp.force_identity_posterior ? Matrix(Matrix::Identity(k, k)) : post.posterior;
      layer.bayes_active = true;
      for (Eigen::Index i = 0; i < m; ++i) memberships.col(i) = corrected_estimation(pi_hat.col(i), layer.posterior);
    }
    if (correcting && (hp.mode == Mode::Expand || hp.mode == Mode::Ess)) {
      layer.weight = expansion_weight(schedule);
      schedule = advance_schedule(schedule);
    }
    met.weight = layer.weight;
    met.bayes_active = layer.bayes_active;
    met.tau = schedule.tau;

    met.rate = coding_rate(z, rate);
    met.class_rate = class_coding_rate(z, truth, rate);
    met.delta_rate = met.rate - met.class_rate;
    try {
      met.class_rate_est = class_coding_rate(z, MembershipEncoding(estimates), rate);
      met.delta_rate_est = met.rate - met.class_rate_est;
    } catch (const Error&) {
      met.class_rate_est = met.delta_rate_est = std::numeric_limits<double>::quiet_NaN();
    }

    const bool check_layer = hp.stopping.enabled && layer_index % hp.stopping.stride == 0;
    if (check_layer || layer_index % hp.diagnostics_stride == 0) {
      met.diagnostics = true;
      met.rank = spectral_summary(z, hp.rank_tol).numerical_rank;
      met.class_ranks = class_ranks(z, labels, k, hp.rank_tol);
      met.condition_numbers = condition_numbers(z, truth, ops);
    }

    std::vector<int> vanished(static_cast<std::size_t>(m), 0);
    std::vector<double> steps(static_cast<std::size_t>(m), 0.0);
    detail::parallel_for(m, threads, [&](std::int64_t begin, std::int64_t end) {
      for (std::int64_t i = begin; i < end; ++i) {
        SampleView view{ez.col(i).data(), {}};
        for (auto& c : cz) view.c.push_back(c.col(i).data());
        const StepOutcome o =
            advance_sample(z.col(i).data(), view, layer, memberships.col(i).data(), hp.eta, next.col(i).data(), nu);
        vanished[static_cast<std::size_t>(i)] = o.vanished ? 1 : 0;
        steps[static_cast<std::size_t>(i)] = o.max_step;
      }
    });
    for (std::size_t i = 0; i < vanished.size(); ++i) {
      met.vanishing += vanished[i];
      met.max_step = std::max(met.max_step, steps[i]);
    }
    z.swap(next);

    model.layers.push_back(std::move(layer));
    if (observer) observer(met);
    result.metrics.push_back(std::move(met));

    if (check_layer) {
      cond_history.push_back(result.metrics.back().condition_numbers);
      if (stopping_check(cond_history, hp.stopping).stop) {
        model.stop_reason = StopReason::ConditionNumber;
        break;
      }
    }
  }
  model.stopped_at = static_cast<int>(model.layers.size());
  result.features = std::move(z);
  return result;
}

Matrix transform(const Matrix& x, const TrainedModel& model) {
  if (x.rows() != model.dim) {
    throw Error(ErrorKind::DimensionMismatch,
                "input has dimension " + std::to_string(x.rows()) + ", model expects " + std::to_string(model.dim));
  }
  require_finite(x);
  const int threads = resolve_threads(model.hyperparams.threads);
  Matrix z = normalized_columns(x);
  for (const LayerParams& layer : model.layers) z = replay_layer(z, layer, model.hyperparams, threads);
  return z;
}

Vector transform(const Vector& x, const TrainedModel& model) {
  const Matrix one = x;
  return transform(one, model).col(0);
}

}  // namespace essr
