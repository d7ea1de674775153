#include <cstdio>
#include <fstream>
#include <iostream>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <json.hpp>

#include "essr/classify.hpp"
#include "essr/data.hpp"
#include "essr/error.hpp"
#include "essr/model_io.hpp"
#include "essr/network.hpp"

using json = nlohmann::json;

namespace {

struct CsvFlags {
  std::string label_column;
  bool no_header = false;

  essr::CsvOptions options() const {
    essr::CsvOptions o;
    o.header = !no_header;
    if (!label_column.empty()) o.label_column = label_column;
    return o;
  }
};

void add_csv_flags(CLI::App* cmd, CsvFlags& f) {
  cmd->add_option("--label-column", f.label_column, "Label column by name or index (default: 'label', else last)");
  cmd->add_flag("--no-header", f.no_header, "CSV has no header row");
}

essr::Dataset load_dataset(const std::string& path, const CsvFlags& flags) { return essr::load_csv(path, flags.options()); }

json matrix_json(const essr::Matrix& m) {
  json rows = json::array();
  for (Eigen::Index r = 0; r < m.rows(); ++r) {
    json row = json::array();
    for (Eigen::Index c = 0; c < m.cols(); ++c) row.push_back(m(r, c));
    rows.push_back(row);
  }
  return rows;
}

json vector_json(const essr::Vector& v) {
  json out = json::array();
  for (Eigen::Index i = 0; i < v.size(); ++i) out.push_back(v[i]);
  return out;
}

essr::Vector json_vector(const json& j) {
  essr::Vector v(static_cast<Eigen::Index>(j.size()));
  for (std::size_t i = 0; i < j.size(); ++i) v[static_cast<Eigen::Index>(i)] = j[i].get<double>();
  return v;
}

void write_json(const std::string& path, const json& j) {
  std::ofstream out(path);
  if (!out) throw essr::Error(essr::ErrorKind::IoError, "cannot write " + path);
  out << j.dump(2) << '\n';
}

json read_json(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw essr::Error(essr::ErrorKind::IoError, "cannot open " + path);
  try {
    return json::parse(in);
  } catch (const json::exception& e) {
    throw essr::Error(essr::ErrorKind::ParseError, path + ": " + e.what());
  }
}

std::string sidecar_path(const std::string& model_path) { return model_path + ".json"; }

json preprocessing_json(const essr::Preprocessing& p, const std::vector<std::string>& label_names, int lift_channels,
                        int filter_len, std::uint64_t lift_seed) {
  json j;
  j["input_dim"] = p.input_dim;
  j["label_names"] = label_names;
  j["zscore"] = nullptr;
  if (p.zscore) j["zscore"] = {{"mean", vector_json(p.zscore->mean)}, {"stddev", vector_json(p.zscore->stddev)}};
  j["lift"] = nullptr;
  if (!p.filters.empty()) {
    json filters = json::array();
    for (const auto& f : p.filters) filters.push_back(vector_json(f));
    j["lift"] = {{"channels", lift_channels}, {"filter_len", filter_len}, {"seed", lift_seed}, {"filters", filters}};
  }
  return j;
}

struct LoadedPreprocessing {
  essr::Preprocessing prep;
  std::vector<std::string> label_names;
};

LoadedPreprocessing load_preprocessing(const std::string& model_path) {
  LoadedPreprocessing out;
  const std::string path = sidecar_path(model_path);
  std::ifstream probe(path);
  if (!probe) return out;  // models trained outside the CLI: sphere normalization only
  const json j = read_json(path);
  try {
    out.prep.input_dim = j.at("input_dim").get<Eigen::Index>();
    out.label_names = j.at("label_names").get<std::vector<std::string>>();
    if (!j.at("zscore").is_null()) {
      out.prep.zscore = essr::ZScoreStats{json_vector(j["zscore"].at("mean")), json_vector(j["zscore"].at("stddev"))};
    }
    if (!j.at("lift").is_null()) {
      for (const auto& f : j["lift"].at("filters")) out.prep.filters.push_back(json_vector(f));
    }
  } catch (const json::exception& e) {
    throw essr::Error(essr::ErrorKind::ParseError, path + ": " + e.what());
  }
  return out;
}

// Re-express labels in the class indices of `names` (the training label map).
void align_labels(essr::Dataset& ds, const std::vector<std::string>& names) {
  if (names.empty()) return;
  std::map<std::string, int> index;
  for (std::size_t j = 0; j < names.size(); ++j) index[names[j]] = static_cast<int>(j);
  for (int& l : ds.labels) {
    const std::string& name = ds.label_names[static_cast<std::size_t>(l)];
    const auto it = index.find(name);
    if (it == index.end()) throw essr::Error(essr::ErrorKind::LabelOutOfRange, "label '" + name + "' unseen in training");
    l = it->second;
  }
  ds.label_names = names;
  ds.k = static_cast<int>(names.size());
}

void write_features(const std::string& path, const essr::Matrix& z, const essr::Dataset& ds) {
  essr::Dataset out;
  out.features = z;
  out.labels = ds.labels;
  out.k = ds.k;
  out.label_names = ds.label_names;
  essr::write_csv(path, out);
}

json metrics_json(const essr::LayerMetrics& m) {
  json j;
  j["layer"] = m.layer;
  j["R"] = m.rate;
  j["Rc"] = m.class_rate;
  j["delta_R"] = m.delta_rate;
  j["Rc_est"] = m.class_rate_est;
  j["delta_R_est"] = m.delta_rate_est;
  j["estimation_errors"] = m.estimation_errors;
  json conf = json::array();
  for (Eigen::Index r = 0; r < m.confusion.rows(); ++r) {
    json row = json::array();
    for (Eigen::Index c = 0; c < m.confusion.cols(); ++c) row.push_back(m.confusion(r, c));
    conf.push_back(row);
  }
  j["confusion"] = conf;
  if (m.diagnostics) {
    j["rank"] = m.rank;
    j["class_ranks"] = m.class_ranks;
    j["condition_numbers"] = m.condition_numbers;
  } else {
    j["rank"] = nullptr;
    j["class_ranks"] = nullptr;
    j["condition_numbers"] = nullptr;
  }
  j["w"] = m.weight;
  j["bayes_active"] = m.bayes_active;
  j["tau"] = m.tau;
  j["vanishing"] = m.vanishing;
  j["max_step"] = m.max_step;
  j["degenerate_columns"] = m.degenerate_columns;
  return j;
}

int cmd_gen(const essr::SyntheticSpec& spec, const std::string& out_path) {
  const essr::SyntheticData data = essr::generate_synthetic(spec);
  essr::write_csv(out_path, data.dataset);
  json side;
  side["provenance"] = data.dataset.provenance;
  side["seed"] = spec.seed;
  side["k"] = spec.k;
  side["n"] = spec.ambient_dim;
  side["d"] = spec.subspace_dims;
  side["per_class"] = spec.samples_per_class;
  side["noise"] = spec.noise_sigma;
  side["orthogonal"] = data.orthogonal;
  json bases = json::array();
  for (const auto& b : data.bases) bases.push_back(matrix_json(b));
  side["bases"] = bases;
  write_json(out_path + ".json", side);
  std::cerr << "wrote " << data.dataset.samples() << " samples to " << out_path << '\n';
  return 0;
}

struct TrainFlags {
  std::string data;
  CsvFlags csv;
  bool balance = false;
  std::uint64_t balance_seed = 0;
  bool zscore = false;
  int lift = 0;
  int filter_len = 0;
  std::uint64_t lift_seed = 0;
  std::string mode = "ess";
  std::string model_out;
  std::string metrics_out;
  std::string features_out;
  bool no_stop = false;
  bool deterministic = false;
};

int cmd_train(const TrainFlags& f, essr::Hyperparams hp) {
  hp.mode = essr::parse_mode(f.mode);
  hp.stopping.enabled = !f.no_stop;
  if (f.deterministic) hp.threads = 1;
  hp.validate();

  essr::Dataset ds = load_dataset(f.data, f.csv);
  if (f.balance) ds = essr::balance_undersample(ds, f.balance_seed);

  essr::Preprocessing prep;
  prep.input_dim = ds.dim();
  if (f.zscore) prep.zscore = essr::zscore_fit(ds.features);
  if (f.lift > 0) {
    const essr::Matrix base = prep.zscore ? essr::zscore_apply(ds.features, *prep.zscore) : ds.features;
    prep.filters = essr::lifting_filters(f.lift, f.filter_len, base.rows(), f.lift_seed);
  }
  const essr::Matrix x = prep.apply(ds.features);

  std::ofstream metrics;
  if (!f.metrics_out.empty()) {
    metrics.open(f.metrics_out);
    if (!metrics) throw essr::Error(essr::ErrorKind::IoError, "cannot write " + f.metrics_out);
  }
  const essr::TrainResult res = essr::train(x, ds.labels, ds.k, hp, [&](const essr::LayerMetrics& m) {
    if (metrics.is_open()) metrics << metrics_json(m).dump() << '\n';
  });
  if (metrics.is_open() && !metrics.flush()) throw essr::Error(essr::ErrorKind::IoError, "write failed for " + f.metrics_out);

  essr::save_model(res.model, f.model_out);
  const int filter_len = prep.filters.empty() ? 0 : static_cast<int>(prep.filters.front().size());
  write_json(sidecar_path(f.model_out), preprocessing_json(prep, ds.label_names, f.lift, filter_len, f.lift_seed));
  if (!f.features_out.empty()) write_features(f.features_out, res.features, ds);

  const auto& last = res.metrics.back();
  std::cout << "stopped_at=" << res.model.stopped_at << " reason=" << essr::to_string(res.model.stop_reason)
            << " delta_R=" << last.delta_rate << " errors=" << last.estimation_errors << '\n';
  return 0;
}

int cmd_transform(const std::string& model_path, const std::string& data_path, const CsvFlags& csv,
                  const std::string& out_path) {
  const essr::TrainedModel model = essr::load_model(model_path);
  const LoadedPreprocessing lp = load_preprocessing(model_path);
  const essr::Dataset ds = load_dataset(data_path, csv);
  const essr::Matrix z = essr::transform(lp.prep.apply(ds.features), model);
  write_features(out_path, z, ds);
  return 0;
}

int cmd_eval(const std::string& model_path, const std::string& train_path, const std::string& test_path,
             const CsvFlags& csv, int knn_k, double energy, int nsc_rank, const std::string& out_path) {
  const essr::TrainedModel model = essr::load_model(model_path);
  const LoadedPreprocessing lp = load_preprocessing(model_path);
  essr::Dataset train = load_dataset(train_path, csv);
  essr::Dataset test = load_dataset(test_path, csv);
  std::vector<std::string> names = lp.label_names.empty() ? train.label_names : lp.label_names;
  align_labels(train, names);
  align_labels(test, names);

  const essr::Matrix ztrain = essr::transform(lp.prep.apply(train.features), model);
  const essr::Matrix ztest = essr::transform(lp.prep.apply(test.features), model);
  const std::optional<int> rank = nsc_rank > 0 ? std::optional<int>(nsc_rank) : std::nullopt;
  const essr::SubspaceModel nsc = essr::fit_nsc(ztrain, train.labels, train.k, energy, rank);
  const auto nsc_pred = essr::nsc_classify(ztest, nsc);
  const auto knn_pred = essr::knn_classify(ztest, ztrain, train.labels, knn_k);
  const essr::GramBlockStats gs = essr::gram_block_stats(ztest, test.labels);

  json report;
  report["nsc_acc"] = essr::accuracy(nsc_pred, test.labels);
  report["knn_acc"] = essr::accuracy(knn_pred, test.labels);
  report["offblock_mean"] = gs.offblock_mean;
  report["within_mean"] = gs.within_mean;
  report["nsc_ranks"] = nsc.ranks;
  report["knn_k"] = knn_k;
  if (!out_path.empty()) write_json(out_path, report);
  std::cout << report.dump() << '\n';
  return 0;
}

int cmd_inspect(const std::string& model_path, bool as_json) {
  const essr::TrainedModel model = essr::load_model(model_path);
  const essr::Hyperparams& hp = model.hyperparams;
  if (as_json) {
    json j;
    j["version"] = essr::kModelFormatVersion;
    j["n"] = model.dim;
    j["k"] = model.k;
    j["layers"] = model.layers.size();
    j["epsilon_sq"] = hp.epsilon_sq;
    j["eta"] = hp.eta;
    j["lambda"] = hp.lambda;
    j["u"] = hp.cap;
    j["tau_step"] = hp.tau_step;
    j["mode"] = essr::to_string(hp.mode);
    j["stopped_at"] = model.stopped_at;
    j["stop_reason"] = essr::to_string(model.stop_reason);
    json rows = json::array();
    for (std::size_t l = 0; l < model.layers.size(); ++l) {
      rows.push_back({{"layer", l + 1}, {"w", model.layers[l].weight}, {"bayes", model.layers[l].bayes_active}});
    }
    j["summary"] = rows;
    std::cout << j.dump(2) << '\n';
    return 0;
  }
  std::printf("format version %u\nn %lld\nk %d\nlayers %zu\n", essr::kModelFormatVersion,
              static_cast<long long>(model.dim), model.k, model.layers.size());
  std::printf("epsilon_sq %.17g\neta %.17g\nlambda %.17g\nu %.17g\ntau_step %.17g\nmode %s\n", hp.epsilon_sq, hp.eta,
              hp.lambda, hp.cap, hp.tau_step, std::string(essr::to_string(hp.mode)).c_str());
  std::printf("layer w bayes\n");
  for (std::size_t l = 0; l < model.layers.size(); ++l) {
    std::printf("%zu %.17g %d\n", l + 1, model.layers[l].weight, model.layers[l].bayes_active ? 1 : 0);
  }
  std::printf("stopped_at %d\nstop_reason %s\n", model.stopped_at, std::string(essr::to_string(model.stop_reason)).c_str());
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Forward-constructed rate-reduction networks with estimation correction"};
  app.require_subcommand(1);
  app.set_config("--config", "", "key=value config file (flags override it)");

  essr::SyntheticSpec spec;
  std::string gen_out;
  auto* gen = app.add_subcommand("gen", "Generate a synthetic mixture-of-subspaces CSV");
  gen->add_option("--k", spec.k, "Classes")->capture_default_str();
  gen->add_option("--n", spec.ambient_dim, "Ambient dimension")->capture_default_str();
  gen->add_option("--d", spec.subspace_dims, "Subspace dimension, one value or one per class")->delimiter(',')->capture_default_str();
  gen->add_option("--per-class", spec.samples_per_class, "Samples per class, one value or one per class")
      ->delimiter(',')
      ->capture_default_str();
  gen->add_option("--noise", spec.noise_sigma, "Std of isotropic additive noise")->capture_default_str();
  gen->add_option("--seed", spec.seed, "Generator seed")->capture_default_str();
  gen->add_option("--out", gen_out, "Output CSV")->required();

  TrainFlags tf;
  essr::Hyperparams hp;
  auto* tr = app.add_subcommand("train", "Construct layers from a labelled CSV");
  tr->add_option("--data", tf.data, "Training CSV")->required();
  add_csv_flags(tr, tf.csv);
  tr->add_flag("--balance", tf.balance, "Random undersampling to the smallest class");
  tr->add_option("--balance-seed", tf.balance_seed)->capture_default_str();
  tr->add_flag("--zscore", tf.zscore, "Per-dimension z-score before lifting");
  tr->add_option("--lift", tf.lift, "Lifting channels Nc (0 = no lifting)")->capture_default_str();
  tr->add_option("--filter-len", tf.filter_len, "Lifting filter taps (0 = min(n, 9))")->capture_default_str();
  tr->add_option("--lift-seed", tf.lift_seed)->capture_default_str();
  tr->add_option("--mode", tf.mode, "baseline | bayes | expand | ess")->capture_default_str();
  tr->add_option("--epsilon-sq", hp.epsilon_sq, "Distortion eps^2")->capture_default_str();
  tr->add_option("--eta", hp.eta, "Step size")->capture_default_str();
  tr->add_option("--lambda", hp.lambda, "Estimation temperature")->capture_default_str();
  tr->add_option("--u", hp.cap, "Expansion weight cap")->capture_default_str();
  tr->add_option("--tau-step", hp.tau_step, "Tau increment per erroneous layer")->capture_default_str();
  tr->add_option("--max-layers", hp.max_layers, "Layer budget L")->capture_default_str();
  tr->add_flag("--no-stop", tf.no_stop, "Disable the condition-number stopping rule");
  tr->add_option("--stop-stride", hp.stopping.stride, "Layers between condition checks")->capture_default_str();
  tr->add_option("--stop-window", hp.stopping.window, "Consecutive checks compared")->capture_default_str();
  tr->add_option("--stop-tol", hp.stopping.tol, "Relative change tolerance")->capture_default_str();
  tr->add_option("--rank-tol", hp.rank_tol)->capture_default_str();
  tr->add_option("--diagnostics-stride", hp.diagnostics_stride, "Rank/condition metrics every N layers")->capture_default_str();
  tr->add_option("--threads", hp.threads, "Sample-parallel worker threads")->capture_default_str();
  tr->add_flag("--deterministic", tf.deterministic, "Force a single thread");
  tr->add_option("--model", tf.model_out, "Output model file")->required();
  tr->add_option("--metrics", tf.metrics_out, "Output JSON-lines metrics");
  tr->add_option("--features-out", tf.features_out, "Output CSV of training-phase features");

  std::string model_path;
  std::string data_path;
  std::string out_path;
  CsvFlags tcsv;
  auto* tx = app.add_subcommand("transform", "Apply a trained model to a CSV");
  tx->add_option("--model", model_path)->required();
  tx->add_option("--data", data_path)->required();
  tx->add_option("--out", out_path)->required();
  add_csv_flags(tx, tcsv);

  std::string eval_model;
  std::string eval_train;
  std::string eval_test;
  std::string eval_out;
  CsvFlags ecsv;
  int knn_k = 5;
  double energy = 0.95;
  int nsc_rank = 0;
  auto* ev = app.add_subcommand("eval", "NSC / KNN accuracy on transformed features");
  ev->add_option("--model", eval_model)->required();
  ev->add_option("--train", eval_train)->required();
  ev->add_option("--test", eval_test)->required();
  ev->add_option("--knn-k", knn_k)->capture_default_str();
  ev->add_option("--energy", energy, "NSC energy fraction")->capture_default_str();
  ev->add_option("--nsc-rank", nsc_rank, "Fixed NSC rank per class (0 = use energy)")->capture_default_str();
  ev->add_option("--out", eval_out, "Also write the report here");
  add_csv_flags(ev, ecsv);

  std::string inspect_model;
  bool inspect_json = false;
  auto* in = app.add_subcommand("inspect", "Print model header and per-layer summary");
  in->add_option("--model", inspect_model)->required();
  in->add_flag("--json", inspect_json);

  CLI11_PARSE(app, argc, argv);

  try {
    if (gen->parsed()) return cmd_gen(spec, gen_out);
    if (tr->parsed()) return cmd_train(tf, hp);
    if (tx->parsed()) return cmd_transform(model_path, data_path, tcsv, out_path);
    if (ev->parsed()) return cmd_eval(eval_model, eval_train, eval_test, ecsv, knn_k, energy, nsc_rank, eval_out);
    if (in->parsed()) return cmd_inspect(inspect_model, inspect_json);
  } catch (const essr::Error& e) {
    std::cerr << "essr: " << e.what() << '\n';
    return 2;
  } catch (const std::exception& e) {
    std::cerr << "essr: " << e.what() << '\n';
    return 2;
  }
  return 1;
}
