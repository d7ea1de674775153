#include "essr/data.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <fstream>
#include <map>
#include <numeric>
#include <sstream>

#include "essr/error.hpp"
#include "essr/rng.hpp"

namespace essr {

std::vector<int> Dataset::class_counts() const {
  std::vector<int> counts(static_cast<std::size_t>(k), 0);
  for (int l : labels) counts[static_cast<std::size_t>(l)] += 1;
  return counts;
}

Dataset Dataset::subset(const std::vector<Eigen::Index>& columns) const {
  Dataset out;
  out.k = k;
  out.label_names = label_names;
  out.provenance = provenance;
  out.features.resize(features.rows(), static_cast<Eigen::Index>(columns.size()));
  out.labels.reserve(columns.size());
  for (std::size_t c = 0; c < columns.size(); ++c) {
    out.features.col(static_cast<Eigen::Index>(c)) = features.col(columns[c]);
    out.labels.push_back(labels[static_cast<std::size_t>(columns[c])]);
  }
  return out;
}

void Dataset::validate() const {
  if (static_cast<Eigen::Index>(labels.size()) != features.cols()) {
    throw Error(ErrorKind::LengthMismatch, "label count does not match sample count");
  }
  for (int l : labels) {
    if (l < 0 || l >= k) throw Error(ErrorKind::LabelOutOfRange, "label " + std::to_string(l));
  }
}

namespace {

std::vector<std::string> split_row(const std::string& line) {
  std::vector<std::string> cells;
  std::string cell;
  std::istringstream in(line);
  while (std::getline(in, cell, ',')) {
    const auto b = cell.find_first_not_of(" \t\r\"");
    const auto e = cell.find_last_not_of(" \t\r\"");
    cells.push_back(b == std::string::npos ? std::string() : cell.substr(b, e - b + 1));
  }
  if (!line.empty() && line.back() == ',') cells.emplace_back();
  return cells;
}

int resolve_column(const ColumnRef& ref, const std::vector<std::string>& header, int width, int fallback) {
  if (std::holds_alternative<std::monostate>(ref)) return fallback;
  if (const int* idx = std::get_if<int>(&ref)) {
    if (*idx < 0 || *idx >= width) throw Error(ErrorKind::ParseError, "column index " + std::to_string(*idx) + " out of range");
    return *idx;
  }
  const std::string& name = std::get<std::string>(ref);
  const auto it = std::find(header.begin(), header.end(), name);
  if (it != header.end()) return static_cast<int>(it - header.begin());
  // a purely numeric name addresses a column by index
  int idx = 0;
  const auto [ptr, ec] = std::from_chars(name.data(), name.data() + name.size(), idx);
  if (ec == std::errc() && ptr == name.data() + name.size()) return resolve_column(ColumnRef{idx}, header, width, fallback);
  throw Error(ErrorKind::ParseError, "no column named '" + name + "'");
}

std::optional<double> parse_double(const std::string& s) {
  if (s.empty()) return std::nullopt;
  char* end = nullptr;
  const double v = std::strtod(s.c_str(), &end);
  if (end != s.c_str() + s.size() || !std::isfinite(v)) return std::nullopt;
  return v;
}

}  // namespace

Dataset load_csv(const std::string& path, const CsvOptions& options) {
  std::ifstream in(path);
  if (!in) throw Error(ErrorKind::IoError, "cannot open " + path);

  std::vector<std::vector<std::string>> rows;
  std::string line;
  while (std::getline(in, line)) {
    if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
    rows.push_back(split_row(line));
  }
  std::vector<std::string> header;
  if (options.header && !rows.empty()) {
    header = rows.front();
    rows.erase(rows.begin());
  }
  if (rows.empty()) throw Error(ErrorKind::EmptyFile, path + " has no data rows");

  const int width = static_cast<int>(rows.front().size());
  const auto named = std::find(header.begin(), header.end(), "label");
  const int fallback = named != header.end() ? static_cast<int>(named - header.begin()) : width - 1;
  const int label_col = resolve_column(options.label_column, header, width, fallback);
  std::vector<bool> skip(static_cast<std::size_t>(width), false);
  skip[static_cast<std::size_t>(label_col)] = true;
  for (const ColumnRef& ref : options.ignore_columns) skip[static_cast<std::size_t>(resolve_column(ref, header, width, -1))] = true;
  const auto n = static_cast<Eigen::Index>(std::count(skip.begin(), skip.end(), false));
  if (n == 0) throw Error(ErrorKind::EmptyFile, path + " has no feature columns");

  Dataset ds;
  ds.features.resize(n, static_cast<Eigen::Index>(rows.size()));
  std::map<std::string, int> label_ids;
  const int row_offset = options.header ? 2 : 1;  // 1-based file line numbers
  for (std::size_t r = 0; r < rows.size(); ++r) {
    const auto& cells = rows[r];
    if (static_cast<int>(cells.size()) != width) {
      throw Error(ErrorKind::RaggedRows, "row " + std::to_string(r + row_offset) + " has " +
                                             std::to_string(cells.size()) + " cells, expected " + std::to_string(width));
    }
    Eigen::Index f = 0;
    for (int c = 0; c < width; ++c) {
      if (skip[static_cast<std::size_t>(c)]) continue;
      const auto v = parse_double(cells[static_cast<std::size_t>(c)]);
      if (!v) {
        throw Error(ErrorKind::ParseError, "row " + std::to_string(r + row_offset) + ", col " + std::to_string(c + 1) +
                                               ": '" + cells[static_cast<std::size_t>(c)] + "' is not numeric");
      }
      ds.features(f++, static_cast<Eigen::Index>(r)) = *v;
    }
    const std::string& name = cells[static_cast<std::size_t>(label_col)];
    auto [it, inserted] = label_ids.try_emplace(name, static_cast<int>(ds.label_names.size()));
    if (inserted) ds.label_names.push_back(name);
    ds.labels.push_back(it->second);
  }
  ds.k = static_cast<int>(ds.label_names.size());
  std::ostringstream prov;
  prov << "csv:" << path << " labels{";
  for (std::size_t j = 0; j < ds.label_names.size(); ++j) prov << (j ? "," : "") << ds.label_names[j] << "->" << j;
  prov << "}";
  ds.provenance = prov.str();
  return ds;
}

void write_csv(const std::string& path, const Dataset& ds, int precision) {
  std::ofstream out(path);
  if (!out) throw Error(ErrorKind::IoError, "cannot write " + path);
  out.precision(precision);
  for (Eigen::Index r = 0; r < ds.dim(); ++r) out << 'x' << r << ',';
  out << "label\n";
  for (Eigen::Index i = 0; i < ds.samples(); ++i) {
    for (Eigen::Index r = 0; r < ds.dim(); ++r) out << ds.features(r, i) << ',';
    const int l = ds.labels[static_cast<std::size_t>(i)];
    out << (static_cast<std::size_t>(l) < ds.label_names.size() ? ds.label_names[static_cast<std::size_t>(l)]
                                                                 : std::to_string(l))
        << '\n';
  }
  if (!out) throw Error(ErrorKind::IoError, "write failed for " + path);
}

Dataset balance_undersample(const Dataset& ds, std::uint64_t seed) {
  ds.validate();
  const std::vector<int> counts = ds.class_counts();
  const int target = *std::min_element(counts.begin(), counts.end());
  SplitMix64 rng(seed);
  std::vector<Eigen::Index> keep;
  for (int j = 0; j < ds.k; ++j) {
    std::vector<Eigen::Index> members;
    for (std::size_t i = 0; i < ds.labels.size(); ++i) {
      if (ds.labels[i] == j) members.push_back(static_cast<Eigen::Index>(i));
    }
    // partial Fisher-Yates: the first `target` slots are a uniform sample
    for (int t = 0; t < target; ++t) {
      const auto pick = t + static_cast<std::size_t>(rng.below(members.size() - static_cast<std::size_t>(t)));
      std::swap(members[static_cast<std::size_t>(t)], members[pick]);
    }
    keep.insert(keep.end(), members.begin(), members.begin() + target);
  }
  std::sort(keep.begin(), keep.end());
  Dataset out = ds.subset(keep);
  out.provenance += " balanced(seed=" + std::to_string(seed) + ")";
  return out;
}

std::vector<Vector> lifting_filters(int channels, int filter_len, Eigen::Index n, std::uint64_t seed) {
  if (channels < 1) throw Error(ErrorKind::ConfigInvalid, "lifting needs at least one channel");
  if (filter_len == 0) filter_len = static_cast<int>(std::min<Eigen::Index>(n, 9));
  if (filter_len < 1 || filter_len > n) throw Error(ErrorKind::ConfigInvalid, "filter length must be in [1, n]");
  SplitMix64 rng(seed);
  std::vector<Vector> filters;
  for (int c = 0; c < channels; ++c) {
    Vector f(filter_len);
    for (int t = 0; t < filter_len; ++t) f[t] = rng.normal();
    filters.push_back(f / f.norm());
  }
  return filters;
}

Matrix lift_matrix(const Matrix& features, const std::vector<Vector>& filters) {
  const Eigen::Index n = features.rows();
  Matrix out(n * static_cast<Eigen::Index>(filters.size()), features.cols());
  for (const Vector& f : filters) {
    if (f.size() > n) throw Error(ErrorKind::ConfigInvalid, "filter longer than signal");
  }
  for (Eigen::Index i = 0; i < features.cols(); ++i) {
    const auto x = features.col(i);
    for (std::size_t c = 0; c < filters.size(); ++c) {
      const Vector& f = filters[c];
      for (Eigen::Index t = 0; t < n; ++t) {
        double acc = 0.0;
        for (Eigen::Index s = 0; s < f.size(); ++s) acc += f[s] * x[((t - s) % n + n) % n];
        out(static_cast<Eigen::Index>(c) * n + t, i) = acc;
      }
    }
  }
  return out;
}

Dataset lift_with_filters(const Dataset& ds, const std::vector<Vector>& filters) {
  Dataset out = ds;
  out.features = lift_matrix(ds.features, filters);
  out.provenance += " lifted(Nc=" + std::to_string(filters.size()) + ")";
  return out;
}

Dataset lift(const Dataset& ds, int channels, int filter_len, std::uint64_t seed) {
  Dataset out = lift_with_filters(ds, lifting_filters(channels, filter_len, ds.dim(), seed));
  out.provenance += "(seed=" + std::to_string(seed) + ")";
  return out;
}

Dataset normalize_sphere(const Dataset& ds) {
  Dataset out = ds;
  for (Eigen::Index i = 0; i < out.samples(); ++i) {
    const double norm = out.features.col(i).norm();
    if (!(norm >= kZeroNorm)) throw Error(ErrorKind::ZeroSample, "sample " + std::to_string(i) + " is all zero");
    out.features.col(i) /= norm;
  }
  return out;
}

ZScoreStats zscore_fit(const Matrix& features) {
  ZScoreStats st;
  st.mean = features.rowwise().mean();
  const Matrix centered = features.colwise() - st.mean;
  st.stddev = (centered.array().square().rowwise().sum() / std::max<double>(1.0, static_cast<double>(features.cols()))).sqrt();
  for (Eigen::Index r = 0; r < st.stddev.size(); ++r) {
    if (!(st.stddev[r] > 0.0)) st.stddev[r] = 1.0;  // constant feature: center only
  }
  return st;
}

Matrix zscore_apply(const Matrix& features, const ZScoreStats& stats) {
  if (features.rows() != stats.mean.size()) throw Error(ErrorKind::DimensionMismatch, "z-score stats dimension mismatch");
  return ((features.colwise() - stats.mean).array().colwise() / stats.stddev.array()).matrix();
}

Matrix Preprocessing::apply(const Matrix& raw) const {
  if (input_dim != 0 && raw.rows() != input_dim) {
    throw Error(ErrorKind::DimensionMismatch, "input has dimension " + std::to_string(raw.rows()) + ", preprocessing expects " +
                                                  std::to_string(input_dim));
  }
  Matrix x = zscore ? zscore_apply(raw, *zscore) : raw;
  if (!filters.empty()) x = lift_matrix(x, filters);
  Dataset tmp;
  tmp.features = std::move(x);
  return normalize_sphere(tmp).features;
}

SyntheticData generate_synthetic(const SyntheticSpec& spec) {
  if (spec.k < 1) throw Error(ErrorKind::InfeasibleSpec, "k must be >= 1");
  if (spec.ambient_dim < 1) throw Error(ErrorKind::InfeasibleSpec, "ambient dimension must be >= 1");
  if (spec.subspace_dims.size() != 1 && static_cast<int>(spec.subspace_dims.size()) != spec.k) {
    throw Error(ErrorKind::InfeasibleSpec, "give one subspace dimension or one per class");
  }
  if (spec.samples_per_class.size() != 1 && static_cast<int>(spec.samples_per_class.size()) != spec.k) {
    throw Error(ErrorKind::InfeasibleSpec, "give one sample count or one per class");
  }
  int total = 0;
  for (int j = 0; j < spec.k; ++j) {
    const int d = spec.dim_of(j);
    if (d < 1 || d > spec.ambient_dim) {
      throw Error(ErrorKind::InfeasibleSpec, "subspace dim " + std::to_string(d) + " not in [1, n=" +
                                                 std::to_string(spec.ambient_dim) + "]");
    }
    if (spec.count_of(j) < d) throw Error(ErrorKind::InfeasibleSpec, "samples_per_class must be >= subspace dim");
    total += d;
  }
  if (spec.noise_sigma < 0.0) throw Error(ErrorKind::InfeasibleSpec, "noise_sigma must be >= 0");

  SplitMix64 rng(spec.seed);
  const Eigen::Index n = spec.ambient_dim;
  auto gaussian = [&](Eigen::Index rows, Eigen::Index cols) {
    Matrix g(rows, cols);
    for (Eigen::Index c = 0; c < cols; ++c)
      for (Eigen::Index r = 0; r < rows; ++r) g(r, c) = rng.normal();
    return g;
  };
  auto orthonormal = [](const Matrix& g) {
    const Eigen::HouseholderQR<Matrix> qr(g);
    return Matrix(qr.householderQ() * Matrix::Identity(g.rows(), g.cols()));
  };

  SyntheticData out;
  out.orthogonal = total <= n;
  if (out.orthogonal) {
    const Matrix q = orthonormal(gaussian(n, total));
    int offset = 0;
    for (int j = 0; j < spec.k; ++j) {
      out.bases.push_back(q.middleCols(offset, spec.dim_of(j)));
      offset += spec.dim_of(j);
    }
  } else {
    for (int j = 0; j < spec.k; ++j) out.bases.push_back(orthonormal(gaussian(n, spec.dim_of(j))));
  }

  Dataset& ds = out.dataset;
  ds.k = spec.k;
  Eigen::Index total_samples = 0;
  for (int j = 0; j < spec.k; ++j) total_samples += spec.count_of(j);
  ds.features.resize(n, total_samples);
  Eigen::Index col = 0;
  for (int j = 0; j < spec.k; ++j) {
    const Eigen::Index per = spec.count_of(j);
    const Matrix coeffs = gaussian(spec.dim_of(j), per);
    const Matrix noise = gaussian(n, per);
    ds.features.middleCols(col, per) = out.bases[static_cast<std::size_t>(j)] * coeffs + spec.noise_sigma * noise;
    col += per;
    ds.label_names.push_back(std::to_string(j));
    for (Eigen::Index i = 0; i < per; ++i) ds.labels.push_back(j);
  }
  std::ostringstream prov;
  prov << "synthetic(k=" << spec.k << ",n=" << n << ",d=";
  for (int j = 0; j < spec.k; ++j) prov << (j ? ":" : "") << spec.dim_of(j);
  prov << ",per_class=";
  for (int j = 0; j < spec.k; ++j) prov << (j ? ":" : "") << spec.count_of(j);
  prov << ",noise=" << spec.noise_sigma << ",seed=" << spec.seed << ")";
  ds.provenance = prov.str();
  return out;
}

std::pair<Dataset, Dataset> split(const Dataset& ds, double test_fraction, std::uint64_t seed) {
  if (!(test_fraction > 0.0 && test_fraction < 1.0)) throw Error(ErrorKind::ConfigInvalid, "test_fraction must be in (0,1)");
  ds.validate();
  SplitMix64 rng(seed);
  std::vector<Eigen::Index> train_cols;
  std::vector<Eigen::Index> test_cols;
  for (int j = 0; j < ds.k; ++j) {
    std::vector<Eigen::Index> members;
    for (std::size_t i = 0; i < ds.labels.size(); ++i) {
      if (ds.labels[i] == j) members.push_back(static_cast<Eigen::Index>(i));
    }
    const auto size = members.size();
    const auto n_test = static_cast<std::size_t>(std::llround(test_fraction * static_cast<double>(size)));
    if (size > 0 && (n_test == 0 || n_test >= size)) {
      throw Error(ErrorKind::ClassTooSmall, "class " + std::to_string(j) + " of size " + std::to_string(size) +
                                                " cannot be split at fraction " + std::to_string(test_fraction));
    }
    for (std::size_t t = size; t > 1; --t) std::swap(members[t - 1], members[static_cast<std::size_t>(rng.below(t))]);
    test_cols.insert(test_cols.end(), members.begin(), members.begin() + static_cast<std::ptrdiff_t>(n_test));
    train_cols.insert(train_cols.end(), members.begin() + static_cast<std::ptrdiff_t>(n_test), members.end());
  }
  std::sort(train_cols.begin(), train_cols.end());
  std::sort(test_cols.begin(), test_cols.end());
  return {ds.subset(train_cols), ds.subset(test_cols)};
}

}  // namespace essr
