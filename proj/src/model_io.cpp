#include "essr/model_io.hpp"

#include <bit>
#include <cstring>
#include <fstream>
#include <iterator>

#include <zlib.h>

#include "essr/error.hpp"

namespace essr {

namespace {

constexpr char kMagic[4] = {'E', 'S', 'S', 'R'};

class Writer {
 public:
  void bytes(const void* p, std::size_t len) {
    const auto* b = static_cast<const std::uint8_t*>(p);
    out_.insert(out_.end(), b, b + len);
  }
  template <typename U>
  void uint(U v) {
    for (std::size_t i = 0; i < sizeof(U); ++i) out_.push_back(static_cast<std::uint8_t>(v >> (8 * i)));
  }
  void f64(double v) { uint(std::bit_cast<std::uint64_t>(v)); }
  void matrix(const Matrix& m) {
    for (Eigen::Index r = 0; r < m.rows(); ++r)
      for (Eigen::Index c = 0; c < m.cols(); ++c) f64(m(r, c));
  }
  std::vector<std::uint8_t>& data() { return out_; }

 private:
  std::vector<std::uint8_t> out_;
};

class Reader {
 public:
  Reader(const std::uint8_t* p, std::size_t len) : p_(p), len_(len) {}
  void need(std::size_t len) const {
    if (len_ - pos_ < len) throw Error(ErrorKind::Truncated, "model file ends early at byte " + std::to_string(pos_));
  }
  template <typename U>
  U uint() {
    need(sizeof(U));
    U v = 0;
    for (std::size_t i = 0; i < sizeof(U); ++i) v |= static_cast<U>(static_cast<U>(p_[pos_ + i]) << (8 * i));
    pos_ += sizeof(U);
    return v;
  }
  double f64() { return std::bit_cast<double>(uint<std::uint64_t>()); }
  Matrix matrix(Eigen::Index rows, Eigen::Index cols) {
    need(static_cast<std::size_t>(rows * cols) * 8);
    Matrix m(rows, cols);
    for (Eigen::Index r = 0; r < rows; ++r)
      for (Eigen::Index c = 0; c < cols; ++c) m(r, c) = f64();
    return m;
  }
  std::size_t pos() const noexcept { return pos_; }
  std::size_t remaining() const noexcept { return len_ - pos_; }

 private:
  const std::uint8_t* p_;
  std::size_t len_;
  std::size_t pos_ = 0;
};

std::uint32_t crc_of(const std::uint8_t* p, std::size_t len) {
  uLong crc = crc32(0L, Z_NULL, 0);
  // zlib takes uInt lengths; feed in chunks
  while (len > 0) {
    const auto chunk = static_cast<uInt>(std::min<std::size_t>(len, 1u << 30));
    crc = crc32(crc, p, chunk);
    p += chunk;
    len -= chunk;
  }
  return static_cast<std::uint32_t>(crc);
}

}  // namespace

std::size_t layer_record_bytes(std::size_t n, std::size_t k) noexcept {
  return 8 + 1 + 8 * k * k + 8 * n * n + 8 * k * n * n + 8 * k;
}

std::vector<std::uint8_t> serialize(const TrainedModel& model) {
  const auto n = static_cast<std::size_t>(model.dim);
  const auto k = static_cast<std::size_t>(model.k);
  const Hyperparams& hp = model.hyperparams;
  Writer w;
  w.bytes(kMagic, 4);
  w.uint<std::uint32_t>(kModelFormatVersion);
  w.uint<std::uint64_t>(n);
  w.uint<std::uint64_t>(k);
  w.uint<std::uint64_t>(model.layers.size());
  w.f64(hp.epsilon_sq);
  w.f64(hp.eta);
  w.f64(hp.lambda);
  w.f64(hp.cap);
  w.f64(hp.tau_step);
  w.uint<std::uint32_t>(static_cast<std::uint32_t>(hp.mode));

  for (const LayerParams& layer : model.layers) {
    if (static_cast<std::size_t>(layer.expansion.rows()) != n || layer.compressions.size() != k ||
        layer.gammas.size() != k || static_cast<std::size_t>(layer.posterior.rows()) != k) {
      throw Error(ErrorKind::DimensionMismatch, "layer shape does not match model header");
    }
    w.f64(layer.weight);
    w.uint<std::uint8_t>(layer.bayes_active ? 1 : 0);
    w.matrix(layer.posterior);
    w.matrix(layer.expansion);
    for (const Matrix& c : layer.compressions) w.matrix(c);
    for (double g : layer.gammas) w.f64(g);
  }

  w.uint<std::uint64_t>(static_cast<std::uint64_t>(model.stopped_at));
  w.uint<std::uint32_t>(static_cast<std::uint32_t>(model.stop_reason));
  w.uint<std::uint64_t>(static_cast<std::uint64_t>(hp.max_layers));
  w.uint<std::uint8_t>(hp.stopping.enabled ? 1 : 0);
  w.uint<std::uint64_t>(static_cast<std::uint64_t>(hp.stopping.stride));
  w.uint<std::uint64_t>(static_cast<std::uint64_t>(hp.stopping.window));
  w.f64(hp.stopping.tol);
  w.f64(hp.rank_tol);
  w.uint<std::uint64_t>(static_cast<std::uint64_t>(hp.diagnostics_stride));
  w.uint<std::uint8_t>(hp.force_identity_posterior ? 1 : 0);

  auto& out = w.data();
  w.uint<std::uint32_t>(crc_of(out.data(), out.size()));
  return std::move(out);
}

TrainedModel deserialize(const std::vector<std::uint8_t>& bytes) {
  if (bytes.size() < 4 || std::memcmp(bytes.data(), kMagic, 4) != 0) {
    throw Error(ErrorKind::BadMagic, "not an ESSR model file");
  }
  Reader r(bytes.data(), bytes.size());
  r.need(kModelHeaderBytes);
  r.uint<std::uint32_t>();  // magic
  const auto version = r.uint<std::uint32_t>();
  if (version != kModelFormatVersion) {
    throw Error(ErrorKind::VersionUnsupported, "model format version " + std::to_string(version));
  }
  if (bytes.size() < kModelHeaderBytes + kModelFooterBytes + kModelChecksumBytes) {
    throw Error(ErrorKind::Truncated, "model file too short");
  }
  const std::size_t body = bytes.size() - kModelChecksumBytes;
  Reader tail(bytes.data() + body, kModelChecksumBytes);
  const auto stored_crc = tail.uint<std::uint32_t>();
  const auto n = r.uint<std::uint64_t>();
  const auto k = r.uint<std::uint64_t>();
  const auto count = r.uint<std::uint64_t>();
  // a size mismatch means missing bytes, not corruption, when the header is sane
  const auto record = layer_record_bytes(n, k);
  const bool sizes_sane = n > 0 && k > 0 && n < (1u << 20) && k < (1u << 16) && count < (1ull << 40) / record;
  const std::size_t expected = sizes_sane ? kModelHeaderBytes + count * record + kModelFooterBytes + kModelChecksumBytes : 0;
  if (crc_of(bytes.data(), body) != stored_crc) {
    if (sizes_sane && bytes.size() < expected) throw Error(ErrorKind::Truncated, "model file is shorter than its header implies");
    throw Error(ErrorKind::ChecksumMismatch, "model checksum does not match contents");
  }
  if (!sizes_sane || bytes.size() != expected) {
    throw Error(ErrorKind::Truncated, "model file length disagrees with its header");
  }

  TrainedModel model;
  model.dim = static_cast<Eigen::Index>(n);
  model.k = static_cast<int>(k);
  Hyperparams& hp = model.hyperparams;
  hp.epsilon_sq = r.f64();
  hp.eta = r.f64();
  hp.lambda = r.f64();
  hp.cap = r.f64();
  hp.tau_step = r.f64();
  const auto mode = r.uint<std::uint32_t>();
  if (mode > static_cast<std::uint32_t>(Mode::Ess)) throw Error(ErrorKind::ParseError, "unknown mode code in model file");
  hp.mode = static_cast<Mode>(mode);

  const auto nn = static_cast<Eigen::Index>(n);
  const auto kk = static_cast<Eigen::Index>(k);
  model.layers.reserve(count);
  for (std::uint64_t l = 0; l < count; ++l) {
    LayerParams layer;
    layer.weight = r.f64();
    layer.bayes_active = r.uint<std::uint8_t>() != 0;
    layer.posterior = r.matrix(kk, kk);
    layer.expansion = r.matrix(nn, nn);
    for (std::uint64_t j = 0; j < k; ++j) layer.compressions.push_back(r.matrix(nn, nn));
    for (std::uint64_t j = 0; j < k; ++j) layer.gammas.push_back(r.f64());
    model.layers.push_back(std::move(layer));
  }

  model.stopped_at = static_cast<int>(r.uint<std::uint64_t>());
  const auto reason = r.uint<std::uint32_t>();
  if (reason > static_cast<std::uint32_t>(StopReason::MaxLayers)) throw Error(ErrorKind::ParseError, "unknown stop reason");
  model.stop_reason = static_cast<StopReason>(reason);
  hp.max_layers = static_cast<int>(r.uint<std::uint64_t>());
  hp.stopping.enabled = r.uint<std::uint8_t>() != 0;
  hp.stopping.stride = static_cast<int>(r.uint<std::uint64_t>());
  hp.stopping.window = static_cast<int>(r.uint<std::uint64_t>());
  hp.stopping.tol = r.f64();
  hp.rank_tol = r.f64();
  hp.diagnostics_stride = static_cast<int>(r.uint<std::uint64_t>());
  hp.force_identity_posterior = r.uint<std::uint8_t>() != 0;
  return model;
}

void save_model(const TrainedModel& model, const std::string& path) {
  const std::vector<std::uint8_t> bytes = serialize(model);
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw Error(ErrorKind::IoError, "cannot write " + path);
  out.write(reinterpret_cast<const char*>(bytes.data()), static_cast<std::streamsize>(bytes.size()));
  if (!out) throw Error(ErrorKind::IoError, "write failed for " + path);
}

TrainedModel load_model(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(ErrorKind::IoError, "cannot open " + path);
  std::vector<std::uint8_t> bytes((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
  return deserialize(bytes);
}

}  // namespace essr
