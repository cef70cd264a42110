#include "psnis/model_io.hpp"

#include <zlib.h>

#include <algorithm>
#include <bit>
#include <cstring>
#include <fstream>
#include <iterator>
#include <string>

#include "psnis/errors.hpp"

namespace psnis {

namespace {

constexpr std::size_t kMagicSize = sizeof(kModelMagic);
constexpr std::size_t kCrcSize = 4;
// Guards the size arithmetic against absurd headers.
constexpr std::int64_t kMaxDim = 1 << 16;
constexpr std::int64_t kMaxClusters = 1 << 20;

class Writer {
 public:
  void bytes(const void* data, std::size_t n) {
    const auto* p = static_cast<const std::uint8_t*>(data);
    out_.insert(out_.end(), p, p + n);
  }
  void u64(std::uint64_t v) {
    for (int i = 0; i < 8; ++i) out_.push_back(static_cast<std::uint8_t>(v >> (8 * i)));
  }
  void i64(std::int64_t v) { u64(static_cast<std::uint64_t>(v)); }
  void f64(double v) { u64(std::bit_cast<std::uint64_t>(v)); }
  void u32(std::uint32_t v) {
    for (int i = 0; i < 4; ++i) out_.push_back(static_cast<std::uint8_t>(v >> (8 * i)));
  }
  std::vector<std::uint8_t>& data() { return out_; }

 private:
  std::vector<std::uint8_t> out_;
};

class Reader {
 public:
  explicit Reader(std::span<const std::uint8_t> in) : in_(in) {}

  std::uint64_t u64() {
    need(8);
    std::uint64_t v = 0;
    for (int i = 0; i < 8; ++i) v |= static_cast<std::uint64_t>(in_[pos_ + i]) << (8 * i);
    pos_ += 8;
    return v;
  }
  std::int64_t i64() { return static_cast<std::int64_t>(u64()); }
  double f64() { return std::bit_cast<double>(u64()); }
  std::size_t remaining() const { return in_.size() - pos_; }
  void skip(std::size_t n) {
    need(n);
    pos_ += n;
  }

 private:
  void need(std::size_t n) const {
    if (in_.size() - pos_ < n) throw ModelFormatError("model file is truncated");
  }
  std::span<const std::uint8_t> in_;
  std::size_t pos_ = 0;
};

}  // namespace

std::uint32_t crc32_of(std::span<const std::uint8_t> bytes) {
  uLong crc = ::crc32(0L, Z_NULL, 0);
  std::size_t off = 0;
  while (off < bytes.size()) {
    const auto chunk = static_cast<uInt>(std::min<std::size_t>(bytes.size() - off, 1u << 30));
    crc = ::crc32(crc, bytes.data() + off, chunk);
    off += chunk;
  }
  return static_cast<std::uint32_t>(crc);
}

std::vector<std::uint8_t> serialize_model(const PriorModel& model) {
  Writer w;
  const std::int64_t m = model.dim();
  w.bytes(kModelMagic, kMagicSize);
  w.i64(model.patch_size());
  w.i64(model.k_count());
  w.i64(m);
  for (const auto& c : model.clusters()) w.i64(c.size());
  w.u64(model.training_seed());
  w.f64(model.epsilon_ridge());
  for (const auto& c : model.clusters()) {
    for (Eigen::Index i = 0; i < m; ++i) w.f64(c.mean()[i]);
    for (Eigen::Index r = 0; r < m; ++r) {
      for (Eigen::Index col = 0; col < m; ++col) w.f64(c.covariance()(r, col));
    }
    const Matrix& members = c.members();
    for (Eigen::Index j = 0; j < members.cols(); ++j) {
      for (Eigen::Index i = 0; i < m; ++i) w.f64(members(i, j));
    }
  }
  const std::uint32_t crc = crc32_of(w.data());
  w.u32(crc);
  return std::move(w.data());
}

PriorModel deserialize_model(std::span<const std::uint8_t> bytes) {
  if (bytes.size() < kMagicSize + kCrcSize ||
      std::memcmp(bytes.data(), kModelMagic, kMagicSize) != 0) {
    throw ModelFormatError("not a model file (bad magic)");
  }
  const auto body = bytes.first(bytes.size() - kCrcSize);
  const auto* tail = bytes.data() + body.size();
  const std::uint32_t stored = static_cast<std::uint32_t>(tail[0]) |
                               static_cast<std::uint32_t>(tail[1]) << 8 |
                               static_cast<std::uint32_t>(tail[2]) << 16 |
                               static_cast<std::uint32_t>(tail[3]) << 24;
  if (crc32_of(body) != stored) {
    throw ModelFormatError("corrupt model (CRC mismatch)");
  }

  Reader r(body);
  r.skip(kMagicSize);
  const std::int64_t patch_size = r.i64();
  const std::int64_t k = r.i64();
  const std::int64_t m = r.i64();
  if (patch_size < 1 || patch_size > 256 || m != patch_size * patch_size ||
      m > kMaxDim || k < 1 || k > kMaxClusters) {
    throw ModelFormatError("inconsistent model header");
  }
  std::vector<std::int64_t> counts(static_cast<std::size_t>(k));
  std::uint64_t expected_doubles = 0;
  for (auto& c : counts) {
    c = r.i64();
    if (c < 1) throw ModelFormatError("model header lists an empty cluster");
    const auto per = static_cast<std::uint64_t>(m) + static_cast<std::uint64_t>(m * m) +
                     static_cast<std::uint64_t>(c) * static_cast<std::uint64_t>(m);
    expected_doubles += per;
    if (expected_doubles > body.size()) {
      throw ModelFormatError("model header does not match payload length");
    }
  }
  const std::uint64_t seed = r.u64();
  const double ridge_scale = r.f64();
  if (r.remaining() != expected_doubles * 8) {
    throw ModelFormatError("model header does not match payload length");
  }

  std::vector<ClusterModel> clusters;
  clusters.reserve(counts.size());
  for (const auto count : counts) {
    Vector mean(m);
    for (Eigen::Index i = 0; i < m; ++i) mean[i] = r.f64();
    Matrix cov(m, m);
    for (Eigen::Index row = 0; row < m; ++row) {
      for (Eigen::Index col = 0; col < m; ++col) cov(row, col) = r.f64();
    }
    Matrix members(m, count);
    for (Eigen::Index j = 0; j < count; ++j) {
      for (Eigen::Index i = 0; i < m; ++i) members(i, j) = r.f64();
    }
    clusters.push_back(ClusterModel::from_sample(std::move(mean), std::move(cov),
                                                 std::move(members), ridge_scale));
  }
  return PriorModel(std::move(clusters), static_cast<int>(patch_size), seed,
                    ridge_scale);
}

void save_model(const std::filesystem::path& path, const PriorModel& model) {
  const auto bytes = serialize_model(model);
  std::ofstream out(path, std::ios::binary);
  if (!out) throw ModelFormatError("cannot open " + path.string() + " for writing");
  out.write(reinterpret_cast<const char*>(bytes.data()),
            static_cast<std::streamsize>(bytes.size()));
  if (!out) throw ModelFormatError("write failed for " + path.string());
}

PriorModel load_model(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ModelFormatError("cannot open model " + path.string());
  const std::vector<std::uint8_t> bytes((std::istreambuf_iterator<char>(in)),
                                        std::istreambuf_iterator<char>());
  return deserialize_model(bytes);
}

}  // namespace psnis
