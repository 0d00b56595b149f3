#include "signcast/nn/weights_io.hpp"

#include <bit>
#include <cmath>
#include <cstring>
#include <fstream>
#include <iterator>
#include <limits>
#include <unordered_set>

namespace signcast::nn {

static_assert(sizeof(float) == 4 && std::numeric_limits<float>::is_iec559);

const Tensor* ModelWeights::find(std::string_view name) const {
  for (const auto& record : records) {
    if (record.name == name) return &record.tensor;
  }
  return nullptr;
}

const Tensor& ModelWeights::get(std::string_view name) const {
  if (const Tensor* t = find(name)) return *t;
  throw WeightsError(WeightsError::Code::kMissingRecord,
                     "weights: missing record '" + std::string(name) + "'");
}

namespace {

class Writer {
 public:
  void u8(std::uint8_t v) { bytes_.push_back(v); }
  void u16(std::uint16_t v) { put_le(v, 2); }
  void u32(std::uint32_t v) { put_le(v, 4); }
  void f32(float v) { put_le(std::bit_cast<std::uint32_t>(v), 4); }
  void raw(std::string_view s) { bytes_.insert(bytes_.end(), s.begin(), s.end()); }
  std::vector<std::uint8_t> take() { return std::move(bytes_); }

 private:
  void put_le(std::uint64_t v, int n) {
    for (int i = 0; i < n; ++i) bytes_.push_back(static_cast<std::uint8_t>(v >> (8 * i)));
  }
  std::vector<std::uint8_t> bytes_;
};

class Reader {
 public:
  explicit Reader(std::span<const std::uint8_t> bytes) : bytes_(bytes) {}

  std::uint8_t u8(const char* what) { return static_cast<std::uint8_t>(get_le(1, what)); }
  std::uint16_t u16(const char* what) { return static_cast<std::uint16_t>(get_le(2, what)); }
  std::uint32_t u32(const char* what) { return static_cast<std::uint32_t>(get_le(4, what)); }
  float f32(const char* what) { return std::bit_cast<float>(u32(what)); }

  std::string raw(std::size_t n, const char* what) {
    need(n, what);
    std::string out(reinterpret_cast<const char*>(bytes_.data() + pos_), n);
    pos_ += n;
    return out;
  }

  std::size_t remaining() const { return bytes_.size() - pos_; }

  void need(std::size_t n, const char* what) const {
    if (remaining() < n) {
      throw WeightsError(WeightsError::Code::kTruncated,
                         std::string("weights: truncated while reading ") + what + " at byte " +
                             std::to_string(pos_));
    }
  }

 private:
  std::uint64_t get_le(int n, const char* what) {
    need(static_cast<std::size_t>(n), what);
    std::uint64_t v = 0;
    for (int i = 0; i < n; ++i) v |= static_cast<std::uint64_t>(bytes_[pos_ + i]) << (8 * i);
    pos_ += static_cast<std::size_t>(n);
    return v;
  }

  std::span<const std::uint8_t> bytes_;
  std::size_t pos_ = 0;
};

}  // namespace

std::vector<std::uint8_t> save_weights(const ModelWeights& weights) {
  std::unordered_set<std::string> seen;
  Writer out;
  out.raw("SLW1");
  out.u16(kWeightsVersion);
  out.u8(kDtypeFloat32);
  if (weights.records.size() > std::numeric_limits<std::uint32_t>::max()) {
    throw WeightsError(WeightsError::Code::kInvalidShape, "weights: too many records");
  }
  out.u32(static_cast<std::uint32_t>(weights.records.size()));
  for (const auto& [name, tensor] : weights.records) {
    if (!seen.insert(name).second) {
      throw WeightsError(WeightsError::Code::kDuplicateName, "weights: duplicate record '" + name + "'");
    }
    if (name.size() > std::numeric_limits<std::uint16_t>::max()) {
      throw WeightsError(WeightsError::Code::kInvalidShape, "weights: record name too long");
    }
    if (tensor.rank() == 0 || tensor.rank() > std::numeric_limits<std::uint8_t>::max()) {
      throw WeightsError(WeightsError::Code::kInvalidShape, "weights: record '" + name + "' has unsupported rank");
    }
    if (!tensor.all_finite()) {
      throw WeightsError(WeightsError::Code::kNonFinite, "weights: record '" + name + "' is not finite");
    }
    out.u16(static_cast<std::uint16_t>(name.size()));
    out.raw(name);
    out.u8(static_cast<std::uint8_t>(tensor.rank()));
    for (const std::size_t d : tensor.shape()) {
      if (d > std::numeric_limits<std::uint32_t>::max()) {
        throw WeightsError(WeightsError::Code::kInvalidShape, "weights: dimension too large");
      }
      out.u32(static_cast<std::uint32_t>(d));
    }
    for (const float v : tensor.data()) out.f32(v);
  }
  return out.take();
}

ModelWeights load_weights(std::span<const std::uint8_t> bytes) {
  Reader in(bytes);
  if (bytes.size() < 4 || std::memcmp(bytes.data(), "SLW1", 4) != 0) {
    throw WeightsError(WeightsError::Code::kBadMagic, "weights: bad magic (expected \"SLW1\")");
  }
  (void)in.raw(4, "magic");
  const std::uint16_t version = in.u16("version");
  if (version != kWeightsVersion) {
    throw WeightsError(WeightsError::Code::kVersionMismatch,
                       "weights: unsupported version " + std::to_string(version));
  }
  const std::uint8_t dtype = in.u8("dtype");
  if (dtype != kDtypeFloat32) {
    throw WeightsError(WeightsError::Code::kUnsupportedDtype,
                       "weights: unsupported dtype tag " + std::to_string(dtype));
  }
  const std::uint32_t count = in.u32("record count");

  ModelWeights weights;
  std::unordered_set<std::string> seen;
  for (std::uint32_t r = 0; r < count; ++r) {
    const std::uint16_t name_len = in.u16("name length");
    std::string name = in.raw(name_len, "name");
    if (!seen.insert(name).second) {
      throw WeightsError(WeightsError::Code::kDuplicateName, "weights: duplicate record '" + name + "'");
    }
    const std::uint8_t rank = in.u8("rank");
    if (rank == 0) {
      throw WeightsError(WeightsError::Code::kInvalidShape, "weights: record '" + name + "' has rank 0");
    }
    Shape shape;
    std::uint64_t count_elems = 1;
    for (std::uint8_t i = 0; i < rank; ++i) {
      const std::uint32_t d = in.u32("dimension");
      if (d == 0) {
        throw WeightsError(WeightsError::Code::kInvalidShape, "weights: record '" + name + "' has a zero dimension");
      }
      count_elems *= d;
      if (count_elems > bytes.size()) {
        // Cannot possibly be backed by the remaining bytes.
        throw WeightsError(WeightsError::Code::kTruncated,
                           "weights: record '" + name + "' declares more data than the stream holds");
      }
      shape.push_back(d);
    }
    in.need(static_cast<std::size_t>(count_elems) * 4, "tensor data");
    std::vector<float> data(static_cast<std::size_t>(count_elems));
    for (float& v : data) v = in.f32("tensor data");
    weights.records.push_back({std::move(name), Tensor(std::move(shape), std::move(data))});
  }
  if (in.remaining() != 0) {
    throw WeightsError(WeightsError::Code::kTrailingBytes,
                       "weights: " + std::to_string(in.remaining()) + " trailing bytes");
  }
  return weights;
}

void save_weights_file(const ModelWeights& weights, const std::filesystem::path& path) {
  const auto bytes = save_weights(weights);
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw WeightsError(WeightsError::Code::kIo, "weights: cannot open " + path.string() + " for writing");
  out.write(reinterpret_cast<const char*>(bytes.data()), static_cast<std::streamsize>(bytes.size()));
  if (!out) throw WeightsError(WeightsError::Code::kIo, "weights: write failed for " + path.string());
}

ModelWeights load_weights_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw WeightsError(WeightsError::Code::kIo, "weights: cannot open " + path.string());
  std::vector<std::uint8_t> bytes((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
  return load_weights(bytes);
}

}  // namespace signcast::nn
