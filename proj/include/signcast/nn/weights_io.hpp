#pragma once

#include <cstdint>
#include <filesystem>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

#include "signcast/nn/tensor.hpp"

namespace signcast::nn {

// Container layout ("SLW1"), all integers little-endian:
//   magic "SLW1" | u16 version = 1 | u8 dtype (0 = f32) | u32 record count
//   per record: u16 name length, UTF-8 name, u8 rank, rank x u32 dims,
//               product(dims) x f32
// No padding and no trailing bytes.

inline constexpr std::uint16_t kWeightsVersion = 1;
inline constexpr std::uint8_t kDtypeFloat32 = 0;

struct NamedTensor {
  std::string name;
  Tensor tensor;

  friend bool operator==(const NamedTensor&, const NamedTensor&) = default;
};

struct ModelWeights {
  std::vector<NamedTensor> records;

  const Tensor* find(std::string_view name) const;
  const Tensor& get(std::string_view name) const;  // throws WeightsError(kMissingRecord)

  friend bool operator==(const ModelWeights&, const ModelWeights&) = default;
};

class WeightsError : public std::runtime_error {
 public:
  enum class Code {
    kBadMagic,
    kVersionMismatch,
    kUnsupportedDtype,
    kTruncated,
    kTrailingBytes,
    kInvalidShape,
    kDuplicateName,
    kNonFinite,
    kMissingRecord,
    kShapeMismatch,
    kIo,
  };

  WeightsError(Code code, const std::string& what) : std::runtime_error(what), code_(code) {}
  Code code() const noexcept { return code_; }

 private:
  Code code_;
};

std::vector<std::uint8_t> save_weights(const ModelWeights& weights);
ModelWeights load_weights(std::span<const std::uint8_t> bytes);

void save_weights_file(const ModelWeights& weights, const std::filesystem::path& path);
ModelWeights load_weights_file(const std::filesystem::path& path);

}  // namespace signcast::nn
