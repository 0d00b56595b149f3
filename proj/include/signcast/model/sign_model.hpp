#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <string>
#include <utility>
#include <vector>

#include "signcast/nn/model.hpp"
#include "signcast/video/frame.hpp"

namespace signcast::model {

struct ModelConfig {
  std::size_t input_height = 96;
  std::size_t input_width = 96;
  std::size_t input_channels = 3;
  std::size_t num_classes = 10;
  double width_multiplier = 0.25;
  std::size_t hidden_units = 1000;
  double dropout_rate = 0.75;
  std::uint64_t seed = 1;

  void validate() const;
};

/// Channel widths after applying the width multiplier: stem, then one entry
/// per depthwise-separable stage.
struct BackboneWidths {
  std::size_t stem = 0;
  std::vector<std::size_t> stages;
};

BackboneWidths backbone_widths(const ModelConfig& config);

/// Name of the last backbone layer; everything after it is the head.
inline constexpr const char* kBackboneEnd = "block3_pw_relu";

/// stem conv 3x3/2 -> relu -> 3 x [depthwise 3x3/2 -> relu -> pointwise -> relu]
/// -> global average pool -> dense(hidden) -> relu -> dropout -> dense(K)
/// -> softmax
template <typename T>
nn::BasicModel<T> build_network(const ModelConfig& config);

struct Prediction {
  std::vector<float> probabilities;
  std::vector<std::pair<std::size_t, float>> top_k;  // descending, ties to lower index
  std::size_t label = 0;

  float confidence() const { return probabilities.at(label); }
};

/// Builds the Prediction for a probability vector; argmax ties go to the
/// lowest index.
Prediction make_prediction(std::vector<float> probabilities, std::size_t k = 5);

class SignModel {
 public:
  explicit SignModel(ModelConfig config);

  const ModelConfig& config() const noexcept { return config_; }
  nn::Model& network() noexcept { return network_; }
  const nn::Model& network() const noexcept { return network_; }

  /// Frame of any size; resized and normalized to the configured input.
  Prediction predict_frame(const video::Frame& frame);
  /// Already-preprocessed HxWxC tensor.
  Prediction predict_tensor(const nn::Tensor& input);
  /// Mean of the per-frame probability vectors of exactly 12 frames.
  Prediction predict_clip(const video::Clip& clip);

  nn::Tensor preprocess(const video::Frame& frame) const;

  /// Freezes every layer up to and including the backbone.
  void set_backbone_frozen(bool frozen);

  /// Parameters plus a "meta.config" record describing the architecture.
  nn::ModelWeights to_weights() const;
  static SignModel from_weights(const nn::ModelWeights& weights);

  void save(const std::filesystem::path& path) const;
  static SignModel load(const std::filesystem::path& path);

 private:
  ModelConfig config_;
  nn::Model network_;
};

}  // namespace signcast::model
