#include "signcast/model/sign_model.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <stdexcept>

#include "signcast/video/pipeline.hpp"

namespace signcast::model {

void ModelConfig::validate() const {
  if (input_height == 0 || input_width == 0 || input_channels == 0) {
    throw std::invalid_argument("model input dimensions must be positive");
  }
  if (num_classes < 2) throw std::invalid_argument("model needs at least 2 classes");
  if (!(width_multiplier > 0.0) || !std::isfinite(width_multiplier)) {
    throw std::invalid_argument("width multiplier must be positive");
  }
  if (hidden_units == 0) throw std::invalid_argument("hidden width must be positive");
  if (!(dropout_rate >= 0.0 && dropout_rate < 1.0)) throw std::invalid_argument("dropout rate must be in [0, 1)");
}

BackboneWidths backbone_widths(const ModelConfig& config) {
  auto scaled = [&](double base) {
    return std::max<std::size_t>(1, static_cast<std::size_t>(std::lround(base * config.width_multiplier)));
  };
  return {scaled(32), {scaled(64), scaled(128), scaled(256)}};
}

template <typename T>
nn::BasicModel<T> build_network(const ModelConfig& config) {
  using nn::LayerSpec;
  config.validate();
  std::mt19937_64 rng(config.seed);
  nn::BasicModel<T> model({config.input_height, config.input_width, config.input_channels});
  const BackboneWidths widths = backbone_widths(config);

  model.add(LayerSpec::conv2d("stem", 3, widths.stem, 2), rng);
  model.add(LayerSpec::relu("stem_relu"), rng);
  for (std::size_t s = 0; s < widths.stages.size(); ++s) {
    const std::string block = "block" + std::to_string(s + 1);
    model.add(LayerSpec::depthwise(block + "_dw", 3, 2), rng);
    model.add(LayerSpec::relu(block + "_dw_relu"), rng);
    model.add(LayerSpec::pointwise(block + "_pw", widths.stages[s]), rng);
    model.add(LayerSpec::relu(block + "_pw_relu"), rng);
  }
  model.add(LayerSpec::global_avg_pool("pool"), rng);
  model.add(LayerSpec::dense("head_dense", config.hidden_units), rng);
  model.add(LayerSpec::relu("head_relu"), rng);
  model.add(LayerSpec::dropout("head_dropout", config.dropout_rate), rng);
  model.add(LayerSpec::dense("classifier", config.num_classes), rng);
  model.add(LayerSpec::softmax("softmax"), rng);
  return model;
}

template nn::BasicModel<float> build_network(const ModelConfig&);
template nn::BasicModel<double> build_network(const ModelConfig&);

Prediction make_prediction(std::vector<float> probabilities, std::size_t k) {
  if (probabilities.size() < 2) throw std::invalid_argument("prediction needs at least 2 classes");
  Prediction p;
  std::vector<std::size_t> order(probabilities.size());
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(),
                   [&](std::size_t a, std::size_t b) { return probabilities[a] > probabilities[b]; });
  k = std::min(k, probabilities.size());
  for (std::size_t i = 0; i < k; ++i) p.top_k.emplace_back(order[i], probabilities[order[i]]);
  p.label = order.front();
  p.probabilities = std::move(probabilities);
  return p;
}

SignModel::SignModel(ModelConfig config) : config_(config), network_(build_network<float>(config)) {}

nn::Tensor SignModel::preprocess(const video::Frame& frame) const {
  return video::preprocess(frame, config_.input_height, config_.input_width);
}

Prediction SignModel::predict_tensor(const nn::Tensor& input) {
  const nn::Tensor probs = network_.forward(input, nn::Mode::kInfer);
  return make_prediction(probs.values());
}

Prediction SignModel::predict_frame(const video::Frame& frame) {
  if (config_.input_channels != 3) throw std::invalid_argument("RGB frames need a 3-channel model");
  return predict_tensor(preprocess(frame));
}

Prediction SignModel::predict_clip(const video::Clip& clip) {
  if (clip.frames.size() != video::kClipLength) {
    throw std::invalid_argument("predict_clip needs exactly " + std::to_string(video::kClipLength) +
                                " frames, got " + std::to_string(clip.frames.size()));
  }
  std::vector<double> sum(config_.num_classes, 0.0);
  for (const auto& frame : clip.frames) {
    const Prediction p = predict_frame(frame);
    for (std::size_t k = 0; k < sum.size(); ++k) sum[k] += p.probabilities[k];
  }
  std::vector<float> mean(sum.size());
  for (std::size_t k = 0; k < sum.size(); ++k) mean[k] = static_cast<float>(sum[k] / static_cast<double>(clip.frames.size()));
  return make_prediction(std::move(mean));
}

void SignModel::set_backbone_frozen(bool frozen) {
  bool in_backbone = true;
  for (std::size_t i = 0; i < network_.layer_count(); ++i) {
    auto& layer = network_.layer(i);
    layer.set_trainable(!(in_backbone && frozen));
    if (layer.name() == kBackboneEnd) in_backbone = false;
  }
}

nn::ModelWeights SignModel::to_weights() const {
  nn::ModelWeights weights = network_.to_weights();
  weights.records.insert(weights.records.begin(),
                         {"meta.config",
                          nn::Tensor({7}, {static_cast<float>(config_.input_height), static_cast<float>(config_.input_width),
                                           static_cast<float>(config_.input_channels), static_cast<float>(config_.num_classes),
                                           static_cast<float>(config_.width_multiplier),
                                           static_cast<float>(config_.hidden_units),
                                           static_cast<float>(config_.dropout_rate)})});
  return weights;
}

SignModel SignModel::from_weights(const nn::ModelWeights& weights) {
  const nn::Tensor& meta = weights.get("meta.config");
  if (meta.shape() != nn::Shape{7}) {
    throw nn::WeightsError(nn::WeightsError::Code::kShapeMismatch, "weights: meta.config must hold 7 values");
  }
  auto count = [&](std::size_t i) {
    const float v = meta[i];
    if (!(v >= 0.0f) || v != std::floor(v)) {
      throw nn::WeightsError(nn::WeightsError::Code::kShapeMismatch, "weights: meta.config holds a non-integer size");
    }
    return static_cast<std::size_t>(v);
  };
  ModelConfig config;
  config.input_height = count(0);
  config.input_width = count(1);
  config.input_channels = count(2);
  config.num_classes = count(3);
  config.width_multiplier = meta[4];
  config.hidden_units = count(5);
  config.dropout_rate = meta[6];
  SignModel model(config);
  model.network_.load_weights(weights);
  return model;
}

void SignModel::save(const std::filesystem::path& path) const {
  nn::save_weights_file(to_weights(), path);
}

SignModel SignModel::load(const std::filesystem::path& path) {
  return from_weights(nn::load_weights_file(path));
}

}  // namespace signcast::model
