#pragma once

#include <cstdint>
#include <memory>
#include <random>
#include <span>
#include <string>
#include <vector>

#include "signcast/nn/layers.hpp"
#include "signcast/nn/weights_io.hpp"

namespace signcast::nn {

/// Ordered layer stack. Shapes are inferred as layers are appended.
/// Not thread-safe: forward/backward pairs record activations in the layers.
template <typename T>
class BasicModel {
 public:
  explicit BasicModel(Shape input_shape);

  BasicModel(BasicModel&&) noexcept = default;
  BasicModel& operator=(BasicModel&&) noexcept = default;

  /// Appends a layer; parameters are drawn from `init_rng`.
  Layer<T>& add(const LayerSpec& spec, std::mt19937_64& init_rng);

  const Shape& input_shape() const noexcept { return input_shape_; }
  const Shape& output_shape() const noexcept;

  std::size_t layer_count() const noexcept { return layers_.size(); }
  Layer<T>& layer(std::size_t i) { return *layers_.at(i); }
  const Layer<T>& layer(std::size_t i) const { return *layers_.at(i); }
  Layer<T>* find_layer(std::string_view name);

  BasicTensor<T> forward(const BasicTensor<T>& x, Mode mode);

  /// Backpropagates `grad_output` (w.r.t. the final layer's output) and
  /// accumulates parameter gradients.
  void backward(const BasicTensor<T>& grad_output);

  /// As backward(), but `grad_logits` is taken w.r.t. the input of a trailing
  /// softmax layer (the cross-entropy shortcut p - onehot).
  void backward_from_logits(const BasicTensor<T>& grad_logits);

  void zero_grad();

  /// Applies p <- p - lr * scale * g to every trainable parameter.
  void sgd_update(T learning_rate, T grad_scale = T{1});

  std::vector<Param<T>*> parameters();
  std::vector<const Param<T>*> parameters() const;
  std::size_t parameter_count() const;

  void reseed(std::uint64_t seed);

  ModelWeights to_weights() const;
  /// Copies matching records into the parameters. Every parameter must be
  /// present with an identical shape.
  void load_weights(const ModelWeights& weights);

 private:
  void backward_range(BasicTensor<T> grad, std::size_t end);

  Shape input_shape_;
  std::vector<std::unique_ptr<Layer<T>>> layers_;
};

using Model = BasicModel<float>;
using ModelD = BasicModel<double>;

}  // namespace signcast::nn
