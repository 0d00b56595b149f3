#pragma once

#include <cstdint>
#include <memory>
#include <optional>
#include <random>
#include <span>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

#include "signcast/nn/ops.hpp"
#include "signcast/nn/tensor.hpp"

namespace signcast::nn {

enum class LayerKind {
  kConv2d,
  kDepthwiseConv2d,
  kPointwiseConv2d,
  kRelu,
  kGlobalAvgPool,
  kDense,
  kDropout,
  kSoftmax,
};

std::string_view to_string(LayerKind kind);

/// Thrown by backward() when no forward pass has been recorded.
class NoForwardError : public std::logic_error {
 public:
  using std::logic_error::logic_error;
};

struct LayerSpec {
  LayerKind kind = LayerKind::kRelu;
  std::string name;
  std::size_t kernel = 0;  // conv kinds
  std::size_t stride = 0;  // conv kinds
  Padding padding = Padding::kSame;
  std::size_t units = 0;   // conv2d / pointwise filters, dense width
  double rate = 0.0;       // dropout

  static LayerSpec conv2d(std::string name, std::size_t kernel, std::size_t filters,
                          std::size_t stride, Padding padding = Padding::kSame);
  static LayerSpec depthwise(std::string name, std::size_t kernel, std::size_t stride,
                             Padding padding = Padding::kSame);
  static LayerSpec pointwise(std::string name, std::size_t filters);
  static LayerSpec relu(std::string name);
  static LayerSpec global_avg_pool(std::string name);
  static LayerSpec dense(std::string name, std::size_t units);
  static LayerSpec dropout(std::string name, double rate);
  static LayerSpec softmax(std::string name);

  /// Throws std::invalid_argument unless hyperparameters are set exactly for
  /// the kinds that use them.
  void validate() const;
};

template <typename T>
struct Param {
  std::string name;
  BasicTensor<T> value;
  BasicTensor<T> grad;
};

/// A layer records its input on forward() and consumes it on backward().
/// backward() returns the gradient w.r.t. the input and accumulates into
/// each Param::grad.
template <typename T>
class Layer {
 public:
  Layer(LayerSpec spec, Shape input_shape);
  virtual ~Layer() = default;
  Layer(const Layer&) = delete;
  Layer& operator=(const Layer&) = delete;

  const LayerSpec& spec() const noexcept { return spec_; }
  const std::string& name() const noexcept { return spec_.name; }
  LayerKind kind() const noexcept { return spec_.kind; }
  const Shape& input_shape() const noexcept { return input_shape_; }
  const Shape& output_shape() const noexcept { return output_shape_; }

  virtual BasicTensor<T> forward(const BasicTensor<T>& x, Mode mode) = 0;
  virtual BasicTensor<T> backward(const BasicTensor<T>& grad_out) = 0;

  std::span<Param<T>> params() noexcept { return params_; }
  std::span<const Param<T>> params() const noexcept { return params_; }

  /// Restarts any internal random stream (dropout masks). No-op otherwise.
  virtual void reseed(std::uint64_t /*seed*/) {}

  bool trainable() const noexcept { return trainable_; }
  void set_trainable(bool value) noexcept { trainable_ = value; }

 protected:
  void record(const BasicTensor<T>& x);
  BasicTensor<T> take_recorded();
  void check_input(const BasicTensor<T>& x) const;

  LayerSpec spec_;
  Shape input_shape_;
  Shape output_shape_;
  std::vector<Param<T>> params_;

 private:
  std::optional<BasicTensor<T>> recorded_;
  bool trainable_ = true;
};

/// Builds a layer for `input_shape`, drawing He-normal initial weights from
/// `init_rng`. Dropout layers seed their mask stream from `init_rng` too.
template <typename T>
std::unique_ptr<Layer<T>> make_layer(const LayerSpec& spec, const Shape& input_shape,
                                     std::mt19937_64& init_rng);

/// Parameter shapes a spec would allocate for `input_shape`, in order.
std::vector<Shape> parameter_shapes(const LayerSpec& spec, const Shape& input_shape);

/// Output shape for `input_shape`; throws ShapeError when they do not fit.
Shape infer_output_shape(const LayerSpec& spec, const Shape& input_shape);

}  // namespace signcast::nn
