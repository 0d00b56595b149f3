#pragma once

#include <cstddef>
#include <cstdint>
#include <span>
#include <vector>

#include "signcast/nn/tensor.hpp"

namespace signcast::nn {

enum class Padding { kValid, kSame };
enum class Mode { kTrain, kInfer };

/// Output extent and leading pad for one spatial axis. `same` follows the
/// ceil(in / stride) convention with the extra pad on the trailing side.
struct AxisGeometry {
  std::size_t out = 0;
  std::size_t pad_before = 0;
};

AxisGeometry conv_axis(std::size_t in, std::size_t kernel, std::size_t stride, Padding padding);

template <typename T>
BasicTensor<T> relu(const BasicTensor<T>& x);

/// Max-shifted softmax over a vector of K >= 2 logits.
template <typename T>
std::vector<T> softmax(std::span<const T> logits);

/// input HxWxC, kernels KhxKwxCxF, bias F (may be empty). Cross-correlation.
template <typename T>
BasicTensor<T> conv2d(const BasicTensor<T>& input, const BasicTensor<T>& kernels,
                      const BasicTensor<T>& bias, std::size_t stride, Padding padding);

/// input HxWxC, kernels KhxKwxC, bias C (may be empty). No channel mixing.
template <typename T>
BasicTensor<T> depthwise_conv2d(const BasicTensor<T>& input, const BasicTensor<T>& kernels,
                                const BasicTensor<T>& bias, std::size_t stride, Padding padding);

/// 1x1 convolution: input HxWxC, weights CxF, bias F.
template <typename T>
BasicTensor<T> pointwise_conv2d(const BasicTensor<T>& input, const BasicTensor<T>& weights,
                                const BasicTensor<T>& bias);

/// HxWxC -> 1x1xC per-channel mean.
template <typename T>
BasicTensor<T> global_average_pool(const BasicTensor<T>& input);

/// y_j = sum_i x_i * W[i][j] + b_j. x is flattened; W is n x m.
template <typename T>
BasicTensor<T> dense(const BasicTensor<T>& x, const BasicTensor<T>& weights,
                     const BasicTensor<T>& bias);

/// Inverted dropout. `rate` is the drop probability; survivors are scaled by
/// 1 / (1 - rate). Infer mode is the identity.
template <typename T>
BasicTensor<T> dropout(const BasicTensor<T>& x, double rate, Mode mode, std::uint64_t seed);

template <typename T>
struct CrossEntropy {
  T loss{};
  std::vector<T> grad_logits;  // probs - one_hot(true_class)
};

template <typename T>
CrossEntropy<T> cross_entropy(std::span<const T> probs, std::size_t true_class);

/// p <- p - lr * g for each pair.
template <typename T>
void sgd_step(std::span<BasicTensor<T>* const> params, std::span<const BasicTensor<T>* const> grads,
              T learning_rate);

}  // namespace signcast::nn
