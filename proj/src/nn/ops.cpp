#include "signcast/nn/ops.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <random>
#include <sstream>
#include <stdexcept>
#include <string>

#include "signcast/nn/random.hpp"

namespace signcast::nn {

std::string shape_string(const Shape& shape) {
  std::ostringstream out;
  out << '[';
  for (std::size_t i = 0; i < shape.size(); ++i) {
    if (i) out << 'x';
    out << shape[i];
  }
  out << ']';
  return out.str();
}

AxisGeometry conv_axis(std::size_t in, std::size_t kernel, std::size_t stride, Padding padding) {
  if (stride == 0 || kernel == 0) throw ShapeError("kernel and stride must be positive");
  if (padding == Padding::kValid) {
    if (kernel > in) {
      throw ShapeError("kernel " + std::to_string(kernel) + " larger than input " +
                       std::to_string(in) + " under valid padding");
    }
    return {(in - kernel) / stride + 1, 0};
  }
  const std::size_t out = (in + stride - 1) / stride;
  const std::size_t needed = (out - 1) * stride + kernel;
  const std::size_t pad_total = needed > in ? needed - in : 0;
  return {out, pad_total / 2};
}

namespace {

void require_rank(const Shape& shape, std::size_t rank, const char* what) {
  if (shape.size() != rank) {
    throw ShapeError(std::string(what) + " must have rank " + std::to_string(rank) + ", got " +
                     shape_string(shape));
  }
}

}  // namespace

template <typename T>
BasicTensor<T> relu(const BasicTensor<T>& x) {
  BasicTensor<T> out = x;
  for (T& v : out.data()) v = v < T{0} ? T{0} : v;
  return out;
}

template <typename T>
std::vector<T> softmax(std::span<const T> logits) {
  if (logits.size() < 2) throw ShapeError("softmax needs at least 2 logits");
  const T peak = *std::max_element(logits.begin(), logits.end());
  std::vector<T> out(logits.size());
  T total{0};
  for (std::size_t i = 0; i < logits.size(); ++i) {
    out[i] = std::exp(logits[i] - peak);
    total += out[i];
  }
  for (T& v : out) v /= total;
  return out;
}

template <typename T>
BasicTensor<T> conv2d(const BasicTensor<T>& input, const BasicTensor<T>& kernels,
                      const BasicTensor<T>& bias, std::size_t stride, Padding padding) {
  require_rank(input.shape(), 3, "conv2d input");
  require_rank(kernels.shape(), 4, "conv2d kernels");
  const std::size_t in_h = input.dim(0), in_w = input.dim(1), channels = input.dim(2);
  const std::size_t k_h = kernels.dim(0), k_w = kernels.dim(1), filters = kernels.dim(3);
  if (kernels.dim(2) != channels) {
    throw ShapeError("conv2d kernel channels " + shape_string(kernels.shape()) +
                     " do not match input " + shape_string(input.shape()));
  }
  if (!bias.empty() && bias.size() != filters) throw ShapeError("conv2d bias length mismatch");
  const AxisGeometry gy = conv_axis(in_h, k_h, stride, padding);
  const AxisGeometry gx = conv_axis(in_w, k_w, stride, padding);

  BasicTensor<T> out({gy.out, gx.out, filters});
  const T* in = input.data().data();
  const T* ker = kernels.data().data();
  T* dst = out.data().data();
  for (std::size_t oy = 0; oy < gy.out; ++oy) {
    for (std::size_t ox = 0; ox < gx.out; ++ox) {
      T* acc = dst + (oy * gx.out + ox) * filters;
      if (!bias.empty()) std::copy(bias.data().begin(), bias.data().end(), acc);
      for (std::size_t ky = 0; ky < k_h; ++ky) {
        const std::ptrdiff_t iy = static_cast<std::ptrdiff_t>(oy * stride + ky) -
                                  static_cast<std::ptrdiff_t>(gy.pad_before);
        if (iy < 0 || iy >= static_cast<std::ptrdiff_t>(in_h)) continue;
        for (std::size_t kx = 0; kx < k_w; ++kx) {
          const std::ptrdiff_t ix = static_cast<std::ptrdiff_t>(ox * stride + kx) -
                                    static_cast<std::ptrdiff_t>(gx.pad_before);
          if (ix < 0 || ix >= static_cast<std::ptrdiff_t>(in_w)) continue;
          const T* px = in + (static_cast<std::size_t>(iy) * in_w + static_cast<std::size_t>(ix)) * channels;
          const T* kw = ker + (ky * k_w + kx) * channels * filters;
          for (std::size_t c = 0; c < channels; ++c) {
            const T v = px[c];
            const T* wrow = kw + c * filters;
            for (std::size_t f = 0; f < filters; ++f) acc[f] += v * wrow[f];
          }
        }
      }
    }
  }
  return out;
}

template <typename T>
BasicTensor<T> depthwise_conv2d(const BasicTensor<T>& input, const BasicTensor<T>& kernels,
                                const BasicTensor<T>& bias, std::size_t stride, Padding padding) {
  require_rank(input.shape(), 3, "depthwise input");
  require_rank(kernels.shape(), 3, "depthwise kernels");
  const std::size_t in_h = input.dim(0), in_w = input.dim(1), channels = input.dim(2);
  const std::size_t k_h = kernels.dim(0), k_w = kernels.dim(1);
  if (kernels.dim(2) != channels) throw ShapeError("depthwise kernel channel mismatch");
  if (!bias.empty() && bias.size() != channels) throw ShapeError("depthwise bias length mismatch");
  const AxisGeometry gy = conv_axis(in_h, k_h, stride, padding);
  const AxisGeometry gx = conv_axis(in_w, k_w, stride, padding);

  BasicTensor<T> out({gy.out, gx.out, channels});
  const T* in = input.data().data();
  const T* ker = kernels.data().data();
  T* dst = out.data().data();
  for (std::size_t oy = 0; oy < gy.out; ++oy) {
    for (std::size_t ox = 0; ox < gx.out; ++ox) {
      T* acc = dst + (oy * gx.out + ox) * channels;
      if (!bias.empty()) std::copy(bias.data().begin(), bias.data().end(), acc);
      for (std::size_t ky = 0; ky < k_h; ++ky) {
        const std::ptrdiff_t iy = static_cast<std::ptrdiff_t>(oy * stride + ky) -
                                  static_cast<std::ptrdiff_t>(gy.pad_before);
        if (iy < 0 || iy >= static_cast<std::ptrdiff_t>(in_h)) continue;
        for (std::size_t kx = 0; kx < k_w; ++kx) {
          const std::ptrdiff_t ix = static_cast<std::ptrdiff_t>(ox * stride + kx) -
                                    static_cast<std::ptrdiff_t>(gx.pad_before);
          if (ix < 0 || ix >= static_cast<std::ptrdiff_t>(in_w)) continue;
          const T* px = in + (static_cast<std::size_t>(iy) * in_w + static_cast<std::size_t>(ix)) * channels;
          const T* kw = ker + (ky * k_w + kx) * channels;
          for (std::size_t c = 0; c < channels; ++c) acc[c] += px[c] * kw[c];
        }
      }
    }
  }
  return out;
}

template <typename T>
BasicTensor<T> pointwise_conv2d(const BasicTensor<T>& input, const BasicTensor<T>& weights,
                                const BasicTensor<T>& bias) {
  require_rank(input.shape(), 3, "pointwise input");
  require_rank(weights.shape(), 2, "pointwise weights");
  const std::size_t pixels = input.dim(0) * input.dim(1), channels = input.dim(2);
  const std::size_t filters = weights.dim(1);
  if (weights.dim(0) != channels) throw ShapeError("pointwise weight channel mismatch");
  if (!bias.empty() && bias.size() != filters) throw ShapeError("pointwise bias length mismatch");

  BasicTensor<T> out({input.dim(0), input.dim(1), filters});
  const T* in = input.data().data();
  const T* w = weights.data().data();
  T* dst = out.data().data();
  for (std::size_t p = 0; p < pixels; ++p) {
    T* acc = dst + p * filters;
    if (!bias.empty()) std::copy(bias.data().begin(), bias.data().end(), acc);
    const T* px = in + p * channels;
    for (std::size_t c = 0; c < channels; ++c) {
      const T v = px[c];
      const T* wrow = w + c * filters;
      for (std::size_t f = 0; f < filters; ++f) acc[f] += v * wrow[f];
    }
  }
  return out;
}

template <typename T>
BasicTensor<T> global_average_pool(const BasicTensor<T>& input) {
  require_rank(input.shape(), 3, "global_average_pool input");
  const std::size_t pixels = input.dim(0) * input.dim(1), channels = input.dim(2);
  BasicTensor<T> out({1, 1, channels});
  const T* in = input.data().data();
  for (std::size_t p = 0; p < pixels; ++p) {
    for (std::size_t c = 0; c < channels; ++c) out[c] += in[p * channels + c];
  }
  const T scale = T{1} / static_cast<T>(pixels);
  for (T& v : out.data()) v *= scale;
  return out;
}

template <typename T>
BasicTensor<T> dense(const BasicTensor<T>& x, const BasicTensor<T>& weights,
                     const BasicTensor<T>& bias) {
  require_rank(weights.shape(), 2, "dense weights");
  const std::size_t n = weights.dim(0), m = weights.dim(1);
  if (x.size() != n) {
    throw ShapeError("dense input length " + std::to_string(x.size()) + " does not match weights " +
                     shape_string(weights.shape()));
  }
  if (bias.size() != m) throw ShapeError("dense bias length mismatch");
  BasicTensor<T> out(Shape{m});
  std::copy(bias.data().begin(), bias.data().end(), out.data().begin());
  const T* w = weights.data().data();
  T* acc = out.data().data();
  for (std::size_t i = 0; i < n; ++i) {
    const T v = x[i];
    if (v == T{0}) continue;
    const T* wrow = w + i * m;
    for (std::size_t j = 0; j < m; ++j) acc[j] += v * wrow[j];
  }
  return out;
}

template <typename T>
BasicTensor<T> dropout(const BasicTensor<T>& x, double rate, Mode mode, std::uint64_t seed) {
  if (!(rate >= 0.0 && rate < 1.0)) throw std::invalid_argument("dropout rate must be in [0, 1)");
  if (mode == Mode::kInfer || rate == 0.0) return x;
  std::mt19937_64 engine(seed);
  BasicTensor<T> out = x;
  const T keep_scale = static_cast<T>(1.0 / (1.0 - rate));
  for (T& v : out.data()) v = unit_uniform(engine) < rate ? T{0} : v * keep_scale;
  return out;
}

template <typename T>
CrossEntropy<T> cross_entropy(std::span<const T> probs, std::size_t true_class) {
  if (true_class >= probs.size()) {
    throw std::out_of_range("class index " + std::to_string(true_class) + " out of range for " +
                            std::to_string(probs.size()) + " classes");
  }
  CrossEntropy<T> result;
  // Clamp keeps the loss finite when p_true underflows to zero in float32.
  const T p = std::max(probs[true_class], std::numeric_limits<T>::min());
  result.loss = -std::log(p);
  result.grad_logits.assign(probs.begin(), probs.end());
  result.grad_logits[true_class] -= T{1};
  return result;
}

template <typename T>
void sgd_step(std::span<BasicTensor<T>* const> params, std::span<const BasicTensor<T>* const> grads,
              T learning_rate) {
  if (params.size() != grads.size()) throw ShapeError("sgd_step: parameter/gradient count mismatch");
  for (std::size_t i = 0; i < params.size(); ++i) {
    if (params[i]->shape() != grads[i]->shape()) {
      throw ShapeError("sgd_step: shape mismatch " + shape_string(params[i]->shape()) + " vs " +
                       shape_string(grads[i]->shape()));
    }
  }
  for (std::size_t i = 0; i < params.size(); ++i) {
    auto p = params[i]->data();
    auto g = grads[i]->data();
    for (std::size_t j = 0; j < p.size(); ++j) p[j] -= learning_rate * g[j];
  }
}

#define SIGNCAST_INSTANTIATE_OPS(T)                                                              \
  template BasicTensor<T> relu(const BasicTensor<T>&);                                           \
  template std::vector<T> softmax(std::span<const T>);                                           \
  template BasicTensor<T> conv2d(const BasicTensor<T>&, const BasicTensor<T>&,                   \
                                 const BasicTensor<T>&, std::size_t, Padding);                   \
  template BasicTensor<T> depthwise_conv2d(const BasicTensor<T>&, const BasicTensor<T>&,         \
                                           const BasicTensor<T>&, std::size_t, Padding);         \
  template BasicTensor<T> pointwise_conv2d(const BasicTensor<T>&, const BasicTensor<T>&,         \
                                           const BasicTensor<T>&);                               \
  template BasicTensor<T> global_average_pool(const BasicTensor<T>&);                            \
  template BasicTensor<T> dense(const BasicTensor<T>&, const BasicTensor<T>&,                    \
                                const BasicTensor<T>&);                                          \
  template BasicTensor<T> dropout(const BasicTensor<T>&, double, Mode, std::uint64_t);           \
  template CrossEntropy<T> cross_entropy(std::span<const T>, std::size_t);                       \
  template void sgd_step(std::span<BasicTensor<T>* const>, std::span<const BasicTensor<T>* const>, \
                         T);

SIGNCAST_INSTANTIATE_OPS(float)
SIGNCAST_INSTANTIATE_OPS(double)

#undef SIGNCAST_INSTANTIATE_OPS

}  // namespace signcast::nn
