#include "signcast/nn/layers.hpp"

#include <cmath>
#include <stdexcept>
#include <utility>

#include "signcast/nn/random.hpp"

namespace signcast::nn {

std::string_view to_string(LayerKind kind) {
  switch (kind) {
    case LayerKind::kConv2d: return "conv2d";
    case LayerKind::kDepthwiseConv2d: return "depthwise_conv2d";
    case LayerKind::kPointwiseConv2d: return "pointwise_conv2d";
    case LayerKind::kRelu: return "relu";
    case LayerKind::kGlobalAvgPool: return "global_avg_pool";
    case LayerKind::kDense: return "dense";
    case LayerKind::kDropout: return "dropout";
    case LayerKind::kSoftmax: return "softmax";
  }
  return "unknown";
}

LayerSpec LayerSpec::conv2d(std::string name, std::size_t kernel, std::size_t filters,
                            std::size_t stride, Padding padding) {
  return {LayerKind::kConv2d, std::move(name), kernel, stride, padding, filters, 0.0};
}
LayerSpec LayerSpec::depthwise(std::string name, std::size_t kernel, std::size_t stride,
                               Padding padding) {
  return {LayerKind::kDepthwiseConv2d, std::move(name), kernel, stride, padding, 0, 0.0};
}
LayerSpec LayerSpec::pointwise(std::string name, std::size_t filters) {
  return {LayerKind::kPointwiseConv2d, std::move(name), 0, 0, Padding::kSame, filters, 0.0};
}
LayerSpec LayerSpec::relu(std::string name) {
  return {LayerKind::kRelu, std::move(name), 0, 0, Padding::kSame, 0, 0.0};
}
LayerSpec LayerSpec::global_avg_pool(std::string name) {
  return {LayerKind::kGlobalAvgPool, std::move(name), 0, 0, Padding::kSame, 0, 0.0};
}
LayerSpec LayerSpec::dense(std::string name, std::size_t units) {
  return {LayerKind::kDense, std::move(name), 0, 0, Padding::kSame, units, 0.0};
}
LayerSpec LayerSpec::dropout(std::string name, double rate) {
  return {LayerKind::kDropout, std::move(name), 0, 0, Padding::kSame, 0, rate};
}
LayerSpec LayerSpec::softmax(std::string name) {
  return {LayerKind::kSoftmax, std::move(name), 0, 0, Padding::kSame, 0, 0.0};
}

void LayerSpec::validate() const {
  const bool is_conv = kind == LayerKind::kConv2d || kind == LayerKind::kDepthwiseConv2d;
  const bool has_units = kind == LayerKind::kConv2d || kind == LayerKind::kPointwiseConv2d ||
                         kind == LayerKind::kDense;
  auto fail = [&](const std::string& what) {
    throw std::invalid_argument("layer '" + name + "' (" + std::string(to_string(kind)) + "): " + what);
  };
  if (name.empty()) fail("name must be nonempty");
  if (is_conv && (kernel == 0 || stride == 0)) fail("kernel and stride must be positive");
  if (!is_conv && (kernel != 0 || stride != 0)) fail("kernel/stride only apply to spatial convolutions");
  if (has_units && units == 0) fail("unit count must be positive");
  if (!has_units && units != 0) fail("unit count does not apply");
  if (kind == LayerKind::kDropout) {
    if (!(rate >= 0.0 && rate < 1.0)) fail("dropout rate must be in [0, 1)");
  } else if (rate != 0.0) {
    fail("rate only applies to dropout");
  }
}

Shape infer_output_shape(const LayerSpec& spec, const Shape& in) {
  spec.validate();
  auto need_image = [&] {
    if (in.size() != 3) {
      throw ShapeError("layer '" + spec.name + "' expects HxWxC input, got " + shape_string(in));
    }
  };
  switch (spec.kind) {
    case LayerKind::kConv2d: {
      need_image();
      const auto gy = conv_axis(in[0], spec.kernel, spec.stride, spec.padding);
      const auto gx = conv_axis(in[1], spec.kernel, spec.stride, spec.padding);
      return {gy.out, gx.out, spec.units};
    }
    case LayerKind::kDepthwiseConv2d: {
      need_image();
      const auto gy = conv_axis(in[0], spec.kernel, spec.stride, spec.padding);
      const auto gx = conv_axis(in[1], spec.kernel, spec.stride, spec.padding);
      return {gy.out, gx.out, in[2]};
    }
    case LayerKind::kPointwiseConv2d:
      need_image();
      return {in[0], in[1], spec.units};
    case LayerKind::kGlobalAvgPool:
      need_image();
      return {1, 1, in[2]};
    case LayerKind::kDense:
      return {spec.units};
    case LayerKind::kSoftmax:
      if (shape_size(in) < 2) throw ShapeError("softmax needs at least 2 inputs");
      return in;
    case LayerKind::kRelu:
    case LayerKind::kDropout:
      return in;
  }
  throw std::invalid_argument("unknown layer kind");
}

std::vector<Shape> parameter_shapes(const LayerSpec& spec, const Shape& in) {
  (void)infer_output_shape(spec, in);
  switch (spec.kind) {
    case LayerKind::kConv2d:
      return {{spec.kernel, spec.kernel, in[2], spec.units}, {spec.units}};
    case LayerKind::kDepthwiseConv2d:
      return {{spec.kernel, spec.kernel, in[2]}, {in[2]}};
    case LayerKind::kPointwiseConv2d:
      return {{in[2], spec.units}, {spec.units}};
    case LayerKind::kDense:
      return {{shape_size(in), spec.units}, {spec.units}};
    default:
      return {};
  }
}

template <typename T>
Layer<T>::Layer(LayerSpec spec, Shape input_shape)
    : spec_(std::move(spec)), input_shape_(std::move(input_shape)) {
  output_shape_ = infer_output_shape(spec_, input_shape_);
}

template <typename T>
void Layer<T>::record(const BasicTensor<T>& x) {
  recorded_ = x;
}

template <typename T>
BasicTensor<T> Layer<T>::take_recorded() {
  if (!recorded_) {
    throw NoForwardError("layer '" + spec_.name + "': backward called without a recorded forward pass");
  }
  BasicTensor<T> out = std::move(*recorded_);
  recorded_.reset();
  return out;
}

template <typename T>
void Layer<T>::check_input(const BasicTensor<T>& x) const {
  const bool ok = spec_.kind == LayerKind::kDense || spec_.kind == LayerKind::kSoftmax
                      ? x.size() == shape_size(input_shape_)
                      : x.shape() == input_shape_;
  if (!ok) {
    throw ShapeError("layer '" + spec_.name + "' expects input " + shape_string(input_shape_) +
                     ", got " + shape_string(x.shape()));
  }
}

namespace {

template <typename T>
Param<T> he_normal(std::string name, Shape shape, std::size_t fan_in, std::mt19937_64& rng) {
  BasicTensor<T> value(shape);
  const double scale = std::sqrt(2.0 / static_cast<double>(fan_in));
  for (T& v : value.data()) v = static_cast<T>(standard_normal(rng) * scale);
  return {std::move(name), std::move(value), BasicTensor<T>(std::move(shape))};
}

template <typename T>
Param<T> zeros(std::string name, Shape shape) {
  return {std::move(name), BasicTensor<T>(shape), BasicTensor<T>(shape)};
}

inline std::ptrdiff_t source_index(std::size_t out, std::size_t stride, std::size_t k,
                                   std::size_t pad) {
  return static_cast<std::ptrdiff_t>(out * stride + k) - static_cast<std::ptrdiff_t>(pad);
}

template <typename T>
class Conv2dLayer final : public Layer<T> {
 public:
  Conv2dLayer(const LayerSpec& spec, const Shape& in, std::mt19937_64& rng) : Layer<T>(spec, in) {
    const auto shapes = parameter_shapes(spec, in);
    this->params_.push_back(he_normal<T>(spec.name + ".weight", shapes[0], spec.kernel * spec.kernel * in[2], rng));
    this->params_.push_back(zeros<T>(spec.name + ".bias", shapes[1]));
  }

  BasicTensor<T> forward(const BasicTensor<T>& x, Mode) override {
    this->check_input(x);
    this->record(x);
    return conv2d(x, this->params_[0].value, this->params_[1].value, this->spec_.stride, this->spec_.padding);
  }

  BasicTensor<T> backward(const BasicTensor<T>& grad_out) override {
    const BasicTensor<T> x = this->take_recorded();
    const std::size_t in_h = x.dim(0), in_w = x.dim(1), channels = x.dim(2);
    const std::size_t k = this->spec_.kernel, stride = this->spec_.stride, filters = this->spec_.units;
    const auto gy = conv_axis(in_h, k, stride, this->spec_.padding);
    const auto gx = conv_axis(in_w, k, stride, this->spec_.padding);
    const T* w = this->params_[0].value.data().data();
    T* gw = this->params_[0].grad.data().data();
    T* gb = this->params_[1].grad.data().data();
    BasicTensor<T> grad_in(x.shape());
    for (std::size_t oy = 0; oy < gy.out; ++oy) {
      for (std::size_t ox = 0; ox < gx.out; ++ox) {
        const T* g = grad_out.data().data() + (oy * gx.out + ox) * filters;
        for (std::size_t f = 0; f < filters; ++f) gb[f] += g[f];
        for (std::size_t ky = 0; ky < k; ++ky) {
          const auto iy = source_index(oy, stride, ky, gy.pad_before);
          if (iy < 0 || iy >= static_cast<std::ptrdiff_t>(in_h)) continue;
          for (std::size_t kx = 0; kx < k; ++kx) {
            const auto ix = source_index(ox, stride, kx, gx.pad_before);
            if (ix < 0 || ix >= static_cast<std::ptrdiff_t>(in_w)) continue;
            const std::size_t pix = (static_cast<std::size_t>(iy) * in_w + static_cast<std::size_t>(ix)) * channels;
            const T* px = x.data().data() + pix;
            T* gpx = grad_in.data().data() + pix;
            const std::size_t kbase = (ky * k + kx) * channels * filters;
            for (std::size_t c = 0; c < channels; ++c) {
              const T* wrow = w + kbase + c * filters;
              T* gwrow = gw + kbase + c * filters;
              const T v = px[c];
              T acc{0};
              for (std::size_t f = 0; f < filters; ++f) {
                gwrow[f] += v * g[f];
                acc += wrow[f] * g[f];
              }
              gpx[c] += acc;
            }
          }
        }
      }
    }
    return grad_in;
  }
};

template <typename T>
class DepthwiseLayer final : public Layer<T> {
 public:
  DepthwiseLayer(const LayerSpec& spec, const Shape& in, std::mt19937_64& rng) : Layer<T>(spec, in) {
    const auto shapes = parameter_shapes(spec, in);
    this->params_.push_back(he_normal<T>(spec.name + ".weight", shapes[0], spec.kernel * spec.kernel, rng));
    this->params_.push_back(zeros<T>(spec.name + ".bias", shapes[1]));
  }

  BasicTensor<T> forward(const BasicTensor<T>& x, Mode) override {
    this->check_input(x);
    this->record(x);
    return depthwise_conv2d(x, this->params_[0].value, this->params_[1].value, this->spec_.stride,
                            this->spec_.padding);
  }

  BasicTensor<T> backward(const BasicTensor<T>& grad_out) override {
    const BasicTensor<T> x = this->take_recorded();
    const std::size_t in_h = x.dim(0), in_w = x.dim(1), channels = x.dim(2);
    const std::size_t k = this->spec_.kernel, stride = this->spec_.stride;
    const auto gy = conv_axis(in_h, k, stride, this->spec_.padding);
    const auto gx = conv_axis(in_w, k, stride, this->spec_.padding);
    const T* w = this->params_[0].value.data().data();
    T* gw = this->params_[0].grad.data().data();
    T* gb = this->params_[1].grad.data().data();
    BasicTensor<T> grad_in(x.shape());
    for (std::size_t oy = 0; oy < gy.out; ++oy) {
      for (std::size_t ox = 0; ox < gx.out; ++ox) {
        const T* g = grad_out.data().data() + (oy * gx.out + ox) * channels;
        for (std::size_t c = 0; c < channels; ++c) gb[c] += g[c];
        for (std::size_t ky = 0; ky < k; ++ky) {
          const auto iy = source_index(oy, stride, ky, gy.pad_before);
          if (iy < 0 || iy >= static_cast<std::ptrdiff_t>(in_h)) continue;
          for (std::size_t kx = 0; kx < k; ++kx) {
            const auto ix = source_index(ox, stride, kx, gx.pad_before);
            if (ix < 0 || ix >= static_cast<std::ptrdiff_t>(in_w)) continue;
            const std::size_t pix = (static_cast<std::size_t>(iy) * in_w + static_cast<std::size_t>(ix)) * channels;
            const T* px = x.data().data() + pix;
            T* gpx = grad_in.data().data() + pix;
            const T* wk = w + (ky * k + kx) * channels;
            T* gwk = gw + (ky * k + kx) * channels;
            for (std::size_t c = 0; c < channels; ++c) {
              gwk[c] += px[c] * g[c];
              gpx[c] += wk[c] * g[c];
            }
          }
        }
      }
    }
    return grad_in;
  }
};

template <typename T>
class PointwiseLayer final : public Layer<T> {
 public:
  PointwiseLayer(const LayerSpec& spec, const Shape& in, std::mt19937_64& rng) : Layer<T>(spec, in) {
    const auto shapes = parameter_shapes(spec, in);
    this->params_.push_back(he_normal<T>(spec.name + ".weight", shapes[0], in[2], rng));
    this->params_.push_back(zeros<T>(spec.name + ".bias", shapes[1]));
  }

  BasicTensor<T> forward(const BasicTensor<T>& x, Mode) override {
    this->check_input(x);
    this->record(x);
    return pointwise_conv2d(x, this->params_[0].value, this->params_[1].value);
  }

  BasicTensor<T> backward(const BasicTensor<T>& grad_out) override {
    const BasicTensor<T> x = this->take_recorded();
    const std::size_t pixels = x.dim(0) * x.dim(1), channels = x.dim(2), filters = this->spec_.units;
    const T* w = this->params_[0].value.data().data();
    T* gw = this->params_[0].grad.data().data();
    T* gb = this->params_[1].grad.data().data();
    BasicTensor<T> grad_in(x.shape());
    for (std::size_t p = 0; p < pixels; ++p) {
      const T* g = grad_out.data().data() + p * filters;
      const T* px = x.data().data() + p * channels;
      T* gpx = grad_in.data().data() + p * channels;
      for (std::size_t f = 0; f < filters; ++f) gb[f] += g[f];
      for (std::size_t c = 0; c < channels; ++c) {
        const T* wrow = w + c * filters;
        T* gwrow = gw + c * filters;
        const T v = px[c];
        T acc{0};
        for (std::size_t f = 0; f < filters; ++f) {
          gwrow[f] += v * g[f];
          acc += wrow[f] * g[f];
        }
        gpx[c] = acc;
      }
    }
    return grad_in;
  }
};

template <typename T>
class ReluLayer final : public Layer<T> {
 public:
  using Layer<T>::Layer;

  BasicTensor<T> forward(const BasicTensor<T>& x, Mode) override {
    this->check_input(x);
    this->record(x);
    return relu(x);
  }

  BasicTensor<T> backward(const BasicTensor<T>& grad_out) override {
    const BasicTensor<T> x = this->take_recorded();
    BasicTensor<T> grad_in = grad_out;
    for (std::size_t i = 0; i < x.size(); ++i) {
      if (!(x[i] > T{0})) grad_in[i] = T{0};
    }
    return grad_in;
  }
};

template <typename T>
class GlobalAvgPoolLayer final : public Layer<T> {
 public:
  using Layer<T>::Layer;

  BasicTensor<T> forward(const BasicTensor<T>& x, Mode) override {
    this->check_input(x);
    this->record(BasicTensor<T>(Shape{1}));  // only the shape is needed
    return global_average_pool(x);
  }

  BasicTensor<T> backward(const BasicTensor<T>& grad_out) override {
    (void)this->take_recorded();
    const std::size_t pixels = this->input_shape_[0] * this->input_shape_[1];
    const std::size_t channels = this->input_shape_[2];
    BasicTensor<T> grad_in(this->input_shape_);
    const T scale = T{1} / static_cast<T>(pixels);
    for (std::size_t p = 0; p < pixels; ++p) {
      for (std::size_t c = 0; c < channels; ++c) grad_in[p * channels + c] = grad_out[c] * scale;
    }
    return grad_in;
  }
};

template <typename T>
class DenseLayer final : public Layer<T> {
 public:
  DenseLayer(const LayerSpec& spec, const Shape& in, std::mt19937_64& rng) : Layer<T>(spec, in) {
    const auto shapes = parameter_shapes(spec, in);
    this->params_.push_back(he_normal<T>(spec.name + ".weight", shapes[0], shape_size(in), rng));
    this->params_.push_back(zeros<T>(spec.name + ".bias", shapes[1]));
  }

  BasicTensor<T> forward(const BasicTensor<T>& x, Mode) override {
    this->check_input(x);
    this->record(x);
    return dense(x, this->params_[0].value, this->params_[1].value);
  }

  BasicTensor<T> backward(const BasicTensor<T>& grad_out) override {
    const BasicTensor<T> x = this->take_recorded();
    const std::size_t n = x.size(), m = this->spec_.units;
    const T* w = this->params_[0].value.data().data();
    T* gw = this->params_[0].grad.data().data();
    T* gb = this->params_[1].grad.data().data();
    const T* g = grad_out.data().data();
    for (std::size_t j = 0; j < m; ++j) gb[j] += g[j];
    BasicTensor<T> grad_in(x.shape());
    for (std::size_t i = 0; i < n; ++i) {
      const T* wrow = w + i * m;
      T* gwrow = gw + i * m;
      const T v = x[i];
      T acc{0};
      for (std::size_t j = 0; j < m; ++j) {
        gwrow[j] += v * g[j];
        acc += wrow[j] * g[j];
      }
      grad_in[i] = acc;
    }
    return grad_in;
  }
};

template <typename T>
class DropoutLayer final : public Layer<T> {
 public:
  DropoutLayer(const LayerSpec& spec, const Shape& in, std::uint64_t seed)
      : Layer<T>(spec, in), engine_(seed) {}

  void reseed(std::uint64_t seed) override { engine_.seed(seed); }

  BasicTensor<T> forward(const BasicTensor<T>& x, Mode mode) override {
    this->check_input(x);
    BasicTensor<T> mask(x.shape(), T{1});
    const double rate = this->spec_.rate;
    if (mode == Mode::kTrain && rate > 0.0) {
      const T keep_scale = static_cast<T>(1.0 / (1.0 - rate));
      for (T& m : mask.data()) m = unit_uniform(engine_) < rate ? T{0} : keep_scale;
    }
    BasicTensor<T> out = x;
    for (std::size_t i = 0; i < out.size(); ++i) out[i] *= mask[i];
    this->record(mask);
    return out;
  }

  BasicTensor<T> backward(const BasicTensor<T>& grad_out) override {
    const BasicTensor<T> mask = this->take_recorded();
    BasicTensor<T> grad_in = grad_out;
    for (std::size_t i = 0; i < grad_in.size(); ++i) grad_in[i] *= mask[i];
    return grad_in;
  }

 private:
  std::mt19937_64 engine_;
};

template <typename T>
class SoftmaxLayer final : public Layer<T> {
 public:
  using Layer<T>::Layer;

  BasicTensor<T> forward(const BasicTensor<T>& x, Mode) override {
    this->check_input(x);
    BasicTensor<T> probs(x.shape(), softmax<T>(x.data()));
    this->record(probs);
    return probs;
  }

  BasicTensor<T> backward(const BasicTensor<T>& grad_out) override {
    const BasicTensor<T> p = this->take_recorded();
    T dot{0};
    for (std::size_t i = 0; i < p.size(); ++i) dot += grad_out[i] * p[i];
    BasicTensor<T> grad_in(p.shape());
    for (std::size_t i = 0; i < p.size(); ++i) grad_in[i] = p[i] * (grad_out[i] - dot);
    return grad_in;
  }
};

}  // namespace

template <typename T>
std::unique_ptr<Layer<T>> make_layer(const LayerSpec& spec, const Shape& input_shape,
                                     std::mt19937_64& init_rng) {
  switch (spec.kind) {
    case LayerKind::kConv2d: return std::make_unique<Conv2dLayer<T>>(spec, input_shape, init_rng);
    case LayerKind::kDepthwiseConv2d: return std::make_unique<DepthwiseLayer<T>>(spec, input_shape, init_rng);
    case LayerKind::kPointwiseConv2d: return std::make_unique<PointwiseLayer<T>>(spec, input_shape, init_rng);
    case LayerKind::kRelu: return std::make_unique<ReluLayer<T>>(spec, input_shape);
    case LayerKind::kGlobalAvgPool: return std::make_unique<GlobalAvgPoolLayer<T>>(spec, input_shape);
    case LayerKind::kDense: return std::make_unique<DenseLayer<T>>(spec, input_shape, init_rng);
    case LayerKind::kDropout: return std::make_unique<DropoutLayer<T>>(spec, input_shape, init_rng());
    case LayerKind::kSoftmax: return std::make_unique<SoftmaxLayer<T>>(spec, input_shape);
  }
  throw std::invalid_argument("unknown layer kind");
}

template class Layer<float>;
template class Layer<double>;
template std::unique_ptr<Layer<float>> make_layer(const LayerSpec&, const Shape&, std::mt19937_64&);
template std::unique_ptr<Layer<double>> make_layer(const LayerSpec&, const Shape&, std::mt19937_64&);

}  // namespace signcast::nn
