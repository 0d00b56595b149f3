#include "signcast/nn/model.hpp"

#include <stdexcept>
#include <unordered_set>

namespace signcast::nn {

template <typename T>
BasicModel<T>::BasicModel(Shape input_shape) : input_shape_(std::move(input_shape)) {
  if (input_shape_.empty() || shape_size(input_shape_) == 0) {
    throw ShapeError("model input shape must be nonempty");
  }
}

template <typename T>
Layer<T>& BasicModel<T>::add(const LayerSpec& spec, std::mt19937_64& init_rng) {
  for (const auto& l : layers_) {
    if (l->name() == spec.name) throw std::invalid_argument("duplicate layer name '" + spec.name + "'");
  }
  layers_.push_back(make_layer<T>(spec, output_shape(), init_rng));
  return *layers_.back();
}

template <typename T>
const Shape& BasicModel<T>::output_shape() const noexcept {
  return layers_.empty() ? input_shape_ : layers_.back()->output_shape();
}

template <typename T>
Layer<T>* BasicModel<T>::find_layer(std::string_view name) {
  for (auto& l : layers_) {
    if (l->name() == name) return l.get();
  }
  return nullptr;
}

template <typename T>
BasicTensor<T> BasicModel<T>::forward(const BasicTensor<T>& x, Mode mode) {
  if (x.shape() != input_shape_) {
    throw ShapeError("model expects input " + shape_string(input_shape_) + ", got " + shape_string(x.shape()));
  }
  BasicTensor<T> activation = x;
  for (auto& l : layers_) activation = l->forward(activation, mode);
  return activation;
}

template <typename T>
void BasicModel<T>::backward_range(BasicTensor<T> grad, std::size_t end) {
  for (std::size_t i = end; i-- > 0;) grad = layers_[i]->backward(grad);
}

template <typename T>
void BasicModel<T>::backward(const BasicTensor<T>& grad_output) {
  if (grad_output.size() != shape_size(output_shape())) {
    throw ShapeError("backward: gradient does not match model output " + shape_string(output_shape()));
  }
  backward_range(grad_output.reshaped(output_shape()), layers_.size());
}

template <typename T>
void BasicModel<T>::backward_from_logits(const BasicTensor<T>& grad_logits) {
  if (layers_.empty() || layers_.back()->kind() != LayerKind::kSoftmax) {
    backward(grad_logits);
    return;
  }
  const Layer<T>& head = *layers_.back();
  if (grad_logits.size() != shape_size(head.input_shape())) {
    throw ShapeError("backward: logit gradient length mismatch");
  }
  // The softmax layer's recorded output is not needed on this path.
  BasicTensor<T> unused(head.output_shape());
  (void)layers_.back()->backward(unused);
  backward_range(grad_logits.reshaped(head.input_shape()), layers_.size() - 1);
}

template <typename T>
void BasicModel<T>::zero_grad() {
  for (auto* p : parameters()) p->grad.fill(T{0});
}

template <typename T>
void BasicModel<T>::sgd_update(T learning_rate, T grad_scale) {
  const T step = learning_rate * grad_scale;
  for (auto& l : layers_) {
    if (!l->trainable()) continue;
    for (auto& p : l->params()) {
      auto value = p.value.data();
      auto grad = p.grad.data();
      for (std::size_t i = 0; i < value.size(); ++i) value[i] -= step * grad[i];
    }
  }
}

template <typename T>
std::vector<Param<T>*> BasicModel<T>::parameters() {
  std::vector<Param<T>*> out;
  for (auto& l : layers_) {
    for (auto& p : l->params()) out.push_back(&p);
  }
  return out;
}

template <typename T>
std::vector<const Param<T>*> BasicModel<T>::parameters() const {
  std::vector<const Param<T>*> out;
  for (const auto& l : layers_) {
    for (const auto& p : std::as_const(*l).params()) out.push_back(&p);
  }
  return out;
}

template <typename T>
std::size_t BasicModel<T>::parameter_count() const {
  std::size_t total = 0;
  for (const auto* p : parameters()) total += p->value.size();
  return total;
}

template <typename T>
void BasicModel<T>::reseed(std::uint64_t seed) {
  for (std::size_t i = 0; i < layers_.size(); ++i) layers_[i]->reseed(seed + i);
}

template <typename T>
ModelWeights BasicModel<T>::to_weights() const {
  ModelWeights weights;
  for (const auto* p : parameters()) weights.records.push_back({p->name, p->value.template cast<float>()});
  return weights;
}

template <typename T>
void BasicModel<T>::load_weights(const ModelWeights& weights) {
  for (auto* p : parameters()) {
    const Tensor& src = weights.get(p->name);
    if (src.shape() != p->value.shape()) {
      throw WeightsError(WeightsError::Code::kShapeMismatch,
                         "weights: record '" + p->name + "' has shape " + shape_string(src.shape()) +
                             ", model expects " + shape_string(p->value.shape()));
    }
  }
  for (auto* p : parameters()) p->value = weights.get(p->name).template cast<T>();
}

template class BasicModel<float>;
template class BasicModel<double>;

}  // namespace signcast::nn
