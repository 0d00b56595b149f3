#include "signcast/pca_svm/pipeline.hpp"

#include <algorithm>
#include <cmath>

#include "signcast/video/pipeline.hpp"

namespace signcast::pca_svm {

std::vector<double> clip_features(const video::Clip& clip, std::size_t frame_size) {
  if (clip.frames.size() != video::kClipLength) {
    throw PcaSvmError(PcaSvmError::Code::kDimensionMismatch, "clip_features: clip must have 12 frames");
  }
  std::vector<double> features;
  features.reserve(video::kClipLength * frame_size * frame_size * 3);
  for (const auto& frame : clip.frames) {
    const nn::Tensor t = video::preprocess(frame, frame_size, frame_size);
    for (float v : t.data()) features.push_back(v);
  }
  return features;
}

PcaSvmPipeline PcaSvmPipeline::fit(const model::LabeledDataset& dataset, const PcaSvmOptions& options) {
  if (dataset.empty()) throw PcaSvmError(PcaSvmError::Code::kEmpty, "pca-svm: empty dataset");
  if (options.frame_size == 0) throw PcaSvmError(PcaSvmError::Code::kInvalidArgument, "pca-svm: frame size is 0");
  dataset.validate();
  const std::size_t dim = video::kClipLength * options.frame_size * options.frame_size * 3;
  Matrix data(dataset.size(), dim);
  std::vector<std::size_t> labels;
  for (std::size_t i = 0; i < dataset.size(); ++i) {
    const auto f = clip_features(dataset.items[i].clip, options.frame_size);
    std::copy(f.begin(), f.end(), data.row(i).begin());
    labels.push_back(dataset.items[i].label);
  }
  if (dataset.size() < 2) throw PcaSvmError(PcaSvmError::Code::kSingleClass, "pca-svm: need at least 2 clips");

  PcaSvmPipeline pipeline;
  pipeline.frame_size_ = options.frame_size;
  const std::size_t k = std::min({options.components, dataset.size() - 1, dim});
  pipeline.pca_ = pca_fit(data, std::max<std::size_t>(k, 1));
  pipeline.svm_ = svm_train(pca_transform(pipeline.pca_, data), labels, options.svm, dataset.num_classes());
  return pipeline;
}

SvmDecision PcaSvmPipeline::predict_clip(const video::Clip& clip) const {
  return svm_predict(svm_, pca_transform(pca_, clip_features(clip, frame_size_)));
}

double PcaSvmPipeline::accuracy(const model::LabeledDataset& dataset) const {
  if (dataset.empty()) throw PcaSvmError(PcaSvmError::Code::kEmpty, "pca-svm: empty dataset");
  std::size_t correct = 0;
  for (const auto& item : dataset.items) correct += predict_clip(item.clip).label == item.label;
  return static_cast<double>(correct) / static_cast<double>(dataset.size());
}

namespace {

nn::Tensor to_tensor(nn::Shape shape, const std::vector<double>& values) {
  std::vector<float> f(values.begin(), values.end());
  return nn::Tensor(std::move(shape), std::move(f));
}

std::vector<double> from_tensor(const nn::Tensor& t) { return {t.values().begin(), t.values().end()}; }

void expect_shape(const nn::Tensor& t, const nn::Shape& shape, const char* name) {
  if (t.shape() != shape) {
    throw nn::WeightsError(nn::WeightsError::Code::kShapeMismatch,
                           std::string("weights: ") + name + " has shape " + nn::shape_string(t.shape()) +
                               ", expected " + nn::shape_string(shape));
  }
}

}  // namespace

nn::ModelWeights PcaSvmPipeline::to_weights() const {
  nn::ModelWeights w;
  const std::size_t d = pca_.input_dim(), k = pca_.output_dim(), classes = svm_.num_classes();
  w.records.push_back({"pca_svm.config", to_tensor({2}, {static_cast<double>(frame_size_), svm_.c})});
  w.records.push_back({"pca.mean", to_tensor({d}, pca_.mean)});
  w.records.push_back({"pca.components", to_tensor({k, d}, pca_.components.values)});
  w.records.push_back({"pca.explained_variance", to_tensor({k}, pca_.explained_variance)});
  w.records.push_back({"svm.weights", to_tensor({classes, k}, svm_.weights.values)});
  w.records.push_back({"svm.bias", to_tensor({classes}, svm_.bias)});
  return w;
}

PcaSvmPipeline PcaSvmPipeline::from_weights(const nn::ModelWeights& weights) {
  PcaSvmPipeline p;
  const auto& config = weights.get("pca_svm.config");
  expect_shape(config, {2}, "pca_svm.config");
  p.frame_size_ = static_cast<std::size_t>(config[0]);
  p.svm_.c = config[1];

  const auto& comps = weights.get("pca.components");
  if (comps.rank() != 2) {
    throw nn::WeightsError(nn::WeightsError::Code::kShapeMismatch, "weights: pca.components must be rank 2");
  }
  const std::size_t k = comps.dim(0), d = comps.dim(1);
  if (d != video::kClipLength * p.frame_size_ * p.frame_size_ * 3) {
    throw nn::WeightsError(nn::WeightsError::Code::kShapeMismatch, "weights: pca.components width disagrees with frame size");
  }
  const auto& mean = weights.get("pca.mean");
  const auto& var = weights.get("pca.explained_variance");
  const auto& svm_w = weights.get("svm.weights");
  if (svm_w.rank() != 2) {
    throw nn::WeightsError(nn::WeightsError::Code::kShapeMismatch, "weights: svm.weights must be rank 2");
  }
  const std::size_t classes = svm_w.dim(0);
  expect_shape(mean, {d}, "pca.mean");
  expect_shape(var, {k}, "pca.explained_variance");
  expect_shape(svm_w, {classes, k}, "svm.weights");
  const auto& bias = weights.get("svm.bias");
  expect_shape(bias, {classes}, "svm.bias");

  p.pca_.mean = from_tensor(mean);
  p.pca_.components = Matrix(k, d);
  p.pca_.components.values = from_tensor(comps);
  p.pca_.explained_variance = from_tensor(var);
  p.svm_.weights = Matrix(classes, k);
  p.svm_.weights.values = from_tensor(svm_w);
  p.svm_.bias = from_tensor(bias);
  return p;
}

void PcaSvmPipeline::save(const std::filesystem::path& path) const { nn::save_weights_file(to_weights(), path); }

PcaSvmPipeline PcaSvmPipeline::load(const std::filesystem::path& path) {
  return from_weights(nn::load_weights_file(path));
}

}  // namespace signcast::pca_svm
