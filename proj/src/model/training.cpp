#include "signcast/model/training.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <limits>
#include <numeric>
#include <random>
#include <stdexcept>

#include "signcast/nn/ops.hpp"
#include "signcast/nn/random.hpp"

namespace signcast::model {

namespace {

void check_dataset(const LabeledDataset& dataset, std::size_t num_classes, const char* what) {
  if (dataset.empty()) throw std::invalid_argument(std::string(what) + " set is empty");
  for (const auto& item : dataset.items) {
    if (item.label >= num_classes) {
      throw std::out_of_range(std::string(what) + " label " + std::to_string(item.label) + " outside " +
                              std::to_string(num_classes) + " classes");
    }
    if (item.clip.frames.size() != video::kClipLength) {
      throw std::invalid_argument(std::string(what) + " clip '" + item.clip.source_id + "' is not 12 frames");
    }
  }
}

struct Sample {
  std::size_t item;
  std::size_t frame;
};

}  // namespace

TrainingReport train(SignModel& model, const LabeledDataset& train_set, const LabeledDataset& validation_set,
                     const TrainOptions& options, const EpochCallback& on_epoch) {
  const std::size_t num_classes = model.config().num_classes;
  check_dataset(train_set, num_classes, "training");
  if (options.validate_every > 0) check_dataset(validation_set, num_classes, "validation");
  if (options.batch_size == 0) throw std::invalid_argument("batch size must be positive");
  if (options.frames_per_clip == 0 || options.frames_per_clip > video::kClipLength) {
    throw std::invalid_argument("frames per clip must be in 1..12");
  }
  if (!(options.learning_rate >= 0.0) || !std::isfinite(options.learning_rate)) {
    throw std::invalid_argument("learning rate must be finite and non-negative");
  }

  const auto start = std::chrono::steady_clock::now();
  std::mt19937_64 rng(options.seed);
  nn::Model& net = model.network();
  net.reseed(options.seed ^ 0x5eedULL);

  TrainingReport report;
  std::vector<std::size_t> frame_order(video::kClipLength);
  for (std::size_t epoch = 1; epoch <= options.epochs; ++epoch) {
    std::vector<Sample> samples;
    samples.reserve(train_set.size() * options.frames_per_clip);
    for (std::size_t i = 0; i < train_set.size(); ++i) {
      std::iota(frame_order.begin(), frame_order.end(), 0);
      nn::seeded_shuffle(frame_order, rng);
      for (std::size_t f = 0; f < options.frames_per_clip; ++f) samples.push_back({i, frame_order[f]});
    }
    nn::seeded_shuffle(samples, rng);

    double loss_sum = 0.0;
    std::size_t correct = 0;
    for (std::size_t begin = 0; begin < samples.size(); begin += options.batch_size) {
      const std::size_t end = std::min(samples.size(), begin + options.batch_size);
      net.zero_grad();
      for (std::size_t s = begin; s < end; ++s) {
        const auto& item = train_set.items[samples[s].item];
        const nn::Tensor x = model.preprocess(item.clip.frames[samples[s].frame]);
        const nn::Tensor probs = net.forward(x, nn::Mode::kTrain);
        const auto ce = nn::cross_entropy<float>(probs.data(), item.label);
        loss_sum += ce.loss;
        const auto& p = probs.values();
        if (static_cast<std::size_t>(std::max_element(p.begin(), p.end()) - p.begin()) == item.label) ++correct;
        net.backward_from_logits(nn::Tensor({num_classes}, ce.grad_logits));
      }
      net.sgd_update(static_cast<float>(options.learning_rate), 1.0f / static_cast<float>(end - begin));
    }

    EpochMetrics metrics;
    metrics.epoch = epoch;
    metrics.loss = loss_sum / static_cast<double>(samples.size());
    metrics.train_frame_accuracy = static_cast<double>(correct) / static_cast<double>(samples.size());
    if (options.validate_every > 0 && (epoch % options.validate_every == 0 || epoch == options.epochs)) {
      metrics.validation_accuracy = evaluate(model, validation_set).accuracy;
    }
    report.epochs.push_back(metrics);
    if (on_epoch && !on_epoch(metrics)) break;
  }
  report.seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
  return report;
}

Evaluation evaluate(SignModel& model, const LabeledDataset& dataset) {
  const std::size_t num_classes = model.config().num_classes;
  check_dataset(dataset, num_classes, "evaluation");
  Evaluation result;
  result.confusion.assign(num_classes, std::vector<std::size_t>(num_classes, 0));
  std::size_t correct = 0;
  for (const auto& item : dataset.items) {
    const std::size_t predicted = model.predict_clip(item.clip).label;
    result.predictions.push_back(predicted);
    ++result.confusion[item.label][predicted];
    if (predicted == item.label) ++correct;
  }
  result.accuracy = static_cast<double>(correct) / static_cast<double>(dataset.size());
  result.per_class_accuracy.resize(num_classes);
  for (std::size_t k = 0; k < num_classes; ++k) {
    const auto& row = result.confusion[k];
    const std::size_t total = std::accumulate(row.begin(), row.end(), std::size_t{0});
    result.per_class_accuracy[k] = total == 0 ? std::numeric_limits<double>::quiet_NaN()
                                              : static_cast<double>(row[k]) / static_cast<double>(total);
  }
  return result;
}

}  // namespace signcast::model
