#pragma once

#include <cstddef>
#include <cstdint>
#include <functional>
#include <vector>

#include "signcast/model/dataset.hpp"
#include "signcast/model/sign_model.hpp"

namespace signcast::model {

struct TrainOptions {
  std::size_t epochs = 30;
  double learning_rate = 0.05;
  std::size_t batch_size = 16;
  /// Frames drawn (seeded, without replacement) from each clip per epoch.
  /// 12 uses every frame.
  std::size_t frames_per_clip = 4;
  std::uint64_t seed = 7;
  /// Validation clip accuracy is computed after every `validate_every`
  /// epochs and after the last one; 0 disables it.
  std::size_t validate_every = 1;
};

struct EpochMetrics {
  std::size_t epoch = 0;  // 1-based
  double loss = 0.0;      // mean frame cross-entropy, train-mode dropout
  double train_frame_accuracy = 0.0;
  double validation_accuracy = -1.0;  // clip accuracy; -1 when not computed
};

struct TrainingReport {
  std::vector<EpochMetrics> epochs;
  double seconds = 0.0;
};

/// Called after every epoch; returning false stops training early.
using EpochCallback = std::function<bool(const EpochMetrics&)>;

/// Mini-batch SGD on frame-level softmax cross-entropy. Each epoch samples
/// frames from every training clip, shuffles the samples with the seed and
/// averages gradients over each batch.
TrainingReport train(SignModel& model, const LabeledDataset& train_set, const LabeledDataset& validation_set,
                     const TrainOptions& options, const EpochCallback& on_epoch = {});

struct Evaluation {
  double accuracy = 0.0;
  std::vector<double> per_class_accuracy;  // NaN for classes absent from the dataset
  std::vector<std::vector<std::size_t>> confusion;  // [true][predicted]
  std::vector<std::size_t> predictions;
};

/// Clip-level evaluation through predict_clip.
Evaluation evaluate(SignModel& model, const LabeledDataset& dataset);

}  // namespace signcast::model
