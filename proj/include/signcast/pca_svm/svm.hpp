#pragma once

#include <cstddef>
#include <cstdint>
#include <span>
#include <vector>

#include "signcast/pca_svm/linalg.hpp"

namespace signcast::pca_svm {

struct SvmOptions {
  double c = 1.0;
  std::size_t epochs = 200;
  double learning_rate = 0.5;
  std::size_t batch_size = 16;
  std::uint64_t seed = 1;
};

/// One-vs-rest linear classifiers; decision value of class c is
/// weights.row(c) . x + bias[c].
struct SvmModel {
  Matrix weights;  // K x k
  std::vector<double> bias;
  double c = 1.0;
  /// Per class: objective of the kept iterate at initialization and after
  /// every epoch. Training diagnostics only, not persisted.
  std::vector<std::vector<double>> objective_history;

  std::size_t num_classes() const noexcept { return weights.rows; }
  std::size_t input_dim() const noexcept { return weights.cols; }
};

/// 0.5 * lambda * |w|^2 + mean_i max(0, 1 - y_i (w . x_i + b)), y_i = +-1.
double svm_objective(std::span<const double> w, double b, const Matrix& x, std::span<const int> y, double lambda);

/// Mini-batch sub-gradient descent per class with lambda = 1 / (C n) and
/// step lr / sqrt(epoch + 1). Inputs are rescaled internally by one global
/// factor (unit mean squared norm); the scale is folded back into the
/// weights. The iterate with the lowest full objective is kept, so the
/// recorded history never increases. `num_classes` 0 means max label + 1.
SvmModel svm_train(const Matrix& features, std::span<const std::size_t> labels, const SvmOptions& options,
                   std::size_t num_classes = 0);

struct SvmDecision {
  std::size_t label = 0;  // argmax, lowest index on ties
  std::vector<double> values;
};

SvmDecision svm_predict(const SvmModel& model, std::span<const double> x);

}  // namespace signcast::pca_svm
