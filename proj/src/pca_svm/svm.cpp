#include "signcast/pca_svm/svm.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <random>

#include "signcast/nn/random.hpp"

namespace signcast::pca_svm {

double svm_objective(std::span<const double> w, double b, const Matrix& x, std::span<const int> y, double lambda) {
  if (x.rows == 0 || x.rows != y.size()) throw PcaSvmError(PcaSvmError::Code::kEmpty, "svm_objective: bad inputs");
  double hinge = 0.0;
  for (std::size_t i = 0; i < x.rows; ++i) hinge += std::max(0.0, 1.0 - y[i] * (dot(w, x.row(i)) + b));
  return 0.5 * lambda * dot(w, w) + hinge / static_cast<double>(x.rows);
}

SvmModel svm_train(const Matrix& features, std::span<const std::size_t> labels, const SvmOptions& options,
                   std::size_t num_classes) {
  const std::size_t n = features.rows, dim = features.cols;
  if (n == 0 || dim == 0) throw PcaSvmError(PcaSvmError::Code::kEmpty, "svm_train: empty feature matrix");
  if (labels.size() != n) {
    throw PcaSvmError(PcaSvmError::Code::kDimensionMismatch, "svm_train: label count differs from row count");
  }
  if (!(options.c > 0.0) || !(options.learning_rate > 0.0) || options.batch_size == 0) {
    throw PcaSvmError(PcaSvmError::Code::kInvalidArgument, "svm_train: C, learning rate and batch size must be positive");
  }
  const std::size_t max_label = *std::max_element(labels.begin(), labels.end());
  if (num_classes == 0) num_classes = max_label + 1;
  if (max_label >= num_classes) {
    throw PcaSvmError(PcaSvmError::Code::kInvalidArgument, "svm_train: label outside class range");
  }
  if (std::all_of(labels.begin(), labels.end(), [&](std::size_t l) { return l == labels[0]; })) {
    throw PcaSvmError(PcaSvmError::Code::kSingleClass, "svm_train: only one class present");
  }
  if (num_classes < 2) throw PcaSvmError(PcaSvmError::Code::kSingleClass, "svm_train: need at least 2 classes");

  double mean_sq = 0.0;
  for (std::size_t i = 0; i < n; ++i) mean_sq += dot(features.row(i), features.row(i));
  mean_sq /= static_cast<double>(n);
  const double scale = mean_sq > 0.0 ? 1.0 / std::sqrt(mean_sq) : 1.0;
  Matrix x = features;
  for (double& v : x.values) v *= scale;

  const double lambda = 1.0 / (options.c * static_cast<double>(n));
  SvmModel model;
  model.weights = Matrix(num_classes, dim);
  model.bias.assign(num_classes, 0.0);
  model.c = options.c;
  model.objective_history.resize(num_classes);

  std::vector<int> y(n);
  std::vector<std::size_t> order(n);
  std::vector<double> w(dim), grad(dim);
  for (std::size_t cls = 0; cls < num_classes; ++cls) {
    for (std::size_t i = 0; i < n; ++i) y[i] = labels[i] == cls ? 1 : -1;
    std::fill(w.begin(), w.end(), 0.0);
    double b = 0.0;
    std::vector<double> best_w = w;
    double best_b = 0.0;
    double best_obj = svm_objective(w, b, x, y, lambda);
    auto& history = model.objective_history[cls];
    history.push_back(best_obj);

    std::mt19937_64 rng(options.seed);
    for (std::size_t epoch = 0; epoch < options.epochs; ++epoch) {
      const double step = options.learning_rate / std::sqrt(static_cast<double>(epoch + 1));
      std::iota(order.begin(), order.end(), 0);
      nn::seeded_shuffle(order, rng);
      for (std::size_t begin = 0; begin < n; begin += options.batch_size) {
        const std::size_t end = std::min(n, begin + options.batch_size);
        const double inv = 1.0 / static_cast<double>(end - begin);
        for (std::size_t j = 0; j < dim; ++j) grad[j] = lambda * w[j];
        double grad_b = 0.0;
        for (std::size_t s = begin; s < end; ++s) {
          const std::size_t i = order[s];
          const auto row = x.row(i);
          if (y[i] * (dot(w, row) + b) < 1.0) {
            for (std::size_t j = 0; j < dim; ++j) grad[j] -= inv * y[i] * row[j];
            grad_b -= inv * y[i];
          }
        }
        for (std::size_t j = 0; j < dim; ++j) w[j] -= step * grad[j];
        b -= step * grad_b;
      }
      const double obj = svm_objective(w, b, x, y, lambda);
      if (obj < best_obj) {
        best_obj = obj;
        best_w = w;
        best_b = b;
      }
      history.push_back(best_obj);
    }
    auto out = model.weights.row(cls);
    for (std::size_t j = 0; j < dim; ++j) out[j] = best_w[j] * scale;
    model.bias[cls] = best_b;
  }
  return model;
}

SvmDecision svm_predict(const SvmModel& model, std::span<const double> x) {
  if (x.size() != model.input_dim()) {
    throw PcaSvmError(PcaSvmError::Code::kDimensionMismatch, "svm_predict: expected " +
                                                                 std::to_string(model.input_dim()) +
                                                                 " features, got " + std::to_string(x.size()));
  }
  SvmDecision d;
  d.values.resize(model.num_classes());
  for (std::size_t c = 0; c < d.values.size(); ++c) {
    d.values[c] = dot(model.weights.row(c), x) + model.bias[c];
    if (d.values[c] > d.values[d.label]) d.label = c;
  }
  return d;
}

}  // namespace signcast::pca_svm
