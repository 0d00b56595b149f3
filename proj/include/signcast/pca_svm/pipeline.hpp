#pragma once

#include <cstddef>
#include <filesystem>
#include <string>
#include <vector>

#include "signcast/model/dataset.hpp"
#include "signcast/nn/weights_io.hpp"
#include "signcast/pca_svm/pca.hpp"
#include "signcast/pca_svm/svm.hpp"

namespace signcast::pca_svm {

struct PcaSvmOptions {
  std::size_t frame_size = 32;
  /// Clamped to n - 1 training clips.
  std::size_t components = 64;
  SvmOptions svm;
};

/// Concatenation of the 12 frames, each resized to frame_size x frame_size
/// and normalized to [-1, 1], flattened HWC.
std::vector<double> clip_features(const video::Clip& clip, std::size_t frame_size);

class PcaSvmPipeline {
 public:
  static PcaSvmPipeline fit(const model::LabeledDataset& dataset, const PcaSvmOptions& options = {});

  SvmDecision predict_clip(const video::Clip& clip) const;
  /// Fraction of clips whose predicted label matches.
  double accuracy(const model::LabeledDataset& dataset) const;

  const PcaModel& pca() const noexcept { return pca_; }
  const SvmModel& svm() const noexcept { return svm_; }
  std::size_t frame_size() const noexcept { return frame_size_; }

  /// Records pca.mean, pca.components, pca.explained_variance, svm.weights,
  /// svm.bias and pca_svm.config, stored as 32-bit floats.
  nn::ModelWeights to_weights() const;
  static PcaSvmPipeline from_weights(const nn::ModelWeights& weights);

  void save(const std::filesystem::path& path) const;
  static PcaSvmPipeline load(const std::filesystem::path& path);

 private:
  PcaModel pca_;
  SvmModel svm_;
  std::size_t frame_size_ = 32;
};

}  // namespace signcast::pca_svm
