#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include "signcast/video/frame.hpp"

namespace signcast::model {

struct LabeledClip {
  video::Clip clip;
  std::size_t label = 0;
};

struct LabeledDataset {
  std::vector<LabeledClip> items;
  std::vector<std::string> vocabulary;  // index -> word

  std::size_t num_classes() const noexcept { return vocabulary.size(); }
  std::size_t size() const noexcept { return items.size(); }
  bool empty() const noexcept { return items.empty(); }

  /// Every label < vocabulary size and every clip exactly 12 frames.
  void validate() const;
};

struct DatasetSplit {
  LabeledDataset train;
  LabeledDataset validation;
};

/// Stratified split: per class, a seeded shuffle sends the first
/// round(n * fraction) clips (at least one when n > 1) to validation.
DatasetSplit split_dataset(const LabeledDataset& dataset, double validation_fraction, std::uint64_t seed);

struct SyntheticOptions {
  std::size_t frame_size = 64;
};

/// Default word for class `index` in synthetic vocabularies.
std::string synthetic_word(std::size_t index);

/// Each class is a moving-shape motif: a shape type, a trajectory and a hue.
/// Clips differ by seeded jitter in start position, scale, colour and
/// background noise.
LabeledDataset generate_synthetic_dataset(std::size_t num_classes, std::size_t clips_per_class,
                                          std::uint64_t seed, const SyntheticOptions& options = {});

/// Renders a single clip of `label`'s motif with jitter drawn from `clip_seed`.
video::Clip render_synthetic_clip(std::size_t label, std::size_t num_classes, std::uint64_t clip_seed,
                                  const SyntheticOptions& options = {});

/// On-disk layout: `class_<idx>_<word>/<clip>/frame_00.ppm ...` plus
/// `labels.txt` with one word per line (line number = class index).
void write_dataset(const LabeledDataset& dataset, const std::filesystem::path& root);
LabeledDataset read_dataset(const std::filesystem::path& root);

std::vector<std::string> read_labels(const std::filesystem::path& path);
void write_labels(const std::vector<std::string>& vocabulary, const std::filesystem::path& path);

}  // namespace signcast::model
