#include "signcast/model/dataset.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <map>
#include <numbers>
#include <random>
#include <regex>
#include <stdexcept>

#include "signcast/nn/random.hpp"
#include "signcast/video/pipeline.hpp"

namespace signcast::model {

namespace fs = std::filesystem;

void LabeledDataset::validate() const {
  if (vocabulary.size() < 2) throw std::invalid_argument("dataset vocabulary needs at least 2 words");
  for (const auto& item : items) {
    if (item.label >= vocabulary.size()) {
      throw std::out_of_range("dataset label " + std::to_string(item.label) + " outside vocabulary of " +
                              std::to_string(vocabulary.size()));
    }
    if (item.clip.frames.size() != video::kClipLength) {
      throw std::invalid_argument("dataset clip '" + item.clip.source_id + "' does not have 12 frames");
    }
  }
}

DatasetSplit split_dataset(const LabeledDataset& dataset, double validation_fraction, std::uint64_t seed) {
  if (!(validation_fraction >= 0.0 && validation_fraction < 1.0)) {
    throw std::invalid_argument("validation fraction must be in [0, 1)");
  }
  std::map<std::size_t, std::vector<std::size_t>> by_class;
  for (std::size_t i = 0; i < dataset.items.size(); ++i) by_class[dataset.items[i].label].push_back(i);

  DatasetSplit split;
  split.train.vocabulary = split.validation.vocabulary = dataset.vocabulary;
  std::mt19937_64 rng(seed);
  for (auto& [label, indices] : by_class) {
    nn::seeded_shuffle(indices, rng);
    const std::size_t n = indices.size();
    std::size_t n_val = static_cast<std::size_t>(std::lround(static_cast<double>(n) * validation_fraction));
    if (validation_fraction > 0.0 && n > 1) n_val = std::clamp<std::size_t>(n_val, 1, n - 1);
    if (n <= 1) n_val = 0;
    // Keep original order inside each side of the split.
    std::sort(indices.begin(), indices.begin() + static_cast<std::ptrdiff_t>(n_val));
    std::sort(indices.begin() + static_cast<std::ptrdiff_t>(n_val), indices.end());
    for (std::size_t j = 0; j < n; ++j) {
      (j < n_val ? split.validation : split.train).items.push_back(dataset.items[indices[j]]);
    }
  }
  return split;
}

std::string synthetic_word(std::size_t index) {
  static const std::array<const char*, 20> kWords = {
      "hello", "thanks", "yes",    "no",     "please", "sorry", "help", "more", "eat",  "drink",
      "family", "friend", "school", "work", "home",   "water", "book", "good", "bad",  "love"};
  if (index < kWords.size()) return kWords[index];
  return "sign" + std::to_string(index);
}

namespace {

std::uint64_t mix(std::uint64_t x) {
  // splitmix64 finalizer
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

std::array<double, 3> hsv_to_rgb(double h, double s, double v) {
  const double i = std::floor(h * 6.0);
  const double f = h * 6.0 - i;
  const double p = v * (1 - s), q = v * (1 - f * s), t = v * (1 - (1 - f) * s);
  switch (static_cast<int>(i) % 6) {
    case 0: return {v, t, p};
    case 1: return {q, v, p};
    case 2: return {p, v, t};
    case 3: return {p, q, v};
    case 4: return {t, p, v};
    default: return {v, p, q};
  }
}

enum class ShapeKind { kDisk, kSquare, kTriangle, kCross, kRing };

bool inside(ShapeKind shape, double dx, double dy, double r) {
  switch (shape) {
    case ShapeKind::kDisk: return dx * dx + dy * dy <= r * r;
    case ShapeKind::kSquare: return std::abs(dx) <= 0.85 * r && std::abs(dy) <= 0.85 * r;
    case ShapeKind::kTriangle: return dy <= r && dy >= -r && std::abs(dx) <= (dy + r) * 0.5;
    case ShapeKind::kCross:
      return (std::abs(dx) <= r / 3 && std::abs(dy) <= r) || (std::abs(dy) <= r / 3 && std::abs(dx) <= r);
    case ShapeKind::kRing: {
      const double d2 = dx * dx + dy * dy;
      return d2 <= r * r && d2 >= 0.3 * r * r;
    }
  }
  return false;
}

/// Centre of the motif at t in [0, 1], in units of the frame size.
std::array<double, 2> trajectory(std::size_t kind, double t) {
  switch (kind % 5) {
    case 0: return {0.2 + 0.6 * t, 0.5};
    case 1: return {0.5, 0.2 + 0.6 * t};
    case 2: return {0.2 + 0.6 * t, 0.2 + 0.6 * t};
    case 3: {
      const double a = 2.0 * std::numbers::pi * t;
      return {0.5 + 0.25 * std::cos(a), 0.5 + 0.25 * std::sin(a)};
    }
    default: return {0.8 - 0.6 * t, 0.2 + 0.6 * t};
  }
}

}  // namespace

video::Clip render_synthetic_clip(std::size_t label, std::size_t num_classes, std::uint64_t clip_seed,
                                  const SyntheticOptions& options) {
  if (label >= num_classes) throw std::out_of_range("synthetic label outside class range");
  const std::size_t size = options.frame_size;
  if (size < 8) throw std::invalid_argument("synthetic frame size must be at least 8");
  std::mt19937_64 rng(clip_seed);
  auto uniform = [&](double lo, double hi) { return lo + (hi - lo) * nn::unit_uniform(rng); };

  const auto shape = static_cast<ShapeKind>(label % 5);
  const std::size_t path = label / 5;
  const double hue = std::fmod(static_cast<double>(label) * 0.6180339887498949, 1.0);
  const auto base = hsv_to_rgb(hue, 0.85, 0.95);
  std::array<double, 3> colour{};
  for (std::size_t c = 0; c < 3; ++c) colour[c] = std::clamp(base[c] * 255.0 + uniform(-12, 12), 0.0, 255.0);

  const double s = static_cast<double>(size);
  const double radius = s * 0.14 * uniform(0.85, 1.15);
  const double off_x = uniform(-0.08, 0.08), off_y = uniform(-0.08, 0.08);
  const double background = uniform(20, 60);

  video::Clip clip;
  clip.source_length = video::kClipLength;
  for (std::size_t i = 0; i < video::kClipLength; ++i) {
    const double t = static_cast<double>(i) / static_cast<double>(video::kClipLength - 1);
    const auto [cx, cy] = trajectory(path, t);
    const double px = (cx + off_x) * s, py = (cy + off_y) * s;
    video::Frame frame(size, size, 0, i);
    for (std::size_t y = 0; y < size; ++y) {
      for (std::size_t x = 0; x < size; ++x) {
        const bool on = inside(shape, static_cast<double>(x) + 0.5 - px, static_cast<double>(y) + 0.5 - py, radius);
        for (std::size_t c = 0; c < 3; ++c) {
          const double v = (on ? colour[c] : background) + uniform(-8, 8);
          frame.at(x, y, c) = static_cast<std::uint8_t>(std::clamp(std::lround(v), 0L, 255L));
        }
      }
    }
    clip.frames.push_back(std::move(frame));
    clip.source_indices.push_back(i);
  }
  return clip;
}

LabeledDataset generate_synthetic_dataset(std::size_t num_classes, std::size_t clips_per_class,
                                          std::uint64_t seed, const SyntheticOptions& options) {
  if (num_classes < 2) throw std::invalid_argument("synthetic dataset needs at least 2 classes");
  LabeledDataset dataset;
  for (std::size_t k = 0; k < num_classes; ++k) dataset.vocabulary.push_back(synthetic_word(k));
  char id[64];
  for (std::size_t k = 0; k < num_classes; ++k) {
    for (std::size_t n = 0; n < clips_per_class; ++n) {
      const std::uint64_t clip_seed = mix(mix(seed) ^ mix(k * 1000003ULL + n));
      LabeledClip item{render_synthetic_clip(k, num_classes, clip_seed, options), k};
      std::snprintf(id, sizeof(id), "clip_%04zu", n);
      item.clip.source_id = id;
      dataset.items.push_back(std::move(item));
    }
  }
  return dataset;
}

std::vector<std::string> read_labels(const fs::path& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open label file " + path.string());
  std::vector<std::string> words;
  std::string line;
  while (std::getline(in, line)) {
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    words.push_back(line);
  }
  return words;
}

void write_labels(const std::vector<std::string>& vocabulary, const fs::path& path) {
  std::ofstream out(path, std::ios::trunc);
  if (!out) throw std::runtime_error("cannot write label file " + path.string());
  for (const auto& w : vocabulary) out << w << '\n';
}

void write_dataset(const LabeledDataset& dataset, const fs::path& root) {
  dataset.validate();
  fs::create_directories(root);
  write_labels(dataset.vocabulary, root / "labels.txt");
  std::map<std::size_t, std::size_t> counters;
  char clip_name[32];
  for (const auto& item : dataset.items) {
    const fs::path class_dir = root / ("class_" + std::to_string(item.label) + "_" + dataset.vocabulary[item.label]);
    std::snprintf(clip_name, sizeof(clip_name), "clip_%04zu", counters[item.label]++);
    video::write_frames(item.clip.frames, class_dir / clip_name);
  }
}

LabeledDataset read_dataset(const fs::path& root) {
  if (!fs::is_directory(root)) throw std::runtime_error("dataset directory not found: " + root.string());
  LabeledDataset dataset;
  dataset.vocabulary = read_labels(root / "labels.txt");
  static const std::regex class_pattern(R"(class_(\d+)_(.+))");
  std::map<std::size_t, fs::path> class_dirs;
  for (const auto& entry : fs::directory_iterator(root)) {
    if (!entry.is_directory()) continue;
    const std::string name = entry.path().filename().string();
    std::smatch m;
    if (!std::regex_match(name, m, class_pattern)) continue;
    const std::size_t label = std::stoul(m[1].str());
    if (label >= dataset.vocabulary.size() || dataset.vocabulary[label] != m[2].str()) {
      throw std::runtime_error("class directory '" + name + "' does not match labels.txt");
    }
    class_dirs[label] = entry.path();
  }
  for (const auto& [label, dir] : class_dirs) {
    std::vector<fs::path> clips;
    for (const auto& entry : fs::directory_iterator(dir)) {
      if (entry.is_directory()) clips.push_back(entry.path());
    }
    std::sort(clips.begin(), clips.end());
    for (const auto& clip_dir : clips) {
      const auto frames = video::load_frames(clip_dir);
      dataset.items.push_back({video::resample_to_length(frames, video::kClipLength, clip_dir.filename().string()), label});
    }
  }
  dataset.validate();
  return dataset;
}

}  // namespace signcast::model
