#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <random>

#include "signcast/model/dataset.hpp"
#include "signcast/model/sign_model.hpp"
#include "signcast/model/training.hpp"
#include "support/temp_dir.hpp"

using namespace signcast::model;
using signcast::video::Clip;
using signcast::video::Frame;
namespace fs = std::filesystem;
using signcast::testing::TempDir;

namespace {

ModelConfig tiny_config(std::size_t classes = 3) {
  ModelConfig c;
  c.input_height = c.input_width = 24;
  c.num_classes = classes;
  c.hidden_units = 16;
  c.dropout_rate = 0.5;
  c.seed = 3;
  return c;
}

Frame random_frame(std::size_t w, std::size_t h, std::mt19937_64& rng) {
  Frame f(w, h);
  for (auto& v : f.rgb) v = static_cast<std::uint8_t>(rng() & 0xff);
  return f;
}

Clip random_clip(std::mt19937_64& rng) {
  Clip clip;
  for (std::size_t i = 0; i < 12; ++i) clip.frames.push_back(random_frame(20, 16, rng));
  return clip;
}

std::vector<std::vector<float>> snapshot(const SignModel& model) {
  std::vector<std::vector<float>> values;
  for (const auto* p : model.network().parameters()) values.push_back(p->value.values());
  return values;
}

// Closed-form parameter count, written out independently of the layer code.
std::size_t expected_parameters(std::size_t stem, const std::vector<std::size_t>& stages, std::size_t hidden,
                                std::size_t classes) {
  std::size_t total = 3 * 3 * 3 * stem + stem;
  std::size_t channels = stem;
  for (std::size_t out : stages) {
    total += 3 * 3 * channels + channels;  // depthwise
    total += channels * out + out;         // pointwise
    channels = out;
  }
  total += channels * hidden + hidden;
  total += hidden * classes + classes;
  return total;
}

}  // namespace

TEST_CASE("default architecture matches the layer-shape table") {
  ModelConfig config;
  const auto widths = backbone_widths(config);
  CHECK(widths.stem == 8);
  CHECK(widths.stages == std::vector<std::size_t>{16, 32, 64});

  SignModel model(config);
  // stem 224, dw1 80, pw1 144, dw2 160, pw2 544, dw3 320, pw3 2112,
  // head 65000, classifier 10010
  CHECK(model.network().parameter_count() == 78594);
  CHECK(model.network().output_shape() == signcast::nn::Shape{10});
  CHECK(model.network().layer(model.network().layer_count() - 1).kind() == signcast::nn::LayerKind::kSoftmax);

  for (double alpha : {0.1, 0.25, 0.5, 1.0}) {
    for (std::size_t classes : {2, 7, 25}) {
      ModelConfig c = tiny_config(classes);
      c.width_multiplier = alpha;
      c.hidden_units = 33;
      const auto w = backbone_widths(c);
      SignModel m(c);
      CHECK(m.network().parameter_count() == expected_parameters(w.stem, w.stages, 33, classes));
    }
  }
}

TEST_CASE("invalid configs are rejected") {
  ModelConfig c;
  c.num_classes = 1;
  CHECK_THROWS_AS(SignModel{c}, std::invalid_argument);
  c = ModelConfig{};
  c.width_multiplier = 0.0;
  CHECK_THROWS_AS(SignModel{c}, std::invalid_argument);
  c = ModelConfig{};
  c.dropout_rate = 1.0;
  CHECK_THROWS_AS(SignModel{c}, std::invalid_argument);
}

TEST_CASE("zero image yields a distribution and init is deterministic") {
  SignModel a(tiny_config()), b(tiny_config());
  CHECK(snapshot(a) == snapshot(b));
  const auto p = a.predict_tensor(signcast::nn::Tensor({24, 24, 3}, 0.0f));
  double sum = 0;
  for (float v : p.probabilities) sum += v;
  CHECK(std::abs(sum - 1.0) < 1e-6);

  ModelConfig other = tiny_config();
  other.seed = 4;
  CHECK(snapshot(SignModel(other)) != snapshot(a));
  CHECK_THROWS(a.predict_tensor(signcast::nn::Tensor({12, 24, 3}, 0.0f)));
}

TEST_CASE("make_prediction orders top-k and breaks ties low") {
  const auto p = make_prediction({0.1f, 0.3f, 0.3f, 0.2f, 0.1f}, 3);
  CHECK(p.label == 1);
  REQUIRE(p.top_k.size() == 3);
  CHECK(p.top_k[0].first == 1);
  CHECK(p.top_k[1].first == 2);
  CHECK(p.top_k[2].first == 3);
  CHECK(p.confidence() == 0.3f);
  CHECK(make_prediction({0.5f, 0.5f}).top_k.size() == 2);
}

TEST_CASE("zeroed classifier gives uniform probabilities") {
  SignModel model(tiny_config(4));
  auto* classifier = model.network().find_layer("classifier");
  REQUIRE(classifier != nullptr);
  for (auto& p : classifier->params()) p.value.fill(0.0f);
  std::mt19937_64 rng(5);
  const auto pred = model.predict_frame(random_frame(30, 30, rng));
  for (float v : pred.probabilities) CHECK(v == doctest::Approx(0.25f).epsilon(1e-6));
}

TEST_CASE("predict_clip is the mean of frame predictions") {
  SignModel model(tiny_config(5));
  std::mt19937_64 rng(8);
  for (int trial = 0; trial < 5; ++trial) {
    Clip clip = random_clip(rng);
    std::vector<double> mean(5, 0.0);
    for (const auto& f : clip.frames) {
      const auto p = model.predict_frame(f);
      for (std::size_t k = 0; k < 5; ++k) mean[k] += p.probabilities[k] / 12.0;
    }
    const auto got = model.predict_clip(clip);
    for (std::size_t k = 0; k < 5; ++k) CHECK(std::abs(got.probabilities[k] - mean[k]) < 1e-6);

    std::shuffle(clip.frames.begin(), clip.frames.end(), rng);
    const auto shuffled = model.predict_clip(clip);
    for (std::size_t k = 0; k < 5; ++k) CHECK(std::abs(shuffled.probabilities[k] - got.probabilities[k]) < 1e-6);
    CHECK(shuffled.label == got.label);
  }

  const Frame f = random_frame(20, 20, rng);
  Clip same;
  same.frames.assign(12, f);
  const auto clip_pred = model.predict_clip(same);
  const auto frame_pred = model.predict_frame(f);
  for (std::size_t k = 0; k < 5; ++k) CHECK(std::abs(clip_pred.probabilities[k] - frame_pred.probabilities[k]) < 1e-6);
  CHECK(model.predict_frame(f).probabilities == frame_pred.probabilities);

  same.frames.pop_back();
  CHECK_THROWS_AS(model.predict_clip(same), std::invalid_argument);
}

TEST_CASE("synthetic dataset is deterministic and honours counts") {
  const auto a = generate_synthetic_dataset(6, 4, 99, {32});
  const auto b = generate_synthetic_dataset(6, 4, 99, {32});
  REQUIRE(a.size() == 24);
  CHECK(a.num_classes() == 6);
  CHECK(a.vocabulary.front() == "hello");
  for (std::size_t i = 0; i < a.size(); ++i) {
    CHECK(a.items[i].label == b.items[i].label);
    CHECK(a.items[i].clip.frames == b.items[i].clip.frames);
    CHECK(a.items[i].clip.frames.size() == 12);
  }
  std::vector<std::size_t> counts(6, 0);
  for (const auto& item : a.items) ++counts[item.label];
  for (auto n : counts) CHECK(n == 4);

  const auto c = generate_synthetic_dataset(6, 4, 100, {32});
  CHECK(c.items[0].clip.frames != a.items[0].clip.frames);
  // Clips within a class differ by jitter.
  CHECK(a.items[0].clip.frames != a.items[1].clip.frames);
  CHECK_THROWS(generate_synthetic_dataset(1, 4, 1));
}

TEST_CASE("stratified split is disjoint and covers the dataset") {
  const auto ds = generate_synthetic_dataset(4, 10, 1, {16});
  const auto split = split_dataset(ds, 0.2, 42);
  CHECK(split.train.size() == 32);
  CHECK(split.validation.size() == 8);
  std::vector<std::string> ids;
  for (const auto* part : {&split.train, &split.validation}) {
    std::vector<std::size_t> per_class(4, 0);
    for (const auto& item : part->items) {
      ++per_class[item.label];
      ids.push_back(std::to_string(item.label) + "/" + item.clip.source_id);
    }
    const std::size_t expect = part == &split.train ? 8 : 2;
    for (auto n : per_class) CHECK(n == expect);
  }
  std::sort(ids.begin(), ids.end());
  CHECK(std::adjacent_find(ids.begin(), ids.end()) == ids.end());
  CHECK(ids.size() == ds.size());

  const auto again = split_dataset(ds, 0.2, 42);
  for (std::size_t i = 0; i < again.validation.size(); ++i) {
    CHECK(again.validation.items[i].clip.source_id == split.validation.items[i].clip.source_id);
  }
  CHECK_THROWS_AS(split_dataset(ds, 1.0, 1), std::invalid_argument);
}

TEST_CASE("dataset directory round trip") {
  TempDir dir("ds");
  const auto ds = generate_synthetic_dataset(3, 2, 5, {16});
  write_dataset(ds, dir.path);
  CHECK(fs::exists(dir.path / "labels.txt"));
  CHECK(fs::exists(dir.path / "class_1_thanks" / "clip_0001" / "frame_11.ppm"));
  const auto back = read_dataset(dir.path);
  REQUIRE(back.size() == ds.size());
  CHECK(back.vocabulary == ds.vocabulary);
  for (std::size_t i = 0; i < ds.size(); ++i) {
    CHECK(back.items[i].label == ds.items[i].label);
    CHECK(back.items[i].clip.frames.size() == 12);
    for (std::size_t f = 0; f < 12; ++f) CHECK(back.items[i].clip.frames[f].rgb == ds.items[i].clip.frames[f].rgb);
  }

  write_labels({"alpha", "beta", "gamma"}, dir.path / "labels.txt");
  CHECK_THROWS(read_dataset(dir.path));
  CHECK_THROWS(read_dataset(dir.path / "nope"));
}

TEST_CASE("short clips on disk are extended to 12 frames") {
  TempDir dir("short");
  write_labels({"a", "b"}, dir.path / "labels.txt");
  std::vector<Frame> frames;
  for (std::size_t i = 0; i < 5; ++i) frames.emplace_back(8, 8, static_cast<std::uint8_t>(i * 20), i);
  signcast::video::write_frames(frames, dir.path / "class_0_a" / "c0");
  signcast::video::write_frames(frames, dir.path / "class_1_b" / "c0");
  const auto ds = read_dataset(dir.path);
  REQUIRE(ds.size() == 2);
  CHECK(ds.items[0].clip.source_length == 5);
  CHECK(ds.items[0].clip.frames.back().rgb == frames.back().rgb);
}

TEST_CASE("training with zero learning rate leaves parameters unchanged") {
  const auto ds = generate_synthetic_dataset(3, 3, 7, {24});
  SignModel model(tiny_config());
  const auto before = snapshot(model);
  TrainOptions opts;
  opts.epochs = 2;
  opts.learning_rate = 0.0;
  opts.batch_size = 4;
  const auto report = train(model, ds, ds, opts);
  CHECK(report.epochs.size() == 2);
  CHECK(snapshot(model) == before);
}

TEST_CASE("training is reproducible under a fixed seed") {
  const auto ds = generate_synthetic_dataset(3, 3, 7, {24});
  TrainOptions opts;
  opts.epochs = 3;
  opts.learning_rate = 0.05;
  opts.batch_size = 5;
  SignModel a(tiny_config()), b(tiny_config());
  const auto ra = train(a, ds, ds, opts);
  const auto rb = train(b, ds, ds, opts);
  REQUIRE(ra.epochs.size() == rb.epochs.size());
  for (std::size_t i = 0; i < ra.epochs.size(); ++i) {
    CHECK(ra.epochs[i].loss == rb.epochs[i].loss);
    CHECK(ra.epochs[i].train_frame_accuracy == rb.epochs[i].train_frame_accuracy);
    CHECK(ra.epochs[i].validation_accuracy == rb.epochs[i].validation_accuracy);
  }
  CHECK(snapshot(a) == snapshot(b));
}

TEST_CASE("training rejects bad inputs") {
  SignModel model(tiny_config());
  LabeledDataset empty;
  empty.vocabulary = {"a", "b", "c"};
  const auto ds = generate_synthetic_dataset(3, 1, 7, {24});
  CHECK_THROWS_AS(train(model, empty, ds, {}), std::invalid_argument);
  auto bad = ds;
  bad.items[0].label = 3;
  CHECK_THROWS_AS(train(model, bad, ds, {}), std::out_of_range);
  CHECK_THROWS_AS(evaluate(model, empty), std::invalid_argument);
}

TEST_CASE("loss on one repeated example is non-increasing after the first epoch") {
  ModelConfig config = tiny_config();
  config.dropout_rate = 0.0;
  SignModel model(config);
  const auto ds = generate_synthetic_dataset(3, 1, 11, {24});
  LabeledDataset one;
  one.vocabulary = ds.vocabulary;
  LabeledClip item = ds.items[1];
  item.clip.frames.assign(12, item.clip.frames[0]);
  one.items.push_back(item);

  TrainOptions opts;
  opts.epochs = 15;
  opts.learning_rate = 0.01;
  opts.batch_size = 1;
  opts.frames_per_clip = 1;
  opts.validate_every = 0;
  const auto report = train(model, one, one, opts);
  for (std::size_t i = 2; i < report.epochs.size(); ++i) {
    CHECK(report.epochs[i].loss <= report.epochs[i - 1].loss);
  }
  CHECK(report.epochs.back().loss < report.epochs.front().loss);
}

TEST_CASE("frozen backbone trains only the head") {
  const auto ds = generate_synthetic_dataset(3, 2, 3, {24});
  SignModel model(tiny_config());
  model.set_backbone_frozen(true);
  const auto before = snapshot(model);
  TrainOptions opts;
  opts.epochs = 2;
  opts.batch_size = 3;
  opts.validate_every = 0;
  train(model, ds, ds, opts);
  const auto after = snapshot(model);
  const auto params = model.network().parameters();
  bool head_changed = false;
  for (std::size_t i = 0; i < params.size(); ++i) {
    const bool head = params[i]->name.rfind("head_dense", 0) == 0 || params[i]->name.rfind("classifier", 0) == 0;
    if (head) {
      head_changed |= after[i] != before[i];
    } else {
      CHECK(after[i] == before[i]);
    }
  }
  CHECK(head_changed);
}

TEST_CASE("evaluate recounts from the confusion matrix") {
  const auto ds = generate_synthetic_dataset(4, 15, 21, {24});
  SignModel model(tiny_config(4));
  const auto eval = evaluate(model, ds);
  std::size_t total = 0, diagonal = 0;
  for (std::size_t t = 0; t < 4; ++t) {
    std::size_t row = 0;
    for (std::size_t p = 0; p < 4; ++p) row += eval.confusion[t][p];
    CHECK(row == 15);
    total += row;
    diagonal += eval.confusion[t][t];
  }
  CHECK(total == ds.size());
  CHECK(eval.accuracy == doctest::Approx(static_cast<double>(diagonal) / static_cast<double>(total)));
  // Untrained model on a balanced set: chance level within 3 binomial sigma.
  const double sigma = std::sqrt(0.25 * 0.75 / 60.0);
  CHECK(std::abs(eval.accuracy - 0.25) <= 3 * sigma);

  LabeledDataset one;
  one.vocabulary = ds.vocabulary;
  one.items.push_back(ds.items[0]);
  one.items[0].label = eval.predictions[0];
  CHECK(evaluate(model, one).accuracy == 1.0);
}

TEST_CASE("save and load reproduce predictions exactly") {
  TempDir dir("weights");
  SignModel model(tiny_config(3));
  std::mt19937_64 rng(12);
  const auto path = dir.path / "model.slw";
  model.save(path);
  SignModel loaded = SignModel::load(path);
  CHECK(loaded.config().num_classes == 3);
  CHECK(loaded.config().input_height == 24);
  for (int i = 0; i < 10; ++i) {
    const Frame f = random_frame(24, 24, rng);
    CHECK(loaded.predict_frame(f).probabilities == model.predict_frame(f).probabilities);
  }
  auto weights = model.to_weights();
  weights.records.erase(weights.records.begin());
  CHECK_THROWS(SignModel::from_weights(weights));
}
