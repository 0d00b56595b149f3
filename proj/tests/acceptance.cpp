// Acceptance run: one PASS/FAIL line per headline criterion. The trained
// CNN from the synthetic-training check is reused by the persistence and
// end-to-end checks.

#include <Eigen/Dense>
#include <chrono>
#include <cstring>
#include <fstream>
#include <functional>
#include <iomanip>
#include <iostream>
#include <optional>
#include <random>
#include <sstream>
#include <spdlog/spdlog.h>

#include "signcast/capture/capture.hpp"
#include "signcast/model/training.hpp"
#include "signcast/nn/ops.hpp"
#include "signcast/pca_svm/pipeline.hpp"
#include "signcast/video/pipeline.hpp"
#include "support/debounce_oracle.hpp"
#include "support/gradcheck.hpp"
#include "support/malformed_payloads.hpp"
#include "support/random_messages.hpp"
#include "support/server_harness.hpp"
#include "support/temp_dir.hpp"

using namespace signcast;
using namespace std::chrono_literals;
namespace fs = std::filesystem;

namespace {

struct Outcome {
  bool pass = false;
  std::string detail;
};

double seconds_since(std::chrono::steady_clock::time_point start) {
  return std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
}

std::string fmt(double v, int precision = 3) {
  std::ostringstream s;
  s << std::setprecision(precision) << v;
  return s.str();
}

// ---- gradient correctness ----

Outcome gradient_check() {
  const auto start = std::chrono::steady_clock::now();
  std::mt19937_64 rng(4711);
  double worst = 0.0;
  std::string worst_name;
  std::size_t checked = 0;
  auto note = [&](const testing::GradReport& r) {
    ++checked;
    if (r.relative_error > worst) {
      worst = r.relative_error;
      worst_name = r.name;
    }
  };

  std::uniform_int_distribution<std::size_t> dim(3, 7), chan(1, 4);
  for (int trial = 0; trial < 4; ++trial) {
    const nn::Padding pad = trial % 2 ? nn::Padding::kValid : nn::Padding::kSame;
    const std::size_t stride = 1 + static_cast<std::size_t>(trial / 2);
    const nn::Shape image{dim(rng), dim(rng), chan(rng)};
    const std::vector<std::pair<nn::LayerSpec, nn::Shape>> cases = {
        {nn::LayerSpec::conv2d("conv2d", 3, chan(rng), stride, pad), image},
        {nn::LayerSpec::depthwise("depthwise", 3, stride, pad), image},
        {nn::LayerSpec::pointwise("pointwise", chan(rng)), image},
        {nn::LayerSpec::dense("dense", chan(rng) + 1), {dim(rng)}},
    };
    for (const auto& [spec, shape] : cases) {
      auto layer = nn::make_layer<double>(spec, shape, rng);
      for (auto& p : layer->params()) {
        for (double& v : p.value.data()) v += 0.1;
      }
      const auto x = testing::random_tensor_d(shape, rng);
      for (const auto& r : testing::check_layer(*layer, x, rng())) note(r);
    }
  }

  // The real architecture builder, shrunk to a small input and head.
  for (std::uint64_t seed : {11u, 12u, 13u}) {
    model::ModelConfig config;
    config.input_height = config.input_width = 9;
    config.num_classes = 4;
    config.width_multiplier = 0.125;
    config.hidden_units = 8;
    config.dropout_rate = 0.5;
    config.seed = seed;
    auto net = model::build_network<double>(config);
    std::uniform_real_distribution<double> jitter(-0.3, 0.3);
    for (auto* p : net.parameters()) {
      if (p->value.rank() == 1) {
        for (double& v : p->value.data()) v = jitter(rng);
      }
    }
    const auto x = testing::random_tensor_d({9, 9, 3}, rng);
    for (const auto& r : testing::check_model(net, x, seed % 4, seed)) note(r);
  }
  const double secs = seconds_since(start);
  return {worst < 1e-4 && secs < 60.0, std::to_string(checked) + " gradients, worst relative error " + fmt(worst) +
                                          " (" + worst_name + "), " + fmt(secs) + " s"};
}

// ---- oracle equivalence ----

testing::Image to_image(const nn::TensorD& t) {
  auto img = testing::make_image(t.dim(0), t.dim(1), t.dim(2));
  for (std::size_t y = 0; y < t.dim(0); ++y)
    for (std::size_t x = 0; x < t.dim(1); ++x)
      for (std::size_t c = 0; c < t.dim(2); ++c) img[y][x][c] = t.at(y, x, c);
  return img;
}

double image_diff(const nn::TensorD& t, const testing::Image& img) {
  if (t.dim(0) != img.size() || t.dim(1) != img[0].size() || t.dim(2) != img[0][0].size()) return INFINITY;
  double worst = 0.0;
  for (std::size_t y = 0; y < t.dim(0); ++y)
    for (std::size_t x = 0; x < t.dim(1); ++x)
      for (std::size_t c = 0; c < t.dim(2); ++c) worst = std::max(worst, std::abs(t.at(y, x, c) - img[y][x][c]));
  return worst;
}

Eigen::MatrixXd to_eigen(const pca_svm::Matrix& m) {
  Eigen::MatrixXd e(m.rows, m.cols);
  for (std::size_t i = 0; i < m.rows; ++i)
    for (std::size_t j = 0; j < m.cols; ++j) e(i, j) = m(i, j);
  return e;
}

Outcome oracle_equivalence() {
  std::mt19937_64 rng(2024);
  std::uniform_int_distribution<std::size_t> dim(1, 7), chan(1, 4), kern(1, 3), strd(1, 2);
  std::size_t layer_cases = 0;
  double layer_worst = 0.0;
  for (int trial = 0; trial < 120; ++trial) {
    const std::size_t k = kern(rng), stride = strd(rng);
    const std::size_t h = std::max(dim(rng), k), w = std::max(dim(rng), k), c = chan(rng), f = chan(rng);
    const bool same = trial % 2 == 0;
    const auto pad = same ? nn::Padding::kSame : nn::Padding::kValid;
    const auto x = testing::random_tensor_d({h, w, c}, rng);

    const auto ker = testing::random_tensor_d({k, k, c, f}, rng);
    const auto bias = testing::random_tensor_d({f}, rng);
    testing::Kernel4 k4(k, std::vector(k, std::vector(c, std::vector<double>(f))));
    for (std::size_t a = 0; a < k; ++a)
      for (std::size_t b = 0; b < k; ++b)
        for (std::size_t cc = 0; cc < c; ++cc)
          for (std::size_t ff = 0; ff < f; ++ff) k4[a][b][cc][ff] = ker[((a * k + b) * c + cc) * f + ff];
    layer_worst = std::max(layer_worst, image_diff(nn::conv2d(x, ker, bias, stride, pad),
                                                   testing::naive_conv2d(to_image(x), k4, bias.values(), stride, same)));

    const auto dker = testing::random_tensor_d({k, k, c}, rng);
    const auto dbias = testing::random_tensor_d({c}, rng);
    testing::Kernel3 k3(k, std::vector(k, std::vector<double>(c)));
    for (std::size_t a = 0; a < k; ++a)
      for (std::size_t b = 0; b < k; ++b)
        for (std::size_t cc = 0; cc < c; ++cc) k3[a][b][cc] = dker[(a * k + b) * c + cc];
    layer_worst = std::max(layer_worst, image_diff(nn::depthwise_conv2d(x, dker, dbias, stride, pad),
                                                   testing::naive_depthwise(to_image(x), k3, dbias.values(), stride,
                                                                            same)));

    const std::size_t n = h * w * c;
    const auto wd = testing::random_tensor_d({n, f}, rng);
    const auto bd = testing::random_tensor_d({f}, rng);
    std::vector<std::vector<double>> wm(n, std::vector<double>(f));
    for (std::size_t i = 0; i < n; ++i)
      for (std::size_t j = 0; j < f; ++j) wm[i][j] = wd[i * f + j];
    const auto expected = testing::naive_dense(x.values(), wm, bd.values());
    const auto got = nn::dense(x, wd, bd);
    for (std::size_t j = 0; j < f; ++j) layer_worst = std::max(layer_worst, std::abs(got[j] - expected[j]));
    ++layer_cases;
  }

  std::normal_distribution<double> normal(0.0, 1.0);
  double pca_worst = 0.0;
  std::size_t pca_cases = 0;
  for (int trial = 0; trial < 50; ++trial) {
    pca_svm::Matrix data(8, 5);
    for (double& v : data.values) v = normal(rng);
    Eigen::MatrixXd centred = to_eigen(data);
    centred.rowwise() -= centred.colwise().mean();
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> solver(centred.transpose() * centred / 7.0);
    for (std::size_t k = 1; k <= 5; ++k) {
      const auto model = pca_svm::pca_fit(data, k);
      const Eigen::MatrixXd top = solver.eigenvectors().rightCols(static_cast<Eigen::Index>(k));
      const Eigen::MatrixXd comps = to_eigen(model.components);
      pca_worst = std::max(pca_worst, (comps.transpose() * comps - top * top.transpose()).cwiseAbs().maxCoeff());
      ++pca_cases;
    }
  }

  std::size_t resample_ok = 0;
  for (std::size_t length = 1; length <= 50; ++length) {
    resample_ok += video::resample_indices(length) == testing::resample_indices_oracle(length, video::kClipLength);
  }

  const bool pass = layer_cases >= 100 && layer_worst < 1e-5 && pca_worst < 1e-8 && resample_ok == 50;
  return {pass, std::to_string(layer_cases) + " conv/depthwise/dense cases, max diff " + fmt(layer_worst) + "; " +
                    std::to_string(pca_cases) + " PCA projectors, max diff " + fmt(pca_worst) + "; resample " +
                    std::to_string(resample_ok) + "/50 lengths"};
}

// ---- synthetic training ----

struct Trained {
  std::optional<model::SignModel> model;
  model::DatasetSplit split;
};

Outcome synthetic_training(Trained& out) {
  const auto dataset = model::generate_synthetic_dataset(10, 50, 2024);
  out.split = model::split_dataset(dataset, 0.2, 11);
  out.model.emplace(model::ModelConfig{});
  model::TrainOptions options;
  options.validate_every = 5;
  const auto report = model::train(*out.model, out.split.train, out.split.validation, options,
                                   [](const model::EpochMetrics& m) {
                                     spdlog::info("epoch {:>2} loss {:.4f} frame acc {:.3f}", m.epoch, m.loss,
                                                  m.train_frame_accuracy);
                                     return true;
                                   });
  const double cnn_train = model::evaluate(*out.model, out.split.train).accuracy;
  const double cnn_val = model::evaluate(*out.model, out.split.validation).accuracy;

  const auto pca_start = std::chrono::steady_clock::now();
  const auto pipeline = pca_svm::PcaSvmPipeline::fit(out.split.train);
  const double pca_val = pipeline.accuracy(out.split.validation);
  const double pca_secs = seconds_since(pca_start);

  const bool pass = report.epochs.size() <= 30 && cnn_train >= 0.9 && cnn_val >= 0.8 && report.seconds < 600.0 &&
                    pca_val >= 0.7 && pca_secs < 120.0 && cnn_val >= pca_val;
  return {pass, "CNN train " + fmt(cnn_train) + " / val " + fmt(cnn_val) + " after " +
                    std::to_string(report.epochs.size()) + " epochs in " + fmt(report.seconds) + " s; PCA+SVM val " +
                    fmt(pca_val) + " in " + fmt(pca_secs) + " s"};
}

// ---- weight persistence ----

bool same_bits(const std::vector<float>& a, const std::vector<float>& b) {
  return a.size() == b.size() && std::memcmp(a.data(), b.data(), a.size() * sizeof(float)) == 0;
}

Outcome weight_persistence(Trained& trained) {
  if (!trained.model) return {false, "no trained model"};
  testing::TempDir dir("acceptance_weights");
  const auto path = dir.path / "model.slw";
  trained.model->save(path);
  auto loaded = model::SignModel::load(path);

  std::mt19937_64 rng(100);
  std::uniform_int_distribution<std::size_t> side(16, 128);
  std::size_t identical = 0;
  for (int i = 0; i < 100; ++i) {
    video::Frame frame(side(rng), side(rng));
    for (auto& v : frame.rgb) v = static_cast<std::uint8_t>(rng());
    identical += same_bits(trained.model->predict_frame(frame).probabilities, loaded.predict_frame(frame).probabilities);
  }
  return {identical == 100, std::to_string(identical) + "/100 random inputs bitwise identical after reload"};
}

// ---- protocol conformance ----

Outcome protocol_conformance() {
  std::mt19937_64 rng(1000);
  std::size_t lossless = 0;
  const std::size_t total = 5000;
  for (std::size_t i = 0; i < total; ++i) {
    const auto m = testing::random_message(rng);
    try {
      const auto text = protocol::encode(m);
      lossless += protocol::decode(text) == m && text.find('\n') == std::string::npos;
    } catch (const protocol::ProtocolError&) {
    }
  }
  const auto cases = testing::malformed_cases();
  std::size_t designated = 0;
  for (const auto& c : cases) {
    try {
      (void)protocol::decode(c.payload);
    } catch (const protocol::ProtocolError& e) {
      designated += e.code() == c.expected;
    }
  }
  return {lossless == total && designated == cases.size(),
          std::to_string(lossless) + "/" + std::to_string(total) + " round trips lossless; " +
              std::to_string(designated) + "/" + std::to_string(cases.size()) +
              " malformed payloads gave their designated error"};
}

// ---- broadcast semantics ----

Outcome broadcast_semantics() {
  server::BroadcastServer s(testing::loopback_config());
  s.start();
  const auto url = testing::ws_url(s);
  const auto fan = testing::run_broadcast(url, 5, 100);
  const auto iso = testing::run_isolation(url, 50);
  const bool empty = testing::wait_until_empty(s, 2s);
  s.stop();
  const bool pass = fan.complete && fan.strictly_increasing && fan.identical_order && iso.leaks == 0 &&
                    iso.complete && fan.p95_ms < 50.0 && empty;
  std::size_t received = 0;
  for (const auto& v : fan.viewer_seqs) received += v.size();
  return {pass, std::to_string(received) + "/500 deliveries, increasing " + (fan.strictly_increasing ? "yes" : "no") +
                    ", same order " + (fan.identical_order ? "yes" : "no") + ", cross-room leaks " +
                    std::to_string(iso.leaks) + ", p95 latency " + fmt(fan.p95_ms) + " ms, server empty after " +
                    (empty ? "yes" : "no")};
}

// ---- end to end ----

Outcome end_to_end(Trained& trained) {
  if (!trained.model) return {false, "no trained model"};
  testing::TempDir dir("acceptance_e2e");
  trained.model->save(dir.path / "model.slw");
  model::write_labels(trained.split.train.vocabulary, dir.path / "labels.txt");

  // Held-out clips of classes A, A, B rendered from seeds outside the dataset.
  const std::size_t a = 3, b = 7;
  const std::vector<std::size_t> sequence = {a, a, b};
  for (std::size_t i = 0; i < sequence.size(); ++i) {
    const auto clip = model::render_synthetic_clip(sequence[i], 10, 0xE2E0 + i);
    video::write_frames(clip.frames, dir.path / "source" / ("part_" + std::to_string(i)));
  }

  server::BroadcastServer s(testing::loopback_config());
  s.start();
  auto subscriber = testing::join_room(testing::ws_url(s), "meeting", protocol::Role::kViewer, "headless");

  capture::CaptureConfig config;
  config.source = dir.path / "source";
  config.model = dir.path / "model.slw";
  config.server_url = testing::ws_url(s);
  config.room = "meeting";
  config.stride = 12;
  config.transcript = dir.path / "transcript.tsv";
  const auto report = capture::run_capture(config);

  // Oracle: classify the same windows with an independently loaded model and
  // apply the reference emission policy.
  auto reference = model::SignModel::load(config.model);
  const auto frames = capture::load_source(config.source);
  const auto vocabulary = trained.split.train.vocabulary;
  std::vector<testing::WindowGuess> guesses;
  for (std::size_t end = config.stride; end <= frames.size(); end += config.stride) {
    const std::size_t begin = end >= video::kClipLength ? end - video::kClipLength : 0;
    const std::vector<video::Frame> window(frames.begin() + static_cast<long>(begin),
                                           frames.begin() + static_cast<long>(end));
    const auto p = reference.predict_clip(video::resample_to_length(window));
    guesses.push_back({vocabulary[p.label], p.confidence()});
  }
  std::vector<std::string> expected_words;
  std::vector<double> expected_conf;
  for (std::size_t w : testing::simulate_emissions(guesses, config.debounce.min_confidence,
                                                   config.debounce.repeat_gap)) {
    expected_words.push_back(guesses[w - 1].word);
    expected_conf.push_back(guesses[w - 1].confidence);
  }

  std::vector<std::string> transcript_lines;
  std::ifstream in(*config.transcript);
  for (std::string line; std::getline(in, line);) transcript_lines.push_back(line);

  std::vector<std::string> received_lines;
  while (auto m = testing::receive_as<protocol::CaptionBroadcast>(*subscriber.client, 1000ms)) {
    received_lines.push_back(capture::format_transcript_line(m->event));
  }
  subscriber.client->close();
  s.stop();

  std::vector<std::string> words;
  std::vector<double> confidences;
  bool seqs_ok = true;
  for (std::size_t i = 0; i < report.emissions.size(); ++i) {
    words.push_back(report.emissions[i].word);
    confidences.push_back(report.emissions[i].confidence);
    seqs_ok = seqs_ok && report.emissions[i].seq == i + 1;
  }
  const std::vector<std::string> spoken = {vocabulary[a], vocabulary[b]};
  const bool matches_oracle = words == expected_words && confidences == expected_conf;
  const bool verbatim = received_lines == transcript_lines && transcript_lines.size() == report.emissions.size();
  const bool pass = matches_oracle && words == spoken && verbatim && seqs_ok;

  std::string joined;
  for (const auto& w : words) joined += (joined.empty() ? "" : " ") + w;
  return {pass, "transcript [" + joined + "] over " + std::to_string(report.windows.size()) +
                    " windows; oracle match " + (matches_oracle ? "yes" : "no") + ", expected [" + spoken[0] + " " +
                    spoken[1] + "] " + (words == spoken ? "yes" : "no") + ", subscriber received " +
                    std::to_string(received_lines.size()) + "/" + std::to_string(transcript_lines.size()) +
                    " lines verbatim " + (verbatim ? "yes" : "no")};
}

}  // namespace

int main() {
  spdlog::set_level(spdlog::level::warn);
  Trained trained;
  const std::vector<std::pair<std::string, std::function<Outcome()>>> criteria = {
      {"gradient-correctness", gradient_check},
      {"oracle-equivalence", oracle_equivalence},
      {"synthetic-training", [&] { return synthetic_training(trained); }},
      {"weight-persistence", [&] { return weight_persistence(trained); }},
      {"protocol-conformance", protocol_conformance},
      {"broadcast-semantics", broadcast_semantics},
      {"end-to-end", [&] { return end_to_end(trained); }},
  };
  int failures = 0;
  for (const auto& [name, run] : criteria) {
    Outcome o;
    try {
      o = run();
    } catch (const std::exception& e) {
      o = {false, std::string("threw: ") + e.what()};
    }
    failures += !o.pass;
    std::cout << (o.pass ? "PASS " : "FAIL ") << name << ": " << o.detail << std::endl;
  }
  std::cout << (criteria.size() - static_cast<std::size_t>(failures)) << "/" << criteria.size()
            << " criteria passed" << std::endl;
  return failures == 0 ? 0 : 1;
}
