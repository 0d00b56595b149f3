#include <cstdlib>
#include <iostream>
#include <sstream>

#include <spdlog/spdlog.h>

#include "CLI11.hpp"
#include "signcast/capture/capture.hpp"
#include "signcast/model/dataset.hpp"
#include "signcast/model/training.hpp"
#include "signcast/pca_svm/pipeline.hpp"
#include "signcast/server/server.hpp"
#include "signcast/video/pipeline.hpp"

using namespace signcast;
namespace fs = std::filesystem;

namespace {

struct SplitArgs {
  double validation_fraction = 0.2;
  std::uint64_t split_seed = 11;
};

void add_split_options(CLI::App* cmd, SplitArgs& args) {
  cmd->add_option("--val-fraction", args.validation_fraction, "Fraction of each class held out")
      ->check(CLI::Range(0.0, 0.9));
  cmd->add_option("--split-seed", args.split_seed, "Seed of the stratified split");
}

model::DatasetSplit load_split(const fs::path& data, const SplitArgs& args) {
  const auto dataset = model::read_dataset(data);
  spdlog::info("loaded {} clips over {} classes from {}", dataset.size(), dataset.num_classes(), data.string());
  if (args.validation_fraction == 0.0) return {dataset, {{}, dataset.vocabulary}};
  return model::split_dataset(dataset, args.validation_fraction, args.split_seed);
}

std::string top_k_text(const model::Prediction& p, const std::vector<std::string>& vocabulary) {
  std::ostringstream out;
  for (const auto& [label, prob] : p.top_k) out << "  " << vocabulary.at(label) << '\t' << prob << '\n';
  return out.str();
}

// ---- subcommands ----

struct GenDataArgs {
  fs::path out;
  std::size_t classes = 10;
  std::size_t clips_per_class = 50;
  std::uint64_t seed = 2024;
  std::size_t frame_size = 64;
};

int gen_data(const GenDataArgs& a) {
  const auto ds = model::generate_synthetic_dataset(a.classes, a.clips_per_class, a.seed, {a.frame_size});
  model::write_dataset(ds, a.out);
  std::cout << "wrote " << ds.size() << " clips over " << ds.num_classes() << " classes to " << a.out.string()
            << '\n';
  return 0;
}

struct GenSequenceArgs {
  fs::path out;
  std::vector<std::size_t> labels;
  std::size_t classes = 10;
  std::uint64_t seed = 99;
  std::size_t frame_size = 64;
};

int gen_sequence(const GenSequenceArgs& a) {
  for (std::size_t i = 0; i < a.labels.size(); ++i) {
    if (a.labels[i] >= a.classes) throw std::invalid_argument("label out of range");
    const auto clip = model::render_synthetic_clip(a.labels[i], a.classes, a.seed + i, {a.frame_size});
    char name[32];
    std::snprintf(name, sizeof name, "seq_%03zu", i);
    video::write_frames(clip.frames, a.out / name);
  }
  std::cout << "wrote " << a.labels.size() << " clips to " << a.out.string() << '\n';
  return 0;
}

struct TrainArgs {
  fs::path data;
  fs::path out;
  SplitArgs split;
  model::TrainOptions options;
  std::size_t input_size = 96;
  double width = 0.25;
  std::size_t hidden = 1000;
  double dropout = 0.75;
  std::uint64_t init_seed = 1;
  bool freeze_backbone = false;
};

int train(const TrainArgs& a) {
  const auto split = load_split(a.data, a.split);
  model::ModelConfig config;
  config.input_height = config.input_width = a.input_size;
  config.num_classes = split.train.num_classes();
  config.width_multiplier = a.width;
  config.hidden_units = a.hidden;
  config.dropout_rate = a.dropout;
  config.seed = a.init_seed;
  model::SignModel net(config);
  net.set_backbone_frozen(a.freeze_backbone);
  const auto report = model::train(net, split.train, split.validation, a.options, [](const model::EpochMetrics& m) {
    if (m.validation_accuracy >= 0) {
      spdlog::info("epoch {:>3}  loss {:.4f}  frame acc {:.3f}  val acc {:.3f}", m.epoch, m.loss,
                   m.train_frame_accuracy, m.validation_accuracy);
    } else {
      spdlog::info("epoch {:>3}  loss {:.4f}  frame acc {:.3f}", m.epoch, m.loss, m.train_frame_accuracy);
    }
    return true;
  });
  const auto train_eval = model::evaluate(net, split.train);
  std::cout << "train clip accuracy " << train_eval.accuracy << '\n';
  if (!split.validation.empty()) {
    std::cout << "validation clip accuracy " << model::evaluate(net, split.validation).accuracy << '\n';
  }
  std::cout << "trained in " << report.seconds << " s\n";
  if (a.out.has_parent_path()) fs::create_directories(a.out.parent_path());
  net.save(a.out);
  model::write_labels(split.train.vocabulary, a.out.parent_path() / "labels.txt");
  std::cout << "saved " << a.out.string() << '\n';
  return 0;
}

int evaluate(const fs::path& data, const fs::path& model_path) {
  auto net = model::SignModel::load(model_path);
  const auto dataset = model::read_dataset(data);
  const auto e = model::evaluate(net, dataset);
  std::cout << "clip accuracy " << e.accuracy << " on " << dataset.size() << " clips\n";
  for (std::size_t k = 0; k < e.per_class_accuracy.size(); ++k) {
    std::cout << "  " << k << ' ' << dataset.vocabulary[k] << '\t' << e.per_class_accuracy[k] << '\n';
  }
  return 0;
}

struct PcaSvmArgs {
  fs::path data;
  std::optional<fs::path> out;
  SplitArgs split;
  pca_svm::PcaSvmOptions options;
};

int pca_svm_cmd(const PcaSvmArgs& a) {
  const auto split = load_split(a.data, a.split);
  const auto start = std::chrono::steady_clock::now();
  const auto pipeline = pca_svm::PcaSvmPipeline::fit(split.train, a.options);
  const double seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
  std::cout << "components " << pipeline.pca().components.rows << ", fit in " << seconds << " s\n";
  std::cout << "train clip accuracy " << pipeline.accuracy(split.train) << '\n';
  if (!split.validation.empty()) {
    std::cout << "validation clip accuracy " << pipeline.accuracy(split.validation) << '\n';
  }
  if (a.out) {
    pipeline.save(*a.out);
    std::cout << "saved " << a.out->string() << '\n';
  }
  return 0;
}

int predict(const fs::path& model_path, const fs::path& clip_dir, const std::optional<fs::path>& labels) {
  auto net = model::SignModel::load(model_path);
  const auto vocabulary = capture::load_vocabulary(model_path, labels, net.config().num_classes);
  const auto frames = video::load_frames(clip_dir);
  const auto clip = video::resample_to_length(frames, video::kClipLength, clip_dir.filename().string());
  const auto p = net.predict_clip(clip);
  std::cout << vocabulary.at(p.label) << '\t' << p.confidence() << '\n' << top_k_text(p, vocabulary);
  return 0;
}

struct ServerArgs {
  server::ServerConfig config;
  double heartbeat_secs = 15;
  double timeout_secs = 45;
  std::string log_level = "info";
};

int serve(ServerArgs a) {
  if (const char* env = std::getenv("SIGNCAST_BIND"); env && *env) a.config.bind = env;
  a.config.heartbeat_interval = std::chrono::milliseconds(static_cast<long long>(a.heartbeat_secs * 1000));
  a.config.timeout = std::chrono::milliseconds(static_cast<long long>(a.timeout_secs * 1000));
  server::BroadcastServer s(a.config);
  s.run();
  return 0;
}

int capture_cmd(const capture::CaptureConfig& config) {
  try {
    const auto report = capture::run_capture(config);
    std::cout << "windows " << report.windows.size() << ", captions " << report.emissions.size() << '\n';
    for (const auto& e : report.emissions) std::cout << capture::format_transcript_line(e) << '\n';
    return 0;
  } catch (const capture::CaptureError& e) {
    spdlog::error("{}", e.what());
    return e.code() == capture::CaptureError::Code::kConnection ? 3 : 1;
  }
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Real-time sign-language captioning: models, broadcast server and capture client"};
  app.require_subcommand(1);
  std::string log_level = "info";
  app.add_option("--log-level", log_level, "trace, debug, info, warn, error, off");

  GenDataArgs gd;
  auto* gd_cmd = app.add_subcommand("gen-data", "Write a synthetic labelled clip dataset");
  gd_cmd->add_option("--out", gd.out, "Output directory")->required();
  gd_cmd->add_option("--classes", gd.classes, "Number of classes")->check(CLI::Range(2, 1000));
  gd_cmd->add_option("--clips-per-class", gd.clips_per_class, "Clips per class")->check(CLI::PositiveNumber);
  gd_cmd->add_option("--seed", gd.seed, "Generator seed");
  gd_cmd->add_option("--frame-size", gd.frame_size, "Frame width and height")->check(CLI::Range(8, 512));

  GenSequenceArgs gs;
  auto* gs_cmd = app.add_subcommand("gen-sequence", "Render a held-out sequence of synthetic clips");
  gs_cmd->add_option("--out", gs.out, "Output directory")->required();
  gs_cmd->add_option("--labels", gs.labels, "Class index of each clip, in order")->required()->delimiter(',');
  gs_cmd->add_option("--classes", gs.classes, "Number of classes in the vocabulary");
  gs_cmd->add_option("--seed", gs.seed, "Seed of the first clip");
  gs_cmd->add_option("--frame-size", gs.frame_size, "Frame width and height")->check(CLI::Range(8, 512));

  TrainArgs tr;
  auto* tr_cmd = app.add_subcommand("train", "Train the depthwise-separable CNN classifier");
  tr_cmd->add_option("--data", tr.data, "Dataset directory")->required()->check(CLI::ExistingDirectory);
  tr_cmd->add_option("--out", tr.out, "Model file; labels.txt is written beside it")->required();
  add_split_options(tr_cmd, tr.split);
  tr_cmd->add_option("--epochs", tr.options.epochs, "Training epochs");
  tr_cmd->add_option("--lr", tr.options.learning_rate, "SGD learning rate");
  tr_cmd->add_option("--batch", tr.options.batch_size, "Mini-batch size")->check(CLI::PositiveNumber);
  tr_cmd->add_option("--frames-per-clip", tr.options.frames_per_clip, "Frames sampled per clip each epoch")
      ->check(CLI::Range(1, 12));
  tr_cmd->add_option("--seed", tr.options.seed, "Sampling and dropout seed");
  tr_cmd->add_option("--validate-every", tr.options.validate_every, "Epochs between validation passes");
  tr_cmd->add_option("--input-size", tr.input_size, "Network input width and height");
  tr_cmd->add_option("--width", tr.width, "Channel width multiplier");
  tr_cmd->add_option("--hidden", tr.hidden, "Hidden dense units");
  tr_cmd->add_option("--dropout", tr.dropout, "Dropout rate");
  tr_cmd->add_option("--init-seed", tr.init_seed, "Weight initialisation seed");
  tr_cmd->add_flag("--freeze-backbone", tr.freeze_backbone, "Train only the classifier head");

  fs::path ev_data, ev_model;
  auto* ev_cmd = app.add_subcommand("evaluate", "Clip accuracy of a trained model on a dataset");
  ev_cmd->add_option("--data", ev_data, "Dataset directory")->required()->check(CLI::ExistingDirectory);
  ev_cmd->add_option("--model", ev_model, "Model file")->required()->check(CLI::ExistingFile);

  PcaSvmArgs ps;
  auto* ps_cmd = app.add_subcommand("pca-svm", "Fit and score the PCA + linear SVM baseline");
  ps_cmd->add_option("--data", ps.data, "Dataset directory")->required()->check(CLI::ExistingDirectory);
  ps_cmd->add_option("--out", ps.out, "Save the fitted pipeline here");
  add_split_options(ps_cmd, ps.split);
  ps_cmd->add_option("--components", ps.options.components, "Principal components");
  ps_cmd->add_option("--frame-size", ps.options.frame_size, "Frame resize before flattening");
  ps_cmd->add_option("--C", ps.options.svm.c, "SVM regularisation constant");
  ps_cmd->add_option("--svm-epochs", ps.options.svm.epochs, "SVM sub-gradient epochs");

  fs::path pr_model, pr_clip;
  std::optional<fs::path> pr_labels;
  auto* pr_cmd = app.add_subcommand("predict", "Classify one clip directory");
  pr_cmd->add_option("--model", pr_model, "Model file")->required()->check(CLI::ExistingFile);
  pr_cmd->add_option("--clip", pr_clip, "Directory of frame_NN.ppm files")->required()->check(CLI::ExistingDirectory);
  pr_cmd->add_option("--labels", pr_labels, "Labels file (default: labels.txt beside the model)");

  ServerArgs sv;
  auto* sv_cmd = app.add_subcommand("server", "Run the caption broadcast server (ws://<bind>/ws)");
  sv_cmd->add_option("--bind", sv.config.bind, "host:port; SIGNCAST_BIND overrides");
  sv_cmd->add_option("--max-room", sv.config.max_room_members, "Members per room")->check(CLI::PositiveNumber);
  sv_cmd->add_option("--heartbeat-secs", sv.heartbeat_secs, "Heartbeat check interval");
  sv_cmd->add_option("--timeout-secs", sv.timeout_secs, "Close connections silent this long");
  sv_cmd->add_option("--threads", sv.config.threads, "I/O threads")->check(CLI::PositiveNumber);
  sv_cmd->add_option("--log-level", log_level, "trace, debug, info, warn, error, off");

  capture::CaptureConfig cc;
  auto* cc_cmd = app.add_subcommand("capture", "Caption a frame source and publish to a room");
  cc_cmd->add_option("--source", cc.source, "Frame directory or directory of clips")->required();
  cc_cmd->add_option("--model", cc.model, "Model file")->required();
  cc_cmd->add_option("--labels", cc.labels, "Labels file (default: labels.txt beside the model)");
  cc_cmd->add_option("--server", cc.server_url, "ws://host:port/ws")->required();
  cc_cmd->add_option("--room", cc.room, "Room id")->required();
  cc_cmd->add_option("--name", cc.name, "Display name");
  cc_cmd->add_option("--stride", cc.stride, "New frames between windows");
  cc_cmd->add_option("--min-confidence", cc.debounce.min_confidence, "Emission threshold");
  cc_cmd->add_option("--repeat-gap", cc.debounce.repeat_gap, "Windows before a word may repeat");
  cc_cmd->add_option("--fps", cc.fps, "Playback rate; 0 runs unpaced");
  cc_cmd->add_option("--transcript", cc.transcript, "Write seq/word/confidence/ts_ms lines here");
  cc_cmd->add_option("--log-level", log_level, "trace, debug, info, warn, error, off");

  CLI11_PARSE(app, argc, argv);
  spdlog::set_level(spdlog::level::from_str(log_level));

  try {
    if (*gd_cmd) return gen_data(gd);
    if (*gs_cmd) return gen_sequence(gs);
    if (*tr_cmd) return train(tr);
    if (*ev_cmd) return evaluate(ev_data, ev_model);
    if (*ps_cmd) return pca_svm_cmd(ps);
    if (*pr_cmd) return predict(pr_model, pr_clip, pr_labels);
    if (*sv_cmd) return serve(sv);
    if (*cc_cmd) return capture_cmd(cc);
  } catch (const std::exception& e) {
    spdlog::error("{}", e.what());
    return 1;
  }
  return 0;
}
