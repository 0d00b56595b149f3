#include "signcast/capture/capture.hpp"

#include <algorithm>
#include <charconv>
#include <deque>
#include <fstream>
#include <thread>

#include <spdlog/spdlog.h>

#include "signcast/capture/publisher.hpp"
#include "signcast/model/dataset.hpp"
#include "signcast/video/pipeline.hpp"

namespace signcast::capture {

namespace fs = std::filesystem;

void CaptureConfig::validate() const {
  auto fail = [](const std::string& what) { throw CaptureError(CaptureError::Code::kConfig, what); };
  if (stride < 1 || stride > video::kClipLength) fail("stride must be in 1..12");
  try {
    debounce.validate();
  } catch (const std::invalid_argument& e) {
    fail(e.what());
  }
  if (!(fps >= 0.0)) fail("fps must be non-negative");
  if (!protocol::valid_room_id(room)) fail("invalid room id '" + room + "'");
  if (name.empty()) fail("display name must not be empty");
  if (queue_capacity < 1) fail("queue capacity must be at least 1");
}

CaptureReport run_window_loop(const std::vector<video::Frame>& frames, const ClipClassifier& classify,
                              const std::vector<std::string>& vocabulary, std::size_t stride, double fps,
                              const DebounceConfig& debounce_config, CaptionSink& sink, const MillisClock& clock) {
  if (frames.empty()) throw CaptureError(CaptureError::Code::kSource, "frame source is empty");
  if (stride < 1 || stride > video::kClipLength) {
    throw CaptureError(CaptureError::Code::kConfig, "stride must be in 1..12");
  }
  CaptureReport report;
  EmissionState state;
  std::deque<video::Frame> buffer;
  std::size_t fresh = 0;

  auto evaluate = [&](std::size_t end_frame) {
    const std::vector<video::Frame> window(buffer.begin(), buffer.end());
    WindowRecord record;
    record.index = report.windows.size();
    record.end_frame = end_frame;
    record.frames = window.size();
    const video::Clip clip = video::resample_to_length(window, video::kClipLength,
                                                       "window_" + std::to_string(record.index));
    const model::Prediction prediction = classify(clip);
    if (prediction.label >= vocabulary.size()) {
      throw CaptureError(CaptureError::Code::kModel, "model predicted a label outside the vocabulary");
    }
    record.label = prediction.label;
    record.word = vocabulary[prediction.label];
    record.confidence = prediction.confidence();
    record.seq = debounce(record.word, record.confidence, state, debounce_config);
    if (record.seq) {
      protocol::CaptionEvent event{record.word, record.confidence, *record.seq, clock()};
      sink.publish(event);
      report.emissions.push_back(std::move(event));
    }
    report.windows.push_back(std::move(record));
    fresh = 0;
  };

  const auto start = std::chrono::steady_clock::now();
  for (std::size_t i = 0; i < frames.size(); ++i) {
    if (fps > 0.0) {
      std::this_thread::sleep_until(start + std::chrono::duration_cast<std::chrono::steady_clock::duration>(
                                                std::chrono::duration<double>(static_cast<double>(i) / fps)));
    }
    buffer.push_back(frames[i]);
    if (buffer.size() > video::kClipLength) buffer.pop_front();
    if (++fresh == stride) evaluate(i + 1);
  }
  if (fresh > 0 || report.windows.empty()) evaluate(frames.size());
  return report;
}

namespace {

std::uint64_t wall_clock_ms() {
  return static_cast<std::uint64_t>(std::chrono::duration_cast<std::chrono::milliseconds>(
                                        std::chrono::system_clock::now().time_since_epoch())
                                        .count());
}

bool has_frame_files(const fs::path& dir) {
  for (const auto& entry : fs::directory_iterator(dir)) {
    const std::string name = entry.path().filename().string();
    if (entry.is_regular_file() && name.rfind("frame_", 0) == 0 && entry.path().extension() == ".ppm") return true;
  }
  return false;
}

}  // namespace

std::vector<video::Frame> load_source(const fs::path& source) {
  if (!fs::is_directory(source)) {
    throw CaptureError(CaptureError::Code::kSource, "source is not a directory: " + source.string());
  }
  try {
    std::vector<video::Frame> frames;
    if (has_frame_files(source)) {
      frames = video::load_frames(source);
    } else {
      std::vector<fs::path> clips;
      for (const auto& entry : fs::directory_iterator(source)) {
        if (entry.is_directory() && has_frame_files(entry.path())) clips.push_back(entry.path());
      }
      std::sort(clips.begin(), clips.end());
      for (const auto& clip : clips) {
        auto part = video::load_frames(clip);
        frames.insert(frames.end(), std::make_move_iterator(part.begin()), std::make_move_iterator(part.end()));
      }
    }
    if (frames.empty()) throw CaptureError(CaptureError::Code::kSource, "no frames under " + source.string());
    for (std::size_t i = 0; i < frames.size(); ++i) frames[i].source_index = i;
    return frames;
  } catch (const video::VideoError& e) {
    throw CaptureError(CaptureError::Code::kSource, e.what());
  }
}

std::vector<std::string> load_vocabulary(const fs::path& model_path, const std::optional<fs::path>& labels,
                                         std::size_t num_classes) {
  const fs::path path = labels ? *labels : model_path.parent_path() / "labels.txt";
  if (!fs::exists(path)) {
    throw CaptureError(CaptureError::Code::kModel, "labels file not found: " + path.string());
  }
  std::vector<std::string> vocabulary;
  try {
    vocabulary = model::read_labels(path);
  } catch (const std::exception& e) {
    throw CaptureError(CaptureError::Code::kModel, e.what());
  }
  if (vocabulary.size() != num_classes) {
    throw CaptureError(CaptureError::Code::kModel, "labels file has " + std::to_string(vocabulary.size()) +
                                                       " words but the model has " + std::to_string(num_classes) +
                                                       " classes");
  }
  return vocabulary;
}

std::string format_transcript_line(const protocol::CaptionEvent& event) {
  char confidence[32];
  const auto end = std::to_chars(confidence, confidence + sizeof confidence, event.confidence).ptr;
  return std::to_string(event.seq) + '\t' + event.word + '\t' + std::string(confidence, end) + '\t' +
         std::to_string(event.ts_ms);
}

void write_transcript(const std::vector<protocol::CaptionEvent>& events, const fs::path& path) {
  if (path.has_parent_path()) fs::create_directories(path.parent_path());
  std::ofstream out(path, std::ios::binary);
  if (!out) throw CaptureError(CaptureError::Code::kConfig, "cannot write transcript " + path.string());
  for (const auto& event : events) out << format_transcript_line(event) << '\n';
  if (!out) throw CaptureError(CaptureError::Code::kConfig, "failed writing transcript " + path.string());
}

CaptureReport run_capture(const CaptureConfig& config) {
  config.validate();
  std::optional<model::SignModel> model;
  try {
    model.emplace(model::SignModel::load(config.model));
  } catch (const std::exception& e) {
    throw CaptureError(CaptureError::Code::kModel, std::string("cannot load model: ") + e.what());
  }
  const auto vocabulary = load_vocabulary(config.model, config.labels, model->config().num_classes);
  const auto frames = load_source(config.source);
  spdlog::info("capture: {} frames, stride {}, {} classes", frames.size(), config.stride, vocabulary.size());

  NetworkPublisher publisher(PublisherOptions{
      .url = config.server_url, .room = config.room, .name = config.name, .queue_capacity = config.queue_capacity});
  publisher.start();
  const auto report = run_window_loop(
      frames, [&](const video::Clip& clip) { return model->predict_clip(clip); }, vocabulary, config.stride,
      config.fps, config.debounce, publisher, wall_clock_ms);
  const bool delivered = publisher.flush(config.flush_timeout);
  publisher.stop();
  if (config.transcript) write_transcript(report.emissions, *config.transcript);
  if (publisher.failed()) throw CaptureError(CaptureError::Code::kConnection, "lost connection to the server");
  if (!delivered) {
    throw CaptureError(CaptureError::Code::kConnection, "server did not confirm every caption before the deadline");
  }
  if (publisher.dropped() > 0) spdlog::warn("capture: {} captions dropped by the send queue", publisher.dropped());
  spdlog::info("capture: {} windows, {} captions", report.windows.size(), report.emissions.size());
  return report;
}

}  // namespace signcast::capture
