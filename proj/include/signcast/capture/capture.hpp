#pragma once

#include <chrono>
#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <functional>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include "signcast/capture/debounce.hpp"
#include "signcast/model/sign_model.hpp"
#include "signcast/protocol/messages.hpp"
#include "signcast/video/frame.hpp"

namespace signcast::capture {

class CaptureError : public std::runtime_error {
 public:
  enum class Code { kConfig, kSource, kModel, kConnection };

  CaptureError(Code code, const std::string& what) : std::runtime_error(what), code_(code) {}
  Code code() const noexcept { return code_; }

 private:
  Code code_;
};

struct CaptureConfig {
  std::filesystem::path source;
  std::filesystem::path model;
  std::optional<std::filesystem::path> labels;  // default: labels.txt beside the model
  std::string server_url;
  std::string room;
  std::string name = "signer";
  std::size_t stride = 6;  // S, 1..12
  DebounceConfig debounce;
  double fps = 24.0;  // playback pacing; 0 runs unpaced
  std::optional<std::filesystem::path> transcript;
  std::size_t queue_capacity = 256;
  std::chrono::milliseconds flush_timeout{5000};

  void validate() const;
};

/// Destination for accepted captions. publish() must not block on I/O.
class CaptionSink {
 public:
  virtual ~CaptionSink() = default;
  virtual void publish(const protocol::CaptionEvent& event) = 0;
};

struct WindowRecord {
  std::size_t index = 0;      // 0-based window number
  std::size_t end_frame = 0;  // exclusive end in the source
  std::size_t frames = 0;     // source frames in the window before resampling
  std::size_t label = 0;
  std::string word;
  double confidence = 0.0;
  std::optional<std::uint64_t> seq;  // set when emitted
};

struct CaptureReport {
  std::vector<WindowRecord> windows;
  std::vector<protocol::CaptionEvent> emissions;
};

using ClipClassifier = std::function<model::Prediction(const video::Clip&)>;
using MillisClock = std::function<std::uint64_t()>;

/// Frames arrive one by one (paced at `fps`). Every `stride` new frames the
/// last up-to-12 frames are resampled to 12 and classified; a final window
/// covers any frames left over at the end (or the whole source when it is
/// shorter than one stride). Accepted words go to `sink` in seq order.
CaptureReport run_window_loop(const std::vector<video::Frame>& frames, const ClipClassifier& classify,
                              const std::vector<std::string>& vocabulary, std::size_t stride, double fps,
                              const DebounceConfig& debounce_config, CaptionSink& sink, const MillisClock& clock);

/// A directory of frame_NN.ppm files, or a directory whose subdirectories
/// each hold such files (concatenated in name order).
std::vector<video::Frame> load_source(const std::filesystem::path& source);

/// Vocabulary for a model: explicit labels file, else labels.txt next to the
/// model file.
std::vector<std::string> load_vocabulary(const std::filesystem::path& model_path,
                                         const std::optional<std::filesystem::path>& labels, std::size_t num_classes);

/// `seq\tword\tconfidence\tts_ms` per line.
void write_transcript(const std::vector<protocol::CaptionEvent>& events, const std::filesystem::path& path);
std::string format_transcript_line(const protocol::CaptionEvent& event);

/// Loads model, vocabulary and source, connects a NetworkPublisher, runs the
/// loop and waits for the server to echo the last caption.
CaptureReport run_capture(const CaptureConfig& config);

}  // namespace signcast::capture
