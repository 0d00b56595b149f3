#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

namespace signcast::video {

inline constexpr std::size_t kClipLength = 12;

/// 8-bit RGB frame, row-major, 3 bytes per pixel.
struct Frame {
  std::size_t width = 0;
  std::size_t height = 0;
  std::vector<std::uint8_t> rgb;
  std::size_t source_index = 0;

  Frame() = default;
  Frame(std::size_t w, std::size_t h, std::uint8_t fill = 0, std::size_t index = 0)
      : width(w), height(h), rgb(w * h * 3, fill), source_index(index) {}

  std::uint8_t& at(std::size_t x, std::size_t y, std::size_t c) { return rgb[(y * width + x) * 3 + c]; }
  std::uint8_t at(std::size_t x, std::size_t y, std::size_t c) const { return rgb[(y * width + x) * 3 + c]; }

  bool valid() const noexcept { return width >= 1 && height >= 1 && rgb.size() == width * height * 3; }

  friend bool operator==(const Frame&, const Frame&) = default;
};

/// Fixed-length temporal window. `source_indices[i]` is the index into the
/// original frame sequence that produced `frames[i]`.
struct Clip {
  std::vector<Frame> frames;
  std::string source_id;
  std::size_t source_length = 0;
  std::vector<std::size_t> source_indices;

  std::size_t size() const noexcept { return frames.size(); }
};

class VideoError : public std::runtime_error {
 public:
  enum class Code { kMissingDirectory, kNoFrames, kParse, kNonContiguous, kInvalidArgument, kIo };

  VideoError(Code code, const std::string& what) : std::runtime_error(what), code_(code) {}
  Code code() const noexcept { return code_; }

 private:
  Code code_;
};

/// Binary PPM (P6, maxval 1..255). Samples are rescaled to 0..255 when
/// maxval < 255. `name` only labels error messages.
Frame parse_ppm(std::span<const std::uint8_t> bytes, const std::string& name);
std::vector<std::uint8_t> encode_ppm(const Frame& frame);

Frame read_ppm(const std::filesystem::path& path);
void write_ppm(const Frame& frame, const std::filesystem::path& path);

/// Loads `frame_<n>.ppm` files from `dir`, ordered by n. Numbering must be
/// contiguous from 0.
std::vector<Frame> load_frames(const std::filesystem::path& dir);

/// Writes frames as frame_00.ppm, frame_01.ppm, ... into `dir` (created).
void write_frames(std::span<const Frame> frames, const std::filesystem::path& dir);

}  // namespace signcast::video
