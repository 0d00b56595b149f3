#include <cctype>
#include <cstdio>
#include <fstream>
#include <iterator>
#include <map>
#include <regex>

#include "signcast/video/frame.hpp"

namespace signcast::video {

namespace {

class HeaderReader {
 public:
  HeaderReader(std::span<const std::uint8_t> bytes, const std::string& name) : bytes_(bytes), name_(name) {}

  [[noreturn]] void fail(const std::string& what) const {
    throw VideoError(VideoError::Code::kParse, name_ + ": malformed PPM header: " + what);
  }

  void skip_space_and_comments() {
    while (pos_ < bytes_.size()) {
      const auto c = bytes_[pos_];
      if (c == '#') {
        while (pos_ < bytes_.size() && bytes_[pos_] != '\n') ++pos_;
      } else if (std::isspace(c)) {
        ++pos_;
      } else {
        return;
      }
    }
  }

  std::size_t number(const char* what) {
    skip_space_and_comments();
    std::size_t value = 0;
    std::size_t digits = 0;
    while (pos_ < bytes_.size() && std::isdigit(bytes_[pos_])) {
      value = value * 10 + static_cast<std::size_t>(bytes_[pos_] - '0');
      if (++digits > 9) fail(std::string(what) + " too large");
      ++pos_;
    }
    if (digits == 0) fail(std::string("expected ") + what);
    return value;
  }

  std::size_t pos() const { return pos_; }
  void advance(std::size_t n) { pos_ += n; }
  std::size_t size() const { return bytes_.size(); }
  std::uint8_t peek() const { return bytes_[pos_]; }

 private:
  std::span<const std::uint8_t> bytes_;
  const std::string& name_;
  std::size_t pos_ = 0;
};

std::vector<std::uint8_t> read_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw VideoError(VideoError::Code::kIo, "cannot open " + path.string());
  return {std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
}

}  // namespace

Frame parse_ppm(std::span<const std::uint8_t> bytes, const std::string& name) {
  HeaderReader in(bytes, name);
  if (bytes.size() < 2 || bytes[0] != 'P' || bytes[1] != '6') in.fail("missing P6 magic");
  in.advance(2);
  const std::size_t width = in.number("width");
  const std::size_t height = in.number("height");
  const std::size_t maxval = in.number("maxval");
  if (width == 0 || height == 0) in.fail("zero dimension");
  if (maxval == 0 || maxval > 255) in.fail("maxval must be in 1..255");
  if (in.pos() >= in.size() || !std::isspace(in.peek())) in.fail("missing whitespace before raster");
  in.advance(1);

  const std::size_t expected = width * height * 3;
  if (in.size() - in.pos() < expected) {
    throw VideoError(VideoError::Code::kParse, name + ": truncated PPM raster (expected " +
                                                   std::to_string(expected) + " bytes)");
  }
  Frame frame(width, height);
  const auto raster = bytes.subspan(in.pos(), expected);
  for (std::size_t i = 0; i < expected; ++i) {
    frame.rgb[i] = maxval == 255 ? raster[i]
                                 : static_cast<std::uint8_t>((raster[i] * 255u + maxval / 2) / maxval);
  }
  return frame;
}

std::vector<std::uint8_t> encode_ppm(const Frame& frame) {
  if (!frame.valid()) throw VideoError(VideoError::Code::kInvalidArgument, "cannot encode an invalid frame");
  const std::string header = "P6\n" + std::to_string(frame.width) + " " + std::to_string(frame.height) + "\n255\n";
  std::vector<std::uint8_t> out(header.begin(), header.end());
  out.insert(out.end(), frame.rgb.begin(), frame.rgb.end());
  return out;
}

Frame read_ppm(const std::filesystem::path& path) {
  return parse_ppm(read_file(path), path.string());
}

void write_ppm(const Frame& frame, const std::filesystem::path& path) {
  const auto bytes = encode_ppm(frame);
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw VideoError(VideoError::Code::kIo, "cannot write " + path.string());
  out.write(reinterpret_cast<const char*>(bytes.data()), static_cast<std::streamsize>(bytes.size()));
  if (!out) throw VideoError(VideoError::Code::kIo, "write failed for " + path.string());
}

std::vector<Frame> load_frames(const std::filesystem::path& dir) {
  namespace fs = std::filesystem;
  if (!fs::is_directory(dir)) {
    throw VideoError(VideoError::Code::kMissingDirectory, "frame directory not found: " + dir.string());
  }
  static const std::regex pattern(R"(frame_(\d+)\.ppm)");
  std::map<std::size_t, fs::path> numbered;
  for (const auto& entry : fs::directory_iterator(dir)) {
    if (!entry.is_regular_file()) continue;
    const std::string file = entry.path().filename().string();
    std::smatch m;
    if (!std::regex_match(file, m, pattern)) continue;
    const std::size_t index = std::stoul(m[1].str());
    if (!numbered.emplace(index, entry.path()).second) {
      throw VideoError(VideoError::Code::kNonContiguous, dir.string() + ": duplicate frame index " + std::to_string(index));
    }
  }
  if (numbered.empty()) throw VideoError(VideoError::Code::kNoFrames, "no frame_<n>.ppm files in " + dir.string());

  std::vector<Frame> frames;
  frames.reserve(numbered.size());
  std::size_t expected = 0;
  for (const auto& [index, path] : numbered) {
    if (index != expected) {
      throw VideoError(VideoError::Code::kNonContiguous,
                       dir.string() + ": frame numbering gap, expected index " + std::to_string(expected) +
                           " but found " + std::to_string(index));
    }
    Frame f = read_ppm(path);
    f.source_index = index;
    frames.push_back(std::move(f));
    ++expected;
  }
  return frames;
}

void write_frames(std::span<const Frame> frames, const std::filesystem::path& dir) {
  std::filesystem::create_directories(dir);
  char name[32];
  for (std::size_t i = 0; i < frames.size(); ++i) {
    std::snprintf(name, sizeof(name), "frame_%02zu.ppm", i);
    write_ppm(frames[i], dir / name);
  }
}

}  // namespace signcast::video
