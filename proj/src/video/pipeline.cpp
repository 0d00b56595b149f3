#include "signcast/video/pipeline.hpp"

#include <algorithm>
#include <cmath>

namespace signcast::video {

std::vector<std::size_t> resample_indices(std::size_t length, std::size_t target) {
  if (length == 0) throw VideoError(VideoError::Code::kNoFrames, "cannot resample an empty frame sequence");
  if (target == 0) throw VideoError(VideoError::Code::kInvalidArgument, "resample target must be positive");
  std::vector<std::size_t> indices(target, 0);
  if (target == 1) return indices;
  // floor((2 i (L-1) + (T-1)) / (2 (T-1))) == round-half-up of i (L-1)/(T-1)
  const std::size_t span = target - 1;
  for (std::size_t i = 0; i < target; ++i) indices[i] = (2 * i * (length - 1) + span) / (2 * span);
  return indices;
}

Clip resample_to_length(std::span<const Frame> frames, std::size_t target, std::string source_id) {
  Clip clip;
  clip.source_indices = resample_indices(frames.size(), target);
  clip.source_id = std::move(source_id);
  clip.source_length = frames.size();
  clip.frames.reserve(target);
  for (const std::size_t i : clip.source_indices) clip.frames.push_back(frames[i]);
  return clip;
}

nn::Tensor resize_bilinear(const Frame& frame, std::size_t height, std::size_t width) {
  if (height == 0 || width == 0) {
    throw VideoError(VideoError::Code::kInvalidArgument, "preprocess target dimensions must be positive");
  }
  if (!frame.valid()) throw VideoError(VideoError::Code::kInvalidArgument, "invalid frame");

  struct Tap {
    std::size_t lo, hi;
    float frac;
  };
  auto taps = [](std::size_t in, std::size_t out) {
    std::vector<Tap> t(out);
    const double scale = static_cast<double>(in) / static_cast<double>(out);
    for (std::size_t i = 0; i < out; ++i) {
      const double src = std::clamp((static_cast<double>(i) + 0.5) * scale - 0.5, 0.0, static_cast<double>(in - 1));
      const auto lo = static_cast<std::size_t>(std::floor(src));
      t[i] = {lo, std::min(lo + 1, in - 1), static_cast<float>(src - static_cast<double>(lo))};
    }
    return t;
  };
  const auto ty = taps(frame.height, height);
  const auto tx = taps(frame.width, width);

  nn::Tensor out({height, width, 3});
  for (std::size_t y = 0; y < height; ++y) {
    const auto [y0, y1, fy] = ty[y];
    for (std::size_t x = 0; x < width; ++x) {
      const auto [x0, x1, fx] = tx[x];
      for (std::size_t c = 0; c < 3; ++c) {
        const float p00 = frame.at(x0, y0, c), p01 = frame.at(x1, y0, c);
        const float p10 = frame.at(x0, y1, c), p11 = frame.at(x1, y1, c);
        const float top = p00 + (p01 - p00) * fx;
        const float bottom = p10 + (p11 - p10) * fx;
        out.at(y, x, c) = top + (bottom - top) * fy;
      }
    }
  }
  return out;
}

nn::Tensor preprocess(const Frame& frame, std::size_t height, std::size_t width) {
  nn::Tensor out = resize_bilinear(frame, height, width);
  for (float& v : out.data()) v = std::clamp(v / 127.5f - 1.0f, -1.0f, 1.0f);
  return out;
}

}  // namespace signcast::video
