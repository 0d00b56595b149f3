#pragma once

#include <cstddef>
#include <span>
#include <string>
#include <vector>

#include "signcast/nn/tensor.hpp"
#include "signcast/video/frame.hpp"

namespace signcast::video {

/// Source index for each of `target` outputs: round(i * (L - 1) / (T - 1)),
/// halves rounded up, computed in integers. L < T repeats frames (the short
/// video extender), L > T subsamples, L == T is the identity.
std::vector<std::size_t> resample_indices(std::size_t length, std::size_t target = kClipLength);

Clip resample_to_length(std::span<const Frame> frames, std::size_t target = kClipLength,
                        std::string source_id = {});

/// Bilinear resize with half-pixel centres to `height` x `width`, returning
/// float RGB samples (0..255) in HxWx3 layout.
nn::Tensor resize_bilinear(const Frame& frame, std::size_t height, std::size_t width);

/// Resize then map each sample v -> v / 127.5 - 1, into [-1, 1].
nn::Tensor preprocess(const Frame& frame, std::size_t height, std::size_t width);

}  // namespace signcast::video
