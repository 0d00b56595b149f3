#pragma once

// Independent reference implementations used only by tests. Nothing here
// calls into the library code paths it is compared against.

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <functional>
#include <random>
#include <vector>

namespace signcast::testing {

/// Dense HxWxC image stored as nested vectors for clarity over speed.
using Image = std::vector<std::vector<std::vector<double>>>;

inline Image make_image(std::size_t h, std::size_t w, std::size_t c, double fill = 0.0) {
  return Image(h, std::vector<std::vector<double>>(w, std::vector<double>(c, fill)));
}

/// Zero-pads to the size implied by `same` (ceil(in/stride) outputs) or not
/// at all for `valid`, placing the smaller half of the pad first.
inline Image pad_image(const Image& img, std::size_t k, std::size_t stride, bool same,
                       std::size_t& out_h, std::size_t& out_w) {
  const std::size_t h = img.size(), w = img[0].size(), c = img[0][0].size();
  if (!same) {
    out_h = (h - k) / stride + 1;
    out_w = (w - k) / stride + 1;
    return img;
  }
  out_h = (h + stride - 1) / stride;
  out_w = (w + stride - 1) / stride;
  const long need_h = static_cast<long>((out_h - 1) * stride + k) - static_cast<long>(h);
  const long need_w = static_cast<long>((out_w - 1) * stride + k) - static_cast<long>(w);
  const std::size_t ph = static_cast<std::size_t>(std::max(need_h, 0L));
  const std::size_t pw = static_cast<std::size_t>(std::max(need_w, 0L));
  Image padded = make_image(h + ph, w + pw, c);
  for (std::size_t y = 0; y < h; ++y)
    for (std::size_t x = 0; x < w; ++x)
      for (std::size_t ch = 0; ch < c; ++ch) padded[y + ph / 2][x + pw / 2][ch] = img[y][x][ch];
  return padded;
}

/// kernel[ky][kx][c][f]
using Kernel4 = std::vector<std::vector<std::vector<std::vector<double>>>>;

inline Image naive_conv2d(const Image& img, const Kernel4& ker, const std::vector<double>& bias,
                          std::size_t stride, bool same) {
  const std::size_t k = ker.size(), channels = img[0][0].size(), filters = ker[0][0][0].size();
  std::size_t oh = 0, ow = 0;
  const Image p = pad_image(img, k, stride, same, oh, ow);
  Image out = make_image(oh, ow, filters);
  for (std::size_t y = 0; y < oh; ++y)
    for (std::size_t x = 0; x < ow; ++x)
      for (std::size_t f = 0; f < filters; ++f) {
        double s = bias.empty() ? 0.0 : bias[f];
        for (std::size_t ky = 0; ky < k; ++ky)
          for (std::size_t kx = 0; kx < k; ++kx)
            for (std::size_t c = 0; c < channels; ++c)
              s += p[y * stride + ky][x * stride + kx][c] * ker[ky][kx][c][f];
        out[y][x][f] = s;
      }
  return out;
}

/// kernel[ky][kx][c]
using Kernel3 = std::vector<std::vector<std::vector<double>>>;

inline Image naive_depthwise(const Image& img, const Kernel3& ker, const std::vector<double>& bias,
                             std::size_t stride, bool same) {
  const std::size_t k = ker.size(), channels = img[0][0].size();
  std::size_t oh = 0, ow = 0;
  const Image p = pad_image(img, k, stride, same, oh, ow);
  Image out = make_image(oh, ow, channels);
  for (std::size_t c = 0; c < channels; ++c)
    for (std::size_t y = 0; y < oh; ++y)
      for (std::size_t x = 0; x < ow; ++x) {
        double s = bias.empty() ? 0.0 : bias[c];
        for (std::size_t ky = 0; ky < k; ++ky)
          for (std::size_t kx = 0; kx < k; ++kx) s += p[y * stride + ky][x * stride + kx][c] * ker[ky][kx][c];
        out[y][x][c] = s;
      }
  return out;
}

/// y_j = sum_i x_i W[i][j] + b_j
inline std::vector<double> naive_dense(const std::vector<double>& x,
                                       const std::vector<std::vector<double>>& w,
                                       const std::vector<double>& b) {
  std::vector<double> y(b);
  for (std::size_t j = 0; j < y.size(); ++j)
    for (std::size_t i = 0; i < x.size(); ++i) y[j] += x[i] * w[i][j];
  return y;
}

/// Central finite difference of f at x along every coordinate.
inline std::vector<double> central_difference(const std::function<double(const std::vector<double>&)>& f,
                                              std::vector<double> x, double step = 1e-5) {
  std::vector<double> grad(x.size());
  for (std::size_t i = 0; i < x.size(); ++i) {
    const double keep = x[i];
    x[i] = keep + step;
    const double up = f(x);
    x[i] = keep - step;
    const double down = f(x);
    x[i] = keep;
    grad[i] = (up - down) / (2.0 * step);
  }
  return grad;
}

/// ||a - b|| / (||a|| + ||b||), with a tiny floor so two zero vectors compare
/// as identical.
inline double relative_error(const std::vector<double>& a, const std::vector<double>& b) {
  double diff = 0.0, na = 0.0, nb = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    diff += (a[i] - b[i]) * (a[i] - b[i]);
    na += a[i] * a[i];
    nb += b[i] * b[i];
  }
  const double denom = std::sqrt(na) + std::sqrt(nb);
  return denom < 1e-300 ? 0.0 : std::sqrt(diff) / denom;
}

/// Max over elements of |a_i - b_i| / max(|a_i| + |b_i|, floor).
inline double max_elementwise_relative_error(const std::vector<double>& a, const std::vector<double>& b,
                                             double floor = 1e-6) {
  double worst = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    const double denom = std::max(std::abs(a[i]) + std::abs(b[i]), floor);
    worst = std::max(worst, std::abs(a[i] - b[i]) / denom);
  }
  return worst;
}

/// round(i * (L - 1) / (T - 1)) with halves rounded up, via long double.
inline std::vector<std::size_t> resample_indices_oracle(std::size_t length, std::size_t target) {
  std::vector<std::size_t> out;
  for (std::size_t i = 0; i < target; ++i) {
    if (target == 1) {
      out.push_back(0);
      continue;
    }
    const long double pos = static_cast<long double>(i) * static_cast<long double>(length - 1) /
                            static_cast<long double>(target - 1);
    out.push_back(static_cast<std::size_t>(std::floor(pos + 0.5L)));
  }
  return out;
}

}  // namespace signcast::testing
