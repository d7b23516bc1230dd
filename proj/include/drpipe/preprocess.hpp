#pragma once

#include <Eigen/Core>
#include <cmath>
#include <string>
#include <vector>

#include "drpipe/image.hpp"

namespace drpipe {

/// Knobs for the crop / resize / local-average-subtraction pipeline.
struct PreprocessConfig {
  int crop_threshold = 7;                   // intensity in [0,255]
  int target_size = 300;                    // output side, >= 8
  double blur_sigma_fraction = 1.0 / 30.0;  // sigma = fraction * target_size
  double gain_alpha = 4.0;                  // contrast gain, > 0
  int offset_gamma = 128;                   // gray offset in [0,255]

  void validate() const;
  double sigma() const { return blur_sigma_fraction * target_size; }

  /// Canonical key=value text; its SHA-256 identifies the config in artifacts.
  std::string canonical_text() const;
  std::string digest_hex() const;
};

/// Tight bounding box of pixels whose max-channel intensity exceeds `threshold`.
/// Throws AllBelowThreshold when the whole frame is at or below it.
Image8 crop_black_border(const Image8& img, int threshold);

/// Bilinear resize to target_size x target_size (half-pixel sample centers,
/// clamped edges). Aspect ratio is not preserved.
Image8 resize(const Image8& img, int target_size);

/// Per channel: out = clamp(gain_alpha * (I - G_sigma(I)) + offset_gamma, 0, 255),
/// where G_sigma is Gaussian blur with reflected borders. Input must already be
/// target_size x target_size.
Image8 subtract_local_average(const Image8& img, const PreprocessConfig& cfg);

/// crop -> resize -> subtract, in that order.
Image8 preprocess_image(const Image8& img, const PreprocessConfig& cfg);

// --- building blocks, exposed for reuse and direct testing ---

/// Discrete Gaussian kernel of radius max(1, ceil(3*sigma)), normalized to sum 1.
template <typename Scalar>
std::vector<Scalar> gaussian_kernel(double sigma) {
  const int radius = std::max(1, static_cast<int>(std::ceil(3.0 * sigma)));
  std::vector<Scalar> k(static_cast<std::size_t>(2 * radius + 1));
  double sum = 0.0;
  for (int i = -radius; i <= radius; ++i) {
    const double w = std::exp(-0.5 * (static_cast<double>(i) * i) / (sigma * sigma));
    k[static_cast<std::size_t>(i + radius)] = static_cast<Scalar>(w);
    sum += w;
  }
  for (auto& w : k) w = static_cast<Scalar>(w / sum);
  return k;
}

/// Symmetric reflection of an out-of-range index: -1 -> 0, -2 -> 1, n -> n-1.
inline Eigen::Index reflect_index(Eigen::Index i, Eigen::Index n) {
  while (i < 0 || i >= n) {
    if (i < 0) i = -i - 1;
    if (i >= n) i = 2 * n - 1 - i;
  }
  return i;
}

/// Separable Gaussian blur with reflected borders; horizontal pass first.
template <typename Scalar>
Plane<Scalar> gaussian_blur(const Plane<Scalar>& in, double sigma) {
  const auto kernel = gaussian_kernel<Scalar>(sigma);
  const int radius = static_cast<int>(kernel.size() / 2);
  const Eigen::Index rows = in.rows(), cols = in.cols();

  Plane<Scalar> tmp(rows, cols), out(rows, cols);
  for (Eigen::Index r = 0; r < rows; ++r)
    for (Eigen::Index c = 0; c < cols; ++c) {
      Scalar acc = 0;
      for (int k = -radius; k <= radius; ++k)
        acc += kernel[static_cast<std::size_t>(k + radius)] * in(r, reflect_index(c + k, cols));
      tmp(r, c) = acc;
    }
  for (Eigen::Index r = 0; r < rows; ++r)
    for (Eigen::Index c = 0; c < cols; ++c) {
      Scalar acc = 0;
      for (int k = -radius; k <= radius; ++k)
        acc += kernel[static_cast<std::size_t>(k + radius)] * tmp(reflect_index(r + k, rows), c);
      out(r, c) = acc;
    }
  return out;
}

}  // namespace drpipe
