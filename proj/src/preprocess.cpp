#include "drpipe/preprocess.hpp"

#include <algorithm>

#include "drpipe/digest.hpp"
#include "drpipe/error.hpp"
#include "drpipe/strings.hpp"

namespace drpipe {
namespace {

std::uint8_t to_u8(float v) {
  return static_cast<std::uint8_t>(std::lround(std::clamp(v, 0.0f, 255.0f)));
}

}  // namespace

void PreprocessConfig::validate() const {
  if (crop_threshold < 0 || crop_threshold > 255)
    throw Error("crop_threshold must be in [0,255]");
  if (target_size < 8) throw Error("target_size must be >= 8");
  if (blur_sigma_fraction <= 0) throw Error("blur_sigma_fraction must be > 0");
  if (gain_alpha <= 0) throw Error("gain_alpha must be > 0");
  if (offset_gamma < 0 || offset_gamma > 255) throw Error("offset_gamma must be in [0,255]");
}

std::string PreprocessConfig::canonical_text() const {
  std::string s;
  s += "crop_threshold=" + std::to_string(crop_threshold) + "\n";
  s += "target_size=" + std::to_string(target_size) + "\n";
  s += "blur_sigma_fraction=" + format_double(blur_sigma_fraction) + "\n";
  s += "gain_alpha=" + format_double(gain_alpha) + "\n";
  s += "offset_gamma=" + std::to_string(offset_gamma) + "\n";
  return s;
}

std::string PreprocessConfig::digest_hex() const { return to_hex(sha256(canonical_text())); }

Image8 crop_black_border(const Image8& img, int threshold) {
  const Eigen::Index rows = img.rows(), cols = img.cols();
  if (rows < 1 || cols < 1) throw ShapeMismatch("empty image");

  Eigen::Index r0 = rows, r1 = -1, c0 = cols, c1 = -1;
  for (Eigen::Index r = 0; r < rows; ++r)
    for (Eigen::Index c = 0; c < cols; ++c) {
      const int m = std::max({static_cast<int>(img.ch[0](r, c)), static_cast<int>(img.ch[1](r, c)),
                              static_cast<int>(img.ch[2](r, c))});
      if (m > threshold) {
        r0 = std::min(r0, r);
        r1 = std::max(r1, r);
        c0 = std::min(c0, c);
        c1 = std::max(c1, c);
      }
    }
  if (r1 < 0) throw AllBelowThreshold();

  Image8 out;
  for (int c = 0; c < 3; ++c)
    out.ch[c] = img.ch[c].block(r0, c0, r1 - r0 + 1, c1 - c0 + 1);
  return out;
}

Image8 resize(const Image8& img, int target_size) {
  const Eigen::Index in_rows = img.rows(), in_cols = img.cols();
  if (in_rows < 1 || in_cols < 1) throw ShapeMismatch("empty image");
  const Eigen::Index n = target_size;

  if (in_rows == n && in_cols == n) return img;

  const double sy = static_cast<double>(in_rows) / static_cast<double>(n);
  const double sx = static_cast<double>(in_cols) / static_cast<double>(n);

  Image8 out(n, n);
  for (Eigen::Index r = 0; r < n; ++r) {
    const double src_y = (static_cast<double>(r) + 0.5) * sy - 0.5;
    const double yc = std::clamp(src_y, 0.0, static_cast<double>(in_rows - 1));
    const Eigen::Index y0 = static_cast<Eigen::Index>(yc);
    const Eigen::Index y1 = std::min(y0 + 1, in_rows - 1);
    const float fy = static_cast<float>(yc - static_cast<double>(y0));
    for (Eigen::Index c = 0; c < n; ++c) {
      const double src_x = (static_cast<double>(c) + 0.5) * sx - 0.5;
      const double xc = std::clamp(src_x, 0.0, static_cast<double>(in_cols - 1));
      const Eigen::Index x0 = static_cast<Eigen::Index>(xc);
      const Eigen::Index x1 = std::min(x0 + 1, in_cols - 1);
      const float fx = static_cast<float>(xc - static_cast<double>(x0));
      for (int ch = 0; ch < 3; ++ch) {
        const auto& p = img.ch[ch];
        const float top = static_cast<float>(p(y0, x0)) * (1.0f - fx) + static_cast<float>(p(y0, x1)) * fx;
        const float bot = static_cast<float>(p(y1, x0)) * (1.0f - fx) + static_cast<float>(p(y1, x1)) * fx;
        out.ch[ch](r, c) = to_u8(top * (1.0f - fy) + bot * fy);
      }
    }
  }
  return out;
}

Image8 subtract_local_average(const Image8& img, const PreprocessConfig& cfg) {
  cfg.validate();
  if (img.rows() != cfg.target_size || img.cols() != cfg.target_size)
    throw ShapeMismatch("subtract_local_average expects a target_size square image");

  const double sigma = cfg.sigma();
  const float alpha = static_cast<float>(cfg.gain_alpha);
  const float gamma = static_cast<float>(cfg.offset_gamma);

  Image8 out(img.rows(), img.cols());
  for (int ch = 0; ch < 3; ++ch) {
    const Plane<float> plane = img.ch[ch].cast<float>();
    const Plane<float> blurred = gaussian_blur(plane, sigma);
    for (Eigen::Index r = 0; r < img.rows(); ++r)
      for (Eigen::Index c = 0; c < img.cols(); ++c)
        out.ch[ch](r, c) = to_u8(alpha * (plane(r, c) - blurred(r, c)) + gamma);
  }
  return out;
}

Image8 preprocess_image(const Image8& img, const PreprocessConfig& cfg) {
  cfg.validate();
  const Image8 cropped = crop_black_border(img, cfg.crop_threshold);
  const Image8 resized = resize(cropped, cfg.target_size);
  return subtract_local_average(resized, cfg);
}

}  // namespace drpipe
