#pragma once

#include <Eigen/Core>
#include <array>
#include <cstdint>
#include <vector>

namespace drpipe {

/// One image channel. Row-major so plane(r, c) maps directly onto scanlines.
template <typename Scalar>
using Plane = Eigen::Array<Scalar, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;

/// Planar RGB image, channels indexed 0=R, 1=G, 2=B.
template <typename Scalar>
struct Image {
  std::array<Plane<Scalar>, 3> ch;

  Image() = default;
  Image(Eigen::Index rows, Eigen::Index cols) {
    for (auto& p : ch) p = Plane<Scalar>::Zero(rows, cols);
  }

  Eigen::Index rows() const { return ch[0].rows(); }
  Eigen::Index cols() const { return ch[0].cols(); }

  static Image constant(Eigen::Index rows, Eigen::Index cols, Scalar value) {
    Image img;
    for (auto& p : img.ch) p = Plane<Scalar>::Constant(rows, cols, value);
    return img;
  }

  friend bool operator==(const Image& a, const Image& b) {
    if (a.rows() != b.rows() || a.cols() != b.cols()) return false;
    for (int c = 0; c < 3; ++c)
      if (!(a.ch[c] == b.ch[c]).all()) return false;
    return true;
  }
};

using Image8 = Image<std::uint8_t>;

/// Interleaved RGB bytes (r, g, b per pixel, scanline order), as used by the codecs.
std::vector<std::uint8_t> to_interleaved(const Image8& img);
Image8 from_interleaved(const std::uint8_t* data, Eigen::Index rows, Eigen::Index cols);

}  // namespace drpipe
