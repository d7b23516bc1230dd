#include "drpipe/image.hpp"

namespace drpipe {

std::vector<std::uint8_t> to_interleaved(const Image8& img) {
  const Eigen::Index rows = img.rows(), cols = img.cols();
  std::vector<std::uint8_t> out(static_cast<std::size_t>(rows * cols * 3));
  std::size_t k = 0;
  for (Eigen::Index r = 0; r < rows; ++r)
    for (Eigen::Index c = 0; c < cols; ++c) {
      out[k++] = img.ch[0](r, c);
      out[k++] = img.ch[1](r, c);
      out[k++] = img.ch[2](r, c);
    }
  return out;
}

Image8 from_interleaved(const std::uint8_t* data, Eigen::Index rows, Eigen::Index cols) {
  Image8 img(rows, cols);
  std::size_t k = 0;
  for (Eigen::Index r = 0; r < rows; ++r)
    for (Eigen::Index c = 0; c < cols; ++c) {
      img.ch[0](r, c) = data[k++];
      img.ch[1](r, c) = data[k++];
      img.ch[2](r, c) = data[k++];
    }
  return img;
}

}  // namespace drpipe
