#include "drpipe/image_io.hpp"

#include <jpeglib.h>
#include <png.h>

#include <cstdio>
#include <cstring>
#include <memory>
#include <vector>

#include "drpipe/error.hpp"

namespace drpipe {
namespace {

struct FileCloser {
  void operator()(std::FILE* f) const {
    if (f) std::fclose(f);
  }
};
using FilePtr = std::unique_ptr<std::FILE, FileCloser>;

FilePtr open_file(const std::filesystem::path& path, const char* mode) {
  FilePtr f(std::fopen(path.string().c_str(), mode));
  if (!f) throw IoError("cannot open " + path.string());
  return f;
}

[[noreturn]] void png_error_fn(png_structp png, png_const_charp msg) {
  throw ParseError(std::string("png: ") + msg);
}
void png_warn_fn(png_structp, png_const_charp) {}

LoadedImage load_png(std::FILE* f, const std::filesystem::path& path) {
  png_structp png = png_create_read_struct(PNG_LIBPNG_VER_STRING, nullptr, png_error_fn, png_warn_fn);
  png_infop info = png_create_info_struct(png);
  if (!png || !info) throw Error("png: allocation failure");

  LoadedImage out;
  try {
    png_init_io(png, f);
    png_read_info(png, info);

    // Normalize to 8-bit RGB regardless of the stored color type.
    png_set_expand(png);
    png_set_strip_16(png);
    png_set_strip_alpha(png);
    if (png_get_color_type(png, info) == PNG_COLOR_TYPE_GRAY ||
        png_get_color_type(png, info) == PNG_COLOR_TYPE_GRAY_ALPHA)
      png_set_gray_to_rgb(png);
    png_read_update_info(png, info);

    const png_uint_32 w = png_get_image_width(png, info);
    const png_uint_32 h = png_get_image_height(png, info);
    if (png_get_channels(png, info) != 3)
      throw ParseError("png: expected 3 channels after normalization: " + path.string());

    std::vector<std::uint8_t> data(static_cast<std::size_t>(w) * h * 3);
    std::vector<png_bytep> rows(h);
    for (png_uint_32 r = 0; r < h; ++r) rows[r] = data.data() + static_cast<std::size_t>(r) * w * 3;
    png_read_image(png, rows.data());
    png_read_end(png, info);

    png_textp texts = nullptr;
    int ntext = 0;
    if (png_get_text(png, info, &texts, &ntext) > 0)
      for (int i = 0; i < ntext; ++i)
        out.text[texts[i].key] = texts[i].text ? texts[i].text : "";

    out.pixels = from_interleaved(data.data(), static_cast<Eigen::Index>(h),
                                  static_cast<Eigen::Index>(w));
  } catch (...) {
    png_destroy_read_struct(&png, &info, nullptr);
    throw;
  }
  png_destroy_read_struct(&png, &info, nullptr);
  return out;
}

struct JpegErrorMgr {
  jpeg_error_mgr base;
  std::string message;
};

[[noreturn]] void jpeg_error_exit(j_common_ptr cinfo) {
  char buf[JMSG_LENGTH_MAX];
  (*cinfo->err->format_message)(cinfo, buf);
  throw ParseError(std::string("jpeg: ") + buf);
}
void jpeg_emit_message(j_common_ptr, int) {}

LoadedImage load_jpeg(std::FILE* f, const std::filesystem::path& path) {
  jpeg_decompress_struct cinfo;
  JpegErrorMgr err;
  cinfo.err = jpeg_std_error(&err.base);
  err.base.error_exit = jpeg_error_exit;
  err.base.emit_message = jpeg_emit_message;

  jpeg_create_decompress(&cinfo);
  LoadedImage out;
  try {
    jpeg_stdio_src(&cinfo, f);
    jpeg_read_header(&cinfo, TRUE);
    cinfo.out_color_space = JCS_RGB;
    jpeg_start_decompress(&cinfo);

    const auto w = cinfo.output_width;
    const auto h = cinfo.output_height;
    if (cinfo.output_components != 3)
      throw ParseError("jpeg: expected RGB output: " + path.string());

    std::vector<std::uint8_t> data(static_cast<std::size_t>(w) * h * 3);
    while (cinfo.output_scanline < h) {
      JSAMPROW row = data.data() + static_cast<std::size_t>(cinfo.output_scanline) * w * 3;
      jpeg_read_scanlines(&cinfo, &row, 1);
    }
    jpeg_finish_decompress(&cinfo);
    out.pixels = from_interleaved(data.data(), static_cast<Eigen::Index>(h),
                                  static_cast<Eigen::Index>(w));
  } catch (...) {
    jpeg_destroy_decompress(&cinfo);
    throw;
  }
  jpeg_destroy_decompress(&cinfo);
  return out;
}

}  // namespace

LoadedImage load_image(const std::filesystem::path& path) {
  FilePtr f = open_file(path, "rb");
  unsigned char magic[4] = {};
  if (std::fread(magic, 1, sizeof magic, f.get()) != sizeof magic)
    throw ParseError("file too short to be an image: " + path.string());
  std::rewind(f.get());

  if (magic[0] == 0x89 && magic[1] == 'P' && magic[2] == 'N' && magic[3] == 'G')
    return load_png(f.get(), path);
  if (magic[0] == 0xFF && magic[1] == 0xD8) return load_jpeg(f.get(), path);
  throw ParseError("unsupported image format (not PNG/JPEG): " + path.string());
}

void save_png(const std::filesystem::path& path, const Image8& img,
              const std::map<std::string, std::string>& text) {
  if (img.rows() < 1 || img.cols() < 1) throw ShapeMismatch("cannot encode empty image");
  FilePtr f = open_file(path, "wb");

  png_structp png = png_create_write_struct(PNG_LIBPNG_VER_STRING, nullptr, png_error_fn, png_warn_fn);
  png_infop info = png_create_info_struct(png);
  if (!png || !info) throw Error("png: allocation failure");

  try {
    png_init_io(png, f.get());
    png_set_IHDR(png, info, static_cast<png_uint_32>(img.cols()),
                 static_cast<png_uint_32>(img.rows()), 8, PNG_COLOR_TYPE_RGB,
                 PNG_INTERLACE_NONE, PNG_COMPRESSION_TYPE_DEFAULT, PNG_FILTER_TYPE_DEFAULT);
    // Pinned so repeated runs emit identical bytes.
    png_set_compression_level(png, 6);
    png_set_filter(png, 0, PNG_FILTER_SUB);

    std::vector<png_text> chunks;
    chunks.reserve(text.size());
    for (const auto& [key, value] : text) {  // std::map iterates sorted
      png_text t{};
      t.compression = PNG_TEXT_COMPRESSION_NONE;
      t.key = const_cast<char*>(key.c_str());
      t.text = const_cast<char*>(value.c_str());
      t.text_length = value.size();
      chunks.push_back(t);
    }
    if (!chunks.empty()) png_set_text(png, info, chunks.data(), static_cast<int>(chunks.size()));

    png_write_info(png, info);
    auto data = to_interleaved(img);
    for (Eigen::Index r = 0; r < img.rows(); ++r)
      png_write_row(png, data.data() + static_cast<std::size_t>(r) * img.cols() * 3);
    png_write_end(png, info);
  } catch (...) {
    png_destroy_write_struct(&png, &info);
    throw;
  }
  png_destroy_write_struct(&png, &info);
}

}  // namespace drpipe
