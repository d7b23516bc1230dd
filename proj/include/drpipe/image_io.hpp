#pragma once

#include <filesystem>
#include <map>
#include <string>

#include "drpipe/image.hpp"

namespace drpipe {

/// Decoded image plus any tEXt metadata found in the file (PNG only).
struct LoadedImage {
  Image8 pixels;
  std::map<std::string, std::string> text;
};

/// Reads a PNG or JPEG file, normalizing to 8-bit RGB. Dispatches on magic bytes.
LoadedImage load_image(const std::filesystem::path& path);

/// Writes an 8-bit RGB PNG. `text` entries become tEXt chunks (sorted by key,
/// so output bytes are deterministic). Compression settings are pinned.
void save_png(const std::filesystem::path& path, const Image8& img,
              const std::map<std::string, std::string>& text = {});

}  // namespace drpipe
