#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include "drpipe/image.hpp"
#include "drpipe/manifest.hpp"

namespace drpipe::testing {

/// Self-deleting temporary directory for test artifacts.
class TempDir {
 public:
  TempDir();
  ~TempDir();
  TempDir(const TempDir&) = delete;
  TempDir& operator=(const TempDir&) = delete;

  const std::filesystem::path& path() const { return path_; }
  std::filesystem::path operator/(const std::string& name) const { return path_ / name; }

 private:
  std::filesystem::path path_;
};

/// Deterministic non-constant pattern: pixel(r, c, ch) = (r*7 + c*13 + ch*29) % 256.
Image8 gradient_image(Eigen::Index rows, Eigen::Index cols);

/// Bright disc centered in a black frame; the crop fixture.
Image8 disc_image(Eigen::Index side, Eigen::Index radius, std::uint8_t value);

/// Synthetic fundus-like frame: a shaded disc on black, optionally with
/// `blobs` bright/dark spots injected inside the disc (the lesion stand-in).
Image8 synthetic_fundus(std::uint64_t seed, int blobs);

struct CorpusCounts {
  std::size_t healthy = 0;
  std::size_t per_grade = 0;  // images for each grade 1..4
};

/// Writes labels.csv plus one PNG per record under `dir`. Healthy images are
/// smooth discs; grade-g images carry g+1 injected blobs. Returns the records.
std::vector<ImageRecord> write_synthetic_corpus(const std::filesystem::path& dir,
                                                const CorpusCounts& counts, std::uint64_t seed);

/// Labels-only corpus (no image files), for split/manifest tests.
std::vector<ImageRecord> synthetic_records(std::size_t per_grade);

/// Runs a shell command, returns its exit code (-1 if abnormal).
int run_command(const std::string& command);

std::string read_file(const std::filesystem::path& path);
void write_file(const std::filesystem::path& path, const std::string& content);

}  // namespace drpipe::testing
