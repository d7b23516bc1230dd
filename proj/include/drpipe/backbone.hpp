#pragma once

#include <Eigen/Core>
#include <cstdint>
#include <filesystem>
#include <map>
#include <memory>
#include <mutex>
#include <string>
#include <vector>

#include "drpipe/image.hpp"

namespace drpipe {

/// Frozen image->feature map. Handles are immutable after construction and
/// safe to share across threads; extract() is internally synchronized where
/// the underlying runtime needs it.
class Backbone {
 public:
  virtual ~Backbone() = default;

  virtual int feature_dim() const = 0;

  /// Digest string identifying the exact weights behind this handle.
  virtual const std::string& fingerprint() const = 0;

  /// One feature row per image, order preserved. Deterministic for a fixed
  /// handle; throws NonFiniteError if the runtime produces NaN/Inf.
  virtual Eigen::MatrixXf extract(const std::vector<Image8>& images) const = 0;

  Eigen::VectorXf extract_one(const Image8& image) const;
};

/// Deterministic stand-in backbone so the full pipeline runs without the
/// real weight asset. Algorithm, frozen forever:
///   1. average-pool the image to 8x8 per channel (cell bounds
///      [floor(i*H/8), floor((i+1)*H/8)) etc.), values scaled to [0,1];
///   2. flatten to 192 doubles, index (row*8 + col)*3 + channel;
///   3. multiply by a seeded +-1 projection matrix of shape dim x 192
///      (row-major fill; sign from the top bit of the substream's next u64);
///   4. ReLU, cast to float.
class MockBackbone final : public Backbone {
 public:
  MockBackbone(std::uint64_t seed, int dim);

  int feature_dim() const override { return dim_; }
  const std::string& fingerprint() const override { return fingerprint_; }
  Eigen::MatrixXf extract(const std::vector<Image8>& images) const override;

  // Intermediate stages, exposed for the tests of the algorithm's contracts.
  Eigen::VectorXd pooled(const Image8& image) const;         // 192 values in [0,1]
  Eigen::VectorXd preactivation(const Image8& image) const;  // before the ReLU

 private:
  std::uint64_t seed_;
  int dim_;
  std::string fingerprint_;
  Eigen::Matrix<std::int8_t, Eigen::Dynamic, Eigen::Dynamic> signs_;  // dim x 192
};

std::unique_ptr<MockBackbone> mock_backbone(std::uint64_t seed, int dim);

/// Locator for the pretrained weight asset and the runner that serves it.
struct WeightAsset {
  std::filesystem::path path;
  std::string sha256_hex;      // pinned digest, verified at load
  std::string runner_command;  // shell command; the asset path is appended
  int expected_dim = 2048;     // 0 = accept whatever the runner reports
};

/// Loads the pretrained backbone: verifies the asset digest, starts the
/// runner, and checks the feature width it reports. The forward pass itself
/// is delegated to the runner process over a pipe protocol:
///   handshake   runner -> "FEATD <D>\n"
///   per batch   host   -> "BATCH <n> <rows> <cols>\n" + n*rows*cols*3 raw RGB bytes
///               runner -> "OK <n> <D>\n" + n*D little-endian float32
///   shutdown    host   -> "END\n"
std::unique_ptr<Backbone> load_backbone(const WeightAsset& asset);

/// Extracted features keyed by image id, bound to the exact backbone weights
/// and preprocess config that produced them.
struct FeatureCache {
  int dim = 0;
  std::string backbone_fingerprint;
  std::string preprocess_digest;
  std::map<std::string, Eigen::VectorXf> records;

  friend bool operator==(const FeatureCache& a, const FeatureCache& b);
};

/// Throws StaleCache when the cache was built against different weights or a
/// different preprocess config than the caller is about to use.
void validate_cache(const FeatureCache& cache, const std::string& backbone_fingerprint,
                    const std::string& preprocess_digest);

// Binary format: magic "FTRC", version byte 1, u32le dim, u32le record count,
// 32-byte backbone digest, 32-byte preprocess digest, then per record
// (sorted by id): u16le id length, id bytes, dim little-endian float32.
void write_cache(const FeatureCache& cache, const std::filesystem::path& path);
FeatureCache read_cache(const std::filesystem::path& path);

}  // namespace drpipe
