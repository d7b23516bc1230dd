#include "drpipe/backbone.hpp"

#include <bit>
#include <cmath>
#include <cstring>
#include <fstream>
#include <sstream>

#include "drpipe/digest.hpp"
#include "drpipe/error.hpp"
#include "drpipe/rng.hpp"
#include "drpipe/subprocess.hpp"

namespace drpipe {
namespace {

constexpr int kPoolSide = 8;
constexpr int kPooledLen = kPoolSide * kPoolSide * 3;

void check_image_shape(const Image8& img) {
  if (img.rows() < kPoolSide || img.cols() < kPoolSide)
    throw ShapeMismatch("backbone input must be at least 8x8 pixels");
}

// --- little-endian binary helpers ---

void put_u16(std::string& out, std::uint16_t v) {
  out.push_back(static_cast<char>(v & 0xFF));
  out.push_back(static_cast<char>((v >> 8) & 0xFF));
}

void put_u32(std::string& out, std::uint32_t v) {
  for (int i = 0; i < 4; ++i) out.push_back(static_cast<char>((v >> (8 * i)) & 0xFF));
}

void put_f32(std::string& out, float v) { put_u32(out, std::bit_cast<std::uint32_t>(v)); }

class Reader {
 public:
  Reader(const std::string& data, const std::string& what) : data_(data), what_(what) {}

  std::uint8_t u8() { return static_cast<std::uint8_t>(take(1)[0]); }

  std::uint16_t u16() {
    const auto* p = reinterpret_cast<const unsigned char*>(take(2));
    return static_cast<std::uint16_t>(p[0] | (p[1] << 8));
  }

  std::uint32_t u32() {
    const auto* p = reinterpret_cast<const unsigned char*>(take(4));
    return static_cast<std::uint32_t>(p[0]) | (static_cast<std::uint32_t>(p[1]) << 8) |
           (static_cast<std::uint32_t>(p[2]) << 16) | (static_cast<std::uint32_t>(p[3]) << 24);
  }

  float f32() { return std::bit_cast<float>(u32()); }

  std::string bytes(std::size_t n) { return std::string(take(n), n); }

  bool at_end() const { return pos_ == data_.size(); }

 private:
  const char* take(std::size_t n) {
    if (pos_ + n > data_.size()) throw ParseError("truncated " + what_);
    const char* p = data_.data() + pos_;
    pos_ += n;
    return p;
  }

  const std::string& data_;
  std::string what_;
  std::size_t pos_ = 0;
};

std::string read_file_bytes(const std::filesystem::path& path, const std::string& what) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open " + what + ": " + path.string());
  std::ostringstream ss;
  ss << in.rdbuf();
  return std::move(ss).str();
}

}  // namespace

Eigen::VectorXf Backbone::extract_one(const Image8& image) const {
  return extract({image}).row(0);
}

// --- mock backbone ---

MockBackbone::MockBackbone(std::uint64_t seed, int dim) : seed_(seed), dim_(dim) {
  if (dim < 2) throw Error("mock backbone dim must be >= 2");
  fingerprint_ = to_hex(sha256("drpipe-mock-backbone\nseed=" + std::to_string(seed) +
                               "\ndim=" + std::to_string(dim) + "\n"));
  signs_.resize(dim, kPooledLen);
  Rng rng = stream_for(seed, {kTagMockProjection});
  for (int d = 0; d < dim; ++d)
    for (int k = 0; k < kPooledLen; ++k)
      signs_(d, k) = (rng.next_u64() >> 63) ? -1 : 1;
}

Eigen::VectorXd MockBackbone::pooled(const Image8& image) const {
  check_image_shape(image);
  const Eigen::Index rows = image.rows(), cols = image.cols();
  Eigen::VectorXd x(kPooledLen);
  for (int i = 0; i < kPoolSide; ++i) {
    const Eigen::Index r0 = rows * i / kPoolSide;
    const Eigen::Index r1 = rows * (i + 1) / kPoolSide;
    for (int j = 0; j < kPoolSide; ++j) {
      const Eigen::Index c0 = cols * j / kPoolSide;
      const Eigen::Index c1 = cols * (j + 1) / kPoolSide;
      for (int ch = 0; ch < 3; ++ch) {
        // Integer sum is exact in a double, so pooling is bit-reproducible.
        double sum = 0.0;
        for (Eigen::Index r = r0; r < r1; ++r)
          for (Eigen::Index c = c0; c < c1; ++c) sum += image.ch[ch](r, c);
        const double area = static_cast<double>((r1 - r0) * (c1 - c0));
        x[(i * kPoolSide + j) * 3 + ch] = sum / (area * 255.0);
      }
    }
  }
  return x;
}

Eigen::VectorXd MockBackbone::preactivation(const Image8& image) const {
  const Eigen::VectorXd x = pooled(image);
  Eigen::VectorXd pre(dim_);
  for (int d = 0; d < dim_; ++d) {
    // Signs applied as add/subtract: no multiplies, fixed order, exact.
    double acc = 0.0;
    for (int k = 0; k < kPooledLen; ++k)
      acc += signs_(d, k) > 0 ? x[k] : -x[k];
    pre[d] = acc;
  }
  return pre;
}

Eigen::MatrixXf MockBackbone::extract(const std::vector<Image8>& images) const {
  Eigen::MatrixXf out(static_cast<Eigen::Index>(images.size()), dim_);
  for (std::size_t n = 0; n < images.size(); ++n) {
    const Eigen::VectorXd pre = preactivation(images[n]);
    for (int d = 0; d < dim_; ++d)
      out(static_cast<Eigen::Index>(n), d) = static_cast<float>(std::max(0.0, pre[d]));
  }
  return out;
}

std::unique_ptr<MockBackbone> mock_backbone(std::uint64_t seed, int dim) {
  return std::make_unique<MockBackbone>(seed, dim);
}

// --- pretrained backbone via external runner ---

namespace {

class ExternalBackbone final : public Backbone {
 public:
  ExternalBackbone(const WeightAsset& asset, std::string fingerprint)
      : fingerprint_(std::move(fingerprint)) {
    proc_ = std::make_unique<Subprocess>(asset.runner_command + " '" + asset.path.string() + "'");
    const std::string hello = proc_->read_line();
    std::istringstream ss(hello);
    std::string word;
    if (!(ss >> word >> dim_) || word != "FEATD" || dim_ < 1)
      throw IntegrityError("runner handshake failed, got: '" + hello + "'");
    if (asset.expected_dim > 0 && dim_ != asset.expected_dim)
      throw IntegrityError("backbone feature width " + std::to_string(dim_) +
                           " does not match the expected " + std::to_string(asset.expected_dim));
  }

  ~ExternalBackbone() override {
    try {
      proc_->write_line("END");
    } catch (...) {
    }
  }

  int feature_dim() const override { return dim_; }
  const std::string& fingerprint() const override { return fingerprint_; }

  Eigen::MatrixXf extract(const std::vector<Image8>& images) const override {
    std::lock_guard<std::mutex> lock(mutex_);
    Eigen::MatrixXf out(static_cast<Eigen::Index>(images.size()), dim_);
    // One protocol batch per run of same-shape images.
    std::size_t start = 0;
    while (start < images.size()) {
      std::size_t stop = start + 1;
      while (stop < images.size() && images[stop].rows() == images[start].rows() &&
             images[stop].cols() == images[start].cols())
        ++stop;
      send_batch(images, start, stop, out);
      start = stop;
    }
    return out;
  }

 private:
  void send_batch(const std::vector<Image8>& images, std::size_t start, std::size_t stop,
                  Eigen::MatrixXf& out) const {
    const Eigen::Index rows = images[start].rows(), cols = images[start].cols();
    const std::size_t n = stop - start;
    proc_->write_line("BATCH " + std::to_string(n) + " " + std::to_string(rows) + " " +
                      std::to_string(cols));
    for (std::size_t i = start; i < stop; ++i) {
      const auto bytes = to_interleaved(images[i]);
      proc_->write_all(bytes.data(), bytes.size());
    }

    const std::string reply = proc_->read_line();
    std::istringstream ss(reply);
    std::string word;
    std::size_t rn = 0;
    int rd = 0;
    if (!(ss >> word >> rn >> rd) || word != "OK" || rn != n || rd != dim_)
      throw Error("runner batch reply malformed: '" + reply + "'");

    std::vector<std::uint8_t> buf(n * static_cast<std::size_t>(dim_) * 4);
    proc_->read_all(buf.data(), buf.size());
    for (std::size_t i = 0; i < n; ++i)
      for (int d = 0; d < dim_; ++d) {
        const std::size_t off = (i * static_cast<std::size_t>(dim_) + static_cast<std::size_t>(d)) * 4;
        std::uint32_t u = static_cast<std::uint32_t>(buf[off]) |
                          (static_cast<std::uint32_t>(buf[off + 1]) << 8) |
                          (static_cast<std::uint32_t>(buf[off + 2]) << 16) |
                          (static_cast<std::uint32_t>(buf[off + 3]) << 24);
        const float v = std::bit_cast<float>(u);
        if (!std::isfinite(v))
          throw NonFiniteError("runner produced a non-finite activation");
        out(static_cast<Eigen::Index>(start + i), d) = v;
      }
  }

  std::string fingerprint_;
  int dim_ = 0;
  std::unique_ptr<Subprocess> proc_;
  mutable std::mutex mutex_;
};

}  // namespace

std::unique_ptr<Backbone> load_backbone(const WeightAsset& asset) {
  if (!std::filesystem::exists(asset.path))
    throw IntegrityError("weight asset missing: " + asset.path.string());
  const std::string actual = to_hex(sha256_file(asset.path));
  if (asset.sha256_hex.empty())
    throw IntegrityError("no pinned digest configured for the weight asset");
  if (actual != asset.sha256_hex)
    throw IntegrityError("weight asset digest mismatch: expected " + asset.sha256_hex + ", got " +
                         actual);
  if (asset.runner_command.empty())
    throw Error("no runner command configured for the pretrained backbone");
  return std::make_unique<ExternalBackbone>(asset, actual);
}

// --- feature cache ---

bool operator==(const FeatureCache& a, const FeatureCache& b) {
  if (a.dim != b.dim || a.backbone_fingerprint != b.backbone_fingerprint ||
      a.preprocess_digest != b.preprocess_digest || a.records.size() != b.records.size())
    return false;
  auto ita = a.records.begin();
  auto itb = b.records.begin();
  for (; ita != a.records.end(); ++ita, ++itb) {
    if (ita->first != itb->first) return false;
    if (ita->second.size() != itb->second.size() || ita->second != itb->second) return false;
  }
  return true;
}

void validate_cache(const FeatureCache& cache, const std::string& backbone_fingerprint,
                    const std::string& preprocess_digest) {
  if (cache.backbone_fingerprint != backbone_fingerprint)
    throw StaleCache("feature cache was built with different backbone weights; re-extract");
  if (cache.preprocess_digest != preprocess_digest)
    throw StaleCache("feature cache was built with a different preprocess config; re-extract");
}

void write_cache(const FeatureCache& cache, const std::filesystem::path& path) {
  std::string out;
  out += "FTRC";
  out.push_back(1);  // version
  put_u32(out, static_cast<std::uint32_t>(cache.dim));
  put_u32(out, static_cast<std::uint32_t>(cache.records.size()));
  const Digest256 bb = from_hex(cache.backbone_fingerprint);
  const Digest256 pp = from_hex(cache.preprocess_digest);
  out.append(reinterpret_cast<const char*>(bb.data()), bb.size());
  out.append(reinterpret_cast<const char*>(pp.data()), pp.size());

  for (const auto& [id, vec] : cache.records) {
    if (vec.size() != cache.dim)
      throw ShapeMismatch("feature vector for '" + id + "' has wrong length");
    if (id.size() > 0xFFFF) throw Error("image id too long for cache format");
    put_u16(out, static_cast<std::uint16_t>(id.size()));
    out += id;
    for (Eigen::Index d = 0; d < vec.size(); ++d) put_f32(out, vec[d]);
  }

  std::ofstream f(path, std::ios::binary);
  if (!f) throw IoError("cannot write feature cache: " + path.string());
  f.write(out.data(), static_cast<std::streamsize>(out.size()));
  if (!f) throw IoError("write failed: " + path.string());
}

FeatureCache read_cache(const std::filesystem::path& path) {
  const std::string data = read_file_bytes(path, "feature cache");
  Reader r(data, "feature cache");

  if (r.bytes(4) != "FTRC") throw ParseError("bad feature cache magic");
  if (r.u8() != 1) throw ParseError("unsupported feature cache version");

  FeatureCache cache;
  cache.dim = static_cast<int>(r.u32());
  const std::uint32_t count = r.u32();
  Digest256 bb{}, pp{};
  std::memcpy(bb.data(), r.bytes(32).data(), 32);
  std::memcpy(pp.data(), r.bytes(32).data(), 32);
  cache.backbone_fingerprint = to_hex(bb);
  cache.preprocess_digest = to_hex(pp);

  for (std::uint32_t i = 0; i < count; ++i) {
    const std::uint16_t idlen = r.u16();
    std::string id = r.bytes(idlen);
    Eigen::VectorXf vec(cache.dim);
    for (int d = 0; d < cache.dim; ++d) {
      vec[d] = r.f32();
      if (!std::isfinite(vec[d]))
        throw ParseError("non-finite feature value in cache for '" + id + "'");
    }
    if (!cache.records.emplace(std::move(id), std::move(vec)).second)
      throw ParseError("duplicate id in feature cache");
  }
  if (!r.at_end()) throw ParseError("trailing bytes in feature cache");
  return cache;
}

}  // namespace drpipe
