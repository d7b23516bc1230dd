#include "drpipe/head.hpp"

#include <bit>
#include <fstream>
#include <sstream>

#include "drpipe/strings.hpp"

namespace drpipe {
namespace {

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
  explicit Reader(const std::string& data) : data_(data) {}

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

  float f32() {
    const float v = std::bit_cast<float>(u32());
    if (!std::isfinite(v)) throw ParseError("non-finite value in head checkpoint");
    return v;
  }

  std::string bytes(std::size_t n) { return std::string(take(n), n); }
  bool at_end() const { return pos_ == data_.size(); }

 private:
  const char* take(std::size_t n) {
    if (pos_ + n > data_.size()) throw ParseError("truncated head checkpoint");
    const char* p = data_.data() + pos_;
    pos_ += n;
    return p;
  }

  const std::string& data_;
  std::size_t pos_ = 0;
};

}  // namespace

void save_head(const HeadCheckpoint& ckpt, const std::filesystem::path& path) {
  const HeadParams& p = ckpt.params;
  std::string out;
  out += "HEAD";
  out.push_back(1);  // version
  put_u32(out, static_cast<std::uint32_t>(p.feature_dim()));
  put_u32(out, static_cast<std::uint32_t>(p.hidden_width()));
  out.push_back(0);  // class order: healthy first
  if (ckpt.backbone_fingerprint.size() > 0xFFFF) throw Error("fingerprint too long");
  put_u16(out, static_cast<std::uint16_t>(ckpt.backbone_fingerprint.size()));
  out += ckpt.backbone_fingerprint;

  for (Eigen::Index r = 0; r < p.W1.rows(); ++r)
    for (Eigen::Index c = 0; c < p.W1.cols(); ++c) put_f32(out, p.W1(r, c));
  for (Eigen::Index i = 0; i < p.b1.size(); ++i) put_f32(out, p.b1[i]);
  for (Eigen::Index r = 0; r < p.W2.rows(); ++r)
    for (Eigen::Index c = 0; c < p.W2.cols(); ++c) put_f32(out, p.W2(r, c));
  for (Eigen::Index i = 0; i < p.b2.size(); ++i) put_f32(out, p.b2[i]);

  std::ofstream f(path, std::ios::binary);
  if (!f) throw IoError("cannot write head checkpoint: " + path.string());
  f.write(out.data(), static_cast<std::streamsize>(out.size()));
  if (!f) throw IoError("write failed: " + path.string());
}

HeadCheckpoint load_head(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open head checkpoint: " + path.string());
  std::ostringstream ss;
  ss << in.rdbuf();
  const std::string data = std::move(ss).str();
  Reader r(data);

  if (r.bytes(4) != "HEAD") throw ParseError("bad head checkpoint magic");
  if (r.u8() != 1) throw ParseError("unsupported head checkpoint version");
  const auto dim = static_cast<Eigen::Index>(r.u32());
  const auto hidden = static_cast<Eigen::Index>(r.u32());
  if (dim < 1 || hidden < 1) throw ParseError("bad head checkpoint dimensions");
  if (r.u8() != 0) throw ParseError("unknown class-order tag in head checkpoint");

  HeadCheckpoint ckpt;
  ckpt.backbone_fingerprint = r.bytes(r.u16());
  HeadParams& p = ckpt.params;
  p.W1.resize(hidden, dim);
  p.b1.resize(hidden);
  p.W2.resize(kNumClasses, hidden);

  for (Eigen::Index row = 0; row < p.W1.rows(); ++row)
    for (Eigen::Index c = 0; c < p.W1.cols(); ++c) p.W1(row, c) = r.f32();
  for (Eigen::Index i = 0; i < p.b1.size(); ++i) p.b1[i] = r.f32();
  for (Eigen::Index row = 0; row < p.W2.rows(); ++row)
    for (Eigen::Index c = 0; c < p.W2.cols(); ++c) p.W2(row, c) = r.f32();
  for (Eigen::Index i = 0; i < p.b2.size(); ++i) p.b2[i] = r.f32();
  if (!r.at_end()) throw ParseError("trailing bytes in head checkpoint");
  return ckpt;
}

void save_history(const TrainHistory& history, const std::filesystem::path& path,
                  const std::string& backbone_fingerprint, const TrainConfig& cfg) {
  std::ofstream f(path, std::ios::binary);
  if (!f) throw IoError("cannot write training history: " + path.string());
  f << "# train history v1\tbackbone=" << backbone_fingerprint << "\tschedule="
    << to_string(cfg.schedule) << "\teta_max=" << format_double(cfg.eta_max) << "\n";
  f << "epoch\tlr\tmean_loss\ttrain_accuracy\n";
  for (std::size_t e = 0; e < history.mean_loss.size(); ++e)
    f << e << "\t" << format_double(history.learning_rate[e]) << "\t"
      << format_double(history.mean_loss[e]) << "\t" << format_double(history.train_accuracy[e])
      << "\n";
  if (!f) throw IoError("write failed: " + path.string());
}

}  // namespace drpipe
