#include "support/fixtures.hpp"

#include <sys/wait.h>

#include <algorithm>
#include <cmath>
#include <cstdlib>
#include <fstream>
#include <sstream>

#include "drpipe/error.hpp"
#include "drpipe/image_io.hpp"
#include "drpipe/rng.hpp"

namespace drpipe::testing {

TempDir::TempDir() {
  std::string tmpl = (std::filesystem::temp_directory_path() / "drpipe_test_XXXXXX").string();
  if (!mkdtemp(tmpl.data())) throw Error("mkdtemp failed");
  path_ = tmpl;
}

TempDir::~TempDir() {
  std::error_code ec;
  std::filesystem::remove_all(path_, ec);
}

Image8 gradient_image(Eigen::Index rows, Eigen::Index cols) {
  Image8 img(rows, cols);
  for (int ch = 0; ch < 3; ++ch)
    for (Eigen::Index r = 0; r < rows; ++r)
      for (Eigen::Index c = 0; c < cols; ++c)
        img.ch[ch](r, c) = static_cast<std::uint8_t>((r * 7 + c * 13 + ch * 29) % 256);
  return img;
}

Image8 disc_image(Eigen::Index side, Eigen::Index radius, std::uint8_t value) {
  Image8 img(side, side);
  const double cx = (side - 1) / 2.0, cy = (side - 1) / 2.0;
  for (Eigen::Index r = 0; r < side; ++r)
    for (Eigen::Index c = 0; c < side; ++c) {
      const double d2 = (r - cy) * (r - cy) + (c - cx) * (c - cx);
      if (d2 <= static_cast<double>(radius) * radius)
        for (int ch = 0; ch < 3; ++ch) img.ch[ch](r, c) = value;
    }
  return img;
}

Image8 synthetic_fundus(std::uint64_t seed, int blobs) {
  constexpr Eigen::Index side = 340;
  constexpr double disc_radius = 140.0;
  const double cx = (side - 1) / 2.0, cy = (side - 1) / 2.0;

  Rng rng(seed);
  const double brightness = rng.uniform(0.85, 1.15);
  const double tilt_r = rng.uniform(-0.1, 0.1);  // smooth illumination gradient
  const double tilt_c = rng.uniform(-0.1, 0.1);
  const double base[3] = {185.0, 110.0, 55.0};  // fundus-like orange

  struct Blob {
    double r, c, radius, delta;
  };
  std::vector<Blob> spots;
  for (int i = 0; i < blobs; ++i) {
    const double angle = rng.uniform(0.0, 2.0 * 3.14159265358979323846);
    const double dist = rng.uniform(0.0, disc_radius * 0.7);
    Blob b;
    b.r = cy + dist * std::sin(angle);
    b.c = cx + dist * std::cos(angle);
    b.radius = rng.uniform(12.0, 22.0);
    b.delta = (i % 2 == 0 ? 1.0 : -1.0) * rng.uniform(60.0, 100.0);
    spots.push_back(b);
  }

  Image8 img(side, side);
  for (Eigen::Index r = 0; r < side; ++r)
    for (Eigen::Index c = 0; c < side; ++c) {
      const double d2 = (r - cy) * (r - cy) + (c - cx) * (c - cx);
      if (d2 > disc_radius * disc_radius) continue;
      const double shade =
          brightness * (1.0 - 0.3 * d2 / (disc_radius * disc_radius)) *
          (1.0 + tilt_r * (r - cy) / disc_radius + tilt_c * (c - cx) / disc_radius);
      double delta = 0.0;
      for (const Blob& b : spots) {
        const double bd2 = (r - b.r) * (r - b.r) + (c - b.c) * (c - b.c);
        if (bd2 <= b.radius * b.radius) delta += b.delta;
      }
      for (int ch = 0; ch < 3; ++ch) {
        const double v = base[ch] * shade + delta;
        img.ch[ch](r, c) = static_cast<std::uint8_t>(std::clamp(v, 8.0, 255.0));
      }
    }
  return img;
}

std::vector<ImageRecord> write_synthetic_corpus(const std::filesystem::path& dir,
                                                const CorpusCounts& counts, std::uint64_t seed) {
  std::filesystem::create_directories(dir);
  std::vector<ImageRecord> records;
  std::ofstream csv(dir / "labels.csv", std::ios::binary);
  csv << "image,level\n";

  std::size_t serial = 0;
  auto emit = [&](int grade, std::size_t count) {
    for (std::size_t i = 0; i < count; ++i, ++serial) {
      const std::string id = "img" + std::to_string(1000 + serial) + "_g" + std::to_string(grade);
      const int blobs = grade == 0 ? 0 : grade + 1;
      const Image8 img = synthetic_fundus(derive_seed(seed, serial), blobs);
      save_png(dir / (id + ".png"), img);
      csv << id << "," << grade << "\n";
      records.push_back(ImageRecord{id, id, SeverityGrade(grade)});
    }
  };
  emit(0, counts.healthy);
  for (int grade = 1; grade <= 4; ++grade) emit(grade, counts.per_grade);
  return records;
}

std::vector<ImageRecord> synthetic_records(std::size_t per_grade) {
  std::vector<ImageRecord> records;
  std::size_t serial = 0;
  for (int grade = 0; grade < SeverityGrade::kCount; ++grade)
    for (std::size_t i = 0; i < per_grade; ++i, ++serial) {
      const std::string id = "rec" + std::to_string(100000 + serial);
      records.push_back(ImageRecord{id, id, SeverityGrade(grade)});
    }
  return records;
}

int run_command(const std::string& command) {
  const int status = std::system(command.c_str());
  if (status < 0) return -1;
  return WIFEXITED(status) ? WEXITSTATUS(status) : -1;
}

std::string read_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot read " + path.string());
  std::ostringstream ss;
  ss << in.rdbuf();
  return std::move(ss).str();
}

void write_file(const std::filesystem::path& path, const std::string& content) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw IoError("cannot write " + path.string());
  out << content;
}

}  // namespace drpipe::testing
