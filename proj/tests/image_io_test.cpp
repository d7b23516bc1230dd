#include <doctest.h>

#include <cstdlib>
#include <string>

#include "drpipe/error.hpp"
#include "drpipe/image_io.hpp"
#include "support/fixtures.hpp"

using namespace drpipe;
using drpipe::testing::TempDir;

TEST_CASE("png round trip is lossless and carries text chunks") {
  TempDir dir;
  const Image8 img = testing::gradient_image(37, 53);
  save_png(dir / "img.png", img, {{"drpipe.preprocess", "cafe"}, {"other", "x"}});

  const LoadedImage back = load_image(dir / "img.png");
  CHECK(back.pixels == img);
  CHECK(back.text.at("drpipe.preprocess") == "cafe");
  CHECK(back.text.at("other") == "x");
}

TEST_CASE("png bytes are deterministic across saves") {
  TempDir dir;
  const Image8 img = testing::gradient_image(64, 64);
  save_png(dir / "a.png", img, {{"k", "v"}});
  save_png(dir / "b.png", img, {{"k", "v"}});
  CHECK(testing::read_file(dir / "a.png") == testing::read_file(dir / "b.png"));
}

namespace {

// 8x8 solid (200, 40, 90) JPEG, encoded once with an independent encoder.
constexpr const char* kSolidJpegHex =
    "ffd8ffe000104a46494600010100000100010000ffdb0043000201010101010201010102020202020403020202"
    "020504040304060506060605060606070908060709070606080b08090a0a0a0a0a06080b0c0b0a0c090a0a0aff"
    "db004301020202020202050303050a0706070a0a0a0a0a0a0a0a0a0a0a0a0a0a0a0a0a0a0a0a0a0a0a0a0a0a0a"
    "0a0a0a0a0a0a0a0a0a0a0a0a0a0a0a0a0a0a0a0a0a0a0a0a0affc00011080008000803012200021101031101ff"
    "c4001f0000010501010101010100000000000000000102030405060708090a0bffc400b51000020103030204030"
    "50504040000017d01020300041105122131410613516107227114328191a1082342b1c11552d1f0243362728209"
    "0a161718191a25262728292a3435363738393a434445464748494a535455565758595a636465666768696a73747"
    "5767778797a838485868788898a92939495969798999aa2a3a4a5a6a7a8a9aab2b3b4b5b6b7b8b9bac2c3c4c5c6"
    "c7c8c9cad2d3d4d5d6d7d8d9dae1e2e3e4e5e6e7e8e9eaf1f2f3f4f5f6f7f8f9faffc4001f01000301010101010"
    "10101010000000000000102030405060708090a0bffc400b5110002010204040304070504040001027700010203"
    "1104052131061241510761711322328108144291a1b1c109233352f0156272d10a162434e125f11718191a26272"
    "8292a35363738393a434445464748494a535455565758595a636465666768696a737475767778797a8283848586"
    "8788898a92939495969798999aa2a3a4a5a6a7a8a9aab2b3b4b5b6b7b8b9bac2c3c4c5c6c7c8c9cad2d3d4d5d6d"
    "7d8d9dae2e3e4e5e6e7e8e9eaf2f3f4f5f6f7f8f9faffda000c03010002110311003f00f9de8a28ae73fd303fff"
    "d9";

std::string hex_to_bytes(const std::string& hex) {
  std::string out;
  for (std::size_t i = 0; i + 1 < hex.size(); i += 2)
    out.push_back(static_cast<char>(std::stoi(hex.substr(i, 2), nullptr, 16)));
  return out;
}

}  // namespace

TEST_CASE("jpeg decoding recovers shape and color") {
  TempDir dir;
  testing::write_file(dir / "solid.jpg", hex_to_bytes(kSolidJpegHex));
  const LoadedImage img = load_image(dir / "solid.jpg");
  CHECK(img.pixels.rows() == 8);
  CHECK(img.pixels.cols() == 8);
  // JPEG is lossy; a solid block should still come back close to the input.
  for (Eigen::Index r = 0; r < 8; ++r)
    for (Eigen::Index c = 0; c < 8; ++c) {
      CHECK(std::abs(static_cast<int>(img.pixels.ch[0](r, c)) - 200) <= 6);
      CHECK(std::abs(static_cast<int>(img.pixels.ch[1](r, c)) - 40) <= 6);
      CHECK(std::abs(static_cast<int>(img.pixels.ch[2](r, c)) - 90) <= 6);
    }
}

TEST_CASE("non-image inputs are rejected") {
  TempDir dir;
  testing::write_file(dir / "junk.bin", "this is not an image at all");
  CHECK_THROWS_AS(load_image(dir / "junk.bin"), ParseError);
  CHECK_THROWS_AS(load_image(dir / "missing.png"), IoError);
  testing::write_file(dir / "short.png", "ab");
  CHECK_THROWS_AS(load_image(dir / "short.png"), ParseError);
}

TEST_CASE("truncated png raises a parse error") {
  TempDir dir;
  save_png(dir / "img.png", testing::gradient_image(32, 32));
  const std::string bytes = testing::read_file(dir / "img.png");
  testing::write_file(dir / "broken.png", bytes.substr(0, bytes.size() / 2));
  CHECK_THROWS_AS(load_image(dir / "broken.png"), ParseError);
}
