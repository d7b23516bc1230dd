#include <doctest.h>

#include "drpipe/digest.hpp"
#include "drpipe/error.hpp"
#include "support/fixtures.hpp"

using namespace drpipe;

// FIPS 180-4 test vectors.
TEST_CASE("sha256 known vectors") {
  CHECK(to_hex(sha256("")) ==
        "e3b0c44298fc1c149afbf4c8996fb92427ae41e4649b934ca495991b7852b855");
  CHECK(to_hex(sha256("abc")) ==
        "ba7816bf8f01cfea414140de5dae2223b00361a396177a9cb410ff61f20015ad");
  CHECK(to_hex(sha256("abcdbcdecdefdefgefghfghighijhijkijkljklmklmnlmnomnopnopq")) ==
        "248d6a61d20638b8e5c026930c3e6039a33ce45964ff2167f6ecedd419db06c1");
}

TEST_CASE("incremental hashing equals one-shot") {
  Sha256 h;
  h.update("ab");
  h.update("c");
  CHECK(to_hex(h.finish()) == to_hex(sha256("abc")));
}

TEST_CASE("file hashing matches in-memory hashing") {
  testing::TempDir dir;
  const std::string payload = "retina pipeline\nwith two lines\n";
  testing::write_file(dir / "blob.bin", payload);
  CHECK(to_hex(sha256_file(dir / "blob.bin")) == to_hex(sha256(payload)));
  CHECK_THROWS_AS(sha256_file(dir / "missing.bin"), IoError);
}

TEST_CASE("hex round trip and validation") {
  const Digest256 d = sha256("abc");
  CHECK(from_hex(to_hex(d)) == d);
  CHECK_THROWS_AS(from_hex("abc"), ParseError);
  CHECK_THROWS_AS(from_hex(std::string(64, 'z')), ParseError);
}
