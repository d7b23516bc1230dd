#include <doctest.h>

#include <algorithm>
#include <set>
#include <vector>

#include "drpipe/rng.hpp"

using namespace drpipe;

// Frozen reference values computed by tests/oracle/rng_reference.py, which
// implements the published SplitMix64 / xoshiro256** algorithms independently.

TEST_CASE("splitmix64 matches the published sequence") {
  SplitMix64 sm0(0);
  CHECK(sm0.next() == 0xe220a8397b1dcdafULL);
  CHECK(sm0.next() == 0x6e789e6aa1b965f4ULL);
  CHECK(sm0.next() == 0x06c45d188009454fULL);

  SplitMix64 sm1(0x123456789ABCDEFULL);
  CHECK(sm1.next() == 0x157a3807a48faa9dULL);
  CHECK(sm1.next() == 0xd573529b34a1d093ULL);
  CHECK(sm1.next() == 0x2f90b72e996dccbeULL);
}

TEST_CASE("xoshiro256** stream matches the reference") {
  Rng rng(42);
  CHECK(rng.next_u64() == 0x15780b2e0c2ec716ULL);
  CHECK(rng.next_u64() == 0x6104d9866d113a7eULL);
  CHECK(rng.next_u64() == 0xae17533239e499a1ULL);
  CHECK(rng.next_u64() == 0xecb8ad4703b360a1ULL);
  CHECK(rng.next_u64() == 0xfde6dc7fe2ec5e64ULL);

  CHECK(rng.next_double() == doctest::Approx(0.7697394604342425).epsilon(1e-15));
  CHECK(rng.next_double() == doctest::Approx(0.7192585778779156).epsilon(1e-15));
  CHECK(rng.next_double() == doctest::Approx(0.8500084439109727).epsilon(1e-15));
}

TEST_CASE("substream derivation matches the reference") {
  CHECK(derive_seed(7, tag8("mockproj")) == 0x5347bc207dbd08b0ULL);

  Rng rng = stream_for(123, {tag8("stratum "), 2, 0});
  CHECK(rng.next_u64() == 0x99cc3c488ef77ca1ULL);
  CHECK(rng.next_u64() == 0x54f36b344b6fd78bULL);
  CHECK(rng.next_u64() == 0x951cc7dd0823ac0bULL);
}

TEST_CASE("bounded draws match the reference and stay in range") {
  Rng rng(5);
  const std::vector<std::uint64_t> expected = {5, 6, 2, 3, 3, 5, 5, 6};
  for (const std::uint64_t e : expected) CHECK(rng.bounded(10) == e);

  Rng rng2(17);
  for (int i = 0; i < 1000; ++i) CHECK(rng2.bounded(7) < 7);
  CHECK(rng2.bounded(1) == 0);
}

TEST_CASE("shuffle matches the reference permutation") {
  std::vector<int> xs{0, 1, 2, 3, 4, 5, 6, 7, 8, 9};
  Rng rng(99);
  rng.shuffle(xs);
  CHECK(xs == std::vector<int>{4, 1, 9, 0, 7, 2, 5, 3, 6, 8});
}

TEST_CASE("shuffle is a permutation for any seed") {
  for (std::uint64_t seed = 0; seed < 50; ++seed) {
    std::vector<int> xs(101);
    for (int i = 0; i < 101; ++i) xs[i] = i;
    Rng rng(seed);
    rng.shuffle(xs);
    std::set<int> unique(xs.begin(), xs.end());
    CHECK(unique.size() == 101);
  }
}

TEST_CASE("distinct tags give distinct streams") {
  Rng a = stream_for(1, {kTagStratum, 0, 0});
  Rng b = stream_for(1, {kTagStratum, 0, 1});
  Rng c = stream_for(1, {kTagStratum, 1, 0});
  const auto va = a.next_u64(), vb = b.next_u64(), vc = c.next_u64();
  CHECK(va != vb);
  CHECK(va != vc);
  CHECK(vb != vc);
}

TEST_CASE("uniform and normal stay in sane ranges") {
  Rng rng(3);
  for (int i = 0; i < 1000; ++i) {
    const double u = rng.uniform(-2.5, 4.0);
    CHECK(u >= -2.5);
    CHECK(u < 4.0);
  }
  double sum = 0.0, sumsq = 0.0;
  const int n = 20000;
  Rng rng2(11);
  for (int i = 0; i < n; ++i) {
    const double z = rng2.next_normal();
    sum += z;
    sumsq += z * z;
  }
  CHECK(sum / n == doctest::Approx(0.0).epsilon(0.05));
  CHECK(std::abs(sumsq / n - 1.0) < 0.05);
}
