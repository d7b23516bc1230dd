#include <doctest.h>

#include <algorithm>
#include <set>

#include "drpipe/error.hpp"
#include "drpipe/manifest.hpp"
#include "drpipe/rng.hpp"
#include "support/fixtures.hpp"

using namespace drpipe;
using drpipe::testing::TempDir;

TEST_CASE("binarize: grade 0 is healthy, everything else unhealthy") {
  for (int g = 0; g < SeverityGrade::kCount; ++g) {
    const BinaryLabel label = binarize(SeverityGrade(g));
    if (g == 0)
      CHECK(label == BinaryLabel::healthy);
    else
      CHECK(label == BinaryLabel::unhealthy);
  }
  CHECK_THROWS_AS(SeverityGrade(5), GradeOutOfRange);
  CHECK_THROWS_AS(SeverityGrade(-1), GradeOutOfRange);
}

TEST_CASE("load_label_manifest parses the csv") {
  TempDir dir;
  testing::write_file(dir / "labels.csv",
                      "image,level\n10_left,0\n13_right,4\n15_left,2\r\n");
  const auto records = load_label_manifest(dir / "labels.csv");
  REQUIRE(records.size() == 3);
  CHECK(records[0].id == "10_left");
  CHECK(records[0].grade.value() == 0);
  CHECK(records[1].id == "13_right");
  CHECK(records[1].grade.value() == 4);
  CHECK(records[2].id == "15_left");  // CRLF tolerated
  CHECK(records[2].grade.value() == 2);
}

TEST_CASE("load_label_manifest error paths") {
  TempDir dir;
  CHECK_THROWS_AS(load_label_manifest(dir / "nope.csv"), IoError);

  testing::write_file(dir / "bad_cols.csv", "image,level\na,1,extra\n");
  CHECK_THROWS_AS(load_label_manifest(dir / "bad_cols.csv"), ParseError);

  testing::write_file(dir / "bad_grade.csv", "image,level\nx,7\n");
  CHECK_THROWS_AS(load_label_manifest(dir / "bad_grade.csv"), GradeOutOfRange);

  testing::write_file(dir / "not_a_number.csv", "image,level\nx,two\n");
  CHECK_THROWS_AS(load_label_manifest(dir / "not_a_number.csv"), ParseError);

  testing::write_file(dir / "dup.csv", "image,level\na,1\na,2\n");
  CHECK_THROWS_AS(load_label_manifest(dir / "dup.csv"), DuplicateId);
}

TEST_CASE("stratified_subsample hits the requested counts exactly") {
  // Sufficient corpus: grade 0 needs 1250 + 1000 = 2250 under the defaults.
  const auto records = testing::synthetic_records(2400);
  SplitSpec spec;
  spec.seed = 42;
  const SplitManifest m = stratified_subsample(records, spec);

  CHECK(m.count(SplitTag::train) == 2250);
  CHECK(m.count(SplitTag::test) == 5000);
  CHECK(m.count(SplitTag::train, SeverityGrade(0)) == 1250);
  CHECK(m.count(SplitTag::test, SeverityGrade(0)) == 1000);
  for (int g = 1; g <= 4; ++g) {
    CHECK(m.count(SplitTag::train, SeverityGrade(g)) == 250);
    CHECK(m.count(SplitTag::test, SeverityGrade(g)) == 1000);
  }

  std::set<std::string> train_ids, test_ids;
  for (const auto& e : m.entries) {
    (e.split == SplitTag::train ? train_ids : test_ids).insert(e.id);
    CHECK(e.label == binarize(e.grade));
  }
  CHECK(train_ids.size() == 2250);
  CHECK(test_ids.size() == 5000);
  for (const auto& id : train_ids) CHECK(test_ids.count(id) == 0);
}

TEST_CASE("subsample is deterministic and input-order independent") {
  auto records = testing::synthetic_records(40);
  SplitSpec spec;
  spec.train_healthy = 10;
  spec.train_per_unhealthy_grade = 5;
  spec.test_healthy = 8;
  spec.test_per_unhealthy_grade = 4;
  spec.seed = 7;

  const SplitManifest a = stratified_subsample(records, spec);
  const SplitManifest b = stratified_subsample(records, spec);
  CHECK(a == b);
  CHECK(a.checksum_hex == b.checksum_hex);

  Rng rng(123);
  rng.shuffle(records);
  const SplitManifest c = stratified_subsample(records, spec);
  CHECK(a == c);  // selection depends on ids, not input order

  SplitSpec other = spec;
  other.seed = 8;
  const SplitManifest d = stratified_subsample(records, other);
  CHECK(a.checksum_hex != d.checksum_hex);
}

TEST_CASE("subsample edge cases") {
  SUBCASE("all-zero spec gives an empty manifest") {
    SplitSpec spec;
    spec.train_healthy = spec.train_per_unhealthy_grade = 0;
    spec.test_healthy = spec.test_per_unhealthy_grade = 0;
    const SplitManifest m = stratified_subsample(testing::synthetic_records(3), spec);
    CHECK(m.entries.empty());
  }

  SUBCASE("insufficient stratum is reported with counts") {
    // Ample everywhere except only 100 grade-3 records.
    std::vector<ImageRecord> records;
    std::size_t grade3_kept = 0;
    for (const auto& r : testing::synthetic_records(2400)) {
      if (r.grade.value() == 3 && ++grade3_kept > 100) continue;
      records.push_back(r);
    }
    SplitSpec spec;  // default: grade 3 needs 250 + 1000
    try {
      stratified_subsample(records, spec);
      FAIL("expected InsufficientStratum");
    } catch (const InsufficientStratum& e) {
      CHECK(e.grade == 3);
      CHECK(e.have == 100);
      CHECK(e.need == 1250);
    }
  }

  SUBCASE("duplicate input ids are rejected") {
    auto records = testing::synthetic_records(2);
    records.push_back(records.front());
    CHECK_THROWS_AS(stratified_subsample(records, SplitSpec{0, 0, 0, 0, 0}), DuplicateId);
  }
}

TEST_CASE("manifest entries are sorted by (split, grade, id)") {
  const auto records = testing::synthetic_records(10);
  SplitSpec spec{3, 2, 2, 1, 5};
  const SplitManifest m = stratified_subsample(records, spec);
  for (std::size_t i = 1; i < m.entries.size(); ++i) {
    const auto& a = m.entries[i - 1];
    const auto& b = m.entries[i];
    const auto key = [](const SplitEntry& e) {
      return std::tuple(static_cast<int>(e.split), e.grade.value(), e.id);
    };
    CHECK(key(a) < key(b));
  }
}

TEST_CASE("manifest save/load round trip") {
  TempDir dir;
  const auto records = testing::synthetic_records(30);
  SplitSpec spec{5, 3, 4, 2, 99};
  const SplitManifest m = stratified_subsample(records, spec);

  save_manifest(m, dir / "m.tsv");
  const SplitManifest loaded = load_manifest(dir / "m.tsv");
  CHECK(loaded == m);

  // Byte-identical serialization across saves.
  save_manifest(m, dir / "m2.tsv");
  CHECK(testing::read_file(dir / "m.tsv") == testing::read_file(dir / "m2.tsv"));
}

TEST_CASE("empty manifest round trip") {
  TempDir dir;
  const SplitManifest m = stratified_subsample({}, SplitSpec{0, 0, 0, 0, 1});
  save_manifest(m, dir / "empty.tsv");
  CHECK(load_manifest(dir / "empty.tsv") == m);
}

TEST_CASE("tampered manifest fails to load") {
  TempDir dir;
  const auto records = testing::synthetic_records(10);
  const SplitManifest m = stratified_subsample(records, SplitSpec{2, 1, 2, 1, 4});
  save_manifest(m, dir / "m.tsv");

  SUBCASE("entry no longer matching the checksum") {
    std::string text = testing::read_file(dir / "m.tsv");
    // Bump the last character of the final id; order and format stay valid.
    const auto pos = text.rfind("rec1000");
    REQUIRE(pos != std::string::npos);
    text[pos + 6] = 'z';
    testing::write_file(dir / "tampered.tsv", text);
    CHECK_THROWS_AS(load_manifest(dir / "tampered.tsv"), ChecksumMismatch);
  }

  SUBCASE("edited checksum header") {
    std::string text = testing::read_file(dir / "m.tsv");
    const auto pos = text.find("checksum = ");
    REQUIRE(pos != std::string::npos);
    text[pos + 11] = text[pos + 11] == '0' ? '1' : '0';
    testing::write_file(dir / "tampered.tsv", text);
    CHECK_THROWS_AS(load_manifest(dir / "tampered.tsv"), ChecksumMismatch);
  }

  SUBCASE("reordered entries break canonical order") {
    std::string text = testing::read_file(dir / "m.tsv");
    const auto sep = text.find("---\n");
    REQUIRE(sep != std::string::npos);
    const auto first_end = text.find('\n', sep + 4);
    const auto second_end = text.find('\n', first_end + 1);
    const std::string first = text.substr(sep + 4, first_end - (sep + 4) + 1);
    const std::string second = text.substr(first_end + 1, second_end - first_end);
    text.replace(sep + 4, first.size() + second.size(), second + first);
    testing::write_file(dir / "tampered.tsv", text);
    CHECK_THROWS_AS(load_manifest(dir / "tampered.tsv"), ParseError);
  }

  SUBCASE("missing file") { CHECK_THROWS_AS(load_manifest(dir / "missing.tsv"), IoError); }
}
