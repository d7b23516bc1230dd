#include "drpipe/manifest.hpp"

#include <algorithm>
#include <fstream>
#include <sstream>
#include <unordered_set>

#include "drpipe/digest.hpp"
#include "drpipe/error.hpp"
#include "drpipe/rng.hpp"

namespace drpipe {
namespace {

void sort_canonical(std::vector<SplitEntry>& entries) {
  std::sort(entries.begin(), entries.end(), [](const SplitEntry& a, const SplitEntry& b) {
    if (a.split != b.split) return static_cast<int>(a.split) < static_cast<int>(b.split);
    if (a.grade != b.grade) return a.grade < b.grade;
    return a.id < b.id;
  });
}

std::string strip_cr(std::string line) {
  if (!line.empty() && line.back() == '\r') line.pop_back();
  return line;
}

int parse_int_field(const std::string& s, const char* what) {
  std::size_t pos = 0;
  int v = 0;
  try {
    v = std::stoi(s, &pos);
  } catch (const std::exception&) {
    throw ParseError(std::string("expected integer ") + what + ", got '" + s + "'");
  }
  if (pos != s.size())
    throw ParseError(std::string("trailing characters after ") + what + " in '" + s + "'");
  return v;
}

std::uint64_t parse_u64_field(const std::string& s, const char* what) {
  std::size_t pos = 0;
  unsigned long long v = 0;
  try {
    v = std::stoull(s, &pos);
  } catch (const std::exception&) {
    throw ParseError(std::string("expected unsigned integer ") + what + ", got '" + s + "'");
  }
  if (pos != s.size())
    throw ParseError(std::string("trailing characters after ") + what + " in '" + s + "'");
  return v;
}

}  // namespace

std::size_t SplitManifest::count(SplitTag split) const {
  return static_cast<std::size_t>(
      std::count_if(entries.begin(), entries.end(),
                    [&](const SplitEntry& e) { return e.split == split; }));
}

std::size_t SplitManifest::count(SplitTag split, SeverityGrade grade) const {
  return static_cast<std::size_t>(
      std::count_if(entries.begin(), entries.end(),
                    [&](const SplitEntry& e) { return e.split == split && e.grade == grade; }));
}

std::vector<ImageRecord> load_label_manifest(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open label manifest: " + path.string());

  std::vector<ImageRecord> records;
  std::unordered_set<std::string> seen;
  std::string line;
  std::size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    line = strip_cr(std::move(line));
    if (lineno == 1) continue;  // header "image,level"
    if (line.empty()) continue;

    const auto comma = line.find(',');
    if (comma == std::string::npos || line.find(',', comma + 1) != std::string::npos)
      throw ParseError("malformed row (expected 2 columns) at line " + std::to_string(lineno) +
                       ": '" + line + "'");
    std::string id = line.substr(0, comma);
    const std::string grade_str = line.substr(comma + 1);
    if (id.empty()) throw ParseError("empty image id at line " + std::to_string(lineno));

    const int grade = parse_int_field(grade_str, "grade");
    if (grade < 0 || grade >= SeverityGrade::kCount) throw GradeOutOfRange(grade);
    if (!seen.insert(id).second) throw DuplicateId(id);
    records.push_back(ImageRecord{id, id, SeverityGrade(grade)});
  }
  return records;
}

SplitManifest stratified_subsample(const std::vector<ImageRecord>& records, const SplitSpec& spec) {
  std::vector<std::vector<std::string>> strata(SeverityGrade::kCount);
  {
    std::unordered_set<std::string> seen;
    for (const auto& rec : records) {
      if (!seen.insert(rec.id).second) throw DuplicateId(rec.id);
      strata[static_cast<std::size_t>(rec.grade.value())].push_back(rec.id);
    }
  }

  SplitManifest manifest;
  manifest.spec = spec;

  for (int grade = 0; grade < SeverityGrade::kCount; ++grade) {
    const std::size_t n_train = grade == 0 ? spec.train_healthy : spec.train_per_unhealthy_grade;
    const std::size_t n_test = grade == 0 ? spec.test_healthy : spec.test_per_unhealthy_grade;
    auto& ids = strata[static_cast<std::size_t>(grade)];
    if (ids.size() < n_train + n_test)
      throw InsufficientStratum(grade, ids.size(), n_train + n_test);

    // Canonical order first so the selected set is independent of input order.
    std::sort(ids.begin(), ids.end());
    auto train_rng = stream_for(spec.seed,
                                {kTagStratum, static_cast<std::uint64_t>(grade),
                                 static_cast<std::uint64_t>(SplitTag::train)});
    train_rng.shuffle(ids);

    const SeverityGrade g(grade);
    for (std::size_t i = 0; i < n_train; ++i)
      manifest.entries.push_back(SplitEntry{ids[i], g, binarize(g), SplitTag::train});

    // Test images come from the remaining pool, re-sorted and independently
    // shuffled so the draw depends only on membership, not the train ordering.
    std::vector<std::string> rest(ids.begin() + static_cast<std::ptrdiff_t>(n_train), ids.end());
    std::sort(rest.begin(), rest.end());
    auto test_rng = stream_for(spec.seed,
                               {kTagStratum, static_cast<std::uint64_t>(grade),
                                static_cast<std::uint64_t>(SplitTag::test)});
    test_rng.shuffle(rest);
    for (std::size_t i = 0; i < n_test; ++i)
      manifest.entries.push_back(SplitEntry{rest[i], g, binarize(g), SplitTag::test});
  }

  sort_canonical(manifest.entries);
  manifest.checksum_hex = to_hex(sha256(canonical_entry_bytes(manifest.entries)));
  return manifest;
}

std::string canonical_entry_bytes(const std::vector<SplitEntry>& sorted_entries) {
  std::string bytes;
  for (const auto& e : sorted_entries) {
    bytes += e.id;
    bytes += '\t';
    bytes += static_cast<char>('0' + e.grade.value());
    bytes += '\t';
    bytes += to_string(e.label);
    bytes += '\t';
    bytes += to_string(e.split);
    bytes += '\n';
  }
  return bytes;
}

void save_manifest(const SplitManifest& manifest, const std::filesystem::path& path) {
  std::ofstream out(path, std::ios::binary);  // binary: LF endings everywhere
  if (!out) throw IoError("cannot write manifest: " + path.string());

  out << "# split manifest v1\n";
  out << "train_healthy = " << manifest.spec.train_healthy << "\n";
  out << "train_per_unhealthy_grade = " << manifest.spec.train_per_unhealthy_grade << "\n";
  out << "test_healthy = " << manifest.spec.test_healthy << "\n";
  out << "test_per_unhealthy_grade = " << manifest.spec.test_per_unhealthy_grade << "\n";
  out << "seed = " << manifest.spec.seed << "\n";
  out << "entries = " << manifest.entries.size() << "\n";
  out << "checksum = " << manifest.checksum_hex << "\n";
  out << "---\n";
  out << canonical_entry_bytes(manifest.entries);
  if (!out) throw IoError("write failed: " + path.string());
}

SplitManifest load_manifest(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open manifest: " + path.string());

  SplitManifest manifest;
  std::string line;
  std::size_t declared_entries = 0;
  bool in_header = true;
  std::size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    line = strip_cr(std::move(line));
    if (lineno == 1) {
      if (line != "# split manifest v1") throw ParseError("unrecognized manifest header");
      continue;
    }
    if (in_header) {
      if (line == "---") {
        in_header = false;
        continue;
      }
      const auto eq = line.find(" = ");
      if (eq == std::string::npos) throw ParseError("bad manifest header line: '" + line + "'");
      const std::string key = line.substr(0, eq);
      const std::string value = line.substr(eq + 3);
      if (key == "train_healthy")
        manifest.spec.train_healthy = parse_u64_field(value, key.c_str());
      else if (key == "train_per_unhealthy_grade")
        manifest.spec.train_per_unhealthy_grade = parse_u64_field(value, key.c_str());
      else if (key == "test_healthy")
        manifest.spec.test_healthy = parse_u64_field(value, key.c_str());
      else if (key == "test_per_unhealthy_grade")
        manifest.spec.test_per_unhealthy_grade = parse_u64_field(value, key.c_str());
      else if (key == "seed")
        manifest.spec.seed = parse_u64_field(value, key.c_str());
      else if (key == "entries")
        declared_entries = parse_u64_field(value, key.c_str());
      else if (key == "checksum")
        manifest.checksum_hex = value;
      else
        throw ParseError("unknown manifest header key: '" + key + "'");
      continue;
    }

    if (line.empty()) continue;
    std::istringstream fields(line);
    std::string id, grade_str, label_str, split_str;
    if (!std::getline(fields, id, '\t') || !std::getline(fields, grade_str, '\t') ||
        !std::getline(fields, label_str, '\t') || !std::getline(fields, split_str))
      throw ParseError("bad manifest entry at line " + std::to_string(lineno));

    const int grade = parse_int_field(grade_str, "grade");
    if (grade < 0 || grade >= SeverityGrade::kCount) throw GradeOutOfRange(grade);
    const SeverityGrade g(grade);

    BinaryLabel label;
    if (label_str == "healthy")
      label = BinaryLabel::healthy;
    else if (label_str == "unhealthy")
      label = BinaryLabel::unhealthy;
    else
      throw ParseError("bad label '" + label_str + "' at line " + std::to_string(lineno));
    if (label != binarize(g))
      throw ParseError("label does not match grade at line " + std::to_string(lineno));

    SplitTag split;
    if (split_str == "train")
      split = SplitTag::train;
    else if (split_str == "test")
      split = SplitTag::test;
    else
      throw ParseError("bad split tag '" + split_str + "' at line " + std::to_string(lineno));

    manifest.entries.push_back(SplitEntry{std::move(id), g, label, split});
  }

  if (in_header) throw ParseError("manifest missing '---' separator");
  if (manifest.entries.size() != declared_entries)
    throw ParseError("manifest entry count mismatch: declared " + std::to_string(declared_entries) +
                     ", found " + std::to_string(manifest.entries.size()));

  std::vector<SplitEntry> sorted = manifest.entries;
  sort_canonical(sorted);
  if (sorted != manifest.entries) throw ParseError("manifest entries not in canonical order");

  const std::string recomputed = to_hex(sha256(canonical_entry_bytes(manifest.entries)));
  if (recomputed != manifest.checksum_hex)
    throw ChecksumMismatch("manifest checksum mismatch: stored " + manifest.checksum_hex +
                           ", recomputed " + recomputed);
  return manifest;
}

}  // namespace drpipe
