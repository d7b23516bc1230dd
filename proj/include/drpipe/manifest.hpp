#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include "drpipe/types.hpp"

namespace drpipe {

/// Per-stratum target counts for the train/test split, plus the sampling seed.
struct SplitSpec {
  std::size_t train_healthy = 1250;
  std::size_t train_per_unhealthy_grade = 250;
  std::size_t test_healthy = 1000;
  std::size_t test_per_unhealthy_grade = 1000;
  std::uint64_t seed = 0;

  std::size_t train_total() const { return train_healthy + 4 * train_per_unhealthy_grade; }
  std::size_t test_total() const { return test_healthy + 4 * test_per_unhealthy_grade; }

  friend bool operator==(const SplitSpec&, const SplitSpec&) = default;
};

struct SplitEntry {
  std::string id;
  SeverityGrade grade;
  BinaryLabel label;
  SplitTag split;

  friend bool operator==(const SplitEntry&, const SplitEntry&) = default;
};

/// Deterministic train/test assignment. Entries are kept sorted by
/// (split, grade, id); the checksum is the SHA-256 of the canonical entry
/// lines "<id>\t<grade>\t<label>\t<split>\n" in that order.
struct SplitManifest {
  SplitSpec spec;
  std::vector<SplitEntry> entries;
  std::string checksum_hex;

  std::size_t count(SplitTag split) const;
  std::size_t count(SplitTag split, SeverityGrade grade) const;

  friend bool operator==(const SplitManifest&, const SplitManifest&) = default;
};

/// Parses the label CSV (header "image,level", rows "<id>,<grade>").
/// The record path is the id stem; the batch driver resolves it against the
/// data root when it needs pixels.
std::vector<ImageRecord> load_label_manifest(const std::filesystem::path& path);

/// Draws exact per-stratum counts without replacement. Selection is seeded:
/// each stratum is sorted by id, shuffled by the (seed, grade, split)
/// substream, and the train pool is removed before test sampling, so the two
/// splits are disjoint and the chosen id set is independent of input order.
SplitManifest stratified_subsample(const std::vector<ImageRecord>& records, const SplitSpec& spec);

/// Canonical entry bytes hashed into the checksum.
std::string canonical_entry_bytes(const std::vector<SplitEntry>& sorted_entries);

void save_manifest(const SplitManifest& manifest, const std::filesystem::path& path);
SplitManifest load_manifest(const std::filesystem::path& path);

}  // namespace drpipe
