#pragma once

#include <cstdint>
#include <string>

#include "drpipe/error.hpp"

namespace drpipe {

/// Disease severity grade: 0 normal, 1 mild, 2 moderate, 3 severe, 4 proliferative.
class SeverityGrade {
 public:
  static constexpr int kCount = 5;

  explicit SeverityGrade(int value) : value_(value) {
    if (value < 0 || value >= kCount) throw GradeOutOfRange(value);
  }

  int value() const { return value_; }

  friend bool operator==(SeverityGrade a, SeverityGrade b) { return a.value_ == b.value_; }
  friend bool operator!=(SeverityGrade a, SeverityGrade b) { return a.value_ != b.value_; }
  friend bool operator<(SeverityGrade a, SeverityGrade b) { return a.value_ < b.value_; }

 private:
  int value_;
};

enum class BinaryLabel : std::uint8_t { healthy = 0, unhealthy = 1 };

/// Grade 0 is healthy, everything else unhealthy.
inline BinaryLabel binarize(SeverityGrade grade) {
  return grade.value() == 0 ? BinaryLabel::healthy : BinaryLabel::unhealthy;
}

inline const char* to_string(BinaryLabel label) {
  return label == BinaryLabel::healthy ? "healthy" : "unhealthy";
}

enum class SplitTag : std::uint8_t { train = 0, test = 1 };

inline const char* to_string(SplitTag tag) { return tag == SplitTag::train ? "train" : "test"; }

/// One labeled fundus image in the source corpus.
struct ImageRecord {
  std::string id;    // image stem, unique within a manifest
  std::string path;  // storage path (may be relative to the data root)
  SeverityGrade grade;
};

}  // namespace drpipe
