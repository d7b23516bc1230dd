#pragma once

#include <Eigen/Core>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "drpipe/head.hpp"
#include "drpipe/types.hpp"

namespace drpipe {

/// Binary confusion counts; the positive class is `unhealthy`.
struct ConfusionMatrix {
  std::size_t tp = 0;
  std::size_t fp = 0;
  std::size_t tn = 0;
  std::size_t fn = 0;

  std::size_t total() const { return tp + fp + tn + fn; }

  friend bool operator==(const ConfusionMatrix&, const ConfusionMatrix&) = default;
};

struct EvalReport {
  double accuracy = 0.0;
  double mean_loss = 0.0;
  std::optional<double> sensitivity;  // absent when tp + fn == 0
  std::optional<double> specificity;  // absent when tn + fp == 0
  ConfusionMatrix confusion;
  std::map<int, double> per_severity_accuracy;

  // Run context rendered into the comparison table.
  std::size_t train_size = 0;
  double eta_max = 0.0;
  std::string schedule;

  // Digests of everything this evaluation consumed.
  std::string split_checksum;
  std::string preprocess_digest;
  std::string backbone_fingerprint;
  std::string head_digest;

  friend bool operator==(const EvalReport&, const EvalReport&) = default;
};

struct Predictions {
  std::vector<BinaryLabel> labels;
  Eigen::MatrixXf probabilities;  // N x 2
};

/// Argmax of the head's probabilities; exact ties go to healthy.
Predictions predict(const HeadParams& params, const Eigen::MatrixXf& features);

ConfusionMatrix confusion(const std::vector<BinaryLabel>& predictions,
                          const std::vector<BinaryLabel>& truth);

/// Fills the metric fields from the counts; undefined ratios stay absent.
EvalReport metrics(const ConfusionMatrix& cm, const std::vector<double>& per_sample_losses);

/// Fraction of correct binary predictions among samples of each grade present.
std::map<int, double> per_severity_breakdown(const std::vector<BinaryLabel>& predictions,
                                             const std::vector<BinaryLabel>& truth,
                                             const std::vector<SeverityGrade>& grades);

enum class ReportFormat { structured, table };

/// structured: machine-readable "key = value" lines (stable key set, parses
/// back with parse_structured_report). table: fixed-layout comparison table
/// with the published baseline column embedded as constants.
std::string render_report(const EvalReport& report, ReportFormat format);

EvalReport parse_structured_report(const std::string& text);

}  // namespace drpipe
