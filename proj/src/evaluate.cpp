#include "drpipe/evaluate.hpp"

#include <sstream>

#include "drpipe/strings.hpp"

namespace drpipe {
namespace {

// Published baseline column, embedded as fixed constants.
constexpr const char* kBaselineTrainSize = "More than 35126 fundus images";
constexpr const char* kBaselineOptimizer = "ADAM";
constexpr const char* kBaselineAccuracy = "87.12%";
constexpr const char* kNotSpecified = "Not specified";

std::string pad(std::string s, std::size_t width) {
  if (s.size() < width) s.append(width - s.size(), ' ');
  return s;
}

std::string table_row(const std::string& label, const std::string& baseline,
                      const std::string& ours) {
  return pad(label, 24) + pad(baseline, 32) + ours + "\n";
}

}  // namespace

Predictions predict(const HeadParams& params, const Eigen::MatrixXf& features) {
  if (features.cols() != params.feature_dim())
    throw ShapeMismatch("feature width does not match the head");

  Predictions out;
  const Eigen::Index n = features.rows();
  out.probabilities.resize(n, kNumClasses);
  out.labels.reserve(static_cast<std::size_t>(n));
  for (Eigen::Index i = 0; i < n; ++i) {
    const Vector2<float> p = forward(params, features.row(i).transpose().eval());
    out.probabilities.row(i) = p.transpose();
    out.labels.push_back(p[kClassHealthy] >= p[kClassUnhealthy] ? BinaryLabel::healthy
                                                                : BinaryLabel::unhealthy);
  }
  return out;
}

ConfusionMatrix confusion(const std::vector<BinaryLabel>& predictions,
                          const std::vector<BinaryLabel>& truth) {
  if (predictions.size() != truth.size())
    throw ShapeMismatch("predictions/truth length mismatch");
  if (predictions.empty()) throw Error("confusion: no samples");

  ConfusionMatrix cm;
  for (std::size_t i = 0; i < predictions.size(); ++i) {
    const bool pred_pos = predictions[i] == BinaryLabel::unhealthy;
    const bool true_pos = truth[i] == BinaryLabel::unhealthy;
    if (pred_pos && true_pos)
      ++cm.tp;
    else if (pred_pos && !true_pos)
      ++cm.fp;
    else if (!pred_pos && true_pos)
      ++cm.fn;
    else
      ++cm.tn;
  }
  return cm;
}

EvalReport metrics(const ConfusionMatrix& cm, const std::vector<double>& per_sample_losses) {
  if (cm.total() < 1) throw Error("metrics: empty confusion matrix");

  EvalReport r;
  r.confusion = cm;
  r.accuracy = static_cast<double>(cm.tp + cm.tn) / static_cast<double>(cm.total());
  if (cm.tp + cm.fn > 0)
    r.sensitivity = static_cast<double>(cm.tp) / static_cast<double>(cm.tp + cm.fn);
  if (cm.tn + cm.fp > 0)
    r.specificity = static_cast<double>(cm.tn) / static_cast<double>(cm.tn + cm.fp);

  double sum = 0.0;
  for (const double l : per_sample_losses) sum += l;
  r.mean_loss = per_sample_losses.empty() ? 0.0 : sum / static_cast<double>(per_sample_losses.size());
  return r;
}

std::map<int, double> per_severity_breakdown(const std::vector<BinaryLabel>& predictions,
                                             const std::vector<BinaryLabel>& truth,
                                             const std::vector<SeverityGrade>& grades) {
  if (predictions.size() != truth.size() || predictions.size() != grades.size())
    throw ShapeMismatch("per_severity_breakdown: array length mismatch");

  std::map<int, std::pair<std::size_t, std::size_t>> counts;  // grade -> (correct, total)
  for (std::size_t i = 0; i < predictions.size(); ++i) {
    auto& [correct, total] = counts[grades[i].value()];
    ++total;
    if (predictions[i] == truth[i]) ++correct;
  }

  std::map<int, double> out;
  for (const auto& [grade, ct] : counts)
    out[grade] = static_cast<double>(ct.first) / static_cast<double>(ct.second);
  return out;
}

std::string render_report(const EvalReport& r, ReportFormat format) {
  if (format == ReportFormat::structured) {
    std::ostringstream out;
    out << "# evaluation report v1\n";
    out << "accuracy = " << format_double(r.accuracy) << "\n";
    out << "mean_loss = " << format_double(r.mean_loss) << "\n";
    out << "loss_percent = " << format_double(r.mean_loss * 100.0) << "\n";
    if (r.sensitivity) out << "sensitivity = " << format_double(*r.sensitivity) << "\n";
    if (r.specificity) out << "specificity = " << format_double(*r.specificity) << "\n";
    out << "tp = " << r.confusion.tp << "\n";
    out << "fp = " << r.confusion.fp << "\n";
    out << "tn = " << r.confusion.tn << "\n";
    out << "fn = " << r.confusion.fn << "\n";
    for (const auto& [grade, acc] : r.per_severity_accuracy)
      out << "per_severity_accuracy." << grade << " = " << format_double(acc) << "\n";
    out << "train_size = " << r.train_size << "\n";
    out << "eta_max = " << format_double(r.eta_max) << "\n";
    out << "schedule = " << r.schedule << "\n";
    out << "split_checksum = " << r.split_checksum << "\n";
    out << "preprocess_digest = " << r.preprocess_digest << "\n";
    out << "backbone_fingerprint = " << r.backbone_fingerprint << "\n";
    out << "head_digest = " << r.head_digest << "\n";
    return std::move(out).str();
  }

  const std::string lr_cell =
      r.schedule == "constant" ? "Constant rate of " + format_double(r.eta_max)
                               : "Ascending rate of " + format_double(r.eta_max);
  std::string out;
  out += table_row("Points of comparison", "Baseline", "This run");
  out += table_row("Size of training data", kBaselineTrainSize,
                   std::to_string(r.train_size) + " fundus images");
  out += table_row("Optimizer", kBaselineOptimizer, "SGD");
  out += table_row("Learning Rate", kNotSpecified, lr_cell);
  out += table_row("Loss function", kNotSpecified, "Cosine loss function");
  out += table_row("Data Augmentation Used", "Yes", "No");
  out += table_row("Accuracy", kBaselineAccuracy, format_percent(r.accuracy));
  out += table_row("Loss", kNotSpecified, format_percent(r.mean_loss));
  out += table_row("Sensitivity", kNotSpecified,
                   r.sensitivity ? format_percent(*r.sensitivity) : "n/a");
  out += table_row("Specificity", kNotSpecified,
                   r.specificity ? format_percent(*r.specificity) : "n/a");
  return out;
}

EvalReport parse_structured_report(const std::string& text) {
  std::istringstream in(text);
  std::string line;
  if (!std::getline(in, line) || trim(line) != "# evaluation report v1")
    throw ParseError("unrecognized report header");

  EvalReport r;
  while (std::getline(in, line)) {
    const std::string_view sv = trim(line);
    if (sv.empty()) continue;
    const auto eq = sv.find(" = ");
    if (eq == std::string_view::npos) throw ParseError("bad report line: '" + line + "'");
    const std::string key(trim(sv.substr(0, eq)));
    const std::string value(trim(sv.substr(eq + 3)));

    if (key == "accuracy")
      r.accuracy = parse_double(value);
    else if (key == "mean_loss")
      r.mean_loss = parse_double(value);
    else if (key == "loss_percent")
      ;  // derived from mean_loss on render
    else if (key == "sensitivity")
      r.sensitivity = parse_double(value);
    else if (key == "specificity")
      r.specificity = parse_double(value);
    else if (key == "tp")
      r.confusion.tp = parse_u64(value);
    else if (key == "fp")
      r.confusion.fp = parse_u64(value);
    else if (key == "tn")
      r.confusion.tn = parse_u64(value);
    else if (key == "fn")
      r.confusion.fn = parse_u64(value);
    else if (key.rfind("per_severity_accuracy.", 0) == 0) {
      const int grade = static_cast<int>(parse_u64(key.substr(22)));
      r.per_severity_accuracy[grade] = parse_double(value);
    } else if (key == "train_size")
      r.train_size = parse_u64(value);
    else if (key == "eta_max")
      r.eta_max = parse_double(value);
    else if (key == "schedule")
      r.schedule = value;
    else if (key == "split_checksum")
      r.split_checksum = value;
    else if (key == "preprocess_digest")
      r.preprocess_digest = value;
    else if (key == "backbone_fingerprint")
      r.backbone_fingerprint = value;
    else if (key == "head_digest")
      r.head_digest = value;
    else
      throw ParseError("unknown report key: '" + key + "'");
  }
  return r;
}

}  // namespace drpipe
