#pragma once

#include <Eigen/Core>
#include <cmath>
#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include "drpipe/error.hpp"
#include "drpipe/rng.hpp"
#include "drpipe/types.hpp"

namespace drpipe {

// Class order convention, fixed everywhere: index 0 = healthy, 1 = unhealthy.
inline constexpr int kClassHealthy = 0;
inline constexpr int kClassUnhealthy = 1;
inline constexpr int kNumClasses = 2;

template <typename Scalar>
using MatrixX = Eigen::Matrix<Scalar, Eigen::Dynamic, Eigen::Dynamic>;
template <typename Scalar>
using VectorX = Eigen::Matrix<Scalar, Eigen::Dynamic, 1>;
template <typename Scalar>
using Vector2 = Eigen::Matrix<Scalar, 2, 1>;

/// Trainable head: ReLU hidden layer feeding a 2-way softmax.
template <typename Scalar>
struct HeadParamsT {
  MatrixX<Scalar> W1;  // H x D
  VectorX<Scalar> b1;  // H
  MatrixX<Scalar> W2;  // 2 x H
  Vector2<Scalar> b2;

  Eigen::Index feature_dim() const { return W1.cols(); }
  Eigen::Index hidden_width() const { return W1.rows(); }

  bool same_shape_as(const HeadParamsT& o) const {
    return W1.rows() == o.W1.rows() && W1.cols() == o.W1.cols() && W2.rows() == o.W2.rows() &&
           W2.cols() == o.W2.cols();
  }

  friend bool operator==(const HeadParamsT& a, const HeadParamsT& b) {
    return a.same_shape_as(b) && a.W1 == b.W1 && a.b1 == b.b1 && a.W2 == b.W2 && a.b2 == b.b2;
  }
};

using HeadParams = HeadParamsT<float>;

struct TrainConfig {
  int hidden_width = 256;
  int epochs = 50;  // 0 is allowed and performs no updates
  int batch_size = 32;
  double eta_max = 0.0005;
  enum class Schedule { linear_ascent, constant } schedule = Schedule::linear_ascent;
  std::uint64_t seed = 0;

  void validate() const {
    if (hidden_width < 1) throw Error("hidden_width must be >= 1");
    if (epochs < 0) throw Error("epochs must be >= 0");
    if (batch_size < 1) throw Error("batch_size must be >= 1");
    if (eta_max <= 0) throw Error("eta_max must be > 0");
  }
};

inline const char* to_string(TrainConfig::Schedule s) {
  return s == TrainConfig::Schedule::linear_ascent ? "linear_ascent" : "constant";
}

struct TrainHistory {
  std::vector<double> mean_loss;       // per epoch, mean over samples
  std::vector<double> train_accuracy;  // per epoch, full-pass after the updates
  std::vector<double> learning_rate;   // per epoch, rate used at its last step
};

/// Seeded uniform(-sqrt(6/fan_in), +sqrt(6/fan_in)) weights, zero biases.
/// Draws are generated in double and cast, so every Scalar sees the same values.
template <typename Scalar>
HeadParamsT<Scalar> init_head(Eigen::Index feature_dim, Eigen::Index hidden_width,
                              std::uint64_t seed) {
  if (feature_dim < 1 || hidden_width < 1) throw Error("init_head: dims must be >= 1");
  HeadParamsT<Scalar> p;
  p.W1.resize(hidden_width, feature_dim);
  p.b1 = VectorX<Scalar>::Zero(hidden_width);
  p.W2.resize(kNumClasses, hidden_width);
  p.b2.setZero();

  const double lim1 = std::sqrt(6.0 / static_cast<double>(feature_dim));
  Rng rng1 = stream_for(seed, {kTagHeadInit, 1});
  for (Eigen::Index r = 0; r < p.W1.rows(); ++r)
    for (Eigen::Index c = 0; c < p.W1.cols(); ++c)
      p.W1(r, c) = static_cast<Scalar>(rng1.uniform(-lim1, lim1));

  const double lim2 = std::sqrt(6.0 / static_cast<double>(hidden_width));
  Rng rng2 = stream_for(seed, {kTagHeadInit, 2});
  for (Eigen::Index r = 0; r < p.W2.rows(); ++r)
    for (Eigen::Index c = 0; c < p.W2.cols(); ++c)
      p.W2(r, c) = static_cast<Scalar>(rng2.uniform(-lim2, lim2));
  return p;
}

/// Numerically stable 2-way softmax (max subtraction).
template <typename Derived>
Vector2<typename Derived::Scalar> softmax2(const Eigen::MatrixBase<Derived>& z) {
  using Scalar = typename Derived::Scalar;
  const Scalar m = z.maxCoeff();
  Vector2<Scalar> e;
  e[0] = std::exp(z[0] - m);
  e[1] = std::exp(z[1] - m);
  return e / (e[0] + e[1]);
}

template <typename Scalar>
struct ForwardTrace {
  VectorX<Scalar> hidden;  // post-ReLU
  Vector2<Scalar> logits;
  Vector2<Scalar> probs;
};

template <typename Scalar, typename Derived>
ForwardTrace<Scalar> forward_trace(const HeadParamsT<Scalar>& params,
                                   const Eigen::MatrixBase<Derived>& feature) {
  if (feature.size() != params.feature_dim())
    throw ShapeMismatch("feature length does not match the head's input width");
  if (!feature.allFinite()) throw NonFiniteError("non-finite feature input");

  ForwardTrace<Scalar> t;
  t.hidden = ((params.W1 * feature).eval() + params.b1).cwiseMax(Scalar(0));
  t.logits = params.W2 * t.hidden + params.b2;
  t.probs = softmax2(t.logits);
  return t;
}

/// Probability 2-vector for one feature. Non-negative, sums to 1.
template <typename Scalar, typename Derived>
Vector2<Scalar> forward(const HeadParamsT<Scalar>& params,
                        const Eigen::MatrixBase<Derived>& feature) {
  return forward_trace(params, feature).probs;
}

/// 1 - cos(p, t). Zero iff p is a positive multiple of t; 1 when orthogonal.
/// Invariant under positive rescaling of p.
template <typename DerivedP, typename DerivedT>
typename DerivedP::Scalar cosine_loss(const Eigen::MatrixBase<DerivedP>& p,
                                      const Eigen::MatrixBase<DerivedT>& t) {
  using Scalar = typename DerivedP::Scalar;
  const Scalar pn = p.norm();
  const Scalar tn = t.norm();
  if (pn == Scalar(0)) throw Error("cosine_loss: zero-norm prediction");
  if (tn == Scalar(0)) throw Error("cosine_loss: zero-norm target");
  return Scalar(1) - p.dot(t) / (pn * tn);
}

template <typename Scalar>
struct HeadGrad {
  MatrixX<Scalar> W1;
  VectorX<Scalar> b1;
  MatrixX<Scalar> W2;
  Vector2<Scalar> b2;
};

/// Analytic gradient of the mean cosine loss over a batch, backpropagated
/// through softmax, linear and ReLU layers (subgradient 0 at the ReLU kink).
///
///   L = 1 - (p . t)/|p|          (targets are one-hot, |t| = 1)
///   dL/dp = -t/|p| + (p . t) p / |p|^3
///   dL/dz_j = p_j (dL/dp_j - sum_i dL/dp_i p_i)   (softmax Jacobian)
///
/// Returns the gradient and the mean batch loss.
template <typename Scalar>
std::pair<HeadGrad<Scalar>, Scalar> batch_gradient(const HeadParamsT<Scalar>& params,
                                                   const MatrixX<Scalar>& features,
                                                   const MatrixX<Scalar>& targets) {
  const Eigen::Index n = features.rows();
  if (n < 1) throw Error("batch_gradient: empty batch");
  if (features.cols() != params.feature_dim() || targets.rows() != n ||
      targets.cols() != kNumClasses)
    throw ShapeMismatch("batch_gradient: inconsistent shapes");

  HeadGrad<Scalar> g;
  g.W1 = MatrixX<Scalar>::Zero(params.W1.rows(), params.W1.cols());
  g.b1 = VectorX<Scalar>::Zero(params.b1.size());
  g.W2 = MatrixX<Scalar>::Zero(params.W2.rows(), params.W2.cols());
  g.b2.setZero();

  Scalar loss_sum = 0;
  for (Eigen::Index i = 0; i < n; ++i) {
    const VectorX<Scalar> f = features.row(i).transpose();
    const Vector2<Scalar> t = targets.row(i).transpose();
    const ForwardTrace<Scalar> tr = forward_trace(params, f);
    const Vector2<Scalar>& p = tr.probs;

    loss_sum += cosine_loss(p, t);

    const Scalar pn = p.norm();
    const Vector2<Scalar> dp = -t / pn + (p.dot(t) / (pn * pn * pn)) * p;
    const Scalar mix = dp.dot(p);
    const Vector2<Scalar> dz = p.cwiseProduct(dp - Vector2<Scalar>::Constant(mix));

    g.W2.noalias() += dz * tr.hidden.transpose();
    g.b2 += dz;
    VectorX<Scalar> dh = params.W2.transpose() * dz;
    for (Eigen::Index j = 0; j < dh.size(); ++j)
      if (tr.hidden[j] <= Scalar(0)) dh[j] = 0;
    g.W1.noalias() += dh * f.transpose();
    g.b1 += dh;
  }

  const Scalar inv_n = Scalar(1) / static_cast<Scalar>(n);
  g.W1 *= inv_n;
  g.b1 *= inv_n;
  g.W2 *= inv_n;
  g.b2 *= inv_n;
  const Scalar mean_loss = loss_sum * inv_n;
  if (!std::isfinite(static_cast<double>(mean_loss)) || !g.W1.allFinite() || !g.W2.allFinite())
    throw NonFiniteError("batch_gradient: non-finite intermediate values");
  return {std::move(g), mean_loss};
}

/// Step learning rate. linear_ascent climbs linearly and ends exactly at
/// eta_max on the final step; constant always returns eta_max.
inline double lr_schedule(std::size_t step, std::size_t total_steps, const TrainConfig& cfg) {
  if (total_steps == 0 || step >= total_steps) throw Error("lr_schedule: step out of range");
  if (cfg.schedule == TrainConfig::Schedule::constant) return cfg.eta_max;
  return cfg.eta_max * static_cast<double>(step + 1) / static_cast<double>(total_steps);
}

/// One-hot targets for binary labels, healthy -> class 0.
template <typename Scalar>
MatrixX<Scalar> one_hot_targets(const std::vector<BinaryLabel>& labels) {
  MatrixX<Scalar> t = MatrixX<Scalar>::Zero(static_cast<Eigen::Index>(labels.size()), kNumClasses);
  for (std::size_t i = 0; i < labels.size(); ++i)
    t(static_cast<Eigen::Index>(i),
      labels[i] == BinaryLabel::healthy ? kClassHealthy : kClassUnhealthy) = Scalar(1);
  return t;
}

/// Mini-batch SGD with a seeded per-epoch shuffle. Deterministic for fixed
/// inputs and config; the feature matrix is never modified.
template <typename Scalar>
std::pair<HeadParamsT<Scalar>, TrainHistory> train_head(const MatrixX<Scalar>& features,
                                                        const std::vector<BinaryLabel>& labels,
                                                        const TrainConfig& cfg) {
  cfg.validate();
  const Eigen::Index n = features.rows();
  if (static_cast<std::size_t>(n) != labels.size())
    throw ShapeMismatch("train_head: features/labels length mismatch");
  if (n < cfg.batch_size) throw Error("train_head: batch_size exceeds the training set");

  HeadParamsT<Scalar> params = init_head<Scalar>(features.cols(), cfg.hidden_width, cfg.seed);
  const MatrixX<Scalar> targets = one_hot_targets<Scalar>(labels);

  const std::size_t batches_per_epoch =
      (static_cast<std::size_t>(n) + static_cast<std::size_t>(cfg.batch_size) - 1) /
      static_cast<std::size_t>(cfg.batch_size);
  const std::size_t total_steps = static_cast<std::size_t>(cfg.epochs) * batches_per_epoch;

  TrainHistory history;
  std::vector<std::size_t> order(static_cast<std::size_t>(n));
  for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;

  std::size_t step = 0;
  for (int epoch = 0; epoch < cfg.epochs; ++epoch) {
    Rng rng = stream_for(cfg.seed, {kTagEpochShuffle, static_cast<std::uint64_t>(epoch)});
    rng.shuffle(order);

    double loss_sum = 0.0;
    double lr = cfg.eta_max;
    for (std::size_t b = 0; b < batches_per_epoch; ++b) {
      const std::size_t lo = b * static_cast<std::size_t>(cfg.batch_size);
      const std::size_t hi = std::min(lo + static_cast<std::size_t>(cfg.batch_size),
                                      static_cast<std::size_t>(n));
      const Eigen::Index bs = static_cast<Eigen::Index>(hi - lo);

      MatrixX<Scalar> bf(bs, features.cols());
      MatrixX<Scalar> bt(bs, kNumClasses);
      for (Eigen::Index i = 0; i < bs; ++i) {
        bf.row(i) = features.row(static_cast<Eigen::Index>(order[lo + static_cast<std::size_t>(i)]));
        bt.row(i) = targets.row(static_cast<Eigen::Index>(order[lo + static_cast<std::size_t>(i)]));
      }

      auto [grad, batch_loss] = batch_gradient(params, bf, bt);
      if (!std::isfinite(static_cast<double>(batch_loss)))
        throw NonFiniteError("training diverged at epoch " + std::to_string(epoch) + ", batch " +
                             std::to_string(b));
      loss_sum += static_cast<double>(batch_loss) * static_cast<double>(bs);

      lr = lr_schedule(step, total_steps, cfg);
      const Scalar eta = static_cast<Scalar>(lr);
      params.W1 -= eta * grad.W1;
      params.b1 -= eta * grad.b1;
      params.W2 -= eta * grad.W2;
      params.b2 -= eta * grad.b2;
      ++step;
    }

    double correct = 0;
    for (Eigen::Index i = 0; i < n; ++i) {
      const Vector2<Scalar> p = forward(params, features.row(i).transpose().eval());
      const int pred = p[kClassHealthy] >= p[kClassUnhealthy] ? kClassHealthy : kClassUnhealthy;
      const int truth =
          labels[static_cast<std::size_t>(i)] == BinaryLabel::healthy ? kClassHealthy : kClassUnhealthy;
      if (pred == truth) correct += 1;
    }

    history.mean_loss.push_back(loss_sum / static_cast<double>(n));
    history.train_accuracy.push_back(correct / static_cast<double>(n));
    history.learning_rate.push_back(lr);
  }
  return {std::move(params), std::move(history)};
}

/// Head checkpoint bound to the backbone weights it was trained against.
struct HeadCheckpoint {
  HeadParams params;
  std::string backbone_fingerprint;
};

// Binary format: magic "HEAD", version byte 1, u32le D, u32le H, class-order
// byte 0 (= healthy first), u16le fingerprint length + bytes, then row-major
// little-endian float32 for W1, b1, W2, b2.
void save_head(const HeadCheckpoint& ckpt, const std::filesystem::path& path);
HeadCheckpoint load_head(const std::filesystem::path& path);

void save_history(const TrainHistory& history, const std::filesystem::path& path,
                  const std::string& backbone_fingerprint, const TrainConfig& cfg);

}  // namespace drpipe
