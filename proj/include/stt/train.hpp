#pragma once

#include <cstddef>
#include <cstdint>
#include <functional>
#include <optional>
#include <string>
#include <vector>

#include "stt/checkpoint.hpp"
#include "stt/loss.hpp"
#include "stt/metrics.hpp"
#include "stt/model.hpp"

namespace stt {

struct OptimizerConfig {
  double lr = 0.01;
  /// The learning rate is divided by 10 every `decay_period` epochs.
  std::size_t decay_period = 40;
  std::size_t epochs = 60;
  std::size_t batch_size = 16;
  double momentum = 0.0;
  double weight_decay = 0.0;
  /// Rescale the gradient when its global L2 norm exceeds this (0 = off).
  double grad_clip = 0.0;

  void validate() const;
};

/// lr * 10^-floor(epoch / decay_period), computed by repeated division.
double learning_rate(const OptimizerConfig& opt, std::size_t epoch);

/// Plain SGD with optional heavy-ball momentum and L2 weight decay:
///   g <- grad + wd * theta;  v <- mu * v + g;  theta <- theta - lr * v
/// With mu = 0 this is theta <- theta - lr * g. Tensors without a gradient
/// are left untouched.
template <typename Real>
class Sgd {
 public:
  Sgd(std::vector<Tensor<Real>> params, double momentum = 0.0, double weight_decay = 0.0);

  void step(double lr);
  void zero_grad();
  /// Scales all gradients by max_norm / norm when the global L2 norm exceeds
  /// max_norm. Returns the norm before scaling.
  double clip_grad_norm(double max_norm);

  const std::vector<std::vector<Real>>& velocity() const { return velocity_; }
  void set_velocity(std::vector<std::vector<Real>> v);

 private:
  std::vector<Tensor<Real>> params_;
  double momentum_;
  double weight_decay_;
  std::vector<std::vector<Real>> velocity_;
};

struct TrainConfig {
  ModelGeometry model = ModelGeometry::desk();
  SamplingPlan sampling;  // mode is forced per phase (train / test)
  LossConfig loss;
  OptimizerConfig optimizer;
  std::uint64_t seed = 0;
  /// Evaluate on the held-out set every n epochs (0 = never).
  std::size_t eval_every = 0;

  void validate() const;
  /// FNV-1a of the canonical config text; stored in checkpoints.
  std::uint64_t digest() const;
};

struct EpochLog {
  std::size_t epoch = 0;
  double lr = 0.0;
  double mean_loss = 0.0;
  std::optional<double> uar;
  std::optional<double> war;
};

struct TrainResult {
  Checkpoint checkpoint;
  std::vector<EpochLog> log;
};

using EpochCallback = std::function<void(const EpochLog&)>;

/// Seeded epoch loop: shuffle, train-mode sampling per clip, mean loss over
/// each mini-batch, backward, SGD step. `resume` continues from a checkpoint
/// (parameters, epoch counter, RNG and momentum state). Throws NumericError
/// naming seed, epoch and batch if a loss is non-finite.
TrainResult train(const TrainConfig& cfg, const std::vector<LabeledClip>& data,
                  const std::vector<LabeledClip>* eval_data = nullptr,
                  const Checkpoint* resume = nullptr, const EpochCallback& on_epoch = {});

/// Test-mode sampling, arg-max prediction, UAR/WAR.
EvalReport evaluate(const ModelParams<TrainReal>& params, const std::vector<LabeledClip>& data,
                    const SamplingPlan& plan);
EvalReport evaluate(const Checkpoint& ckpt, const std::vector<LabeledClip>& data,
                    const SamplingPlan& plan);

/// Mean loss over `data` with test-mode sampling.
double mean_loss(const ModelParams<TrainReal>& params, const std::vector<LabeledClip>& data,
                 const SamplingPlan& plan, const LossConfig& loss);

std::string format_log(const std::vector<EpochLog>& log);

}  // namespace stt
