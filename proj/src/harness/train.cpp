#include "stt/train.hpp"

#include <algorithm>
#include <cmath>
#include <iomanip>
#include <numeric>
#include <sstream>

#include "stt/binary_io.hpp"

namespace stt {

void OptimizerConfig::validate() const {
  if (!(lr > 0.0)) throw ConfigError("learning rate must be positive");
  if (decay_period < 1) throw ConfigError("lr decay period must be >= 1 epoch");
  if (epochs < 1) throw ConfigError("need at least one epoch");
  if (batch_size < 1) throw ConfigError("batch size must be >= 1");
  if (!(momentum >= 0.0 && momentum < 1.0)) throw ConfigError("momentum must lie in [0, 1)");
  if (!(weight_decay >= 0.0)) throw ConfigError("weight decay must be >= 0");
  if (!(grad_clip >= 0.0)) throw ConfigError("grad clip must be >= 0");
}

double learning_rate(const OptimizerConfig& opt, std::size_t epoch) {
  double lr = opt.lr;
  for (std::size_t k = epoch / opt.decay_period; k > 0; --k) lr /= 10.0;
  return lr;
}

template <typename Real>
Sgd<Real>::Sgd(std::vector<Tensor<Real>> params, double momentum, double weight_decay)
    : params_(std::move(params)), momentum_(momentum), weight_decay_(weight_decay) {
  if (momentum_ > 0.0) {
    for (const auto& p : params_) velocity_.emplace_back(p.numel(), Real(0));
  }
}

template <typename Real>
void Sgd<Real>::set_velocity(std::vector<std::vector<Real>> v) {
  if (v.empty()) return;
  if (v.size() != params_.size()) throw ContractError("velocity buffers do not match parameters");
  for (std::size_t i = 0; i < v.size(); ++i) {
    if (v[i].size() != params_[i].numel()) throw ContractError("velocity buffer size mismatch");
  }
  velocity_ = std::move(v);
}

template <typename Real>
void Sgd<Real>::step(double lr) {
  const Real rate = static_cast<Real>(lr);
  const Real mu = static_cast<Real>(momentum_);
  const Real wd = static_cast<Real>(weight_decay_);
  for (std::size_t i = 0; i < params_.size(); ++i) {
    auto& p = params_[i];
    if (!p.has_grad()) continue;
    auto theta = p.mutable_data();
    auto grad = p.mutable_grad();
    for (std::size_t j = 0; j < theta.size(); ++j) {
      Real g = grad[j];
      if (weight_decay_ > 0.0) g += wd * theta[j];
      if (momentum_ > 0.0) {
        velocity_[i][j] = mu * velocity_[i][j] + g;
        g = velocity_[i][j];
      }
      theta[j] -= rate * g;
    }
  }
}

template <typename Real>
double Sgd<Real>::clip_grad_norm(double max_norm) {
  double total = 0.0;
  for (auto& p : params_) {
    if (!p.has_grad()) continue;
    for (Real g : p.mutable_grad()) total += static_cast<double>(g) * static_cast<double>(g);
  }
  const double norm = std::sqrt(total);
  if (norm > max_norm) {
    const Real factor = static_cast<Real>(max_norm / norm);
    for (auto& p : params_) {
      if (!p.has_grad()) continue;
      for (auto& g : p.mutable_grad()) g *= factor;
    }
  }
  return norm;
}

template <typename Real>
void Sgd<Real>::zero_grad() {
  for (auto& p : params_) p.zero_grad();
}

template class Sgd<float>;
template class Sgd<double>;

void TrainConfig::validate() const {
  model.validate();
  sampling.validate();
  loss.validate();
  optimizer.validate();
  if (sampling.frames() != model.frames) {
    throw ConfigError("sampling yields " + std::to_string(sampling.frames()) +
                      " frames but the model expects " + std::to_string(model.frames));
  }
}

std::uint64_t TrainConfig::digest() const {
  std::ostringstream os;
  os << std::setprecision(17);
  const auto& g = model;
  os << to_string(g.stem.kind) << ' ' << g.stem.in_height << ' ' << g.stem.in_width << ' '
     << g.stem.in_channels << ' ' << g.stem.patch << ' ' << g.stem.channels << ' ' << g.frames
     << ' ' << g.dim << ' ' << g.heads << ' ' << g.blocks << ' ' << g.mlp_dim << ' ' << g.classes
     << ' ' << g.spatial_attention << ' ' << g.temporal_attention << ' ' << to_string(g.readout)
     << '|' << sampling.segments << ' ' << sampling.frames_per_segment << '|'
     << to_string(loss.kind) << ' ' << loss.lambda << ' ' << loss.beta << ' '
     << to_string(loss.kl_variant) << '|' << optimizer.lr << ' ' << optimizer.decay_period << ' '
     << optimizer.epochs << ' ' << optimizer.batch_size << ' ' << optimizer.momentum << ' '
     << optimizer.weight_decay << ' ' << optimizer.grad_clip << '|' << seed;
  const auto text = os.str();
  return io::fnv1a64(std::span(reinterpret_cast<const std::uint8_t*>(text.data()), text.size()));
}

namespace {

void check_data(const ModelGeometry& g, const std::vector<LabeledClip>& data) {
  if (data.empty()) throw InputError("empty dataset");
  for (const auto& clip : data) {
    if (clip.height != g.stem.in_height || clip.width != g.stem.in_width ||
        clip.channels != g.stem.in_channels) {
      throw ConfigError("dataset frames do not match the model's stem geometry");
    }
    if (clip.label >= g.classes) {
      throw InputError("label " + std::to_string(clip.label) + " outside [0, " +
                       std::to_string(g.classes) + ")");
    }
  }
}

SamplingPlan with_mode(SamplingPlan plan, SamplingMode mode) {
  plan.mode = mode;
  return plan;
}

std::string rng_state(const std::mt19937_64& rng) {
  std::ostringstream os;
  os << rng;
  return os.str();
}

}  // namespace

TrainResult train(const TrainConfig& cfg, const std::vector<LabeledClip>& data,
                  const std::vector<LabeledClip>* eval_data, const Checkpoint* resume,
                  const EpochCallback& on_epoch) {
  cfg.validate();
  check_data(cfg.model, data);
  if (eval_data) check_data(cfg.model, *eval_data);

  std::mt19937_64 rng(cfg.seed);
  auto params = ModelParams<TrainReal>::init(cfg.model, rng);
  std::size_t first_epoch = 0;
  std::vector<std::vector<TrainReal>> velocity;
  if (resume) {
    if (!(resume->params.geometry == cfg.model)) {
      throw GeometryMismatchError("resume checkpoint geometry does not match the config");
    }
    params = resume->params.clone();
    std::istringstream(resume->rng_state) >> rng;
    first_epoch = resume->epoch;
    velocity = resume->velocity;
  }
  Sgd<TrainReal> sgd(params.tensors(), cfg.optimizer.momentum, cfg.optimizer.weight_decay);
  sgd.set_velocity(std::move(velocity));

  const auto train_plan = with_mode(cfg.sampling, SamplingMode::train);
  const auto test_plan = with_mode(cfg.sampling, SamplingMode::test);
  const auto batch = cfg.optimizer.batch_size;
  std::vector<std::size_t> order(data.size());

  TrainResult result;
  for (std::size_t epoch = first_epoch; epoch < cfg.optimizer.epochs; ++epoch) {
    EpochLog entry;
    entry.epoch = epoch;
    entry.lr = learning_rate(cfg.optimizer, epoch);
    // restart from identity so an epoch's order depends only on the RNG state
    std::iota(order.begin(), order.end(), 0);
    std::shuffle(order.begin(), order.end(), rng);
    double total = 0.0;
    for (std::size_t start = 0, b = 0; start < order.size(); start += batch, ++b) {
      const auto end = std::min(start + batch, order.size());
      const auto weight = TrainReal(1) / static_cast<TrainReal>(end - start);
      sgd.zero_grad();
      for (std::size_t i = start; i < end; ++i) {
        const auto& clip = data[order[i]];
        const auto logits = forward_clip(clip, params, train_plan, rng);
        const auto loss = compute_loss(cfg.loss, logits, clip.label);
        const double value = loss.item();
        if (!std::isfinite(value)) {
          throw NumericError("non-finite loss (seed " + std::to_string(cfg.seed) + ", epoch " +
                             std::to_string(epoch) + ", batch " + std::to_string(b) + ")");
        }
        scale(loss, weight).backward();
        total += value;
      }
      if (cfg.optimizer.grad_clip > 0.0) sgd.clip_grad_norm(cfg.optimizer.grad_clip);
      sgd.step(entry.lr);
    }
    sgd.zero_grad();
    entry.mean_loss = total / static_cast<double>(data.size());
    if (eval_data && cfg.eval_every > 0 && (epoch + 1) % cfg.eval_every == 0) {
      const auto report = evaluate(params, *eval_data, test_plan);
      entry.uar = report.uar;
      entry.war = report.war;
    }
    if (on_epoch) on_epoch(entry);
    result.log.push_back(entry);
  }

  result.checkpoint.params = std::move(params);
  result.checkpoint.epoch = std::max<std::size_t>(first_epoch, cfg.optimizer.epochs);
  result.checkpoint.rng_state = rng_state(rng);
  result.checkpoint.config_digest = cfg.digest();
  result.checkpoint.velocity = sgd.velocity();
  return result;
}

EvalReport evaluate(const ModelParams<TrainReal>& params, const std::vector<LabeledClip>& data,
                    const SamplingPlan& plan) {
  check_data(params.geometry, data);
  NoGradGuard no_grad;
  const auto test_plan = with_mode(plan, SamplingMode::test);
  std::mt19937_64 unused(0);
  std::vector<std::size_t> predictions, labels;
  predictions.reserve(data.size());
  labels.reserve(data.size());
  for (const auto& clip : data) {
    predictions.push_back(predict(forward_clip(clip, params, test_plan, unused)));
    labels.push_back(clip.label);
  }
  return uar_war(predictions, labels, params.geometry.classes);
}

EvalReport evaluate(const Checkpoint& ckpt, const std::vector<LabeledClip>& data,
                    const SamplingPlan& plan) {
  return evaluate(ckpt.params, data, plan);
}

double mean_loss(const ModelParams<TrainReal>& params, const std::vector<LabeledClip>& data,
                 const SamplingPlan& plan, const LossConfig& loss) {
  check_data(params.geometry, data);
  NoGradGuard no_grad;
  const auto test_plan = with_mode(plan, SamplingMode::test);
  std::mt19937_64 unused(0);
  double total = 0.0;
  for (const auto& clip : data) {
    total += compute_loss(loss, forward_clip(clip, params, test_plan, unused), clip.label).item();
  }
  return total / static_cast<double>(data.size());
}

std::string format_log(const std::vector<EpochLog>& log) {
  std::ostringstream os;
  os << std::setprecision(10);
  os << "epoch,lr,mean_loss,uar,war\n";
  for (const auto& e : log) {
    os << e.epoch << ',' << e.lr << ',' << e.mean_loss << ',';
    if (e.uar) os << *e.uar;
    os << ',';
    if (e.war) os << *e.war;
    os << '\n';
  }
  return os.str();
}

}  // namespace stt
