#include "stt/loss.hpp"

#include <cmath>

namespace stt {

std::string to_string(LossKind k) {
  switch (k) {
    case LossKind::cross_entropy:
      return "ce";
    case LossKind::label_smoothing:
      return "label-smoothing";
    case LossKind::compact:
      return "compact";
  }
  return "?";
}

LossKind loss_kind_from_string(const std::string& s) {
  if (s == "ce") return LossKind::cross_entropy;
  if (s == "label-smoothing") return LossKind::label_smoothing;
  if (s == "compact") return LossKind::compact;
  throw ConfigError("unknown loss kind '" + s + "'");
}

std::string to_string(KlVariant v) {
  return v == KlVariant::standard ? "standard" : "unweighted";
}

KlVariant kl_variant_from_string(const std::string& s) {
  if (s == "standard") return KlVariant::standard;
  if (s == "unweighted") return KlVariant::unweighted;
  throw ConfigError("unknown kl variant '" + s + "'");
}

void LossConfig::validate() const {
  if (!(lambda >= 0.0 && lambda < 1.0)) {
    throw InputError("label smoothing lambda must lie in [0, 1), got " + std::to_string(lambda));
  }
  if (!(beta >= 0.0)) throw InputError("compact beta must be >= 0, got " + std::to_string(beta));
}

namespace {

template <typename Real>
void check_target(const Tensor<Real>& logits, std::size_t y) {
  if (logits.dim() != 1) {
    throw DimensionError("loss expects a logit vector, got " + shape_str(logits.shape()));
  }
  if (logits.numel() < 2) throw InputError("loss needs at least two classes");
  if (y >= logits.numel()) {
    throw InputError("label " + std::to_string(y) + " outside [0, " +
                     std::to_string(logits.numel()) + ")");
  }
}

}  // namespace

template <typename Real>
Tensor<Real> cross_entropy(const Tensor<Real>& logits, std::size_t y) {
  check_target(logits, y);
  return scale(index_select(log_softmax(logits, 0), {y}), Real(-1));
}

template <typename Real>
Tensor<Real> label_smoothing_loss(const Tensor<Real>& logits, std::size_t y, double lambda) {
  check_target(logits, y);
  LossConfig{LossKind::label_smoothing, lambda}.validate();
  const auto c = logits.numel();
  std::vector<Real> target(c, static_cast<Real>(lambda / static_cast<double>(c)));
  target[y] += static_cast<Real>(1.0 - lambda);
  const auto s = Tensor<Real>::from({c}, std::move(target));
  return scale(sum(mul(s, log_softmax(logits, 0))), Real(-1));
}

template <typename Real>
Tensor<Real> label_smoothing_loss_decomposed(const Tensor<Real>& logits, std::size_t y,
                                             double lambda) {
  check_target(logits, y);
  LossConfig{LossKind::label_smoothing, lambda}.validate();
  const auto c = static_cast<Real>(logits.numel());
  // KL(u || p) = -log C - mean_k log p_k
  const auto kl = add_scalar(scale(mean(log_softmax(logits, 0)), Real(-1)), -std::log(c));
  const auto reg = add_scalar(kl, std::log(c));
  return add(scale(cross_entropy(logits, y), static_cast<Real>(1.0 - lambda)),
             scale(reg, static_cast<Real>(lambda)));
}

namespace {

template <typename Real>
Tensor<Real> nontarget_logits(const Tensor<Real>& logits, std::size_t y) {
  std::vector<std::size_t> keep;
  for (std::size_t c = 0; c < logits.numel(); ++c) {
    if (c != y) keep.push_back(c);
  }
  return index_select(logits, keep);
}

}  // namespace

template <typename Real>
Tensor<Real> nontarget_softmax(const Tensor<Real>& logits, std::size_t y) {
  check_target(logits, y);
  return softmax(nontarget_logits(logits, y), 0);
}

template <typename Real>
Tensor<Real> compact_regularizer(const Tensor<Real>& logits, std::size_t y, KlVariant variant) {
  check_target(logits, y);
  const auto m = logits.numel() - 1;
  const Real log_m = std::log(static_cast<Real>(m));
  const auto log_p = log_softmax(nontarget_logits(logits, y), 0);
  // sum_c log(1 / (m p'_c)) = -sum_c (log p'_c + log m)
  const auto neg_log_ratio_sum = scale(sum(add_scalar(log_p, log_m)), Real(-1));
  const auto kl_u_p = scale(neg_log_ratio_sum, Real(1) / static_cast<Real>(m));
  Tensor<Real> kl_p_u;
  if (variant == KlVariant::standard) {
    kl_p_u = sum(mul(exp(log_p), add_scalar(log_p, log_m)));
  } else {
    kl_p_u = neg_log_ratio_sum;
  }
  return scale(add(kl_u_p, kl_p_u), Real(0.5));
}

template <typename Real>
Tensor<Real> compact_loss(const Tensor<Real>& logits, std::size_t y, double beta,
                          KlVariant variant) {
  check_target(logits, y);
  if (!(beta >= 0.0)) throw InputError("compact beta must be >= 0, got " + std::to_string(beta));
  const auto ce = cross_entropy(logits, y);
  if (beta == 0.0) return ce;
  return add(ce, scale(compact_regularizer(logits, y, variant), static_cast<Real>(beta)));
}

template <typename Real>
Tensor<Real> compute_loss(const LossConfig& cfg, const Tensor<Real>& logits, std::size_t y) {
  switch (cfg.kind) {
    case LossKind::cross_entropy:
      return cross_entropy(logits, y);
    case LossKind::label_smoothing:
      return label_smoothing_loss(logits, y, cfg.lambda);
    case LossKind::compact:
      return compact_loss(logits, y, cfg.beta, cfg.kl_variant);
  }
  throw ConfigError("unknown loss kind");
}

#define STT_INSTANTIATE_LOSS(R)                                                         \
  template Tensor<R> cross_entropy(const Tensor<R>&, std::size_t);                      \
  template Tensor<R> label_smoothing_loss(const Tensor<R>&, std::size_t, double);       \
  template Tensor<R> label_smoothing_loss_decomposed(const Tensor<R>&, std::size_t,     \
                                                     double);                           \
  template Tensor<R> nontarget_softmax(const Tensor<R>&, std::size_t);                  \
  template Tensor<R> compact_regularizer(const Tensor<R>&, std::size_t, KlVariant);     \
  template Tensor<R> compact_loss(const Tensor<R>&, std::size_t, double, KlVariant);    \
  template Tensor<R> compute_loss(const LossConfig&, const Tensor<R>&, std::size_t);

STT_INSTANTIATE_LOSS(float)
STT_INSTANTIATE_LOSS(double)

}  // namespace stt
