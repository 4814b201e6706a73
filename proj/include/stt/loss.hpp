#pragma once

// Classification losses over a single logit vector [C].

#include <cstddef>
#include <string>

#include "stt/tensor.hpp"

namespace stt {

enum class LossKind { cross_entropy, label_smoothing, compact };

/// Which form of KL(p' || u') the compact loss uses. `standard` is the usual
/// sum p' log((C-1) p'); `unweighted` drops the p' weight and sums
/// log(1 / ((C-1) p')) over the non-target classes.
enum class KlVariant { standard, unweighted };

std::string to_string(LossKind k);
LossKind loss_kind_from_string(const std::string& s);
std::string to_string(KlVariant v);
KlVariant kl_variant_from_string(const std::string& s);

struct LossConfig {
  LossKind kind = LossKind::compact;
  double lambda = 0.1;  // label smoothing weight, [0, 1)
  double beta = 0.2;    // compact regulariser weight, >= 0
  KlVariant kl_variant = KlVariant::standard;

  void validate() const;
};

/// -log softmax(logits)[y].
template <typename Real>
Tensor<Real> cross_entropy(const Tensor<Real>& logits, std::size_t y);

/// -sum_k s_k log p_k with soft target s = (1 - lambda) onehot(y) + lambda / C.
template <typename Real>
Tensor<Real> label_smoothing_loss(const Tensor<Real>& logits, std::size_t y, double lambda);

/// Same loss assembled as (1 - lambda) CE + lambda (KL(u || p) + log C).
template <typename Real>
Tensor<Real> label_smoothing_loss_decomposed(const Tensor<Real>& logits, std::size_t y,
                                             double lambda);

/// Softmax over the C-1 logits other than y, in ascending class order.
template <typename Real>
Tensor<Real> nontarget_softmax(const Tensor<Real>& logits, std::size_t y);

/// (KL(u' || p') + KL(p' || u')) / 2 between the non-target distribution p'
/// and the uniform u' over C-1 classes. Zero for C = 2.
template <typename Real>
Tensor<Real> compact_regularizer(const Tensor<Real>& logits, std::size_t y, KlVariant variant);

/// CE + beta * compact_regularizer. beta = 0 returns the CE tensor itself.
template <typename Real>
Tensor<Real> compact_loss(const Tensor<Real>& logits, std::size_t y, double beta,
                          KlVariant variant = KlVariant::standard);

template <typename Real>
Tensor<Real> compute_loss(const LossConfig& cfg, const Tensor<Real>& logits, std::size_t y);

}  // namespace stt
