#pragma once

// Spatio-temporal Transformer: N blocks of (spatial attention, temporal
// attention, MLP), each pre-normalised with a residual path, read out by a
// linear classifier on the classification token at position 0, slot 0.
//
// Token grids are [P, S, d] with P = H*W spatial positions and S = F+1 slots;
// slot 0 is the classification slot. Per-head projections d -> D_h are
// packed as column blocks of one [d, d] matrix: head a owns columns
// [a*D_h, (a+1)*D_h).

#include <cstddef>
#include <random>
#include <string>
#include <utility>
#include <vector>

#include "stt/clip.hpp"
#include "stt/embed.hpp"
#include "stt/tensor.hpp"

namespace stt {

/// How the classifier reads the final grid. `cls` uses token (0, 0); `mean`
/// averages all frame tokens (slots 1..F over every position). `automatic`
/// picks cls when temporal attention is on and mean otherwise, since with no
/// temporal stage nothing carries frame content into slot 0.
enum class Readout { automatic, cls, mean };

std::string to_string(Readout r);
Readout readout_from_string(const std::string& s);

struct ModelGeometry {
  StemConfig stem;
  std::size_t frames = 8;  // F after sampling
  std::size_t dim = 64;
  std::size_t heads = 4;
  std::size_t blocks = 2;
  std::size_t mlp_dim = 256;
  std::size_t classes = 2;
  bool spatial_attention = true;
  bool temporal_attention = true;
  Readout readout = Readout::automatic;

  std::size_t positions() const { return stem.grid_height() * stem.grid_width(); }
  std::size_t slots() const { return frames + 1; }
  std::size_t head_dim() const { return dim / heads; }
  Readout effective_readout() const;
  void validate() const;

  bool operator==(const ModelGeometry&) const;

  /// S=4,T=2 (F=8), 16x16 mono frames -> 4x4 grid, d=64, 2 blocks, 4 heads.
  static ModelGeometry desk();
  /// F=16, d=512, 4 blocks, 8 heads, 7 classes; used for shape checks only.
  static ModelGeometry full();
  /// F=4, 2x2 grid, d=16, 2 blocks, 2 heads, 3 classes; gradient checks.
  static ModelGeometry tiny();
};

template <typename Real>
struct AttentionParams {
  Tensor<Real> ln_gamma, ln_beta;  // [d]
  Tensor<Real> w_q, w_k, w_v;      // [d, d], heads packed by columns
  Tensor<Real> w_o;                // [d, d]
};

template <typename Real>
struct MlpParams {
  Tensor<Real> ln_gamma, ln_beta;  // [d]
  Tensor<Real> w1;                 // [d, d_mlp]
  Tensor<Real> w2;                 // [d_mlp, d]
};

template <typename Real>
struct BlockParams {
  AttentionParams<Real> spatial;
  AttentionParams<Real> temporal;
  MlpParams<Real> mlp;
};

template <typename Real>
struct ModelParams {
  ModelGeometry geometry;
  StemParams<Real> stem;
  PositionalEmbeddings<Real> pos;
  std::vector<BlockParams<Real>> blocks;
  Tensor<Real> head_w;  // [d, C]
  Tensor<Real> head_b;  // [C]

  static ModelParams init(const ModelGeometry& geometry, std::mt19937_64& rng);

  /// Every trainable tensor in the fixed checkpoint order.
  std::vector<std::pair<std::string, Tensor<Real>>> named_tensors() const;
  std::vector<Tensor<Real>> tensors() const;
  std::size_t parameter_count() const;
  void zero_grad();
  /// Deep copy with fresh leaves.
  ModelParams clone() const;
};

template <typename To, typename From>
ModelParams<To> cast_params(const ModelParams<From>& params);

template <typename Real>
struct QKV {
  Tensor<Real> q, k, v;  // each [P, S, heads, D_h]
};

/// Optional capture of attention weights for inspection.
///   spatial:  [S*heads, P, P]  row (t, a, p) is the distribution over p'
///   temporal: [P*heads, S, S]  row (p, a, t) is the distribution over
///             {cls key (0,0), frames 1..F of position p}
template <typename Real>
struct AttentionTrace {
  Tensor<Real> weights;
};

/// LN each token, then per-head linear maps; no biases.
template <typename Real>
QKV<Real> qkv_project(const Tensor<Real>& z, const AttentionParams<Real>& p, std::size_t heads);

/// Attention among the P positions of each slot (including slot 0), heads
/// concatenated, projected by w_o and added to z.
template <typename Real>
Tensor<Real> spatial_attention(const Tensor<Real>& z, const AttentionParams<Real>& p,
                               std::size_t heads, AttentionTrace<Real>* trace = nullptr);

/// For every (p, t) the query compares against F+1 keys: the classification
/// key at (0, 0) and the frame keys (p, 1..F). Weighted values, concatenated,
/// projected by w_o and added to z.
template <typename Real>
Tensor<Real> temporal_attention(const Tensor<Real>& z, const AttentionParams<Real>& p,
                                std::size_t heads, AttentionTrace<Real>* trace = nullptr);

/// z + W2 gelu(W1 LN(z)), per token.
template <typename Real>
Tensor<Real> block_mlp(const Tensor<Real>& z, const MlpParams<Real>& p);

/// One block honouring the geometry's stage switches.
template <typename Real>
Tensor<Real> block_forward(const Tensor<Real>& z, const BlockParams<Real>& p,
                           const ModelGeometry& geometry);

/// frames [F,H0,W0,Cin] -> z0 [P, F+1, d].
template <typename Real>
Tensor<Real> embed_frames(const Tensor<Real>& frames, const ModelParams<Real>& params);

/// z0 -> logits [C].
template <typename Real>
Tensor<Real> forward_tokens(const Tensor<Real>& z0, const ModelParams<Real>& params);

/// Sampled frames [F,H0,W0,Cin] -> logits [C].
template <typename Real>
Tensor<Real> forward(const Tensor<Real>& frames, const ModelParams<Real>& params);

/// Samples the clip with `plan` (rng is only consumed in train mode), then
/// runs forward().
template <typename Real>
Tensor<Real> forward_clip(const LabeledClip& clip, const ModelParams<Real>& params,
                          const SamplingPlan& plan, std::mt19937_64& rng);

/// Arg-max; the lowest index wins ties.
template <typename Real>
std::size_t predict(const Tensor<Real>& logits);

}  // namespace stt
