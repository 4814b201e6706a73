#include "stt/model.hpp"

#include <cmath>

#include "stt/init.hpp"

namespace stt {

std::string to_string(Readout r) {
  switch (r) {
    case Readout::automatic:
      return "auto";
    case Readout::cls:
      return "cls";
    case Readout::mean:
      return "mean";
  }
  return "?";
}

Readout readout_from_string(const std::string& s) {
  if (s == "auto") return Readout::automatic;
  if (s == "cls") return Readout::cls;
  if (s == "mean") return Readout::mean;
  throw ConfigError("unknown readout '" + s + "'");
}

Readout ModelGeometry::effective_readout() const {
  if (readout != Readout::automatic) return readout;
  return temporal_attention ? Readout::cls : Readout::mean;
}

void ModelGeometry::validate() const {
  stem.validate();
  if (frames < 1) throw ConfigError("model needs at least one frame");
  if (dim < 1 || heads < 1 || dim % heads != 0) {
    throw ConfigError("hidden dim " + std::to_string(dim) + " is not divisible by " +
                      std::to_string(heads) + " heads");
  }
  if (blocks < 1) throw ConfigError("model needs at least one block");
  if (mlp_dim < 1) throw ConfigError("mlp_dim must be positive");
  if (classes < 2) throw ConfigError("need at least two classes");
  if (positions() < 1) throw ConfigError("stem produces an empty grid");
}

bool ModelGeometry::operator==(const ModelGeometry& o) const {
  return stem.kind == o.stem.kind && stem.in_height == o.stem.in_height &&
         stem.in_width == o.stem.in_width && stem.in_channels == o.stem.in_channels &&
         stem.patch == o.stem.patch && stem.channels == o.stem.channels && frames == o.frames &&
         dim == o.dim && heads == o.heads && blocks == o.blocks && mlp_dim == o.mlp_dim &&
         classes == o.classes && spatial_attention == o.spatial_attention &&
         temporal_attention == o.temporal_attention && readout == o.readout;
}

ModelGeometry ModelGeometry::desk() { return ModelGeometry{}; }

ModelGeometry ModelGeometry::full() {
  ModelGeometry g;
  g.stem.kind = StemKind::precomputed;
  g.stem.in_height = 4;
  g.stem.in_width = 4;
  g.stem.in_channels = 512;
  g.stem.channels = 512;
  g.frames = 16;
  g.dim = 512;
  g.heads = 8;
  g.blocks = 4;
  g.mlp_dim = 4 * 512;
  g.classes = 7;
  return g;
}

ModelGeometry ModelGeometry::tiny() {
  ModelGeometry g;
  g.stem.kind = StemKind::linear_patch;
  g.stem.in_height = 4;
  g.stem.in_width = 4;
  g.stem.in_channels = 1;
  g.stem.patch = 2;
  g.stem.channels = 4;
  g.frames = 4;
  g.dim = 16;
  g.heads = 2;
  g.blocks = 2;
  g.mlp_dim = 64;
  g.classes = 3;
  return g;
}

namespace {

template <typename Real>
AttentionParams<Real> init_attention(std::size_t d, std::mt19937_64& rng) {
  AttentionParams<Real> a;
  a.ln_gamma = constant_param<Real>({d}, 1.0);
  a.ln_beta = constant_param<Real>({d}, 0.0);
  // Queries and keys use fan-in scaling so attention starts non-uniform;
  // at 0.02 every head starts near uniform and frame order barely trains.
  const double qk_stddev = 1.0 / std::sqrt(static_cast<double>(d));
  a.w_q = normal_param<Real>({d, d}, qk_stddev, rng);
  a.w_k = normal_param<Real>({d, d}, qk_stddev, rng);
  a.w_v = normal_param<Real>({d, d}, kInitStddev, rng);
  a.w_o = normal_param<Real>({d, d}, kInitStddev, rng);
  return a;
}

template <typename Real>
Tensor<Real> fresh_leaf(const Tensor<Real>& t) {
  return Tensor<Real>::from(t.shape(), std::vector<Real>(t.data().begin(), t.data().end()), true);
}

template <typename To, typename From>
Tensor<To> convert_leaf(const Tensor<From>& t) {
  return cast<To>(t, true);
}

// Applies fn to each (dst, src) tensor pair in checkpoint order.
template <typename To, typename From, typename Fn>
ModelParams<To> map_params(const ModelParams<From>& src, Fn fn) {
  ModelParams<To> out;
  out.geometry = src.geometry;
  for (const auto& w : src.stem.weights) out.stem.weights.push_back(fn(w));
  out.stem.projection = fn(src.stem.projection);
  out.pos.space = fn(src.pos.space);
  out.pos.time = fn(src.pos.time);
  out.pos.cls = fn(src.pos.cls);
  for (const auto& b : src.blocks) {
    BlockParams<To> nb;
    auto att = [&](const AttentionParams<From>& a) {
      return AttentionParams<To>{fn(a.ln_gamma), fn(a.ln_beta), fn(a.w_q),
                                 fn(a.w_k),      fn(a.w_v),     fn(a.w_o)};
    };
    nb.spatial = att(b.spatial);
    nb.temporal = att(b.temporal);
    nb.mlp = MlpParams<To>{fn(b.mlp.ln_gamma), fn(b.mlp.ln_beta), fn(b.mlp.w1), fn(b.mlp.w2)};
    out.blocks.push_back(std::move(nb));
  }
  out.head_w = fn(src.head_w);
  out.head_b = fn(src.head_b);
  return out;
}

}  // namespace

template <typename Real>
ModelParams<Real> ModelParams<Real>::init(const ModelGeometry& geometry, std::mt19937_64& rng) {
  geometry.validate();
  ModelParams p;
  p.geometry = geometry;
  const auto d = geometry.dim;
  p.stem = StemParams<Real>::init(geometry.stem, d, rng);
  p.pos = PositionalEmbeddings<Real>::init(geometry.positions(), geometry.frames, d, rng);
  for (std::size_t i = 0; i < geometry.blocks; ++i) {
    BlockParams<Real> b;
    b.spatial = init_attention<Real>(d, rng);
    b.temporal = init_attention<Real>(d, rng);
    b.mlp.ln_gamma = constant_param<Real>({d}, 1.0);
    b.mlp.ln_beta = constant_param<Real>({d}, 0.0);
    b.mlp.w1 = normal_param<Real>({d, geometry.mlp_dim}, kInitStddev, rng);
    b.mlp.w2 = normal_param<Real>({geometry.mlp_dim, d}, kInitStddev, rng);
    p.blocks.push_back(std::move(b));
  }
  p.head_w = normal_param<Real>({d, geometry.classes}, kInitStddev, rng);
  p.head_b = constant_param<Real>({geometry.classes}, 0.0);
  return p;
}

template <typename Real>
std::vector<std::pair<std::string, Tensor<Real>>> ModelParams<Real>::named_tensors() const {
  std::vector<std::pair<std::string, Tensor<Real>>> out;
  for (std::size_t i = 0; i < stem.weights.size(); ++i) {
    out.emplace_back("stem.w" + std::to_string(i), stem.weights[i]);
  }
  out.emplace_back("stem.projection", stem.projection);
  out.emplace_back("pos.space", pos.space);
  out.emplace_back("pos.time", pos.time);
  out.emplace_back("pos.cls", pos.cls);
  for (std::size_t i = 0; i < blocks.size(); ++i) {
    const auto prefix = "block" + std::to_string(i) + ".";
    auto att = [&](const std::string& stage, const AttentionParams<Real>& a) {
      out.emplace_back(prefix + stage + ".ln_gamma", a.ln_gamma);
      out.emplace_back(prefix + stage + ".ln_beta", a.ln_beta);
      out.emplace_back(prefix + stage + ".w_q", a.w_q);
      out.emplace_back(prefix + stage + ".w_k", a.w_k);
      out.emplace_back(prefix + stage + ".w_v", a.w_v);
      out.emplace_back(prefix + stage + ".w_o", a.w_o);
    };
    att("spatial", blocks[i].spatial);
    att("temporal", blocks[i].temporal);
    out.emplace_back(prefix + "mlp.ln_gamma", blocks[i].mlp.ln_gamma);
    out.emplace_back(prefix + "mlp.ln_beta", blocks[i].mlp.ln_beta);
    out.emplace_back(prefix + "mlp.w1", blocks[i].mlp.w1);
    out.emplace_back(prefix + "mlp.w2", blocks[i].mlp.w2);
  }
  out.emplace_back("head.w", head_w);
  out.emplace_back("head.b", head_b);
  return out;
}

template <typename Real>
std::vector<Tensor<Real>> ModelParams<Real>::tensors() const {
  std::vector<Tensor<Real>> out;
  for (auto& [name, t] : named_tensors()) out.push_back(t);
  return out;
}

template <typename Real>
std::size_t ModelParams<Real>::parameter_count() const {
  std::size_t n = 0;
  for (const auto& t : tensors()) n += t.numel();
  return n;
}

template <typename Real>
void ModelParams<Real>::zero_grad() {
  for (auto& t : tensors()) t.zero_grad();
}

template <typename Real>
ModelParams<Real> ModelParams<Real>::clone() const {
  return map_params<Real>(*this, [](const Tensor<Real>& t) { return fresh_leaf(t); });
}

template <typename To, typename From>
ModelParams<To> cast_params(const ModelParams<From>& params) {
  return map_params<To>(params, [](const Tensor<From>& t) { return convert_leaf<To>(t); });
}

template <typename Real>
QKV<Real> qkv_project(const Tensor<Real>& z, const AttentionParams<Real>& p, std::size_t heads) {
  if (z.dim() != 3) throw DimensionError("qkv_project: expected [P,S,d], got " + shape_str(z.shape()));
  const auto positions = z.extent(0), slots = z.extent(1), d = z.extent(2);
  if (heads < 1 || d % heads != 0) {
    throw ConfigError("qkv_project: dim " + std::to_string(d) + " not divisible by " +
                      std::to_string(heads) + " heads");
  }
  const auto x = layer_norm(reshape(z, {positions * slots, d}), p.ln_gamma, p.ln_beta);
  const Shape split{positions, slots, heads, d / heads};
  return {reshape(matmul(x, p.w_q), split), reshape(matmul(x, p.w_k), split),
          reshape(matmul(x, p.w_v), split)};
}

namespace {

template <typename Real>
Tensor<Real> merge_heads_and_project(const Tensor<Real>& heads_out, const Tensor<Real>& z,
                                     const Tensor<Real>& w_o) {
  // heads_out: [P, S, heads, D_h]
  const auto& s = z.shape();
  const auto merged = reshape(heads_out, {s[0] * s[1], s[2]});
  return add(reshape(matmul(merged, w_o), s), z);
}

}  // namespace

template <typename Real>
Tensor<Real> spatial_attention(const Tensor<Real>& z, const AttentionParams<Real>& p,
                               std::size_t heads, AttentionTrace<Real>* trace) {
  const auto qkv = qkv_project(z, p, heads);
  const auto positions = z.extent(0), slots = z.extent(1), dh = z.extent(2) / heads;
  const Shape batched{slots * heads, positions, dh};
  auto to_batches = [&](const Tensor<Real>& t) { return reshape(permute(t, {1, 2, 0, 3}), batched); };
  const auto q = to_batches(qkv.q), k = to_batches(qkv.k), v = to_batches(qkv.v);
  const auto scores = scale(bmm(q, k, true), Real(1) / std::sqrt(Real(dh)));
  const auto weights = softmax(scores, 2);
  if (trace) trace->weights = weights.detach();
  const auto out = reshape(bmm(weights, v), {slots, heads, positions, dh});
  return merge_heads_and_project(permute(out, {2, 0, 1, 3}), z, p.w_o);
}

template <typename Real>
Tensor<Real> temporal_attention(const Tensor<Real>& z, const AttentionParams<Real>& p,
                                std::size_t heads, AttentionTrace<Real>* trace) {
  const auto qkv = qkv_project(z, p, heads);
  const auto positions = z.extent(0), slots = z.extent(1), dh = z.extent(2) / heads;
  if (slots < 2) throw DimensionError("temporal_attention: need a classification slot and frames");
  const auto frames = slots - 1;
  // [P, heads, S, D_h]
  auto by_position = [](const Tensor<Real>& t) { return permute(t, {0, 2, 1, 3}); };
  // Key/value list for every position: the shared classification entry at
  // (0, 0), then the position's own frames.
  auto with_cls_entry = [&](const Tensor<Real>& t) {
    const auto cls = repeat(slice(slice(t, 0, 0, 1), 2, 0, 1), 0, positions);
    return concat<Real>({cls, slice(t, 2, 1, frames)}, 2);
  };
  const Shape batched{positions * heads, slots, dh};
  const auto q = reshape(by_position(qkv.q), batched);
  const auto k = reshape(with_cls_entry(by_position(qkv.k)), batched);
  const auto v = reshape(with_cls_entry(by_position(qkv.v)), batched);
  const auto scores = scale(bmm(q, k, true), Real(1) / std::sqrt(Real(dh)));
  const auto weights = softmax(scores, 2);
  if (trace) trace->weights = weights.detach();
  const auto out = reshape(bmm(weights, v), {positions, heads, slots, dh});
  return merge_heads_and_project(permute(out, {0, 2, 1, 3}), z, p.w_o);
}

template <typename Real>
Tensor<Real> block_mlp(const Tensor<Real>& z, const MlpParams<Real>& p) {
  if (z.dim() != 3) throw DimensionError("block_mlp: expected [P,S,d], got " + shape_str(z.shape()));
  const auto& s = z.shape();
  const auto x = layer_norm(reshape(z, {s[0] * s[1], s[2]}), p.ln_gamma, p.ln_beta);
  const auto h = matmul(gelu(matmul(x, p.w1)), p.w2);
  return add(reshape(h, s), z);
}

template <typename Real>
Tensor<Real> block_forward(const Tensor<Real>& z, const BlockParams<Real>& p,
                           const ModelGeometry& geometry) {
  auto out = z;
  if (geometry.spatial_attention) out = spatial_attention(out, p.spatial, geometry.heads);
  if (geometry.temporal_attention) out = temporal_attention(out, p.temporal, geometry.heads);
  return block_mlp(out, p.mlp);
}

template <typename Real>
Tensor<Real> embed_frames(const Tensor<Real>& frames, const ModelParams<Real>& params) {
  const auto& g = params.geometry;
  if (frames.dim() != 4 || frames.extent(0) != g.frames) {
    throw ConfigError("model expects " + std::to_string(g.frames) + " frames, got " +
                      shape_str(frames.shape()));
  }
  const auto f0 = stem_forward(frames, g.stem, params.stem);
  return assemble_input(tokenize_project(f0, params.stem.projection), params.pos);
}

template <typename Real>
Tensor<Real> forward_tokens(const Tensor<Real>& z0, const ModelParams<Real>& params) {
  const auto& g = params.geometry;
  if (z0.shape() != Shape{g.positions(), g.slots(), g.dim}) {
    throw ConfigError("token grid " + shape_str(z0.shape()) + " does not match model geometry " +
                      shape_str({g.positions(), g.slots(), g.dim}));
  }
  auto z = z0;
  for (const auto& block : params.blocks) z = block_forward(z, block, g);

  Tensor<Real> pooled;
  if (g.effective_readout() == Readout::cls) {
    pooled = slice(reshape(z, {g.positions() * g.slots(), g.dim}), 0, 0, 1);
  } else {
    const auto frames = reshape(slice(z, 1, 1, g.frames), {g.positions() * g.frames, g.dim});
    pooled = reshape(scale(sum_axis(frames, 0), Real(1) / Real(g.positions() * g.frames)),
                     {1, g.dim});
  }
  return reshape(add_trailing(matmul(pooled, params.head_w), params.head_b), {g.classes});
}

template <typename Real>
Tensor<Real> forward(const Tensor<Real>& frames, const ModelParams<Real>& params) {
  return forward_tokens(embed_frames(frames, params), params);
}

template <typename Real>
Tensor<Real> forward_clip(const LabeledClip& clip, const ModelParams<Real>& params,
                          const SamplingPlan& plan, std::mt19937_64& rng) {
  const auto& g = params.geometry;
  if (plan.frames() != g.frames) {
    throw ConfigError("sampling plan yields " + std::to_string(plan.frames()) +
                      " frames, model expects " + std::to_string(g.frames));
  }
  if (clip.height != g.stem.in_height || clip.width != g.stem.in_width ||
      clip.channels != g.stem.in_channels) {
    throw ConfigError("clip frames are " + std::to_string(clip.height) + "x" +
                      std::to_string(clip.width) + "x" + std::to_string(clip.channels) +
                      ", model expects " + std::to_string(g.stem.in_height) + "x" +
                      std::to_string(g.stem.in_width) + "x" + std::to_string(g.stem.in_channels));
  }
  return forward(clip.gather<Real>(sample_frames(clip.frames, plan, rng)), params);
}

template <typename Real>
std::size_t predict(const Tensor<Real>& logits) {
  const auto d = logits.data();
  std::size_t best = 0;
  for (std::size_t i = 1; i < d.size(); ++i) {
    if (d[i] > d[best]) best = i;
  }
  return best;
}

#define STT_INSTANTIATE_MODEL(R)                                                                 \
  template struct ModelParams<R>;                                                                \
  template QKV<R> qkv_project(const Tensor<R>&, const AttentionParams<R>&, std::size_t);         \
  template Tensor<R> spatial_attention(const Tensor<R>&, const AttentionParams<R>&, std::size_t, \
                                       AttentionTrace<R>*);                                      \
  template Tensor<R> temporal_attention(const Tensor<R>&, const AttentionParams<R>&,             \
                                        std::size_t, AttentionTrace<R>*);                        \
  template Tensor<R> block_mlp(const Tensor<R>&, const MlpParams<R>&);                           \
  template Tensor<R> block_forward(const Tensor<R>&, const BlockParams<R>&,                      \
                                   const ModelGeometry&);                                        \
  template Tensor<R> embed_frames(const Tensor<R>&, const ModelParams<R>&);                      \
  template Tensor<R> forward_tokens(const Tensor<R>&, const ModelParams<R>&);                    \
  template Tensor<R> forward(const Tensor<R>&, const ModelParams<R>&);                           \
  template Tensor<R> forward_clip(const LabeledClip&, const ModelParams<R>&,                     \
                                  const SamplingPlan&, std::mt19937_64&);                        \
  template std::size_t predict(const Tensor<R>&);

STT_INSTANTIATE_MODEL(float)
STT_INSTANTIATE_MODEL(double)

template ModelParams<double> cast_params<double, float>(const ModelParams<float>&);
template ModelParams<float> cast_params<float, double>(const ModelParams<double>&);

}  // namespace stt
