#include <algorithm>
#include <cmath>

#include "stt/binary_io.hpp"
#include "stt/embed.hpp"
#include "stt/init.hpp"

namespace stt {

void SamplingPlan::validate() const {
  if (segments < 1 || frames_per_segment < 1) {
    throw ConfigError("sampling plan needs segments >= 1 and frames_per_segment >= 1");
  }
}

std::vector<std::size_t> sample_frames(std::size_t clip_length, const SamplingPlan& plan,
                                       std::mt19937_64& rng) {
  plan.validate();
  if (clip_length < 1) throw InputError("sample_frames: clip has no frames");
  const std::size_t span = plan.frames_per_segment;
  const std::size_t base = clip_length / plan.segments;
  const std::size_t remainder = clip_length % plan.segments;

  std::vector<std::size_t> indices;
  indices.reserve(plan.frames());
  std::size_t seg_start = 0;
  for (std::size_t s = 0; s < plan.segments; ++s) {
    const std::size_t len = base + (s < remainder ? 1 : 0);
    if (len == 0) {
      // More segments than frames: trailing segments reuse the last frame.
      indices.insert(indices.end(), span, std::min(seg_start, clip_length - 1));
      continue;
    }
    std::size_t offset = 0;
    if (len >= span) {
      if (plan.mode == SamplingMode::train) {
        offset = std::uniform_int_distribution<std::size_t>(0, len - span)(rng);
      } else {
        offset = (len - span) / 2;
      }
    }
    for (std::size_t j = 0; j < span; ++j) {
      indices.push_back(seg_start + std::min(offset + j, len - 1));
    }
    seg_start += len;
  }
  return indices;
}

std::string to_string(StemKind kind) {
  switch (kind) {
    case StemKind::conv:
      return "conv";
    case StemKind::linear_patch:
      return "linear-patch";
    case StemKind::precomputed:
      return "precomputed";
  }
  return "?";
}

StemKind stem_kind_from_string(const std::string& s) {
  if (s == "conv") return StemKind::conv;
  if (s == "linear-patch") return StemKind::linear_patch;
  if (s == "precomputed") return StemKind::precomputed;
  throw ConfigError("unknown stem kind '" + s + "'");
}

std::size_t StemConfig::grid_height() const {
  switch (kind) {
    case StemKind::conv:
      return in_height / 4;
    case StemKind::linear_patch:
      return in_height / patch;
    case StemKind::precomputed:
      return in_height;
  }
  return 0;
}

std::size_t StemConfig::grid_width() const {
  switch (kind) {
    case StemKind::conv:
      return in_width / 4;
    case StemKind::linear_patch:
      return in_width / patch;
    case StemKind::precomputed:
      return in_width;
  }
  return 0;
}

void StemConfig::validate() const {
  if (in_height < 1 || in_width < 1 || in_channels < 1 || channels < 1) {
    throw ConfigError("stem geometry must be positive");
  }
  switch (kind) {
    case StemKind::conv:
      if (in_height % 4 != 0 || in_width % 4 != 0) {
        throw ConfigError("conv stem needs frame extents divisible by 4, got " +
                          std::to_string(in_height) + "x" + std::to_string(in_width));
      }
      break;
    case StemKind::linear_patch:
      if (patch < 1 || in_height % patch != 0 || in_width % patch != 0) {
        throw ConfigError("linear-patch stem needs frame extents divisible by patch " +
                          std::to_string(patch));
      }
      break;
    case StemKind::precomputed:
      if (channels != in_channels) {
        throw ConfigError("precomputed stem passes features through; channels must equal "
                          "in_channels");
      }
      break;
  }
}

template <typename Real>
StemParams<Real> StemParams<Real>::init(const StemConfig& cfg, std::size_t dim,
                                        std::mt19937_64& rng) {
  cfg.validate();
  StemParams p;
  const auto fan = [](std::size_t n) { return 1.0 / std::sqrt(static_cast<double>(n)); };
  switch (cfg.kind) {
    case StemKind::linear_patch: {
      const auto in = cfg.patch * cfg.patch * cfg.in_channels;
      p.weights.push_back(normal_param<Real>({in, cfg.channels}, fan(in), rng));
      p.weights.push_back(constant_param<Real>({cfg.channels}, 0.0));
      break;
    }
    case StemKind::conv: {
      const auto in1 = 9 * cfg.in_channels;
      const auto in2 = 9 * cfg.channels;
      p.weights.push_back(normal_param<Real>({in1, cfg.channels}, fan(in1), rng));
      p.weights.push_back(constant_param<Real>({cfg.channels}, 0.0));
      p.weights.push_back(normal_param<Real>({in2, cfg.channels}, fan(in2), rng));
      p.weights.push_back(constant_param<Real>({cfg.channels}, 0.0));
      break;
    }
    case StemKind::precomputed:
      break;
  }
  p.projection = normal_param<Real>({cfg.channels, dim}, kInitStddev, rng);
  return p;
}

template <typename Real>
PositionalEmbeddings<Real> PositionalEmbeddings<Real>::init(std::size_t positions,
                                                            std::size_t frames, std::size_t dim,
                                                            std::mt19937_64& rng) {
  PositionalEmbeddings pe;
  pe.space = normal_param<Real>({positions, dim}, kInitStddev, rng);
  pe.time = normal_param<Real>({frames + 1, dim}, kInitStddev, rng);
  pe.cls = normal_param<Real>({dim}, kInitStddev, rng);
  return pe;
}

template <typename Real>
Tensor<Real> im2col(const Tensor<Real>& x, std::size_t kernel, std::size_t stride,
                    std::size_t pad) {
  if (x.dim() != 4) throw DimensionError("im2col: expected [F,H,W,C], got " + shape_str(x.shape()));
  const auto frames = x.extent(0), h = x.extent(1), w = x.extent(2), c = x.extent(3);
  if (kernel < 1 || stride < 1 || h + 2 * pad < kernel || w + 2 * pad < kernel) {
    throw DimensionError("im2col: kernel does not fit " + shape_str(x.shape()));
  }
  const auto ho = (h + 2 * pad - kernel) / stride + 1;
  const auto wo = (w + 2 * pad - kernel) / stride + 1;
  const auto cols = kernel * kernel * c;
  const auto rows = frames * ho * wo;

  // source[r * cols + j] = flat input offset, or npos for padding
  constexpr auto npos = static_cast<std::size_t>(-1);
  auto source = std::make_shared<std::vector<std::size_t>>(rows * cols, npos);
  for (std::size_t f = 0; f < frames; ++f) {
    for (std::size_t oy = 0; oy < ho; ++oy) {
      for (std::size_t ox = 0; ox < wo; ++ox) {
        const auto r = (f * ho + oy) * wo + ox;
        for (std::size_t ky = 0; ky < kernel; ++ky) {
          const auto iy = static_cast<std::ptrdiff_t>(oy * stride + ky) -
                          static_cast<std::ptrdiff_t>(pad);
          for (std::size_t kx = 0; kx < kernel; ++kx) {
            const auto ix = static_cast<std::ptrdiff_t>(ox * stride + kx) -
                            static_cast<std::ptrdiff_t>(pad);
            if (iy < 0 || ix < 0 || iy >= static_cast<std::ptrdiff_t>(h) ||
                ix >= static_cast<std::ptrdiff_t>(w)) {
              continue;
            }
            const auto in_base =
                ((f * h + static_cast<std::size_t>(iy)) * w + static_cast<std::size_t>(ix)) * c;
            for (std::size_t ch = 0; ch < c; ++ch) {
              (*source)[r * cols + (ky * kernel + kx) * c + ch] = in_base + ch;
            }
          }
        }
      }
    }
  }
  const auto xd = x.data();
  std::vector<Real> out(rows * cols, Real(0));
  for (std::size_t k = 0; k < out.size(); ++k) {
    if ((*source)[k] != npos) out[k] = xd[(*source)[k]];
  }
  return Tensor<Real>::make_result({rows, cols}, std::move(out), {x}, [source](Node<Real>& self) {
    Node<Real>* px = self.parents[0].get();
    if (!px->requires_grad) return;
    auto& g = px->grad_buffer();
    for (std::size_t k = 0; k < source->size(); ++k) {
      if ((*source)[k] != npos) g[(*source)[k]] += self.grad[k];
    }
  });
}

template <typename Real>
Tensor<Real> stem_forward(const Tensor<Real>& frames, const StemConfig& cfg,
                          const StemParams<Real>& params) {
  cfg.validate();
  if (frames.dim() != 4 || frames.extent(1) != cfg.in_height || frames.extent(2) != cfg.in_width ||
      frames.extent(3) != cfg.in_channels) {
    throw ConfigError("stem expects frames [F," + std::to_string(cfg.in_height) + "," +
                      std::to_string(cfg.in_width) + "," + std::to_string(cfg.in_channels) +
                      "], got " + shape_str(frames.shape()));
  }
  const auto f = frames.extent(0);
  const auto h = cfg.grid_height(), w = cfg.grid_width();
  switch (cfg.kind) {
    case StemKind::precomputed:
      return frames;
    case StemKind::linear_patch: {
      if (params.weights.size() != 2) throw ConfigError("linear-patch stem needs 2 tensors");
      const auto cols = im2col(frames, cfg.patch, cfg.patch, 0);
      const auto y = add_trailing(matmul(cols, params.weights[0]), params.weights[1]);
      return reshape(y, {f, h, w, cfg.channels});
    }
    case StemKind::conv: {
      if (params.weights.size() != 4) throw ConfigError("conv stem needs 4 tensors");
      auto y = add_trailing(matmul(im2col(frames, 3, 2, 1), params.weights[0]), params.weights[1]);
      y = reshape(gelu(y), {f, cfg.in_height / 2, cfg.in_width / 2, cfg.channels});
      y = add_trailing(matmul(im2col(y, 3, 2, 1), params.weights[2]), params.weights[3]);
      return reshape(y, {f, h, w, cfg.channels});
    }
  }
  throw ConfigError("unknown stem kind");
}

template <typename Real>
Tensor<Real> tokenize_project(const Tensor<Real>& f0, const Tensor<Real>& projection) {
  if (f0.dim() != 4) {
    throw DimensionError("tokenize_project: expected [F,H,W,C], got " + shape_str(f0.shape()));
  }
  const auto frames = f0.extent(0), positions = f0.extent(1) * f0.extent(2);
  const auto channels = f0.extent(3);
  if (projection.dim() != 2 || projection.extent(0) != channels) {
    throw DimensionError("tokenize_project: features " + shape_str(f0.shape()) +
                         " vs projection " + shape_str(projection.shape()));
  }
  const auto tokens = reshape(f0, {frames * positions, channels});
  return reshape(matmul(tokens, projection), {frames, positions, projection.extent(1)});
}

template <typename Real>
Tensor<Real> assemble_input(const Tensor<Real>& f1, const PositionalEmbeddings<Real>& pe) {
  if (f1.dim() != 3) {
    throw DimensionError("assemble_input: expected [F,P,d], got " + shape_str(f1.shape()));
  }
  const auto frames = f1.extent(0), positions = f1.extent(1), dim = f1.extent(2);
  if (pe.space.shape() != Shape{positions, dim} || pe.time.shape() != Shape{frames + 1, dim} ||
      pe.cls.shape() != Shape{dim}) {
    throw DimensionError("assemble_input: features " + shape_str(f1.shape()) +
                         " vs embeddings space " + shape_str(pe.space.shape()) + ", time " +
                         shape_str(pe.time.shape()) + ", cls " + shape_str(pe.cls.shape()));
  }
  const auto f2 = add_trailing(f1, pe.space);
  const auto cls_slot = repeat(reshape(pe.cls, {1, 1, dim}), 1, positions);
  const auto f3 = permute(concat<Real>({cls_slot, f2}, 0), {1, 0, 2});
  return add_trailing(f3, pe.time);
}

void write_feature_file(const std::string& path, const FeatureGrid& grid) {
  const std::size_t expected = static_cast<std::size_t>(grid.frames) * grid.height * grid.width *
                               grid.channels;
  if (expected == 0 || grid.values.size() != expected) {
    throw DimensionError("feature grid holds " + std::to_string(grid.values.size()) +
                         " values, header says " + std::to_string(expected));
  }
  io::ByteWriter w;
  w.u32(kFeatureFileMagic);
  w.u32(kFeatureFileVersion);
  w.u32(grid.frames);
  w.u32(grid.height);
  w.u32(grid.width);
  w.u32(grid.channels);
  for (float v : grid.values) w.f32(v);
  io::write_file(path, w.bytes());
}

FeatureGrid read_feature_file(const std::string& path) {
  const auto bytes = io::read_file(path);
  io::ByteReader r(bytes);
  if (r.u32() != kFeatureFileMagic) throw CorruptFileError(path + ": not a feature file");
  if (const auto v = r.u32(); v != kFeatureFileVersion) {
    throw VersionMismatchError(path + ": feature file version " + std::to_string(v));
  }
  FeatureGrid g;
  g.frames = r.u32();
  g.height = r.u32();
  g.width = r.u32();
  g.channels = r.u32();
  const std::size_t n = static_cast<std::size_t>(g.frames) * g.height * g.width * g.channels;
  if (n == 0) throw CorruptFileError(path + ": empty feature grid");
  if (r.remaining() != n * 4) {
    throw CorruptFileError(path + ": payload is " + std::to_string(r.remaining()) +
                           " bytes, expected " + std::to_string(n * 4));
  }
  g.values.resize(n);
  for (auto& v : g.values) v = r.f32();
  return g;
}

#define STT_INSTANTIATE_EMBED(R)                                                                 \
  template struct StemParams<R>;                                                                 \
  template struct PositionalEmbeddings<R>;                                                       \
  template Tensor<R> im2col(const Tensor<R>&, std::size_t, std::size_t, std::size_t);            \
  template Tensor<R> stem_forward(const Tensor<R>&, const StemConfig&, const StemParams<R>&);    \
  template Tensor<R> tokenize_project(const Tensor<R>&, const Tensor<R>&);                       \
  template Tensor<R> assemble_input(const Tensor<R>&, const PositionalEmbeddings<R>&);

STT_INSTANTIATE_EMBED(float)
STT_INSTANTIATE_EMBED(double)

}  // namespace stt
