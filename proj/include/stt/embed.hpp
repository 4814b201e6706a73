#pragma once

// Clip -> token grid: segment frame sampling, per-frame stem, 1x1 projection,
// positional embeddings and the classification slot.

#include <cstddef>
#include <cstdint>
#include <random>
#include <string>
#include <vector>

#include "stt/tensor.hpp"

namespace stt {

enum class SamplingMode { train, test };

/// S segments, T consecutive frames from each; F = S * T.
struct SamplingPlan {
  std::size_t segments = 4;
  std::size_t frames_per_segment = 2;
  SamplingMode mode = SamplingMode::test;

  std::size_t frames() const { return segments * frames_per_segment; }
  void validate() const;
};

/// Splits [0, clip_length) into `segments` near-equal runs (leading runs take
/// the remainder) and picks T consecutive indices from each. Train mode draws
/// the start uniformly so the run fits; test mode centres it. Runs shorter
/// than T repeat their last frame.
std::vector<std::size_t> sample_frames(std::size_t clip_length, const SamplingPlan& plan,
                                       std::mt19937_64& rng);

enum class StemKind { conv, linear_patch, precomputed };

std::string to_string(StemKind kind);
StemKind stem_kind_from_string(const std::string& s);

/// Frame geometry in, feature grid out.
///   conv:         two 3x3 stride-2 convolutions with GELU between; H = H0 / 4
///   linear_patch: non-overlapping patch x patch tiles mapped linearly; H = H0 / patch
///   precomputed:  input already is the F x H x W x C feature grid
struct StemConfig {
  StemKind kind = StemKind::linear_patch;
  std::size_t in_height = 16;
  std::size_t in_width = 16;
  std::size_t in_channels = 1;
  std::size_t patch = 4;
  /// Feature channels C of the grid (for precomputed: must equal in_channels).
  std::size_t channels = 16;

  std::size_t grid_height() const;
  std::size_t grid_width() const;
  void validate() const;
};

template <typename Real>
struct StemParams {
  // linear_patch: {w [patch*patch*Cin, C], b [C]}
  // conv:         {w1 [9*Cin, C], b1 [C], w2 [9*C, C], b2 [C]}
  std::vector<Tensor<Real>> weights;
  /// 1x1 projection C -> d, no bias.
  Tensor<Real> projection;

  static StemParams init(const StemConfig& cfg, std::size_t dim, std::mt19937_64& rng);
};

template <typename Real>
struct PositionalEmbeddings {
  Tensor<Real> space;  // [H*W, d]
  Tensor<Real> time;   // [F+1, d], slot 0 is the classification slot
  Tensor<Real> cls;    // [d]

  static PositionalEmbeddings init(std::size_t positions, std::size_t frames, std::size_t dim,
                                   std::mt19937_64& rng);
};

/// Sliding-window unfold: x [F,H,W,C] -> [F*Ho*Wo, k*k*C], columns ordered
/// (ky, kx, c); zero padding.
template <typename Real>
Tensor<Real> im2col(const Tensor<Real>& x, std::size_t kernel, std::size_t stride,
                    std::size_t pad);

/// frames [F,H0,W0,Cin] -> f0 [F,H,W,C]. Stateless per frame.
template <typename Real>
Tensor<Real> stem_forward(const Tensor<Real>& frames, const StemConfig& cfg,
                          const StemParams<Real>& params);

/// f0 [F,H,W,C] -> f1 [F,H*W,d]: row-major spatial flatten, then a shared
/// linear map per token.
template <typename Real>
Tensor<Real> tokenize_project(const Tensor<Real>& f0, const Tensor<Real>& projection);

/// f1 [F,P,d] -> z0 [P,F+1,d]. Adds the spatial embedding to every frame,
/// places the classification vector at slot 0 of every position, then adds
/// the temporal embedding to every position.
template <typename Real>
Tensor<Real> assemble_input(const Tensor<Real>& f1, const PositionalEmbeddings<Real>& pe);

/// Precomputed feature grid on disk: "STTF" magic, u32 version, u32 F, H, W,
/// C, then F*H*W*C float32 values, all little-endian.
struct FeatureGrid {
  std::uint32_t frames = 0;
  std::uint32_t height = 0;
  std::uint32_t width = 0;
  std::uint32_t channels = 0;
  std::vector<float> values;
};

inline constexpr std::uint32_t kFeatureFileMagic = 0x46545453;  // "STTF"
inline constexpr std::uint32_t kFeatureFileVersion = 1;

void write_feature_file(const std::string& path, const FeatureGrid& grid);
FeatureGrid read_feature_file(const std::string& path);

}  // namespace stt
