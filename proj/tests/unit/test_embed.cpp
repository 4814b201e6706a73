#include <gtest/gtest.h>

#include <algorithm>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <numeric>

#include "stt/binary_io.hpp"
#include "stt/embed.hpp"
#include "stt/grad_check.hpp"
#include "support/oracle.hpp"

using namespace stt;
using stt::testing::random_tensor;
using stt::testing::values;
using T = Tensor<double>;

namespace {
SamplingPlan plan(std::size_t s, std::size_t t, SamplingMode mode) {
  SamplingPlan p;
  p.segments = s;
  p.frames_per_segment = t;
  p.mode = mode;
  return p;
}
}  // namespace

TEST(Sampling, ExactFitGivesEveryFrame) {
  std::mt19937_64 rng(0);
  std::vector<std::size_t> all(16);
  std::iota(all.begin(), all.end(), 0);
  for (auto mode : {SamplingMode::train, SamplingMode::test}) {
    EXPECT_EQ(sample_frames(16, plan(8, 2, mode), rng), all);
  }
}

TEST(Sampling, MidSegmentExample) {
  std::mt19937_64 rng(0);
  const std::vector<std::size_t> expected{2, 3, 8, 9, 14, 15, 20, 21, 26, 27, 32, 33, 38, 39, 44, 45};
  EXPECT_EQ(sample_frames(48, plan(8, 2, SamplingMode::test), rng), expected);
}

TEST(Sampling, FrameCountIsSegmentsTimesSpan) {
  EXPECT_EQ(plan(8, 2, SamplingMode::test).frames(), 16u);
  std::mt19937_64 rng(0);
  EXPECT_EQ(sample_frames(100, plan(8, 2, SamplingMode::train), rng).size(), 16u);
}

TEST(Sampling, RemainderGoesToLeadingSegments) {
  std::mt19937_64 rng(0);
  // 10 frames, 3 segments -> lengths 4, 3, 3 starting at 0, 4, 7
  const auto idx = sample_frames(10, plan(3, 1, SamplingMode::test), rng);
  EXPECT_EQ(idx, (std::vector<std::size_t>{1, 5, 8}));
}

TEST(Sampling, ShortSegmentsRepeatLastFrame) {
  std::mt19937_64 rng(0);
  // 6 frames, 2 segments of 3, 4 per segment
  const auto idx = sample_frames(6, plan(2, 4, SamplingMode::test), rng);
  EXPECT_EQ(idx, (std::vector<std::size_t>{0, 1, 2, 2, 3, 4, 5, 5}));
}

TEST(Sampling, MoreSegmentsThanFramesStaysInRange) {
  std::mt19937_64 rng(0);
  const auto idx = sample_frames(2, plan(4, 2, SamplingMode::test), rng);
  ASSERT_EQ(idx.size(), 8u);
  for (auto i : idx) EXPECT_LT(i, 2u);
  EXPECT_TRUE(std::is_sorted(idx.begin(), idx.end()));
}

TEST(Sampling, EmptyClipIsInputError) {
  std::mt19937_64 rng(0);
  EXPECT_THROW(sample_frames(0, plan(4, 2, SamplingMode::test), rng), InputError);
}

TEST(Sampling, InvalidPlanIsConfigError) {
  std::mt19937_64 rng(0);
  EXPECT_THROW(sample_frames(10, plan(0, 2, SamplingMode::test), rng), ConfigError);
  EXPECT_THROW(sample_frames(10, plan(2, 0, SamplingMode::test), rng), ConfigError);
}

TEST(Sampling, TestModeIsDeterministic) {
  std::mt19937_64 a(1), b(99);
  EXPECT_EQ(sample_frames(37, plan(4, 3, SamplingMode::test), a),
            sample_frames(37, plan(4, 3, SamplingMode::test), b));
}

TEST(Sampling, TrainDrawsStayInsideTheirSegments) {
  std::mt19937_64 rng(7);
  std::uniform_int_distribution<std::size_t> len_dist(1, 60), seg_dist(1, 8), span_dist(1, 4);
  for (int draw = 0; draw < 10000; ++draw) {
    const auto len = len_dist(rng), s = seg_dist(rng), t = span_dist(rng);
    const auto idx = sample_frames(len, plan(s, t, SamplingMode::train), rng);
    ASSERT_EQ(idx.size(), s * t);
    const auto base = len / s, rem = len % s;
    std::size_t start = 0;
    for (std::size_t seg = 0; seg < s; ++seg) {
      const auto seg_len = base + (seg < rem ? 1 : 0);
      for (std::size_t j = 0; j < t; ++j) {
        const auto i = idx[seg * t + j];
        ASSERT_LT(i, len);
        if (seg_len > 0) {
          ASSERT_GE(i, start);
          ASSERT_LT(i, start + seg_len);
        }
        if (j > 0) {
          ASSERT_LE(idx[seg * t + j - 1], i);
        }
      }
      if (seg > 0 && seg_len > 0) {
        ASSERT_LT(idx[seg * t - 1], idx[seg * t]);
      }
      start += seg_len;
    }
  }
}

TEST(Stem, PrecomputedIsIdentity) {
  std::mt19937_64 rng(1);
  StemConfig cfg{StemKind::precomputed, 3, 3, 5, 1, 5};
  const auto params = StemParams<double>::init(cfg, 8, rng);
  const auto x = random_tensor({2, 3, 3, 5}, rng);
  EXPECT_EQ(values(stem_forward(x, cfg, params)), values(x));
}

TEST(Stem, LinearPatchGridShape) {
  std::mt19937_64 rng(1);
  StemConfig cfg{StemKind::linear_patch, 8, 8, 3, 4, 6};
  const auto params = StemParams<double>::init(cfg, 8, rng);
  EXPECT_EQ(stem_forward(random_tensor({5, 8, 8, 3}, rng), cfg, params).shape(), (Shape{5, 2, 2, 6}));
}

TEST(Stem, ConvGridShape) {
  std::mt19937_64 rng(1);
  StemConfig cfg{StemKind::conv, 16, 8, 2, 4, 6};
  const auto params = StemParams<double>::init(cfg, 8, rng);
  EXPECT_EQ(stem_forward(random_tensor({3, 16, 8, 2}, rng), cfg, params).shape(), (Shape{3, 4, 2, 6}));
}

TEST(Stem, IncompatibleGeometryIsConfigError) {
  std::mt19937_64 rng(1);
  StemConfig cfg{StemKind::linear_patch, 8, 8, 1, 4, 4};
  const auto params = StemParams<double>::init(cfg, 8, rng);
  EXPECT_THROW(stem_forward(random_tensor({2, 9, 8, 1}, rng), cfg, params), ConfigError);
  EXPECT_THROW((StemConfig{StemKind::linear_patch, 10, 8, 1, 4, 4}.validate()), ConfigError);
  EXPECT_THROW((StemConfig{StemKind::conv, 6, 8, 1, 4, 4}.validate()), ConfigError);
  EXPECT_THROW((StemConfig{StemKind::precomputed, 2, 2, 3, 1, 4}.validate()), ConfigError);
}

TEST(Stem, FrameOrderPermutesGrids) {
  std::mt19937_64 rng(2);
  for (auto kind : {StemKind::linear_patch, StemKind::conv}) {
    StemConfig cfg{kind, 8, 8, 1, 4, 3};
    const auto params = StemParams<double>::init(cfg, 8, rng);
    const auto x = random_tensor({3, 8, 8, 1}, rng);
    const auto y = stem_forward(x, cfg, params);
    const auto xr = index_select(permute(x, {1, 2, 3, 0}), {2, 0, 1});
    const auto yr = stem_forward(permute(xr, {3, 0, 1, 2}), cfg, params);
    const auto expect = index_select(permute(y, {1, 2, 3, 0}), {2, 0, 1});
    EXPECT_EQ(values(yr), values(permute(expect, {3, 0, 1, 2})));
  }
}

TEST(Stem, GradientsMatchFiniteDifferences) {
  for (auto kind : {StemKind::linear_patch, StemKind::conv}) {
    std::mt19937_64 rng(3);
    StemConfig cfg{kind, 8, 8, 2, 4, 3};
    auto params = StemParams<double>::init(cfg, 4, rng);
    const auto x = random_tensor({2, 8, 8, 2}, rng, 1.0, true);
    const auto w = random_tensor({2 * 4 * 4}, rng);
    auto f = [&] {
      const auto out = tokenize_project(stem_forward(x, cfg, params), params.projection);
      return sum(mul(reshape(out, {out.numel()}), w));
    };
    auto probe = params.weights;
    probe.push_back(params.projection);
    probe.push_back(x);
    EXPECT_LT(grad_check(f, probe).max_rel_error, 1e-5) << to_string(kind);
  }
}

TEST(Tokenize, IdentityProjectionIsFlatten) {
  std::mt19937_64 rng(4);
  const auto f0 = random_tensor({2, 2, 3, 4}, rng);
  std::vector<double> eye(16, 0.0);
  for (int i = 0; i < 4; ++i) eye[i * 5] = 1.0;
  const auto f1 = tokenize_project(f0, T::from({4, 4}, eye));
  EXPECT_EQ(f1.shape(), (Shape{2, 6, 4}));
  EXPECT_EQ(values(f1), values(f0));
}

TEST(Tokenize, SingleTokenGrid) {
  std::mt19937_64 rng(5);
  const auto f0 = random_tensor({3, 1, 1, 4}, rng);
  const auto w = random_tensor({4, 6}, rng);
  const auto f1 = tokenize_project(f0, w);
  for (std::size_t t = 0; t < 3; ++t) {
    const auto expect = stt::testing::vecmat(
        std::vector<double>(f0.data().begin() + t * 4, f0.data().begin() + t * 4 + 4), values(w), 6);
    for (std::size_t j = 0; j < 6; ++j) EXPECT_NEAR(f1.at(t * 6 + j), expect[j], 1e-12);
  }
}

TEST(Tokenize, MatchesPerTokenOracle) {
  std::mt19937_64 rng(6);
  const auto f0 = random_tensor({3, 2, 2, 5}, rng);
  const auto w = random_tensor({5, 7}, rng);
  const auto f1 = tokenize_project(f0, w);
  const auto fv = values(f0);
  for (std::size_t t = 0; t < 3; ++t)
    for (std::size_t p = 0; p < 4; ++p) {
      const auto base = (t * 4 + p) * 5;
      const auto expect = stt::testing::vecmat(std::vector<double>(fv.begin() + base, fv.begin() + base + 5), values(w), 7);
      for (std::size_t j = 0; j < 7; ++j) EXPECT_NEAR(f1.at((t * 4 + p) * 7 + j), expect[j], 1e-6);
    }
}

TEST(Tokenize, ChannelMismatchIsDimensionError) {
  EXPECT_THROW(tokenize_project(T::zeros({1, 2, 2, 3}), T::zeros({4, 4})), DimensionError);
}

namespace {
PositionalEmbeddings<double> zero_embeddings(std::size_t p, std::size_t f, std::size_t d) {
  return {T::zeros({p, d}), T::zeros({f + 1, d}), T::zeros({d})};
}
}  // namespace

TEST(Assemble, ZeroEmbeddingsTransposeWithEmptySlot) {
  std::mt19937_64 rng(7);
  const auto f1 = random_tensor({4, 4, 8}, rng);
  const auto z0 = assemble_input(f1, zero_embeddings(4, 4, 8));
  ASSERT_EQ(z0.shape(), (Shape{4, 5, 8}));
  double frames_abs = 0.0, f1_abs = 0.0;
  for (std::size_t p = 0; p < 4; ++p) {
    for (std::size_t i = 0; i < 8; ++i) EXPECT_EQ(z0.at((p * 5) * 8 + i), 0.0);
    for (std::size_t t = 0; t < 4; ++t)
      for (std::size_t i = 0; i < 8; ++i) {
        EXPECT_EQ(z0.at((p * 5 + t + 1) * 8 + i), f1.at((t * 4 + p) * 8 + i));
        frames_abs += std::abs(z0.at((p * 5 + t + 1) * 8 + i));
      }
  }
  for (double v : f1.data()) f1_abs += std::abs(v);
  EXPECT_DOUBLE_EQ(frames_abs, f1_abs);
}

TEST(Assemble, ClassificationSlotIsReplicated) {
  std::mt19937_64 rng(8);
  const auto f1 = random_tensor({3, 4, 6}, rng);
  PositionalEmbeddings<double> pe{T::zeros({4, 6}), random_tensor({4, 6}, rng), random_tensor({6}, rng)};
  const auto z0 = assemble_input(f1, pe);
  for (std::size_t p = 1; p < 4; ++p)
    for (std::size_t i = 0; i < 6; ++i) EXPECT_EQ(z0.at(p * 4 * 6 + i), z0.at(i));
  for (std::size_t i = 0; i < 6; ++i) EXPECT_EQ(z0.at(i), pe.cls.at(i) + pe.time.at(i));
}

TEST(Assemble, EmbeddingsAddWhereExpected) {
  std::mt19937_64 rng(9);
  const auto f1 = random_tensor({2, 3, 4}, rng);
  PositionalEmbeddings<double> pe{random_tensor({3, 4}, rng), random_tensor({3, 4}, rng), random_tensor({4}, rng)};
  const auto z0 = assemble_input(f1, pe);
  for (std::size_t p = 0; p < 3; ++p)
    for (std::size_t t = 0; t < 2; ++t)
      for (std::size_t i = 0; i < 4; ++i) {
        const double expect = f1.at((t * 3 + p) * 4 + i) + pe.space.at(p * 4 + i) + pe.time.at((t + 1) * 4 + i);
        EXPECT_NEAR(z0.at((p * 3 + t + 1) * 4 + i), expect, 1e-15);
      }
}

TEST(Assemble, ShapeMismatchIsDimensionError) {
  EXPECT_THROW(assemble_input(T::zeros({4, 4, 8}), zero_embeddings(3, 4, 8)), DimensionError);
  EXPECT_THROW(assemble_input(T::zeros({4, 4, 8}), zero_embeddings(4, 5, 8)), DimensionError);
}

TEST(Assemble, EmbeddingsAreTracked) {
  std::mt19937_64 rng(10);
  const auto pe = PositionalEmbeddings<double>::init(4, 3, 8, rng);
  EXPECT_EQ(pe.space.shape(), (Shape{4, 8}));
  EXPECT_EQ(pe.time.shape(), (Shape{4, 8}));
  EXPECT_EQ(pe.cls.shape(), (Shape{8}));
  EXPECT_TRUE(pe.space.requires_grad() && pe.time.requires_grad() && pe.cls.requires_grad());
}

TEST(FeatureFile, RoundTrip) {
  const auto path = (std::filesystem::temp_directory_path() / "stt_feature_roundtrip.sttf").string();
  FeatureGrid grid{2, 3, 1, 2, {}};
  for (int i = 0; i < 12; ++i) grid.values.push_back(0.25f * static_cast<float>(i) - 1.0f);
  write_feature_file(path, grid);
  const auto back = read_feature_file(path);
  EXPECT_EQ(back.frames, 2u);
  EXPECT_EQ(back.height, 3u);
  EXPECT_EQ(back.width, 1u);
  EXPECT_EQ(back.channels, 2u);
  EXPECT_EQ(back.values, grid.values);
  const auto bytes = io::read_file(path);
  EXPECT_EQ(bytes.size(), 24u + 12u * 4u);
  EXPECT_EQ(bytes[0], 'S');
  EXPECT_EQ(bytes[1], 'T');
  std::filesystem::remove(path);
}

TEST(FeatureFile, TruncatedIsCorrupt) {
  const auto path = (std::filesystem::temp_directory_path() / "stt_feature_trunc.sttf").string();
  write_feature_file(path, FeatureGrid{1, 2, 2, 1, {1, 2, 3, 4}});
  auto bytes = io::read_file(path);
  bytes.resize(bytes.size() - 3);
  io::write_file(path, bytes);
  EXPECT_THROW(read_feature_file(path), CorruptFileError);
  std::filesystem::remove(path);
}
