#include <gtest/gtest.h>

#include <array>
#include <cmath>
#include <filesystem>
#include <map>

#include "stt/ablate.hpp"
#include "stt/binary_io.hpp"
#include "stt/config.hpp"
#include "stt/dataset.hpp"
#include "stt/synthetic.hpp"
#include "stt/train.hpp"

using namespace stt;
namespace fs = std::filesystem;

namespace {

SyntheticSpec tiny_spec(SyntheticTask task, std::size_t n) {
  SyntheticSpec s;
  s.task = task;
  s.classes = 2;
  s.frames = 8;
  s.height = s.width = 4;
  s.train_size = s.test_size = n;
  s.noise = 0.05;
  return s;
}

TrainConfig tiny_train_config(std::size_t epochs) {
  TrainConfig c;
  c.model = ModelGeometry::tiny();
  c.model.classes = 2;
  c.sampling.segments = 2;
  c.sampling.frames_per_segment = 2;
  c.optimizer.lr = 0.1;
  c.optimizer.epochs = epochs;
  c.optimizer.batch_size = 8;
  c.seed = 3;
  return c;
}

float pixel(const LabeledClip& c, std::size_t t, std::size_t y, std::size_t x) {
  return c.pixels[(t * c.height + y) * c.width + x];
}

fs::path temp_path(const std::string& name) { return fs::temp_directory_path() / name; }

}  // namespace

// Synthetic data

TEST(Synthetic, SameSeedSameData) {
  auto spec = SyntheticSpec{};
  spec.noise = 0.0;
  spec.train_size = spec.test_size = 20;
  const auto a = gen_synthetic(spec), b = gen_synthetic(spec);
  for (std::size_t i = 0; i < 20; ++i) {
    EXPECT_EQ(a.train[i].pixels, b.train[i].pixels);
    EXPECT_EQ(a.test[i].label, b.test[i].label);
  }
  spec.seed = 1;
  EXPECT_NE(gen_synthetic(spec).train[0].pixels, a.train[0].pixels);
}

TEST(Synthetic, NoisyDataIsSeedDeterministic) {
  auto spec = SyntheticSpec{};
  spec.train_size = spec.test_size = 4;
  EXPECT_EQ(gen_synthetic(spec).train[3].pixels, gen_synthetic(spec).train[3].pixels);
}

TEST(Synthetic, ReversedClassZeroClipIsClassOne) {
  auto spec = SyntheticSpec{};
  spec.noise = 0.0;
  spec.train_size = 40;
  const auto clips = gen_split(spec, Split::train, 40);
  // class 1 moves one pixel left per frame
  auto moves_left = [](const LabeledClip& c, bool reversed) {
    for (std::size_t t = 0; t + 1 < c.frames; ++t) {
      const auto a = reversed ? c.frames - 1 - t : t, b = reversed ? a - 1 : a + 1;
      for (std::size_t y = 0; y < c.height; ++y)
        for (std::size_t x = 0; x < c.width; ++x)
          if (pixel(c, b, y, x) != pixel(c, a, y, (x + 1) % c.width)) return false;
    }
    return true;
  };
  for (const auto& c : clips) {
    EXPECT_EQ(moves_left(c, c.label == 0), true) << "label " << c.label;
    EXPECT_EQ(moves_left(c, c.label == 1), false);
  }
}

TEST(Synthetic, BlobPositionMarginalsMatchAcrossClasses) {
  auto spec = SyntheticSpec{};
  spec.noise = 0.0;
  const std::size_t n = 10000;
  const auto clips = gen_split(spec, Split::train, n);
  const auto bins = spec.blob_spacing * spec.blob_spacing;
  // counts[frame][class][bin]: lattice phase of the brightest pixel
  std::vector<std::array<std::vector<double>, 2>> counts(spec.frames);
  for (auto& f : counts) f = {std::vector<double>(bins, 0.0), std::vector<double>(bins, 0.0)};
  for (const auto& c : clips) {
    for (std::size_t t = 0; t < c.frames; ++t) {
      std::size_t best = 0;
      for (std::size_t i = 1; i < c.height * c.width; ++i)
        if (c.pixels[t * c.height * c.width + i] > c.pixels[t * c.height * c.width + best]) best = i;
      const auto y = best / c.width % spec.blob_spacing, x = best % c.width % spec.blob_spacing;
      counts[t][c.label][y * spec.blob_spacing + x] += 1.0;
    }
  }
  // chi-square homogeneity per frame, 15 dof; 45.56 is the 1 - 0.001/16 quantile
  for (std::size_t t = 0; t < spec.frames; ++t) {
    double chi2 = 0.0;
    const double n0 = n / 2.0, n1 = n / 2.0;
    for (std::size_t b = 0; b < bins; ++b) {
      const double col = counts[t][0][b] + counts[t][1][b];
      if (col == 0) continue;
      const double e0 = col * n0 / n, e1 = col * n1 / n;
      chi2 += std::pow(counts[t][0][b] - e0, 2) / e0 + std::pow(counts[t][1][b] - e1, 2) / e1;
    }
    EXPECT_LT(chi2, 45.56) << "frame " << t;
  }
}

TEST(Synthetic, LabelsCycleAndShapesMatch) {
  auto spec = tiny_spec(SyntheticTask::apex_frame, 9);
  spec.classes = 3;
  const auto clips = gen_split(spec, Split::test, 9);
  for (std::size_t i = 0; i < 9; ++i) {
    EXPECT_EQ(clips[i].label, i % 3);
    EXPECT_EQ(clips[i].pixels.size(), 8u * 4 * 4);
  }
}

TEST(Synthetic, StaticPatternFramesAreIdentical) {
  auto spec = SyntheticSpec{};
  spec.task = SyntheticTask::static_pattern;
  spec.noise = 0.0;
  const auto clips = gen_split(spec, Split::train, 8);
  for (const auto& c : clips) {
    const auto n = c.frame_size();
    for (std::size_t t = 1; t < c.frames; ++t)
      EXPECT_TRUE(std::equal(c.pixels.begin(), c.pixels.begin() + n, c.pixels.begin() + t * n));
  }
}

TEST(Synthetic, InvalidSpecIsConfigError) {
  auto spec = SyntheticSpec{};
  spec.blob_spacing = 5;
  EXPECT_THROW(gen_synthetic(spec), ConfigError);
  spec = SyntheticSpec{};
  spec.classes = 5;
  EXPECT_THROW(gen_synthetic(spec), ConfigError);
  spec = SyntheticSpec{};
  spec.noise = -1.0;
  EXPECT_THROW(gen_synthetic(spec), ConfigError);
  spec = SyntheticSpec{};
  spec.height = 0;
  EXPECT_THROW(gen_synthetic(spec), ConfigError);
  EXPECT_THROW(synthetic_task_from_string("nope"), ConfigError);
}

// Optimisation

TEST(Schedule, DefaultPresetDecadeSteps) {
  OptimizerConfig opt;  // lr 0.01, divided by 10 every 40 epochs
  EXPECT_EQ(learning_rate(opt, 0), 0.01);
  EXPECT_EQ(learning_rate(opt, 39), 0.01);
  EXPECT_EQ(learning_rate(opt, 40), 0.001);
  EXPECT_EQ(learning_rate(opt, 79), 0.001);
  EXPECT_EQ(learning_rate(opt, 80), 0.0001);
}

TEST(Schedule, PiecewiseConstantWithRatioTen) {
  OptimizerConfig opt;
  opt.lr = 0.3;
  opt.decay_period = 7;
  for (std::size_t e = 1; e < 50; ++e) {
    const double prev = learning_rate(opt, e - 1), cur = learning_rate(opt, e);
    if (e % 7 == 0) {
      EXPECT_NEAR(prev / cur, 10.0, 1e-12);
    } else {
      EXPECT_EQ(prev, cur);
    }
  }
}

TEST(Sgd, QuadraticFollowsGeometricDecay) {
  // f = a/2 theta^2, theta_k = (1 - lr a)^k theta_0
  const double a = 3.0, lr = 0.05, theta0 = 2.0;
  auto theta = Tensor<double>::from({1}, {theta0}, true);
  Sgd<double> sgd({theta});
  for (int k = 1; k <= 50; ++k) {
    sgd.zero_grad();
    scale(sum(mul(theta, theta)), a / 2).backward();
    sgd.step(lr);
    EXPECT_NEAR(theta.item(), theta0 * std::pow(1 - lr * a, k), 1e-14);
  }
}

TEST(Sgd, MomentumAndWeightDecay) {
  auto theta = Tensor<double>::from({1}, {1.0}, true);
  Sgd<double> sgd({theta}, 0.5, 0.1);
  double v = 0.0, x = 1.0;
  for (int k = 0; k < 5; ++k) {
    sgd.zero_grad();
    sum(theta).backward();  // grad 1
    sgd.step(0.1);
    v = 0.5 * v + (1.0 + 0.1 * x);
    x -= 0.1 * v;
    EXPECT_NEAR(theta.item(), x, 1e-15);
  }
}

TEST(Sgd, ClipScalesToTheGlobalNorm) {
  auto a = Tensor<double>::from({2}, {0.0, 0.0}, true);
  auto b = Tensor<double>::from({1}, {0.0}, true);
  Sgd<double> sgd({a, b});
  // gradients (3, 0) and (4): global norm 5
  add(scale(sum(slice(a, 0, 0, 1)), 3.0), scale(sum(b), 4.0)).backward();
  EXPECT_DOUBLE_EQ(sgd.clip_grad_norm(1.0), 5.0);
  EXPECT_NEAR(a.grad()[0], 0.6, 1e-15);
  EXPECT_NEAR(b.grad()[0], 0.8, 1e-15);
  EXPECT_DOUBLE_EQ(sgd.clip_grad_norm(2.0), 1.0);  // below the limit: unchanged
  EXPECT_NEAR(b.grad()[0], 0.8, 1e-15);
}

TEST(Optimizer, InvalidSettingsAreConfigErrors) {
  OptimizerConfig opt;
  opt.lr = 0.0;
  EXPECT_THROW(opt.validate(), ConfigError);
  opt = {};
  opt.decay_period = 0;
  EXPECT_THROW(opt.validate(), ConfigError);
  opt = {};
  opt.momentum = 1.0;
  EXPECT_THROW(opt.validate(), ConfigError);
  opt = {};
  opt.grad_clip = -1.0;
  EXPECT_THROW(opt.validate(), ConfigError);
}

// Training

TEST(Train, SameSeedIsBitwiseReproducible) {
  const auto data = gen_synthetic(tiny_spec(SyntheticTask::motion_direction, 16));
  const auto cfg = tiny_train_config(3);
  const auto a = train(cfg, data.train), b = train(cfg, data.train);
  EXPECT_EQ(encode_checkpoint(a.checkpoint), encode_checkpoint(b.checkpoint));
  EXPECT_EQ(format_log(a.log), format_log(b.log));
  auto other = cfg;
  other.seed = 4;
  EXPECT_NE(encode_checkpoint(train(other, data.train).checkpoint), encode_checkpoint(a.checkpoint));
}

TEST(Train, ResumeMatchesUninterruptedRun) {
  const auto data = gen_synthetic(tiny_spec(SyntheticTask::motion_direction, 16));
  for (double momentum : {0.0, 0.9}) {
    auto cfg = tiny_train_config(4);
    cfg.optimizer.momentum = momentum;
    const auto full = train(cfg, data.train);
    auto half_cfg = cfg;
    half_cfg.optimizer.epochs = 2;
    const auto half = train(half_cfg, data.train);
    const auto resumed = train(cfg, data.train, nullptr, &half.checkpoint);
    EXPECT_EQ(resumed.log.size(), 2u);
    EXPECT_EQ(resumed.log.front().epoch, 2u);
    const auto a = full.checkpoint.params.named_tensors(), b = resumed.checkpoint.params.named_tensors();
    for (std::size_t i = 0; i < a.size(); ++i)
      EXPECT_TRUE(std::equal(a[i].second.data().begin(), a[i].second.data().end(), b[i].second.data().begin()))
          << a[i].first;
  }
}

TEST(Train, LogRecordsScheduleAndEvaluation) {
  const auto data = gen_synthetic(tiny_spec(SyntheticTask::static_pattern, 8));
  auto cfg = tiny_train_config(4);
  cfg.optimizer.decay_period = 2;
  cfg.eval_every = 2;
  const auto r = train(cfg, data.train, &data.test);
  ASSERT_EQ(r.log.size(), 4u);
  EXPECT_EQ(r.log[1].lr, 0.1);
  EXPECT_EQ(r.log[2].lr, 0.01);
  EXPECT_FALSE(r.log[0].war.has_value());
  EXPECT_TRUE(r.log[1].war.has_value());
  EXPECT_EQ(r.checkpoint.epoch, 4u);
  EXPECT_EQ(r.checkpoint.config_digest, cfg.digest());
  EXPECT_NE(format_log(r.log).find("epoch,lr,mean_loss,uar,war"), std::string::npos);
}

TEST(Train, NonFiniteLossNamesTheSeed) {
  auto data = gen_synthetic(tiny_spec(SyntheticTask::motion_direction, 8));
  for (auto& p : data.train[5].pixels) p = std::nanf("");
  try {
    train(tiny_train_config(1), data.train);
    FAIL() << "expected NumericError";
  } catch (const NumericError& e) {
    EXPECT_NE(std::string(e.what()).find("seed 3"), std::string::npos) << e.what();
  }
}

TEST(Train, MismatchedDataIsRejected) {
  auto data = gen_synthetic(tiny_spec(SyntheticTask::motion_direction, 4));
  auto cfg = tiny_train_config(1);
  cfg.model.stem.in_height = 8;
  EXPECT_THROW(train(cfg, data.train), ConfigError);
  data.train[0].label = 7;
  EXPECT_THROW(train(tiny_train_config(1), data.train), InputError);
  EXPECT_THROW(train(tiny_train_config(1), {}), InputError);
  auto bad = tiny_train_config(1);
  bad.sampling.segments = 3;
  EXPECT_THROW(train(bad, gen_synthetic(tiny_spec(SyntheticTask::motion_direction, 4)).train), ConfigError);
}

TEST(Train, MemorisationLossDecreasesForMostSeeds) {
  auto spec = SyntheticSpec{};
  spec.task = SyntheticTask::static_pattern;
  const auto data = gen_split(spec, Split::train, 32);
  int monotone = 0;
  for (std::uint64_t seed = 0; seed < 5; ++seed) {
    TrainConfig cfg;  // desk geometry, full-batch steps
    cfg.optimizer.lr = 0.1;
    cfg.optimizer.batch_size = data.size();
    cfg.optimizer.epochs = 10;
    cfg.seed = seed;
    const auto r = train(cfg, data);
    bool ok = true;
    for (std::size_t e = 1; e < r.log.size(); ++e) ok = ok && r.log[e].mean_loss < r.log[e - 1].mean_loss;
    monotone += ok;
  }
  EXPECT_GE(monotone, 4);
}

TEST(Evaluate, RepeatableAndNearChanceWhenUntrained) {
  auto spec = tiny_spec(SyntheticTask::motion_direction, 1000);
  const auto data = gen_split(spec, Split::test, 1000);
  auto cfg = tiny_train_config(1);
  std::mt19937_64 rng(11);
  const auto params = ModelParams<float>::init(cfg.model, rng);
  const auto a = evaluate(params, data, cfg.sampling), b = evaluate(params, data, cfg.sampling);
  EXPECT_EQ(a.confusion, b.confusion);
  // 433 / 567 bound a fair coin over 1000 draws with probability 1 - 2e-5
  EXPECT_GE(a.war, 0.433);
  EXPECT_LE(a.war, 0.567);
}

TEST(Evaluate, ZeroTrainingErrorGivesPerfectScores) {
  auto spec = SyntheticSpec{};
  spec.task = SyntheticTask::static_pattern;
  const auto data = gen_split(spec, Split::train, 32);
  TrainConfig cfg;
  cfg.optimizer.lr = 0.05;
  cfg.optimizer.decay_period = 1000;
  cfg.seed = 1;
  TrainResult r;
  for (std::size_t epochs = 5; epochs <= 80; epochs += 5) {
    cfg.optimizer.epochs = epochs;
    r = epochs == 5 ? train(cfg, data) : train(cfg, data, nullptr, &r.checkpoint);
    if (evaluate(r.checkpoint, data, cfg.sampling).war == 1.0) break;
  }
  const auto report = evaluate(r.checkpoint, data, cfg.sampling);
  EXPECT_EQ(report.war, 1.0);
  EXPECT_EQ(report.uar, 1.0);
}

// Checkpoints

class CheckpointFile : public ::testing::Test {
 protected:
  void SetUp() override {
    const auto data = gen_synthetic(tiny_spec(SyntheticTask::motion_direction, 8));
    auto cfg = tiny_train_config(1);
    cfg.optimizer.momentum = 0.9;
    ckpt = train(cfg, data.train).checkpoint;
    path = temp_path("stt_ckpt_test.sttc").string();
    save_checkpoint(ckpt, path);
    clip = data.test[0];
    plan = cfg.sampling;
  }
  void TearDown() override { fs::remove(path); }

  Checkpoint ckpt;
  std::string path;
  LabeledClip clip;
  SamplingPlan plan;
};

TEST_F(CheckpointFile, RoundTripIsBitwise) {
  const auto back = load_checkpoint(path, ckpt.params.geometry);
  EXPECT_EQ(encode_checkpoint(back), encode_checkpoint(ckpt));
  EXPECT_EQ(back.epoch, ckpt.epoch);
  EXPECT_EQ(back.rng_state, ckpt.rng_state);
  EXPECT_EQ(back.velocity, ckpt.velocity);
  std::mt19937_64 rng(0);
  NoGradGuard no_grad;
  const auto a = forward_clip(clip, ckpt.params, plan, rng), b = forward_clip(clip, back.params, plan, rng);
  EXPECT_TRUE(std::equal(a.data().begin(), a.data().end(), b.data().begin()));
}

TEST_F(CheckpointFile, TruncationIsCorruptFile) {
  auto bytes = io::read_file(path);
  for (std::size_t keep : {std::size_t{0}, std::size_t{6}, bytes.size() / 2, bytes.size() - 1}) {
    io::write_file(path, std::vector<std::uint8_t>(bytes.begin(), bytes.begin() + static_cast<std::ptrdiff_t>(keep)));
    EXPECT_THROW(load_checkpoint(path), CorruptFileError) << keep;
  }
}

TEST_F(CheckpointFile, FlippedPayloadByteFailsChecksum) {
  auto bytes = io::read_file(path);
  bytes[bytes.size() / 2] ^= 0x40;
  io::write_file(path, bytes);
  EXPECT_THROW(load_checkpoint(path), CorruptFileError);
}

TEST_F(CheckpointFile, BadMagicIsCorruptFile) {
  auto bytes = io::read_file(path);
  bytes[0] = 'X';
  io::write_file(path, bytes);
  EXPECT_THROW(load_checkpoint(path), CorruptFileError);
}

TEST_F(CheckpointFile, VersionMismatchIsDistinct) {
  auto bytes = io::read_file(path);
  bytes[4] = 9;
  io::write_file(path, bytes);
  EXPECT_THROW(load_checkpoint(path), VersionMismatchError);
}

TEST_F(CheckpointFile, EditedGeometryIsGeometryMismatch) {
  auto bytes = io::read_file(path);
  bytes[8 + 4 * 7] = 32;  // dim field
  io::write_file(path, bytes);
  EXPECT_THROW(load_checkpoint(path, ckpt.params.geometry), GeometryMismatchError);
}

TEST_F(CheckpointFile, ResumeWithOtherGeometryIsRejected) {
  const auto data = gen_synthetic(tiny_spec(SyntheticTask::motion_direction, 4));
  auto cfg = tiny_train_config(2);
  cfg.model.blocks = 1;
  EXPECT_THROW(train(cfg, data.train, nullptr, &ckpt), GeometryMismatchError);
}

// Configuration

TEST(Config, ParsesSectionsAndPreset) {
  const auto cfg = parse_config(R"(
# comment
seed = 42
[model]
preset = tiny
heads = 4      # trailing comment
temporal_attention = false
[loss]
kind = label-smoothing
lambda = 0.2
[optimizer]
lr = 0.05
epochs = 7
[data]
task = static-pattern
noise = 0
[output]
dir = /tmp/out
)");
  EXPECT_EQ(cfg.train.seed, 42u);
  EXPECT_EQ(cfg.data.synthetic.seed, 42u);
  EXPECT_EQ(cfg.train.model.dim, 16u);
  EXPECT_EQ(cfg.train.model.heads, 4u);
  EXPECT_FALSE(cfg.train.model.temporal_attention);
  EXPECT_EQ(cfg.train.loss.kind, LossKind::label_smoothing);
  EXPECT_EQ(cfg.train.loss.lambda, 0.2);
  EXPECT_EQ(cfg.train.optimizer.lr, 0.05);
  EXPECT_EQ(cfg.data.synthetic.task, SyntheticTask::static_pattern);
  EXPECT_EQ(cfg.data.synthetic.height, 4u);
  EXPECT_EQ(cfg.data.synthetic.classes, 3u);
  EXPECT_EQ(cfg.output.path("x.txt"), "/tmp/out/x.txt");
}

TEST(Config, UnknownKeysAndSectionsFailFast) {
  EXPECT_THROW(parse_config("[model]\ndimm = 3\n"), ConfigError);
  EXPECT_THROW(parse_config("[modle]\n"), ConfigError);
  EXPECT_THROW(parse_config("lr = 0.1\n"), ConfigError);
  EXPECT_THROW(parse_config("[model]\ndim = 3\ndim = 4\n"), ConfigError);
  EXPECT_THROW(parse_config("[model]\ndim = three\n"), ConfigError);
  EXPECT_THROW(parse_config("[model]\ndim\n"), ConfigError);
  EXPECT_THROW(parse_config("[model]\npreset = huge\n"), ConfigError);
  EXPECT_THROW(parse_config("[loss]\nkind = hinge\n"), ConfigError);
  try {
    parse_config("\n\n[sampling]\nsegmnts = 2\n");
    FAIL();
  } catch (const ConfigError& e) {
    EXPECT_NE(std::string(e.what()).find("line 4"), std::string::npos) << e.what();
  }
}

TEST(Config, TextRoundTrip) {
  auto cfg = parse_config("seed = 9\n[model]\npreset = full\n[optimizer]\nmomentum = 0.5\n");
  const auto text = to_text(cfg);
  EXPECT_EQ(to_text(parse_config(text)), text);
  EXPECT_EQ(parse_config(text).train.digest(), cfg.train.digest());
}

TEST(Config, DeskDefaults) {
  const auto cfg = RunConfig::desk();
  EXPECT_NO_THROW(cfg.validate());
  EXPECT_EQ(cfg.train.model, ModelGeometry::desk());
  EXPECT_EQ(cfg.train.sampling.frames(), 8u);
  EXPECT_EQ(cfg.train.optimizer.decay_period, 40u);
  EXPECT_EQ(cfg.train.optimizer.momentum, 0.0);
  EXPECT_EQ(cfg.train.loss.beta, 0.2);
}

TEST(Config, MissingFileIsConfigError) {
  EXPECT_THROW(load_config("/nonexistent/stt.cfg"), ConfigError);
}

// Dataset files and ablation plumbing

TEST(DatasetFiles, RoundTrip) {
  const auto dir = temp_path("stt_dataset_test").string();
  fs::remove_all(dir);
  const auto data = gen_synthetic(tiny_spec(SyntheticTask::apex_frame, 5));
  write_dataset(dir, data);
  const auto back = read_dataset(dir);
  ASSERT_EQ(back.train.size(), 5u);
  ASSERT_EQ(back.test.size(), 5u);
  for (std::size_t i = 0; i < 5; ++i) {
    EXPECT_EQ(back.train[i].pixels, data.train[i].pixels);
    EXPECT_EQ(back.test[i].label, data.test[i].label);
    EXPECT_EQ(back.test[i].frames, 8u);
  }
  fs::remove_all(dir);
  EXPECT_THROW(read_dataset(dir), InputError);
}

TEST(Ablation, VariantGeometries) {
  const auto base = ModelGeometry::desk();
  const auto b = ablation_geometry(base, AblationVariant::baseline);
  EXPECT_FALSE(b.spatial_attention || b.temporal_attention);
  EXPECT_EQ(b.effective_readout(), Readout::mean);
  const auto s = ablation_geometry(base, AblationVariant::spatial_only);
  EXPECT_TRUE(s.spatial_attention && !s.temporal_attention);
  const auto t = ablation_geometry(base, AblationVariant::temporal_only);
  EXPECT_TRUE(!t.spatial_attention && t.temporal_attention);
  EXPECT_EQ(t.effective_readout(), Readout::cls);
  EXPECT_EQ(ablation_geometry(base, AblationVariant::both), base);
}

TEST(Ablation, RunsAllVariantsInOrder) {
  const auto data = gen_synthetic(tiny_spec(SyntheticTask::static_pattern, 8));
  const auto rows = ablate(tiny_train_config(1), data.train, data.test);
  ASSERT_EQ(rows.size(), 4u);
  EXPECT_EQ(rows[0].variant, AblationVariant::baseline);
  EXPECT_EQ(rows[3].variant, AblationVariant::both);
  const auto csv = format_ablation(rows);
  EXPECT_EQ(csv.rfind("variant,uar,war,seconds\n", 0), 0u);
  EXPECT_NE(csv.find("temporal-only,"), std::string::npos);
}
