#include "stt/synthetic.hpp"

#include <cmath>
#include <numbers>
#include <random>

#include "stt/errors.hpp"

namespace stt {

std::string to_string(SyntheticTask t) {
  switch (t) {
    case SyntheticTask::motion_direction:
      return "motion-direction";
    case SyntheticTask::apex_frame:
      return "apex-frame";
    case SyntheticTask::static_pattern:
      return "static-pattern";
  }
  return "?";
}

SyntheticTask synthetic_task_from_string(const std::string& s) {
  if (s == "motion-direction") return SyntheticTask::motion_direction;
  if (s == "apex-frame") return SyntheticTask::apex_frame;
  if (s == "static-pattern") return SyntheticTask::static_pattern;
  throw ConfigError("unknown synthetic task '" + s + "'");
}

namespace {

std::size_t lattice_x(const SyntheticSpec& s) { return std::min(s.blob_spacing, s.width); }
std::size_t lattice_y(const SyntheticSpec& s) { return std::min(s.blob_spacing, s.height); }

}  // namespace

void SyntheticSpec::validate() const {
  if (frames < 1 || height < 1 || width < 1 || channels < 1) {
    throw ConfigError("synthetic clip geometry must be positive");
  }
  if (!(noise >= 0.0)) throw ConfigError("noise level must be >= 0");
  if (blob_spacing < 1 || width % lattice_x(*this) != 0 || height % lattice_y(*this) != 0) {
    throw ConfigError("blob_spacing must divide the frame extents (or exceed them)");
  }
  if (!(blob_sigma > 0.0)) throw ConfigError("blob_sigma must be positive");
  if (classes < 2) throw ConfigError("synthetic tasks need at least two classes");
  switch (task) {
    case SyntheticTask::motion_direction:
    case SyntheticTask::static_pattern:
      if (classes > 4) throw ConfigError(to_string(task) + " supports at most 4 classes");
      break;
    case SyntheticTask::apex_frame:
      if (classes > frames) throw ConfigError("apex-frame needs at least one frame per class");
      break;
  }
}

namespace {

constexpr int kVelocity[4][2] = {{1, 0}, {-1, 0}, {1, 1}, {-1, -1}};

// Signed offset of `p` from the nearest lattice line through `c`, in
// [-period/2, period/2).
double wrapped(double p, double c, double period) {
  double d = std::fmod(p - c, period);
  if (d < 0) d += period;
  if (d >= period / 2) d -= period;
  return d;
}

struct Renderer {
  const SyntheticSpec& spec;
  std::mt19937_64& rng;
  LabeledClip clip;

  Renderer(const SyntheticSpec& s, std::mt19937_64& r, std::size_t label) : spec(s), rng(r) {
    clip.frames = s.frames;
    clip.height = s.height;
    clip.width = s.width;
    clip.channels = s.channels;
    clip.label = label;
    clip.pixels.assign(s.frames * s.height * s.width * s.channels, 0.0f);
  }

  void put(std::size_t t, std::size_t y, std::size_t x, double v) {
    const auto base = ((t * spec.height + y) * spec.width + x) * spec.channels;
    for (std::size_t c = 0; c < spec.channels; ++c) clip.pixels[base + c] += static_cast<float>(v);
  }

  void blobs(std::size_t t, double cx, double cy, double amplitude) {
    const double lx = static_cast<double>(lattice_x(spec));
    const double ly = static_cast<double>(lattice_y(spec));
    const double inv = 1.0 / (2.0 * spec.blob_sigma * spec.blob_sigma);
    for (std::size_t y = 0; y < spec.height; ++y) {
      const double dy = wrapped(static_cast<double>(y), cy, ly);
      for (std::size_t x = 0; x < spec.width; ++x) {
        const double dx = wrapped(static_cast<double>(x), cx, lx);
        put(t, y, x, amplitude * std::exp(-(dx * dx + dy * dy) * inv));
      }
    }
  }

  void motion() {
    const auto& v = kVelocity[clip.label];
    const double x0 = static_cast<double>(std::uniform_int_distribution<std::size_t>(0, spec.width - 1)(rng));
    const double y0 = static_cast<double>(std::uniform_int_distribution<std::size_t>(0, spec.height - 1)(rng));
    for (std::size_t t = 0; t < spec.frames; ++t) {
      const double td = static_cast<double>(t);
      blobs(t, x0 + v[0] * td, y0 + v[1] * td, 1.0);
    }
  }

  void apex() {
    const double x0 = static_cast<double>(std::uniform_int_distribution<std::size_t>(0, spec.width - 1)(rng));
    const double y0 = static_cast<double>(std::uniform_int_distribution<std::size_t>(0, spec.height - 1)(rng));
    const auto c = clip.label;
    const auto chunk_begin = c * spec.frames / spec.classes;
    const auto chunk_end = (c + 1) * spec.frames / spec.classes;
    const auto chunk = chunk_end - chunk_begin;
    const auto length = std::max<std::size_t>(1, chunk / 2);
    const auto start =
        chunk_begin + std::uniform_int_distribution<std::size_t>(0, chunk - length)(rng);
    for (std::size_t t = 0; t < spec.frames; ++t) {
      blobs(t, x0, y0, 1.0);
      if (t >= start && t < start + length) {
        for (std::size_t y = 0; y < spec.height; ++y) {
          for (std::size_t x = 0; x < spec.width; ++x) put(t, y, x, (x + y) % 2 == 0 ? 1.0 : 0.0);
        }
      }
    }
  }

  void grating() {
    const double phase = std::uniform_real_distribution<double>(0.0, 2.0 * std::numbers::pi)(rng);
    const double k = 2.0 * std::numbers::pi / static_cast<double>(spec.blob_spacing);
    for (std::size_t y = 0; y < spec.height; ++y) {
      for (std::size_t x = 0; x < spec.width; ++x) {
        const double xd = static_cast<double>(x), yd = static_cast<double>(y);
        double u = 0.0;
        switch (clip.label) {
          case 0: u = yd; break;
          case 1: u = xd; break;
          case 2: u = xd + yd; break;
          default: u = xd - yd; break;
        }
        const double v = 0.5 + 0.5 * std::cos(k * u + phase);
        for (std::size_t t = 0; t < spec.frames; ++t) put(t, y, x, v);
      }
    }
  }

  void noise() {
    if (spec.noise == 0.0) return;
    std::normal_distribution<double> n(0.0, spec.noise);
    for (auto& p : clip.pixels) p += static_cast<float>(n(rng));
  }
};

}  // namespace

std::vector<LabeledClip> gen_split(const SyntheticSpec& spec, Split split, std::size_t count) {
  spec.validate();
  std::seed_seq seq{static_cast<std::uint32_t>(spec.seed), static_cast<std::uint32_t>(spec.seed >> 32),
                    static_cast<std::uint32_t>(split), 0x5eed5u};
  std::mt19937_64 rng(seq);
  std::vector<LabeledClip> out;
  out.reserve(count);
  for (std::size_t i = 0; i < count; ++i) {
    Renderer r(spec, rng, i % spec.classes);
    switch (spec.task) {
      case SyntheticTask::motion_direction:
        r.motion();
        break;
      case SyntheticTask::apex_frame:
        r.apex();
        break;
      case SyntheticTask::static_pattern:
        r.grating();
        break;
    }
    r.noise();
    out.push_back(std::move(r.clip));
  }
  return out;
}

Dataset gen_synthetic(const SyntheticSpec& spec) {
  return {gen_split(spec, Split::train, spec.train_size), gen_split(spec, Split::test, spec.test_size)};
}

}  // namespace stt
