#pragma once

// Procedural spatio-temporal benchmark with known class structure.
//
//   motion-direction  a lattice of Gaussian blobs (spacing `blob_spacing`,
//                     spacing == width gives a single blob) drifts one pixel
//                     per frame with wrap-around: class 0 right, 1 left,
//                     2 down-right, 3 up-left. The start phase is uniform, so
//                     every frame's blob position has the same distribution
//                     in every class; only frame order separates classes.
//   apex-frame        static blob lattice; a checkerboard flash appears in
//                     the c-th of C equal time chunks.
//   static-pattern    a grating whose orientation is the class (horizontal,
//                     vertical, diagonal, anti-diagonal), random phase,
//                     identical in every frame.
//
// Pixels get i.i.d. N(0, noise^2) added. Everything is a pure function of the
// spec; train and test draw from different seed streams.

#include <cstddef>
#include <cstdint>
#include <string>
#include <vector>

#include "stt/clip.hpp"

namespace stt {

enum class SyntheticTask { motion_direction, apex_frame, static_pattern };

std::string to_string(SyntheticTask t);
SyntheticTask synthetic_task_from_string(const std::string& s);

struct SyntheticSpec {
  SyntheticTask task = SyntheticTask::motion_direction;
  std::size_t classes = 2;
  std::size_t frames = 16;  // raw clip length before sampling
  std::size_t height = 16;
  std::size_t width = 16;
  std::size_t channels = 1;
  double noise = 0.1;
  std::size_t train_size = 400;
  std::size_t test_size = 400;
  std::uint64_t seed = 0;
  std::size_t blob_spacing = 4;
  double blob_sigma = 0.75;

  void validate() const;
};

struct Dataset {
  std::vector<LabeledClip> train;
  std::vector<LabeledClip> test;
};

enum class Split : std::uint32_t { train = 0, test = 1 };

/// `count` clips of one split. Labels cycle 0, 1, ..., C-1 so every split is
/// class-balanced up to C - 1 clips.
std::vector<LabeledClip> gen_split(const SyntheticSpec& spec, Split split, std::size_t count);

Dataset gen_synthetic(const SyntheticSpec& spec);

}  // namespace stt
