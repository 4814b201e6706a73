#pragma once

#include <cstddef>
#include <vector>

#include "stt/tensor.hpp"

namespace stt {

/// Frame sequence [frames, height, width, channels] (row-major float pixels
/// or features) with a class label.
struct LabeledClip {
  std::size_t frames = 0;
  std::size_t height = 0;
  std::size_t width = 0;
  std::size_t channels = 0;
  std::vector<float> pixels;
  std::size_t label = 0;

  std::size_t frame_size() const { return height * width * channels; }

  /// Stacks the listed frames into a [indices.size(), H, W, C] tensor.
  template <typename Real>
  Tensor<Real> gather(const std::vector<std::size_t>& indices) const {
    const auto n = frame_size();
    std::vector<Real> out;
    out.reserve(indices.size() * n);
    for (auto i : indices) {
      if (i >= frames) throw InputError("frame index out of range");
      out.insert(out.end(), pixels.begin() + static_cast<std::ptrdiff_t>(i * n),
                 pixels.begin() + static_cast<std::ptrdiff_t>((i + 1) * n));
    }
    return Tensor<Real>::from({indices.size(), height, width, channels}, std::move(out));
  }
};

}  // namespace stt
