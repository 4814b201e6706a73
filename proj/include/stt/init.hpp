#pragma once

#include <cmath>
#include <random>

#include "stt/tensor.hpp"

namespace stt {

/// Trainable tensor with i.i.d. N(0, stddev^2) entries. Values are drawn in
/// double so float and double models built from one seed agree.
template <typename Real>
Tensor<Real> normal_param(Shape shape, double stddev, std::mt19937_64& rng) {
  std::normal_distribution<double> dist(0.0, stddev);
  std::vector<Real> values(shape_numel(shape));
  for (auto& v : values) v = static_cast<Real>(dist(rng));
  return Tensor<Real>::from(std::move(shape), std::move(values), true);
}

template <typename Real>
Tensor<Real> constant_param(Shape shape, double value) {
  return Tensor<Real>::full(std::move(shape), static_cast<Real>(value), true);
}

inline constexpr double kInitStddev = 0.02;

}  // namespace stt
