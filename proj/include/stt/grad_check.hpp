#pragma once

#include <cstddef>
#include <functional>
#include <vector>

#include "stt/tensor.hpp"

namespace stt {

struct GradCheckOptions {
  double eps = 1e-5;
  /// Pass threshold on the max relative error.
  double tol = 1e-4;
  /// Relative error is |a - n| / max(|a|, |n|, abs_floor); the floor keeps
  /// coordinates whose true gradient is ~0 from dividing roundoff by roundoff.
  double abs_floor = 1e-6;
};

struct GradCheckResult {
  double max_rel_error = 0.0;
  std::size_t worst_param = 0;
  std::size_t worst_coord = 0;
  double analytic = 0.0;
  double numeric = 0.0;
  std::size_t coordinates = 0;
  bool passed = false;
};

/// Compares reverse-mode gradients of a scalar function against central
/// differences (f(x + eps e) - f(x - eps e)) / (2 eps) over every coordinate
/// of every listed parameter. Always runs in verification (double) precision.
/// Throws NumericError if f is non-finite at any probe point.
GradCheckResult grad_check(const std::function<Tensor<VerifyReal>()>& f,
                           std::vector<Tensor<VerifyReal>> params,
                           const GradCheckOptions& options = {});

}  // namespace stt
