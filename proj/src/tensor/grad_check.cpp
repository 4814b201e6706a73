#include "stt/grad_check.hpp"

#include <algorithm>
#include <cmath>
#include <string>

namespace stt {
namespace {

double evaluate(const std::function<Tensor<VerifyReal>()>& f) {
  const auto y = f();
  if (y.numel() != 1) throw ContractError("grad_check: function must return a scalar");
  const double v = y.item();
  if (!std::isfinite(v)) throw NumericError("grad_check: non-finite function value at probe");
  return v;
}

}  // namespace

GradCheckResult grad_check(const std::function<Tensor<VerifyReal>()>& f,
                           std::vector<Tensor<VerifyReal>> params,
                           const GradCheckOptions& options) {
  if (!(options.eps >= 1e-6 && options.eps <= 1e-4)) {
    throw ContractError("grad_check: eps must lie in [1e-6, 1e-4], got " +
                        std::to_string(options.eps));
  }
  for (auto& p : params) {
    if (!p.requires_grad()) throw ContractError("grad_check: parameter does not track gradients");
    p.zero_grad();
  }
  {
    const auto y = f();
    if (!std::isfinite(y.item())) throw NumericError("grad_check: non-finite function value");
    y.backward();
  }

  GradCheckResult result;
  NoGradGuard no_grad;
  for (std::size_t pi = 0; pi < params.size(); ++pi) {
    auto& p = params[pi];
    const auto analytic = p.grad();
    auto values = p.mutable_data();
    for (std::size_t i = 0; i < values.size(); ++i) {
      const double saved = values[i];
      values[i] = saved + options.eps;
      const double up = evaluate(f);
      values[i] = saved - options.eps;
      const double down = evaluate(f);
      values[i] = saved;
      const double numeric = (up - down) / (2.0 * options.eps);
      const double denom =
          std::max({std::abs(analytic[i]), std::abs(numeric), options.abs_floor});
      const double rel = std::abs(analytic[i] - numeric) / denom;
      ++result.coordinates;
      if (rel > result.max_rel_error || result.coordinates == 1) {
        result.max_rel_error = rel;
        result.worst_param = pi;
        result.worst_coord = i;
        result.analytic = analytic[i];
        result.numeric = numeric;
      }
    }
  }
  for (auto& p : params) p.zero_grad();
  result.passed = result.max_rel_error < options.tol;
  return result;
}

}  // namespace stt
