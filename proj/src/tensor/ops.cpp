#include <Eigen/Core>
#include <algorithm>
#include <cmath>
#include <numbers>
#include <numeric>

#include "stt/tensor.hpp"

namespace stt {
namespace {

template <typename Real>
using RowMat = Eigen::Matrix<Real, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
template <typename Real>
using ConstMap = Eigen::Map<const RowMat<Real>>;
template <typename Real>
using MutMap = Eigen::Map<RowMat<Real>>;

template <typename Real>
Node<Real>* tracked_parent(Node<Real>& self, std::size_t i) {
  Node<Real>* p = self.parents[i].get();
  return p->requires_grad ? p : nullptr;
}

void require_same_shape(const Shape& a, const Shape& b, const char* op) {
  if (a != b) {
    throw DimensionError(std::string(op) + ": shapes " + shape_str(a) + " and " + shape_str(b) +
                         " differ");
  }
}

void require_axis(const Shape& s, std::size_t axis, const char* op) {
  if (axis >= s.size()) {
    throw DimensionError(std::string(op) + ": axis " + std::to_string(axis) +
                         " out of range for " + shape_str(s));
  }
}

struct AxisSplit {
  std::size_t outer = 1;
  std::size_t n = 1;
  std::size_t inner = 1;
};

AxisSplit split_at(const Shape& s, std::size_t axis) {
  AxisSplit r;
  for (std::size_t i = 0; i < axis; ++i) r.outer *= s[i];
  r.n = s[axis];
  for (std::size_t i = axis + 1; i < s.size(); ++i) r.inner *= s[i];
  return r;
}

template <typename Real>
Real std_normal_cdf(Real x) {
  return Real(0.5) * std::erfc(-x / std::numbers::sqrt2_v<Real>);
}

}  // namespace

template <typename Real>
Tensor<Real> matmul(const Tensor<Real>& a, const Tensor<Real>& b) {
  if (a.dim() != 2 || b.dim() != 2 || a.extent(1) != b.extent(0)) {
    throw DimensionError("matmul: cannot multiply " + shape_str(a.shape()) + " by " +
                         shape_str(b.shape()));
  }
  const auto m = a.extent(0), k = a.extent(1), n = b.extent(1);
  std::vector<Real> out(m * n);
  MutMap<Real>(out.data(), m, n).noalias() =
      ConstMap<Real>(a.data().data(), m, k) * ConstMap<Real>(b.data().data(), k, n);
  return Tensor<Real>::make_result({m, n}, std::move(out), {a, b}, [m, k, n](Node<Real>& self) {
    ConstMap<Real> g(self.grad.data(), m, n);
    if (auto* pa = tracked_parent(self, 0)) {
      MutMap<Real>(pa->grad_buffer().data(), m, k).noalias() +=
          g * ConstMap<Real>(self.parents[1]->data.data(), k, n).transpose();
    }
    if (auto* pb = tracked_parent(self, 1)) {
      MutMap<Real>(pb->grad_buffer().data(), k, n).noalias() +=
          ConstMap<Real>(self.parents[0]->data.data(), m, k).transpose() * g;
    }
  });
}

template <typename Real>
Tensor<Real> bmm(const Tensor<Real>& a, const Tensor<Real>& b, bool transpose_b) {
  if (a.dim() != 3 || b.dim() != 3 || a.extent(0) != b.extent(0) ||
      a.extent(2) != (transpose_b ? b.extent(2) : b.extent(1))) {
    throw DimensionError("bmm: cannot multiply " + shape_str(a.shape()) + " by " +
                         shape_str(b.shape()) + (transpose_b ? " (transposed)" : ""));
  }
  const auto batch = a.extent(0), m = a.extent(1), k = a.extent(2);
  const auto n = transpose_b ? b.extent(1) : b.extent(2);
  const auto b_rows = b.extent(1), b_cols = b.extent(2);
  std::vector<Real> out(batch * m * n);
  for (std::size_t i = 0; i < batch; ++i) {
    ConstMap<Real> am(a.data().data() + i * m * k, m, k);
    ConstMap<Real> bm(b.data().data() + i * b_rows * b_cols, b_rows, b_cols);
    MutMap<Real> cm(out.data() + i * m * n, m, n);
    if (transpose_b) {
      cm.noalias() = am * bm.transpose();
    } else {
      cm.noalias() = am * bm;
    }
  }
  return Tensor<Real>::make_result(
      {batch, m, n}, std::move(out), {a, b},
      [batch, m, k, n, b_rows, b_cols, transpose_b](Node<Real>& self) {
        auto* pa = tracked_parent(self, 0);
        auto* pb = tracked_parent(self, 1);
        for (std::size_t i = 0; i < batch; ++i) {
          ConstMap<Real> g(self.grad.data() + i * m * n, m, n);
          ConstMap<Real> am(self.parents[0]->data.data() + i * m * k, m, k);
          ConstMap<Real> bm(self.parents[1]->data.data() + i * b_rows * b_cols, b_rows, b_cols);
          if (pa) {
            MutMap<Real> ga(pa->grad_buffer().data() + i * m * k, m, k);
            if (transpose_b) {
              ga.noalias() += g * bm;
            } else {
              ga.noalias() += g * bm.transpose();
            }
          }
          if (pb) {
            MutMap<Real> gb(pb->grad_buffer().data() + i * b_rows * b_cols, b_rows, b_cols);
            if (transpose_b) {
              gb.noalias() += g.transpose() * am;
            } else {
              gb.noalias() += am.transpose() * g;
            }
          }
        }
      });
}

template <typename Real>
Tensor<Real> add(const Tensor<Real>& a, const Tensor<Real>& b) {
  require_same_shape(a.shape(), b.shape(), "add");
  std::vector<Real> out(a.numel());
  const auto ad = a.data(), bd = b.data();
  for (std::size_t i = 0; i < out.size(); ++i) out[i] = ad[i] + bd[i];
  return Tensor<Real>::make_result(a.shape(), std::move(out), {a, b}, [](Node<Real>& self) {
    for (std::size_t p = 0; p < 2; ++p) {
      if (auto* pp = tracked_parent(self, p)) {
        auto& g = pp->grad_buffer();
        for (std::size_t i = 0; i < g.size(); ++i) g[i] += self.grad[i];
      }
    }
  });
}

template <typename Real>
Tensor<Real> sub(const Tensor<Real>& a, const Tensor<Real>& b) {
  require_same_shape(a.shape(), b.shape(), "sub");
  std::vector<Real> out(a.numel());
  const auto ad = a.data(), bd = b.data();
  for (std::size_t i = 0; i < out.size(); ++i) out[i] = ad[i] - bd[i];
  return Tensor<Real>::make_result(a.shape(), std::move(out), {a, b}, [](Node<Real>& self) {
    if (auto* pa = tracked_parent(self, 0)) {
      auto& g = pa->grad_buffer();
      for (std::size_t i = 0; i < g.size(); ++i) g[i] += self.grad[i];
    }
    if (auto* pb = tracked_parent(self, 1)) {
      auto& g = pb->grad_buffer();
      for (std::size_t i = 0; i < g.size(); ++i) g[i] -= self.grad[i];
    }
  });
}

template <typename Real>
Tensor<Real> mul(const Tensor<Real>& a, const Tensor<Real>& b) {
  require_same_shape(a.shape(), b.shape(), "mul");
  std::vector<Real> out(a.numel());
  const auto ad = a.data(), bd = b.data();
  for (std::size_t i = 0; i < out.size(); ++i) out[i] = ad[i] * bd[i];
  return Tensor<Real>::make_result(a.shape(), std::move(out), {a, b}, [](Node<Real>& self) {
    const auto& ad = self.parents[0]->data;
    const auto& bd = self.parents[1]->data;
    if (auto* pa = tracked_parent(self, 0)) {
      auto& g = pa->grad_buffer();
      for (std::size_t i = 0; i < g.size(); ++i) g[i] += self.grad[i] * bd[i];
    }
    if (auto* pb = tracked_parent(self, 1)) {
      auto& g = pb->grad_buffer();
      for (std::size_t i = 0; i < g.size(); ++i) g[i] += self.grad[i] * ad[i];
    }
  });
}

template <typename Real>
Tensor<Real> add_trailing(const Tensor<Real>& a, const Tensor<Real>& b) {
  const auto& as = a.shape();
  const auto& bs = b.shape();
  if (bs.size() > as.size() || !std::equal(bs.rbegin(), bs.rend(), as.rbegin())) {
    throw DimensionError("add_trailing: " + shape_str(bs) + " is not a suffix of " +
                         shape_str(as));
  }
  const auto inner = b.numel();
  const auto outer = a.numel() / inner;
  std::vector<Real> out(a.numel());
  const auto ad = a.data(), bd = b.data();
  for (std::size_t o = 0; o < outer; ++o) {
    for (std::size_t i = 0; i < inner; ++i) out[o * inner + i] = ad[o * inner + i] + bd[i];
  }
  return Tensor<Real>::make_result(as, std::move(out), {a, b}, [outer, inner](Node<Real>& self) {
    if (auto* pa = tracked_parent(self, 0)) {
      auto& g = pa->grad_buffer();
      for (std::size_t i = 0; i < g.size(); ++i) g[i] += self.grad[i];
    }
    if (auto* pb = tracked_parent(self, 1)) {
      auto& g = pb->grad_buffer();
      for (std::size_t o = 0; o < outer; ++o) {
        for (std::size_t i = 0; i < inner; ++i) g[i] += self.grad[o * inner + i];
      }
    }
  });
}

template <typename Real>
Tensor<Real> scale(const Tensor<Real>& x, Real factor) {
  std::vector<Real> out(x.data().begin(), x.data().end());
  for (auto& v : out) v *= factor;
  return Tensor<Real>::make_result(x.shape(), std::move(out), {x}, [factor](Node<Real>& self) {
    if (auto* px = tracked_parent(self, 0)) {
      auto& g = px->grad_buffer();
      for (std::size_t i = 0; i < g.size(); ++i) g[i] += factor * self.grad[i];
    }
  });
}

template <typename Real>
Tensor<Real> add_scalar(const Tensor<Real>& x, Real value) {
  std::vector<Real> out(x.data().begin(), x.data().end());
  for (auto& v : out) v += value;
  return Tensor<Real>::make_result(x.shape(), std::move(out), {x}, [](Node<Real>& self) {
    if (auto* px = tracked_parent(self, 0)) {
      auto& g = px->grad_buffer();
      for (std::size_t i = 0; i < g.size(); ++i) g[i] += self.grad[i];
    }
  });
}

template <typename Real>
Tensor<Real> exp(const Tensor<Real>& x) {
  std::vector<Real> out(x.data().begin(), x.data().end());
  for (auto& v : out) v = std::exp(v);
  return Tensor<Real>::make_result(x.shape(), std::move(out), {x}, [](Node<Real>& self) {
    if (auto* px = tracked_parent(self, 0)) {
      auto& g = px->grad_buffer();
      for (std::size_t i = 0; i < g.size(); ++i) g[i] += self.grad[i] * self.data[i];
    }
  });
}

template <typename Real>
Tensor<Real> log(const Tensor<Real>& x) {
  std::vector<Real> out(x.data().begin(), x.data().end());
  for (auto& v : out) {
    if (!(v > Real(0))) throw NumericError("log: argument must be positive");
    v = std::log(v);
  }
  return Tensor<Real>::make_result(x.shape(), std::move(out), {x}, [](Node<Real>& self) {
    if (auto* px = tracked_parent(self, 0)) {
      auto& g = px->grad_buffer();
      const auto& xd = px->data;
      for (std::size_t i = 0; i < g.size(); ++i) g[i] += self.grad[i] / xd[i];
    }
  });
}

template <typename Real>
Tensor<Real> softmax(const Tensor<Real>& x, std::size_t axis) {
  require_axis(x.shape(), axis, "softmax");
  const auto s = split_at(x.shape(), axis);
  const auto xd = x.data();
  std::vector<Real> out(x.numel());
  for (std::size_t o = 0; o < s.outer; ++o) {
    for (std::size_t i = 0; i < s.inner; ++i) {
      const std::size_t base = o * s.n * s.inner + i;
      Real mx = xd[base];
      for (std::size_t j = 1; j < s.n; ++j) mx = std::max(mx, xd[base + j * s.inner]);
      Real total = 0;
      for (std::size_t j = 0; j < s.n; ++j) {
        const Real e = std::exp(xd[base + j * s.inner] - mx);
        out[base + j * s.inner] = e;
        total += e;
      }
      for (std::size_t j = 0; j < s.n; ++j) out[base + j * s.inner] /= total;
    }
  }
  return Tensor<Real>::make_result(x.shape(), std::move(out), {x}, [s](Node<Real>& self) {
    auto* px = tracked_parent(self, 0);
    if (!px) return;
    auto& g = px->grad_buffer();
    const auto& y = self.data;
    const auto& gy = self.grad;
    for (std::size_t o = 0; o < s.outer; ++o) {
      for (std::size_t i = 0; i < s.inner; ++i) {
        const std::size_t base = o * s.n * s.inner + i;
        Real dot = 0;
        for (std::size_t j = 0; j < s.n; ++j) {
          dot += gy[base + j * s.inner] * y[base + j * s.inner];
        }
        for (std::size_t j = 0; j < s.n; ++j) {
          const auto idx = base + j * s.inner;
          g[idx] += y[idx] * (gy[idx] - dot);
        }
      }
    }
  });
}

template <typename Real>
Tensor<Real> log_softmax(const Tensor<Real>& x, std::size_t axis) {
  require_axis(x.shape(), axis, "log_softmax");
  const auto s = split_at(x.shape(), axis);
  const auto xd = x.data();
  std::vector<Real> out(x.numel());
  for (std::size_t o = 0; o < s.outer; ++o) {
    for (std::size_t i = 0; i < s.inner; ++i) {
      const std::size_t base = o * s.n * s.inner + i;
      Real mx = xd[base];
      for (std::size_t j = 1; j < s.n; ++j) mx = std::max(mx, xd[base + j * s.inner]);
      Real total = 0;
      for (std::size_t j = 0; j < s.n; ++j) total += std::exp(xd[base + j * s.inner] - mx);
      const Real lse = mx + std::log(total);
      for (std::size_t j = 0; j < s.n; ++j) {
        out[base + j * s.inner] = xd[base + j * s.inner] - lse;
      }
    }
  }
  return Tensor<Real>::make_result(x.shape(), std::move(out), {x}, [s](Node<Real>& self) {
    auto* px = tracked_parent(self, 0);
    if (!px) return;
    auto& g = px->grad_buffer();
    const auto& y = self.data;
    const auto& gy = self.grad;
    for (std::size_t o = 0; o < s.outer; ++o) {
      for (std::size_t i = 0; i < s.inner; ++i) {
        const std::size_t base = o * s.n * s.inner + i;
        Real total = 0;
        for (std::size_t j = 0; j < s.n; ++j) total += gy[base + j * s.inner];
        for (std::size_t j = 0; j < s.n; ++j) {
          const auto idx = base + j * s.inner;
          g[idx] += gy[idx] - std::exp(y[idx]) * total;
        }
      }
    }
  });
}

template <typename Real>
Tensor<Real> layer_norm(const Tensor<Real>& x, const Tensor<Real>& gamma,
                        const Tensor<Real>& beta, Real eps) {
  if (x.dim() == 0) throw DimensionError("layer_norm: scalar input");
  const auto d = x.shape().back();
  if (gamma.shape() != Shape{d} || beta.shape() != Shape{d}) {
    throw DimensionError("layer_norm: input " + shape_str(x.shape()) + " vs gamma " +
                         shape_str(gamma.shape()) + " / beta " + shape_str(beta.shape()));
  }
  if (!(eps > Real(0))) throw ContractError("layer_norm: eps must be positive");
  const auto rows = x.numel() / d;
  const auto xd = x.data(), gd = gamma.data(), bd = beta.data();
  std::vector<Real> out(x.numel());
  auto xhat = std::make_shared<std::vector<Real>>(x.numel());
  auto rstd = std::make_shared<std::vector<Real>>(rows);
  for (std::size_t r = 0; r < rows; ++r) {
    const Real* row = xd.data() + r * d;
    Real mu = 0;
    for (std::size_t j = 0; j < d; ++j) mu += row[j];
    mu /= Real(d);
    Real var = 0;
    for (std::size_t j = 0; j < d; ++j) var += (row[j] - mu) * (row[j] - mu);
    var /= Real(d);
    const Real rs = Real(1) / std::sqrt(var + eps);
    (*rstd)[r] = rs;
    for (std::size_t j = 0; j < d; ++j) {
      const Real h = (row[j] - mu) * rs;
      (*xhat)[r * d + j] = h;
      out[r * d + j] = gd[j] * h + bd[j];
    }
  }
  return Tensor<Real>::make_result(
      x.shape(), std::move(out), {x, gamma, beta}, [rows, d, xhat, rstd](Node<Real>& self) {
        const auto& gy = self.grad;
        const auto& gd = self.parents[1]->data;
        if (auto* pg = tracked_parent(self, 1)) {
          auto& g = pg->grad_buffer();
          for (std::size_t r = 0; r < rows; ++r) {
            for (std::size_t j = 0; j < d; ++j) g[j] += gy[r * d + j] * (*xhat)[r * d + j];
          }
        }
        if (auto* pb = tracked_parent(self, 2)) {
          auto& g = pb->grad_buffer();
          for (std::size_t r = 0; r < rows; ++r) {
            for (std::size_t j = 0; j < d; ++j) g[j] += gy[r * d + j];
          }
        }
        if (auto* px = tracked_parent(self, 0)) {
          auto& g = px->grad_buffer();
          for (std::size_t r = 0; r < rows; ++r) {
            Real mean_dh = 0, mean_dh_h = 0;
            for (std::size_t j = 0; j < d; ++j) {
              const Real dh = gy[r * d + j] * gd[j];
              mean_dh += dh;
              mean_dh_h += dh * (*xhat)[r * d + j];
            }
            mean_dh /= Real(d);
            mean_dh_h /= Real(d);
            for (std::size_t j = 0; j < d; ++j) {
              const Real dh = gy[r * d + j] * gd[j];
              g[r * d + j] += (*rstd)[r] * (dh - mean_dh - (*xhat)[r * d + j] * mean_dh_h);
            }
          }
        }
      });
}

template <typename Real>
Tensor<Real> gelu(const Tensor<Real>& x) {
  std::vector<Real> out(x.data().begin(), x.data().end());
  for (auto& v : out) v = v * std_normal_cdf(v);
  return Tensor<Real>::make_result(x.shape(), std::move(out), {x}, [](Node<Real>& self) {
    auto* px = tracked_parent(self, 0);
    if (!px) return;
    auto& g = px->grad_buffer();
    const auto& xd = px->data;
    const Real inv_sqrt_2pi = std::numbers::inv_sqrtpi_v<Real> / std::numbers::sqrt2_v<Real>;
    for (std::size_t i = 0; i < g.size(); ++i) {
      const Real v = xd[i];
      const Real pdf = inv_sqrt_2pi * std::exp(Real(-0.5) * v * v);
      g[i] += self.grad[i] * (std_normal_cdf(v) + v * pdf);
    }
  });
}

template <typename Real>
Tensor<Real> reshape(const Tensor<Real>& x, Shape shape) {
  if (shape_numel(shape) != x.numel()) {
    throw DimensionError("reshape: cannot view " + shape_str(x.shape()) + " as " +
                         shape_str(shape));
  }
  std::vector<Real> out(x.data().begin(), x.data().end());
  return Tensor<Real>::make_result(std::move(shape), std::move(out), {x}, [](Node<Real>& self) {
    if (auto* px = tracked_parent(self, 0)) {
      auto& g = px->grad_buffer();
      for (std::size_t i = 0; i < g.size(); ++i) g[i] += self.grad[i];
    }
  });
}

template <typename Real>
Tensor<Real> permute(const Tensor<Real>& x, const std::vector<std::size_t>& order) {
  const auto& in_shape = x.shape();
  const auto rank = in_shape.size();
  std::vector<bool> used(rank, false);
  if (order.size() != rank) {
    throw DimensionError("permute: order has " + std::to_string(order.size()) +
                         " axes for shape " + shape_str(in_shape));
  }
  for (auto a : order) {
    if (a >= rank || used[a]) throw DimensionError("permute: order is not a permutation");
    used[a] = true;
  }
  std::vector<std::size_t> in_strides(rank, 1);
  for (std::size_t i = rank; i-- > 1;) in_strides[i - 1] = in_strides[i] * in_shape[i];
  Shape out_shape(rank);
  std::vector<std::size_t> step(rank);
  for (std::size_t i = 0; i < rank; ++i) {
    out_shape[i] = in_shape[order[i]];
    step[i] = in_strides[order[i]];
  }

  // source[k] = flat input offset feeding output element k
  auto source = std::make_shared<std::vector<std::size_t>>(x.numel());
  std::vector<std::size_t> idx(rank, 0);
  std::size_t offset = 0;
  for (std::size_t k = 0; k < source->size(); ++k) {
    (*source)[k] = offset;
    for (std::size_t i = rank; i-- > 0;) {
      if (++idx[i] < out_shape[i]) {
        offset += step[i];
        break;
      }
      offset -= step[i] * (out_shape[i] - 1);
      idx[i] = 0;
    }
  }
  const auto xd = x.data();
  std::vector<Real> out(x.numel());
  for (std::size_t k = 0; k < out.size(); ++k) out[k] = xd[(*source)[k]];
  return Tensor<Real>::make_result(std::move(out_shape), std::move(out), {x},
                                   [source](Node<Real>& self) {
                                     if (auto* px = tracked_parent(self, 0)) {
                                       auto& g = px->grad_buffer();
                                       for (std::size_t k = 0; k < source->size(); ++k) {
                                         g[(*source)[k]] += self.grad[k];
                                       }
                                     }
                                   });
}

template <typename Real>
Tensor<Real> slice(const Tensor<Real>& x, std::size_t axis, std::size_t start, std::size_t length) {
  require_axis(x.shape(), axis, "slice");
  const auto s = split_at(x.shape(), axis);
  if (length == 0 || start + length > s.n) {
    throw DimensionError("slice: range [" + std::to_string(start) + ", " +
                         std::to_string(start + length) + ") outside axis " +
                         std::to_string(axis) + " of " + shape_str(x.shape()));
  }
  Shape out_shape = x.shape();
  out_shape[axis] = length;
  const auto xd = x.data();
  std::vector<Real> out(s.outer * length * s.inner);
  for (std::size_t o = 0; o < s.outer; ++o) {
    std::copy_n(xd.data() + (o * s.n + start) * s.inner, length * s.inner,
                out.data() + o * length * s.inner);
  }
  return Tensor<Real>::make_result(std::move(out_shape), std::move(out), {x},
                                   [s, start, length](Node<Real>& self) {
                                     auto* px = tracked_parent(self, 0);
                                     if (!px) return;
                                     auto& g = px->grad_buffer();
                                     const auto block = length * s.inner;
                                     for (std::size_t o = 0; o < s.outer; ++o) {
                                       Real* dst = g.data() + (o * s.n + start) * s.inner;
                                       const Real* src = self.grad.data() + o * block;
                                       for (std::size_t i = 0; i < block; ++i) dst[i] += src[i];
                                     }
                                   });
}

template <typename Real>
Tensor<Real> concat(const std::vector<Tensor<Real>>& parts, std::size_t axis) {
  if (parts.empty()) throw DimensionError("concat: no inputs");
  const Shape& first = parts.front().shape();
  require_axis(first, axis, "concat");
  Shape out_shape = first;
  out_shape[axis] = 0;
  std::vector<std::size_t> widths;
  for (const auto& p : parts) {
    Shape probe = p.shape();
    if (probe.size() != first.size()) throw DimensionError("concat: rank mismatch");
    widths.push_back(probe[axis]);
    out_shape[axis] += probe[axis];
    probe[axis] = first[axis];
    require_same_shape(probe, first, "concat");
  }
  const auto s = split_at(out_shape, axis);
  std::vector<Real> out(shape_numel(out_shape));
  std::size_t col = 0;
  for (std::size_t k = 0; k < parts.size(); ++k) {
    const auto pd = parts[k].data();
    const auto block = widths[k] * s.inner;
    for (std::size_t o = 0; o < s.outer; ++o) {
      std::copy_n(pd.data() + o * block, block, out.data() + (o * s.n + col) * s.inner);
    }
    col += widths[k];
  }
  return Tensor<Real>::make_result(std::move(out_shape), std::move(out), parts,
                                   [s, widths](Node<Real>& self) {
                                     std::size_t col = 0;
                                     for (std::size_t k = 0; k < widths.size(); ++k) {
                                       const auto block = widths[k] * s.inner;
                                       if (auto* pk = tracked_parent(self, k)) {
                                         auto& g = pk->grad_buffer();
                                         for (std::size_t o = 0; o < s.outer; ++o) {
                                           const Real* src =
                                               self.grad.data() + (o * s.n + col) * s.inner;
                                           for (std::size_t i = 0; i < block; ++i) {
                                             g[o * block + i] += src[i];
                                           }
                                         }
                                       }
                                       col += widths[k];
                                     }
                                   });
}

template <typename Real>
Tensor<Real> repeat(const Tensor<Real>& x, std::size_t axis, std::size_t times) {
  require_axis(x.shape(), axis, "repeat");
  if (x.extent(axis) != 1 || times == 0) {
    throw DimensionError("repeat: axis " + std::to_string(axis) + " of " + shape_str(x.shape()) +
                         " must have extent 1");
  }
  const auto s = split_at(x.shape(), axis);
  Shape out_shape = x.shape();
  out_shape[axis] = times;
  const auto xd = x.data();
  std::vector<Real> out(s.outer * times * s.inner);
  for (std::size_t o = 0; o < s.outer; ++o) {
    for (std::size_t t = 0; t < times; ++t) {
      std::copy_n(xd.data() + o * s.inner, s.inner, out.data() + (o * times + t) * s.inner);
    }
  }
  return Tensor<Real>::make_result(std::move(out_shape), std::move(out), {x},
                                   [s, times](Node<Real>& self) {
                                     auto* px = tracked_parent(self, 0);
                                     if (!px) return;
                                     auto& g = px->grad_buffer();
                                     for (std::size_t o = 0; o < s.outer; ++o) {
                                       for (std::size_t t = 0; t < times; ++t) {
                                         const Real* src =
                                             self.grad.data() + (o * times + t) * s.inner;
                                         for (std::size_t i = 0; i < s.inner; ++i) {
                                           g[o * s.inner + i] += src[i];
                                         }
                                       }
                                     }
                                   });
}

template <typename Real>
Tensor<Real> index_select(const Tensor<Real>& x, const std::vector<std::size_t>& indices) {
  if (x.dim() == 0 || indices.empty()) throw DimensionError("index_select: empty selection");
  const auto n = x.shape().back();
  for (auto i : indices) {
    if (i >= n) {
      throw DimensionError("index_select: index " + std::to_string(i) + " outside last axis of " +
                           shape_str(x.shape()));
    }
  }
  const auto outer = x.numel() / n;
  const auto m = indices.size();
  Shape out_shape = x.shape();
  out_shape.back() = m;
  const auto xd = x.data();
  std::vector<Real> out(outer * m);
  for (std::size_t o = 0; o < outer; ++o) {
    for (std::size_t j = 0; j < m; ++j) out[o * m + j] = xd[o * n + indices[j]];
  }
  return Tensor<Real>::make_result(std::move(out_shape), std::move(out), {x},
                                   [indices, outer, n, m](Node<Real>& self) {
                                     auto* px = tracked_parent(self, 0);
                                     if (!px) return;
                                     auto& g = px->grad_buffer();
                                     for (std::size_t o = 0; o < outer; ++o) {
                                       for (std::size_t j = 0; j < m; ++j) {
                                         g[o * n + indices[j]] += self.grad[o * m + j];
                                       }
                                     }
                                   });
}

template <typename Real>
Tensor<Real> sum(const Tensor<Real>& x) {
  const auto xd = x.data();
  const Real total = std::accumulate(xd.begin(), xd.end(), Real(0));
  return Tensor<Real>::make_result({1}, {total}, {x}, [](Node<Real>& self) {
    if (auto* px = tracked_parent(self, 0)) {
      auto& g = px->grad_buffer();
      for (auto& v : g) v += self.grad[0];
    }
  });
}

template <typename Real>
Tensor<Real> mean(const Tensor<Real>& x) {
  return scale(sum(x), Real(1) / Real(x.numel()));
}

template <typename Real>
Tensor<Real> sum_axis(const Tensor<Real>& x, std::size_t axis) {
  require_axis(x.shape(), axis, "sum_axis");
  const auto s = split_at(x.shape(), axis);
  Shape out_shape = x.shape();
  out_shape.erase(out_shape.begin() + static_cast<std::ptrdiff_t>(axis));
  if (out_shape.empty()) out_shape = {1};
  const auto xd = x.data();
  std::vector<Real> out(s.outer * s.inner, Real(0));
  for (std::size_t o = 0; o < s.outer; ++o) {
    for (std::size_t j = 0; j < s.n; ++j) {
      for (std::size_t i = 0; i < s.inner; ++i) {
        out[o * s.inner + i] += xd[(o * s.n + j) * s.inner + i];
      }
    }
  }
  return Tensor<Real>::make_result(std::move(out_shape), std::move(out), {x}, [s](Node<Real>& self) {
    auto* px = tracked_parent(self, 0);
    if (!px) return;
    auto& g = px->grad_buffer();
    for (std::size_t o = 0; o < s.outer; ++o) {
      for (std::size_t j = 0; j < s.n; ++j) {
        for (std::size_t i = 0; i < s.inner; ++i) {
          g[(o * s.n + j) * s.inner + i] += self.grad[o * s.inner + i];
        }
      }
    }
  });
}

#define STT_INSTANTIATE_OPS(R)                                                                   \
  template Tensor<R> matmul(const Tensor<R>&, const Tensor<R>&);                                 \
  template Tensor<R> bmm(const Tensor<R>&, const Tensor<R>&, bool);                              \
  template Tensor<R> add(const Tensor<R>&, const Tensor<R>&);                                    \
  template Tensor<R> sub(const Tensor<R>&, const Tensor<R>&);                                    \
  template Tensor<R> mul(const Tensor<R>&, const Tensor<R>&);                                    \
  template Tensor<R> add_trailing(const Tensor<R>&, const Tensor<R>&);                           \
  template Tensor<R> scale(const Tensor<R>&, R);                                                 \
  template Tensor<R> add_scalar(const Tensor<R>&, R);                                            \
  template Tensor<R> exp(const Tensor<R>&);                                                      \
  template Tensor<R> log(const Tensor<R>&);                                                      \
  template Tensor<R> softmax(const Tensor<R>&, std::size_t);                                     \
  template Tensor<R> log_softmax(const Tensor<R>&, std::size_t);                                 \
  template Tensor<R> layer_norm(const Tensor<R>&, const Tensor<R>&, const Tensor<R>&, R);        \
  template Tensor<R> gelu(const Tensor<R>&);                                                     \
  template Tensor<R> reshape(const Tensor<R>&, Shape);                                           \
  template Tensor<R> permute(const Tensor<R>&, const std::vector<std::size_t>&);                 \
  template Tensor<R> slice(const Tensor<R>&, std::size_t, std::size_t, std::size_t);             \
  template Tensor<R> concat(const std::vector<Tensor<R>>&, std::size_t);                         \
  template Tensor<R> repeat(const Tensor<R>&, std::size_t, std::size_t);                         \
  template Tensor<R> index_select(const Tensor<R>&, const std::vector<std::size_t>&);            \
  template Tensor<R> sum(const Tensor<R>&);                                                      \
  template Tensor<R> mean(const Tensor<R>&);                                                     \
  template Tensor<R> sum_axis(const Tensor<R>&, std::size_t);

STT_INSTANTIATE_OPS(float)
STT_INSTANTIATE_OPS(double)

#undef STT_INSTANTIATE_OPS

}  // namespace stt
