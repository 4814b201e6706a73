#pragma once

// Dense row-major tensor with tape-free reverse-mode autodiff.
//
// Every op allocates a fresh node holding its output values and, when any
// input is gradient-tracked, a closure that pushes the output gradient back
// into its inputs. Tensor is a cheap shared handle to such a node.

#include <cstddef>
#include <functional>
#include <memory>
#include <span>
#include <string>
#include <vector>

#include "stt/errors.hpp"

namespace stt {

using Shape = std::vector<std::size_t>;

std::size_t shape_numel(const Shape& shape);
std::string shape_str(const Shape& shape);

/// Training runs single-wide for speed; gradient checks run double-wide.
enum class PrecisionMode { training, verification };

template <PrecisionMode M>
struct RealFor;
template <>
struct RealFor<PrecisionMode::training> {
  using type = float;
};
template <>
struct RealFor<PrecisionMode::verification> {
  using type = double;
};

using TrainReal = RealFor<PrecisionMode::training>::type;
using VerifyReal = RealFor<PrecisionMode::verification>::type;

/// Thread-local switch; while disabled, ops never record backward closures.
class GradMode {
 public:
  static bool enabled();
  static void set_enabled(bool on);
};

class NoGradGuard {
 public:
  NoGradGuard() : previous_(GradMode::enabled()) { GradMode::set_enabled(false); }
  ~NoGradGuard() { GradMode::set_enabled(previous_); }
  NoGradGuard(const NoGradGuard&) = delete;
  NoGradGuard& operator=(const NoGradGuard&) = delete;

 private:
  bool previous_;
};

template <typename Real>
struct Node {
  Shape shape;
  std::vector<Real> data;
  std::vector<Real> grad;  // empty until a gradient reaches this node
  bool requires_grad = false;
  std::vector<std::shared_ptr<Node>> parents;
  std::function<void(Node&)> backward_fn;

  /// Gradient buffer of this node, zero-initialised on first use.
  std::vector<Real>& grad_buffer() {
    if (grad.empty()) grad.assign(data.size(), Real(0));
    return grad;
  }
};

template <typename Real>
class Tensor {
 public:
  using NodePtr = std::shared_ptr<Node<Real>>;
  using BackwardFn = std::function<void(Node<Real>&)>;

  Tensor() = default;

  static Tensor zeros(Shape shape, bool requires_grad = false);
  static Tensor full(Shape shape, Real value, bool requires_grad = false);
  static Tensor from(Shape shape, std::vector<Real> values, bool requires_grad = false);
  static Tensor scalar(Real value, bool requires_grad = false);

  /// Builds an op result. The closure is kept only when grad mode is on and
  /// at least one input tracks gradients.
  static Tensor make_result(Shape shape, std::vector<Real> values,
                            std::vector<Tensor> inputs, BackwardFn fn);

  bool defined() const { return node_ != nullptr; }
  const Shape& shape() const;
  std::size_t dim() const { return shape().size(); }
  std::size_t extent(std::size_t axis) const;
  std::size_t numel() const;

  std::span<const Real> data() const;
  /// Direct write access; only meant for leaf parameters between passes.
  std::span<Real> mutable_data();
  Real item() const;
  Real at(std::size_t flat) const { return data()[flat]; }

  bool requires_grad() const;
  bool has_grad() const;
  /// Gradient w.r.t. this tensor after backward(); zeros if none arrived.
  std::vector<Real> grad() const;
  std::span<Real> mutable_grad();
  void zero_grad();

  /// Reverse sweep from a scalar output, accumulating into every tracked
  /// leaf. Each node's closure runs exactly once.
  void backward() const;

  /// Copy of the values with no history.
  Tensor detach() const;

  Node<Real>& node() const;
  const NodePtr& node_ptr() const { return node_; }

 private:
  explicit Tensor(NodePtr node) : node_(std::move(node)) {}
  NodePtr node_;
};

template <typename To, typename From>
Tensor<To> cast(const Tensor<From>& t, bool requires_grad);

// ---------------------------------------------------------------------------
// Ops. All return new tensors; inputs are never modified.

template <typename Real>
Tensor<Real> matmul(const Tensor<Real>& a, const Tensor<Real>& b);

/// Batched product over the leading axis: [B,m,k]x[B,k,n] -> [B,m,n], or with
/// transpose_b, [B,m,k]x[B,n,k]^T -> [B,m,n].
template <typename Real>
Tensor<Real> bmm(const Tensor<Real>& a, const Tensor<Real>& b, bool transpose_b = false);

template <typename Real>
Tensor<Real> add(const Tensor<Real>& a, const Tensor<Real>& b);
template <typename Real>
Tensor<Real> sub(const Tensor<Real>& a, const Tensor<Real>& b);
template <typename Real>
Tensor<Real> mul(const Tensor<Real>& a, const Tensor<Real>& b);

/// a + b where b's shape equals the trailing axes of a's shape.
template <typename Real>
Tensor<Real> add_trailing(const Tensor<Real>& a, const Tensor<Real>& b);

template <typename Real>
Tensor<Real> scale(const Tensor<Real>& x, Real factor);
template <typename Real>
Tensor<Real> add_scalar(const Tensor<Real>& x, Real value);
template <typename Real>
Tensor<Real> exp(const Tensor<Real>& x);
template <typename Real>
Tensor<Real> log(const Tensor<Real>& x);

template <typename Real>
Tensor<Real> softmax(const Tensor<Real>& x, std::size_t axis);
template <typename Real>
Tensor<Real> log_softmax(const Tensor<Real>& x, std::size_t axis);

/// Normalises over the last axis (biased variance), then gamma * x + beta.
template <typename Real>
Tensor<Real> layer_norm(const Tensor<Real>& x, const Tensor<Real>& gamma,
                        const Tensor<Real>& beta, Real eps = Real(1e-5));

/// Exact x * Phi(x).
template <typename Real>
Tensor<Real> gelu(const Tensor<Real>& x);

template <typename Real>
Tensor<Real> reshape(const Tensor<Real>& x, Shape shape);
template <typename Real>
Tensor<Real> permute(const Tensor<Real>& x, const std::vector<std::size_t>& order);
template <typename Real>
Tensor<Real> slice(const Tensor<Real>& x, std::size_t axis, std::size_t start, std::size_t length);
template <typename Real>
Tensor<Real> concat(const std::vector<Tensor<Real>>& parts, std::size_t axis);
/// Tiles x `times` times along `axis` (which must have extent 1).
template <typename Real>
Tensor<Real> repeat(const Tensor<Real>& x, std::size_t axis, std::size_t times);
/// Picks the listed positions along the last axis.
template <typename Real>
Tensor<Real> index_select(const Tensor<Real>& x, const std::vector<std::size_t>& indices);

template <typename Real>
Tensor<Real> sum(const Tensor<Real>& x);
template <typename Real>
Tensor<Real> mean(const Tensor<Real>& x);
/// Sums out one axis.
template <typename Real>
Tensor<Real> sum_axis(const Tensor<Real>& x, std::size_t axis);

}  // namespace stt
