#include "stt/tensor.hpp"

#include <sstream>
#include <unordered_set>
#include <utility>

namespace stt {

std::size_t shape_numel(const Shape& shape) {
  std::size_t n = 1;
  for (auto e : shape) n *= e;
  return n;
}

std::string shape_str(const Shape& shape) {
  std::ostringstream os;
  os << '[';
  for (std::size_t i = 0; i < shape.size(); ++i) {
    if (i) os << 'x';
    os << shape[i];
  }
  os << ']';
  return os.str();
}

namespace {
thread_local bool grad_mode_enabled = true;
}

bool GradMode::enabled() { return grad_mode_enabled; }
void GradMode::set_enabled(bool on) { grad_mode_enabled = on; }

template <typename Real>
Tensor<Real> Tensor<Real>::from(Shape shape, std::vector<Real> values, bool requires_grad) {
  for (auto e : shape) {
    if (e == 0) throw DimensionError("tensor extents must be positive, got " + shape_str(shape));
  }
  if (shape_numel(shape) != values.size()) {
    throw DimensionError("shape " + shape_str(shape) + " holds " +
                         std::to_string(shape_numel(shape)) + " values, got " +
                         std::to_string(values.size()));
  }
  auto node = std::make_shared<Node<Real>>();
  node->shape = std::move(shape);
  node->data = std::move(values);
  node->requires_grad = requires_grad;
  return Tensor(std::move(node));
}

template <typename Real>
Tensor<Real> Tensor<Real>::zeros(Shape shape, bool requires_grad) {
  return full(std::move(shape), Real(0), requires_grad);
}

template <typename Real>
Tensor<Real> Tensor<Real>::full(Shape shape, Real value, bool requires_grad) {
  const auto n = shape_numel(shape);
  return from(std::move(shape), std::vector<Real>(n, value), requires_grad);
}

template <typename Real>
Tensor<Real> Tensor<Real>::scalar(Real value, bool requires_grad) {
  return from(Shape{1}, std::vector<Real>{value}, requires_grad);
}

template <typename Real>
Tensor<Real> Tensor<Real>::make_result(Shape shape, std::vector<Real> values,
                                       std::vector<Tensor> inputs, BackwardFn fn) {
  Tensor out = from(std::move(shape), std::move(values), false);
  if (!GradMode::enabled()) return out;
  bool track = false;
  for (const auto& in : inputs) track = track || in.requires_grad();
  if (!track) return out;
  auto& node = out.node();
  node.requires_grad = true;
  node.parents.reserve(inputs.size());
  for (auto& in : inputs) node.parents.push_back(in.node_);
  node.backward_fn = std::move(fn);
  return out;
}

template <typename Real>
Node<Real>& Tensor<Real>::node() const {
  if (!node_) throw ContractError("use of an undefined tensor");
  return *node_;
}

template <typename Real>
const Shape& Tensor<Real>::shape() const {
  return node().shape;
}

template <typename Real>
std::size_t Tensor<Real>::extent(std::size_t axis) const {
  const auto& s = shape();
  if (axis >= s.size()) {
    throw DimensionError("axis " + std::to_string(axis) + " out of range for " + shape_str(s));
  }
  return s[axis];
}

template <typename Real>
std::size_t Tensor<Real>::numel() const {
  return node().data.size();
}

template <typename Real>
std::span<const Real> Tensor<Real>::data() const {
  return node().data;
}

template <typename Real>
std::span<Real> Tensor<Real>::mutable_data() {
  return node().data;
}

template <typename Real>
Real Tensor<Real>::item() const {
  if (numel() != 1) throw ContractError("item() on tensor of shape " + shape_str(shape()));
  return node().data[0];
}

template <typename Real>
bool Tensor<Real>::requires_grad() const {
  return node_ && node_->requires_grad;
}

template <typename Real>
bool Tensor<Real>::has_grad() const {
  return node_ && !node_->grad.empty();
}

template <typename Real>
std::vector<Real> Tensor<Real>::grad() const {
  const auto& n = node();
  if (n.grad.empty()) return std::vector<Real>(n.data.size(), Real(0));
  return n.grad;
}

template <typename Real>
std::span<Real> Tensor<Real>::mutable_grad() {
  return node().grad_buffer();
}

template <typename Real>
void Tensor<Real>::zero_grad() {
  node().grad.clear();
}

template <typename Real>
void Tensor<Real>::backward() const {
  auto& root = node();
  if (root.data.size() != 1) {
    throw ContractError("backward() needs a scalar output, got shape " + shape_str(root.shape));
  }
  if (!root.requires_grad) throw ContractError("backward() on a tensor that tracks no gradient");

  // Iterative post-order DFS gives a topological order (parents before child).
  std::vector<Node<Real>*> order;
  std::unordered_set<Node<Real>*> seen;
  std::vector<std::pair<Node<Real>*, std::size_t>> stack{{&root, 0}};
  seen.insert(&root);
  while (!stack.empty()) {
    auto& [n, next] = stack.back();
    if (next < n->parents.size()) {
      Node<Real>* p = n->parents[next++].get();
      if (p->requires_grad && seen.insert(p).second) stack.emplace_back(p, 0);
    } else {
      order.push_back(n);
      stack.pop_back();
    }
  }

  for (auto* n : order) {
    if (n->backward_fn) n->grad.clear();
  }
  root.grad_buffer()[0] += Real(1);
  for (auto it = order.rbegin(); it != order.rend(); ++it) {
    Node<Real>* n = *it;
    if (n->backward_fn && !n->grad.empty()) n->backward_fn(*n);
  }
}

template <typename Real>
Tensor<Real> Tensor<Real>::detach() const {
  return from(shape(), node().data, false);
}

template <typename To, typename From>
Tensor<To> cast(const Tensor<From>& t, bool requires_grad) {
  std::vector<To> values(t.data().begin(), t.data().end());
  return Tensor<To>::from(t.shape(), std::move(values), requires_grad);
}

template class Tensor<float>;
template class Tensor<double>;
template Tensor<double> cast<double, float>(const Tensor<float>&, bool);
template Tensor<float> cast<float, double>(const Tensor<double>&, bool);
template Tensor<float> cast<float, float>(const Tensor<float>&, bool);
template Tensor<double> cast<double, double>(const Tensor<double>&, bool);

}  // namespace stt
