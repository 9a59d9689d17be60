#pragma once

#include <Eigen/Core>
#include <cstdint>
#include <functional>
#include <limits>
#include <memory>
#include <numeric>
#include <sstream>
#include <string>
#include <unordered_set>
#include <utility>
#include <vector>

#include "sidnet/errors.hpp"

namespace sidnet {

using Shape = std::vector<int>;

inline std::int64_t shape_numel(const Shape& s) {
  std::int64_t n = 1;
  for (int d : s) n *= d;
  return n;
}

inline std::string shape_str(const Shape& s) {
  std::ostringstream os;
  os << '[';
  for (std::size_t i = 0; i < s.size(); ++i) os << (i ? "x" : "") << s[i];
  os << ']';
  return os.str();
}

template <typename S>
using MatrixRM = Eigen::Matrix<S, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
template <typename S>
using ArrayX = Eigen::Array<S, Eigen::Dynamic, 1>;

// One vertex of the recorded computation graph. Ops build fresh nodes; the
// backward closure pushes this node's gradient into its parents.
template <typename S>
struct TensorNode {
  Shape shape;
  std::vector<S> values;
  std::vector<S> grad;  // allocated lazily, same length as values
  bool requires_grad = false;
  const char* op = "leaf";
  std::vector<std::shared_ptr<TensorNode>> parents;
  std::function<void(TensorNode&)> backward_fn;

  std::int64_t size() const { return static_cast<std::int64_t>(values.size()); }

  void ensure_grad() {
    if (grad.size() != values.size()) grad.assign(values.size(), S(0));
  }
};

// Value-semantic handle sharing one graph node. Copies alias the node, which
// is what ops need to record parent links.
template <typename S>
class Tensor {
 public:
  using Scalar = S;

  Tensor() = default;

  Tensor(Shape shape, std::vector<S> values) {
    if (shape_numel(shape) != static_cast<std::int64_t>(values.size()))
      throw ShapeError("tensor: " + shape_str(shape) + " does not hold " +
                       std::to_string(values.size()) + " values");
    node_ = std::make_shared<TensorNode<S>>();
    node_->shape = std::move(shape);
    node_->values = std::move(values);
  }

  static Tensor zeros(const Shape& shape) {
    return Tensor(shape, std::vector<S>(static_cast<std::size_t>(shape_numel(shape)), S(0)));
  }

  static Tensor full(const Shape& shape, S value) {
    return Tensor(shape, std::vector<S>(static_cast<std::size_t>(shape_numel(shape)), value));
  }

  static Tensor scalar(S value) { return Tensor({1}, {value}); }

  // Trainable leaf: gradient storage exists from the start so that an unused
  // parameter reports an all-zero gradient.
  static Tensor param(const Shape& shape, std::vector<S> values) {
    Tensor t(shape, std::move(values));
    t.node_->requires_grad = true;
    t.node_->ensure_grad();
    return t;
  }

  static Tensor param_zeros(const Shape& shape) {
    return param(shape, std::vector<S>(static_cast<std::size_t>(shape_numel(shape)), S(0)));
  }

  bool defined() const { return node_ != nullptr; }
  const Shape& shape() const { return node_->shape; }
  int rank() const { return static_cast<int>(node_->shape.size()); }
  int dim(int i) const { return node_->shape[static_cast<std::size_t>(i)]; }
  std::int64_t size() const { return node_->size(); }

  S* data() { return node_->values.data(); }
  const S* data() const { return node_->values.data(); }
  std::vector<S>& values() { return node_->values; }
  const std::vector<S>& values() const { return node_->values; }

  S operator[](std::int64_t i) const { return node_->values[static_cast<std::size_t>(i)]; }
  S& operator[](std::int64_t i) { return node_->values[static_cast<std::size_t>(i)]; }

  bool requires_grad() const { return node_->requires_grad; }
  void set_requires_grad(bool b) {
    node_->requires_grad = b;
    if (b) node_->ensure_grad();
  }

  std::vector<S>& grad() {
    node_->ensure_grad();
    return node_->grad;
  }
  const std::vector<S>& grad() const { return node_->grad; }
  void zero_grad() {
    if (!node_->grad.empty()) std::fill(node_->grad.begin(), node_->grad.end(), S(0));
  }

  Eigen::Map<MatrixRM<S>> mat(std::int64_t rows, std::int64_t cols) {
    return Eigen::Map<MatrixRM<S>>(data(), rows, cols);
  }
  Eigen::Map<const MatrixRM<S>> mat(std::int64_t rows, std::int64_t cols) const {
    return Eigen::Map<const MatrixRM<S>>(data(), rows, cols);
  }
  Eigen::Map<ArrayX<S>> arr() { return Eigen::Map<ArrayX<S>>(data(), size()); }
  Eigen::Map<const ArrayX<S>> arr() const {
    return Eigen::Map<const ArrayX<S>>(data(), size());
  }

  std::shared_ptr<TensorNode<S>>& node() { return node_; }
  const std::shared_ptr<TensorNode<S>>& node() const { return node_; }

 private:
  std::shared_ptr<TensorNode<S>> node_;
};

namespace detail {

template <typename S>
Tensor<S> make_op(const char* op, Shape shape, std::vector<S> values,
                  std::vector<std::shared_ptr<TensorNode<S>>> parents,
                  std::function<void(TensorNode<S>&)> backward_fn) {
  Tensor<S> out(std::move(shape), std::move(values));
  auto& n = *out.node();
  n.op = op;
  for (const auto& p : parents)
    if (p->requires_grad) n.requires_grad = true;
  if (n.requires_grad) {
    n.parents = std::move(parents);
    n.backward_fn = std::move(backward_fn);
  }
  return out;
}

}  // namespace detail

// Reverse-mode sweep from a scalar loss. Gradients accumulate additively, so
// a tensor used twice receives both contributions.
template <typename S>
void backward(Tensor<S>& loss) {
  if (!loss.defined() || loss.size() != 1)
    throw InputError("backward: loss must be a scalar tensor");
  auto* root = loss.node().get();
  if (!root->requires_grad) return;  // nothing trainable upstream

  // Iterative DFS post-order over requires_grad ancestry.
  std::vector<TensorNode<S>*> order;
  std::unordered_set<TensorNode<S>*> seen;
  std::vector<std::pair<TensorNode<S>*, std::size_t>> stack;
  stack.emplace_back(root, 0);
  seen.insert(root);
  while (!stack.empty()) {
    auto& [node, next] = stack.back();
    if (next < node->parents.size()) {
      TensorNode<S>* p = node->parents[next++].get();
      if (p->requires_grad && seen.insert(p).second) stack.emplace_back(p, 0);
    } else {
      order.push_back(node);
      stack.pop_back();
    }
  }

  for (auto* n : order) n->ensure_grad();
  root->grad[0] += S(1);
  for (auto it = order.rbegin(); it != order.rend(); ++it)
    if ((*it)->backward_fn) (*it)->backward_fn(**it);
}

template <typename S>
bool all_finite(const std::vector<S>& v) {
  for (S x : v)
    if (!std::isfinite(static_cast<double>(x))) return false;
  return true;
}

namespace diag {

// Instrumentation used by the gradient-check suites to reject instances whose
// ReLU preactivations or pooling windows sit too close to a kink for finite
// differences to be trustworthy. Off by default; zero cost in training.
struct KinkMeter {
  static bool& enabled() {
    static thread_local bool on = false;
    return on;
  }
  static double& min_relu_margin() {
    static thread_local double m = std::numeric_limits<double>::infinity();
    return m;
  }
  static double& min_pool_gap() {
    static thread_local double m = std::numeric_limits<double>::infinity();
    return m;
  }
  static void reset() {
    min_relu_margin() = std::numeric_limits<double>::infinity();
    min_pool_gap() = std::numeric_limits<double>::infinity();
  }
};

}  // namespace diag

}  // namespace sidnet
