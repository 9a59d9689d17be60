#pragma once

#include <algorithm>
#include <cmath>
#include <cstring>

#include "sidnet/tensor.hpp"

namespace sidnet {

enum class BinaryOp { Add, Mul };

namespace detail {

// Broadcast of b onto a by the trailing-dimension rule: aligned from the
// last axis, every dimension of b must equal a's or be 1.
struct BroadcastPlan {
  bool identical = false;
  bool suffix = false;       // b is a contiguous suffix block of a
  std::int64_t outer = 1;    // repetitions of the suffix block
  std::int64_t inner = 1;    // size of the suffix block
  std::vector<int> a_dims;   // general path, trailing-aligned
  std::vector<int> b_dims;
};

inline BroadcastPlan plan_broadcast(const Shape& a, const Shape& b) {
  if (b.size() > a.size())
    throw ShapeError("broadcast: " + shape_str(b) + " has higher rank than " + shape_str(a));
  BroadcastPlan plan;
  std::size_t ra = a.size(), rb = b.size();
  bool same = true, b_all_match_tail = true;
  for (std::size_t i = 0; i < rb; ++i) {
    int ad = a[ra - 1 - i], bd = b[rb - 1 - i];
    if (bd != ad && bd != 1)
      throw ShapeError("broadcast: " + shape_str(b) + " incompatible with " + shape_str(a));
    if (bd != ad) b_all_match_tail = false;
    if (bd != ad || rb != ra) same = false;
  }
  if (same) {
    plan.identical = true;
    return plan;
  }
  if (b_all_match_tail) {
    plan.suffix = true;
    for (std::size_t i = 0; i + rb < ra; ++i) plan.outer *= a[i];
    plan.inner = shape_numel(b);
    return plan;
  }
  plan.a_dims.assign(a.begin(), a.end());
  plan.b_dims.assign(ra, 1);
  for (std::size_t i = 0; i < rb; ++i) plan.b_dims[ra - 1 - i] = b[rb - 1 - i];
  return plan;
}

// Map a flat index in a's space onto b's broadcast space.
inline std::int64_t broadcast_index(std::int64_t ai, const std::vector<int>& a_dims,
                                    const std::vector<int>& b_dims) {
  std::int64_t bi = 0, bstride = 1;
  for (int d = static_cast<int>(a_dims.size()) - 1; d >= 0; --d) {
    std::int64_t coord = ai % a_dims[d];
    ai /= a_dims[d];
    if (b_dims[d] != 1) bi += coord * bstride;
    bstride *= b_dims[d];
  }
  return bi;
}

}  // namespace detail

template <typename S>
Tensor<S> elementwise_binary(const Tensor<S>& a, const Tensor<S>& b, BinaryOp op) {
  auto plan = detail::plan_broadcast(a.shape(), b.shape());
  std::vector<S> out(a.values().size());
  const S* pa = a.data();
  const S* pb = b.data();
  const std::int64_t n = a.size();
  auto apply = [op](S x, S y) { return op == BinaryOp::Add ? x + y : x * y; };
  if (plan.identical) {
    for (std::int64_t i = 0; i < n; ++i) out[i] = apply(pa[i], pb[i]);
  } else if (plan.suffix) {
    for (std::int64_t o = 0; o < plan.outer; ++o)
      for (std::int64_t i = 0; i < plan.inner; ++i)
        out[o * plan.inner + i] = apply(pa[o * plan.inner + i], pb[i]);
  } else {
    for (std::int64_t i = 0; i < n; ++i)
      out[i] = apply(pa[i], pb[detail::broadcast_index(i, plan.a_dims, plan.b_dims)]);
  }

  auto an = a.node();
  auto bn = b.node();
  return detail::make_op<S>(
      op == BinaryOp::Add ? "add" : "mul", a.shape(), std::move(out), {an, bn},
      [an, bn, plan, op](TensorNode<S>& self) {
        const std::int64_t n = self.size();
        if (an->requires_grad) {
          an->ensure_grad();
          if (op == BinaryOp::Add) {
            for (std::int64_t i = 0; i < n; ++i) an->grad[i] += self.grad[i];
          } else if (plan.identical) {
            for (std::int64_t i = 0; i < n; ++i) an->grad[i] += self.grad[i] * bn->values[i];
          } else if (plan.suffix) {
            for (std::int64_t o = 0; o < plan.outer; ++o)
              for (std::int64_t i = 0; i < plan.inner; ++i)
                an->grad[o * plan.inner + i] +=
                    self.grad[o * plan.inner + i] * bn->values[i];
          } else {
            for (std::int64_t i = 0; i < n; ++i)
              an->grad[i] += self.grad[i] *
                             bn->values[detail::broadcast_index(i, plan.a_dims, plan.b_dims)];
          }
        }
        if (bn->requires_grad) {
          bn->ensure_grad();
          auto mul_term = [&](std::int64_t i) {
            return op == BinaryOp::Add ? self.grad[i] : self.grad[i] * an->values[i];
          };
          if (plan.identical) {
            for (std::int64_t i = 0; i < n; ++i) bn->grad[i] += mul_term(i);
          } else if (plan.suffix) {
            for (std::int64_t o = 0; o < plan.outer; ++o)
              for (std::int64_t i = 0; i < plan.inner; ++i)
                bn->grad[i] += mul_term(o * plan.inner + i);
          } else {
            for (std::int64_t i = 0; i < n; ++i)
              bn->grad[detail::broadcast_index(i, plan.a_dims, plan.b_dims)] += mul_term(i);
          }
        }
      });
}

template <typename S>
Tensor<S> add(const Tensor<S>& a, const Tensor<S>& b) {
  return elementwise_binary(a, b, BinaryOp::Add);
}
template <typename S>
Tensor<S> mul(const Tensor<S>& a, const Tensor<S>& b) {
  return elementwise_binary(a, b, BinaryOp::Mul);
}

// y = alpha * x + beta, elementwise with scalar coefficients.
template <typename S>
Tensor<S> scale_shift(const Tensor<S>& x, S alpha, S beta) {
  std::vector<S> out(x.values().size());
  const std::int64_t n = x.size();
  for (std::int64_t i = 0; i < n; ++i) out[i] = alpha * x[i] + beta;
  auto xn = x.node();
  return detail::make_op<S>("scale_shift", x.shape(), std::move(out), {xn},
                            [xn, alpha](TensorNode<S>& self) {
                              xn->ensure_grad();
                              for (std::int64_t i = 0; i < self.size(); ++i)
                                xn->grad[i] += alpha * self.grad[i];
                            });
}

// x [B x I] times w [I x O]; bias handled by the dense() wrapper via add().
template <typename S>
Tensor<S> matmul(const Tensor<S>& x, const Tensor<S>& w) {
  if (x.rank() != 2 || w.rank() != 2 || x.dim(1) != w.dim(0))
    throw ShapeError("matmul: " + shape_str(x.shape()) + " * " + shape_str(w.shape()));
  const std::int64_t B = x.dim(0), I = x.dim(1), O = w.dim(1);
  std::vector<S> out(static_cast<std::size_t>(B * O));
  Eigen::Map<MatrixRM<S>>(out.data(), B, O).noalias() = x.mat(B, I) * w.mat(I, O);
  auto xn = x.node();
  auto wn = w.node();
  return detail::make_op<S>(
      "matmul", {static_cast<int>(B), static_cast<int>(O)}, std::move(out), {xn, wn},
      [xn, wn, B, I, O](TensorNode<S>& self) {
        Eigen::Map<MatrixRM<S>> dout(self.grad.data(), B, O);
        if (xn->requires_grad) {
          xn->ensure_grad();
          Eigen::Map<MatrixRM<S>>(xn->grad.data(), B, I).noalias() +=
              dout * Eigen::Map<const MatrixRM<S>>(wn->values.data(), I, O).transpose();
        }
        if (wn->requires_grad) {
          wn->ensure_grad();
          Eigen::Map<MatrixRM<S>>(wn->grad.data(), I, O).noalias() +=
              Eigen::Map<const MatrixRM<S>>(xn->values.data(), B, I).transpose() * dout;
        }
      });
}

// Dense layer: x [B x I] -> x*W + bias broadcast over rows.
template <typename S>
Tensor<S> dense(const Tensor<S>& x, const Tensor<S>& w, const Tensor<S>& bias) {
  if (bias.rank() != 1 || bias.dim(0) != w.dim(1))
    throw ShapeError("dense: bias " + shape_str(bias.shape()) + " vs weights " +
                     shape_str(w.shape()));
  return add(matmul(x, w), bias);
}

enum class Activation { Relu, Sigmoid, Tanh };

template <typename S>
Tensor<S> activation(const Tensor<S>& x, Activation kind) {
  const std::int64_t n = x.size();
  std::vector<S> out(static_cast<std::size_t>(n));
  const S* px = x.data();
  switch (kind) {
    case Activation::Relu:
      if (diag::KinkMeter::enabled())
        for (std::int64_t i = 0; i < n; ++i)
          diag::KinkMeter::min_relu_margin() =
              std::min(diag::KinkMeter::min_relu_margin(), std::abs(static_cast<double>(px[i])));
      for (std::int64_t i = 0; i < n; ++i) out[i] = px[i] > S(0) ? px[i] : S(0);
      break;
    case Activation::Sigmoid:
      for (std::int64_t i = 0; i < n; ++i) out[i] = S(1) / (S(1) + std::exp(-px[i]));
      break;
    case Activation::Tanh:
      for (std::int64_t i = 0; i < n; ++i) out[i] = std::tanh(px[i]);
      break;
  }
  auto xn = x.node();
  return detail::make_op<S>(
      kind == Activation::Relu ? "relu" : (kind == Activation::Sigmoid ? "sigmoid" : "tanh"),
      x.shape(), std::move(out), {xn}, [xn, kind](TensorNode<S>& self) {
        xn->ensure_grad();
        const std::int64_t n = self.size();
        switch (kind) {
          case Activation::Relu:
            for (std::int64_t i = 0; i < n; ++i)
              if (xn->values[i] > S(0)) xn->grad[i] += self.grad[i];
            break;
          case Activation::Sigmoid:
            for (std::int64_t i = 0; i < n; ++i) {
              S y = self.values[i];
              xn->grad[i] += self.grad[i] * y * (S(1) - y);
            }
            break;
          case Activation::Tanh:
            for (std::int64_t i = 0; i < n; ++i) {
              S y = self.values[i];
              xn->grad[i] += self.grad[i] * (S(1) - y * y);
            }
            break;
        }
      });
}

template <typename S>
Tensor<S> relu(const Tensor<S>& x) {
  return activation(x, Activation::Relu);
}
template <typename S>
Tensor<S> sigmoid(const Tensor<S>& x) {
  return activation(x, Activation::Sigmoid);
}
template <typename S>
Tensor<S> tanh_op(const Tensor<S>& x) {
  return activation(x, Activation::Tanh);
}

namespace detail {

// Decompose a shape around one axis into [outer, axis, inner] blocks.
inline void axis_blocks(const Shape& s, int axis, std::int64_t& outer, std::int64_t& inner) {
  outer = 1;
  inner = 1;
  for (int i = 0; i < axis; ++i) outer *= s[static_cast<std::size_t>(i)];
  for (std::size_t i = static_cast<std::size_t>(axis) + 1; i < s.size(); ++i) inner *= s[i];
}

}  // namespace detail

// Concatenate along an axis; the gradient splits back at the recorded offsets.
template <typename S>
Tensor<S> concat(const std::vector<Tensor<S>>& parts, int axis) {
  if (parts.empty()) throw InputError("concat: no parts");
  const Shape& s0 = parts[0].shape();
  if (axis < 0 || axis >= static_cast<int>(s0.size()))
    throw ShapeError("concat: axis out of range");
  int axis_total = 0;
  for (const auto& p : parts) {
    if (p.rank() != static_cast<int>(s0.size()))
      throw ShapeError("concat: rank mismatch");
    for (int d = 0; d < p.rank(); ++d)
      if (d != axis && p.dim(d) != s0[static_cast<std::size_t>(d)])
        throw ShapeError("concat: dim " + std::to_string(d) + " mismatch: " +
                         shape_str(p.shape()) + " vs " + shape_str(s0));
    axis_total += p.dim(axis);
  }
  Shape out_shape = s0;
  out_shape[static_cast<std::size_t>(axis)] = axis_total;
  std::int64_t outer, inner;
  detail::axis_blocks(out_shape, axis, outer, inner);

  std::vector<S> out(static_cast<std::size_t>(shape_numel(out_shape)));
  std::vector<std::shared_ptr<TensorNode<S>>> parents;
  std::vector<std::int64_t> offsets;  // axis offsets per part
  std::int64_t off = 0;
  for (const auto& p : parts) {
    parents.push_back(p.node());
    offsets.push_back(off);
    const std::int64_t pa = p.dim(axis);
    for (std::int64_t o = 0; o < outer; ++o)
      std::memcpy(out.data() + (o * axis_total + off) * inner,
                  p.data() + o * pa * inner, sizeof(S) * static_cast<std::size_t>(pa * inner));
    off += pa;
  }

  auto parents_copy = parents;
  return detail::make_op<S>(
      "concat", std::move(out_shape), std::move(out), std::move(parents),
      [parents_copy, offsets, axis, axis_total, outer, inner](TensorNode<S>& self) {
        for (std::size_t k = 0; k < parents_copy.size(); ++k) {
          auto& p = parents_copy[k];
          if (!p->requires_grad) continue;
          p->ensure_grad();
          const std::int64_t pa = p->shape[static_cast<std::size_t>(axis)];
          for (std::int64_t o = 0; o < outer; ++o) {
            const S* src = self.grad.data() + (o * axis_total + offsets[k]) * inner;
            S* dst = p->grad.data() + o * pa * inner;
            for (std::int64_t i = 0; i < pa * inner; ++i) dst[i] += src[i];
          }
        }
      });
}

template <typename S>
Tensor<S> slice(const Tensor<S>& x, int axis, int start, int len) {
  if (axis < 0 || axis >= x.rank()) throw ShapeError("slice: axis out of range");
  if (start < 0 || len <= 0 || start + len > x.dim(axis))
    throw ShapeError("slice: range [" + std::to_string(start) + "," +
                     std::to_string(start + len) + ") out of dim " +
                     std::to_string(x.dim(axis)));
  Shape out_shape = x.shape();
  out_shape[static_cast<std::size_t>(axis)] = len;
  std::int64_t outer, inner;
  detail::axis_blocks(x.shape(), axis, outer, inner);
  const std::int64_t ax = x.dim(axis);

  std::vector<S> out(static_cast<std::size_t>(shape_numel(out_shape)));
  for (std::int64_t o = 0; o < outer; ++o)
    std::memcpy(out.data() + o * len * inner, x.data() + (o * ax + start) * inner,
                sizeof(S) * static_cast<std::size_t>(len * inner));

  auto xn = x.node();
  return detail::make_op<S>("slice", std::move(out_shape), std::move(out), {xn},
                            [xn, axis, start, len, outer, inner, ax](TensorNode<S>& self) {
                              xn->ensure_grad();
                              for (std::int64_t o = 0; o < outer; ++o) {
                                const S* src = self.grad.data() + o * len * inner;
                                S* dst = xn->grad.data() + (o * ax + start) * inner;
                                for (std::int64_t i = 0; i < len * inner; ++i) dst[i] += src[i];
                              }
                            });
}

// Same data, new shape; gradient passes through untouched.
template <typename S>
Tensor<S> reshape(const Tensor<S>& x, Shape shape) {
  if (shape_numel(shape) != x.size())
    throw ShapeError("reshape: " + shape_str(x.shape()) + " -> " + shape_str(shape));
  auto xn = x.node();
  return detail::make_op<S>("reshape", std::move(shape), x.values(), {xn},
                            [xn](TensorNode<S>& self) {
                              xn->ensure_grad();
                              for (std::int64_t i = 0; i < self.size(); ++i)
                                xn->grad[i] += self.grad[i];
                            });
}

template <typename S>
Tensor<S> sum(const Tensor<S>& x) {
  S total = 0;
  for (std::int64_t i = 0; i < x.size(); ++i) total += x[i];
  auto xn = x.node();
  return detail::make_op<S>("sum", {1}, {total}, {xn}, [xn](TensorNode<S>& self) {
    xn->ensure_grad();
    for (auto& g : xn->grad) g += self.grad[0];
  });
}

// Mean over the batch of -log softmax(logits)[label], stabilized by rowwise
// max subtraction. Gradient is (softmax - onehot) / B.
template <typename S>
Tensor<S> softmax_cross_entropy(const Tensor<S>& logits, const std::vector<int>& labels) {
  if (logits.rank() != 2) throw ShapeError("softmax_cross_entropy: logits must be [B x C]");
  const std::int64_t B = logits.dim(0), C = logits.dim(1);
  if (static_cast<std::int64_t>(labels.size()) != B)
    throw InputError("softmax_cross_entropy: " + std::to_string(labels.size()) +
                     " labels for batch " + std::to_string(B));
  for (int l : labels)
    if (l < 0 || l >= C)
      throw InputError("softmax_cross_entropy: label " + std::to_string(l) +
                       " outside [0," + std::to_string(C) + ")");

  auto probs = std::make_shared<std::vector<S>>(static_cast<std::size_t>(B * C));
  S loss = 0;
  for (std::int64_t b = 0; b < B; ++b) {
    const S* row = logits.data() + b * C;
    S mx = row[0];
    for (std::int64_t c = 1; c < C; ++c) mx = std::max(mx, row[c]);
    S denom = 0;
    for (std::int64_t c = 0; c < C; ++c) {
      S e = std::exp(row[c] - mx);
      (*probs)[static_cast<std::size_t>(b * C + c)] = e;
      denom += e;
    }
    for (std::int64_t c = 0; c < C; ++c) (*probs)[static_cast<std::size_t>(b * C + c)] /= denom;
    // log-space form: finite even when the true-class probability underflows
    loss += std::log(denom) - (row[labels[static_cast<std::size_t>(b)]] - mx);
  }
  loss /= static_cast<S>(B);

  auto ln = logits.node();
  return detail::make_op<S>("softmax_xent", {1}, {loss}, {ln},
                            [ln, probs, labels, B, C](TensorNode<S>& self) {
                              ln->ensure_grad();
                              const S scale = self.grad[0] / static_cast<S>(B);
                              for (std::int64_t b = 0; b < B; ++b)
                                for (std::int64_t c = 0; c < C; ++c) {
                                  S p = (*probs)[static_cast<std::size_t>(b * C + c)];
                                  S onehot = (labels[static_cast<std::size_t>(b)] == c) ? S(1) : S(0);
                                  ln->grad[b * C + c] += scale * (p - onehot);
                                }
                            });
}

// Softmax probabilities without the loss, for prediction output.
template <typename S>
std::vector<S> softmax_row(const Tensor<S>& logits) {
  if (logits.rank() != 2 || logits.dim(0) != 1)
    throw ShapeError("softmax_row: expected [1 x C]");
  const std::int64_t C = logits.dim(1);
  std::vector<S> p(static_cast<std::size_t>(C));
  S mx = logits[0];
  for (std::int64_t c = 1; c < C; ++c) mx = std::max(mx, logits[c]);
  S denom = 0;
  for (std::int64_t c = 0; c < C; ++c) {
    p[static_cast<std::size_t>(c)] = std::exp(logits[c] - mx);
    denom += p[static_cast<std::size_t>(c)];
  }
  for (auto& v : p) v /= denom;
  return p;
}

}  // namespace sidnet
