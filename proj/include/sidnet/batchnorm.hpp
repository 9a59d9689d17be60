#pragma once

#include "sidnet/ops.hpp"

namespace sidnet {

enum class Mode { Train, Infer };

// Per-channel batch normalization state. Running statistics start at
// mean 0 / var 1 so inference before any training step is well defined.
template <typename S>
struct BatchNormState {
  Tensor<S> gamma, beta;
  std::vector<S> running_mean, running_var;
  S momentum = S(0.9);
  S eps = S(1e-5);

  BatchNormState() = default;
  explicit BatchNormState(int channels)
      : gamma(Tensor<S>::param(Shape{channels},
                               std::vector<S>(static_cast<std::size_t>(channels), S(1)))),
        beta(Tensor<S>::param_zeros({channels})),
        running_mean(static_cast<std::size_t>(channels), S(0)),
        running_var(static_cast<std::size_t>(channels), S(1)) {}

  int channels() const { return gamma.dim(0); }
};

// Statistics are computed per channel over batch and spatial positions
// (channels-last layout). Train mode normalizes with batch statistics and
// updates the running averages; infer mode uses the running statistics.
template <typename S>
Tensor<S> batchnorm(const Tensor<S>& x, BatchNormState<S>& state, Mode mode) {
  if (x.rank() < 2) throw ShapeError("batchnorm: input rank " + std::to_string(x.rank()));
  const std::int64_t C = x.dim(x.rank() - 1);
  if (C != state.channels())
    throw ShapeError("batchnorm: " + std::to_string(C) + " channels vs state " +
                     std::to_string(state.channels()));
  const std::int64_t n = x.size();
  const std::int64_t rows = n / C;

  auto mean = std::make_shared<std::vector<S>>(static_cast<std::size_t>(C), S(0));
  auto var = std::make_shared<std::vector<S>>(static_cast<std::size_t>(C), S(0));
  if (mode == Mode::Train) {
    const S* px = x.data();
    for (std::int64_t r = 0; r < rows; ++r)
      for (std::int64_t c = 0; c < C; ++c) (*mean)[static_cast<std::size_t>(c)] += px[r * C + c];
    for (auto& m : *mean) m /= static_cast<S>(rows);
    for (std::int64_t r = 0; r < rows; ++r)
      for (std::int64_t c = 0; c < C; ++c) {
        S d = px[r * C + c] - (*mean)[static_cast<std::size_t>(c)];
        (*var)[static_cast<std::size_t>(c)] += d * d;
      }
    for (auto& v : *var) v /= static_cast<S>(rows);
    for (std::int64_t c = 0; c < C; ++c) {
      auto ci = static_cast<std::size_t>(c);
      state.running_mean[ci] = state.momentum * state.running_mean[ci] +
                               (S(1) - state.momentum) * (*mean)[ci];
      state.running_var[ci] =
          state.momentum * state.running_var[ci] + (S(1) - state.momentum) * (*var)[ci];
    }
  } else {
    *mean = state.running_mean;
    *var = state.running_var;
  }

  auto inv_std = std::make_shared<std::vector<S>>(static_cast<std::size_t>(C));
  for (std::int64_t c = 0; c < C; ++c)
    (*inv_std)[static_cast<std::size_t>(c)] =
        S(1) / std::sqrt((*var)[static_cast<std::size_t>(c)] + state.eps);

  auto xhat = std::make_shared<std::vector<S>>(static_cast<std::size_t>(n));
  std::vector<S> out(static_cast<std::size_t>(n));
  {
    const S* px = x.data();
    const S* pg = state.gamma.data();
    const S* pb = state.beta.data();
    for (std::int64_t r = 0; r < rows; ++r)
      for (std::int64_t c = 0; c < C; ++c) {
        auto ci = static_cast<std::size_t>(c);
        S h = (px[r * C + c] - (*mean)[ci]) * (*inv_std)[ci];
        (*xhat)[static_cast<std::size_t>(r * C + c)] = h;
        out[static_cast<std::size_t>(r * C + c)] = pg[c] * h + pb[c];
      }
  }

  auto xn = x.node();
  auto gn = state.gamma.node();
  auto bn = state.beta.node();
  const bool train = mode == Mode::Train;
  return detail::make_op<S>(
      "batchnorm", x.shape(), std::move(out), {xn, gn, bn},
      [xn, gn, bn, xhat, inv_std, rows, C, train](TensorNode<S>& self) {
        if (gn->requires_grad) {
          gn->ensure_grad();
          for (std::int64_t r = 0; r < rows; ++r)
            for (std::int64_t c = 0; c < C; ++c)
              gn->grad[c] += self.grad[r * C + c] * (*xhat)[static_cast<std::size_t>(r * C + c)];
        }
        if (bn->requires_grad) {
          bn->ensure_grad();
          for (std::int64_t r = 0; r < rows; ++r)
            for (std::int64_t c = 0; c < C; ++c) bn->grad[c] += self.grad[r * C + c];
        }
        if (!xn->requires_grad) return;
        xn->ensure_grad();
        if (!train) {
          for (std::int64_t r = 0; r < rows; ++r)
            for (std::int64_t c = 0; c < C; ++c)
              xn->grad[r * C + c] += self.grad[r * C + c] * gn->values[c] *
                                     (*inv_std)[static_cast<std::size_t>(c)];
          return;
        }
        // Train mode: the batch statistics depend on x.
        std::vector<S> sum_dh(static_cast<std::size_t>(C), S(0));
        std::vector<S> sum_dh_h(static_cast<std::size_t>(C), S(0));
        for (std::int64_t r = 0; r < rows; ++r)
          for (std::int64_t c = 0; c < C; ++c) {
            S dh = self.grad[r * C + c] * gn->values[c];
            sum_dh[static_cast<std::size_t>(c)] += dh;
            sum_dh_h[static_cast<std::size_t>(c)] +=
                dh * (*xhat)[static_cast<std::size_t>(r * C + c)];
          }
        const S inv_rows = S(1) / static_cast<S>(rows);
        for (std::int64_t r = 0; r < rows; ++r)
          for (std::int64_t c = 0; c < C; ++c) {
            auto ci = static_cast<std::size_t>(c);
            S dh = self.grad[r * C + c] * gn->values[c];
            S h = (*xhat)[static_cast<std::size_t>(r * C + c)];
            xn->grad[r * C + c] += (*inv_std)[ci] *
                                   (dh - inv_rows * sum_dh[ci] - inv_rows * h * sum_dh_h[ci]);
          }
      });
}

}  // namespace sidnet
