#pragma once

#include <cstring>

#include "sidnet/ops.hpp"

namespace sidnet {

enum class Padding { Same, Valid };

// Convolution parameters. Weights are stored [num_filters, kh, kw, in_channels]
// row-major; convolution is cross-correlation (no kernel flip), stride 1.
template <typename S>
struct ConvSpec {
  int num_filters = 0;
  int kernel_h = 0;
  int kernel_w = 0;
  int in_channels = 0;
  Padding padding = Padding::Same;
  Tensor<S> weights;  // [M, kh, kw, P]
  Tensor<S> bias;     // [M]

  static ConvSpec make(int filters, int kh, int kw, int in_ch,
                       Padding pad = Padding::Same) {
    ConvSpec spec;
    spec.num_filters = filters;
    spec.kernel_h = kh;
    spec.kernel_w = kw;
    spec.in_channels = in_ch;
    spec.padding = pad;
    spec.weights = Tensor<S>::param_zeros({filters, kh, kw, in_ch});
    spec.bias = Tensor<S>::param_zeros({filters});
    return spec;
  }

  void validate() const {
    if (num_filters <= 0 || kernel_h <= 0 || kernel_w <= 0 || in_channels <= 0)
      throw ShapeError("conv spec: non-positive dimension");
    Shape expect{num_filters, kernel_h, kernel_w, in_channels};
    if (weights.shape() != expect)
      throw ShapeError("conv spec: weights " + shape_str(weights.shape()) +
                       " inconsistent with declared " + shape_str(expect));
    if (bias.shape() != Shape{num_filters})
      throw ShapeError("conv spec: bias shape " + shape_str(bias.shape()));
  }
};

namespace detail {

struct ConvGeometry {
  std::int64_t batch, in_h, in_w, in_c;
  std::int64_t out_h, out_w;
  int pad_top, pad_left;
  bool batched;  // input carried a leading batch axis
};

// Same padding for even kernels pads bottom/right only: pad_top = (k-1)/2.
template <typename S>
ConvGeometry conv_geometry(const Tensor<S>& x, const ConvSpec<S>& spec) {
  ConvGeometry g{};
  if (x.rank() == 4) {
    g.batched = true;
    g.batch = x.dim(0);
    g.in_h = x.dim(1);
    g.in_w = x.dim(2);
    g.in_c = x.dim(3);
  } else if (x.rank() == 3) {
    g.batched = false;
    g.batch = 1;
    g.in_h = x.dim(0);
    g.in_w = x.dim(1);
    g.in_c = x.dim(2);
  } else {
    throw ShapeError("conv: input rank " + std::to_string(x.rank()));
  }
  if (g.in_c != spec.in_channels)
    throw ShapeError("conv: input has " + std::to_string(g.in_c) + " channels, spec expects " +
                     std::to_string(spec.in_channels));
  if (spec.padding == Padding::Same) {
    g.pad_top = (spec.kernel_h - 1) / 2;
    g.pad_left = (spec.kernel_w - 1) / 2;
    g.out_h = g.in_h;
    g.out_w = g.in_w;
  } else {
    if (spec.kernel_h > g.in_h || spec.kernel_w > g.in_w)
      throw ShapeError("conv: valid-mode kernel " + std::to_string(spec.kernel_h) + "x" +
                       std::to_string(spec.kernel_w) + " larger than input " +
                       std::to_string(g.in_h) + "x" + std::to_string(g.in_w));
    g.pad_top = 0;
    g.pad_left = 0;
    g.out_h = g.in_h - spec.kernel_h + 1;
    g.out_w = g.in_w - spec.kernel_w + 1;
  }
  return g;
}

// Gather input patches into col [B*OH*OW, kh*kw*C], zero-filling the padding.
template <typename S>
void im2col(const S* x, const ConvGeometry& g, int kh, int kw, S* col) {
  const std::int64_t patch = static_cast<std::int64_t>(kh) * kw * g.in_c;
  const std::int64_t row_len = kw * g.in_c;
  for (std::int64_t b = 0; b < g.batch; ++b) {
    const S* xb = x + b * g.in_h * g.in_w * g.in_c;
    for (std::int64_t oh = 0; oh < g.out_h; ++oh)
      for (std::int64_t ow = 0; ow < g.out_w; ++ow) {
        S* dst = col + ((b * g.out_h + oh) * g.out_w + ow) * patch;
        for (int r = 0; r < kh; ++r) {
          const std::int64_t ih = oh - g.pad_top + r;
          S* drow = dst + static_cast<std::int64_t>(r) * row_len;
          if (ih < 0 || ih >= g.in_h) {
            std::memset(drow, 0, sizeof(S) * static_cast<std::size_t>(row_len));
            continue;
          }
          const std::int64_t iw0 = ow - g.pad_left;
          std::int64_t lo = std::max<std::int64_t>(0, -iw0);
          std::int64_t hi = std::min<std::int64_t>(kw, g.in_w - iw0);
          if (lo > 0) std::memset(drow, 0, sizeof(S) * static_cast<std::size_t>(lo * g.in_c));
          if (hi < kw)
            std::memset(drow + hi * g.in_c, 0,
                        sizeof(S) * static_cast<std::size_t>((kw - hi) * g.in_c));
          if (hi > lo)
            std::memcpy(drow + lo * g.in_c, xb + (ih * g.in_w + iw0 + lo) * g.in_c,
                        sizeof(S) * static_cast<std::size_t>((hi - lo) * g.in_c));
        }
      }
  }
}

// Scatter-add of col-space gradients back onto the input.
template <typename S>
void col2im_add(const S* col, const ConvGeometry& g, int kh, int kw, S* dx) {
  const std::int64_t patch = static_cast<std::int64_t>(kh) * kw * g.in_c;
  const std::int64_t row_len = kw * g.in_c;
  for (std::int64_t b = 0; b < g.batch; ++b) {
    S* xb = dx + b * g.in_h * g.in_w * g.in_c;
    for (std::int64_t oh = 0; oh < g.out_h; ++oh)
      for (std::int64_t ow = 0; ow < g.out_w; ++ow) {
        const S* src = col + ((b * g.out_h + oh) * g.out_w + ow) * patch;
        for (int r = 0; r < kh; ++r) {
          const std::int64_t ih = oh - g.pad_top + r;
          if (ih < 0 || ih >= g.in_h) continue;
          const S* srow = src + static_cast<std::int64_t>(r) * row_len;
          const std::int64_t iw0 = ow - g.pad_left;
          std::int64_t lo = std::max<std::int64_t>(0, -iw0);
          std::int64_t hi = std::min<std::int64_t>(kw, g.in_w - iw0);
          S* drow = xb + (ih * g.in_w + iw0) * g.in_c;
          for (std::int64_t i = lo * g.in_c; i < hi * g.in_c; ++i) drow[i] += srow[i];
        }
      }
  }
}

}  // namespace detail

// 2-D cross-correlation, stride 1. Input [H,W,C] or [B,H,W,C], channels last.
template <typename S>
Tensor<S> conv2d(const Tensor<S>& x, const ConvSpec<S>& spec) {
  spec.validate();
  auto g = detail::conv_geometry(x, spec);
  const int kh = spec.kernel_h, kw = spec.kernel_w;
  const std::int64_t M = spec.num_filters;
  const std::int64_t R = g.batch * g.out_h * g.out_w;
  const std::int64_t K = static_cast<std::int64_t>(kh) * kw * g.in_c;

  auto col = std::make_shared<std::vector<S>>(static_cast<std::size_t>(R * K));
  detail::im2col(x.data(), g, kh, kw, col->data());

  std::vector<S> out(static_cast<std::size_t>(R * M));
  {
    Eigen::Map<MatrixRM<S>> out_m(out.data(), R, M);
    out_m.noalias() = Eigen::Map<const MatrixRM<S>>(col->data(), R, K) *
                      spec.weights.mat(M, K).transpose();
    out_m.rowwise() += spec.bias.mat(1, M).row(0);
  }

  Shape out_shape = g.batched
                        ? Shape{static_cast<int>(g.batch), static_cast<int>(g.out_h),
                                static_cast<int>(g.out_w), static_cast<int>(M)}
                        : Shape{static_cast<int>(g.out_h), static_cast<int>(g.out_w),
                                static_cast<int>(M)};

  auto xn = x.node();
  auto wn = spec.weights.node();
  auto bn = spec.bias.node();
  return detail::make_op<S>(
      "conv2d", std::move(out_shape), std::move(out), {xn, wn, bn},
      [xn, wn, bn, col, g, kh, kw, M, R, K](TensorNode<S>& self) {
        Eigen::Map<MatrixRM<S>> dout(self.grad.data(), R, M);
        if (bn->requires_grad) {
          bn->ensure_grad();
          Eigen::Map<MatrixRM<S>>(bn->grad.data(), 1, M) += dout.colwise().sum();
        }
        if (wn->requires_grad) {
          wn->ensure_grad();
          Eigen::Map<MatrixRM<S>>(wn->grad.data(), M, K).noalias() +=
              dout.transpose() * Eigen::Map<const MatrixRM<S>>(col->data(), R, K);
        }
        if (xn->requires_grad) {
          xn->ensure_grad();
          std::vector<S> dcol(static_cast<std::size_t>(R * K));
          Eigen::Map<MatrixRM<S>>(dcol.data(), R, K).noalias() =
              dout * Eigen::Map<const MatrixRM<S>>(wn->values.data(), M, K);
          detail::col2im_add(dcol.data(), g, kh, kw, xn->grad.data());
        }
      });
}

// 1-D convolution along the length axis: input [N,1,P] or [B,N,1,P], kernel
// Q x 1, same padding with floor(Q/2) zeros each side.
template <typename S>
Tensor<S> conv1d(const Tensor<S>& x, const ConvSpec<S>& spec) {
  if (spec.kernel_w != 1)
    throw ShapeError("conv1d: kernel must be Qx1, got " + std::to_string(spec.kernel_h) + "x" +
                     std::to_string(spec.kernel_w));
  if (spec.padding != Padding::Same) throw ShapeError("conv1d: same padding required");
  const int w_axis = x.rank() == 4 ? 2 : 1;
  if (x.rank() < 3 || x.dim(w_axis) != 1)
    throw ShapeError("conv1d: input must be [N,1,P], got " + shape_str(x.shape()));
  return conv2d(x, spec);
}

}  // namespace sidnet
