#pragma once

#include "sidnet/ops.hpp"

namespace sidnet {

namespace detail {

struct PoolGeometry {
  std::int64_t batch, in_h, in_w, ch;
  std::int64_t out_h, out_w;
  bool batched;
};

template <typename S>
PoolGeometry pool_geometry(const Tensor<S>& x) {
  PoolGeometry g{};
  if (x.rank() == 4) {
    g.batched = true;
    g.batch = x.dim(0);
    g.in_h = x.dim(1);
    g.in_w = x.dim(2);
    g.ch = x.dim(3);
  } else if (x.rank() == 3) {
    g.batched = false;
    g.batch = 1;
    g.in_h = x.dim(0);
    g.in_w = x.dim(1);
    g.ch = x.dim(2);
  } else {
    throw ShapeError("pool: input rank " + std::to_string(x.rank()));
  }
  return g;
}

}  // namespace detail

// Max pooling with stride equal to the window. Odd extents are padded with
// the lowest representable value so a padded cell never wins. Ties resolve to
// the first position in row-major scan order; backward routes the gradient to
// that single argmax per window.
template <typename S>
Tensor<S> maxpool(const Tensor<S>& x, int wh, int ww) {
  if (wh <= 0 || ww <= 0) throw ShapeError("maxpool: bad window");
  auto g = detail::pool_geometry(x);
  g.out_h = (g.in_h + wh - 1) / wh;
  g.out_w = (g.in_w + ww - 1) / ww;
  const std::int64_t out_n = g.batch * g.out_h * g.out_w * g.ch;

  std::vector<S> out(static_cast<std::size_t>(out_n));
  auto argmax = std::make_shared<std::vector<std::int64_t>>(static_cast<std::size_t>(out_n));
  const bool meter = diag::KinkMeter::enabled();
  const S* px = x.data();
  for (std::int64_t b = 0; b < g.batch; ++b)
    for (std::int64_t oh = 0; oh < g.out_h; ++oh)
      for (std::int64_t ow = 0; ow < g.out_w; ++ow)
        for (std::int64_t c = 0; c < g.ch; ++c) {
          S best = std::numeric_limits<S>::lowest();
          S second = std::numeric_limits<S>::lowest();
          std::int64_t best_idx = -1;
          for (int r = 0; r < wh; ++r) {
            std::int64_t ih = oh * wh + r;
            if (ih >= g.in_h) break;
            for (int q = 0; q < ww; ++q) {
              std::int64_t iw = ow * ww + q;
              if (iw >= g.in_w) break;
              std::int64_t idx = ((b * g.in_h + ih) * g.in_w + iw) * g.ch + c;
              S v = px[idx];
              if (v > best) {
                second = best;
                best = v;
                best_idx = idx;
              } else if (v > second) {
                second = v;
              }
            }
          }
          std::int64_t o = ((b * g.out_h + oh) * g.out_w + ow) * g.ch + c;
          out[static_cast<std::size_t>(o)] = best;
          (*argmax)[static_cast<std::size_t>(o)] = best_idx;
          if (meter && second > std::numeric_limits<S>::lowest())
            diag::KinkMeter::min_pool_gap() =
                std::min(diag::KinkMeter::min_pool_gap(), static_cast<double>(best - second));
        }

  Shape out_shape = g.batched ? Shape{static_cast<int>(g.batch), static_cast<int>(g.out_h),
                                      static_cast<int>(g.out_w), static_cast<int>(g.ch)}
                              : Shape{static_cast<int>(g.out_h), static_cast<int>(g.out_w),
                                      static_cast<int>(g.ch)};
  auto xn = x.node();
  return detail::make_op<S>("maxpool", std::move(out_shape), std::move(out), {xn},
                            [xn, argmax](TensorNode<S>& self) {
                              xn->ensure_grad();
                              for (std::int64_t o = 0; o < self.size(); ++o)
                                xn->grad[(*argmax)[static_cast<std::size_t>(o)]] += self.grad[o];
                            });
}

// Per-channel maximum over all spatial positions. [H,W,C] -> [1,C];
// [B,H,W,C] -> [B,C]. For batched inputs an optional per-sample length limits
// the scan along length_axis (1 for padded time sequences, 2 for padded
// widths).
template <typename S>
Tensor<S> global_maxpool(const Tensor<S>& x, const std::vector<int>& lengths = {},
                         int length_axis = 1) {
  auto g = detail::pool_geometry(x);
  if (g.in_h <= 0 || g.in_w <= 0) throw ShapeError("global_maxpool: empty spatial extent");
  if (!lengths.empty() && static_cast<std::int64_t>(lengths.size()) != g.batch)
    throw ShapeError("global_maxpool: lengths size mismatch");
  if (length_axis != 1 && length_axis != 2)
    throw ShapeError("global_maxpool: length axis must be 1 or 2");

  const std::int64_t out_n = g.batch * g.ch;
  std::vector<S> out(static_cast<std::size_t>(out_n), std::numeric_limits<S>::lowest());
  std::vector<S> second(diag::KinkMeter::enabled() ? static_cast<std::size_t>(out_n) : 0,
                        std::numeric_limits<S>::lowest());
  auto argmax = std::make_shared<std::vector<std::int64_t>>(static_cast<std::size_t>(out_n), -1);
  const S* px = x.data();
  for (std::int64_t b = 0; b < g.batch; ++b) {
    std::int64_t h_lim = g.in_h, w_lim = g.in_w;
    if (!lengths.empty()) {
      std::int64_t& lim = length_axis == 1 ? h_lim : w_lim;
      const std::int64_t extent = length_axis == 1 ? g.in_h : g.in_w;
      lim = lengths[static_cast<std::size_t>(b)];
      if (lim <= 0 || lim > extent)
        throw InputError("global_maxpool: true length " + std::to_string(lim) +
                         " outside [1," + std::to_string(extent) + "]");
    }
    for (std::int64_t ih = 0; ih < h_lim; ++ih)
      for (std::int64_t iw = 0; iw < w_lim; ++iw)
        for (std::int64_t c = 0; c < g.ch; ++c) {
          std::int64_t idx = ((b * g.in_h + ih) * g.in_w + iw) * g.ch + c;
          std::int64_t o = b * g.ch + c;
          if (px[idx] > out[static_cast<std::size_t>(o)]) {
            if (!second.empty()) second[static_cast<std::size_t>(o)] = out[static_cast<std::size_t>(o)];
            out[static_cast<std::size_t>(o)] = px[idx];
            (*argmax)[static_cast<std::size_t>(o)] = idx;
          } else if (!second.empty() && px[idx] > second[static_cast<std::size_t>(o)]) {
            second[static_cast<std::size_t>(o)] = px[idx];
          }
        }
  }
  if (!second.empty())
    for (std::int64_t o = 0; o < out_n; ++o)
      if (second[static_cast<std::size_t>(o)] > std::numeric_limits<S>::lowest())
        diag::KinkMeter::min_pool_gap() =
            std::min(diag::KinkMeter::min_pool_gap(),
                     static_cast<double>(out[static_cast<std::size_t>(o)] -
                                         second[static_cast<std::size_t>(o)]));

  Shape out_shape = g.batched ? Shape{static_cast<int>(g.batch), static_cast<int>(g.ch)}
                              : Shape{1, static_cast<int>(g.ch)};
  auto xn = x.node();
  return detail::make_op<S>("global_maxpool", std::move(out_shape), std::move(out), {xn},
                            [xn, argmax](TensorNode<S>& self) {
                              xn->ensure_grad();
                              for (std::int64_t o = 0; o < self.size(); ++o)
                                xn->grad[(*argmax)[static_cast<std::size_t>(o)]] += self.grad[o];
                            });
}

// Append the global feature vector to every spatial position:
// x [H,W,C] + g [1,C] -> [H,W,2C] (and the batched analogue with g [B,C]).
// The gradient of g accumulates over all positions.
template <typename S>
Tensor<S> broadcast_concat_global(const Tensor<S>& x, const Tensor<S>& gfeat) {
  auto g = detail::pool_geometry(x);
  if (gfeat.rank() != 2 || gfeat.dim(1) != g.ch || gfeat.dim(0) != (g.batched ? g.batch : 1))
    throw ShapeError("broadcast_concat_global: feature map " + shape_str(x.shape()) +
                     " vs global " + shape_str(gfeat.shape()));
  const std::int64_t positions = g.in_h * g.in_w;
  std::vector<S> out(static_cast<std::size_t>(g.batch * positions * 2 * g.ch));
  const S* px = x.data();
  const S* pg = gfeat.data();
  for (std::int64_t b = 0; b < g.batch; ++b)
    for (std::int64_t p = 0; p < positions; ++p) {
      S* dst = out.data() + (b * positions + p) * 2 * g.ch;
      std::memcpy(dst, px + (b * positions + p) * g.ch,
                  sizeof(S) * static_cast<std::size_t>(g.ch));
      std::memcpy(dst + g.ch, pg + b * g.ch, sizeof(S) * static_cast<std::size_t>(g.ch));
    }

  Shape out_shape = g.batched ? Shape{static_cast<int>(g.batch), static_cast<int>(g.in_h),
                                      static_cast<int>(g.in_w), static_cast<int>(2 * g.ch)}
                              : Shape{static_cast<int>(g.in_h), static_cast<int>(g.in_w),
                                      static_cast<int>(2 * g.ch)};
  auto xn = x.node();
  auto gn = gfeat.node();
  const std::int64_t ch = g.ch, batch = g.batch;
  return detail::make_op<S>(
      "broadcast_concat_global", std::move(out_shape), std::move(out), {xn, gn},
      [xn, gn, positions, ch, batch](TensorNode<S>& self) {
        if (xn->requires_grad) xn->ensure_grad();
        if (gn->requires_grad) gn->ensure_grad();
        for (std::int64_t b = 0; b < batch; ++b)
          for (std::int64_t p = 0; p < positions; ++p) {
            const S* src = self.grad.data() + (b * positions + p) * 2 * ch;
            if (xn->requires_grad) {
              S* dx = xn->grad.data() + (b * positions + p) * ch;
              for (std::int64_t c = 0; c < ch; ++c) dx[c] += src[c];
            }
            if (gn->requires_grad) {
              S* dg = gn->grad.data() + b * ch;
              for (std::int64_t c = 0; c < ch; ++c) dg[c] += src[ch + c];
            }
          }
      });
}

// Reinterpret a feature map as a left-to-right sequence of column vectors:
// [H,W,C] -> [W, H*C] with each column read top-to-bottom, channels within a
// row kept contiguous. A [T,1,C] map (the online stream orientation) is read
// as T steps of C features. Batched inputs gain a leading B axis.
template <typename S>
Tensor<S> map_to_sequence(const Tensor<S>& x) {
  auto g = detail::pool_geometry(x);
  const bool along_h = g.in_w == 1 && g.in_h > 1;
  const std::int64_t T = along_h ? g.in_h : g.in_w;
  const std::int64_t dim = along_h ? g.ch : g.in_h * g.ch;
  // Both orientations are plain relayouts; along_h is already contiguous.
  std::vector<S> out(static_cast<std::size_t>(g.batch * T * dim));
  const S* px = x.data();
  if (along_h) {
    std::memcpy(out.data(), px, sizeof(S) * out.size());
  } else {
    for (std::int64_t b = 0; b < g.batch; ++b)
      for (std::int64_t h = 0; h < g.in_h; ++h)
        for (std::int64_t w = 0; w < g.in_w; ++w)
          std::memcpy(out.data() + ((b * T + w) * dim) + h * g.ch,
                      px + ((b * g.in_h + h) * g.in_w + w) * g.ch,
                      sizeof(S) * static_cast<std::size_t>(g.ch));
  }

  Shape out_shape = g.batched
                        ? Shape{static_cast<int>(g.batch), static_cast<int>(T),
                                static_cast<int>(dim)}
                        : Shape{static_cast<int>(T), static_cast<int>(dim)};
  auto xn = x.node();
  const std::int64_t H = g.in_h, W = g.in_w, C = g.ch, B = g.batch;
  return detail::make_op<S>(
      "map_to_sequence", std::move(out_shape), std::move(out), {xn},
      [xn, B, H, W, C, along_h](TensorNode<S>& self) {
        xn->ensure_grad();
        if (along_h) {
          for (std::int64_t i = 0; i < self.size(); ++i) xn->grad[i] += self.grad[i];
          return;
        }
        const std::int64_t dim = H * C;
        for (std::int64_t b = 0; b < B; ++b)
          for (std::int64_t h = 0; h < H; ++h)
            for (std::int64_t w = 0; w < W; ++w) {
              const S* src = self.grad.data() + (b * W + w) * dim + h * C;
              S* dst = xn->grad.data() + ((b * H + h) * W + w) * C;
              for (std::int64_t c = 0; c < C; ++c) dst[c] += src[c];
            }
      });
}

}  // namespace sidnet
