#pragma once

#include <array>

#include "sidnet/batchnorm.hpp"
#include "sidnet/conv.hpp"
#include "sidnet/pool.hpp"

namespace sidnet {

// Feature sequence handed to the recurrent module: data [T x dim] (or
// [B x T x dim]) with per-sample true lengths covering the non-padded prefix.
template <typename S>
struct FeatureSequence {
  Tensor<S> data;
  std::vector<int> true_length;
};

// Online stream: six 5x1 convolutions (32/64/128/256/256/512 filters by
// default), one 2x1 maxpool after conv2, batchnorm after conv2 and conv4,
// global maxpool concatenated back onto every position before conv6.
template <typename S>
struct OnlineStreamParams {
  std::array<ConvSpec<S>, 6> conv;
  BatchNormState<S> bn2, bn4;
  std::array<int, 6> channels{};

  static OnlineStreamParams make(std::array<int, 6> ch = {32, 64, 128, 256, 256, 512}) {
    OnlineStreamParams p;
    p.channels = ch;
    int in = 2;
    for (int i = 0; i < 6; ++i) {
      // conv6 sees conv5's output concatenated with the global feature.
      int cin = (i == 5) ? 2 * ch[4] : in;
      p.conv[static_cast<std::size_t>(i)] = ConvSpec<S>::make(ch[static_cast<std::size_t>(i)], 5, 1, cin);
      in = ch[static_cast<std::size_t>(i)];
    }
    p.bn2 = BatchNormState<S>(ch[1]);
    p.bn4 = BatchNormState<S>(ch[3]);
    return p;
  }

  int feature_dim() const { return channels[5]; }
};

// Offline stream: seven convolutions (64/128/256/256/512/512/512 by default),
// 2x2 kernels, pools after conv1 (2x2), conv2 (2x2), conv4 (2x1), conv6 (2x1),
// batchnorm after conv3 and conv5. conv7 runs valid so the height-2 map
// collapses to single-pixel columns: a 32 x W input yields T' = W/4 - 1.
template <typename S>
struct OfflineStreamParams {
  std::array<ConvSpec<S>, 7> conv;
  BatchNormState<S> bn3, bn5;
  std::array<int, 7> channels{};

  static OfflineStreamParams make(std::array<int, 7> ch = {64, 128, 256, 256, 512, 512, 512}) {
    OfflineStreamParams p;
    p.channels = ch;
    int in = 1;
    for (int i = 0; i < 7; ++i) {
      int cin = (i == 6) ? 2 * ch[5] : in;
      Padding pad = (i == 6) ? Padding::Valid : Padding::Same;
      p.conv[static_cast<std::size_t>(i)] = ConvSpec<S>::make(ch[static_cast<std::size_t>(i)], 2, 2, cin, pad);
      in = ch[static_cast<std::size_t>(i)];
    }
    p.bn3 = BatchNormState<S>(ch[2]);
    p.bn5 = BatchNormState<S>(ch[4]);
    return p;
  }

  int feature_dim() const { return channels[6]; }
};

// d: [N,1,2] or [B,N,1,2] (padded to the batch maximum by repeating the last
// point); lengths carry each sample's true N. Output T = ceil(N_max/2) with
// true_length floor(N/2) per sample.
template <typename S>
FeatureSequence<S> online_stream_forward(const Tensor<S>& d, OnlineStreamParams<S>& p,
                                         Mode mode, std::vector<int> lengths = {}) {
  const bool batched = d.rank() == 4;
  if (!batched && d.rank() != 3)
    throw ShapeError("online_stream_forward: input " + shape_str(d.shape()));
  const int B = batched ? d.dim(0) : 1;
  const int N = batched ? d.dim(1) : d.dim(0);
  if (lengths.empty()) lengths.assign(static_cast<std::size_t>(B), N);
  if (static_cast<int>(lengths.size()) != B)
    throw ShapeError("online_stream_forward: lengths size mismatch");
  for (int l : lengths)
    if (l < 4) throw InputError("online_stream_forward: sequence length " + std::to_string(l) +
                                " < 4");

  Tensor<S> x = relu(conv1d(d, p.conv[0]));
  x = relu(batchnorm(conv1d(x, p.conv[1]), p.bn2, mode));
  x = maxpool(x, 2, 1);
  std::vector<int> half(lengths.size());
  for (std::size_t i = 0; i < lengths.size(); ++i) half[i] = lengths[i] / 2;
  x = relu(conv1d(x, p.conv[2]));
  x = relu(batchnorm(conv1d(x, p.conv[3]), p.bn4, mode));
  x = relu(conv1d(x, p.conv[4]));
  Tensor<S> g = global_maxpool(x, batched ? half : std::vector<int>{});
  if (!batched && g.dim(0) != 1) throw ShapeError("online_stream_forward: global feature");
  x = broadcast_concat_global(x, g);
  x = relu(conv1d(x, p.conv[5]));
  FeatureSequence<S> out;
  out.data = map_to_sequence(x);
  out.true_length = std::move(half);
  return out;
}

// img: [32,W,1] or [B,32,W,1] with ink = 1. Width must be at least 8 and is
// padded on the right with background to a multiple of 4. width_true carries
// each sample's unpadded width when the batch mixes widths.
template <typename S>
FeatureSequence<S> offline_stream_forward(const Tensor<S>& img, OfflineStreamParams<S>& p,
                                          Mode mode, std::vector<int> width_true = {}) {
  const bool batched = img.rank() == 4;
  if (!batched && img.rank() != 3)
    throw ShapeError("offline_stream_forward: input " + shape_str(img.shape()));
  const int B = batched ? img.dim(0) : 1;
  const int H = batched ? img.dim(1) : img.dim(0);
  const int W = batched ? img.dim(2) : img.dim(1);
  const int C = batched ? img.dim(3) : img.dim(2);
  if (H != 32 || C != 1)
    throw ShapeError("offline_stream_forward: expected height 32, 1 channel, got " +
                     shape_str(img.shape()));
  if (width_true.empty()) width_true.assign(static_cast<std::size_t>(B), W);
  if (static_cast<int>(width_true.size()) != B)
    throw ShapeError("offline_stream_forward: width list size mismatch");
  for (int w : width_true)
    if (w < 8) throw InputError("offline_stream_forward: width " + std::to_string(w) + " < 8");

  Tensor<S> x = img;
  if (W % 4 != 0) {
    const int wpad = (4 - W % 4) % 4;
    Tensor<S> pad = Tensor<S>::zeros(batched ? Shape{B, H, wpad, C} : Shape{H, wpad, C});
    x = concat<S>({x, pad}, batched ? 2 : 1);
  }

  x = maxpool(relu(conv2d(x, p.conv[0])), 2, 2);
  x = maxpool(relu(conv2d(x, p.conv[1])), 2, 2);
  x = relu(batchnorm(conv2d(x, p.conv[2]), p.bn3, mode));
  x = maxpool(relu(conv2d(x, p.conv[3])), 2, 1);
  x = relu(batchnorm(conv2d(x, p.conv[4]), p.bn5, mode));
  x = maxpool(relu(conv2d(x, p.conv[5])), 2, 1);
  bool uniform = true;
  for (int w : width_true) uniform = uniform && w == W;
  std::vector<int> quarter;
  if (batched && !uniform) {
    quarter.resize(width_true.size());
    for (std::size_t i = 0; i < width_true.size(); ++i)
      quarter[i] = (width_true[i] + 3) / 4;
  }
  Tensor<S> g = global_maxpool(x, quarter, 2);
  x = broadcast_concat_global(x, g);
  x = relu(conv2d(x, p.conv[6]));
  FeatureSequence<S> out;
  out.data = map_to_sequence(x);
  out.true_length.resize(static_cast<std::size_t>(B));
  for (int b = 0; b < B; ++b) {
    int w = width_true[static_cast<std::size_t>(b)];
    out.true_length[static_cast<std::size_t>(b)] = (w + 3) / 4 - 1;
  }
  return out;
}

}  // namespace sidnet
