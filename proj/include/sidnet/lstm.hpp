#pragma once

#include <array>

#include "sidnet/ops.hpp"

namespace sidnet {

// Standard three-gate LSTM, no peepholes. Gate ordering inside the 4H
// preactivation block is fixed as (input i, forget f, cell candidate g,
// output o).
template <typename S>
struct LstmLayerParams {
  Tensor<S> wx;  // [I x 4H]
  Tensor<S> wh;  // [H x 4H]
  Tensor<S> b;   // [4H]
  int input_size = 0;
  int hidden = 0;

  static LstmLayerParams make(int input, int hidden) {
    LstmLayerParams p;
    p.input_size = input;
    p.hidden = hidden;
    p.wx = Tensor<S>::param_zeros({input, 4 * hidden});
    p.wh = Tensor<S>::param_zeros({hidden, 4 * hidden});
    p.b = Tensor<S>::param_zeros({4 * hidden});
    return p;
  }
};

template <typename S>
struct LstmParams {
  std::array<LstmLayerParams<S>, 2> layers;
  int hidden = 0;

  static LstmParams make(int input, int hidden) {
    LstmParams p;
    p.hidden = hidden;
    p.layers[0] = LstmLayerParams<S>::make(input, hidden);
    p.layers[1] = LstmLayerParams<S>::make(hidden, hidden);
    return p;
  }
};

template <typename S>
struct LstmState {
  Tensor<S> h;  // [B x H]
  Tensor<S> c;  // [B x H]

  static LstmState zero(int batch, int hidden) {
    return {Tensor<S>::zeros({batch, hidden}), Tensor<S>::zeros({batch, hidden})};
  }
};

// i,f,o = sigmoid(affine), g = tanh(affine); c' = f.c + i.g; h' = o.tanh(c').
template <typename S>
LstmState<S> lstm_cell_step(const Tensor<S>& x_t, const LstmState<S>& prev,
                            const LstmLayerParams<S>& p) {
  if (x_t.rank() != 2 || x_t.dim(1) != p.input_size)
    throw ShapeError("lstm_cell_step: input " + shape_str(x_t.shape()) + " vs declared I=" +
                     std::to_string(p.input_size));
  if (prev.h.dim(1) != p.hidden || prev.c.dim(1) != p.hidden ||
      prev.h.dim(0) != x_t.dim(0) || prev.c.dim(0) != x_t.dim(0))
    throw ShapeError("lstm_cell_step: state shape mismatch");
  const int H = p.hidden;
  Tensor<S> pre = add(add(matmul(x_t, p.wx), matmul(prev.h, p.wh)), p.b);
  Tensor<S> i = sigmoid(slice(pre, 1, 0, H));
  Tensor<S> f = sigmoid(slice(pre, 1, H, H));
  Tensor<S> g = tanh_op(slice(pre, 1, 2 * H, H));
  Tensor<S> o = sigmoid(slice(pre, 1, 3 * H, H));
  Tensor<S> c = add(mul(f, prev.c), mul(i, g));
  Tensor<S> h = mul(o, tanh_op(c));
  return {h, c};
}

// Two stacked layers over seq [T x I] (layer-2 input is layer-1's h outputs);
// runs exactly true_length steps from zero state and returns the top layer's
// cell state, so padding beyond true_length can never influence the result.
template <typename S>
Tensor<S> lstm_sequence_last_state(const Tensor<S>& seq, const LstmParams<S>& params,
                                   int true_length) {
  if (seq.rank() != 2) throw ShapeError("lstm_sequence_last_state: expected [T x I]");
  if (true_length < 1 || true_length > seq.dim(0))
    throw InputError("lstm_sequence_last_state: true_length " + std::to_string(true_length) +
                     " outside [1," + std::to_string(seq.dim(0)) + "]");
  LstmState<S> s0 = LstmState<S>::zero(1, params.hidden);
  LstmState<S> s1 = LstmState<S>::zero(1, params.hidden);
  for (int t = 0; t < true_length; ++t) {
    Tensor<S> x_t = reshape(slice(seq, 0, t, 1), {1, seq.dim(1)});
    s0 = lstm_cell_step(x_t, s0, params.layers[0]);
    s1 = lstm_cell_step(s0.h, s1, params.layers[1]);
  }
  return s1.c;
}

// Batched variant over seq [B x T x I] with per-sample true lengths; gathers
// each sample's top-layer cell state at its own final step via 0/1 masks so
// the whole batch stays one graph.
template <typename S>
Tensor<S> lstm_sequence_last_state(const Tensor<S>& seq, const LstmParams<S>& params,
                                   const std::vector<int>& lengths) {
  if (seq.rank() != 3) throw ShapeError("lstm_sequence_last_state: expected [B x T x I]");
  const int B = seq.dim(0), T = seq.dim(1), I = seq.dim(2);
  if (static_cast<int>(lengths.size()) != B)
    throw ShapeError("lstm_sequence_last_state: lengths size mismatch");
  int t_max = 0;
  for (int l : lengths) {
    if (l < 1 || l > T)
      throw InputError("lstm_sequence_last_state: true_length " + std::to_string(l) +
                       " outside [1," + std::to_string(T) + "]");
    t_max = std::max(t_max, l);
  }
  LstmState<S> s0 = LstmState<S>::zero(B, params.hidden);
  LstmState<S> s1 = LstmState<S>::zero(B, params.hidden);
  Tensor<S> gathered;
  for (int t = 0; t < t_max; ++t) {
    Tensor<S> x_t = reshape(slice(seq, 1, t, 1), {B, I});
    s0 = lstm_cell_step(x_t, s0, params.layers[0]);
    s1 = lstm_cell_step(s0.h, s1, params.layers[1]);
    bool any = false;
    std::vector<S> mask(static_cast<std::size_t>(B), S(0));
    for (int b = 0; b < B; ++b)
      if (lengths[static_cast<std::size_t>(b)] == t + 1) {
        mask[static_cast<std::size_t>(b)] = S(1);
        any = true;
      }
    if (any) {
      Tensor<S> m({B, 1}, std::move(mask));
      Tensor<S> picked = mul(s1.c, m);
      gathered = gathered.defined() ? add(gathered, picked) : picked;
    }
  }
  return gathered;
}

}  // namespace sidnet
