#pragma once

#include "sidnet/ops.hpp"

namespace sidnet {

// Which modality a sample originally arrived in. The 2-bit condition vector Z
// is [1,0] for originally-online data and [0,1] for originally-offline data.
enum class Origin { Online, Offline };

inline Origin flip(Origin o) { return o == Origin::Online ? Origin::Offline : Origin::Online; }

inline const char* origin_name(Origin o) { return o == Origin::Online ? "online" : "offline"; }

template <typename S>
std::vector<S> origin_bits(Origin o) {
  return o == Origin::Online ? std::vector<S>{S(1), S(0)} : std::vector<S>{S(0), S(1)};
}

// Z rows for a batch of origins, as a constant [B x 2] tensor.
template <typename S>
Tensor<S> origin_tensor(const std::vector<Origin>& origins) {
  std::vector<S> z;
  z.reserve(origins.size() * 2);
  for (Origin o : origins) {
    auto bits = origin_bits<S>(o);
    z.insert(z.end(), bits.begin(), bits.end());
  }
  return Tensor<S>({static_cast<int>(origins.size()), 2}, std::move(z));
}

enum class FusionKind { Conditional, Sum, Concat, Product };

inline const char* fusion_name(FusionKind k) {
  switch (k) {
    case FusionKind::Conditional: return "conditional";
    case FusionKind::Sum: return "sum";
    case FusionKind::Concat: return "concat";
    case FusionKind::Product: return "product";
  }
  return "?";
}

// Gate and classification head. The gate dense layer carries a bias
// (zero-initialized, so the untrained gate is the symmetric 0.5/0.5 mixer).
// The head input width depends on the fusion kind: 2K for concat, K otherwise.
template <typename S>
struct FusionParams {
  FusionKind kind = FusionKind::Conditional;
  int k = 0;
  int classes = 0;
  Tensor<S> gate_w;  // [2K+2 x K], conditional only
  Tensor<S> gate_b;  // [K]
  Tensor<S> head_w;  // [head_in x classes]
  Tensor<S> head_b;  // [classes]

  static FusionParams make(int k, int classes, FusionKind kind = FusionKind::Conditional) {
    FusionParams p;
    p.kind = kind;
    p.k = k;
    p.classes = classes;
    if (kind == FusionKind::Conditional) {
      p.gate_w = Tensor<S>::param_zeros({2 * k + 2, k});
      p.gate_b = Tensor<S>::param_zeros({k});
    }
    p.head_w = Tensor<S>::param_zeros({p.head_input(), classes});
    p.head_b = Tensor<S>::param_zeros({classes});
    return p;
  }

  int head_input() const { return kind == FusionKind::Concat ? 2 * k : k; }
};

// Intermediate values of the conditional fusion, exposed for verification.
template <typename S>
struct FusionTrace {
  Tensor<S> f_concat;   // [B x 2K]
  Tensor<S> f_cond;     // [B x 2K+2]
  Tensor<S> f_fc;       // [B x K]
  Tensor<S> p_offline;  // [B x K]
  Tensor<S> p_online;   // [B x K]
  Tensor<S> f_final;    // [B x K]
};

// Conditional gated fusion:
//   F_concat = [F_online || F_offline], F_cond = [F_concat || Z]
//   P_offline = sigmoid(dense(F_cond)), P_online = 1 - P_offline
//   F_final = F_offline . P_offline + F_online . P_online
template <typename S>
Tensor<S> conditional_fuse(const Tensor<S>& f_online, const Tensor<S>& f_offline,
                           const Tensor<S>& z, const FusionParams<S>& p,
                           FusionTrace<S>* trace = nullptr) {
  if (f_online.rank() != 2 || f_offline.rank() != 2 || f_online.dim(1) != p.k ||
      f_offline.dim(1) != p.k || f_online.dim(0) != f_offline.dim(0))
    throw ShapeError("conditional_fuse: features " + shape_str(f_online.shape()) + " / " +
                     shape_str(f_offline.shape()) + " vs K=" + std::to_string(p.k));
  if (z.rank() != 2 || z.dim(0) != f_online.dim(0) || z.dim(1) != 2)
    throw ShapeError("conditional_fuse: condition " + shape_str(z.shape()));
  Tensor<S> f_concat = concat<S>({f_online, f_offline}, 1);
  Tensor<S> f_cond = concat<S>({f_concat, z}, 1);
  Tensor<S> f_fc = dense(f_cond, p.gate_w, p.gate_b);
  Tensor<S> p_offline = sigmoid(f_fc);
  Tensor<S> p_online = scale_shift(p_offline, S(-1), S(1));
  Tensor<S> f_final = add(mul(f_offline, p_offline), mul(f_online, p_online));
  if (trace) *trace = {f_concat, f_cond, f_fc, p_offline, p_online, f_final};
  return f_final;
}

// Table-4-style baseline operators.
template <typename S>
Tensor<S> baseline_fuse(const Tensor<S>& f_online, const Tensor<S>& f_offline, FusionKind kind) {
  if (f_online.shape() != f_offline.shape())
    throw ShapeError("baseline_fuse: " + shape_str(f_online.shape()) + " vs " +
                     shape_str(f_offline.shape()));
  switch (kind) {
    case FusionKind::Sum: return add(f_online, f_offline);
    case FusionKind::Product: return mul(f_online, f_offline);
    case FusionKind::Concat: return concat<S>({f_online, f_offline}, 1);
    case FusionKind::Conditional: break;
  }
  throw InputError("baseline_fuse: conditional is not a baseline operator");
}

// Final dense layer to one logit per script class; softmax is applied only
// inside the loss or at prediction time.
template <typename S>
Tensor<S> classify_head(const Tensor<S>& f, const FusionParams<S>& p) {
  if (f.rank() != 2 || f.dim(1) != p.head_input())
    throw ShapeError("classify_head: input " + shape_str(f.shape()) + " vs head width " +
                     std::to_string(p.head_input()));
  return dense(f, p.head_w, p.head_b);
}

// Fuse according to the configured kind and classify.
template <typename S>
Tensor<S> fuse_and_classify(const Tensor<S>& f_online, const Tensor<S>& f_offline,
                            const Tensor<S>& z, const FusionParams<S>& p,
                            FusionTrace<S>* trace = nullptr) {
  Tensor<S> fused = p.kind == FusionKind::Conditional
                        ? conditional_fuse(f_online, f_offline, z, p, trace)
                        : baseline_fuse(f_online, f_offline, p.kind);
  return classify_head(fused, p);
}

}  // namespace sidnet
