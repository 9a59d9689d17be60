#include "sidnet/gradsuite.hpp"

#include <functional>
#include <random>

#include "sidnet/batchnorm.hpp"
#include "sidnet/conv.hpp"
#include "sidnet/dataio.hpp"
#include "sidnet/fusion.hpp"
#include "sidnet/lstm.hpp"
#include "sidnet/pool.hpp"
#include "sidnet/streams.hpp"

namespace sidnet {

namespace {

using T = Tensor<double>;
using Params = std::vector<std::pair<std::string, T>>;

struct Ctx {
  const GradSuiteOptions& opt;
  std::vector<GradSuiteResult>& results;
};

std::vector<double> draw(std::mt19937_64& rng, std::size_t n, double lo = -1.0, double hi = 1.0) {
  std::vector<double> v(n);
  for (auto& x : v)
    x = lo + (hi - lo) * (static_cast<double>(rng() >> 11) * 0x1.0p-53);
  return v;
}

// Draw away from zero so ReLU inputs keep a finite-difference-safe margin.
std::vector<double> draw_margin(std::mt19937_64& rng, std::size_t n, double margin = 0.1) {
  auto v = draw(rng, n);
  for (auto& x : v) x += x >= 0 ? margin : -margin;
  return v;
}

// One operator suite: `build` returns (params, loss closure) for a trial
// seed; instances whose ReLU margins or pooling gaps are finite-difference
// unsafe are redrawn deterministically. Deep composed paths amplify the FD
// step, so they demand a wider margin.
void run_suite(Ctx& ctx, const std::string& name,
               const std::function<std::pair<Params, std::function<T()>>(std::uint64_t)>& build,
               bool kinky = false, double margin = 5e-3) {
  GradSuiteResult res;
  res.name = name;
  for (int trial = 0; trial < ctx.opt.trials; ++trial) {
    std::pair<Params, std::function<T()>> inst;
    bool safe = false;
    for (int attempt = 0; attempt < 256 && !safe; ++attempt) {
      inst = build(mix_seed(0x6AD5, static_cast<std::uint64_t>(trial),
                            static_cast<std::uint64_t>(attempt),
                            std::hash<std::string>{}(name)));
      if (!kinky) {
        safe = true;
        break;
      }
      diag::KinkMeter::enabled() = true;
      diag::KinkMeter::reset();
      inst.second();  // probe forward
      safe = diag::KinkMeter::min_relu_margin() > margin &&
             diag::KinkMeter::min_pool_gap() > margin;
      diag::KinkMeter::enabled() = false;
    }
    auto report = grad_check<double>(inst.first, inst.second, ctx.opt.tolerance, 1e-4,
                                     ctx.opt.analytic_fault);
    res.max_relative_error = std::max(res.max_relative_error, report.max_relative_error);
    ++res.instantiations;
    if (!report.passed) {
      res.passed = false;
      if (res.note.empty())
        res.note = "trial " + std::to_string(trial) +
                   (report.failure_note.empty() ? "" : ": " + report.failure_note);
    }
  }
  ctx.results.push_back(std::move(res));
}

T weights_like(std::mt19937_64& rng, const Shape& shape) {
  return T(shape, draw(rng, static_cast<std::size_t>(shape_numel(shape))));
}

// scalarize through fixed random weights so every output element matters
std::function<T()> weighted(const std::function<T()>& out_fn, T w) {
  return [out_fn, w]() { return sum(mul(out_fn(), w)); };
}

void core_suites(Ctx& ctx) {
  run_suite(ctx, "core.elementwise", [](std::uint64_t seed) {
    std::mt19937_64 rng(seed);
    auto a = T::param({3, 4}, draw(rng, 12));
    auto b = T::param({3, 4}, draw(rng, 12));
    auto row = T::param({4}, draw(rng, 4));
    auto col = T::param({3, 1}, draw(rng, 3));
    auto w1 = weights_like(rng, {3, 4});
    auto w2 = weights_like(rng, {3, 4});
    auto w3 = weights_like(rng, {3, 4});
    Params params{{"a", a}, {"b", b}, {"row", row}, {"col", col}};
    auto loss = [=]() {
      auto t1 = mul(add(a, b), w1);
      auto t2 = mul(mul(a, row), w2);
      auto t3 = mul(add(mul(b, col), a), w3);
      return add(add(sum(t1), sum(t2)), sum(t3));
    };
    return std::make_pair(params, std::function<T()>(loss));
  });

  run_suite(ctx, "core.scale_shift", [](std::uint64_t seed) {
    std::mt19937_64 rng(seed);
    auto x = T::param({5}, draw(rng, 5));
    auto w = weights_like(rng, {5});
    Params params{{"x", x}};
    auto loss = [=]() { return sum(mul(scale_shift(x, -1.0, 1.0), w)); };
    return std::make_pair(params, std::function<T()>(loss));
  });

  run_suite(ctx, "core.dense", [](std::uint64_t seed) {
    std::mt19937_64 rng(seed);
    auto x = T::param({2, 3}, draw(rng, 6));
    auto w = T::param({3, 4}, draw(rng, 12));
    auto b = T::param({4}, draw(rng, 4));
    auto lw = weights_like(rng, {2, 4});
    Params params{{"x", x}, {"w", w}, {"b", b}};
    auto loss = [=]() { return sum(mul(dense(x, w, b), lw)); };
    return std::make_pair(params, std::function<T()>(loss));
  });

  run_suite(ctx, "core.activations", [](std::uint64_t seed) {
    std::mt19937_64 rng(seed);
    auto x = T::param({4, 5}, draw_margin(rng, 20));
    auto w1 = weights_like(rng, {4, 5});
    auto w2 = weights_like(rng, {4, 5});
    auto w3 = weights_like(rng, {4, 5});
    Params params{{"x", x}};
    auto loss = [=]() {
      return add(sum(mul(relu(x), w1)),
                 add(sum(mul(sigmoid(x), w2)), sum(mul(tanh_op(x), w3))));
    };
    return std::make_pair(params, std::function<T()>(loss));
  }, /*kinky=*/true);

  run_suite(ctx, "core.conv1d", [](std::uint64_t seed) {
    std::mt19937_64 rng(seed);
    auto spec = std::make_shared<ConvSpec<double>>(ConvSpec<double>::make(3, 5, 1, 2));
    spec->weights.values() = draw(rng, spec->weights.values().size());
    spec->bias.values() = draw(rng, 3);
    auto x = T::param({7, 1, 2}, draw(rng, 14));
    auto w = weights_like(rng, {7, 1, 3});
    Params params{{"x", x}, {"w", spec->weights}, {"b", spec->bias}};
    auto loss = [=]() { return sum(mul(conv1d(x, *spec), w)); };
    return std::make_pair(params, std::function<T()>(loss));
  });

  run_suite(ctx, "core.conv2d_same", [](std::uint64_t seed) {
    std::mt19937_64 rng(seed);
    auto spec = std::make_shared<ConvSpec<double>>(ConvSpec<double>::make(2, 2, 2, 2));
    spec->weights.values() = draw(rng, spec->weights.values().size());
    spec->bias.values() = draw(rng, 2);
    auto x = T::param({5, 6, 2}, draw(rng, 60));
    auto w = weights_like(rng, {5, 6, 2});
    Params params{{"x", x}, {"w", spec->weights}, {"b", spec->bias}};
    auto loss = [=]() { return sum(mul(conv2d(x, *spec), w)); };
    return std::make_pair(params, std::function<T()>(loss));
  });

  run_suite(ctx, "core.conv2d_valid", [](std::uint64_t seed) {
    std::mt19937_64 rng(seed);
    auto spec =
        std::make_shared<ConvSpec<double>>(ConvSpec<double>::make(3, 3, 3, 1, Padding::Valid));
    spec->weights.values() = draw(rng, spec->weights.values().size());
    spec->bias.values() = draw(rng, 3);
    auto x = T::param({6, 6, 1}, draw(rng, 36));
    auto w = weights_like(rng, {4, 4, 3});
    Params params{{"x", x}, {"w", spec->weights}, {"b", spec->bias}};
    auto loss = [=]() { return sum(mul(conv2d(x, *spec), w)); };
    return std::make_pair(params, std::function<T()>(loss));
  });

  run_suite(ctx, "core.maxpool", [](std::uint64_t seed) {
    std::mt19937_64 rng(seed);
    auto x = T::param({4, 6, 2}, draw(rng, 48));
    auto y = T::param({6, 1, 3}, draw(rng, 18));
    auto wx = weights_like(rng, {2, 3, 2});
    auto wy = weights_like(rng, {3, 1, 3});
    Params params{{"x", x}, {"y", y}};
    auto loss = [=]() {
      return add(sum(mul(maxpool(x, 2, 2), wx)), sum(mul(maxpool(y, 2, 1), wy)));
    };
    return std::make_pair(params, std::function<T()>(loss));
  }, /*kinky=*/true);

  run_suite(ctx, "core.global_maxpool", [](std::uint64_t seed) {
    std::mt19937_64 rng(seed);
    auto x = T::param({4, 4, 3}, draw(rng, 48));
    auto w = weights_like(rng, {1, 3});
    Params params{{"x", x}};
    auto loss = [=]() { return sum(mul(global_maxpool(x), w)); };
    return std::make_pair(params, std::function<T()>(loss));
  }, /*kinky=*/true);

  run_suite(ctx, "core.broadcast_concat_global", [](std::uint64_t seed) {
    std::mt19937_64 rng(seed);
    auto x = T::param({3, 1, 2}, draw(rng, 6));
    auto g = T::param({1, 2}, draw(rng, 2));
    auto w = weights_like(rng, {3, 1, 4});
    Params params{{"x", x}, {"g", g}};
    auto loss = [=]() { return sum(mul(broadcast_concat_global(x, g), w)); };
    return std::make_pair(params, std::function<T()>(loss));
  });

  run_suite(ctx, "core.batchnorm", [](std::uint64_t seed) {
    std::mt19937_64 rng(seed);
    auto x = T::param({6, 3}, draw(rng, 18));
    auto st = std::make_shared<BatchNormState<double>>(3);
    st->gamma.values() = draw(rng, 3, 0.5, 1.5);
    st->beta.values() = draw(rng, 3);
    auto w = weights_like(rng, {6, 3});
    Params params{{"x", x}, {"gamma", st->gamma}, {"beta", st->beta}};
    auto loss = [=]() { return sum(mul(batchnorm(x, *st, Mode::Train), w)); };
    return std::make_pair(params, std::function<T()>(loss));
  });

  run_suite(ctx, "core.concat_slice", [](std::uint64_t seed) {
    std::mt19937_64 rng(seed);
    auto a = T::param({2, 3}, draw(rng, 6));
    auto b = T::param({2, 2}, draw(rng, 4));
    auto w = weights_like(rng, {2, 3});
    Params params{{"a", a}, {"b", b}};
    auto loss = [=]() {
      auto joined = concat<double>({a, b}, 1);
      auto piece = slice(joined, 1, 1, 3);
      return sum(mul(reshape(piece, {2, 3}), w));
    };
    return std::make_pair(params, std::function<T()>(loss));
  });

  run_suite(ctx, "core.map_to_sequence", [](std::uint64_t seed) {
    std::mt19937_64 rng(seed);
    auto x = T::param({2, 3, 2}, draw(rng, 12));
    auto w = weights_like(rng, {3, 4});
    Params params{{"x", x}};
    auto loss = [=]() { return sum(mul(map_to_sequence(x), w)); };
    return std::make_pair(params, std::function<T()>(loss));
  });

  run_suite(ctx, "core.softmax_xent", [](std::uint64_t seed) {
    std::mt19937_64 rng(seed);
    auto logits = T::param({3, 7}, draw(rng, 21, -2.0, 2.0));
    std::vector<int> labels{static_cast<int>(seed % 7), static_cast<int>((seed / 7) % 7),
                            static_cast<int>((seed / 49) % 7)};
    Params params{{"logits", logits}};
    auto loss = [=]() { return softmax_cross_entropy(logits, labels); };
    return std::make_pair(params, std::function<T()>(loss));
  });
}

void lstm_suites(Ctx& ctx) {
  run_suite(ctx, "lstm.cell", [](std::uint64_t seed) {
    std::mt19937_64 rng(seed);
    const int I = 3, H = 4;
    auto p = std::make_shared<LstmLayerParams<double>>(LstmLayerParams<double>::make(I, H));
    p->wx.values() = draw(rng, p->wx.values().size());
    p->wh.values() = draw(rng, p->wh.values().size());
    p->b.values() = draw(rng, p->b.values().size());
    auto x = T::param({1, I}, draw(rng, I));
    auto h0 = T::param({1, H}, draw(rng, H));
    auto c0 = T::param({1, H}, draw(rng, H));
    auto wc = weights_like(rng, {1, H});
    auto wh = weights_like(rng, {1, H});
    Params params{{"wx", p->wx}, {"wh", p->wh}, {"b", p->b}, {"x", x}, {"h0", h0}, {"c0", c0}};
    auto loss = [=]() {
      auto st = lstm_cell_step(x, LstmState<double>{h0, c0}, *p);
      return add(sum(mul(st.c, wc)), sum(mul(st.h, wh)));
    };
    return std::make_pair(params, std::function<T()>(loss));
  });

  run_suite(ctx, "lstm.sequence", [](std::uint64_t seed) {
    std::mt19937_64 rng(seed);
    const int I = 3, H = 4, Tlen = 3;
    auto p = std::make_shared<LstmParams<double>>(LstmParams<double>::make(I, H));
    Params params;
    int li = 0;
    for (auto& layer : p->layers) {
      layer.wx.values() = draw(rng, layer.wx.values().size());
      layer.wh.values() = draw(rng, layer.wh.values().size());
      layer.b.values() = draw(rng, layer.b.values().size());
      params.emplace_back("l" + std::to_string(li) + ".wx", layer.wx);
      params.emplace_back("l" + std::to_string(li) + ".wh", layer.wh);
      params.emplace_back("l" + std::to_string(li) + ".b", layer.b);
      ++li;
    }
    auto seq = T::param({Tlen, I}, draw(rng, Tlen * I));
    params.emplace_back("seq", seq);
    auto w = weights_like(rng, {1, H});
    auto loss = [=]() { return sum(mul(lstm_sequence_last_state(seq, *p, Tlen), w)); };
    return std::make_pair(params, std::function<T()>(loss));
  });

  run_suite(ctx, "lstm.batched_gather", [](std::uint64_t seed) {
    std::mt19937_64 rng(seed);
    const int I = 3, H = 4, Tlen = 3, B = 2;
    auto p = std::make_shared<LstmParams<double>>(LstmParams<double>::make(I, H));
    Params params;
    for (auto& layer : p->layers) {
      layer.wx.values() = draw(rng, layer.wx.values().size());
      layer.wh.values() = draw(rng, layer.wh.values().size());
      layer.b.values() = draw(rng, layer.b.values().size());
    }
    params.emplace_back("wx0", p->layers[0].wx);
    params.emplace_back("wh1", p->layers[1].wh);
    auto seq = T::param({B, Tlen, I}, draw(rng, B * Tlen * I));
    params.emplace_back("seq", seq);
    auto w = weights_like(rng, {B, H});
    auto loss = [=]() {
      return sum(mul(lstm_sequence_last_state(seq, *p, std::vector<int>{2, 3}), w));
    };
    return std::make_pair(params, std::function<T()>(loss));
  });
}

void stream_suites(Ctx& ctx) {
  run_suite(ctx, "streams.online", [](std::uint64_t seed) {
    std::mt19937_64 rng(seed);
    auto p = std::make_shared<OnlineStreamParams<double>>(
        OnlineStreamParams<double>::make({2, 3, 3, 4, 4, 6}));
    Params params;
    for (std::size_t i = 0; i < p->conv.size(); ++i) {
      p->conv[i].weights.values() = draw(rng, p->conv[i].weights.values().size(), -0.45, 0.45);
      p->conv[i].bias.values() = draw(rng, p->conv[i].bias.values().size(), -0.15, 0.15);
      params.emplace_back("conv" + std::to_string(i + 1) + ".w", p->conv[i].weights);
      params.emplace_back("conv" + std::to_string(i + 1) + ".b", p->conv[i].bias);
    }
    params.emplace_back("bn2.gamma", p->bn2.gamma);
    params.emplace_back("bn2.beta", p->bn2.beta);
    params.emplace_back("bn4.gamma", p->bn4.gamma);
    params.emplace_back("bn4.beta", p->bn4.beta);
    const int N = 8;
    auto d = T::param({N, 1, 2}, draw(rng, N * 2));
    params.emplace_back("input", d);
    auto w = weights_like(rng, {N / 2, 6});
    auto loss = [=]() {
      auto fs = online_stream_forward(d, *p, Mode::Train);
      return sum(mul(fs.data, w));
    };
    return std::make_pair(params, std::function<T()>(loss));
  }, /*kinky=*/true, /*margin=*/0.03);

  run_suite(ctx, "streams.offline", [](std::uint64_t seed) {
    std::mt19937_64 rng(seed);
    auto p = std::make_shared<OfflineStreamParams<double>>(
        OfflineStreamParams<double>::make({3, 4, 4, 4, 6, 6, 6}));
    Params params;
    for (std::size_t i = 0; i < p->conv.size(); ++i) {
      p->conv[i].weights.values() = draw(rng, p->conv[i].weights.values().size(), -0.45, 0.45);
      p->conv[i].bias.values() = draw(rng, p->conv[i].bias.values().size(), -0.15, 0.15);
      params.emplace_back("conv" + std::to_string(i + 1) + ".w", p->conv[i].weights);
      params.emplace_back("conv" + std::to_string(i + 1) + ".b", p->conv[i].bias);
    }
    params.emplace_back("bn3.gamma", p->bn3.gamma);
    params.emplace_back("bn5.beta", p->bn5.beta);
    auto img = T::param({32, 8, 1}, draw(rng, 256, 0.0, 1.0));
    auto w = weights_like(rng, {1, 6});
    auto loss = [=]() {
      auto fs = offline_stream_forward(img, *p, Mode::Train);
      return sum(mul(fs.data, w));
    };
    return std::make_pair(params, std::function<T()>(loss));
  }, /*kinky=*/true, /*margin=*/0.03);
}

void fusion_suites(Ctx& ctx) {
  run_suite(ctx, "fusion.conditional", [](std::uint64_t seed) {
    std::mt19937_64 rng(seed);
    const int K = 6;
    auto p = std::make_shared<FusionParams<double>>(FusionParams<double>::make(K, 7));
    double ws = std::sqrt(6.0 / (2 * K + 2 + K));
    p->gate_w.values() = draw(rng, p->gate_w.values().size(), -ws, ws);
    p->gate_b.values() = draw(rng, p->gate_b.values().size(), -0.3, 0.3);
    p->head_w.values() = draw(rng, p->head_w.values().size());
    p->head_b.values() = draw(rng, p->head_b.values().size());
    auto f_on = T::param({1, K}, draw(rng, K));
    auto f_off = T::param({1, K}, draw(rng, K));
    auto z = origin_tensor<double>({seed % 2 ? Origin::Online : Origin::Offline});
    Params params{{"gate.w", p->gate_w}, {"gate.b", p->gate_b}, {"head.w", p->head_w},
                  {"head.b", p->head_b}, {"f_on", f_on},        {"f_off", f_off}};
    auto loss = [=]() {
      auto logits = fuse_and_classify(f_on, f_off, z, *p);
      return softmax_cross_entropy(logits, {static_cast<int>(seed % 7)});
    };
    return std::make_pair(params, std::function<T()>(loss));
  });

  run_suite(ctx, "fusion.baselines", [](std::uint64_t seed) {
    std::mt19937_64 rng(seed);
    const int K = 5;
    auto f_on = T::param({1, K}, draw(rng, K));
    auto f_off = T::param({1, K}, draw(rng, K));
    auto ws = weights_like(rng, {1, K});
    auto wp = weights_like(rng, {1, K});
    auto wc = weights_like(rng, {1, 2 * K});
    Params params{{"f_on", f_on}, {"f_off", f_off}};
    auto loss = [=]() {
      auto s = sum(mul(baseline_fuse(f_on, f_off, FusionKind::Sum), ws));
      auto pr = sum(mul(baseline_fuse(f_on, f_off, FusionKind::Product), wp));
      auto cc = sum(mul(baseline_fuse(f_on, f_off, FusionKind::Concat), wc));
      return add(add(s, pr), cc);
    };
    return std::make_pair(params, std::function<T()>(loss));
  });
}

}  // namespace

std::vector<GradSuiteResult> run_grad_suites(const std::string& scope,
                                             const GradSuiteOptions& options) {
  std::vector<GradSuiteResult> results;
  Ctx ctx{options, results};
  bool known = false;
  if (scope == "core" || scope == "all") {
    core_suites(ctx);
    known = true;
  }
  if (scope == "lstm" || scope == "all") {
    lstm_suites(ctx);
    known = true;
  }
  if (scope == "streams" || scope == "all") {
    stream_suites(ctx);
    known = true;
  }
  if (scope == "fusion" || scope == "all") {
    fusion_suites(ctx);
    known = true;
  }
  if (!known) throw InputError("gradcheck: unknown scope '" + scope + "'");
  return results;
}

}  // namespace sidnet
