#pragma once

#include "sidnet/fusion.hpp"
#include "sidnet/lstm.hpp"
#include "sidnet/streams.hpp"

namespace sidnet {

struct ModelConfig {
  int classes = 7;
  int hidden = 512;  // LSTM width and fusion dimension K
  std::array<int, 6> online_channels{32, 64, 128, 256, 256, 512};
  std::array<int, 7> offline_channels{64, 128, 256, 256, 512, 512, 512};
  FusionKind fusion = FusionKind::Conditional;
};

// Prepared network input. Online sequences are padded to the batch maximum by
// repeating the last point; offline images share one width per batch (padded
// right with background when widths differ).
template <typename S>
struct BatchInput {
  Tensor<S> online;             // [B, Nmax, 1, 2]
  std::vector<int> online_len;  // effective point count per sample
  Tensor<S> offline;            // [B, 32, W, 1], ink = 1
  std::vector<int> offline_w;   // unpadded width per sample
  std::vector<Origin> origins;
  std::vector<int> labels;
};

// The dual-stream network: online and offline convolutional feature
// extractors, one two-layer LSTM per modality, gated fusion, classification
// head.
template <typename S>
struct ScriptNet {
  ModelConfig cfg;
  std::vector<std::string> labels;
  OnlineStreamParams<S> online;
  OfflineStreamParams<S> offline;
  LstmParams<S> lstm_online, lstm_offline;
  FusionParams<S> fusion;

  static ScriptNet make(const ModelConfig& cfg, std::vector<std::string> labels) {
    if (static_cast<int>(labels.size()) != cfg.classes)
      throw InputError("model: " + std::to_string(labels.size()) + " labels for " +
                       std::to_string(cfg.classes) + " classes");
    ScriptNet net;
    net.cfg = cfg;
    net.labels = std::move(labels);
    net.online = OnlineStreamParams<S>::make(cfg.online_channels);
    net.offline = OfflineStreamParams<S>::make(cfg.offline_channels);
    net.lstm_online = LstmParams<S>::make(cfg.online_channels[5], cfg.hidden);
    net.lstm_offline = LstmParams<S>::make(cfg.offline_channels[6], cfg.hidden);
    net.fusion = FusionParams<S>::make(cfg.hidden, cfg.classes, cfg.fusion);
    return net;
  }

  std::vector<std::pair<std::string, Tensor<S>>> named_parameters() {
    std::vector<std::pair<std::string, Tensor<S>>> out;
    for (std::size_t i = 0; i < online.conv.size(); ++i) {
      out.emplace_back("online/conv" + std::to_string(i + 1) + "/weights", online.conv[i].weights);
      out.emplace_back("online/conv" + std::to_string(i + 1) + "/bias", online.conv[i].bias);
    }
    out.emplace_back("online/bn2/gamma", online.bn2.gamma);
    out.emplace_back("online/bn2/beta", online.bn2.beta);
    out.emplace_back("online/bn4/gamma", online.bn4.gamma);
    out.emplace_back("online/bn4/beta", online.bn4.beta);
    for (std::size_t i = 0; i < offline.conv.size(); ++i) {
      out.emplace_back("offline/conv" + std::to_string(i + 1) + "/weights",
                       offline.conv[i].weights);
      out.emplace_back("offline/conv" + std::to_string(i + 1) + "/bias", offline.conv[i].bias);
    }
    out.emplace_back("offline/bn3/gamma", offline.bn3.gamma);
    out.emplace_back("offline/bn3/beta", offline.bn3.beta);
    out.emplace_back("offline/bn5/gamma", offline.bn5.gamma);
    out.emplace_back("offline/bn5/beta", offline.bn5.beta);
    const char* sides[2] = {"lstm_online", "lstm_offline"};
    LstmParams<S>* lstms[2] = {&lstm_online, &lstm_offline};
    for (int s = 0; s < 2; ++s)
      for (int l = 0; l < 2; ++l) {
        auto base = std::string(sides[s]) + "/l" + std::to_string(l + 1);
        out.emplace_back(base + "/wx", lstms[s]->layers[static_cast<std::size_t>(l)].wx);
        out.emplace_back(base + "/wh", lstms[s]->layers[static_cast<std::size_t>(l)].wh);
        out.emplace_back(base + "/b", lstms[s]->layers[static_cast<std::size_t>(l)].b);
      }
    if (fusion.kind == FusionKind::Conditional) {
      out.emplace_back("fusion/gate/weights", fusion.gate_w);
      out.emplace_back("fusion/gate/bias", fusion.gate_b);
    }
    out.emplace_back("head/weights", fusion.head_w);
    out.emplace_back("head/bias", fusion.head_b);
    return out;
  }

  // Serializable state: trainable parameters plus batch-norm running
  // statistics, in a fixed order.
  struct StateRef {
    std::string name;
    Shape shape;
    S* data;
  };

  std::vector<StateRef> named_state() {
    std::vector<StateRef> out;
    for (auto& [name, t] : named_parameters()) out.push_back({name, t.shape(), t.data()});
    auto add_running = [&](const std::string& base, BatchNormState<S>& bn) {
      out.push_back({base + "/running_mean", {bn.channels()}, bn.running_mean.data()});
      out.push_back({base + "/running_var", {bn.channels()}, bn.running_var.data()});
    };
    add_running("online/bn2", online.bn2);
    add_running("online/bn4", online.bn4);
    add_running("offline/bn3", offline.bn3);
    add_running("offline/bn5", offline.bn5);
    return out;
  }

  // Xavier-uniform weights, zero biases, unit gamma. Deterministic per seed.
  void init_xavier(std::uint64_t seed) {
    std::uint64_t x = seed;
    auto next = [&x]() {
      x += 0x9E3779B97F4A7C15ull;
      std::uint64_t z = x;
      z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ull;
      z = (z ^ (z >> 27)) * 0x94D049BB133111EBull;
      return z ^ (z >> 31);
    };
    auto fill = [&](Tensor<S>& t, double limit) {
      for (std::int64_t i = 0; i < t.size(); ++i) {
        double u = static_cast<double>(next() >> 11) * 0x1.0p-53;  // [0,1)
        t[i] = static_cast<S>((2.0 * u - 1.0) * limit);
      }
    };
    auto conv_init = [&](ConvSpec<S>& c) {
      double fan_in = static_cast<double>(c.kernel_h) * c.kernel_w * c.in_channels;
      double fan_out = static_cast<double>(c.kernel_h) * c.kernel_w * c.num_filters;
      fill(c.weights, std::sqrt(6.0 / (fan_in + fan_out)));
    };
    for (auto& c : online.conv) conv_init(c);
    for (auto& c : offline.conv) conv_init(c);
    for (LstmParams<S>* l : {&lstm_online, &lstm_offline})
      for (auto& layer : l->layers) {
        fill(layer.wx, std::sqrt(6.0 / (layer.input_size + 4.0 * layer.hidden)));
        fill(layer.wh, std::sqrt(6.0 / (layer.hidden + 4.0 * layer.hidden)));
      }
    if (fusion.kind == FusionKind::Conditional)
      fill(fusion.gate_w, std::sqrt(6.0 / (2.0 * cfg.hidden + 2 + cfg.hidden)));
    fill(fusion.head_w, std::sqrt(6.0 / (fusion.head_input() + cfg.classes)));
  }

  // Logits [B x classes] for a prepared batch.
  Tensor<S> forward(const BatchInput<S>& in, Mode mode, FusionTrace<S>* trace = nullptr) {
    auto fs_on = online_stream_forward(in.online, online, mode, in.online_len);
    Tensor<S> f_on = lstm_sequence_last_state(fs_on.data, lstm_online, fs_on.true_length);
    auto fs_off = offline_stream_forward(in.offline, offline, mode, in.offline_w);
    Tensor<S> f_off = lstm_sequence_last_state(fs_off.data, lstm_offline, fs_off.true_length);
    Tensor<S> z = origin_tensor<S>(in.origins);
    return fuse_and_classify(f_on, f_off, z, fusion, trace);
  }
};

using ScriptNetF = ScriptNet<float>;

}  // namespace sidnet
