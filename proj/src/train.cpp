#include "sidnet/train.hpp"

#include <algorithm>
#include <cmath>
#include <ostream>
#include <random>
#include <sstream>

#include "sidnet/formats.hpp"

namespace sidnet {

TrainConfig parse_train_config(const std::string& text) {
  TrainConfig cfg;
  std::istringstream in(text);
  std::string line;
  int lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    std::size_t first = line.find_first_not_of(" \t");
    if (first == std::string::npos || line[first] == '#') continue;
    std::size_t eq = line.find('=');
    if (eq == std::string::npos)
      throw FormatError("config line " + std::to_string(lineno) + ": expected key=value");
    std::string key = line.substr(first, eq - first);
    std::string value = line.substr(eq + 1);
    while (!key.empty() && (key.back() == ' ' || key.back() == '\t')) key.pop_back();
    std::size_t vs = value.find_first_not_of(" \t");
    value = vs == std::string::npos ? "" : value.substr(vs);

    auto as_double = [&](double& out) {
      char* end = nullptr;
      out = std::strtod(value.c_str(), &end);
      if (end != value.c_str() + value.size() || value.empty())
        throw FormatError("config line " + std::to_string(lineno) + ": bad number '" + value +
                          "'");
    };
    auto as_int = [&](int& out) {
      double d;
      as_double(d);
      if (d != std::floor(d))
        throw FormatError("config line " + std::to_string(lineno) + ": expected integer");
      out = static_cast<int>(d);
    };

    if (key == "learning_rate") {
      as_double(cfg.learning_rate);
    } else if (key == "momentum") {
      as_double(cfg.momentum);
    } else if (key == "batch_size") {
      as_int(cfg.batch_size);
    } else if (key == "weight_decay") {
      as_double(cfg.weight_decay);
    } else if (key == "max_iterations") {
      as_int(cfg.max_iterations);
    } else if (key == "plateau_patience") {
      as_int(cfg.plateau_patience);
    } else if (key == "lr_factor") {
      as_double(cfg.lr_factor);
    } else if (key == "validation_interval") {
      as_int(cfg.validation_interval);
    } else if (key == "seed") {
      double d;
      as_double(d);
      cfg.seed = static_cast<std::uint64_t>(d);
    } else if (key == "train_source") {
      if (value == "both") {
        cfg.train_source = TrainSource::Both;
      } else if (value == "online_only" || value == "online") {
        cfg.train_source = TrainSource::OnlineOnly;
      } else if (value == "offline_only" || value == "offline") {
        cfg.train_source = TrainSource::OfflineOnly;
      } else {
        throw FormatError("config line " + std::to_string(lineno) + ": bad train_source '" +
                          value + "'");
      }
    } else if (key == "train_level") {
      if (value == "character") {
        cfg.train_level = Level::Character;
      } else if (value == "word") {
        cfg.train_level = Level::Word;
      } else {
        throw FormatError("config line " + std::to_string(lineno) + ": bad train_level '" +
                          value + "'");
      }
    } else {
      throw FormatError("config line " + std::to_string(lineno) + ": unknown key '" + key + "'");
    }
  }
  if (cfg.learning_rate <= 0 || cfg.momentum < 0 || cfg.batch_size <= 0 ||
      cfg.weight_decay < 0 || cfg.max_iterations <= 0 || cfg.plateau_patience <= 0 ||
      cfg.lr_factor <= 0 || cfg.lr_factor >= 1 || cfg.validation_interval <= 0)
    throw FormatError("config: values out of range");
  return cfg;
}

void sgd_momentum_step(std::vector<std::pair<std::string, Tensor<float>>>& params,
                       OptimizerState& state, double learning_rate, double momentum,
                       double weight_decay) {
  for (auto& [name, p] : params) {
    if (!p.requires_grad() || p.grad().size() != p.values().size())
      throw ConsistencyError("optimizer: parameter '" + name + "' has no gradient storage");
    auto [it, fresh] = state.velocity.try_emplace(name, p.values().size(), 0.0f);
    auto& v = it->second;
    if (v.size() != p.values().size())
      throw ConsistencyError("optimizer: velocity shape drifted for '" + name + "'");
    const float lr = static_cast<float>(learning_rate);
    const float mu = static_cast<float>(momentum);
    const float wd = static_cast<float>(weight_decay);
    float* w = p.data();
    float* g = p.grad().data();
    for (std::size_t i = 0; i < v.size(); ++i) {
      float adjusted = g[i] + wd * w[i];
      v[i] = mu * v[i] + adjusted;
      w[i] -= lr * v[i];
    }
    p.zero_grad();
  }
}

double PlateauSchedule::observe(double val_error) {
  if (val_error < best_) {
    best_ = val_error;
    since_improve_ = 0;
    return lr_;
  }
  ++since_improve_;
  if (since_improve_ >= patience_) {
    lr_ = std::max(lr_ * factor_, 1e-6);
    since_improve_ = 0;  // at most one decay per patience window
  }
  return lr_;
}

namespace {

// Online sequences must reach the stream's minimum length with an even count;
// pad by repeating the last point.
Tensor<float> pad_min_even(const Tensor<float>& online) {
  int n = online.dim(0);
  int target = std::max(4, n + (n % 2));
  if (target == n) return online;
  std::vector<float> v = online.values();
  for (int i = n; i < target; ++i) {
    v.push_back(v[static_cast<std::size_t>((n - 1) * 2)]);
    v.push_back(v[static_cast<std::size_t>((n - 1) * 2 + 1)]);
  }
  return Tensor<float>({target, 1, 2}, std::move(v));
}

}  // namespace

const Dataset::Prepared& Dataset::presentation(int idx, Protocol protocol) {
  const bool cross = protocol == Protocol::CrossModality;
  auto& slot = cache_[static_cast<std::size_t>(idx) * 2 + (cross ? 1 : 0)];
  if (slot) return *slot;

  const SampleDesc& d = manifest_.samples[static_cast<std::size_t>(idx)];
  Sample original = load_sample(manifest_, d);
  Sample pair = convert(original);

  if (cross) {
    // present the converted counterpart as the original modality
    Sample flipped;
    flipped.id = d.id;
    flipped.script = d.script;
    flipped.level = d.level;
    if (pair.origin == Origin::Online) {
      flipped.offline = pair.offline;
    } else {
      flipped.online = pair.online;
    }
    pair = convert(flipped);
  }

  auto prep = std::make_unique<Prepared>();
  prep->z = pair.origin;
  prep->label = manifest_.label_index(d.script);
  prep->online = pad_min_even(preprocess_online(*pair.online));
  prep->offline = preprocess_offline(*pair.offline, d.level == Level::Character);
  slot = std::move(prep);
  return *slot;
}

BatchInput<float> make_batch(Dataset& data, const std::vector<int>& ids, Protocol protocol) {
  if (ids.empty()) throw InputError("make_batch: empty batch");
  const int B = static_cast<int>(ids.size());
  int n_max = 0, w_max = 0;
  for (int id : ids) {
    const auto& p = data.presentation(id, protocol);
    n_max = std::max(n_max, p.online.dim(0));
    w_max = std::max(w_max, p.offline.width);
  }
  if (n_max % 2) ++n_max;
  w_max += (4 - w_max % 4) % 4;

  BatchInput<float> batch;
  std::vector<float> online(static_cast<std::size_t>(B) * n_max * 2, 0.0f);
  std::vector<float> offline(static_cast<std::size_t>(B) * 32 * w_max, 0.0f);
  for (int b = 0; b < B; ++b) {
    const auto& p = data.presentation(ids[static_cast<std::size_t>(b)], protocol);
    const int n = p.online.dim(0);
    float* od = online.data() + static_cast<std::size_t>(b) * n_max * 2;
    std::copy(p.online.data(), p.online.data() + n * 2, od);
    for (int i = n; i < n_max; ++i) {
      od[i * 2] = od[(n - 1) * 2];
      od[i * 2 + 1] = od[(n - 1) * 2 + 1];
    }
    float* fd = offline.data() + static_cast<std::size_t>(b) * 32 * w_max;
    for (int r = 0; r < 32; ++r)
      std::copy(p.offline.pixels.begin() + static_cast<std::ptrdiff_t>(r) * p.offline.width,
                p.offline.pixels.begin() + static_cast<std::ptrdiff_t>(r + 1) * p.offline.width,
                fd + static_cast<std::size_t>(r) * w_max);
    batch.online_len.push_back(n);
    batch.offline_w.push_back(p.offline.width);
    batch.origins.push_back(p.z);
    batch.labels.push_back(p.label);
  }
  batch.online = Tensor<float>({B, n_max, 1, 2}, std::move(online));
  batch.offline = Tensor<float>({B, 32, w_max, 1}, std::move(offline));
  return batch;
}

namespace {

std::uint64_t bounded(std::mt19937_64& rng, std::uint64_t n) {
  const std::uint64_t limit = std::numeric_limits<std::uint64_t>::max() -
                              std::numeric_limits<std::uint64_t>::max() % n;
  std::uint64_t v;
  do {
    v = rng();
  } while (v >= limit);
  return v % n;
}

void seeded_shuffle(std::vector<int>& v, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  for (std::size_t i = v.size(); i > 1; --i) std::swap(v[i - 1], v[bounded(rng, i)]);
}

bool origin_allowed(Origin o, TrainSource src) {
  switch (src) {
    case TrainSource::Both: return true;
    case TrainSource::OnlineOnly: return o == Origin::Online;
    case TrainSource::OfflineOnly: return o == Origin::Offline;
  }
  return true;
}

struct ValResult {
  double loss = 0;
  double acc = 0;
};

ValResult run_validation(ScriptNetF& model, Dataset& data, const std::vector<int>& ids,
                         int batch_size) {
  ValResult r;
  int correct = 0, total = 0;
  double loss_sum = 0;
  for (std::size_t at = 0; at < ids.size(); at += static_cast<std::size_t>(batch_size)) {
    std::vector<int> chunk(ids.begin() + static_cast<std::ptrdiff_t>(at),
                           ids.begin() + static_cast<std::ptrdiff_t>(
                                             std::min(ids.size(), at + static_cast<std::size_t>(
                                                                           batch_size))));
    auto batch = make_batch(data, chunk, Protocol::WithinModality);
    auto logits = model.forward(batch, Mode::Infer);
    auto loss = softmax_cross_entropy(logits, batch.labels);
    loss_sum += static_cast<double>(loss[0]) * static_cast<double>(chunk.size());
    const int C = logits.dim(1);
    for (int b = 0; b < static_cast<int>(chunk.size()); ++b) {
      int best = 0;
      for (int c = 1; c < C; ++c)
        if (logits[b * C + c] > logits[b * C + best]) best = c;
      correct += best == batch.labels[static_cast<std::size_t>(b)] ? 1 : 0;
      ++total;
    }
  }
  r.loss = total ? loss_sum / total : 0.0;
  r.acc = total ? static_cast<double>(correct) / total : 0.0;
  return r;
}

}  // namespace

TrainResult train_model(ScriptNetF& model, Dataset& data, const FoldSpec& fold,
                        const TrainConfig& cfg, std::ostream* progress) {
  std::vector<int> train_ids, val_ids;
  for (int id : fold.train) {
    const auto& d = data.desc(id);
    if (d.level == cfg.train_level && origin_allowed(d.origin, cfg.train_source))
      train_ids.push_back(id);
  }
  for (int id : fold.val) {
    const auto& d = data.desc(id);
    if (d.level == cfg.train_level && origin_allowed(d.origin, cfg.train_source))
      val_ids.push_back(id);
  }
  if (train_ids.empty())
    throw InputError("train: no training samples at level " +
                     std::string(level_name(cfg.train_level)));

  // deterministic capped validation subset
  seeded_shuffle(val_ids, mix_seed(cfg.seed, 0x7A11ull));
  if (val_ids.size() > 256) val_ids.resize(256);

  auto params = model.named_parameters();
  OptimizerState opt;
  PlateauSchedule schedule(cfg.learning_rate, cfg.plateau_patience, cfg.lr_factor);

  TrainResult result;
  {
    TrainLogRow row;
    row.iteration = 0;
    row.lr = schedule.lr();
    if (!val_ids.empty()) {
      auto v = run_validation(model, data, val_ids, cfg.batch_size);
      row.val_loss = v.loss;
      row.val_acc = v.acc;
    }
    result.log.push_back(row);
  }

  std::vector<int> order = train_ids;
  std::size_t cursor = order.size();  // trigger shuffle on first use
  std::uint64_t epoch = 0;

  for (int iter = 1; iter <= cfg.max_iterations; ++iter) {
    std::vector<int> ids;
    ids.reserve(static_cast<std::size_t>(cfg.batch_size));
    while (static_cast<int>(ids.size()) < cfg.batch_size) {
      if (cursor >= order.size()) {
        seeded_shuffle(order, mix_seed(cfg.seed, 0xE90C4ull, epoch++));
        cursor = 0;
      }
      ids.push_back(order[cursor++]);
    }

    auto batch = make_batch(data, ids, Protocol::WithinModality);
    auto logits = model.forward(batch, Mode::Train);
    auto loss = softmax_cross_entropy(logits, batch.labels);
    const double loss_v = static_cast<double>(loss[0]);
    if (!std::isfinite(loss_v))
      throw NumericError("train: loss diverged (non-finite) at iteration " +
                         std::to_string(iter));
    backward(loss);
    sgd_momentum_step(params, opt, schedule.lr(), cfg.momentum, cfg.weight_decay);

    TrainLogRow row;
    row.iteration = iter;
    row.lr = schedule.lr();
    row.train_loss = loss_v;
    if (iter % cfg.validation_interval == 0 && !val_ids.empty()) {
      auto v = run_validation(model, data, val_ids, cfg.batch_size);
      row.val_loss = v.loss;
      row.val_acc = v.acc;
      schedule.observe(1.0 - v.acc);
      if (progress)
        (*progress) << "iter " << iter << " loss " << loss_v << " val_acc " << v.acc << " lr "
                    << schedule.lr() << "\n";
    }
    result.log.push_back(row);
  }
  result.iterations = cfg.max_iterations;
  return result;
}

std::vector<std::vector<int>> confusion_matrix(const std::vector<int>& predictions,
                                               const std::vector<int>& truths, int classes) {
  if (predictions.size() != truths.size())
    throw InputError("confusion_matrix: length mismatch");
  std::vector<std::vector<int>> m(static_cast<std::size_t>(classes),
                                  std::vector<int>(static_cast<std::size_t>(classes), 0));
  for (std::size_t i = 0; i < truths.size(); ++i) {
    int t = truths[i], p = predictions[i];
    if (t < 0 || t >= classes || p < 0 || p >= classes)
      throw InputError("confusion_matrix: label out of range");
    ++m[static_cast<std::size_t>(t)][static_cast<std::size_t>(p)];
  }
  return m;
}

EvalReport evaluate(ScriptNetF& model, Dataset& data, const std::vector<int>& ids,
                    Protocol protocol, Level level, const std::string& train_level_tag) {
  std::vector<int> selected;
  for (int id : ids)
    if (data.desc(id).level == level) selected.push_back(id);
  if (selected.empty())
    throw InputError(std::string("evaluate: no samples at level ") + level_name(level));

  const int C = model.cfg.classes;
  std::vector<int> preds, truths;
  std::vector<Origin> origins;
  preds.reserve(selected.size());

  auto eval_chunk = [&](const std::vector<int>& chunk) {
    auto batch = make_batch(data, chunk, protocol);
    auto logits = model.forward(batch, Mode::Infer);
    for (int b = 0; b < static_cast<int>(chunk.size()); ++b) {
      int best = 0;
      for (int c = 1; c < C; ++c)
        if (logits[b * C + c] > logits[b * C + best]) best = c;
      preds.push_back(best);
      truths.push_back(batch.labels[static_cast<std::size_t>(b)]);
      origins.push_back(batch.origins[static_cast<std::size_t>(b)]);
    }
  };

  if (level == Level::Word) {
    // arbitrary-width inputs run one at a time
    for (int id : selected) eval_chunk({id});
  } else {
    const std::size_t step = 32;
    for (std::size_t at = 0; at < selected.size(); at += step)
      eval_chunk(std::vector<int>(
          selected.begin() + static_cast<std::ptrdiff_t>(at),
          selected.begin() + static_cast<std::ptrdiff_t>(std::min(selected.size(), at + step))));
  }

  EvalReport rep;
  rep.labels = model.labels;
  rep.protocol = protocol_name(protocol);
  rep.level = level_name(level);
  rep.train_level = train_level_tag;
  rep.total = static_cast<int>(preds.size());
  rep.confusion = confusion_matrix(preds, truths, C);
  int correct = 0, on_total = 0, on_correct = 0, off_total = 0, off_correct = 0;
  for (std::size_t i = 0; i < preds.size(); ++i) {
    const bool hit = preds[i] == truths[i];
    correct += hit;
    if (origins[i] == Origin::Online) {
      ++on_total;
      on_correct += hit;
    } else {
      ++off_total;
      off_correct += hit;
    }
  }
  rep.correct = correct;
  rep.overall_accuracy = rep.total ? static_cast<double>(correct) / rep.total : 0.0;
  rep.accuracy_online = on_total ? static_cast<double>(on_correct) / on_total : 0.0;
  rep.accuracy_offline = off_total ? static_cast<double>(off_correct) / off_total : 0.0;
  rep.precision.assign(static_cast<std::size_t>(C), 0.0);
  rep.recall.assign(static_cast<std::size_t>(C), 0.0);
  for (int c = 0; c < C; ++c) {
    int row_sum = 0, col_sum = 0, diag = rep.confusion[static_cast<std::size_t>(c)][static_cast<std::size_t>(c)];
    for (int k = 0; k < C; ++k) {
      row_sum += rep.confusion[static_cast<std::size_t>(c)][static_cast<std::size_t>(k)];
      col_sum += rep.confusion[static_cast<std::size_t>(k)][static_cast<std::size_t>(c)];
    }
    rep.precision[static_cast<std::size_t>(c)] = col_sum ? static_cast<double>(diag) / col_sum : 0.0;
    rep.recall[static_cast<std::size_t>(c)] = row_sum ? static_cast<double>(diag) / row_sum : 0.0;
  }
  return rep;
}

std::string log_to_csv(const std::vector<TrainLogRow>& rows) {
  std::ostringstream out;
  out << "iteration,lr,train_loss,val_loss,val_acc\n";
  auto num = [](double v) {
    if (v < 0) return std::string();
    char buf[32];
    std::snprintf(buf, sizeof(buf), "%.6g", v);
    return std::string(buf);
  };
  for (const auto& r : rows)
    out << r.iteration << "," << num(r.lr) << "," << num(r.train_loss) << ","
        << num(r.val_loss) << "," << num(r.val_acc) << "\n";
  return out.str();
}

}  // namespace sidnet
