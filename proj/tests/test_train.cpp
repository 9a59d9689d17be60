#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <filesystem>

#include "sidnet/formats.hpp"
#include "sidnet/train.hpp"

using namespace sidnet;
namespace fs = std::filesystem;

namespace {

fs::path temp_dir(const std::string& tag) {
  auto dir = fs::temp_directory_path() / ("sidnet_train_" + tag);
  fs::remove_all(dir);
  fs::create_directories(dir);
  return dir;
}

ModelConfig toy_config(FusionKind fusion = FusionKind::Conditional) {
  ModelConfig cfg;
  cfg.classes = 7;
  cfg.hidden = 16;
  cfg.online_channels = {4, 6, 6, 8, 8, 12};
  cfg.offline_channels = {4, 6, 6, 6, 12, 12, 12};
  cfg.fusion = fusion;
  return cfg;
}

// small corpus shared across the training tests
struct Corpus {
  fs::path dir;
  Manifest manifest;
  std::vector<FoldSpec> folds;

  Corpus() {
    SynthConfig cfg;
    cfg.seed = 31;
    cfg.chars_per_script = 2;
    cfg.samples_per_char = 7;  // 14 chars per script
    cfg.words_per_script = 10;
    dir = temp_dir("corpus");
    auto path = synth_dataset(cfg, dir);
    manifest = load_manifest(path);
    std::vector<std::string> strata;
    for (const auto& d : manifest.samples)
      strata.push_back(d.script + "/" + level_name(d.level));
    folds = make_folds(strata, 42);
  }
};

Corpus& corpus() {
  static Corpus c;
  return c;
}

}  // namespace

TEST_CASE("sgd momentum step examples") {
  auto w = Tensor<float>::param({1}, {1.0f});
  w.grad()[0] = 0.5f;
  std::vector<std::pair<std::string, Tensor<float>>> params{{"w", w}};
  OptimizerState st;
  sgd_momentum_step(params, st, 0.01, 0.9, 0.0);
  CHECK(st.velocity["w"][0] == doctest::Approx(0.5f));
  CHECK(w[0] == doctest::Approx(0.995f));
  CHECK(w.grad()[0] == 0.0f);  // cleared

  // momentum 0, weight decay 0: plain SGD
  auto w2 = Tensor<float>::param({1}, {2.0f});
  w2.grad()[0] = 1.0f;
  std::vector<std::pair<std::string, Tensor<float>>> params2{{"w", w2}};
  OptimizerState st2;
  sgd_momentum_step(params2, st2, 0.1, 0.0, 0.0);
  CHECK(w2[0] == doctest::Approx(1.9f));

  // zero gradient with weight decay
  auto w3 = Tensor<float>::param({1}, {1.0f});
  std::vector<std::pair<std::string, Tensor<float>>> params3{{"w", w3}};
  OptimizerState st3;
  sgd_momentum_step(params3, st3, 0.01, 0.9, 5e-4);
  CHECK(w3[0] == doctest::Approx(0.999995f));

  // zero gradients and zero decay leave parameters bit-identical
  auto w4 = Tensor<float>::param({3}, {0.25f, -1.5f, 3.125f});
  std::vector<std::pair<std::string, Tensor<float>>> params4{{"w", w4}};
  OptimizerState st4;
  auto before = w4.values();
  sgd_momentum_step(params4, st4, 0.01, 0.9, 0.0);
  CHECK(w4.values() == before);

  // a parameter without gradient storage is a consistency error
  Tensor<float> plain({1}, {1.0f});
  std::vector<std::pair<std::string, Tensor<float>>> bad{{"w", plain}};
  OptimizerState st5;
  CHECK_THROWS_AS(sgd_momentum_step(bad, st5, 0.01, 0.9, 0.0), ConsistencyError);
}

TEST_CASE("plateau schedule") {
  PlateauSchedule s(0.01, 2, 0.1);
  s.observe(0.3);
  CHECK(s.lr() == doctest::Approx(0.01));
  s.observe(0.3);
  CHECK(s.lr() == doctest::Approx(0.01));
  s.observe(0.3);
  CHECK(s.lr() == doctest::Approx(0.001));

  PlateauSchedule improving(0.01, 2, 0.1);
  for (double e : {0.5, 0.4, 0.3, 0.2, 0.1}) improving.observe(e);
  CHECK(improving.lr() == doctest::Approx(0.01));

  PlateauSchedule floor(2e-6, 1, 0.1);
  floor.observe(0.5);
  floor.observe(0.5);
  CHECK(floor.lr() == doctest::Approx(1e-6));
  floor.observe(0.5);
  floor.observe(0.5);
  CHECK(floor.lr() == doctest::Approx(1e-6));
}

TEST_CASE("train config parsing") {
  auto cfg = parse_train_config("");
  CHECK(cfg.learning_rate == doctest::Approx(0.01));
  CHECK(cfg.momentum == doctest::Approx(0.9));
  CHECK(cfg.batch_size == 32);
  CHECK(cfg.weight_decay == doctest::Approx(5e-4));

  auto cfg2 = parse_train_config(
      "# comment\nlearning_rate=0.05\nmax_iterations=100\nseed=9\n"
      "train_source=online_only\ntrain_level=word\nbatch_size=8\n");
  CHECK(cfg2.learning_rate == doctest::Approx(0.05));
  CHECK(cfg2.max_iterations == 100);
  CHECK(cfg2.seed == 9);
  CHECK(cfg2.train_source == TrainSource::OnlineOnly);
  CHECK(cfg2.train_level == Level::Word);

  CHECK_THROWS_AS(parse_train_config("learning_rte=0.1\n"), FormatError);
  CHECK_THROWS_AS(parse_train_config("batch_size=zero\n"), FormatError);
  CHECK_THROWS_AS(parse_train_config("lr_factor=1.5\n"), FormatError);
}

TEST_CASE("confusion matrix") {
  auto all_correct = confusion_matrix({0, 1, 2}, {0, 1, 2}, 3);
  for (int i = 0; i < 3; ++i)
    for (int j = 0; j < 3; ++j) CHECK(all_correct[i][j] == (i == j ? 1 : 0));

  auto empty = confusion_matrix({}, {}, 3);
  for (const auto& row : empty)
    for (int v : row) CHECK(v == 0);

  auto m = confusion_matrix({0, 0, 1, 2, 2, 2}, {0, 1, 1, 2, 2, 0}, 3);
  // row sums equal per-class truth counts
  CHECK(m[0][0] + m[0][1] + m[0][2] == 2);
  CHECK(m[1][0] + m[1][1] + m[1][2] == 2);
  CHECK(m[2][0] + m[2][1] + m[2][2] == 2);

  CHECK_THROWS_AS(confusion_matrix({5}, {0}, 3), InputError);
  CHECK_THROWS_AS(confusion_matrix({0}, {0, 1}, 3), InputError);
}

TEST_CASE("model initialization gives near-uniform initial loss") {
  auto& c = corpus();
  Dataset data(c.manifest);
  auto model = ScriptNetF::make(toy_config(), c.manifest.labels);
  model.init_xavier(5);

  std::vector<int> ids;
  for (int i = 0; i < data.size() && static_cast<int>(ids.size()) < 16; ++i)
    if (data.desc(i).level == Level::Character) ids.push_back(i);
  auto batch = make_batch(data, ids, Protocol::WithinModality);
  auto logits = model.forward(batch, Mode::Train);
  auto loss = softmax_cross_entropy(logits, batch.labels);
  CHECK(loss[0] > 1.7f);
  CHECK(loss[0] < 2.2f);
}

TEST_CASE("training runs deterministically and reduces the loss") {
  auto& c = corpus();
  TrainConfig tc;
  tc.batch_size = 8;
  tc.max_iterations = 60;
  tc.validation_interval = 20;
  tc.seed = 3;

  auto run = [&](std::vector<float>* head_out) {
    Dataset data(c.manifest);
    auto model = ScriptNetF::make(toy_config(), c.manifest.labels);
    model.init_xavier(tc.seed);
    auto result = train_model(model, data, c.folds[0], tc);
    if (head_out) *head_out = model.fusion.head_w.values();
    return result;
  };

  std::vector<float> head_a, head_b;
  auto res_a = run(&head_a);
  auto res_b = run(&head_b);
  CHECK(head_a == head_b);  // bit-identical across runs

  REQUIRE(res_a.log.size() == 61);
  CHECK(res_a.log[0].iteration == 0);
  CHECK(res_a.log[0].val_acc >= 0);  // initial validation row
  double first = 0, last = 0;
  for (int i = 1; i <= 10; ++i) first += res_a.log[static_cast<std::size_t>(i)].train_loss;
  for (int i = 51; i <= 60; ++i) last += res_a.log[static_cast<std::size_t>(i)].train_loss;
  CHECK(last < first);  // decreasing trend on separable data

  // log CSV round trip shape
  auto csv = log_to_csv(res_a.log);
  CHECK(csv.rfind("iteration,lr,train_loss,val_loss,val_acc\n", 0) == 0);
  CHECK(std::count(csv.begin(), csv.end(), '\n') == 62);
}

TEST_CASE("evaluation protocols and reports") {
  auto& c = corpus();
  Dataset data(c.manifest);
  auto model = ScriptNetF::make(toy_config(), c.manifest.labels);
  model.init_xavier(11);
  TrainConfig tc;
  tc.batch_size = 8;
  tc.max_iterations = 120;
  tc.validation_interval = 40;
  tc.seed = 5;
  train_model(model, data, c.folds[0], tc);

  auto within = evaluate(model, data, c.folds[0].test, Protocol::WithinModality,
                         Level::Character, "character");
  CHECK(within.total > 0);
  int matrix_sum = 0;
  for (const auto& row : within.confusion)
    for (int v : row) matrix_sum += v;
  CHECK(matrix_sum == within.total);
  CHECK(within.overall_accuracy == doctest::Approx(static_cast<double>(within.correct) / within.total));
  CHECK(within.protocol == "within");

  // side-effect free: identical reports on repeated calls
  auto again = evaluate(model, data, c.folds[0].test, Protocol::WithinModality,
                        Level::Character, "character");
  CHECK(again.confusion == within.confusion);
  CHECK(again.overall_accuracy == within.overall_accuracy);

  auto cross = evaluate(model, data, c.folds[0].test, Protocol::CrossModality,
                        Level::Character, "character");
  CHECK(cross.protocol == "cross");
  CHECK(cross.total == within.total);

  // word-level evaluation exercises the variable-width path
  auto word = evaluate(model, data, c.folds[0].test, Protocol::WithinModality, Level::Word,
                       "character");
  CHECK(word.total > 0);
  CHECK(word.level == "word");

  // JSON serialization carries the matrix and labels
  auto json = eval_report_to_json(within);
  CHECK(json.find("\"confusion\"") != std::string::npos);
  CHECK(json.find("\"arcs\"") != std::string::npos);

  std::vector<int> none;
  CHECK_THROWS_AS(evaluate(model, data, none, Protocol::WithinModality, Level::Word, ""),
                  InputError);
}

TEST_CASE("checkpoint round trip and corruption detection") {
  auto& c = corpus();
  auto model = ScriptNetF::make(toy_config(FusionKind::Sum), c.manifest.labels);
  model.init_xavier(17);
  model.online.bn2.running_mean[0] = 0.25f;  // state beyond trainables

  auto dir = temp_dir("ckpt");
  auto path = dir / "model.ckpt";
  save_checkpoint(path, model, "character");

  // deterministic writer
  save_checkpoint(dir / "model2.ckpt", model, "character");
  CHECK(read_file(path) == read_file(dir / "model2.ckpt"));

  auto loaded = load_checkpoint(path);
  CHECK(loaded.train_level == "character");
  CHECK(loaded.model.labels == model.labels);
  CHECK(loaded.model.cfg.fusion == FusionKind::Sum);
  CHECK(loaded.model.cfg.hidden == 16);
  CHECK(loaded.model.online.bn2.running_mean[0] == 0.25f);
  auto a = model.named_state();
  auto b = loaded.model.named_state();
  REQUIRE(a.size() == b.size());
  for (std::size_t i = 0; i < a.size(); ++i) {
    REQUIRE(a[i].shape == b[i].shape);
    std::int64_t n = shape_numel(a[i].shape);
    for (std::int64_t k = 0; k < n; ++k) CHECK(a[i].data[k] == b[i].data[k]);
  }

  // flip one payload byte: CRC must catch it
  auto bytes = read_file(path);
  bytes[bytes.size() / 2] = static_cast<char>(bytes[bytes.size() / 2] ^ 0x5A);
  write_file(dir / "corrupt.ckpt", bytes);
  CHECK_THROWS_AS(load_checkpoint(dir / "corrupt.ckpt"), FormatError);

  write_file(dir / "junk.ckpt", "NOTSIDNET");
  CHECK_THROWS_AS(load_checkpoint(dir / "junk.ckpt"), FormatError);
}
