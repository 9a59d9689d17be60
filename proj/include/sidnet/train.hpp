#pragma once

#include <iosfwd>
#include <map>

#include "sidnet/dataio.hpp"
#include "sidnet/model.hpp"

namespace sidnet {

enum class TrainSource { Both, OnlineOnly, OfflineOnly };
enum class Protocol { WithinModality, CrossModality };

inline const char* protocol_name(Protocol p) {
  return p == Protocol::WithinModality ? "within" : "cross";
}

struct TrainConfig {
  double learning_rate = 0.01;
  double momentum = 0.9;
  int batch_size = 32;
  double weight_decay = 5e-4;
  int max_iterations = 600;
  int plateau_patience = 5;
  double lr_factor = 0.1;
  std::uint64_t seed = 1;
  TrainSource train_source = TrainSource::Both;
  Level train_level = Level::Character;
  int validation_interval = 200;
};

// Flat key=value config text mirroring the TrainConfig field names. Unknown
// keys are errors; '#' starts a comment line.
TrainConfig parse_train_config(const std::string& text);

struct OptimizerState {
  std::map<std::string, std::vector<float>> velocity;
};

// Per parameter: g' = g + weight_decay*w; v <- momentum*v + g'; w <- w - lr*v.
// Gradients are cleared afterwards. A parameter without gradient storage is a
// consistency error.
void sgd_momentum_step(std::vector<std::pair<std::string, Tensor<float>>>& params,
                       OptimizerState& state, double learning_rate, double momentum,
                       double weight_decay);

// Multiply the rate by lr_factor (floor 1e-6) when the best validation error
// has not improved for `patience` consecutive observations; at most one decay
// per patience window.
class PlateauSchedule {
 public:
  PlateauSchedule(double lr, int patience, double factor)
      : lr_(lr), factor_(factor), patience_(patience) {}

  double observe(double val_error);
  double lr() const { return lr_; }

 private:
  double lr_;
  double factor_;
  int patience_;
  double best_ = std::numeric_limits<double>::infinity();
  int since_improve_ = 0;
};

// Manifest-backed sample store with cached modality presentations. A
// "within" presentation feeds the sample's original modality plus its
// converted counterpart; "cross" presents the converted counterpart as the
// original (Z flipped) and re-converts to fill the pair.
class Dataset {
 public:
  explicit Dataset(Manifest manifest) : manifest_(std::move(manifest)) {
    cache_.resize(manifest_.samples.size() * 2);
  }

  struct Prepared {
    Tensor<float> online;  // [N,1,2] normalized, N >= 4 even
    OfflineImage offline;  // preprocessed for the sample's level, ink = 1
    Origin z = Origin::Online;
    int label = 0;
  };

  const Manifest& manifest() const { return manifest_; }
  int size() const { return static_cast<int>(manifest_.samples.size()); }
  const SampleDesc& desc(int idx) const { return manifest_.samples[static_cast<std::size_t>(idx)]; }
  const Prepared& presentation(int idx, Protocol protocol);

 private:
  Manifest manifest_;
  std::vector<std::unique_ptr<Prepared>> cache_;
};

BatchInput<float> make_batch(Dataset& data, const std::vector<int>& ids, Protocol protocol);

struct TrainLogRow {
  int iteration = 0;
  double lr = 0;
  double train_loss = -1;  // negative = not recorded
  double val_loss = -1;
  double val_acc = -1;
};

std::string log_to_csv(const std::vector<TrainLogRow>& rows);

struct TrainResult {
  std::vector<TrainLogRow> log;
  int iterations = 0;
};

// SGD training over the fold's train split, restricted to train_level and
// train_source; validation runs every validation_interval iterations on a
// capped, deterministic subset of the fold's val split. Throws NumericError
// when the loss diverges.
TrainResult train_model(ScriptNetF& model, Dataset& data, const FoldSpec& fold,
                        const TrainConfig& cfg, std::ostream* progress = nullptr);

struct EvalReport {
  double overall_accuracy = 0;
  double accuracy_online = 0;   // over samples presented with Z = online
  double accuracy_offline = 0;
  int total = 0;
  int correct = 0;
  std::vector<std::vector<int>> confusion;  // rows = true label
  std::vector<double> precision, recall;
  std::string protocol, level, train_level;
  std::vector<std::string> labels;
};

// Side-effect-free evaluation of the listed sample indices at the requested
// level. Word-level samples run one at a time at their natural width.
EvalReport evaluate(ScriptNetF& model, Dataset& data, const std::vector<int>& ids,
                    Protocol protocol, Level level, const std::string& train_level_tag = "");

std::vector<std::vector<int>> confusion_matrix(const std::vector<int>& predictions,
                                               const std::vector<int>& truths, int classes);

std::string eval_report_to_json(const EvalReport& report);

// Checkpoint container: magic "SIDNET01", then records
// [u32 name-len][name][u8 rank][rank x u32 dims][prod x f32 LE], closed by a
// u32 CRC-32 of everything between the magic and the CRC.
void save_checkpoint(const std::filesystem::path& path, ScriptNetF& model,
                     const std::string& train_level);
struct LoadedCheckpoint {
  ScriptNetF model;
  std::string train_level;
};
LoadedCheckpoint load_checkpoint(const std::filesystem::path& path);

}  // namespace sidnet
