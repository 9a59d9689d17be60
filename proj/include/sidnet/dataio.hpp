#pragma once

#include <cstdint>
#include <filesystem>

#include "sidnet/convert.hpp"

namespace sidnet {

// One manifest row; paths are stored as written (relative to the manifest).
struct SampleDesc {
  std::string id;
  std::string script;
  Level level = Level::Character;
  Origin origin = Origin::Online;
  std::string online_path;
  std::string offline_path;
};

struct Manifest {
  std::filesystem::path base_dir;
  std::vector<SampleDesc> samples;
  std::vector<std::string> labels;  // sorted distinct script names

  int label_index(const std::string& script) const;
};

// CSV with exact header id,script,level,modality,online_path,offline_path.
// All offending rows are reported together in one ManifestError.
Manifest load_manifest(const std::filesystem::path& path);
void write_manifest(const std::filesystem::path& path, const std::vector<SampleDesc>& samples);

// Load the payload files for one manifest row (modality column decides which
// side is the original; the other file, when listed, is ignored here).
Sample load_sample(const Manifest& m, const SampleDesc& desc);

// 70/10/20 stratified split per fold, rotated across the 10 folds so test
// sections cycle through the data. Indices refer to the labels vector.
struct FoldSpec {
  int fold_index = 0;
  std::vector<int> train, val, test;
};

std::vector<FoldSpec> make_folds(const std::vector<std::string>& labels, std::uint64_t seed);

// Deterministic helpers shared by folding and the synthesizer.
std::uint64_t mix_seed(std::uint64_t seed, std::uint64_t a, std::uint64_t b = 0,
                       std::uint64_t c = 0);

// Synthetic paired-modality pseudo-script corpus. Each script owns a disjoint
// set of stroke primitives; the "matra" family draws a headline bar across
// characters (and whole words), mimicking Indic connectivity. Every sample
// stores both the generator's true trajectory and its rasterization.
struct SynthConfig {
  std::uint64_t seed = 1;
  int num_scripts = 7;
  int chars_per_script = 20;
  int samples_per_char = 60;
  int words_per_script = 600;
  int word_len_min = 1;
  int word_len_max = 8;
  double jitter_rotation_deg = 6.0;
  double jitter_scale = 0.08;
  double point_noise = 0.012;
};

// Generates the corpus under out_dir (online/*.onkt, offline/*.pgm,
// manifest.csv) and returns the manifest path.
std::filesystem::path synth_dataset(const SynthConfig& cfg, const std::filesystem::path& out_dir);

// In-memory generation of one character sample (used by tests and the
// conversion round-trip suite): returns the true trajectory.
OnlinePointSequence synth_character(const SynthConfig& cfg, int script, int char_id,
                                    int sample_id);

std::vector<std::string> synth_script_names(int num_scripts);

}  // namespace sidnet
