#include <limits>
#include <cmath>
#include <random>

#include "sidnet/dataio.hpp"
#include "sidnet/errors.hpp"
#include "sidnet/formats.hpp"

namespace sidnet {

namespace {

constexpr double kPi = 3.14159265358979323846;

// A primitive is a parametric curve t in [0,1] -> (x,y) inside the unit box,
// y growing downward. Seven shape families, four primitives each; each
// pseudo-script owns one family, so alphabets are disjoint by construction.
using Curve = Point (*)(double);

// straight lines
Point line_v(double t) { return {0.5, t}; }
Point line_h(double t) { return {t, 0.5}; }
Point line_d1(double t) { return {t, t}; }
Point line_d2(double t) { return {t, 1.0 - t}; }
// half circles
Point half_right(double t) { return {0.5 + 0.5 * std::sin(kPi * t), 0.5 - 0.5 * std::cos(kPi * t)}; }
Point half_left(double t) { return {0.5 - 0.5 * std::sin(kPi * t), 0.5 - 0.5 * std::cos(kPi * t)}; }
Point half_down(double t) { return {0.5 - 0.5 * std::cos(kPi * t), 0.5 + 0.5 * std::sin(kPi * t)}; }
Point half_up(double t) { return {0.5 - 0.5 * std::cos(kPi * t), 0.5 - 0.5 * std::sin(kPi * t)}; }
// quarter arcs (the matra family's letters)
Point quart_ne(double t) { return {std::sin(0.5 * kPi * t), 1.0 - std::cos(0.5 * kPi * t)}; }
Point quart_nw(double t) { return {1.0 - std::sin(0.5 * kPi * t), 1.0 - std::cos(0.5 * kPi * t)}; }
Point quart_se(double t) { return {std::cos(0.5 * kPi * t), std::sin(0.5 * kPi * t)}; }
Point quart_sw(double t) { return {1.0 - std::cos(0.5 * kPi * t), std::sin(0.5 * kPi * t)}; }
// hooks: a long limb ending in a curl
Point hook_dr(double t) {
  if (t < 0.6) return {0.2, t / 0.6 * 0.7};
  double u = (t - 0.6) / 0.4 * kPi;
  return {0.2 + 0.3 - 0.3 * std::cos(u), 0.7 + 0.3 * std::sin(u) * 0.9};
}
Point hook_dl(double t) {
  Point p = hook_dr(t);
  return {1.0 - p.x, p.y};
}
Point hook_ur(double t) {
  Point p = hook_dr(t);
  return {p.x, 1.0 - p.y};
}
Point hook_ul(double t) {
  Point p = hook_dr(t);
  return {1.0 - p.x, 1.0 - p.y};
}
// zigzags
Point zig_n(double t) {
  if (t < 1.0 / 3) return {t * 3 * 0.0 + 0.1, 1.0 - t * 3};
  if (t < 2.0 / 3) return {0.1 + (t - 1.0 / 3) * 3 * 0.8, (t - 1.0 / 3) * 3};
  return {0.9, 1.0 - (t - 2.0 / 3) * 3};
}
Point zig_z(double t) {
  if (t < 1.0 / 3) return {t * 3, 0.0};
  if (t < 2.0 / 3) return {1.0 - (t - 1.0 / 3) * 3, (t - 1.0 / 3) * 3};
  return {(t - 2.0 / 3) * 3, 1.0};
}
Point zig_w(double t) {
  double x = t;
  double y = 1.0 - std::abs(std::fmod(t * 4.0, 2.0) - 1.0);
  return {x, y};
}
Point zig_m(double t) {
  Point p = zig_w(t);
  return {p.x, 1.0 - p.y};
}
// waves
Point wave_h1(double t) { return {t, 0.5 + 0.45 * std::sin(2 * kPi * t)}; }
Point wave_h2(double t) { return {t, 0.5 + 0.35 * std::sin(4 * kPi * t)}; }
Point wave_v1(double t) { return {0.5 + 0.45 * std::sin(2 * kPi * t), t}; }
Point wave_v2(double t) { return {0.5 + 0.35 * std::sin(4 * kPi * t), t}; }
// loops
Point loop_circle(double t) {
  return {0.5 + 0.45 * std::cos(2 * kPi * t), 0.5 + 0.45 * std::sin(2 * kPi * t)};
}
Point loop_tall(double t) {
  return {0.5 + 0.25 * std::cos(2 * kPi * t), 0.5 + 0.48 * std::sin(2 * kPi * t)};
}
Point loop_wide(double t) {
  return {0.5 + 0.48 * std::cos(2 * kPi * t), 0.5 + 0.25 * std::sin(2 * kPi * t)};
}
Point loop_drop(double t) {
  double r = 0.45 * (1.0 - 0.55 * std::sin(kPi * t));
  return {0.5 + r * std::cos(2 * kPi * t + kPi / 2), 0.45 + r * std::sin(2 * kPi * t + kPi / 2)};
}

struct Family {
  const char* name;
  Curve curves[4];
  bool matra;  // headline bar across characters and words
};

// sorted by name; registry order therefore matches the generator order
const Family kFamilies[7] = {
    {"arcs", {half_right, half_left, half_down, half_up}, false},
    {"hooks", {hook_dr, hook_dl, hook_ur, hook_ul}, false},
    {"lines", {line_v, line_h, line_d1, line_d2}, false},
    {"loops", {loop_circle, loop_tall, loop_wide, loop_drop}, false},
    {"matra", {quart_ne, quart_nw, quart_se, quart_sw}, true},
    {"waves", {wave_h1, wave_h2, wave_v1, wave_v2}, false},
    {"zigs", {zig_n, zig_z, zig_w, zig_m}, false},
};

std::uint64_t bounded(std::mt19937_64& rng, std::uint64_t n) {
  const std::uint64_t limit = std::numeric_limits<std::uint64_t>::max() -
                              std::numeric_limits<std::uint64_t>::max() % n;
  std::uint64_t v;
  do {
    v = rng();
  } while (v >= limit);
  return v % n;
}

double uniform(std::mt19937_64& rng, double lo, double hi) {
  return lo + (hi - lo) * (static_cast<double>(rng() >> 11) * 0x1.0p-53);
}

struct Placement {
  int curve;     // index into the family
  double dx, dy; // template offset
  double sx, sy; // template scale
};

struct CharTemplate {
  std::vector<Placement> parts;
  double width = 1.0;
};

CharTemplate make_template(const SynthConfig& cfg, int script, int char_id) {
  std::mt19937_64 rng(mix_seed(cfg.seed, 0xC0DE, static_cast<std::uint64_t>(script),
                               static_cast<std::uint64_t>(char_id)));
  CharTemplate tpl;
  const int n_parts = 1 + static_cast<int>(bounded(rng, 4));
  double x = 0.0;
  for (int i = 0; i < n_parts; ++i) {
    Placement p;
    p.curve = static_cast<int>(bounded(rng, 4));
    p.sx = uniform(rng, 0.55, 0.95);
    p.sy = uniform(rng, 0.6, 1.0);
    p.dx = x + uniform(rng, 0.0, 0.1);
    p.dy = uniform(rng, 0.0, 1.0 - p.sy);
    x = p.dx + p.sx * uniform(rng, 0.55, 0.8);
    tpl.parts.push_back(p);
  }
  tpl.width = 0.0;
  for (const auto& p : tpl.parts) tpl.width = std::max(tpl.width, p.dx + p.sx);
  return tpl;
}

// One jittered rendering of a template at a given x offset.
void emit_character(const SynthConfig& cfg, const Family& fam, const CharTemplate& tpl,
                    std::mt19937_64& rng, double x_offset, int points_per_stroke,
                    OnlinePointSequence& out, double* width_out, bool add_matra) {
  const double rot_range = cfg.jitter_rotation_deg * kPi / 180.0;
  double width = tpl.width;
  for (const auto& part : tpl.parts) {
    const double rot = uniform(rng, -rot_range, rot_range);
    const double cs = std::cos(rot), sn = std::sin(rot);
    const double scale = 1.0 + uniform(rng, -cfg.jitter_scale, cfg.jitter_scale);
    const double jx = uniform(rng, -0.02, 0.02), jy = uniform(rng, -0.02, 0.02);
    std::vector<Point> stroke;
    stroke.reserve(static_cast<std::size_t>(points_per_stroke));
    for (int k = 0; k < points_per_stroke; ++k) {
      double t = static_cast<double>(k) / (points_per_stroke - 1);
      Point p = fam.curves[part.curve](t);
      // center, rotate, scale, place
      double cx = (p.x - 0.5) * part.sx * scale, cy = (p.y - 0.5) * part.sy * scale;
      double rx = cx * cs - cy * sn, ry = cx * sn + cy * cs;
      double px = rx + part.dx + part.sx * 0.5 + jx + x_offset;
      double py = ry + part.dy + part.sy * 0.5 + jy;
      px += uniform(rng, -cfg.point_noise, cfg.point_noise);
      py += uniform(rng, -cfg.point_noise, cfg.point_noise);
      stroke.push_back({px, py});
    }
    out.strokes.push_back(std::move(stroke));
  }
  if (add_matra && fam.matra) {
    // per-character headline: a bar across the character's top
    std::vector<Point> bar;
    const int n = std::max(4, points_per_stroke / 2);
    for (int k = 0; k < n; ++k) {
      double t = static_cast<double>(k) / (n - 1);
      bar.push_back({x_offset - 0.05 + t * (width + 0.1),
                     -0.08 + uniform(rng, -cfg.point_noise, cfg.point_noise)});
    }
    out.strokes.push_back(std::move(bar));
  }
  if (width_out) *width_out = width;
}

OnlinePointSequence synth_word(const SynthConfig& cfg, int script, int word_id,
                               std::string* text_out) {
  const Family& fam = kFamilies[script];
  std::mt19937_64 rng(mix_seed(cfg.seed, 0x0D0, static_cast<std::uint64_t>(script),
                               static_cast<std::uint64_t>(word_id)));
  const int len = cfg.word_len_min +
                  static_cast<int>(bounded(
                      rng, static_cast<std::uint64_t>(cfg.word_len_max - cfg.word_len_min + 1)));
  // budget trajectory points so even 8-character words stay under 256 points
  const int pts = std::max(5, std::min(11, 240 / (len * 4)));

  OnlinePointSequence word;
  double x = 0.0;
  std::string text;
  for (int i = 0; i < len; ++i) {
    int char_id = static_cast<int>(bounded(rng, static_cast<std::uint64_t>(cfg.chars_per_script)));
    text += static_cast<char>('a' + char_id % 26);
    CharTemplate tpl = make_template(cfg, script, char_id);
    double width = tpl.width;
    emit_character(cfg, fam, tpl, rng, x, pts, word, &width, /*add_matra=*/false);
    x += width * uniform(rng, 1.02, 1.12);
  }
  if (fam.matra) {
    // one continuous headline across the whole word, creating the junctions
    // that make stroke recovery interesting
    std::vector<Point> bar;
    const int n = std::max(6, 2 * len);
    for (int k = 0; k < n; ++k) {
      double t = static_cast<double>(k) / (n - 1);
      bar.push_back({-0.05 + t * (x + 0.1),
                     -0.08 + uniform(rng, -cfg.point_noise, cfg.point_noise)});
    }
    word.strokes.push_back(std::move(bar));
  }
  if (text_out) *text_out = text;
  return word;
}

}  // namespace

std::vector<std::string> synth_script_names(int num_scripts) {
  if (num_scripts < 1 || num_scripts > 7)
    throw InputError("synth: 1..7 scripts supported, got " + std::to_string(num_scripts));
  std::vector<std::string> names;
  for (int i = 0; i < num_scripts; ++i) names.emplace_back(kFamilies[i].name);
  return names;
}

OnlinePointSequence synth_character(const SynthConfig& cfg, int script, int char_id,
                                    int sample_id) {
  if (script < 0 || script >= cfg.num_scripts) throw InputError("synth: bad script index");
  const Family& fam = kFamilies[script];
  std::mt19937_64 rng(mix_seed(cfg.seed, 0xCA4, static_cast<std::uint64_t>(script),
                               static_cast<std::uint64_t>(char_id) * 100003u +
                                   static_cast<std::uint64_t>(sample_id)));
  CharTemplate tpl = make_template(cfg, script, char_id);
  OnlinePointSequence seq;
  const int pts = 9 + static_cast<int>(bounded(rng, 3));
  emit_character(cfg, fam, tpl, rng, 0.0, pts, seq, nullptr, /*add_matra=*/true);
  return seq;
}

std::filesystem::path synth_dataset(const SynthConfig& cfg,
                                    const std::filesystem::path& out_dir) {
  if (cfg.num_scripts < 1 || cfg.num_scripts > 7)
    throw InputError("synth: 1..7 scripts supported");
  if (cfg.chars_per_script < 1 || cfg.samples_per_char < 0 || cfg.words_per_script < 0)
    throw InputError("synth: non-positive corpus dimensions");
  if (cfg.word_len_min < 1 || cfg.word_len_max < cfg.word_len_min || cfg.word_len_max > 8)
    throw InputError("synth: word length range must sit inside [1,8]");

  std::error_code ec;
  std::filesystem::create_directories(out_dir / "online", ec);
  std::filesystem::create_directories(out_dir / "offline", ec);
  if (!std::filesystem::is_directory(out_dir / "online") ||
      !std::filesystem::is_directory(out_dir / "offline"))
    throw IoError("synth: cannot create output directories under " + out_dir.string());

  auto names = synth_script_names(cfg.num_scripts);
  std::vector<SampleDesc> rows;
  std::uint64_t ordinal = 0;

  auto emit = [&](const std::string& id, const std::string& script, Level level,
                  const OnlinePointSequence& traj) {
    OfflineImage img = rasterize_trajectory(traj, 0.0, 1);
    const std::string onkt_rel = "online/" + id + ".onkt";
    const std::string pgm_rel = "offline/" + id + ".pgm";
    write_file(out_dir / onkt_rel, write_trajectory_file(traj));
    write_file(out_dir / pgm_rel, write_pgm(img));
    SampleDesc d;
    d.id = id;
    d.script = script;
    d.level = level;
    d.origin = (ordinal++ % 2 == 0) ? Origin::Online : Origin::Offline;
    d.online_path = onkt_rel;
    d.offline_path = pgm_rel;
    rows.push_back(std::move(d));
  };

  for (int s = 0; s < cfg.num_scripts; ++s) {
    for (int c = 0; c < cfg.chars_per_script; ++c)
      for (int k = 0; k < cfg.samples_per_char; ++k) {
        std::string id = "c_" + names[static_cast<std::size_t>(s)] + "_" + std::to_string(c) +
                         "_" + std::to_string(k);
        emit(id, names[static_cast<std::size_t>(s)], Level::Character,
             synth_character(cfg, s, c, k));
      }
    for (int w = 0; w < cfg.words_per_script; ++w) {
      std::string id = "w_" + names[static_cast<std::size_t>(s)] + "_" + std::to_string(w);
      emit(id, names[static_cast<std::size_t>(s)], Level::Word,
           synth_word(cfg, s, w, nullptr));
    }
  }

  auto manifest_path = out_dir / "manifest.csv";
  write_manifest(manifest_path, rows);
  return manifest_path;
}

}  // namespace sidnet
