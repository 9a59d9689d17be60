#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <filesystem>
#include <random>
#include <set>

#include "sidnet/dataio.hpp"
#include "sidnet/formats.hpp"

using namespace sidnet;
namespace fs = std::filesystem;

namespace {

fs::path temp_dir(const std::string& tag) {
  auto dir = fs::temp_directory_path() / ("sidnet_test_" + tag);
  fs::remove_all(dir);
  fs::create_directories(dir);
  return dir;
}

// Reference Zhang-Suen oracle: an independent straightforward port kept
// deliberately unlike the implementation (works on a padded int grid).
std::vector<std::vector<int>> reference_zhang_suen(std::vector<std::vector<int>> g) {
  const int h = static_cast<int>(g.size());
  const int w = h ? static_cast<int>(g[0].size()) : 0;
  auto at = [&](int r, int c) { return (r < 0 || r >= h || c < 0 || c >= w) ? 0 : g[r][c]; };
  bool changed = true;
  while (changed) {
    changed = false;
    for (int phase = 0; phase < 2; ++phase) {
      std::vector<std::pair<int, int>> del;
      for (int r = 0; r < h; ++r)
        for (int c = 0; c < w; ++c) {
          if (!g[r][c]) continue;
          int n[9] = {0,
                      at(r - 1, c),     at(r - 1, c + 1), at(r, c + 1),
                      at(r + 1, c + 1), at(r + 1, c),     at(r + 1, c - 1),
                      at(r, c - 1),     at(r - 1, c - 1)};
          int b = 0;
          for (int k = 1; k <= 8; ++k) b += n[k];
          if (b < 2 || b > 6) continue;
          int a = 0;
          for (int k = 1; k <= 8; ++k)
            if (n[k] == 0 && n[k % 8 + 1] == 1) ++a;
          if (a != 1) continue;
          int c1 = phase == 0 ? n[1] * n[3] * n[5] : n[1] * n[3] * n[7];
          int c2 = phase == 0 ? n[3] * n[5] * n[7] : n[1] * n[5] * n[7];
          if (c1 == 0 && c2 == 0) del.emplace_back(r, c);
        }
      for (auto [r, c] : del) g[r][c] = 0;
      if (!del.empty()) changed = true;
    }
  }
  return g;
}

int count_components_8(const BinaryImage& img) {
  std::vector<std::uint8_t> seen(img.ink.size(), 0);
  int comps = 0;
  for (int r = 0; r < img.height; ++r)
    for (int c = 0; c < img.width; ++c) {
      if (!img.at(r, c) || seen[static_cast<std::size_t>(r * img.width + c)]) continue;
      ++comps;
      std::vector<std::pair<int, int>> stack{{r, c}};
      seen[static_cast<std::size_t>(r * img.width + c)] = 1;
      while (!stack.empty()) {
        auto [cr, cc] = stack.back();
        stack.pop_back();
        for (int dr = -1; dr <= 1; ++dr)
          for (int dc = -1; dc <= 1; ++dc) {
            int nr = cr + dr, nc = cc + dc;
            if (nr < 0 || nr >= img.height || nc < 0 || nc >= img.width) continue;
            if (!img.at(nr, nc) || seen[static_cast<std::size_t>(nr * img.width + nc)]) continue;
            seen[static_cast<std::size_t>(nr * img.width + nc)] = 1;
            stack.emplace_back(nr, nc);
          }
      }
    }
  return comps;
}

void check_partition_and_adjacency(const Skeleton& sk, const RecoveredTrajectory& rec) {
  std::set<std::pair<int, int>> seen;
  for (const auto& stroke : rec.strokes) {
    REQUIRE(!stroke.empty());
    for (std::size_t i = 0; i < stroke.size(); ++i) {
      auto [it, fresh] = seen.insert({stroke[i].row, stroke[i].col});
      CHECK(fresh);  // no pixel repeated
      CHECK(sk.image.at(stroke[i].row, stroke[i].col) == 1);
      if (i > 0) {
        int dr = std::abs(stroke[i].row - stroke[i - 1].row);
        int dc = std::abs(stroke[i].col - stroke[i - 1].col);
        CHECK(std::max(dr, dc) == 1);  // 8-adjacent
      }
    }
  }
  CHECK(static_cast<int>(seen.size()) == sk.pixel_count());
}

OnlinePointSequence one_stroke(std::initializer_list<Point> pts) {
  OnlinePointSequence s;
  s.strokes.emplace_back(pts);
  return s;
}

}  // namespace

TEST_CASE("rasterize a horizontal stroke at unit scale") {
  auto img = rasterize_trajectory(one_stroke({{0, 0}, {2, 0}}), 1.0, 0);
  CHECK(img.height == 1);
  CHECK(img.width == 3);
  for (int c = 0; c < 3; ++c) CHECK(img.at(0, c) == 0.0f);  // ink is dark
}

TEST_CASE("radius-1 dilation of a single dot is the 5-pixel plus shape") {
  auto img = rasterize_trajectory(one_stroke({{0, 0}, {0, 0}}), 1.0, 1);
  CHECK(img.height == 3);
  CHECK(img.width == 3);
  int ink = 0;
  for (float v : img.pixels) ink += v < 0.5f ? 1 : 0;
  CHECK(ink == 5);
  CHECK(img.at(1, 1) == 0.0f);
  CHECK(img.at(0, 1) == 0.0f);
  CHECK(img.at(0, 0) == 1.0f);  // corner stays background under a disc
}

TEST_CASE("separate strokes rasterize without connecting segments") {
  OnlinePointSequence two;
  two.strokes.push_back({{0, 0}, {3, 0}});
  two.strokes.push_back({{0, 6}, {3, 6}});
  auto img = rasterize_trajectory(two, 1.0, 0);
  // union of the two segments only: 8 ink pixels, nothing in rows 1..5
  int ink = 0;
  for (float v : img.pixels) ink += v < 0.5f ? 1 : 0;
  CHECK(ink == 8);
  for (int r = 1; r < 6; ++r)
    for (int c = 0; c < img.width; ++c) CHECK(img.at(r, c) == 1.0f);
}

TEST_CASE("rasterization is deterministic and auto scale fits height 32") {
  SynthConfig cfg;
  auto traj = synth_character(cfg, 2, 1, 0);
  auto a = rasterize_trajectory(traj, 0.0, 1);
  auto b = rasterize_trajectory(traj, 0.0, 1);
  CHECK(a.height == 32);
  CHECK(a.pixels == b.pixels);
}

TEST_CASE("skeletonize fixed points and the bar example") {
  BinaryImage dot = BinaryImage::blank(3, 3);
  dot.at(1, 1) = 1;
  auto sk = skeletonize(dot);
  CHECK(sk.pixel_count() == 1);
  CHECK(sk.image.at(1, 1) == 1);

  BinaryImage empty = BinaryImage::blank(4, 4);
  CHECK(skeletonize(empty).pixel_count() == 0);

  // 3-pixel-tall, 10-wide bar thins to a single-pixel line of width ~10,
  // matching the reference implementation exactly
  BinaryImage bar = BinaryImage::blank(7, 14);
  std::vector<std::vector<int>> grid(7, std::vector<int>(14, 0));
  for (int r = 2; r < 5; ++r)
    for (int c = 2; c < 12; ++c) {
      bar.at(r, c) = 1;
      grid[static_cast<std::size_t>(r)][static_cast<std::size_t>(c)] = 1;
    }
  auto thinned = skeletonize(bar);
  auto oracle = reference_zhang_suen(grid);
  int oracle_count = 0;
  for (int r = 0; r < 7; ++r)
    for (int c = 0; c < 14; ++c) {
      CHECK(thinned.image.at(r, c) == oracle[static_cast<std::size_t>(r)][static_cast<std::size_t>(c)]);
      oracle_count += oracle[static_cast<std::size_t>(r)][static_cast<std::size_t>(c)];
    }
  // one-pixel-tall line of roughly the bar's width (thinning erodes the ends)
  int rows_with_ink = 0;
  for (int r = 0; r < 7; ++r) {
    bool any = false;
    for (int c = 0; c < 14; ++c) any = any || thinned.image.at(r, c);
    rows_with_ink += any ? 1 : 0;
  }
  CHECK(rows_with_ink == 1);
  CHECK(thinned.pixel_count() == oracle_count);
  CHECK(thinned.pixel_count() >= 6);
  CHECK(thinned.pixel_count() <= 10);

  // output is a subset of the input ink
  for (int r = 0; r < 7; ++r)
    for (int c = 0; c < 14; ++c)
      if (thinned.image.at(r, c)) CHECK(bar.at(r, c) == 1);
}

TEST_CASE("skeletonize matches the reference oracle on random blobs") {
  std::mt19937 rng(57);
  for (int trial = 0; trial < 12; ++trial) {
    const int h = 16, w = 20;
    BinaryImage img = BinaryImage::blank(h, w);
    std::vector<std::vector<int>> grid(h, std::vector<int>(w, 0));
    // a few random rectangles, so shapes stay plausibly stroke-like
    for (int k = 0; k < 3; ++k) {
      int r0 = static_cast<int>(rng() % 10), c0 = static_cast<int>(rng() % 14);
      int rh = 2 + static_cast<int>(rng() % 4), cw = 2 + static_cast<int>(rng() % 6);
      for (int r = r0; r < std::min(h, r0 + rh); ++r)
        for (int c = c0; c < std::min(w, c0 + cw); ++c) {
          img.at(r, c) = 1;
          grid[static_cast<std::size_t>(r)][static_cast<std::size_t>(c)] = 1;
        }
    }
    auto mine = skeletonize(img);
    auto oracle = reference_zhang_suen(grid);
    // plain Zhang-Suen can erase a tiny component outright; the
    // implementation keeps its last pixel, so compare against the oracle
    // only where the oracle preserved the component count itself
    BinaryImage oracle_img = BinaryImage::blank(h, w);
    for (int r = 0; r < h; ++r)
      for (int c = 0; c < w; ++c)
        oracle_img.at(r, c) =
            static_cast<std::uint8_t>(oracle[static_cast<std::size_t>(r)][static_cast<std::size_t>(c)]);
    if (count_components_8(oracle_img) == count_components_8(img)) {
      for (int r = 0; r < h; ++r)
        for (int c = 0; c < w; ++c)
          CHECK(mine.image.at(r, c) ==
                oracle[static_cast<std::size_t>(r)][static_cast<std::size_t>(c)]);
    }

    // idempotence and connectivity preservation
    auto again = skeletonize(mine.image);
    CHECK(again.image.ink == mine.image.ink);
    CHECK(count_components_8(mine.image) == count_components_8(img));
  }
}

TEST_CASE("recover a horizontal line as one ordered stroke") {
  BinaryImage img = BinaryImage::blank(1, 3);
  img.at(0, 0) = img.at(0, 1) = img.at(0, 2) = 1;
  Skeleton sk{img};
  auto rec = recover_trajectory(sk);
  REQUIRE(rec.strokes.size() == 1);
  REQUIRE(rec.strokes[0].size() == 3);
  CHECK(rec.strokes[0][0] == PixelPoint{0, 0});
  CHECK(rec.strokes[0][1] == PixelPoint{0, 1});
  CHECK(rec.strokes[0][2] == PixelPoint{0, 2});
}

TEST_CASE("recover an L shape as a single stroke through the corner") {
  BinaryImage img = BinaryImage::blank(5, 5);
  for (int r = 0; r < 5; ++r) img.at(r, 0) = 1;
  for (int c = 1; c < 5; ++c) img.at(4, c) = 1;
  Skeleton sk{img};
  auto rec = recover_trajectory(sk);
  REQUIRE(rec.strokes.size() == 1);
  CHECK(static_cast<int>(rec.strokes[0].size()) == 9);
  check_partition_and_adjacency(sk, rec);
  CHECK(rec.strokes[0].front() == PixelPoint{0, 0});
  CHECK(rec.strokes[0].back() == PixelPoint{4, 4});
}

TEST_CASE("recover a T shape as exactly two strokes covering all pixels") {
  BinaryImage img = BinaryImage::blank(5, 5);
  for (int c = 0; c < 5; ++c) img.at(0, c) = 1;
  for (int r = 1; r < 5; ++r) img.at(r, 2) = 1;
  Skeleton sk{img};
  auto rec = recover_trajectory(sk);
  CHECK(rec.strokes.size() == 2);
  check_partition_and_adjacency(sk, rec);
}

TEST_CASE("recovery satisfies partition and adjacency on synthetic characters") {
  SynthConfig cfg;
  cfg.seed = 99;
  for (int s = 0; s < 7; ++s)
    for (int k = 0; k < 4; ++k) {
      auto traj = synth_character(cfg, s, k, k);
      auto img = rasterize_trajectory(traj, 0.0, 1);
      auto sk = skeletonize(binarize(img, /*ink_is_high=*/false));
      auto rec = recover_trajectory(sk);
      check_partition_and_adjacency(sk, rec);
      // full coverage: every skeleton pixel is recovered
      CHECK(rec.total_points() == sk.pixel_count());
    }
}

TEST_CASE("trajectory downsampling caps the point count") {
  BinaryImage img = BinaryImage::blank(1, 600);
  for (int c = 0; c < 600; ++c) img.at(0, c) = 1;
  Skeleton sk{img};
  auto rec = recover_trajectory(sk);
  auto seq = to_point_sequence(rec, 256);
  CHECK(seq.total_points() <= 256);
  CHECK(seq.total_points() >= 200);
  CHECK(seq.strokes[0].front().x == 0.0);
  CHECK(seq.strokes[0].back().x == 599.0);
}

TEST_CASE("convert fills the missing modality and sets the origin tag") {
  SynthConfig cfg;
  auto traj = synth_character(cfg, 4, 3, 7);  // matra family

  Sample online_only;
  online_only.id = "a";
  online_only.script = "matra";
  online_only.online = traj;
  auto a = convert(online_only);
  CHECK(a.origin == Origin::Online);
  CHECK(a.offline.has_value());
  CHECK(a.offline->height == 32);

  Sample offline_only;
  offline_only.id = "b";
  offline_only.script = "matra";
  offline_only.offline = a.offline;
  auto b = convert(offline_only);
  CHECK(b.origin == Origin::Offline);
  CHECK(b.online.has_value());
  CHECK(b.online->total_points() >= 2);

  Sample both = a;
  CHECK_THROWS_AS(convert(both), InputError);
  Sample neither;
  neither.id = "c";
  CHECK_THROWS_AS(convert(neither), InputError);
}

TEST_CASE("online to offline to online round trip covers the rendered skeleton") {
  SynthConfig cfg;
  cfg.seed = 1234;
  int checked = 0;
  for (int s = 0; s < 7; ++s)
    for (int k = 0; k < 3; ++k) {
      auto traj = synth_character(cfg, s, k, 10 + k);
      auto img = rasterize_trajectory(traj, 0.0, 1);
      auto sk = skeletonize(binarize(img, false));
      auto rec = recover_trajectory(sk);
      // recovered point set covers >= 95% of the skeleton (here: all of it)
      std::set<std::pair<int, int>> got;
      for (const auto& stroke : rec.strokes)
        for (const auto& p : stroke) got.insert({p.row, p.col});
      int covered = 0;
      for (int r = 0; r < sk.image.height; ++r)
        for (int c = 0; c < sk.image.width; ++c)
          if (sk.image.at(r, c) && got.count({r, c})) ++covered;
      CHECK(covered == sk.pixel_count());
      ++checked;
    }
  CHECK(checked == 21);
}

TEST_CASE("ONKT parse and canonical round trip") {
  auto seq = parse_trajectory_file("ONKT 1\nP 0 0 0\nP 0 1.5 0\n");
  REQUIRE(seq.strokes.size() == 1);
  REQUIRE(seq.strokes[0].size() == 2);
  CHECK(seq.strokes[0][1].x == 1.5);

  OnlinePointSequence two;
  two.strokes.push_back({{0.125, 3.0}, {2.5, 4.75}});
  two.strokes.push_back({{1.0, 1.0}, {0.0, 2.0}, {5.25, 0.5}});
  std::string canonical = write_trajectory_file(two);
  auto parsed = parse_trajectory_file(canonical);
  CHECK(write_trajectory_file(parsed) == canonical);

  CHECK_THROWS_AS(parse_trajectory_file("ONKT 2\nP 0 0 0\n"), FormatError);
  CHECK_THROWS_AS(parse_trajectory_file("NOPE\n"), FormatError);
  CHECK_THROWS_AS(parse_trajectory_file("ONKT 1\nP 1 0 0\n"), FormatError);          // starts at 1
  CHECK_THROWS_AS(parse_trajectory_file("ONKT 1\nP 0 0 0\nP 0 x 0\n"), FormatError); // bad number
  // non-monotone stroke index
  CHECK_THROWS_AS(parse_trajectory_file("ONKT 1\nP 0 0 0\nP 1 1 1\nP 0 2 2\n"), FormatError);
  // line numbers are reported
  try {
    parse_trajectory_file("ONKT 1\nP 0 0 0\nP 0 oops 0\n");
    CHECK(false);
  } catch (const FormatError& e) {
    CHECK(std::string(e.what()).find("line 3") != std::string::npos);
  }
}

TEST_CASE("PGM parse and round trip") {
  std::string bytes = "P5\n4 2\n255\n";
  for (int i = 0; i < 8; ++i) bytes.push_back(static_cast<char>(i * 30));
  auto img = parse_pgm(bytes);
  CHECK(img.height == 2);
  CHECK(img.width == 4);
  CHECK(img.pixels[5] == doctest::Approx(150.0f / 255.0f));

  CHECK(write_pgm(img) == bytes);

  std::string truncated = bytes.substr(0, bytes.size() - 1);
  CHECK_THROWS_AS(parse_pgm(truncated), FormatError);
  CHECK_THROWS_AS(parse_pgm("P2\n1 1\n255\n0"), FormatError);
  CHECK_THROWS_AS(parse_pgm("P5\n1 1\n127\n\x40"), FormatError);
}

TEST_CASE("manifest loading and validation") {
  auto dir = temp_dir("manifest");
  write_file(dir / "t.onkt", write_trajectory_file(one_stroke({{0, 0}, {1, 1}})));
  OfflineImage img = OfflineImage::blank(4, 4, 1.0f);
  img.at(1, 1) = 0.0f;
  write_file(dir / "t.pgm", write_pgm(img));

  write_file(dir / "manifest.csv",
             "id,script,level,modality,online_path,offline_path\n"
             "s1,alpha,character,online,t.onkt,t.pgm\n"
             "s2,beta,word,offline,,t.pgm\n"
             "s3,alpha,character,offline,t.onkt,t.pgm\n");
  auto m = load_manifest(dir / "manifest.csv");
  CHECK(m.samples.size() == 3);
  CHECK(m.labels == std::vector<std::string>{"alpha", "beta"});
  CHECK(m.label_index("beta") == 1);
  CHECK_THROWS_AS(m.label_index("gamma"), InputError);
  auto s = load_sample(m, m.samples[0]);
  CHECK(s.online.has_value());
  CHECK(!s.offline.has_value());

  // modality=online with empty online_path
  write_file(dir / "bad1.csv",
             "id,script,level,modality,online_path,offline_path\n"
             "s1,alpha,character,online,,t.pgm\n");
  CHECK_THROWS_AS(load_manifest(dir / "bad1.csv"), ManifestError);

  // duplicate id is named in the error
  write_file(dir / "bad2.csv",
             "id,script,level,modality,online_path,offline_path\n"
             "dup,alpha,character,online,t.onkt,\n"
             "dup,alpha,character,online,t.onkt,\n");
  try {
    load_manifest(dir / "bad2.csv");
    CHECK(false);
  } catch (const ManifestError& e) {
    CHECK(std::string(e.what()).find("dup") != std::string::npos);
  }

  // dangling path + bad header + all offenders aggregated
  write_file(dir / "bad3.csv",
             "id,script,level,modality,online_path,offline_path\n"
             "a,alpha,character,online,missing.onkt,\n"
             "b,alpha,nope,offline,,t.pgm\n");
  try {
    load_manifest(dir / "bad3.csv");
    CHECK(false);
  } catch (const ManifestError& e) {
    std::string msg = e.what();
    CHECK(msg.find("missing.onkt") != std::string::npos);
    CHECK(msg.find("nope") != std::string::npos);
  }
}

TEST_CASE("stratified folds") {
  std::vector<std::string> labels;
  for (int c = 0; c < 5; ++c)
    for (int i = 0; i < 20; ++i) labels.push_back("cls" + std::to_string(c));

  auto folds = make_folds(labels, 42);
  REQUIRE(folds.size() == 10);
  for (const auto& f : folds) {
    CHECK(f.train.size() == 70);
    CHECK(f.val.size() == 10);
    CHECK(f.test.size() == 20);
    std::set<int> all;
    for (auto* part : {&f.train, &f.val, &f.test})
      for (int i : *part) CHECK(all.insert(i).second);
    CHECK(all.size() == labels.size());
    // per-class proportions within one sample of 70/10/20
    for (int c = 0; c < 5; ++c) {
      auto count = [&](const std::vector<int>& part) {
        int n = 0;
        for (int i : part) n += labels[static_cast<std::size_t>(i)] == "cls" + std::to_string(c);
        return n;
      };
      CHECK(std::abs(count(f.train) - 14) <= 1);
      CHECK(std::abs(count(f.val) - 2) <= 1);
      CHECK(std::abs(count(f.test) - 4) <= 1);
    }
  }

  auto again = make_folds(labels, 42);
  for (int f = 0; f < 10; ++f) {
    CHECK(again[static_cast<std::size_t>(f)].train == folds[static_cast<std::size_t>(f)].train);
    CHECK(again[static_cast<std::size_t>(f)].test == folds[static_cast<std::size_t>(f)].test);
  }

  // rotation: test sections differ across folds
  CHECK(folds[0].test != folds[5].test);

  std::vector<std::string> sparse(9, "only");
  CHECK_THROWS_AS(make_folds(sparse, 1), InputError);
}

TEST_CASE("synthetic corpus generation is deterministic and parses back") {
  SynthConfig cfg;
  cfg.seed = 7;
  cfg.chars_per_script = 2;
  cfg.samples_per_char = 3;
  cfg.words_per_script = 2;

  auto dir_a = temp_dir("synth_a");
  auto dir_b = temp_dir("synth_b");
  auto man_a = synth_dataset(cfg, dir_a);
  auto man_b = synth_dataset(cfg, dir_b);

  CHECK(read_file(man_a) == read_file(man_b));
  auto m = load_manifest(man_a);
  CHECK(m.samples.size() == 7 * (2 * 3 + 2));
  CHECK(m.labels.size() == 7);

  int online_origin = 0;
  for (const auto& d : m.samples) {
    // format closure: every payload parses back through the canonical parsers
    auto traj = parse_trajectory_file(read_file(dir_a / d.online_path));
    CHECK(traj.total_points() >= 2);
    auto img = parse_pgm(read_file(dir_a / d.offline_path));
    CHECK(img.height == 32);
    CHECK(read_file(dir_a / d.offline_path) == read_file(dir_b / d.offline_path));
    online_origin += d.origin == Origin::Online ? 1 : 0;
  }
  // both origins present in roughly equal measure
  CHECK(online_origin > 0);
  CHECK(online_origin < static_cast<int>(m.samples.size()));
}

TEST_CASE("nearest-centroid separability of the synthetic scripts") {
  SynthConfig cfg;
  cfg.seed = 11;
  cfg.chars_per_script = 6;
  cfg.samples_per_char = 8;

  // 8x8 downsampled raw character images, half train half test
  auto featurize = [&](int script, int chr, int sample) {
    auto img = rasterize_trajectory(synth_character(cfg, script, chr, sample), 0.0, 1);
    auto prep = preprocess_offline(img, /*character_mode=*/true);
    std::vector<double> f(64, 0.0);
    for (int r = 0; r < 32; ++r)
      for (int c = 0; c < 32; ++c) f[static_cast<std::size_t>((r / 4) * 8 + c / 4)] += prep.at(r, c);
    return f;
  };

  std::vector<std::vector<double>> centroids(7, std::vector<double>(64, 0.0));
  for (int s = 0; s < 7; ++s) {
    int n = 0;
    for (int c = 0; c < cfg.chars_per_script; ++c)
      for (int k = 0; k < 4; ++k) {
        auto f = featurize(s, c, k);
        for (int i = 0; i < 64; ++i) centroids[static_cast<std::size_t>(s)][static_cast<std::size_t>(i)] += f[static_cast<std::size_t>(i)];
        ++n;
      }
    for (auto& v : centroids[static_cast<std::size_t>(s)]) v /= n;
  }

  int correct = 0, total = 0;
  for (int s = 0; s < 7; ++s)
    for (int c = 0; c < cfg.chars_per_script; ++c)
      for (int k = 4; k < 8; ++k) {
        auto f = featurize(s, c, k);
        int best = -1;
        double best_d = 1e300;
        for (int t = 0; t < 7; ++t) {
          double d = 0;
          for (int i = 0; i < 64; ++i) {
            double diff = f[static_cast<std::size_t>(i)] - centroids[static_cast<std::size_t>(t)][static_cast<std::size_t>(i)];
            d += diff * diff;
          }
          if (d < best_d) {
            best_d = d;
            best = t;
          }
        }
        correct += best == s ? 1 : 0;
        ++total;
      }
  double acc = static_cast<double>(correct) / total;
  INFO("nearest-centroid accuracy ", acc);
  CHECK(acc > 1.0 / 7.0);
}
