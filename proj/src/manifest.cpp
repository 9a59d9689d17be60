#include <algorithm>
#include <limits>
#include <map>
#include <random>
#include <set>
#include <sstream>

#include "sidnet/dataio.hpp"
#include "sidnet/errors.hpp"
#include "sidnet/formats.hpp"

namespace sidnet {

namespace {

const char* kHeader = "id,script,level,modality,online_path,offline_path";

std::vector<std::string> split_csv(const std::string& line) {
  std::vector<std::string> fields;
  std::size_t start = 0;
  while (true) {
    std::size_t comma = line.find(',', start);
    if (comma == std::string::npos) {
      fields.push_back(line.substr(start));
      break;
    }
    fields.push_back(line.substr(start, comma - start));
    start = comma + 1;
  }
  return fields;
}

}  // namespace

int Manifest::label_index(const std::string& script) const {
  auto it = std::lower_bound(labels.begin(), labels.end(), script);
  if (it == labels.end() || *it != script)
    throw InputError("unknown script label '" + script + "'");
  return static_cast<int>(it - labels.begin());
}

Manifest load_manifest(const std::filesystem::path& path) {
  std::string bytes = read_file(path);
  Manifest m;
  m.base_dir = path.parent_path();

  std::vector<std::string> errors;
  std::istringstream in(bytes);
  std::string line;
  if (!std::getline(in, line) || line != kHeader)
    throw ManifestError("manifest " + path.string() + ": bad or missing header, expected '" +
                        std::string(kHeader) + "'");

  std::set<std::string> ids;
  std::set<std::string> scripts;
  int lineno = 1;
  while (std::getline(in, line)) {
    ++lineno;
    if (line.empty()) continue;
    auto fields = split_csv(line);
    auto complain = [&](const std::string& what) {
      errors.push_back("line " + std::to_string(lineno) + ": " + what);
    };
    if (fields.size() != 6) {
      complain("expected 6 columns, got " + std::to_string(fields.size()));
      continue;
    }
    SampleDesc d;
    d.id = fields[0];
    d.script = fields[1];
    if (d.id.empty()) complain("empty id");
    if (!ids.insert(d.id).second) complain("duplicate id '" + d.id + "'");
    if (d.script.empty()) complain("empty script label");

    if (fields[2] == "character") {
      d.level = Level::Character;
    } else if (fields[2] == "word") {
      d.level = Level::Word;
    } else {
      complain("bad level '" + fields[2] + "'");
    }
    if (fields[3] == "online") {
      d.origin = Origin::Online;
    } else if (fields[3] == "offline") {
      d.origin = Origin::Offline;
    } else {
      complain("bad modality '" + fields[3] + "'");
    }
    d.online_path = fields[4];
    d.offline_path = fields[5];

    const std::string& origin_path = d.origin == Origin::Online ? d.online_path : d.offline_path;
    if (origin_path.empty()) {
      complain("modality '" + fields[3] + "' with empty " + fields[3] + "_path");
    }
    for (const std::string& p : {d.online_path, d.offline_path})
      if (!p.empty() && !std::filesystem::exists(m.base_dir / p))
        complain("dangling path '" + p + "'");

    scripts.insert(d.script);
    m.samples.push_back(std::move(d));
  }

  if (!errors.empty()) {
    std::string msg = "manifest " + path.string() + ":";
    for (const auto& e : errors) msg += "\n  " + e;
    throw ManifestError(msg);
  }
  m.labels.assign(scripts.begin(), scripts.end());
  return m;
}

void write_manifest(const std::filesystem::path& path, const std::vector<SampleDesc>& samples) {
  std::string out = std::string(kHeader) + "\n";
  for (const auto& d : samples) {
    out += d.id + "," + d.script + "," + level_name(d.level) + "," + origin_name(d.origin) +
           "," + d.online_path + "," + d.offline_path + "\n";
  }
  write_file(path, out);
}

Sample load_sample(const Manifest& m, const SampleDesc& desc) {
  Sample s;
  s.id = desc.id;
  s.script = desc.script;
  s.level = desc.level;
  s.origin = desc.origin;
  if (desc.origin == Origin::Online) {
    s.online = parse_trajectory_file(read_file(m.base_dir / desc.online_path));
  } else {
    s.offline = parse_pgm(read_file(m.base_dir / desc.offline_path));
  }
  return s;
}

std::uint64_t mix_seed(std::uint64_t seed, std::uint64_t a, std::uint64_t b, std::uint64_t c) {
  // splitmix64 over a simple combination, for order-independent per-item rngs
  std::uint64_t x = seed ^ (a * 0x9E3779B97F4A7C15ull) ^ (b * 0xBF58476D1CE4E5B9ull) ^
                    (c * 0x94D049BB133111EBull);
  x += 0x9E3779B97F4A7C15ull;
  x = (x ^ (x >> 30)) * 0xBF58476D1CE4E5B9ull;
  x = (x ^ (x >> 27)) * 0x94D049BB133111EBull;
  return x ^ (x >> 31);
}

namespace {

// bias-free bounded draw, independent of the standard library's
// distribution implementations
std::uint64_t bounded(std::mt19937_64& rng, std::uint64_t n) {
  const std::uint64_t limit = std::numeric_limits<std::uint64_t>::max() -
                              std::numeric_limits<std::uint64_t>::max() % n;
  std::uint64_t v;
  do {
    v = rng();
  } while (v >= limit);
  return v % n;
}

}  // namespace

std::vector<FoldSpec> make_folds(const std::vector<std::string>& labels, std::uint64_t seed) {
  std::map<std::string, std::vector<int>> by_class;
  for (std::size_t i = 0; i < labels.size(); ++i)
    by_class[labels[i]].push_back(static_cast<int>(i));
  for (const auto& [cls, ids] : by_class)
    if (ids.size() < 10)
      throw InputError("make_folds: class '" + cls + "' has only " +
                       std::to_string(ids.size()) + " samples, need at least 10");

  // one shuffle per class, then rotated 70/10/20 cuts per fold
  std::map<std::string, std::vector<int>> shuffled;
  for (auto& [cls, ids] : by_class) {
    std::mt19937_64 rng(mix_seed(seed, std::hash<std::string>{}(cls)));
    auto v = ids;
    for (std::size_t i = v.size(); i > 1; --i)
      std::swap(v[i - 1], v[bounded(rng, i)]);
    shuffled[cls] = std::move(v);
  }

  std::vector<FoldSpec> folds(10);
  for (int f = 0; f < 10; ++f) {
    folds[static_cast<std::size_t>(f)].fold_index = f;
    for (const auto& [cls, v] : shuffled) {
      const int n = static_cast<int>(v.size());
      const int n_train = static_cast<int>(std::lround(0.7 * n));
      const int n_val = static_cast<int>(std::lround(0.1 * n));
      const int offset = static_cast<int>(static_cast<std::int64_t>(f) * n / 10);
      auto pick = [&](int k) { return v[static_cast<std::size_t>((offset + k) % n)]; };
      auto& fold = folds[static_cast<std::size_t>(f)];
      int k = 0;
      for (int i = 0; i < n_train; ++i) fold.train.push_back(pick(k++));
      for (int i = 0; i < n_val; ++i) fold.val.push_back(pick(k++));
      while (k < n) fold.test.push_back(pick(k++));
    }
  }
  return folds;
}

}  // namespace sidnet
