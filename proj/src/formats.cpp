#include "sidnet/formats.hpp"

#include <array>
#include <cctype>
#include <cstdio>
#include <cstring>
#include <fstream>

#include "sidnet/errors.hpp"

namespace sidnet {

namespace {

[[noreturn]] void fail(const std::string& what, int line) {
  throw FormatError(what + " (line " + std::to_string(line) + ")");
}

bool parse_number(const std::string& tok, double& out) {
  if (tok.empty()) return false;
  char* end = nullptr;
  out = std::strtod(tok.c_str(), &end);
  return end == tok.c_str() + tok.size() && std::isfinite(out);
}

std::vector<std::string> split_ws(const std::string& line) {
  std::vector<std::string> toks;
  std::size_t i = 0;
  while (i < line.size()) {
    while (i < line.size() && (line[i] == ' ' || line[i] == '\t')) ++i;
    std::size_t j = i;
    while (j < line.size() && line[j] != ' ' && line[j] != '\t') ++j;
    if (j > i) toks.push_back(line.substr(i, j - i));
    i = j;
  }
  return toks;
}

}  // namespace

OnlinePointSequence parse_trajectory_file(const std::string& bytes) {
  std::vector<std::string> lines;
  std::size_t start = 0;
  while (start <= bytes.size()) {
    std::size_t nl = bytes.find('\n', start);
    if (nl == std::string::npos) {
      if (start < bytes.size()) lines.push_back(bytes.substr(start));
      break;
    }
    lines.push_back(bytes.substr(start, nl - start));
    start = nl + 1;
  }
  if (lines.empty()) fail("empty trajectory file", 1);
  if (lines[0] != "ONKT 1") {
    if (lines[0].rfind("ONKT ", 0) == 0) fail("unsupported ONKT version '" + lines[0] + "'", 1);
    fail("bad magic, expected 'ONKT 1'", 1);
  }

  OnlinePointSequence seq;
  int current_stroke = -1;
  for (std::size_t li = 1; li < lines.size(); ++li) {
    const int lineno = static_cast<int>(li) + 1;
    if (lines[li].empty()) continue;
    auto toks = split_ws(lines[li]);
    if (toks.size() != 4 || toks[0] != "P") fail("expected 'P <stroke> <x> <y>'", lineno);
    double stroke_d, x, y;
    if (!parse_number(toks[1], stroke_d) || stroke_d != std::floor(stroke_d) || stroke_d < 0)
      fail("unparsable stroke index '" + toks[1] + "'", lineno);
    const int stroke = static_cast<int>(stroke_d);
    if (!parse_number(toks[2], x)) fail("unparsable x coordinate '" + toks[2] + "'", lineno);
    if (!parse_number(toks[3], y)) fail("unparsable y coordinate '" + toks[3] + "'", lineno);
    if (current_stroke == -1 && stroke != 0) fail("stroke indices must start at 0", lineno);
    if (stroke < current_stroke) fail("non-monotone stroke index", lineno);
    if (stroke > current_stroke + 1)
      fail("stroke index jumps from " + std::to_string(current_stroke) + " to " +
               std::to_string(stroke),
           lineno);
    if (stroke == current_stroke + 1) {
      seq.strokes.emplace_back();
      current_stroke = stroke;
    }
    seq.strokes.back().push_back({x, y});
  }
  if (seq.total_points() < 2) throw FormatError("trajectory holds fewer than 2 points");
  return seq;
}

std::string write_trajectory_file(const OnlinePointSequence& seq) {
  std::string out = "ONKT 1\n";
  char buf[96];
  for (std::size_t s = 0; s < seq.strokes.size(); ++s)
    for (const auto& p : seq.strokes[s]) {
      std::snprintf(buf, sizeof(buf), "P %zu %.6f %.6f\n", s, p.x, p.y);
      out += buf;
    }
  return out;
}

namespace {

// PGM header token reader: skips whitespace and '#' comments.
bool next_pgm_token(const std::string& bytes, std::size_t& pos, std::string& tok) {
  while (pos < bytes.size()) {
    if (std::isspace(static_cast<unsigned char>(bytes[pos]))) {
      ++pos;
    } else if (bytes[pos] == '#') {
      while (pos < bytes.size() && bytes[pos] != '\n') ++pos;
    } else {
      break;
    }
  }
  std::size_t start = pos;
  while (pos < bytes.size() && !std::isspace(static_cast<unsigned char>(bytes[pos]))) ++pos;
  tok = bytes.substr(start, pos - start);
  return !tok.empty();
}

}  // namespace

OfflineImage parse_pgm(const std::string& bytes) {
  std::size_t pos = 0;
  std::string tok;
  if (!next_pgm_token(bytes, pos, tok) || tok != "P5")
    throw FormatError("PGM: bad magic, expected P5");
  long w = 0, h = 0, maxval = 0;
  for (long* field : {&w, &h, &maxval}) {
    if (!next_pgm_token(bytes, pos, tok)) throw FormatError("PGM: truncated header");
    char* end = nullptr;
    *field = std::strtol(tok.c_str(), &end, 10);
    if (end != tok.c_str() + tok.size() || *field <= 0)
      throw FormatError("PGM: bad header field '" + tok + "'");
  }
  if (maxval != 255) throw FormatError("PGM: maxval must be 255, got " + std::to_string(maxval));
  if (pos >= bytes.size()) throw FormatError("PGM: missing payload");
  ++pos;  // single whitespace byte after maxval
  const std::size_t need = static_cast<std::size_t>(w) * static_cast<std::size_t>(h);
  if (bytes.size() - pos < need)
    throw FormatError("PGM: truncated payload, need " + std::to_string(need) + " bytes, have " +
                      std::to_string(bytes.size() - pos));
  if (bytes.size() - pos > need)
    throw FormatError("PGM: trailing bytes after payload");

  OfflineImage img = OfflineImage::blank(static_cast<int>(h), static_cast<int>(w), 0.0f);
  for (std::size_t i = 0; i < need; ++i)
    img.pixels[i] = static_cast<float>(static_cast<std::uint8_t>(bytes[pos + i])) / 255.0f;
  return img;
}

std::string write_pgm(const OfflineImage& img) {
  std::string out = "P5\n" + std::to_string(img.width) + " " + std::to_string(img.height) +
                    "\n255\n";
  out.reserve(out.size() + img.pixels.size());
  for (float v : img.pixels) {
    float clamped = std::min(1.0f, std::max(0.0f, v));
    out.push_back(static_cast<char>(static_cast<std::uint8_t>(std::lround(clamped * 255.0f))));
  }
  return out;
}

std::string read_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open " + path.string());
  std::string bytes((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
  if (in.bad()) throw IoError("read failed for " + path.string());
  return bytes;
}

void write_file(const std::filesystem::path& path, const std::string& bytes) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw IoError("cannot create " + path.string());
  out.write(bytes.data(), static_cast<std::streamsize>(bytes.size()));
  if (!out) throw IoError("write failed for " + path.string());
}

std::uint32_t crc32(const std::uint8_t* data, std::size_t len) {
  static const auto table = [] {
    std::array<std::uint32_t, 256> t{};
    for (std::uint32_t i = 0; i < 256; ++i) {
      std::uint32_t c = i;
      for (int k = 0; k < 8; ++k) c = (c & 1) ? 0xEDB88320u ^ (c >> 1) : c >> 1;
      t[i] = c;
    }
    return t;
  }();
  std::uint32_t crc = 0xFFFFFFFFu;
  for (std::size_t i = 0; i < len; ++i) crc = table[(crc ^ data[i]) & 0xFFu] ^ (crc >> 8);
  return crc ^ 0xFFFFFFFFu;
}

}  // namespace sidnet
