#include "sidnet/geometry.hpp"

#include <algorithm>
#include <cmath>

namespace sidnet {

Tensor<float> preprocess_online(const OnlinePointSequence& raw) {
  const int n = raw.total_points();
  if (n < 2) throw InputError("preprocess_online: need at least 2 points, got " + std::to_string(n));
  for (const auto& s : raw.strokes)
    if (s.empty()) throw InputError("preprocess_online: empty stroke");

  double min_x = raw.strokes[0][0].x, max_x = min_x;
  double min_y = raw.strokes[0][0].y, max_y = min_y;
  for (const auto& s : raw.strokes)
    for (const auto& p : s) {
      if (!std::isfinite(p.x) || !std::isfinite(p.y))
        throw InputError("preprocess_online: non-finite coordinate");
      min_x = std::min(min_x, p.x);
      max_x = std::max(max_x, p.x);
      min_y = std::min(min_y, p.y);
      max_y = std::max(max_y, p.y);
    }
  const double spread_y = max_y - min_y;
  const double spread_x = max_x - min_x;
  if (spread_x == 0.0 && spread_y == 0.0)
    throw DegenerateInputError("preprocess_online: all points identical");
  const double scale = 1.0 / (spread_y > 0.0 ? spread_y : spread_x);

  std::vector<float> values;
  values.reserve(static_cast<std::size_t>(n) * 2);
  for (const auto& s : raw.strokes)
    for (const auto& p : s) {
      values.push_back(static_cast<float>((p.x - min_x) * scale));
      values.push_back(static_cast<float>((p.y - min_y) * scale));
    }
  return Tensor<float>({n, 1, 2}, std::move(values));
}

namespace {

OfflineImage resize_nearest(const OfflineImage& src, int out_h, int out_w) {
  OfflineImage dst = OfflineImage::blank(out_h, out_w, 0.0f);
  for (int r = 0; r < out_h; ++r) {
    int sr = std::min(src.height - 1, r * src.height / out_h);
    for (int c = 0; c < out_w; ++c) {
      int sc = std::min(src.width - 1, c * src.width / out_w);
      dst.at(r, c) = src.at(sr, sc);
    }
  }
  return dst;
}

}  // namespace

OfflineImage preprocess_offline(const OfflineImage& raw, bool character_mode) {
  if (raw.height <= 0 || raw.width <= 0) throw InputError("preprocess_offline: empty image");
  bool has_ink = false;
  for (float v : raw.pixels)
    if (v < 0.5f) {
      has_ink = true;
      break;
    }
  if (!has_ink) throw DegenerateInputError("preprocess_offline: blank image");

  int out_w = character_mode
                  ? 32
                  : std::max(4, static_cast<int>(std::lround(raw.width * 32.0 / raw.height)));
  OfflineImage scaled =
      (raw.height == 32 && raw.width == out_w) ? raw : resize_nearest(raw, 32, out_w);
  for (auto& v : scaled.pixels) v = 1.0f - v;
  return scaled;
}

Tensor<float> image_to_tensor(const OfflineImage& img) {
  std::vector<float> values(img.pixels.begin(), img.pixels.end());
  return Tensor<float>({img.height, img.width, 1}, std::move(values));
}

}  // namespace sidnet
