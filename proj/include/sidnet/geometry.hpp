#pragma once

#include <vector>

#include "sidnet/tensor.hpp"

namespace sidnet {

struct Point {
  double x = 0.0;
  double y = 0.0;
};

// Ordered pen trajectory grouped into strokes. y grows downward (image row
// convention) so rasterization and recovery share one coordinate frame.
struct OnlinePointSequence {
  std::vector<std::vector<Point>> strokes;

  int total_points() const {
    int n = 0;
    for (const auto& s : strokes) n += static_cast<int>(s.size());
    return n;
  }
};

// Grayscale raster, values in [0,1]. On disk and straight after parsing, ink
// is dark (0) on white (1); preprocess_offline inverts to ink = 1.
struct OfflineImage {
  int height = 0;
  int width = 0;
  std::vector<float> pixels;  // row-major [height][width]

  float at(int row, int col) const {
    return pixels[static_cast<std::size_t>(row) * static_cast<std::size_t>(width) +
                  static_cast<std::size_t>(col)];
  }
  float& at(int row, int col) {
    return pixels[static_cast<std::size_t>(row) * static_cast<std::size_t>(width) +
                  static_cast<std::size_t>(col)];
  }
  static OfflineImage blank(int h, int w, float value) {
    OfflineImage img;
    img.height = h;
    img.width = w;
    img.pixels.assign(static_cast<std::size_t>(h) * static_cast<std::size_t>(w), value);
    return img;
  }
};

// Translate so the min corner is (0,0) and scale uniformly so the height span
// is 1 (falls back to the width span for perfectly horizontal input), then
// concatenate strokes in temporal order into one [N,1,2] signal.
Tensor<float> preprocess_online(const OnlinePointSequence& raw);

// Scale to height 32 preserving aspect (nearest-neighbor) and invert so ink
// reads 1. character_mode additionally resizes to 32x32 for batching.
OfflineImage preprocess_offline(const OfflineImage& raw, bool character_mode);

// Preprocessed image (ink = 1) as an [H,W,1] tensor.
Tensor<float> image_to_tensor(const OfflineImage& img);

}  // namespace sidnet
