#pragma once

#include <cstdint>
#include <optional>
#include <string>

#include "sidnet/fusion.hpp"
#include "sidnet/geometry.hpp"

namespace sidnet {

struct BinaryImage {
  int height = 0;
  int width = 0;
  std::vector<std::uint8_t> ink;  // 1 = ink

  static BinaryImage blank(int h, int w) {
    BinaryImage b;
    b.height = h;
    b.width = w;
    b.ink.assign(static_cast<std::size_t>(h) * static_cast<std::size_t>(w), 0);
    return b;
  }
  std::uint8_t at(int r, int c) const {
    return ink[static_cast<std::size_t>(r) * static_cast<std::size_t>(width) +
               static_cast<std::size_t>(c)];
  }
  std::uint8_t& at(int r, int c) {
    return ink[static_cast<std::size_t>(r) * static_cast<std::size_t>(width) +
               static_cast<std::size_t>(c)];
  }
  int count() const {
    int n = 0;
    for (auto v : ink) n += v;
    return n;
  }
};

// ink_is_high: ink pixels are the values above the threshold (the convention
// after preprocess_offline). Pass false for raw dark-on-white rasters.
BinaryImage binarize(const OfflineImage& img, bool ink_is_high, float threshold = 0.5f);

// One-pixel-wide medial representation; a fixed point of the thinning pass.
struct Skeleton {
  BinaryImage image;
  int pixel_count() const { return image.count(); }
};

struct PixelPoint {
  int row = 0;
  int col = 0;
  bool operator==(const PixelPoint&) const = default;
};

// Ordered pixel sequences; consecutive points within a stroke are 8-adjacent
// and every skeleton pixel appears in exactly one stroke exactly once.
struct RecoveredTrajectory {
  std::vector<std::vector<PixelPoint>> strokes;

  int total_points() const {
    int n = 0;
    for (const auto& s : strokes) n += static_cast<int>(s.size());
    return n;
  }
};

// Iterative Zhang-Suen thinning to a fixed point. The empty image yields an
// empty skeleton.
Skeleton skeletonize(const BinaryImage& img);

// Convenience overload for preprocessed images (ink = 1, threshold 0.5).
Skeleton skeletonize(const OfflineImage& preprocessed);

// Greedy stroke recovery over the skeleton's 8-adjacency graph. Strokes start
// at the unvisited endpoint with smallest (y,x); at junctions the walk takes
// the unvisited neighbor with minimal turning angle relative to the incoming
// direction (ties to smallest (y,x)). When no endpoints remain, loops start
// at the smallest-(y,x) unvisited pixel.
RecoveredTrajectory recover_trajectory(const Skeleton& sk);

// Pixel strokes as real coordinates (x = col, y = row), down-sampled by arc
// length to at most max_points in total.
OnlinePointSequence to_point_sequence(const RecoveredTrajectory& rec, int max_points = 256);

// Render a trajectory onto a raster (dark ink on white). canvas_scale > 0
// maps coordinates to pixels at exactly that scale with a margin equal to the
// dilation radius; canvas_scale <= 0 picks the scale that fits the ink
// bounding box into a height-32 canvas. Consecutive in-stroke points are
// joined with Bresenham segments (never across strokes), then the ink is
// dilated with a disc of the given radius.
OfflineImage rasterize_trajectory(const OnlinePointSequence& traj, double canvas_scale,
                                  int thickness_radius);

enum class Level { Character, Word };

inline const char* level_name(Level l) { return l == Level::Character ? "character" : "word"; }

// One dataset record. The offline raster uses the raw on-disk convention
// (ink dark on white); inversion happens in preprocess_offline.
struct Sample {
  std::string id;
  std::string script;
  Level level = Level::Character;
  Origin origin = Origin::Online;
  std::optional<OnlinePointSequence> online;
  std::optional<OfflineImage> offline;
};

// Fill the missing modality (rasterization one way, skeletonization plus
// stroke recovery the other) and set the origin tag from the modality that
// was present.
Sample convert(const Sample& in);

}  // namespace sidnet
