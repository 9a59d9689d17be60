#include "sidnet/convert.hpp"

#include <algorithm>
#include <cmath>

namespace sidnet {

BinaryImage binarize(const OfflineImage& img, bool ink_is_high, float threshold) {
  BinaryImage out = BinaryImage::blank(img.height, img.width);
  for (int r = 0; r < img.height; ++r)
    for (int c = 0; c < img.width; ++c) {
      float v = img.at(r, c);
      out.at(r, c) = (ink_is_high ? v > threshold : v < threshold) ? 1 : 0;
    }
  return out;
}

namespace {

inline std::uint8_t px(const BinaryImage& img, int r, int c) {
  if (r < 0 || r >= img.height || c < 0 || c >= img.width) return 0;
  return img.at(r, c);
}

// One Zhang-Suen subiteration; returns the number of deleted pixels. The
// component guard keeps the last pixel of a component alive: plain Zhang-Suen
// erases 2x2 blobs completely, which would change the component count.
int thin_pass(BinaryImage& img, int step, const std::vector<int>& label,
              std::vector<int>& remaining) {
  std::vector<PixelPoint> kill;
  for (int r = 0; r < img.height; ++r)
    for (int c = 0; c < img.width; ++c) {
      if (!img.at(r, c)) continue;
      // neighbors P2..P9, clockwise from north
      std::uint8_t p2 = px(img, r - 1, c), p3 = px(img, r - 1, c + 1);
      std::uint8_t p4 = px(img, r, c + 1), p5 = px(img, r + 1, c + 1);
      std::uint8_t p6 = px(img, r + 1, c), p7 = px(img, r + 1, c - 1);
      std::uint8_t p8 = px(img, r, c - 1), p9 = px(img, r - 1, c - 1);
      int b = p2 + p3 + p4 + p5 + p6 + p7 + p8 + p9;
      if (b < 2 || b > 6) continue;
      int a = (p2 == 0 && p3 == 1) + (p3 == 0 && p4 == 1) + (p4 == 0 && p5 == 1) +
              (p5 == 0 && p6 == 1) + (p6 == 0 && p7 == 1) + (p7 == 0 && p8 == 1) +
              (p8 == 0 && p9 == 1) + (p9 == 0 && p2 == 1);
      if (a != 1) continue;
      int m1 = step == 0 ? p2 * p4 * p6 : p2 * p4 * p8;
      int m2 = step == 0 ? p4 * p6 * p8 : p2 * p6 * p8;
      if (m1 == 0 && m2 == 0) kill.push_back({r, c});
    }
  int deleted = 0;
  for (const auto& p : kill) {
    int lab = label[static_cast<std::size_t>(p.row) * static_cast<std::size_t>(img.width) +
                    static_cast<std::size_t>(p.col)];
    if (remaining[static_cast<std::size_t>(lab)] <= 1) continue;
    img.at(p.row, p.col) = 0;
    --remaining[static_cast<std::size_t>(lab)];
    ++deleted;
  }
  return deleted;
}

}  // namespace

Skeleton skeletonize(const BinaryImage& img) {
  Skeleton sk;
  sk.image = img;

  // label 8-connected components once; counts feed the vanish guard
  std::vector<int> label(img.ink.size(), -1);
  std::vector<int> remaining;
  for (int r = 0; r < img.height; ++r)
    for (int c = 0; c < img.width; ++c) {
      if (!img.at(r, c) || label[static_cast<std::size_t>(r * img.width + c)] >= 0) continue;
      int lab = static_cast<int>(remaining.size());
      remaining.push_back(0);
      std::vector<PixelPoint> stack{{r, c}};
      label[static_cast<std::size_t>(r * img.width + c)] = lab;
      while (!stack.empty()) {
        auto [cr, cc] = stack.back();
        stack.pop_back();
        ++remaining[static_cast<std::size_t>(lab)];
        for (int dr = -1; dr <= 1; ++dr)
          for (int dc = -1; dc <= 1; ++dc) {
            int nr = cr + dr, nc = cc + dc;
            if (nr < 0 || nr >= img.height || nc < 0 || nc >= img.width) continue;
            if (!img.at(nr, nc) ||
                label[static_cast<std::size_t>(nr * img.width + nc)] >= 0)
              continue;
            label[static_cast<std::size_t>(nr * img.width + nc)] = lab;
            stack.push_back({nr, nc});
          }
      }
    }

  int removed;
  do {
    removed = thin_pass(sk.image, 0, label, remaining);
    removed += thin_pass(sk.image, 1, label, remaining);
  } while (removed > 0);
  return sk;
}

Skeleton skeletonize(const OfflineImage& preprocessed) {
  return skeletonize(binarize(preprocessed, /*ink_is_high=*/true));
}

namespace {

const int kNbr[8][2] = {{-1, -1}, {-1, 0}, {-1, 1}, {0, -1}, {0, 1}, {1, -1}, {1, 0}, {1, 1}};

struct Walker {
  const BinaryImage& img;
  std::vector<std::uint8_t> visited;

  explicit Walker(const BinaryImage& image)
      : img(image), visited(image.ink.size(), 0) {}

  bool is_ink(int r, int c) const {
    return r >= 0 && r < img.height && c >= 0 && c < img.width && img.at(r, c) != 0;
  }
  bool seen(int r, int c) const {
    return visited[static_cast<std::size_t>(r) * static_cast<std::size_t>(img.width) +
                   static_cast<std::size_t>(c)] != 0;
  }
  void mark(int r, int c) {
    visited[static_cast<std::size_t>(r) * static_cast<std::size_t>(img.width) +
            static_cast<std::size_t>(c)] = 1;
  }

  int unvisited_degree(int r, int c) const {
    int d = 0;
    for (const auto& n : kNbr)
      if (is_ink(r + n[0], c + n[1]) && !seen(r + n[0], c + n[1])) ++d;
    return d;
  }

  // Next step from (r,c): the unvisited neighbor minimizing the turning angle
  // relative to the incoming direction; without an incoming direction the
  // smallest-(y,x) neighbor. Ties resolve to smallest (y,x).
  bool step(int r, int c, int dr, int dc, PixelPoint& out) const {
    bool found = false;
    double best_cos = -2.0;
    for (const auto& n : kNbr) {
      int nr = r + n[0], nc = c + n[1];
      if (!is_ink(nr, nc) || seen(nr, nc)) continue;
      double cand_cos;
      if (dr == 0 && dc == 0) {
        cand_cos = 0.0;  // no direction yet: rank by (y,x) only
      } else {
        double dot = static_cast<double>(dr * n[0] + dc * n[1]);
        cand_cos = dot / (std::hypot(static_cast<double>(dr), static_cast<double>(dc)) *
                          std::hypot(static_cast<double>(n[0]), static_cast<double>(n[1])));
      }
      bool better = false;
      if (!found || cand_cos > best_cos + 1e-12) {
        better = true;
      } else if (cand_cos > best_cos - 1e-12) {
        better = nr < out.row || (nr == out.row && nc < out.col);
      }
      if (better) {
        found = true;
        best_cos = cand_cos;
        out = {nr, nc};
      }
    }
    return found;
  }
};

}  // namespace

RecoveredTrajectory recover_trajectory(const Skeleton& sk) {
  RecoveredTrajectory rec;
  const BinaryImage& img = sk.image;
  Walker w(img);
  int remaining = img.count();

  while (remaining > 0) {
    // prefer an endpoint (at most one unvisited neighbor), smallest (y,x)
    PixelPoint start{-1, -1};
    bool have_endpoint = false;
    for (int r = 0; r < img.height && !have_endpoint; ++r)
      for (int c = 0; c < img.width; ++c) {
        if (!img.at(r, c) || w.seen(r, c)) continue;
        if (w.unvisited_degree(r, c) <= 1) {
          start = {r, c};
          have_endpoint = true;
          break;
        }
        if (start.row < 0) start = {r, c};  // loop fallback: first in scan order
      }

    std::vector<PixelPoint> stroke;
    stroke.push_back(start);
    w.mark(start.row, start.col);
    --remaining;
    int dr = 0, dc = 0;
    PixelPoint cur = start;
    PixelPoint next;
    while (w.step(cur.row, cur.col, dr, dc, next)) {
      dr = next.row - cur.row;
      dc = next.col - cur.col;
      stroke.push_back(next);
      w.mark(next.row, next.col);
      --remaining;
      cur = next;
    }
    rec.strokes.push_back(std::move(stroke));
  }
  return rec;
}

OnlinePointSequence to_point_sequence(const RecoveredTrajectory& rec, int max_points) {
  OnlinePointSequence seq;
  const int total = rec.total_points();
  if (total == 0) return seq;

  if (total <= max_points) {
    for (const auto& s : rec.strokes) {
      std::vector<Point> pts;
      pts.reserve(s.size());
      for (const auto& p : s)
        pts.push_back({static_cast<double>(p.col), static_cast<double>(p.row)});
      seq.strokes.push_back(std::move(pts));
    }
    return seq;
  }

  // budget per stroke: 2 points each (1 for a dot), rest by arc length
  const int strokes_n = static_cast<int>(rec.strokes.size());
  std::vector<int> budget(static_cast<std::size_t>(strokes_n));
  int base = 0;
  double weight_total = 0;
  for (int i = 0; i < strokes_n; ++i) {
    int len = static_cast<int>(rec.strokes[static_cast<std::size_t>(i)].size());
    budget[static_cast<std::size_t>(i)] = std::min(len, 2);
    base += budget[static_cast<std::size_t>(i)];
    weight_total += std::max(0, len - 2);
  }
  int spare = std::max(0, max_points - base);
  for (int i = 0; i < strokes_n && weight_total > 0; ++i) {
    int len = static_cast<int>(rec.strokes[static_cast<std::size_t>(i)].size());
    int extra = static_cast<int>(std::floor(spare * std::max(0, len - 2) / weight_total));
    budget[static_cast<std::size_t>(i)] = std::min(len, budget[static_cast<std::size_t>(i)] + extra);
  }

  for (int i = 0; i < strokes_n; ++i) {
    const auto& s = rec.strokes[static_cast<std::size_t>(i)];
    const int want = budget[static_cast<std::size_t>(i)];
    std::vector<Point> pts;
    pts.reserve(static_cast<std::size_t>(want));
    if (want >= static_cast<int>(s.size())) {
      for (const auto& p : s) pts.push_back({static_cast<double>(p.col), static_cast<double>(p.row)});
    } else {
      // uniform picks along the stroke index (arc length between 8-adjacent
      // pixels is near constant), keeping both end points
      for (int k = 0; k < want; ++k) {
        std::size_t idx =
            want == 1 ? 0 : static_cast<std::size_t>(k) * (s.size() - 1) / (static_cast<std::size_t>(want) - 1);
        pts.push_back({static_cast<double>(s[idx].col), static_cast<double>(s[idx].row)});
      }
    }
    seq.strokes.push_back(std::move(pts));
  }
  return seq;
}

OfflineImage rasterize_trajectory(const OnlinePointSequence& traj, double canvas_scale,
                                  int thickness_radius) {
  if (traj.total_points() < 1) throw InputError("rasterize_trajectory: empty trajectory");
  if (thickness_radius < 0) throw InputError("rasterize_trajectory: negative radius");

  double min_x = traj.strokes[0][0].x, max_x = min_x;
  double min_y = traj.strokes[0][0].y, max_y = min_y;
  for (const auto& s : traj.strokes)
    for (const auto& p : s) {
      min_x = std::min(min_x, p.x);
      max_x = std::max(max_x, p.x);
      min_y = std::min(min_y, p.y);
      max_y = std::max(max_y, p.y);
    }
  const double span_x = max_x - min_x, span_y = max_y - min_y;

  double scale;
  int margin;
  if (canvas_scale > 0) {
    scale = canvas_scale;
    margin = thickness_radius;
  } else {
    margin = thickness_radius + 2;
    const int target_rows = 32 - 2 * margin;
    scale = span_y > 0 ? (target_rows - 1) / span_y : 1.0;
  }

  const int rows = static_cast<int>(std::lround(span_y * scale)) + 1 + 2 * margin;
  const int cols = static_cast<int>(std::lround(span_x * scale)) + 1 + 2 * margin;
  BinaryImage canvas = BinaryImage::blank(rows, cols);

  auto to_px = [&](const Point& p) -> PixelPoint {
    return {static_cast<int>(std::lround((p.y - min_y) * scale)) + margin,
            static_cast<int>(std::lround((p.x - min_x) * scale)) + margin};
  };
  auto draw_segment = [&](PixelPoint a, PixelPoint b) {
    int dr = std::abs(b.row - a.row), dc = std::abs(b.col - a.col);
    int sr = a.row < b.row ? 1 : -1, sc = a.col < b.col ? 1 : -1;
    int err = (dc > dr ? dc : -dr) / 2;
    int r = a.row, c = a.col;
    while (true) {
      canvas.at(r, c) = 1;
      if (r == b.row && c == b.col) break;
      int e2 = err;
      if (e2 > -dc) {
        err -= dr;
        c += sc;
      }
      if (e2 < dr) {
        err += dc;
        r += sr;
      }
    }
  };

  for (const auto& s : traj.strokes) {
    if (s.empty()) continue;
    PixelPoint prev = to_px(s[0]);
    canvas.at(prev.row, prev.col) = 1;
    for (std::size_t i = 1; i < s.size(); ++i) {
      PixelPoint cur = to_px(s[i]);
      draw_segment(prev, cur);
      prev = cur;
    }
  }

  // disc dilation
  BinaryImage dilated = canvas;
  if (thickness_radius > 0) {
    const int r2 = thickness_radius * thickness_radius;
    for (int r = 0; r < rows; ++r)
      for (int c = 0; c < cols; ++c) {
        if (!canvas.at(r, c)) continue;
        for (int dr = -thickness_radius; dr <= thickness_radius; ++dr)
          for (int dc = -thickness_radius; dc <= thickness_radius; ++dc) {
            if (dr * dr + dc * dc > r2) continue;
            int nr = r + dr, nc = c + dc;
            if (nr >= 0 && nr < rows && nc >= 0 && nc < cols) dilated.at(nr, nc) = 1;
          }
      }
  }

  OfflineImage out = OfflineImage::blank(rows, cols, 1.0f);
  for (int r = 0; r < rows; ++r)
    for (int c = 0; c < cols; ++c)
      if (dilated.at(r, c)) out.at(r, c) = 0.0f;
  return out;
}

Sample convert(const Sample& in) {
  const bool has_online = in.online.has_value();
  const bool has_offline = in.offline.has_value();
  if (has_online == has_offline)
    throw InputError("convert: sample '" + in.id + "' must carry exactly one modality");

  Sample out = in;
  if (has_online) {
    out.origin = Origin::Online;
    out.offline = rasterize_trajectory(*in.online, 0.0, 1);
  } else {
    out.origin = Origin::Offline;
    // recover on the aspect-preserving height-32 version, matching the scale
    // the rest of the pipeline sees
    OfflineImage prep = preprocess_offline(*in.offline, /*character_mode=*/false);
    Skeleton sk = skeletonize(prep);
    if (sk.pixel_count() == 0)
      throw DegenerateInputError("convert: sample '" + in.id + "' has a blank image");
    out.online = to_point_sequence(recover_trajectory(sk));
  }
  return out;
}

}  // namespace sidnet
