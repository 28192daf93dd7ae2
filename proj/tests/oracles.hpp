#pragma once

// Brute-force reference implementations the tests compare against. They are
// deliberately naive and share no code with the library beyond the raster
// types.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <filesystem>
#include <numeric>
#include <random>
#include <string>
#include <vector>

#include "particlesynth/particlesynth.hpp"

namespace oracle {

namespace ps = particlesynth;

/// Max squared distance over all pairs of boundary pixel centres, O(b^2).
/// A boundary pixel has a 4-neighbour outside the mask.
inline std::int64_t diameter2_boundary(const ps::BinaryMask& m) {
  std::vector<ps::PixelPoint> b;
  for (int y = 0; y < m.height(); ++y) {
    for (int x = 0; x < m.width(); ++x) {
      if (!m.get(x, y)) continue;
      const bool edge = x == 0 || y == 0 || x == m.width() - 1 || y == m.height() - 1 || !m.get(x - 1, y) ||
                        !m.get(x + 1, y) || !m.get(x, y - 1) || !m.get(x, y + 1);
      if (edge) b.push_back({x, y});
    }
  }
  std::int64_t best = 0;
  for (std::size_t i = 0; i < b.size(); ++i) {
    for (std::size_t j = i + 1; j < b.size(); ++j) {
      const std::int64_t dx = b[i].x - b[j].x;
      const std::int64_t dy = b[i].y - b[j].y;
      best = std::max(best, dx * dx + dy * dy);
    }
  }
  return best;
}

/// Max squared distance over all pairs of foreground pixels, O(n^2).
inline std::int64_t diameter2_all(const ps::BinaryMask& m) {
  std::vector<ps::PixelPoint> p;
  for (int y = 0; y < m.height(); ++y) {
    for (int x = 0; x < m.width(); ++x) {
      if (m.get(x, y)) p.push_back({x, y});
    }
  }
  std::int64_t best = 0;
  for (std::size_t i = 0; i < p.size(); ++i) {
    for (std::size_t j = i + 1; j < p.size(); ++j) {
      const std::int64_t dx = p[i].x - p[j].x;
      const std::int64_t dy = p[i].y - p[j].y;
      best = std::max(best, dx * dx + dy * dy);
    }
  }
  return best;
}

inline std::int64_t orient(const ps::PixelPoint& a, const ps::PixelPoint& b, const ps::PixelPoint& c) {
  return static_cast<std::int64_t>(b.x - a.x) * (c.y - a.y) - static_cast<std::int64_t>(b.y - a.y) * (c.x - a.x);
}

/// Hull vertices by definition: a point is a vertex when it is not inside
/// or on any triangle / segment spanned by other points. O(n^4) but fine for
/// a few hundred distinct points when restricted to extreme candidates.
inline bool inside_or_on_hull(const std::vector<ps::PixelPoint>& hull, const ps::PixelPoint& p) {
  if (hull.size() == 1) return hull[0] == p;
  if (hull.size() == 2) {
    return orient(hull[0], hull[1], p) == 0 && std::min(hull[0].x, hull[1].x) <= p.x &&
           p.x <= std::max(hull[0].x, hull[1].x) && std::min(hull[0].y, hull[1].y) <= p.y &&
           p.y <= std::max(hull[0].y, hull[1].y);
  }
  for (std::size_t i = 0; i < hull.size(); ++i) {
    if (orient(hull[i], hull[(i + 1) % hull.size()], p) < 0) return false;
  }
  return true;
}

/// Extreme points of a set, O(n^3): p is a hull vertex iff some vector
/// q - p has every other q' - p strictly to its left or on its own ray, i.e.
/// all directions from p fit in an angle below 180 degrees.
inline std::vector<ps::PixelPoint> extreme_points(std::vector<ps::PixelPoint> pts) {
  std::sort(pts.begin(), pts.end());
  pts.erase(std::unique(pts.begin(), pts.end()), pts.end());
  if (pts.size() == 1) return pts;
  std::vector<ps::PixelPoint> out;
  for (const auto& p : pts) {
    bool extreme = false;
    for (const auto& q : pts) {
      if (q == p || extreme) continue;
      const std::int64_t ux = q.x - p.x;
      const std::int64_t uy = q.y - p.y;
      bool all_left = true;
      for (const auto& r : pts) {
        if (r == p || r == q) continue;
        const std::int64_t vx = r.x - p.x;
        const std::int64_t vy = r.y - p.y;
        const std::int64_t cr = ux * vy - uy * vx;
        if (cr > 0 || (cr == 0 && ux * vx + uy * vy > 0)) continue;
        all_left = false;
        break;
      }
      extreme = all_left;
    }
    if (extreme) out.push_back(p);
  }
  return out;
}

/// Component count by repeated flood fill over a copy of the raster.
inline std::size_t count_components(const ps::BinaryMask& m, int connectivity) {
  std::vector<std::uint8_t> seen(static_cast<std::size_t>(m.width()) * m.height(), 0);
  std::size_t count = 0;
  for (int y = 0; y < m.height(); ++y) {
    for (int x = 0; x < m.width(); ++x) {
      if (!m.get(x, y) || seen[static_cast<std::size_t>(y) * m.width() + x]) continue;
      ++count;
      std::vector<ps::PixelPoint> stack{{x, y}};
      seen[static_cast<std::size_t>(y) * m.width() + x] = 1;
      while (!stack.empty()) {
        const auto p = stack.back();
        stack.pop_back();
        for (int dy = -1; dy <= 1; ++dy) {
          for (int dx = -1; dx <= 1; ++dx) {
            if ((dx == 0 && dy == 0) || (connectivity == 4 && dx != 0 && dy != 0)) continue;
            const int nx = p.x + dx;
            const int ny = p.y + dy;
            if (!m.contains(nx, ny) || !m.get(nx, ny)) continue;
            auto& s = seen[static_cast<std::size_t>(ny) * m.width() + nx];
            if (s) continue;
            s = 1;
            stack.push_back({nx, ny});
          }
        }
      }
    }
  }
  return count;
}

/// Canvas-frame amodal mask of a placed instance.
inline ps::BinaryMask canvas_mask(const ps::Scene& s, const ps::PlacedInstance& inst) {
  ps::BinaryMask m(s.width, s.height);
  for (int y = 0; y < inst.mask.height(); ++y) {
    for (int x = 0; x < inst.mask.width(); ++x) {
      if (inst.mask.get(x, y)) m.set(inst.position.x + x, inst.position.y + y);
    }
  }
  return m;
}

/// Paints instances in z order into an id raster; when `max_layer` is set,
/// instances above it are not painted. Returns per-instance visible counts.
inline std::vector<std::uint64_t> repaint_visible(const ps::Scene& s, std::vector<std::uint32_t>* ids_out = nullptr,
                                                  int max_layer = 1 << 30) {
  std::vector<std::uint32_t> ids(static_cast<std::size_t>(s.width) * s.height, 0);
  for (const auto& inst : s.instances) {
    if (inst.layer > max_layer) continue;
    for (int y = 0; y < inst.mask.height(); ++y) {
      for (int x = 0; x < inst.mask.width(); ++x) {
        if (inst.mask.get(x, y)) {
          ids[static_cast<std::size_t>(inst.position.y + y) * s.width + inst.position.x + x] = inst.instance_id;
        }
      }
    }
  }
  std::vector<std::uint64_t> vis(s.instances.size() + 1, 0);
  for (auto id : ids) ++vis[id];
  if (ids_out) *ids_out = std::move(ids);
  return vis;
}

/// Visible area of each instance counting only occluders from its own layer.
inline std::vector<std::uint64_t> repaint_layer_visible(const ps::Scene& s) {
  std::vector<std::uint64_t> out(s.instances.size() + 1, 0);
  for (int layer = 0; layer < ps::kNumLayers; ++layer) {
    std::vector<std::uint32_t> ids(static_cast<std::size_t>(s.width) * s.height, 0);
    for (const auto& inst : s.instances) {
      if (inst.layer != layer) continue;
      for (int y = 0; y < inst.mask.height(); ++y) {
        for (int x = 0; x < inst.mask.width(); ++x) {
          if (inst.mask.get(x, y)) {
            ids[static_cast<std::size_t>(inst.position.y + y) * s.width + inst.position.x + x] = inst.instance_id;
          }
        }
      }
    }
    for (auto id : ids) {
      if (id != 0) ++out[id];
    }
  }
  return out;
}

inline std::uint64_t pixel_iou_num(const ps::BinaryMask& a, const ps::BinaryMask& b) {
  std::uint64_t n = 0;
  for (int y = 0; y < a.height(); ++y) {
    for (int x = 0; x < a.width(); ++x) n += a.get(x, y) && b.get(x, y);
  }
  return n;
}

inline double pixel_iou(const ps::BinaryMask& a, const ps::BinaryMask& b) {
  std::uint64_t inter = 0;
  std::uint64_t uni = 0;
  for (int y = 0; y < a.height(); ++y) {
    for (int x = 0; x < a.width(); ++x) {
      inter += a.get(x, y) && b.get(x, y);
      uni += a.get(x, y) || b.get(x, y);
    }
  }
  return uni == 0 ? 0.0 : static_cast<double>(inter) / static_cast<double>(uni);
}

/// Best total IoU over all one-to-one assignments with every pair >= t
/// (pairs below t are left unmatched), by exhaustive permutation search.
/// Returns the matched count of the best assignment, ties broken by the
/// larger IoU sum.
struct Assignment {
  std::size_t matched = 0;
  double iou_sum = 0.0;
};

inline Assignment best_assignment(const std::vector<ps::BinaryMask>& gt, const std::vector<ps::BinaryMask>& pred,
                                  double t) {
  const std::size_t n = std::max(gt.size(), pred.size());
  std::vector<std::size_t> perm(n);
  std::iota(perm.begin(), perm.end(), 0);
  Assignment best;
  do {
    Assignment cur;
    for (std::size_t g = 0; g < gt.size(); ++g) {
      const std::size_t p = perm[g];
      if (p >= pred.size()) continue;
      const double iou = pixel_iou(gt[g], pred[p]);
      if (iou > 0.0 && iou >= t) {
        ++cur.matched;
        cur.iou_sum += iou;
      }
    }
    if (cur.matched > best.matched || (cur.matched == best.matched && cur.iou_sum > best.iou_sum)) best = cur;
  } while (std::next_permutation(perm.begin(), perm.end()));
  return best;
}

/// Random blob stamped inside a w x h canvas by a union of discs.
inline ps::BinaryMask random_blob(std::mt19937_64& gen, int w, int h) {
  ps::BinaryMask m(w, h);
  std::uniform_int_distribution<int> ndisc(1, 5);
  const int k = ndisc(gen);
  std::uniform_real_distribution<double> cx(w * 0.25, w * 0.75);
  std::uniform_real_distribution<double> cy(h * 0.25, h * 0.75);
  std::uniform_real_distribution<double> rr(1.0, std::min(w, h) * 0.25);
  for (int i = 0; i < k; ++i) {
    const double x0 = cx(gen);
    const double y0 = cy(gen);
    const double r = rr(gen);
    for (int y = 0; y < h; ++y) {
      for (int x = 0; x < w; ++x) {
        if ((x - x0) * (x - x0) + (y - y0) * (y - y0) <= r * r) m.set(x, y);
      }
    }
  }
  if (m.empty()) m.set(w / 2, h / 2);
  return m;
}

/// Fresh scratch directory under the system temp dir.
inline std::filesystem::path scratch_dir(const std::string& name) {
  const auto dir = std::filesystem::temp_directory_path() / ("particlesynth_test_" + name);
  std::filesystem::remove_all(dir);
  std::filesystem::create_directories(dir);
  return dir;
}

}  // namespace oracle
