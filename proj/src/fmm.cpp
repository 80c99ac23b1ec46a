#include "ognav/fmm.hpp"

#include <algorithm>
#include <cmath>
#include <queue>
#include <sstream>

namespace ognav {

std::vector<uint8_t> traversable_mask(const std::vector<float>& occupancy,
                                      int height, int width, double resolution,
                                      double radius_m) {
  const size_t n = static_cast<size_t>(height) * width;
  std::vector<uint8_t> mask(n);
  for (size_t i = 0; i < n; ++i) mask[i] = occupancy[i] > 0.5f ? 0 : 1;
  if (radius_m <= 0.0) return mask;

  const int rad = static_cast<int>(std::floor(radius_m / resolution));
  std::vector<std::pair<int, int>> disk;
  for (int dr = -rad; dr <= rad; ++dr)
    for (int dc = -rad; dc <= rad; ++dc)
      if (std::hypot(dr, dc) * resolution <= radius_m) disk.emplace_back(dr, dc);

  std::vector<uint8_t> eroded = mask;
  for (int r = 0; r < height; ++r) {
    for (int c = 0; c < width; ++c) {
      if (occupancy[static_cast<size_t>(r) * width + c] <= 0.5f) continue;
      for (auto [dr, dc] : disk) {
        const int rr = r + dr, cc = c + dc;
        if (rr >= 0 && rr < height && cc >= 0 && cc < width)
          eroded[static_cast<size_t>(rr) * width + cc] = 0;
      }
    }
  }
  return eroded;
}

namespace {

constexpr int kD4[4][2] = {{1, 0}, {-1, 0}, {0, 1}, {0, -1}};

enum : uint8_t { kFar = 0, kNarrow = 1, kDone = 2 };

struct HeapEntry {
  double value;
  int64_t index;
  bool operator>(const HeapEntry& o) const {
    return value > o.value || (value == o.value && index > o.index);
  }
};

// One triangle of the 8-stencil: axial neighbor at distance h (value ta),
// diagonal neighbor at h*sqrt(2) (value td). First-order: the front is linear
// over the segment between them.
double triangle_solve(double ta, double td, double h) {
  const double s = (ta - td) / h;
  if (s <= 0.0) return ta + h;
  if (s >= M_SQRT1_2) return td + M_SQRT2 * h;
  const double lam = s / std::sqrt(1.0 - s * s);
  return (1.0 - lam) * ta + lam * td + h * std::sqrt(1.0 + lam * lam);
}

}  // namespace

DistanceField geodesic_field(const std::vector<uint8_t>& traversable,
                             int height, int width, double resolution,
                             const std::vector<Cell>& sources,
                             const FmmOptions& opts) {
  const size_t n = static_cast<size_t>(height) * width;
  if (traversable.size() != n)
    throw std::invalid_argument("geodesic_field: mask size mismatch");
  if (sources.empty())
    throw std::invalid_argument("geodesic_field: no source cells");

  DistanceField field;
  field.height = height;
  field.width = width;
  field.resolution = resolution;
  field.value.assign(n, kUnreachable);

  auto idx = [&](int r, int c) { return static_cast<size_t>(r) * width + c; };
  std::vector<uint8_t> state(n, kFar);
  std::priority_queue<HeapEntry, std::vector<HeapEntry>, std::greater<>> heap;

  std::vector<uint8_t> is_source(n, 0);
  for (const Cell& s : sources) {
    if (s.r < 0 || s.r >= height || s.c < 0 || s.c >= width ||
        !traversable[idx(s.r, s.c)]) {
      std::ostringstream msg;
      msg << "geodesic_field: source (" << s.r << ", " << s.c
          << ") is not traversable";
      throw std::invalid_argument(msg.str());
    }
    is_source[idx(s.r, s.c)] = 1;
    field.value[idx(s.r, s.c)] = 0.0;
  }

  // Seed exact Euclidean distances around the sources (line-of-sight only).
  // The bare upwind scheme overshoots noticeably in the first cells around a
  // point source; seeding restores near-field accuracy without changing the
  // marching itself.
  const int seed_rad = opts.exact_init_radius;
  if (seed_rad > 0) {
    for (const Cell& s : sources) {
      bool interior = true;
      for (auto [dr, dc] : kD4) {
        const int rr = s.r + dr, cc = s.c + dc;
        if (rr < 0 || rr >= height || cc < 0 || cc >= width ||
            !is_source[idx(rr, cc)]) {
          interior = false;
          break;
        }
      }
      if (interior) continue;  // surrounded by other sources, adds nothing
      for (int dr = -seed_rad; dr <= seed_rad; ++dr) {
        for (int dc = -seed_rad; dc <= seed_rad; ++dc) {
          const int rr = s.r + dr, cc = s.c + dc;
          if (rr < 0 || rr >= height || cc < 0 || cc >= width) continue;
          const size_t q = idx(rr, cc);
          if (!traversable[q] || is_source[q]) continue;
          const double d = std::hypot(dr, dc) * resolution;
          if (d >= field.value[q]) continue;
          if (!line_of_sight(traversable, height, width, s.r + 0.5, s.c + 0.5,
                             rr + 0.5, cc + 0.5))
            continue;
          field.value[q] = d;
        }
      }
    }
  }

  for (size_t i = 0; i < n; ++i) {
    if (field.value[i] < kUnreachable) {
      state[i] = kNarrow;
      heap.push({field.value[i], static_cast<int64_t>(i)});
    }
  }

  const double h = resolution;
  bool clip_unfinalized = false;
  while (!heap.empty()) {
    const auto [v, i] = heap.top();
    heap.pop();
    if (state[i] == kDone || v > field.value[i]) continue;
    if (v > opts.cutoff) {
      clip_unfinalized = true;
      break;
    }
    state[i] = kDone;
    const int r = static_cast<int>(i / width), c = static_cast<int>(i % width);
    if (opts.until && opts.until->r == r && opts.until->c == c) break;

    for (int dr = -1; dr <= 1; ++dr) {
      for (int dc = -1; dc <= 1; ++dc) {
        if (dr == 0 && dc == 0) continue;
        const int rr = r + dr, cc = c + dc;
        if (rr < 0 || rr >= height || cc < 0 || cc >= width) continue;
        const size_t q = idx(rr, cc);
        if (state[q] == kDone || !traversable[q]) continue;

        // min over the eight triangles around q; a diagonal neighbor only
        // counts through a triangle whose axial leg is traversable, so fronts
        // never slip between two corner-touching obstacles
        double cand = kUnreachable;
        for (auto [ar, ac] : kD4) {
          const int axr = rr + ar, axc = cc + ac;
          const bool ax_open = axr >= 0 && axr < height && axc >= 0 &&
                               axc < width && traversable[idx(axr, axc)];
          const double ta = ax_open ? field.value[idx(axr, axc)] : kUnreachable;
          if (ta < kUnreachable) cand = std::min(cand, ta + h);
          if (!ax_open) continue;
          const int pr = ar == 0 ? 1 : 0, pc = ac == 0 ? 1 : 0;
          for (int sgn = -1; sgn <= 1; sgn += 2) {
            const int dgr = axr + sgn * pr, dgc = axc + sgn * pc;
            if (dgr < 0 || dgr >= height || dgc < 0 || dgc >= width) continue;
            if (!traversable[idx(dgr, dgc)]) continue;
            const double td = field.value[idx(dgr, dgc)];
            if (td >= kUnreachable) continue;
            cand = std::min(cand, ta < kUnreachable ? triangle_solve(ta, td, h)
                                                    : td + M_SQRT2 * h);
          }
        }
        if (cand < field.value[q] - 1e-12) {
          field.value[q] = cand;
          state[q] = kNarrow;
          heap.push({cand, static_cast<int64_t>(q)});
        }
      }
    }
  }

  if (clip_unfinalized) {
    // cells the front never finalized before the cutoff read as unreachable
    for (size_t i = 0; i < n; ++i)
      if (state[i] != kDone) field.value[i] = kUnreachable;
  }
  return field;
}

std::vector<Cell> shortest_path(const DistanceField& field, Cell start) {
  const int w = field.width, hgt = field.height;
  if (start.r < 0 || start.r >= hgt || start.c < 0 || start.c >= w)
    throw std::invalid_argument("shortest_path: start out of bounds");
  if (!(field.at(start) < kUnreachable))
    throw NoPathError("shortest_path: start cell was never reached");

  std::vector<Cell> path;
  Cell cur = start;
  const size_t guard = static_cast<size_t>(w) * hgt + 1;
  while (field.at(cur) > 0.0) {
    Cell best{-1, -1};
    double best_v = field.at(cur);
    for (int dr = -1; dr <= 1; ++dr) {
      for (int dc = -1; dc <= 1; ++dc) {
        if (dr == 0 && dc == 0) continue;
        const int rr = cur.r + dr, cc = cur.c + dc;
        if (rr < 0 || rr >= hgt || cc < 0 || cc >= w) continue;
        const double v = field.value[static_cast<size_t>(rr) * w + cc];
        if (v >= best_v) continue;
        if (dr != 0 && dc != 0) {
          // no squeezing across a blocked corner
          const double v1 = field.value[static_cast<size_t>(cur.r) * w + cc];
          const double v2 = field.value[static_cast<size_t>(rr) * w + cur.c];
          if (v1 >= kUnreachable && v2 >= kUnreachable) continue;
        }
        best = {rr, cc};
        best_v = v;
      }
    }
    if (best.r < 0)
      throw NoPathError("shortest_path: descent stalled off the source set");
    path.push_back(best);
    cur = best;
    if (path.size() > guard)
      throw NoPathError("shortest_path: descent failed to terminate");
  }
  return path;
}

double path_length_m(const std::vector<Cell>& path, Cell start,
                     double resolution) {
  double len = 0.0;
  Cell prev = start;
  for (const Cell& c : path) {
    len += std::hypot(c.r - prev.r, c.c - prev.c) * resolution;
    prev = c;
  }
  return len;
}

double geodesic_to_region(const std::vector<uint8_t>& traversable, int height,
                          int width, double resolution,
                          const std::vector<Cell>& region, Cell query) {
  if (region.empty())
    throw std::invalid_argument("geodesic_to_region: empty region");
  std::vector<Cell> sources;
  sources.reserve(region.size());
  for (const Cell& c : region)
    if (c.r >= 0 && c.r < height && c.c >= 0 && c.c < width &&
        traversable[static_cast<size_t>(c.r) * width + c.c])
      sources.push_back(c);
  if (sources.empty())
    throw std::invalid_argument(
        "geodesic_to_region: no traversable cell in region");
  if (query.r < 0 || query.r >= height || query.c < 0 || query.c >= width ||
      !traversable[static_cast<size_t>(query.r) * width + query.c])
    return kUnreachable;
  FmmOptions opts;
  opts.until = query;
  const DistanceField field =
      geodesic_field(traversable, height, width, resolution, sources, opts);
  return field.at(query);
}

}  // namespace ognav
