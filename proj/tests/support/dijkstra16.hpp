#pragma once

// 16-connected Dijkstra over a traversable mask. Reference distances for
// checking the fast marching solver; deliberately simple and independent of
// the library code.

#include <cmath>
#include <cstdint>
#include <limits>
#include <queue>
#include <utility>
#include <vector>

namespace testsupport {

inline std::vector<double> dijkstra16(const std::vector<uint8_t>& open, int h,
                                      int w, double res,
                                      const std::vector<std::pair<int, int>>& sources) {
  struct Move {
    int dr, dc;
    double cost;
    int swept[2][2];   // relative cells the chord passes through
    int nswept;
    bool any;          // true: one open swept cell suffices (corner graze)
  };
  const double s2 = std::sqrt(2.0), s5 = std::sqrt(5.0);
  std::vector<Move> moves;
  for (int dr = -1; dr <= 1; ++dr)
    for (int dc = -1; dc <= 1; ++dc) {
      if (dr == 0 && dc == 0) continue;
      if (dr == 0 || dc == 0)
        moves.push_back({dr, dc, 1.0, {}, 0, false});
      else
        // a zero-width geodesic may graze one blocked shoulder, not two
        moves.push_back({dr, dc, s2, {{dr, 0}, {0, dc}}, 2, true});
    }
  for (int dr : {-2, 2})
    for (int dc : {-1, 1})
      moves.push_back({dr, dc, s5, {{dr / 2, 0}, {dr / 2, dc}}, 2, false});
  for (int dr : {-1, 1})
    for (int dc : {-2, 2})
      moves.push_back({dr, dc, s5, {{0, dc / 2}, {dr, dc / 2}}, 2, false});

  const double inf = std::numeric_limits<double>::infinity();
  std::vector<double> dist(static_cast<size_t>(h) * w, inf);
  using Entry = std::pair<double, int>;
  std::priority_queue<Entry, std::vector<Entry>, std::greater<>> heap;
  auto idx = [&](int r, int c) { return static_cast<size_t>(r) * w + c; };
  for (auto [r, c] : sources) {
    dist[idx(r, c)] = 0.0;
    heap.push({0.0, static_cast<int>(idx(r, c))});
  }
  while (!heap.empty()) {
    auto [d, i] = heap.top();
    heap.pop();
    if (d > dist[i]) continue;
    const int r = i / w, c = i % w;
    for (const Move& m : moves) {
      const int rr = r + m.dr, cc = c + m.dc;
      if (rr < 0 || rr >= h || cc < 0 || cc >= w) continue;
      if (!open[idx(rr, cc)]) continue;
      bool ok = m.nswept == 0;
      int open_count = 0;
      for (int k = 0; k < m.nswept; ++k) {
        const int sr = r + m.swept[k][0], sc = c + m.swept[k][1];
        if (sr >= 0 && sr < h && sc >= 0 && sc < w && open[idx(sr, sc)])
          ++open_count;
      }
      if (m.nswept > 0) ok = m.any ? open_count >= 1 : open_count == m.nswept;
      if (!ok) continue;
      const double nd = d + m.cost * res;
      if (nd < dist[idx(rr, cc)]) {
        dist[idx(rr, cc)] = nd;
        heap.push({nd, static_cast<int>(idx(rr, cc))});
      }
    }
  }
  return dist;
}

}  // namespace testsupport
