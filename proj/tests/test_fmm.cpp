#include <cmath>

#include "doctest.h"
#include "ognav/fmm.hpp"
#include "ognav/rng.hpp"
#include "support/dijkstra16.hpp"

using namespace ognav;

namespace {

std::vector<uint8_t> open_grid(int h, int w) {
  return std::vector<uint8_t>(static_cast<size_t>(h) * w, 1);
}

std::vector<uint8_t> random_obstacles(Rng& rng, int h, int w, double density) {
  auto mask = open_grid(h, w);
  for (auto& v : mask) v = rng.bernoulli(density) ? 0 : 1;
  return mask;
}

}  // namespace

TEST_SUITE_BEGIN("fmm");

TEST_CASE("free-space field tracks Euclidean distance within 5%") {
  const int n = 64;
  const auto mask = open_grid(n, n);
  const double res = 0.05;
  const Cell src{10, 12};
  const auto field = geodesic_field(mask, n, n, res, {src});
  CHECK(field.at(src) == 0.0);
  for (int r = 0; r < n; ++r)
    for (int c = 0; c < n; ++c) {
      const double cells = std::hypot(r - src.r, c - src.c);
      if (cells < 5.0) continue;
      const double euclid = cells * res;
      CHECK(field.at(r, c) == doctest::Approx(euclid).epsilon(0.05));
    }
}

TEST_CASE("multi-source field is the minimum over sources") {
  const int n = 40;
  const auto mask = open_grid(n, n);
  const Cell a{5, 5}, b{30, 32};
  const auto fa = geodesic_field(mask, n, n, 0.1, {a});
  const auto fb = geodesic_field(mask, n, n, 0.1, {b});
  const auto fab = geodesic_field(mask, n, n, 0.1, {a, b});
  for (int r = 0; r < n; ++r)
    for (int c = 0; c < n; ++c)
      CHECK(fab.at(r, c) ==
            doctest::Approx(std::min(fa.at(r, c), fb.at(r, c))).epsilon(0.02));
}

TEST_CASE("sealed rooms stay unreachable") {
  const int n = 21;
  auto mask = open_grid(n, n);
  for (int r = 5; r <= 15; ++r) {
    mask[static_cast<size_t>(r) * n + 5] = 0;
    mask[static_cast<size_t>(r) * n + 15] = 0;
  }
  for (int c = 5; c <= 15; ++c) {
    mask[5 * n + c] = 0;
    mask[15 * n + c] = 0;
  }
  const auto field = geodesic_field(mask, n, n, 0.1, {{0, 0}});
  CHECK(field.at(10, 10) == kUnreachable);
  CHECK(field.reachable({0, 20}));
}

TEST_CASE("source validation") {
  const auto mask = open_grid(8, 8);
  CHECK_THROWS_AS(geodesic_field(mask, 8, 8, 0.1, {}), std::invalid_argument);
  auto walled = mask;
  walled[3 * 8 + 3] = 0;
  CHECK_THROWS_AS(geodesic_field(walled, 8, 8, 0.1, {{3, 3}}),
                  std::invalid_argument);
  CHECK_THROWS_AS(geodesic_field(mask, 8, 8, 0.1, {{-1, 0}}),
                  std::invalid_argument);
}

TEST_CASE("field matches 16-connected Dijkstra within 5% on cluttered grids") {
  Rng rng(1234);
  for (int trial = 0; trial < 10; ++trial) {
    const int n = 60;
    auto mask = random_obstacles(rng, n, n, 0.2);
    const int sr = rng.uniform_range(0, n - 1), sc = rng.uniform_range(0, n - 1);
    mask[static_cast<size_t>(sr) * n + sc] = 1;
    const auto field = geodesic_field(mask, n, n, 0.05, {{sr, sc}});
    const auto ref = testsupport::dijkstra16(mask, n, n, 0.05, {{sr, sc}});
    for (size_t i = 0; i < ref.size(); ++i) {
      const bool fmm_in = field.value[i] < kUnreachable;
      const bool dij_in = ref[i] < kUnreachable;
      CHECK(fmm_in == dij_in);
      if (!fmm_in || !dij_in || ref[i] == 0.0) continue;
      CHECK(std::abs(field.value[i] - ref[i]) / ref[i] <= 0.05);
    }
  }
}

TEST_CASE("adding obstacles never shortens a distance") {
  Rng rng(77);
  const int n = 48;
  auto sparse = random_obstacles(rng, n, n, 0.08);
  auto dense = sparse;
  for (auto& v : dense)
    if (v && rng.bernoulli(0.1)) v = 0;
  sparse[0] = dense[0] = 1;
  const auto fs = geodesic_field(sparse, n, n, 0.1, {{0, 0}});
  const auto fd = geodesic_field(dense, n, n, 0.1, {{0, 0}});
  for (size_t i = 0; i < fs.value.size(); ++i)
    CHECK(fd.value[i] >= fs.value[i] - 1e-9);
}

TEST_CASE("distance is symmetric in the endpoints") {
  const int n = 64;
  const auto mask = open_grid(n, n);
  const Cell a{7, 9}, b{51, 40};
  const auto fa = geodesic_field(mask, n, n, 0.05, {a});
  const auto fb = geodesic_field(mask, n, n, 0.05, {b});
  CHECK(std::abs(fa.at(b) - fb.at(a)) <= 1e-3);
}

TEST_CASE("cutoff leaves far cells unreachable") {
  const int n = 30;
  const auto mask = open_grid(n, n);
  FmmOptions opts;
  opts.cutoff = 0.5;  // meters
  const auto field = geodesic_field(mask, n, n, 0.1, {{15, 15}}, opts);
  CHECK(field.at(15, 18) == doctest::Approx(0.3).epsilon(0.05));
  CHECK(field.at(15, 27) == kUnreachable);
  CHECK(field.at(0, 0) == kUnreachable);
}

TEST_CASE("descent reaches the source along a near-optimal path") {
  const int n = 41;
  auto mask = open_grid(n, n);
  // U-shaped wall between start and source
  for (int r = 10; r <= 30; ++r) mask[static_cast<size_t>(r) * n + 20] = 0;
  for (int c = 12; c <= 20; ++c) {
    mask[10 * n + c] = 0;
    mask[30 * n + c] = 0;
  }
  const Cell src{20, 10};  // inside the U
  const Cell start{20, 30};
  const auto field = geodesic_field(mask, n, n, 0.1, {src});
  const auto path = shortest_path(field, start);
  REQUIRE(!path.empty());
  CHECK(path.back() == src);
  double prev = field.at(start);
  for (const Cell& cell : path) {
    CHECK(field.at(cell) < prev);
    prev = field.at(cell);
  }
  const double len = path_length_m(path, start, 0.1);
  CHECK(len >= std::hypot(start.r - src.r, start.c - src.c) * 0.1);
  CHECK(len <= 1.1 * field.at(start));
}

TEST_CASE("descent edge cases") {
  const int n = 12;
  const auto mask = open_grid(n, n);
  const auto field = geodesic_field(mask, n, n, 0.1, {{4, 4}});
  CHECK(shortest_path(field, {4, 4}).empty());
  const auto path = shortest_path(field, {4, 5});
  REQUIRE(path.size() == 1);
  CHECK(path[0] == Cell{4, 4});

  auto sealed = mask;
  for (int i = 0; i < n; ++i) sealed[static_cast<size_t>(i) * n + 8] = 0;
  const auto f2 = geodesic_field(sealed, n, n, 0.1, {{4, 4}});
  CHECK_THROWS_AS(shortest_path(f2, {4, 10}), NoPathError);
}

TEST_CASE("geodesic_to_region distances and errors") {
  {
    const int n = 30;
    const auto mask = open_grid(n, n);
    const std::vector<Cell> region{{10, 10}, {10, 11}, {11, 10}, {11, 11}};
    CHECK(geodesic_to_region(mask, n, n, 0.1, region, {10, 11}) == 0.0);
  }
  const int h = 5, w = 40;
  const auto mask = open_grid(h, w);
  const std::vector<Cell> region{{2, 3}};
  const double d = geodesic_to_region(mask, h, w, 0.1, region, {2, 33});
  CHECK(d == doctest::Approx(3.0).epsilon(0.05));

  auto sealed = mask;
  for (int r = 0; r < h; ++r) sealed[static_cast<size_t>(r) * w + 20] = 0;
  CHECK(geodesic_to_region(sealed, h, w, 0.1, region, {2, 33}) == kUnreachable);

  CHECK_THROWS_AS(geodesic_to_region(mask, h, w, 0.1, {}, {2, 33}),
                  std::invalid_argument);
  CHECK_THROWS_AS(
      geodesic_to_region(sealed, h, w, 0.1, {{0, 20}, {1, 20}}, {2, 33}),
      std::invalid_argument);
}

TEST_CASE("erosion clears a margin around obstacles") {
  const int n = 15;
  std::vector<float> occ(n * n, 0.0f);
  occ[7 * n + 7] = 1.0f;
  const auto plain = traversable_mask(occ, n, n, 0.1, 0.0);
  CHECK(plain[7 * n + 7] == 0);
  CHECK(plain[7 * n + 8] == 1);
  const auto fat = traversable_mask(occ, n, n, 0.1, 0.18);
  CHECK(fat[7 * n + 8] == 0);
  CHECK(fat[6 * n + 8] == 0);  // diagonal at ~0.141 m
  CHECK(fat[7 * n + 9] == 1);  // 0.2 m away
}

TEST_SUITE_END();
