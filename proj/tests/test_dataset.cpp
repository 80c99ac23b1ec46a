#include <algorithm>
#include <fstream>
#include <set>

#include "doctest.h"
#include "json.hpp"
#include "ognav/dataset.hpp"
#include "ognav/scene.hpp"
#include "support/frontier_oracle.hpp"
#include "support/tmpdir.hpp"

using namespace ognav;
using testsupport::FrontierOracle;
using testsupport::TempDir;

namespace {

// '#' explored wall, '.' explored free, '?' unexplored free, 'X' unexplored wall
struct AsciiMap {
  int h = 0, w = 0;
  std::vector<float> occ;
  std::vector<uint8_t> explored;
};

AsciiMap parse_map(const std::vector<std::string>& rows) {
  AsciiMap m;
  m.h = static_cast<int>(rows.size());
  m.w = static_cast<int>(rows[0].size());
  for (const std::string& row : rows) {
    REQUIRE(row.size() == size_t(m.w));
    for (char ch : row) {
      m.occ.push_back(ch == '#' || ch == 'X' ? 1.0f : 0.0f);
      m.explored.push_back(ch == '#' || ch == '.' ? 1 : 0);
    }
  }
  return m;
}

std::vector<uint8_t> free_cells(const std::vector<float>& occ) {
  std::vector<uint8_t> nav(occ.size());
  for (size_t i = 0; i < occ.size(); ++i) nav[i] = occ[i] == 0.0f ? 1 : 0;
  return nav;
}

// walled 3x30 corridor with a chair blocking column 2 of the free row
GridStack corridor_with_chair() {
  GridStack g(3, 30, 0.1,
              {{ChannelKind::Occupancy, "occupancy"},
               {ChannelKind::Object, "object_chair"}});
  for (int c = 0; c < 30; ++c) {
    g.set(0, 0, c, 1.0f);
    g.set(0, 2, c, 1.0f);
  }
  g.set(0, 1, 0, 1.0f);
  g.set(0, 1, 29, 1.0f);
  g.set(0, 1, 2, 1.0f);
  g.set(1, 1, 2, 1.0f);
  return g;
}

std::set<std::set<std::pair<int, int>>> as_partition(const FrontierSet& fs) {
  std::set<std::set<std::pair<int, int>>> out;
  for (const Frontier& f : fs.frontiers) {
    std::set<std::pair<int, int>> g;
    for (const Cell& c : f.cells) g.insert({c.r, c.c});
    out.insert(std::move(g));
  }
  return out;
}

}  // namespace

TEST_SUITE_BEGIN("dataset");

TEST_CASE("explored patches are swept around each path cell") {
  GridStack g(10, 10, 0.1, {{ChannelKind::Occupancy, "occupancy"}});

  auto count = [](const std::vector<uint8_t>& v) {
    size_t n = 0;
    for (uint8_t x : v) n += x != 0;
    return n;
  };

  CHECK(count(explored_from_path(g, {{5, 5}}, 0.3)) == 9);
  CHECK(count(explored_from_path(g, {{5, 5}, {5, 6}}, 0.3)) == 12);
  CHECK(count(explored_from_path(g, {{0, 0}}, 0.3)) == 4);
  CHECK(count(explored_from_path(g, {{5, 5}}, 0.05)) == 1);
  CHECK(count(explored_from_path(g, {}, 0.3)) == 0);
  CHECK_THROWS_AS((void)explored_from_path(g, {{5, 5}}, 0.0),
                  std::invalid_argument);

  std::vector<uint8_t> e = explored_from_path(g, {{5, 5}}, 0.3);
  for (int r = 4; r <= 6; ++r)
    for (int c = 4; c <= 6; ++c) CHECK(e[g.cell_index(r, c)] == 1);
}

TEST_CASE("frontier extraction agrees with the reference classifier") {
  for (uint64_t seed : {1, 2, 3, 4, 5}) {
    CAPTURE(seed);
    Rng rng(seed);
    const int h = 40, w = 40;
    std::vector<float> occ(size_t(h) * w, 0.0f);
    for (float& v : occ) v = rng.bernoulli(0.25) ? 1.0f : 0.0f;
    std::vector<uint8_t> explored(occ.size(), 0);
    for (int k = 0; k < 8; ++k) {
      const int cr = rng.uniform_range(0, h - 1);
      const int cc = rng.uniform_range(0, w - 1);
      for (int r = std::max(0, cr - 2); r <= std::min(h - 1, cr + 2); ++r)
        for (int c = std::max(0, cc - 2); c <= std::min(w - 1, cc + 2); ++c)
          explored[size_t(r) * w + c] = 1;
    }

    const FrontierSet fs = extract_frontiers(occ, explored, h, w);
    const FrontierOracle oracle(occ, explored, h, w, 4);

    for (int r = 0; r < h; ++r)
      for (int c = 0; c < w; ++c)
        CHECK(fs.is_frontier(r, c) == (oracle.frontier[size_t(r) * w + c] != 0));

    std::set<std::set<std::pair<int, int>>> want(oracle.groups.begin(),
                                                 oracle.groups.end());
    CHECK(as_partition(fs) == want);

    size_t total = 0;
    for (const Frontier& f : fs.frontiers) {
      total += f.cells.size();
      CHECK(f.cells.size() >= 4);
      for (const Cell& cell : f.cells)
        CHECK(fs.label[size_t(cell.r) * w + cell.c] == f.id);
    }
    CHECK(fs.cell_total() == total);
  }
}

TEST_CASE("small frontier components are dropped") {
  // a wall pierces the frontier line, leaving two 3-cell stubs
  AsciiMap m = parse_map({
      "...????",
      "...????",
      "...????",
      "..#????",
      "...????",
      "...????",
      "...????",
  });
  FrontierSet kept = extract_frontiers(m.occ, m.explored, m.h, m.w, 3);
  REQUIRE(kept.frontiers.size() == 2);
  CHECK(kept.frontiers[0].cells.size() == 3);
  CHECK(kept.frontiers[1].cells.size() == 3);
  CHECK(kept.cell_total() == 6);

  FrontierSet dropped = extract_frontiers(m.occ, m.explored, m.h, m.w, 4);
  CHECK(dropped.frontiers.empty());
  CHECK(dropped.cell_total() == 0);
  CHECK_FALSE(dropped.is_frontier(0, 2));
}

TEST_CASE("success region and distance to it along a corridor") {
  GridStack g = corridor_with_chair();

  SUBCASE("region holds every free cell within the radius") {
    std::vector<Cell> region = success_region(g, "chair", 1.0);
    std::vector<Cell> want = {{1, 1}};
    for (int c = 3; c <= 13; ++c) want.push_back({1, c});
    CHECK(region == want);
  }
  SUBCASE("zero radius keeps only the cells touching the footprint") {
    std::vector<Cell> region = success_region(g, "chair", 0.0);
    CHECK(region == std::vector<Cell>{{1, 1}, {1, 3}});
  }
  SUBCASE("distances grow linearly past the region rim") {
    DistanceField d = category_distance_field(g, "chair", 1.0);
    CHECK(d.at(1, 13) == doctest::Approx(0.0));
    CHECK(d.at(1, 20) == doctest::Approx(0.7));
    CHECK(d.at(1, 28) == doctest::Approx(1.5));
    CHECK(d.at(1, 1) == doctest::Approx(0.0));
    CHECK(d.at(1, 2) == kUnreachable);
    CHECK(d.at(0, 0) == kUnreachable);
  }
  SUBCASE("unknown categories are rejected") {
    CHECK_THROWS_WITH_AS((void)success_region(g, "piano", 1.0),
                         doctest::Contains("piano"), std::invalid_argument);
  }
}

TEST_CASE("distance decay") {
  CHECK(object_decay(0.0, 5.0) == doctest::Approx(1.0));
  CHECK(object_decay(2.5, 5.0) == doctest::Approx(0.5));
  CHECK(object_decay(5.0, 5.0) == doctest::Approx(0.0));
  CHECK(object_decay(7.0, 5.0) == doctest::Approx(0.0));
  CHECK(object_decay(kUnreachable, 5.0) == doctest::Approx(0.0));
  CHECK_THROWS_AS((void)object_decay(1.0, 0.0), std::invalid_argument);
}

TEST_CASE("object potential decays with geodesic distance") {
  GridStack g = corridor_with_chair();
  std::vector<uint8_t> explored(g.cell_count(), 0);
  for (int r = 0; r < 3; ++r)
    for (int c = 0; c < 25; ++c) explored[g.cell_index(r, c)] = 1;

  const FrontierSet fs =
      extract_frontiers(g.data("occupancy"), explored, 3, 30, 1);
  REQUIRE(fs.frontiers.size() == 1);
  REQUIRE(fs.frontiers[0].cells == std::vector<Cell>{{1, 24}});

  std::vector<float> pot =
      object_potential(fs, category_distance_field(g, "chair"), 5.0);
  for (int r = 0; r < 3; ++r)
    for (int c = 0; c < 30; ++c) {
      if (r == 1 && c == 24)
        CHECK(pot[g.cell_index(r, c)] == doctest::Approx(1.0 - 1.1 / 5.0));
      else
        CHECK(pot[g.cell_index(r, c)] == 0.0f);
    }
}

TEST_CASE("area potential credits unexplored space to the touching frontier") {
  AsciiMap m = parse_map({
      "....#?????",
      ".....?????",
      "###.#XXXXX",
      "#?#.#?????",
      "###..?????",
      ".....?????",
      "....#?????",
  });
  const FrontierSet fs = extract_frontiers(m.occ, m.explored, m.h, m.w, 1);
  REQUIRE(fs.frontiers.size() == 2);
  REQUIRE(fs.frontiers[0].cells == std::vector<Cell>{{1, 4}});
  REQUIRE(fs.frontiers[1].cells == std::vector<Cell>{{4, 4}, {5, 4}});

  std::vector<float> area = area_potential(fs, free_cells(m.occ), m.explored);
  // 53 navigable cells; the 10-cell pocket reaches frontier 0, the 20-cell
  // one reaches frontier 1, the walled-in single cell reaches neither
  CHECK(area[size_t(1) * m.w + 4] == doctest::Approx(10.0 / 53.0));
  CHECK(area[size_t(4) * m.w + 4] == doctest::Approx(20.0 / 53.0));
  CHECK(area[size_t(5) * m.w + 4] == doctest::Approx(20.0 / 53.0));
  size_t nonzero = 0;
  for (float v : area) nonzero += v != 0.0f;
  CHECK(nonzero == 3);

  SUBCASE("no frontiers means a zero map") {
    std::vector<uint8_t> all(m.explored.size(), 1);
    FrontierSet none = extract_frontiers(m.occ, all, m.h, m.w, 1);
    CHECK(none.frontiers.empty());
    std::vector<float> flat = area_potential(none, free_cells(m.occ), all);
    for (float v : flat) CHECK(v == 0.0f);
  }
}

TEST_CASE("room affinity potential reads the room under each frontier cell") {
  GridStack g(6, 8, 0.1,
              {{ChannelKind::Occupancy, "occupancy"},
               {ChannelKind::Room, "room_kitchen"},
               {ChannelKind::Room, "room_bedroom"},
               {ChannelKind::Room, "room_cellar"}});
  for (int r = 0; r < 6; ++r) {
    for (int c = 0; c <= 3; ++c) g.set(1, r, c, 1.0f);
    for (int c = 4; c <= 5; ++c) g.set(2, r, c, 1.0f);
    for (int c = 6; c <= 7; ++c) g.set(3, r, c, 1.0f);
  }
  std::vector<uint8_t> explored(g.cell_count(), 0);
  for (int r = 0; r <= 3; ++r)
    for (int c = 0; c < 8; ++c) explored[g.cell_index(r, c)] = 1;

  const FrontierSet fs =
      extract_frontiers(g.data("occupancy"), explored, 6, 8, 4);
  REQUIRE(fs.frontiers.size() == 1);
  REQUIRE(fs.frontiers[0].cells.size() == 8);

  O2RMatrix m({"kitchen", "bedroom"}, {"cup"}, {0.9, -0.4});
  std::vector<float> pot = o2r_potential(fs, g, m, "cup");
  for (int c = 0; c <= 3; ++c)
    CHECK(pot[g.cell_index(3, c)] == doctest::Approx(0.9));
  for (int c = 4; c <= 5; ++c)
    CHECK(pot[g.cell_index(3, c)] == doctest::Approx(-0.4));
  // cellar is not in the matrix: scored 0 (with a one-time warning)
  for (int c = 6; c <= 7; ++c) CHECK(pot[g.cell_index(3, c)] == 0.0f);
  for (int r = 0; r < 6; ++r)
    if (r != 3)
      for (int c = 0; c < 8; ++c) CHECK(pot[g.cell_index(r, c)] == 0.0f);

  CHECK_THROWS_WITH_AS((void)o2r_potential(fs, g, m, "harp"),
                       doctest::Contains("harp"), std::invalid_argument);
}

TEST_CASE("partial map sampling") {
  const SceneLayout scene = generate_scene(SceneGenParams{}, 3);
  const GridStack raster = rasterize_scene(scene);

  SUBCASE("without augmentation the map passes through untouched") {
    Rng rng(42);
    SampleParams params;
    params.augment = false;
    PartialMap pm = sample_partial_map(raster, rng, params);
    CHECK(pm.complete.data("occupancy") == raster.data("occupancy"));
    size_t n = 0;
    for (uint8_t v : pm.explored) n += v != 0;
    CHECK(n >= 9);  // at least the start patch
    const FrontierSet fs = extract_frontiers(pm);
    for (const Frontier& f : fs.frontiers)
      for (const Cell& c : f.cells) {
        CHECK(pm.explored[pm.complete.cell_index(c)] == 1);
        CHECK(pm.complete.at(0, c.r, c.c) == 0.0f);
      }
  }
  SUBCASE("augmentation keeps the grid shape and stays reproducible") {
    Rng a(7), b(7), c(8);
    PartialMap pa = sample_partial_map(raster, a);
    PartialMap pb = sample_partial_map(raster, b);
    PartialMap pc = sample_partial_map(raster, c);
    CHECK(pa.complete.height() == raster.height());
    CHECK(pa.complete.width() == raster.width());
    CHECK(pa.complete.data("occupancy") == pb.complete.data("occupancy"));
    CHECK(pa.explored == pb.explored);
    CHECK(pa.explored != pc.explored);
  }
}

TEST_CASE("sample assembly, files and hashing") {
  TempDir tmp;
  const SceneLayout scene = generate_scene(SceneGenParams{}, 3);
  const GridStack raster = rasterize_scene(scene);
  Rng rng(7);
  SampleParams params;
  params.augment = false;
  const PartialMap pm = sample_partial_map(raster, rng, params);
  const O2RMatrix matrix = bundled_matrix("gibson");
  const std::vector<std::string> cats = {"chair", "toilet"};

  DatasetSample sample =
      make_sample("s0001", scene.id, 7, pm, matrix, cats);

  REQUIRE(sample.maps.channel_count() == 7);
  CHECK(sample.maps.channels()[0].name == "explored");
  CHECK(sample.maps.channels()[1].name == "occupancy");
  CHECK(sample.maps.channels()[2].name == "area");
  CHECK(sample.maps.channels()[3].name == "object_chair");
  CHECK(sample.maps.channels()[4].name == "o2r_chair");
  CHECK(sample.maps.channels()[5].name == "object_toilet");
  CHECK(sample.maps.channels()[6].name == "o2r_toilet");

  for (size_t i = 0; i < pm.explored.size(); ++i) {
    CHECK(sample.maps.data(0)[i] == (pm.explored[i] ? 1.0f : 0.0f));
    CHECK(sample.maps.data(1)[i] == pm.complete.data("occupancy")[i]);
  }

  const FrontierSet fs = extract_frontiers(pm);
  for (int r = 0; r < raster.height(); ++r)
    for (int c = 0; c < raster.width(); ++c)
      if (!fs.is_frontier(r, c))
        for (int ch = 2; ch < 7; ++ch) CHECK(sample.maps.at(ch, r, c) == 0.0f);

  SUBCASE("emit and load round trip, and hashing is reproducible") {
    const auto dir_a = tmp.path / "a";
    const auto dir_b = tmp.path / "b";
    emit_sample(sample, dir_a);
    emit_sample(sample, dir_b);
    CHECK(hash_dir_contents(dir_a) == hash_dir_contents(dir_b));

    DatasetSample back = load_sample(dir_a);
    CHECK(back.id == sample.id);
    CHECK(back.scene_id == sample.scene_id);
    CHECK(back.seed == sample.seed);
    CHECK(back.patch_m == sample.patch_m);
    CHECK(back.d_max == sample.d_max);
    CHECK(back.categories == sample.categories);
    REQUIRE(back.maps.channel_count() == sample.maps.channel_count());
    for (int ch = 0; ch < sample.maps.channel_count(); ++ch)
      CHECK(back.maps.data(ch) == sample.maps.data(ch));
  }

  SUBCASE("loading rejects inconsistent directories") {
    const auto dir = tmp.path / "c";
    emit_sample(sample, dir);

    CHECK_THROWS_AS((void)load_sample(tmp.path / "missing"), FormatError);

    nlohmann::json meta;
    std::ifstream(dir / "sample.json") >> meta;
    meta["categories"].push_back("zebra");
    std::ofstream(dir / "sample.json") << meta.dump(2) << '\n';
    CHECK_THROWS_WITH_AS((void)load_sample(dir),
                         doctest::Contains("object_zebra"), FormatError);
  }
}

TEST_CASE("directory hashes track content") {
  TempDir tmp;
  const auto mk = [&](const std::string& name, const std::string& body) {
    std::filesystem::create_directories((tmp.path / name).parent_path());
    std::ofstream(tmp.path / name, std::ios::binary) << body;
  };
  mk("a/x.txt", "hello");
  mk("a/sub/y.bin", "\x01\x02\x03");
  mk("b/x.txt", "hello");
  mk("b/sub/y.bin", "\x01\x02\x03");

  CHECK(hash_dir_contents(tmp.path / "a") == hash_dir_contents(tmp.path / "b"));
  mk("b/sub/y.bin", "\x01\x02\x04");
  CHECK(hash_dir_contents(tmp.path / "a") != hash_dir_contents(tmp.path / "b"));
  mk("b/sub/y.bin", "\x01\x02\x03");
  std::filesystem::rename(tmp.path / "b/x.txt", tmp.path / "b/z.txt");
  CHECK(hash_dir_contents(tmp.path / "a") != hash_dir_contents(tmp.path / "b"));
  CHECK_THROWS_AS((void)hash_dir_contents(tmp.path / "nope"), FormatError);
}

TEST_CASE("manifests round trip") {
  TempDir tmp;
  std::vector<ManifestEntry> entries = {{"samples/s0001", 0xdeadbeefcafef00dull},
                                        {"samples/s0002", 42}};
  write_manifest(entries, tmp.path / "manifest.json");
  std::vector<ManifestEntry> back = read_manifest(tmp.path / "manifest.json");
  REQUIRE(back.size() == 2);
  CHECK(back[0].dir == "samples/s0001");
  CHECK(back[0].hash == 0xdeadbeefcafef00dull);
  CHECK(back[1].dir == "samples/s0002");
  CHECK(back[1].hash == 42);

  std::ofstream(tmp.path / "bad.json") << "{}";
  CHECK_THROWS_AS((void)read_manifest(tmp.path / "bad.json"), FormatError);
  CHECK_THROWS_AS((void)read_manifest(tmp.path / "gone.json"), FormatError);
}

TEST_SUITE_END();
