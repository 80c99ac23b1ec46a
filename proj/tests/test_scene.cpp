#include <algorithm>
#include <fstream>
#include <queue>
#include <set>
#include <sstream>

#include "doctest.h"
#include "json.hpp"
#include "ognav/scene.hpp"
#include "support/tmpdir.hpp"

using namespace ognav;
using testsupport::TempDir;

namespace {

std::string slurp(const std::filesystem::path& p) {
  std::ifstream in(p);
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

// independent of the library's own connectivity check on purpose
struct FloodFill {
  int height, width;
  std::vector<uint8_t> blocked;
  std::vector<int> comp;
  int count = 0;

  explicit FloodFill(const SceneLayout& s)
      : height(s.height), width(s.width),
        blocked(size_t(s.height) * s.width, 0),
        comp(size_t(s.height) * s.width, -1) {
    for (const Cell& w : s.walls) blocked[idx(w)] = 1;
    for (const ObjectSpec& o : s.objects)
      for (const Cell& c : o.cells) blocked[idx(c)] = 1;
    for (int r = 0; r < height; ++r)
      for (int c = 0; c < width; ++c) {
        if (blocked[idx({r, c})] || comp[idx({r, c})] >= 0) continue;
        grow({r, c}, count++);
      }
  }

  size_t idx(Cell c) const { return size_t(c.r) * width + c.c; }

  void grow(Cell seed, int label) {
    std::queue<Cell> q;
    q.push(seed);
    comp[idx(seed)] = label;
    while (!q.empty()) {
      Cell cur = q.front();
      q.pop();
      const int dr[] = {1, -1, 0, 0}, dc[] = {0, 0, 1, -1};
      for (int k = 0; k < 4; ++k) {
        Cell nb{cur.r + dr[k], cur.c + dc[k]};
        if (nb.r < 0 || nb.r >= height || nb.c < 0 || nb.c >= width) continue;
        if (blocked[idx(nb)] || comp[idx(nb)] >= 0) continue;
        comp[idx(nb)] = label;
        q.push(nb);
      }
    }
  }

  bool touches_free(Cell c) const {
    const int dr[] = {1, -1, 0, 0}, dc[] = {0, 0, 1, -1};
    for (int k = 0; k < 4; ++k) {
      Cell nb{c.r + dr[k], c.c + dc[k]};
      if (nb.r < 0 || nb.r >= height || nb.c < 0 || nb.c >= width) continue;
      if (!blocked[idx(nb)]) return true;
    }
    return false;
  }
};

PlacementPrior uniform_except(const std::string& dataset,
                              const std::string& object,
                              const std::string& room) {
  PlacementPrior pr;
  pr.rooms = room_categories(dataset);
  pr.objects = object_categories(dataset);
  pr.p.assign(pr.rooms.size() * pr.objects.size(), 0.0);
  for (size_t o = 0; o < pr.objects.size(); ++o)
    for (size_t r = 0; r < pr.rooms.size(); ++r) {
      double v = pr.objects[o] == object ? (pr.rooms[r] == room ? 1.0 : 0.0)
                                         : 1.0 / pr.rooms.size();
      pr.p[r * pr.objects.size() + o] = v;
    }
  return pr;
}

nlohmann::json load_json(const std::filesystem::path& p) {
  std::ifstream in(p);
  return nlohmann::json::parse(in);
}

void dump_json(const nlohmann::json& j, const std::filesystem::path& p) {
  std::ofstream out(p);
  out << j.dump(2) << '\n';
}

}  // namespace

TEST_SUITE_BEGIN("scene");

TEST_CASE("category vocabularies and footprints") {
  CHECK(room_categories("gibson").size() == 19);
  CHECK(object_categories("gibson").size() == 15);
  CHECK(room_categories("mp3d").size() == 28);
  CHECK(object_categories("mp3d").size() == 21);
  CHECK_THROWS_AS((void)room_categories("replica"), std::invalid_argument);

  auto [bh, bw] = object_footprint_m("bed");
  CHECK(bh == doctest::Approx(2.0));
  CHECK(bw == doctest::Approx(1.5));
  auto [dh, dw] = object_footprint_m("garden gnome");
  CHECK(dh == doctest::Approx(0.5));
  CHECK(dw == doctest::Approx(0.5));
}

TEST_CASE("placement prior from a score matrix") {
  PlacementPrior prior = PlacementPrior::from_matrix(bundled_matrix("gibson"));
  REQUIRE(prior.rooms.size() == 19);
  REQUIRE(prior.objects.size() == 15);
  for (size_t o = 0; o < prior.objects.size(); ++o) {
    double col = 0.0;
    for (size_t r = 0; r < prior.rooms.size(); ++r)
      col += prior.p[r * prior.objects.size() + o];
    CHECK(col == doctest::Approx(1.0));
  }

  // bathroom is the only room scoring above threshold for a toilet
  const auto room_at = [&](const std::string& name) {
    return int(std::find(prior.rooms.begin(), prior.rooms.end(), name) -
               prior.rooms.begin());
  };
  const auto obj_at = [&](const std::string& name) {
    return int(std::find(prior.objects.begin(), prior.objects.end(), name) -
               prior.objects.begin());
  };
  CHECK(prior.prob(room_at("bathroom"), obj_at("toilet")) ==
        doctest::Approx(1.0));

  CHECK_THROWS_AS((void)prior.prob(-1, 0), std::out_of_range);
  CHECK_THROWS_AS((void)prior.prob(0, 99), std::out_of_range);

  SUBCASE("columns with no score above threshold fall back") {
    O2RMatrix m({"den", "hall"}, {"lamp", "rug"},
                {0.2, -0.5, 0.1, -0.2});
    PlacementPrior p = PlacementPrior::from_matrix(m);
    // lamp: both rooms positive but below 0.3 -> uniform over positive
    CHECK(p.prob(0, 0) == doctest::Approx(0.5));
    CHECK(p.prob(1, 0) == doctest::Approx(0.5));
    // rug: nothing positive -> uniform over everything
    CHECK(p.prob(0, 1) == doctest::Approx(0.5));
    CHECK(p.prob(1, 1) == doctest::Approx(0.5));
  }
}

TEST_CASE("generation is deterministic in the seed") {
  TempDir tmp;
  SceneGenParams params;
  save_scene(generate_scene(params, 7), tmp.path / "a.json");
  save_scene(generate_scene(params, 7), tmp.path / "b.json");
  save_scene(generate_scene(params, 8), tmp.path / "c.json");
  CHECK(slurp(tmp.path / "a.json") == slurp(tmp.path / "b.json"));
  CHECK(slurp(tmp.path / "a.json") != slurp(tmp.path / "c.json"));
}

TEST_CASE("generated layouts satisfy the structural invariants") {
  for (uint64_t seed : {1, 2, 3, 4, 5}) {
    CAPTURE(seed);
    SceneGenParams params;
    SceneLayout s = generate_scene(params, seed);

    CHECK(s.height == 120);
    CHECK(s.width == 120);
    CHECK(s.rooms.size() >= 5);
    CHECK(s.rooms.size() <= 9);

    // the outer ring is walled
    std::set<std::pair<int, int>> wall_set;
    for (const Cell& w : s.walls) wall_set.insert({w.r, w.c});
    for (int r = 0; r < s.height; ++r) {
      CHECK(wall_set.count({r, 0}) == 1);
      CHECK(wall_set.count({r, s.width - 1}) == 1);
    }

    // room rectangles are disjoint and wall-free
    std::vector<int> owner(size_t(s.height) * s.width, -1);
    for (size_t i = 0; i < s.rooms.size(); ++i)
      for (const RectI& rect : s.rooms[i].rects)
        for (int r = rect.r0; r < rect.r0 + rect.h; ++r)
          for (int c = rect.c0; c < rect.c0 + rect.w; ++c) {
            CHECK(owner[size_t(r) * s.width + c] == -1);
            owner[size_t(r) * s.width + c] = int(i);
            CHECK(wall_set.count({r, c}) == 0);
          }

    // every object cell sits inside a room, off walls, no overlaps
    std::set<std::pair<int, int>> object_cells;
    for (const ObjectSpec& obj : s.objects)
      for (const Cell& c : obj.cells) {
        CHECK(owner[size_t(c.r) * s.width + c.c] >= 0);
        CHECK(object_cells.insert({c.r, c.c}).second);
        CHECK(wall_set.count({c.r, c.c}) == 0);
      }

    FloodFill ff(s);
    CHECK(ff.count == 1);
    for (const ObjectSpec& obj : s.objects) {
      bool reachable = false;
      for (const Cell& c : obj.cells) reachable = reachable || ff.touches_free(c);
      CHECK(reachable);
    }

    // every room is entered through at least one carved door
    for (const RoomSpec& room : s.rooms) {
      CHECK(!room.doors.empty());
      for (const Cell& d : room.doors) CHECK(wall_set.count({d.r, d.c}) == 0);
    }
  }
}

TEST_CASE("a concentrated prior pins objects to their room") {
  for (uint64_t seed : {3, 11, 19}) {
    CAPTURE(seed);
    SceneGenParams params;
    params.object_counts = {{"toilet", 2}};
    params.prior = uniform_except("gibson", "toilet", "bathroom");
    SceneLayout s = generate_scene(params, seed);

    std::vector<const RectI*> bathrooms;
    for (const RoomSpec& room : s.rooms)
      if (room.category == "bathroom")
        for (const RectI& rect : room.rects) bathrooms.push_back(&rect);
    CHECK(!bathrooms.empty());

    int toilets = 0;
    for (const ObjectSpec& obj : s.objects) {
      if (obj.category != "toilet") continue;
      ++toilets;
      for (const Cell& c : obj.cells) {
        bool inside = false;
        for (const RectI* rect : bathrooms) inside = inside || rect->contains(c);
        CHECK(inside);
      }
    }
    CHECK(toilets == 2);
  }
}

TEST_CASE("dense request places every instance") {
  SceneGenParams params;
  params.width_m = 10.0;
  params.height_m = 10.0;
  params.min_rooms = 6;
  params.max_rooms = 6;
  params.object_counts = {{"bed", 1},   {"chair", 4}, {"couch", 2},
                          {"sink", 2},  {"toilet", 1}, {"tv", 1},
                          {"vase", 2},  {"cup", 2}};
  SceneLayout s = generate_scene(params, 5);

  CHECK(s.rooms.size() == 6);
  std::map<std::string, int> placed;
  for (const ObjectSpec& obj : s.objects) ++placed[obj.category];
  CHECK(placed == params.object_counts);
  CHECK(FloodFill(s).count == 1);
}

TEST_CASE("rasterizing a hand-built one-room layout") {
  SceneLayout s;
  s.id = "fixture";
  s.dataset = "gibson";
  s.height = 10;
  s.width = 10;
  s.cell_size = 0.1;
  for (int r = 0; r < 10; ++r)
    for (int c = 0; c < 10; ++c)
      if (r == 0 || c == 0 || r == 9 || c == 9) s.walls.push_back({r, c});
  s.rooms.push_back({"bedroom", {{1, 1, 8, 8}}, {}});
  s.prior = PlacementPrior::from_matrix(bundled_matrix("gibson"));

  GridStack g = rasterize_scene(s);
  CHECK(g.height() == 10);
  CHECK(g.width() == 10);
  CHECK(g.resolution() == doctest::Approx(0.1));
  REQUIRE(g.channel_count() == 2);
  CHECK(g.channels()[0].name == "occupancy");
  CHECK(g.channels()[0].kind == ChannelKind::Occupancy);
  CHECK(g.channels()[1].name == "room_bedroom");
  CHECK(g.channels()[1].kind == ChannelKind::Room);

  std::vector<uint8_t> nav = navigable_mask(g);
  for (int r = 0; r < 10; ++r)
    for (int c = 0; c < 10; ++c) {
      const bool ring = r == 0 || c == 0 || r == 9 || c == 9;
      CHECK(g.at(0, r, c) == (ring ? 1.0f : 0.0f));
      CHECK(g.at(1, r, c) == (ring ? 0.0f : 1.0f));
      CHECK(nav[g.cell_index(r, c)] == (ring ? 0 : 1));
    }
}

TEST_CASE("raster cell counts follow the layout") {
  SceneLayout s = generate_scene(SceneGenParams{}, 3);
  GridStack g = rasterize_scene(s);

  size_t object_cells = 0;
  for (const ObjectSpec& obj : s.objects) object_cells += obj.cells.size();
  size_t occ = 0;
  for (float v : g.data("occupancy")) occ += v != 0.0f;
  CHECK(occ == s.walls.size() + object_cells);

  std::map<std::string, size_t> per_cat;
  for (const ObjectSpec& obj : s.objects)
    per_cat[obj.category] += obj.cells.size();
  for (const auto& [cat, cells] : per_cat) {
    size_t lit = 0;
    for (float v : g.data("object_" + cat)) lit += v != 0.0f;
    CHECK(lit == cells);
  }

  std::map<std::string, size_t> room_area;
  for (const RoomSpec& room : s.rooms)
    for (const RectI& rect : room.rects)
      room_area[room.category] += size_t(rect.area());
  for (const auto& [cat, cells] : room_area) {
    size_t lit = 0;
    for (float v : g.data("room_" + cat)) lit += v != 0.0f;
    CHECK(lit == cells);
  }

  SUBCASE("halving the resolution quadruples every count") {
    GridStack fine = rasterize_scene(s, s.cell_size / 2.0);
    CHECK(fine.height() == 2 * g.height());
    CHECK(fine.width() == 2 * g.width());
    for (int ch = 0; ch < g.channel_count(); ++ch) {
      size_t coarse_lit = 0, fine_lit = 0;
      for (float v : g.data(ch)) coarse_lit += v != 0.0f;
      for (float v : fine.data(ch)) fine_lit += v != 0.0f;
      CHECK(fine_lit == 4 * coarse_lit);
    }
  }
}

TEST_CASE("scene files round trip") {
  TempDir tmp;
  SceneLayout s = generate_scene(SceneGenParams{}, 9);
  save_scene(s, tmp.path / "a.json");
  SceneLayout back = load_scene(tmp.path / "a.json");
  save_scene(back, tmp.path / "b.json");
  CHECK(slurp(tmp.path / "a.json") == slurp(tmp.path / "b.json"));

  CHECK(back.id == s.id);
  CHECK(back.dataset == s.dataset);
  CHECK(back.seed == s.seed);
  CHECK(back.rooms.size() == s.rooms.size());
  CHECK(back.objects.size() == s.objects.size());
  CHECK(back.walls.size() == s.walls.size());
  CHECK(back.prior.p == s.prior.p);
}

TEST_CASE("loading rejects malformed and inconsistent files") {
  TempDir tmp;
  const auto file = tmp.path / "scene.json";
  SceneLayout s = generate_scene(SceneGenParams{}, 9);
  save_scene(s, file);
  nlohmann::json good = load_json(file);

  SUBCASE("missing file") {
    CHECK_THROWS_AS((void)load_scene(tmp.path / "nope.json"), FormatError);
  }
  SUBCASE("not json") {
    std::ofstream(file) << "plain text";
    CHECK_THROWS_WITH_AS((void)load_scene(file),
                         doctest::Contains("not valid JSON"), FormatError);
  }
  SUBCASE("missing field") {
    nlohmann::json j = good;
    j.erase("rooms");
    dump_json(j, file);
    CHECK_THROWS_WITH_AS((void)load_scene(file),
                         doctest::Contains("missing field 'rooms'"),
                         FormatError);
  }
  SUBCASE("unknown dataset") {
    nlohmann::json j = good;
    j["dataset"] = "replica";
    dump_json(j, file);
    CHECK_THROWS_WITH_AS((void)load_scene(file), doctest::Contains("replica"),
                         FormatError);
  }
  SUBCASE("unknown room category") {
    nlohmann::json j = good;
    j["rooms"][0]["category"] = "spaceship";
    dump_json(j, file);
    CHECK_THROWS_WITH_AS((void)load_scene(file),
                         doctest::Contains("unknown room category 'spaceship'"),
                         FormatError);
  }
  SUBCASE("rect outside the grid") {
    nlohmann::json j = good;
    j["rooms"][0]["rects"][0] = {0, 0, 1000, 10};
    dump_json(j, file);
    CHECK_THROWS_WITH_AS((void)load_scene(file),
                         doctest::Contains("leaves the grid"), FormatError);
  }
  SUBCASE("overlapping room rectangles") {
    nlohmann::json j = good;
    nlohmann::json clone = j["rooms"][0];
    j["rooms"].push_back(clone);
    dump_json(j, file);
    CHECK_THROWS_WITH_AS((void)load_scene(file),
                         doctest::Contains("room rectangles overlap"),
                         FormatError);
  }
  SUBCASE("object on a wall") {
    nlohmann::json j = good;
    j["objects"][0]["cells"][0] = {0, 0};
    dump_json(j, file);
    CHECK_THROWS_WITH_AS((void)load_scene(file),
                         doctest::Contains("overlaps a wall"), FormatError);
  }
  SUBCASE("prior columns must sum to one") {
    nlohmann::json j = good;
    j["prior"]["p"][0][0] = 5.0;
    dump_json(j, file);
    CHECK_THROWS_WITH_AS((void)load_scene(file),
                         doctest::Contains("sums to"), FormatError);
  }
  SUBCASE("sealing a door disconnects the free space") {
    nlohmann::json j = good;
    // wall off every door of the first room
    for (const auto& d : j["rooms"][0]["doors"]) j["walls"].push_back(d);
    dump_json(j, file);
    CHECK_THROWS_WITH_AS(
        (void)load_scene(file),
        doctest::Contains("single connected component"), FormatError);
  }
}

TEST_CASE("impossible generation requests fail loudly") {
  SUBCASE("bounds smaller than one room") {
    SceneGenParams p;
    p.width_m = 1.0;
    p.height_m = 1.0;
    CHECK_THROWS_WITH_AS((void)generate_scene(p, 1),
                         doctest::Contains("bounds too small"),
                         GenerationError);
  }
  SUBCASE("more rooms than the bounds can hold") {
    SceneGenParams p;
    p.min_rooms = 200;
    p.max_rooms = 200;
    CHECK_THROWS_WITH_AS((void)generate_scene(p, 1),
                         doctest::Contains("need at least 200"),
                         GenerationError);
  }
  SUBCASE("more furniture than the floor can hold") {
    SceneGenParams p;
    p.width_m = 4.0;
    p.height_m = 4.0;
    p.min_rooms = 1;
    p.max_rooms = 1;
    p.object_counts = {{"bed", 60}};
    CHECK_THROWS_WITH_AS((void)generate_scene(p, 1),
                         doctest::Contains("cannot place 'bed'"),
                         GenerationError);
  }
  SUBCASE("invalid parameters") {
    SceneGenParams p;
    p.cell_size = 0.0;
    CHECK_THROWS_AS((void)generate_scene(p, 1), std::invalid_argument);

    p = SceneGenParams{};
    p.min_rooms = 4;
    p.max_rooms = 3;
    CHECK_THROWS_AS((void)generate_scene(p, 1), std::invalid_argument);

    p = SceneGenParams{};
    p.object_counts = {{"dragon", 1}};
    CHECK_THROWS_WITH_AS((void)generate_scene(p, 1),
                         doctest::Contains("dragon"), std::invalid_argument);

    p = SceneGenParams{};
    p.object_counts = {{"chair", -2}};
    CHECK_THROWS_AS((void)generate_scene(p, 1), std::invalid_argument);

    p = SceneGenParams{};
    p.prior = uniform_except("gibson", "toilet", "bathroom");
    p.prior->p[0] += 0.5;
    CHECK_THROWS_WITH_AS((void)generate_scene(p, 1),
                         doctest::Contains("sums to"), std::invalid_argument);
  }
}

TEST_SUITE_END();
