#include "ognav/scene.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <numeric>
#include <queue>
#include <sstream>

#include "json.hpp"

namespace ognav {

namespace {

using nlohmann::json;

constexpr int kD4[4][2] = {{1, 0}, {-1, 0}, {0, 1}, {0, -1}};

int cells_for(double meters, double cell_size) {
  return std::max(1, static_cast<int>(std::lround(meters / cell_size)));
}

std::map<std::string, int> default_object_counts(const std::string& dataset) {
  if (dataset == "gibson")
    return {{"bed", 1},   {"book", 2},         {"bottle", 1},
            {"chair", 3}, {"clock", 1},        {"couch", 1},
            {"cup", 1},   {"dining table", 1}, {"oven", 1},
            {"potted plant", 2}, {"refrigerator", 1}, {"sink", 1},
            {"toilet", 1}, {"tv", 1},          {"vase", 1}};
  return {{"bed", 1},     {"cabinet", 1}, {"chair", 3},
          {"chest_of_drawers", 1}, {"counter", 1}, {"cushion", 2},
          {"picture", 2}, {"plant", 2},   {"seating", 1},
          {"sink", 1},    {"sofa", 1},    {"stool", 1},
          {"table", 2},   {"toilet", 1},  {"towel", 1},
          {"tv_monitor", 1}};
}

struct OccGrid {
  int h = 0, w = 0;
  std::vector<uint8_t> wall, object;

  OccGrid(int height, int width)
      : h(height), w(width), wall(size_t(height) * width, 0),
        object(size_t(height) * width, 0) {}
  size_t idx(int r, int c) const { return size_t(r) * w + c; }
  bool free_cell(int r, int c) const {
    return !wall[idx(r, c)] && !object[idx(r, c)];
  }
};

// one 4-connected component covering every free cell, and every object with a
// free neighbor, or the layout is unusable
bool free_space_ok(const OccGrid& g,
                   const std::vector<ObjectSpec>& objects) {
  std::vector<uint8_t> seen(g.wall.size(), 0);
  int total = 0;
  Cell first{-1, -1};
  for (int r = 0; r < g.h; ++r)
    for (int c = 0; c < g.w; ++c)
      if (g.free_cell(r, c)) {
        ++total;
        if (first.r < 0) first = {r, c};
      }
  if (total == 0) return false;

  std::queue<Cell> q;
  q.push(first);
  seen[g.idx(first.r, first.c)] = 1;
  int reached = 1;
  while (!q.empty()) {
    const Cell cur = q.front();
    q.pop();
    for (auto [dr, dc] : kD4) {
      const int rr = cur.r + dr, cc = cur.c + dc;
      if (rr < 0 || rr >= g.h || cc < 0 || cc >= g.w) continue;
      if (seen[g.idx(rr, cc)] || !g.free_cell(rr, cc)) continue;
      seen[g.idx(rr, cc)] = 1;
      ++reached;
      q.push({rr, cc});
    }
  }
  if (reached != total) return false;

  for (const ObjectSpec& obj : objects) {
    bool adjacent = false;
    for (const Cell& cell : obj.cells) {
      for (auto [dr, dc] : kD4) {
        const int rr = cell.r + dr, cc = cell.c + dc;
        if (rr < 0 || rr >= g.h || cc < 0 || cc >= g.w) continue;
        if (g.free_cell(rr, cc) && seen[g.idx(rr, cc)]) {
          adjacent = true;
          break;
        }
      }
      if (adjacent) break;
    }
    if (!adjacent) return false;
  }
  return true;
}

}  // namespace

double PlacementPrior::prob(int room_idx, int object_idx) const {
  if (room_idx < 0 || room_idx >= static_cast<int>(rooms.size()))
    throw std::out_of_range("room index " + std::to_string(room_idx));
  if (object_idx < 0 || object_idx >= static_cast<int>(objects.size()))
    throw std::out_of_range("object index " + std::to_string(object_idx));
  return p[static_cast<size_t>(room_idx) * objects.size() + object_idx];
}

PlacementPrior PlacementPrior::from_matrix(const O2RMatrix& m,
                                           double threshold) {
  PlacementPrior prior;
  prior.rooms = m.rooms();
  prior.objects = m.objects();
  const size_t nr = prior.rooms.size(), no = prior.objects.size();
  prior.p.assign(nr * no, 0.0);
  for (size_t o = 0; o < no; ++o) {
    double total = 0.0;
    for (size_t r = 0; r < nr; ++r) {
      const double mass =
          std::max(m.score(int(r), int(o)) - threshold, 0.0);
      prior.p[r * no + o] = mass;
      total += mass;
    }
    if (total <= 0.0) {
      int positive = 0;
      for (size_t r = 0; r < nr; ++r)
        if (m.score(int(r), int(o)) > 0.0) ++positive;
      for (size_t r = 0; r < nr; ++r)
        prior.p[r * no + o] =
            positive > 0 ? (m.score(int(r), int(o)) > 0.0 ? 1.0 / positive : 0.0)
                         : 1.0 / double(nr);
    } else {
      for (size_t r = 0; r < nr; ++r) prior.p[r * no + o] /= total;
    }
  }
  return prior;
}

const std::vector<std::string>& room_categories(const std::string& dataset) {
  return bundled_matrix(dataset).rooms();
}

const std::vector<std::string>& object_categories(const std::string& dataset) {
  return bundled_matrix(dataset).objects();
}

std::pair<double, double> object_footprint_m(const std::string& category) {
  static const std::map<std::string, std::pair<double, double>> sizes = {
      {"bed", {2.0, 1.5}},          {"couch", {2.0, 0.9}},
      {"sofa", {2.0, 0.9}},         {"dining table", {1.6, 0.9}},
      {"table", {1.2, 0.8}},        {"refrigerator", {0.7, 0.7}},
      {"oven", {0.6, 0.6}},         {"sink", {0.5, 0.5}},
      {"toilet", {0.5, 0.5}},       {"tv", {1.0, 0.3}},
      {"tv_monitor", {1.0, 0.3}},   {"chair", {0.5, 0.5}},
      {"potted plant", {0.4, 0.4}}, {"plant", {0.4, 0.4}},
      {"book", {0.3, 0.3}},         {"clock", {0.3, 0.3}},
      {"vase", {0.3, 0.3}},         {"cup", {0.2, 0.2}},
      {"bottle", {0.2, 0.2}},       {"cushion", {0.5, 0.5}},
      {"chest_of_drawers", {1.2, 0.5}}, {"stool", {0.4, 0.4}},
      {"towel", {0.4, 0.3}},        {"shower", {0.9, 0.9}},
      {"bathtub", {1.6, 0.8}},      {"counter", {1.8, 0.6}},
      {"fireplace", {1.5, 0.5}},    {"gym_equipment", {1.5, 0.8}},
      {"seating", {1.5, 0.6}},      {"picture", {0.6, 0.1}},
      {"cabinet", {1.0, 0.5}},      {"clothes", {0.5, 0.5}}};
  auto it = sizes.find(category);
  return it == sizes.end() ? std::pair{0.5, 0.5} : it->second;
}

SceneLayout generate_scene(const SceneGenParams& params, uint64_t seed) {
  const double cs = params.cell_size;
  if (cs <= 0.0) throw std::invalid_argument("cell_size must be positive");
  if (params.min_rooms < 1 || params.max_rooms < params.min_rooms)
    throw std::invalid_argument("room count range is empty");
  const std::vector<std::string>& room_vocab = room_categories(params.dataset);
  const std::vector<std::string>& object_vocab =
      object_categories(params.dataset);

  const int H = cells_for(params.height_m, cs);
  const int W = cells_for(params.width_m, cs);
  const int ms = cells_for(params.min_room_side_m, cs);
  const int dw = std::max(3, cells_for(params.door_width_m, cs));
  if (H < ms + 2 || W < ms + 2)
    throw GenerationError("bounds too small for the minimum room side");

  Rng rng(seed);
  OccGrid grid(H, W);
  for (int r = 0; r < H; ++r)
    for (int c = 0; c < W; ++c)
      if (r == 0 || c == 0 || r == H - 1 || c == W - 1)
        grid.wall[grid.idx(r, c)] = 1;

  std::vector<Cell> door_cells;
  std::vector<RectI> rects = {{1, 1, H - 2, W - 2}};
  const int target =
      rng.uniform_range(params.min_rooms, params.max_rooms);

  while (static_cast<int>(rects.size()) < target) {
    int best = -1;
    for (size_t i = 0; i < rects.size(); ++i) {
      const RectI& r = rects[i];
      if (r.h < 2 * ms + 1 && r.w < 2 * ms + 1) continue;
      if (best < 0 || r.area() > rects[best].area())
        best = static_cast<int>(i);
    }
    if (best < 0) break;

    RectI r = rects[best];
    const bool horizontal =
        r.h >= 2 * ms + 1 && (r.w < 2 * ms + 1 || r.h >= r.w);
    RectI a, b;
    if (horizontal) {
      const int row = static_cast<int>(
          rng.uniform_range(r.r0 + ms, r.r0 + r.h - 1 - ms));
      for (int c = r.c0; c < r.c0 + r.w; ++c) grid.wall[grid.idx(row, c)] = 1;
      const int span = std::min(dw, r.w);
      const int start =
          rng.uniform_range(r.c0, r.c0 + r.w - span);
      for (int c = start; c < start + span; ++c) {
        grid.wall[grid.idx(row, c)] = 0;
        door_cells.push_back({row, c});
      }
      a = {r.r0, r.c0, row - r.r0, r.w};
      b = {row + 1, r.c0, r.r0 + r.h - row - 1, r.w};
    } else {
      const int col = static_cast<int>(
          rng.uniform_range(r.c0 + ms, r.c0 + r.w - 1 - ms));
      for (int rr = r.r0; rr < r.r0 + r.h; ++rr)
        grid.wall[grid.idx(rr, col)] = 1;
      const int span = std::min(dw, r.h);
      const int start =
          rng.uniform_range(r.r0, r.r0 + r.h - span);
      for (int rr = start; rr < start + span; ++rr) {
        grid.wall[grid.idx(rr, col)] = 0;
        door_cells.push_back({rr, col});
      }
      a = {r.r0, r.c0, r.h, col - r.c0};
      b = {r.r0, col + 1, r.h, r.c0 + r.w - col - 1};
    }
    rects[best] = a;
    rects.push_back(b);
  }

  if (static_cast<int>(rects.size()) < params.min_rooms)
    throw GenerationError("bounds only fit " + std::to_string(rects.size()) +
                          " rooms, need at least " +
                          std::to_string(params.min_rooms));

  SceneLayout scene;
  scene.id = "scene_" + std::to_string(seed);
  scene.dataset = params.dataset;
  scene.seed = seed;
  scene.height = H;
  scene.width = W;
  scene.cell_size = cs;

  scene.prior = params.prior ? *params.prior
                             : PlacementPrior::from_matrix(
                                   bundled_matrix(params.dataset));
  const PlacementPrior& prior = scene.prior;
  for (size_t o = 0; o < prior.objects.size(); ++o) {
    double col = 0.0;
    for (size_t r = 0; r < prior.rooms.size(); ++r)
      col += prior.p[r * prior.objects.size() + o];
    if (std::abs(col - 1.0) > 1e-6)
      throw std::invalid_argument("placement prior column for '" +
                                  prior.objects[o] + "' sums to " +
                                  std::to_string(col));
  }

  const std::map<std::string, int> counts = params.object_counts.empty()
                                                ? default_object_counts(
                                                      params.dataset)
                                                : params.object_counts;
  for (const auto& [cat, count] : counts) {
    if (std::find(object_vocab.begin(), object_vocab.end(), cat) ==
        object_vocab.end())
      throw std::invalid_argument("object category '" + cat +
                                  "' is not in the " + params.dataset +
                                  " vocabulary");
    if (count < 0)
      throw std::invalid_argument("negative count for object '" + cat + "'");
  }

  // each requested object gets its most likely room somewhere in the scene,
  // so a concentrated prior can actually be honored; leftovers are shuffled
  std::vector<std::string> required;
  for (const auto& [cat, count] : counts) {
    if (count <= 0) continue;
    auto oit = std::find(prior.objects.begin(), prior.objects.end(), cat);
    if (oit == prior.objects.end()) continue;
    const int oi = static_cast<int>(oit - prior.objects.begin());
    int best_room = -1;
    for (size_t r = 0; r < prior.rooms.size(); ++r)
      if (prior.p[r * prior.objects.size() + oi] > 0.0 &&
          (best_room < 0 || prior.p[r * prior.objects.size() + oi] >
                                prior.p[size_t(best_room) *
                                            prior.objects.size() + oi]))
        best_room = static_cast<int>(r);
    if (best_room < 0) continue;
    const std::string& room = prior.rooms[best_room];
    if (std::find(room_vocab.begin(), room_vocab.end(), room) ==
            room_vocab.end() ||
        std::find(required.begin(), required.end(), room) != required.end())
      continue;
    required.push_back(room);
  }

  std::vector<std::string> shuffled = room_vocab;
  for (size_t i = shuffled.size() - 1; i > 0; --i)
    std::swap(shuffled[i], shuffled[rng.uniform_range(0, i)]);
  std::vector<std::string> assignment = required;
  for (const std::string& cat : shuffled)
    if (std::find(required.begin(), required.end(), cat) == required.end())
      assignment.push_back(cat);

  // largest rooms take the required categories, so bulky furniture has a
  // fighting chance of fitting its preferred room
  std::vector<size_t> by_area(rects.size());
  std::iota(by_area.begin(), by_area.end(), size_t{0});
  std::stable_sort(by_area.begin(), by_area.end(), [&](size_t a, size_t b) {
    return rects[a].area() > rects[b].area();
  });
  std::vector<std::string> category_of(rects.size());
  for (size_t k = 0; k < by_area.size(); ++k)
    category_of[by_area[k]] = assignment[k % assignment.size()];

  for (size_t i = 0; i < rects.size(); ++i) {
    RoomSpec room;
    room.category = category_of[i];
    room.rects = {rects[i]};
    scene.rooms.push_back(std::move(room));
  }
  for (const Cell& d : door_cells) {
    RoomSpec* host = nullptr;
    for (RoomSpec& room : scene.rooms) {
      bool touches = false;
      for (auto [dr, dc] : kD4)
        for (const RectI& rect : room.rects)
          if (rect.contains({d.r + dr, d.c + dc})) touches = true;
      if (touches) {
        room.doors.push_back(d);
        if (!host) host = &room;
      }
    }
    // doorway cells belong to the first room they touch, so every walkable
    // cell carries a room label
    if (host) host->rects.push_back({d.r, d.c, 1, 1});
  }

  for (const auto& [cat, count] : counts) {
    const int prior_obj = [&] {
      auto it = std::find(prior.objects.begin(), prior.objects.end(), cat);
      return it == prior.objects.end()
                 ? -1
                 : static_cast<int>(it - prior.objects.begin());
    }();
    std::vector<double> weights(scene.rooms.size(), 1.0);
    if (prior_obj >= 0)
      for (size_t i = 0; i < scene.rooms.size(); ++i) {
        auto it = std::find(prior.rooms.begin(), prior.rooms.end(),
                            scene.rooms[i].category);
        weights[i] = it == prior.rooms.end()
                         ? 0.0
                         : prior.prob(
                               static_cast<int>(it - prior.rooms.begin()),
                               prior_obj);
      }
    double total = std::accumulate(weights.begin(), weights.end(), 0.0);
    if (total <= 0.0) {
      std::fill(weights.begin(), weights.end(), 1.0);
      total = static_cast<double>(weights.size());
    }

    const auto [fm_h, fm_w] = object_footprint_m(cat);
    const int base_fh = cells_for(fm_h, cs), base_fw = cells_for(fm_w, cs);
    const auto fits = [&](const RectI& rect) {
      return (rect.h >= base_fh && rect.w >= base_fw) ||
             (rect.h >= base_fw && rect.w >= base_fh);
    };

    const auto try_place = [&](const std::vector<double>& wts, double wt_total) {
      for (int attempt = 0; attempt < 200; ++attempt) {
        double pick = rng.uniform01() * wt_total;
        size_t room_idx = 0;
        for (; room_idx + 1 < wts.size(); ++room_idx) {
          if (pick < wts[room_idx]) break;
          pick -= wts[room_idx];
        }
        const RectI& rect = scene.rooms[room_idx].rects[0];
        int fh = base_fh, fw = base_fw;
        if (rng.bernoulli(0.5)) std::swap(fh, fw);
        if (rect.h < fh || rect.w < fw) std::swap(fh, fw);
        if (rect.h < fh || rect.w < fw) continue;

        const int r0 =
            static_cast<int>(rng.uniform_range(rect.r0, rect.r0 + rect.h - fh));
        const int c0 =
            static_cast<int>(rng.uniform_range(rect.c0, rect.c0 + rect.w - fw));
        bool overlap = false;
        for (int r = r0; r < r0 + fh && !overlap; ++r)
          for (int c = c0; c < c0 + fw; ++c)
            if (grid.object[grid.idx(r, c)]) {
              overlap = true;
              break;
            }
        if (overlap) continue;

        ObjectSpec obj;
        obj.category = cat;
        for (int r = r0; r < r0 + fh; ++r)
          for (int c = c0; c < c0 + fw; ++c) {
            obj.cells.push_back({r, c});
            grid.object[grid.idx(r, c)] = 1;
          }
        scene.objects.push_back(obj);
        if (free_space_ok(grid, scene.objects)) return true;
        scene.objects.pop_back();
        for (const Cell& cell : obj.cells)
          grid.object[grid.idx(cell.r, cell.c)] = 0;
      }
      return false;
    };

    for (int instance = 0; instance < count; ++instance) {
      bool placed = try_place(weights, total);
      if (!placed) {
        // the preferred rooms are full or too small; retry anywhere it fits
        std::vector<double> relaxed(scene.rooms.size(), 0.0);
        for (size_t i = 0; i < scene.rooms.size(); ++i)
          relaxed[i] = fits(scene.rooms[i].rects[0]) ? 1.0 : 0.0;
        const double rt =
            std::accumulate(relaxed.begin(), relaxed.end(), 0.0);
        if (rt > 0.0) placed = try_place(relaxed, rt);
      }
      if (!placed)
        throw GenerationError("cannot place '" + cat + "' instance " +
                              std::to_string(instance + 1) + " of " +
                              std::to_string(count));
    }
  }

  for (int r = 0; r < H; ++r)
    for (int c = 0; c < W; ++c)
      if (grid.wall[grid.idx(r, c)]) scene.walls.push_back({r, c});

  if (!free_space_ok(grid, scene.objects))
    throw GenerationError("generated layout failed the connectivity check");
  return scene;
}

GridStack rasterize_scene(const SceneLayout& scene, double resolution) {
  const double out_res = resolution > 0.0 ? resolution : scene.cell_size;
  const int H = std::max(
      1, static_cast<int>(std::lround(scene.height * scene.cell_size / out_res)));
  const int W = std::max(
      1, static_cast<int>(std::lround(scene.width * scene.cell_size / out_res)));

  std::vector<ChannelDesc> channels = {{ChannelKind::Occupancy, "occupancy"}};
  std::vector<std::string> object_cats, room_cats;
  for (const std::string& cat : object_categories(scene.dataset))
    for (const ObjectSpec& obj : scene.objects)
      if (obj.category == cat) {
        object_cats.push_back(cat);
        break;
      }
  for (const std::string& cat : room_categories(scene.dataset))
    for (const RoomSpec& room : scene.rooms)
      if (room.category == cat) {
        room_cats.push_back(cat);
        break;
      }
  for (const std::string& cat : object_cats)
    channels.push_back({ChannelKind::Object, "object_" + cat});
  for (const std::string& cat : room_cats)
    channels.push_back({ChannelKind::Room, "room_" + cat});

  // native-resolution paint, then nearest-neighbor resample
  const size_t n = size_t(scene.height) * scene.width;
  std::vector<std::vector<float>> native(channels.size(),
                                         std::vector<float>(n, 0.0f));
  auto nidx = [&](int r, int c) { return size_t(r) * scene.width + c; };

  for (const Cell& wall : scene.walls) native[0][nidx(wall.r, wall.c)] = 1.0f;
  for (const ObjectSpec& obj : scene.objects) {
    const size_t ch =
        1 + (std::find(object_cats.begin(), object_cats.end(), obj.category) -
             object_cats.begin());
    for (const Cell& cell : obj.cells) {
      native[ch][nidx(cell.r, cell.c)] = 1.0f;
      native[0][nidx(cell.r, cell.c)] = 1.0f;
    }
  }
  for (const RoomSpec& room : scene.rooms) {
    const size_t ch =
        1 + object_cats.size() +
        (std::find(room_cats.begin(), room_cats.end(), room.category) -
         room_cats.begin());
    for (const RectI& rect : room.rects)
      for (int r = rect.r0; r < rect.r0 + rect.h; ++r)
        for (int c = rect.c0; c < rect.c0 + rect.w; ++c)
          native[ch][nidx(r, c)] = 1.0f;
  }

  GridStack out = new_grid(H, W, out_res, channels);
  for (size_t ch = 0; ch < channels.size(); ++ch)
    for (int r = 0; r < H; ++r)
      for (int c = 0; c < W; ++c) {
        int sr = static_cast<int>((r + 0.5) * out_res / scene.cell_size);
        int sc = static_cast<int>((c + 0.5) * out_res / scene.cell_size);
        sr = std::clamp(sr, 0, scene.height - 1);
        sc = std::clamp(sc, 0, scene.width - 1);
        out.set(ch, r, c, native[ch][nidx(sr, sc)]);
      }
  return out;
}

std::vector<uint8_t> navigable_mask(const GridStack& scene_raster) {
  const int occ = scene_raster.channel_index("occupancy");
  std::vector<uint8_t> mask(scene_raster.cell_count());
  for (size_t i = 0; i < mask.size(); ++i)
    mask[i] = scene_raster.data(occ)[i] == 0.0f ? 1 : 0;
  return mask;
}

namespace {

json cell_json(const Cell& c) { return json::array({c.r, c.c}); }

Cell cell_from(const json& j, const std::string& file, int height, int width) {
  if (!j.is_array() || j.size() != 2 || !j[0].is_number_integer() ||
      !j[1].is_number_integer())
    throw FormatError(file + ": cell must be an [row, col] integer pair");
  const Cell c{j[0].get<int>(), j[1].get<int>()};
  if (c.r < 0 || c.r >= height || c.c < 0 || c.c >= width)
    throw FormatError(file + ": cell (" + std::to_string(c.r) + ", " +
                      std::to_string(c.c) + ") outside the " +
                      std::to_string(height) + "x" + std::to_string(width) +
                      " grid");
  return c;
}

}  // namespace

void save_scene(const SceneLayout& scene, const std::filesystem::path& file) {
  json j;
  j["id"] = scene.id;
  j["dataset"] = scene.dataset;
  j["seed"] = scene.seed;
  j["height"] = scene.height;
  j["width"] = scene.width;
  j["cell_size"] = scene.cell_size;
  j["rooms"] = json::array();
  for (const RoomSpec& room : scene.rooms) {
    json rects = json::array(), doors = json::array();
    for (const RectI& r : room.rects)
      rects.push_back(json::array({r.r0, r.c0, r.h, r.w}));
    for (const Cell& d : room.doors) doors.push_back(cell_json(d));
    j["rooms"].push_back({{"category", room.category},
                          {"rects", std::move(rects)},
                          {"doors", std::move(doors)}});
  }
  j["objects"] = json::array();
  for (const ObjectSpec& obj : scene.objects) {
    json cells = json::array();
    for (const Cell& c : obj.cells) cells.push_back(cell_json(c));
    j["objects"].push_back(
        {{"category", obj.category}, {"cells", std::move(cells)}});
  }
  j["walls"] = json::array();
  for (const Cell& wall : scene.walls) j["walls"].push_back(cell_json(wall));
  json prows = json::array();
  for (size_t r = 0; r < scene.prior.rooms.size(); ++r) {
    json row = json::array();
    for (size_t o = 0; o < scene.prior.objects.size(); ++o)
      row.push_back(scene.prior.p[r * scene.prior.objects.size() + o]);
    prows.push_back(std::move(row));
  }
  j["prior"] = {{"rooms", scene.prior.rooms},
                {"objects", scene.prior.objects},
                {"p", std::move(prows)}};

  std::ofstream out(file);
  if (!out) throw FormatError("cannot open " + file.string() + " for writing");
  out << j.dump(2) << '\n';
  if (!out) throw FormatError("failed writing " + file.string());
}

SceneLayout load_scene(const std::filesystem::path& file) {
  std::ifstream in(file);
  if (!in) throw FormatError("cannot open " + file.string());
  json j = json::parse(in, nullptr, false);
  if (j.is_discarded()) throw FormatError(file.string() + ": not valid JSON");
  const std::string fname = file.string();

  for (const char* key : {"id", "dataset", "seed", "height", "width",
                          "cell_size", "rooms", "objects", "walls"})
    if (!j.contains(key))
      throw FormatError(fname + ": missing field '" + key + "'");

  SceneLayout scene;
  scene.id = j["id"].get<std::string>();
  scene.dataset = j["dataset"].get<std::string>();
  scene.seed = j["seed"].get<uint64_t>();
  scene.height = j["height"].get<int>();
  scene.width = j["width"].get<int>();
  scene.cell_size = j["cell_size"].get<double>();
  if (scene.height <= 0 || scene.width <= 0)
    throw FormatError(fname + ": grid dimensions must be positive");
  if (scene.cell_size <= 0.0)
    throw FormatError(fname + ": cell_size must be positive");

  const std::vector<std::string>* room_vocab = nullptr;
  const std::vector<std::string>* object_vocab = nullptr;
  try {
    room_vocab = &room_categories(scene.dataset);
    object_vocab = &object_categories(scene.dataset);
  } catch (const std::invalid_argument& e) {
    throw FormatError(fname + ": " + e.what());
  }

  for (const auto& jr : j["rooms"]) {
    RoomSpec room;
    room.category = jr.at("category").get<std::string>();
    if (std::find(room_vocab->begin(), room_vocab->end(), room.category) ==
        room_vocab->end())
      throw FormatError(fname + ": unknown room category '" + room.category +
                        "'");
    for (const auto& rr : jr.at("rects")) {
      if (!rr.is_array() || rr.size() != 4)
        throw FormatError(fname + ": rect must be [r0, c0, h, w]");
      const RectI rect{rr[0].get<int>(), rr[1].get<int>(), rr[2].get<int>(),
                       rr[3].get<int>()};
      if (rect.h <= 0 || rect.w <= 0 || rect.r0 < 0 || rect.c0 < 0 ||
          rect.r0 + rect.h > scene.height || rect.c0 + rect.w > scene.width)
        throw FormatError(fname + ": rect for room '" + room.category +
                          "' leaves the grid");
      room.rects.push_back(rect);
    }
    if (jr.contains("doors"))
      for (const auto& d : jr["doors"])
        room.doors.push_back(cell_from(d, fname, scene.height, scene.width));
    scene.rooms.push_back(std::move(room));
  }

  for (const auto& jo : j["objects"]) {
    ObjectSpec obj;
    obj.category = jo.at("category").get<std::string>();
    if (std::find(object_vocab->begin(), object_vocab->end(), obj.category) ==
        object_vocab->end())
      throw FormatError(fname + ": unknown object category '" + obj.category +
                        "'");
    for (const auto& c : jo.at("cells"))
      obj.cells.push_back(cell_from(c, fname, scene.height, scene.width));
    if (obj.cells.empty())
      throw FormatError(fname + ": object '" + obj.category +
                        "' has no cells");
    scene.objects.push_back(std::move(obj));
  }

  for (const auto& wj : j["walls"])
    scene.walls.push_back(cell_from(wj, fname, scene.height, scene.width));

  if (j.contains("prior")) {
    const auto& jp = j["prior"];
    scene.prior.rooms = jp.at("rooms").get<std::vector<std::string>>();
    scene.prior.objects = jp.at("objects").get<std::vector<std::string>>();
    const auto& rows = jp.at("p");
    if (rows.size() != scene.prior.rooms.size())
      throw FormatError(fname + ": prior has " + std::to_string(rows.size()) +
                        " rows, expected " +
                        std::to_string(scene.prior.rooms.size()));
    for (const auto& row : rows) {
      if (row.size() != scene.prior.objects.size())
        throw FormatError(fname + ": prior row length mismatch");
      for (const auto& v : row) scene.prior.p.push_back(v.get<double>());
    }
    for (size_t o = 0; o < scene.prior.objects.size(); ++o) {
      double col = 0.0;
      for (size_t r = 0; r < scene.prior.rooms.size(); ++r)
        col += scene.prior.p[r * scene.prior.objects.size() + o];
      if (std::abs(col - 1.0) > 1e-6)
        throw FormatError(fname + ": prior column for '" +
                          scene.prior.objects[o] + "' sums to " +
                          std::to_string(col));
    }
  } else {
    scene.prior = PlacementPrior::from_matrix(bundled_matrix(scene.dataset));
  }

  // semantic checks: disjoint rooms, objects off walls, connected free space
  OccGrid grid(scene.height, scene.width);
  std::vector<uint8_t> painted(grid.wall.size(), 0);
  for (const RoomSpec& room : scene.rooms)
    for (const RectI& rect : room.rects)
      for (int r = rect.r0; r < rect.r0 + rect.h; ++r)
        for (int c = rect.c0; c < rect.c0 + rect.w; ++c) {
          if (painted[grid.idx(r, c)])
            throw FormatError(fname + ": room rectangles overlap at (" +
                              std::to_string(r) + ", " + std::to_string(c) +
                              ")");
          painted[grid.idx(r, c)] = 1;
        }
  for (const Cell& wall : scene.walls) grid.wall[grid.idx(wall.r, wall.c)] = 1;
  for (const ObjectSpec& obj : scene.objects)
    for (const Cell& cell : obj.cells) {
      if (grid.wall[grid.idx(cell.r, cell.c)])
        throw FormatError(fname + ": object '" + obj.category +
                          "' overlaps a wall at (" + std::to_string(cell.r) +
                          ", " + std::to_string(cell.c) + ")");
      grid.object[grid.idx(cell.r, cell.c)] = 1;
    }
  if (!free_space_ok(grid, scene.objects))
    throw FormatError(fname +
                      ": free space is not a single connected component "
                      "with every object reachable");
  return scene;
}

}  // namespace ognav
