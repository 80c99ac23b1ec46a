#include "ognav/dataset.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <iostream>
#include <map>
#include <queue>
#include <set>
#include <stdexcept>

#include "json.hpp"

namespace ognav {

using json = nlohmann::json;

namespace {

constexpr int kD4[4][2] = {{1, 0}, {-1, 0}, {0, 1}, {0, -1}};

std::vector<uint8_t> free_mask(const GridStack& g) {
  const auto& occ = g.data("occupancy");
  std::vector<uint8_t> open(occ.size());
  for (size_t i = 0; i < occ.size(); ++i) open[i] = occ[i] == 0.0f ? 1 : 0;
  return open;
}

// largest 4-connected component of open cells; empty when nothing is open
std::vector<Cell> largest_component(const std::vector<uint8_t>& open, int h,
                                    int w) {
  std::vector<int> comp(open.size(), -1);
  std::vector<Cell> best;
  int labels = 0;
  for (int r = 0; r < h; ++r)
    for (int c = 0; c < w; ++c) {
      const size_t i = size_t(r) * w + c;
      if (!open[i] || comp[i] >= 0) continue;
      std::vector<Cell> cells;
      std::queue<Cell> q;
      q.push({r, c});
      comp[i] = labels;
      while (!q.empty()) {
        Cell cur = q.front();
        q.pop();
        cells.push_back(cur);
        for (auto [dr, dc] : kD4) {
          Cell nb{cur.r + dr, cur.c + dc};
          if (nb.r < 0 || nb.r >= h || nb.c < 0 || nb.c >= w) continue;
          const size_t j = size_t(nb.r) * w + nb.c;
          if (!open[j] || comp[j] >= 0) continue;
          comp[j] = labels;
          q.push(nb);
        }
      }
      if (cells.size() > best.size()) best = std::move(cells);
      ++labels;
    }
  return best;
}

}  // namespace

size_t FrontierSet::cell_total() const {
  size_t n = 0;
  for (const Frontier& f : frontiers) n += f.cells.size();
  return n;
}

std::vector<uint8_t> explored_from_path(const GridStack& complete,
                                        const std::vector<Cell>& path,
                                        double patch_m) {
  if (patch_m <= 0.0) throw std::invalid_argument("patch_m must be positive");
  const int h = complete.height(), w = complete.width();
  const int hr =
      static_cast<int>(std::floor(patch_m / (2.0 * complete.resolution()) +
                                  1e-9));
  std::vector<uint8_t> explored(complete.cell_count(), 0);
  for (const Cell& p : path)
    for (int r = std::max(0, p.r - hr); r <= std::min(h - 1, p.r + hr); ++r)
      for (int c = std::max(0, p.c - hr); c <= std::min(w - 1, p.c + hr); ++c)
        explored[size_t(r) * w + c] = 1;
  return explored;
}

PartialMap sample_partial_map(const GridStack& complete, Rng& rng,
                              const SampleParams& params) {
  PartialMap pm;
  if (params.augment) {
    const double angle = rng.uniform(0.0, 2.0 * M_PI);
    const int dx = rng.uniform_range(-params.max_shift_cells,
                                     params.max_shift_cells);
    const int dy = rng.uniform_range(-params.max_shift_cells,
                                     params.max_shift_cells);
    pm.complete = transform(complete, angle, dx, dy);
  } else {
    pm.complete = complete;
  }

  const int h = pm.complete.height(), w = pm.complete.width();
  const std::vector<uint8_t> open = free_mask(pm.complete);
  // rotation aliasing can shave free slivers off the map edge, so the walk is
  // confined to the dominant component
  const std::vector<Cell> component = largest_component(open, h, w);
  if (component.empty())
    throw std::invalid_argument("map has no navigable cells");

  const Cell start = component[rng.uniform_int(component.size())];
  const DistanceField field = geodesic_field(open, h, w,
                                             pm.complete.resolution(), {start});
  const Cell goal = component[rng.uniform_int(component.size())];

  std::vector<Cell> swept = {goal};
  const std::vector<Cell> walk = shortest_path(field, goal);
  swept.insert(swept.end(), walk.begin(), walk.end());
  pm.explored = explored_from_path(pm.complete, swept, params.patch_m);
  return pm;
}

FrontierSet extract_frontiers(const std::vector<float>& occupancy,
                              const std::vector<uint8_t>& explored, int height,
                              int width, int min_cells) {
  if (occupancy.size() != size_t(height) * width ||
      explored.size() != occupancy.size())
    throw std::invalid_argument("occupancy/explored size mismatch");

  const auto at = [&](int r, int c) { return size_t(r) * width + c; };
  std::vector<uint8_t> is_frontier(occupancy.size(), 0);
  for (int r = 0; r < height; ++r)
    for (int c = 0; c < width; ++c) {
      if (!explored[at(r, c)] || occupancy[at(r, c)] != 0.0f) continue;
      for (int dr = -1; dr <= 1 && !is_frontier[at(r, c)]; ++dr)
        for (int dc = -1; dc <= 1; ++dc) {
          if (dr == 0 && dc == 0) continue;
          const int rr = r + dr, cc = c + dc;
          if (rr < 0 || rr >= height || cc < 0 || cc >= width) continue;
          if (!explored[at(rr, cc)]) {
            is_frontier[at(r, c)] = 1;
            break;
          }
        }
    }

  FrontierSet fs;
  fs.height = height;
  fs.width = width;
  fs.label.assign(occupancy.size(), -1);

  std::vector<uint8_t> seen(occupancy.size(), 0);
  for (int r = 0; r < height; ++r)
    for (int c = 0; c < width; ++c) {
      if (!is_frontier[at(r, c)] || seen[at(r, c)]) continue;
      std::vector<Cell> cells;
      std::queue<Cell> q;
      q.push({r, c});
      seen[at(r, c)] = 1;
      while (!q.empty()) {
        Cell cur = q.front();
        q.pop();
        cells.push_back(cur);
        for (int dr = -1; dr <= 1; ++dr)
          for (int dc = -1; dc <= 1; ++dc) {
            if (dr == 0 && dc == 0) continue;
            const int rr = cur.r + dr, cc = cur.c + dc;
            if (rr < 0 || rr >= height || cc < 0 || cc >= width) continue;
            if (!is_frontier[at(rr, cc)] || seen[at(rr, cc)]) continue;
            seen[at(rr, cc)] = 1;
            q.push({rr, cc});
          }
      }
      if (static_cast<int>(cells.size()) < min_cells) continue;
      const int id = static_cast<int>(fs.frontiers.size());
      for (const Cell& cell : cells) fs.label[at(cell.r, cell.c)] = id;
      fs.frontiers.push_back({id, std::move(cells)});
    }
  return fs;
}

FrontierSet extract_frontiers(const PartialMap& pm, int min_cells) {
  return extract_frontiers(pm.complete.data("occupancy"), pm.explored,
                           pm.complete.height(), pm.complete.width(),
                           min_cells);
}

namespace {

// free cells orthogonally adjacent to any instance footprint cell
std::vector<Cell> instance_boundary(const GridStack& complete,
                                    const std::string& category) {
  const std::string name = "object_" + category;
  if (!complete.has_channel(name))
    throw std::invalid_argument("map has no '" + category + "' instances");
  const auto& inst = complete.data(name);
  const auto& occ = complete.data("occupancy");
  const int h = complete.height(), w = complete.width();

  std::set<std::pair<int, int>> out;
  for (int r = 0; r < h; ++r)
    for (int c = 0; c < w; ++c) {
      if (inst[size_t(r) * w + c] == 0.0f) continue;
      for (auto [dr, dc] : kD4) {
        const int rr = r + dr, cc = c + dc;
        if (rr < 0 || rr >= h || cc < 0 || cc >= w) continue;
        if (occ[size_t(rr) * w + cc] == 0.0f) out.insert({rr, cc});
      }
    }
  if (out.empty())
    throw std::invalid_argument("no navigable cell borders a '" + category +
                                "' instance");
  std::vector<Cell> cells;
  cells.reserve(out.size());
  for (auto [r, c] : out) cells.push_back({r, c});
  return cells;
}

}  // namespace

std::vector<Cell> success_region(const GridStack& complete,
                                 const std::string& category, double radius_m) {
  if (radius_m < 0.0) throw std::invalid_argument("radius_m must be >= 0");
  const std::vector<Cell> sources = instance_boundary(complete, category);
  const std::vector<uint8_t> open = free_mask(complete);
  FmmOptions opts;
  opts.cutoff = radius_m;
  const DistanceField field =
      geodesic_field(open, complete.height(), complete.width(),
                     complete.resolution(), sources, opts);
  std::vector<Cell> region;
  for (int r = 0; r < field.height; ++r)
    for (int c = 0; c < field.width; ++c)
      if (field.at(r, c) <= radius_m + 1e-9) region.push_back({r, c});
  return region;
}

DistanceField category_distance_field(const GridStack& complete,
                                      const std::string& category,
                                      double radius_m) {
  const std::vector<Cell> region = success_region(complete, category, radius_m);
  const std::vector<uint8_t> open = free_mask(complete);
  return geodesic_field(open, complete.height(), complete.width(),
                        complete.resolution(), region);
}

double object_decay(double d_g, double d_max) {
  if (d_max <= 0.0) throw std::invalid_argument("d_max must be positive");
  if (d_g == kUnreachable) return 0.0;
  return std::max(1.0 - d_g / d_max, 0.0);
}

std::vector<float> object_potential(const FrontierSet& fs,
                                    const DistanceField& category_dist,
                                    double d_max) {
  if (category_dist.height != fs.height || category_dist.width != fs.width)
    throw std::invalid_argument("distance field does not match the frontiers");
  std::vector<float> out(size_t(fs.height) * fs.width, 0.0f);
  for (const Frontier& f : fs.frontiers)
    for (const Cell& cell : f.cells)
      out[size_t(cell.r) * fs.width + cell.c] =
          static_cast<float>(object_decay(category_dist.at(cell), d_max));
  return out;
}

std::vector<float> object_potential(const PartialMap& pm,
                                    const std::string& category, double d_max) {
  return object_potential(extract_frontiers(pm),
                          category_distance_field(pm.complete, category),
                          d_max);
}

std::vector<float> area_potential(const FrontierSet& fs,
                                  const std::vector<uint8_t>& navigable,
                                  const std::vector<uint8_t>& explored) {
  const int h = fs.height, w = fs.width;
  if (navigable.size() != size_t(h) * w || explored.size() != navigable.size())
    throw std::invalid_argument("navigable/explored size mismatch");
  const auto at = [&](int r, int c) { return size_t(r) * w + c; };

  size_t total_navigable = 0;
  for (uint8_t v : navigable) total_navigable += v != 0;
  std::vector<float> out(navigable.size(), 0.0f);
  if (total_navigable == 0 || fs.frontiers.empty()) return out;

  // 4-connected components of unexplored navigable space, each credited to
  // the frontier with the most orthogonal contacts
  std::vector<double> credit(fs.frontiers.size(), 0.0);
  std::vector<uint8_t> seen(navigable.size(), 0);
  for (int r = 0; r < h; ++r)
    for (int c = 0; c < w; ++c) {
      if (!navigable[at(r, c)] || explored[at(r, c)] || seen[at(r, c)])
        continue;
      std::vector<Cell> cells;
      std::queue<Cell> q;
      q.push({r, c});
      seen[at(r, c)] = 1;
      while (!q.empty()) {
        Cell cur = q.front();
        q.pop();
        cells.push_back(cur);
        for (auto [dr, dc] : kD4) {
          Cell nb{cur.r + dr, cur.c + dc};
          if (nb.r < 0 || nb.r >= h || nb.c < 0 || nb.c >= w) continue;
          if (!navigable[at(nb.r, nb.c)] || explored[at(nb.r, nb.c)] ||
              seen[at(nb.r, nb.c)])
            continue;
          seen[at(nb.r, nb.c)] = 1;
          q.push(nb);
        }
      }
      std::vector<int> contacts(fs.frontiers.size(), 0);
      for (const Cell& cell : cells)
        for (auto [dr, dc] : kD4) {
          const int rr = cell.r + dr, cc = cell.c + dc;
          if (rr < 0 || rr >= h || cc < 0 || cc >= w) continue;
          const int id = fs.label[at(rr, cc)];
          if (id >= 0) ++contacts[id];
        }
      const auto best = std::max_element(contacts.begin(), contacts.end());
      if (*best > 0) credit[best - contacts.begin()] += double(cells.size());
    }

  for (const Frontier& f : fs.frontiers) {
    const float v =
        static_cast<float>(credit[f.id] / double(total_navigable));
    for (const Cell& cell : f.cells) out[at(cell.r, cell.c)] = v;
  }
  return out;
}

std::vector<float> area_potential(const PartialMap& pm) {
  return area_potential(extract_frontiers(pm), free_mask(pm.complete),
                        pm.explored);
}

std::vector<float> o2r_potential(const FrontierSet& fs,
                                 const GridStack& complete, const O2RMatrix& m,
                                 const std::string& category) {
  if (complete.height() != fs.height || complete.width() != fs.width)
    throw std::invalid_argument("map does not match the frontiers");
  const int obj = m.object_index(category);
  if (obj < 0)
    throw std::invalid_argument("matrix has no object category '" + category +
                                "'");

  struct RoomChannel {
    int channel;
    int matrix_row;  // -1 when the matrix does not know the room
    std::string name;
  };
  std::vector<RoomChannel> rooms;
  std::set<std::string> warned;
  for (int ch = 0; ch < complete.channel_count(); ++ch) {
    const std::string& name = complete.channels()[ch].name;
    if (name.rfind("room_", 0) != 0) continue;
    const std::string room = name.substr(5);
    const int row = m.room_index(room);
    if (row < 0 && warned.insert(room).second)
      std::cerr << "warning: room '" << room
                << "' is not in the scoring matrix; scoring 0\n";
    rooms.push_back({ch, row, room});
  }

  std::vector<float> out(size_t(fs.height) * fs.width, 0.0f);
  for (const Frontier& f : fs.frontiers)
    for (const Cell& cell : f.cells) {
      float v = 0.0f;
      for (const RoomChannel& rc : rooms)
        if (complete.at(rc.channel, cell.r, cell.c) != 0.0f) {
          if (rc.matrix_row >= 0)
            v = static_cast<float>(m.score(rc.matrix_row, obj));
          break;
        }
      out[size_t(cell.r) * fs.width + cell.c] = v;
    }
  return out;
}

std::vector<float> o2r_potential(const PartialMap& pm, const O2RMatrix& m,
                                 const std::string& category) {
  return o2r_potential(extract_frontiers(pm), pm.complete, m, category);
}

DatasetSample make_sample(const std::string& id, const std::string& scene_id,
                          uint64_t seed, const PartialMap& pm,
                          const O2RMatrix& matrix,
                          const std::vector<std::string>& categories,
                          double d_max, double patch_m) {
  DatasetSample sample;
  sample.id = id;
  sample.scene_id = scene_id;
  sample.seed = seed;
  sample.patch_m = patch_m;
  sample.d_max = d_max;
  sample.categories = categories;

  std::vector<ChannelDesc> channels = {{ChannelKind::Explored, "explored"},
                                       {ChannelKind::Occupancy, "occupancy"},
                                       {ChannelKind::Potential, "area"}};
  for (const std::string& cat : categories) {
    channels.push_back({ChannelKind::Potential, "object_" + cat});
    channels.push_back({ChannelKind::Potential, "o2r_" + cat});
  }
  sample.maps = new_grid(pm.complete.height(), pm.complete.width(),
                         pm.complete.resolution(), channels);

  for (size_t i = 0; i < pm.explored.size(); ++i)
    sample.maps.data(0)[i] = pm.explored[i] ? 1.0f : 0.0f;
  sample.maps.data(1) = pm.complete.data("occupancy");

  const FrontierSet fs = extract_frontiers(pm);
  sample.maps.data(2) = area_potential(fs, free_mask(pm.complete), pm.explored);
  int ch = 3;
  for (const std::string& cat : categories) {
    sample.maps.data(ch++) = object_potential(
        fs, category_distance_field(pm.complete, cat), d_max);
    sample.maps.data(ch++) = o2r_potential(fs, pm.complete, matrix, cat);
  }
  return sample;
}

void emit_sample(const DatasetSample& sample,
                 const std::filesystem::path& dir) {
  write_raster(sample.maps, dir);
  json j;
  j["id"] = sample.id;
  j["scene_id"] = sample.scene_id;
  j["seed"] = sample.seed;
  j["patch_m"] = sample.patch_m;
  j["d_max"] = sample.d_max;
  j["categories"] = sample.categories;
  std::ofstream out(dir / "sample.json", std::ios::binary);
  out << j.dump(2) << '\n';
  if (!out)
    throw FormatError("cannot write " + (dir / "sample.json").string());
}

DatasetSample load_sample(const std::filesystem::path& dir) {
  const auto meta_path = dir / "sample.json";
  std::ifstream in(meta_path, std::ios::binary);
  if (!in) throw FormatError("cannot open " + meta_path.string());
  json j = json::parse(in, nullptr, false);
  if (j.is_discarded())
    throw FormatError(meta_path.string() + ": not valid JSON");
  for (const char* key :
       {"id", "scene_id", "seed", "patch_m", "d_max", "categories"})
    if (!j.contains(key))
      throw FormatError(meta_path.string() + ": missing field '" +
                        std::string(key) + "'");

  DatasetSample sample;
  sample.id = j["id"].get<std::string>();
  sample.scene_id = j["scene_id"].get<std::string>();
  sample.seed = j["seed"].get<uint64_t>();
  sample.patch_m = j["patch_m"].get<double>();
  sample.d_max = j["d_max"].get<double>();
  sample.categories = j["categories"].get<std::vector<std::string>>();
  sample.maps = read_raster(dir);

  for (const char* name : {"explored", "occupancy", "area"})
    if (!sample.maps.has_channel(name))
      throw FormatError(meta_path.string() + ": raster is missing the '" +
                        std::string(name) + "' channel");
  for (const std::string& cat : sample.categories)
    for (const std::string& prefix : {"object_", "o2r_"})
      if (!sample.maps.has_channel(prefix + cat))
        throw FormatError(meta_path.string() + ": raster is missing the '" +
                          prefix + cat + "' channel");
  return sample;
}

uint64_t hash_dir_contents(const std::filesystem::path& dir) {
  namespace fs = std::filesystem;
  if (!fs::is_directory(dir))
    throw FormatError(dir.string() + " is not a directory");
  std::vector<fs::path> files;
  for (const auto& entry : fs::recursive_directory_iterator(dir))
    if (entry.is_regular_file()) files.push_back(entry.path());
  std::vector<std::string> rel;
  rel.reserve(files.size());
  for (const auto& f : files)
    rel.push_back(f.lexically_relative(dir).generic_string());
  std::sort(rel.begin(), rel.end());

  uint64_t h = 0xcbf29ce484222325ull;
  for (const std::string& name : rel) {
    h = fnv1a(name.data(), name.size(), h);
    std::ifstream in(dir / name, std::ios::binary);
    if (!in) throw FormatError("cannot open " + (dir / name).string());
    char buf[1 << 16];
    while (in.read(buf, sizeof buf) || in.gcount() > 0)
      h = fnv1a(buf, static_cast<size_t>(in.gcount()), h);
  }
  return h;
}

void write_manifest(const std::vector<ManifestEntry>& entries,
                    const std::filesystem::path& file) {
  json j = json::array();
  for (const ManifestEntry& e : entries) {
    char hex[19];
    std::snprintf(hex, sizeof hex, "%016llx",
                  static_cast<unsigned long long>(e.hash));
    j.push_back({{"dir", e.dir}, {"fnv1a64", std::string(hex)}});
  }
  std::ofstream out(file, std::ios::binary);
  out << j.dump(2) << '\n';
  if (!out) throw FormatError("cannot write " + file.string());
}

std::vector<ManifestEntry> read_manifest(const std::filesystem::path& file) {
  std::ifstream in(file, std::ios::binary);
  if (!in) throw FormatError("cannot open " + file.string());
  json j = json::parse(in, nullptr, false);
  if (j.is_discarded() || !j.is_array())
    throw FormatError(file.string() + ": manifest must be a JSON array");
  std::vector<ManifestEntry> entries;
  for (const auto& je : j) {
    if (!je.contains("dir") || !je.contains("fnv1a64"))
      throw FormatError(file.string() +
                        ": manifest entries need 'dir' and 'fnv1a64'");
    ManifestEntry e;
    e.dir = je["dir"].get<std::string>();
    const std::string hex = je["fnv1a64"].get<std::string>();
    char* end = nullptr;
    e.hash = std::strtoull(hex.c_str(), &end, 16);
    if (end != hex.c_str() + hex.size() || hex.empty())
      throw FormatError(file.string() + ": bad hash '" + hex + "'");
    entries.push_back(std::move(e));
  }
  return entries;
}

}  // namespace ognav
