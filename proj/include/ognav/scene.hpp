#pragma once

#include <cstdint>
#include <map>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include "ognav/grid.hpp"
#include "ognav/o2r.hpp"
#include "ognav/rng.hpp"

namespace ognav {

class GenerationError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

struct RectI {
  int r0 = 0, c0 = 0, h = 0, w = 0;  // cells
  bool contains(Cell cell) const {
    return cell.r >= r0 && cell.r < r0 + h && cell.c >= c0 && cell.c < c0 + w;
  }
  int area() const { return h * w; }
};

struct RoomSpec {
  std::string category;
  std::vector<RectI> rects;
  std::vector<Cell> doors;  // carved wall cells on this room's boundary
};

struct ObjectSpec {
  std::string category;
  std::vector<Cell> cells;  // footprint, blocks navigation
};

/** Per-object distribution over rooms (columns sum to 1). */
struct PlacementPrior {
  std::vector<std::string> rooms;
  std::vector<std::string> objects;
  std::vector<double> p;  // rooms x objects, row-major

  double prob(int room_idx, int object_idx) const;
  // mass proportional to max(score - threshold, 0) per column; a column with
  // no room above threshold falls back to uniform over positive rooms, then
  // uniform over all rooms
  static PlacementPrior from_matrix(const O2RMatrix& m, double threshold = 0.3);
};

struct SceneLayout {
  std::string id;
  std::string dataset = "gibson";  // fixes the category vocabulary
  uint64_t seed = 0;
  int height = 0, width = 0;  // cells
  double cell_size = 0.1;     // meters per cell
  std::vector<RoomSpec> rooms;
  std::vector<ObjectSpec> objects;
  std::vector<Cell> walls;
  PlacementPrior prior;  // the prior the objects were actually drawn from
};

struct SceneGenParams {
  std::string dataset = "gibson";
  double width_m = 12.0;
  double height_m = 12.0;
  double cell_size = 0.1;
  int min_rooms = 5;
  int max_rooms = 9;
  double min_room_side_m = 1.5;
  double door_width_m = 0.8;
  // category -> instance count; empty selects a small house-like default
  std::map<std::string, int> object_counts;
  // default: PlacementPrior::from_matrix(bundled_matrix(dataset))
  std::optional<PlacementPrior> prior;
};

/** Recursive rectangle splitting with doored interior walls; free space stays
    one connected component and every object keeps a reachable neighbor cell.
    Throws GenerationError when the parameters cannot be satisfied. */
SceneLayout generate_scene(const SceneGenParams& params, uint64_t seed);

/** Channels: "occupancy" (walls + object footprints), one object channel per
    placed category ("object_<cat>"), one room channel per present category
    ("room_<cat>"). resolution <= 0 keeps the layout's native cell size. */
GridStack rasterize_scene(const SceneLayout& scene, double resolution = 0.0);

std::vector<uint8_t> navigable_mask(const GridStack& scene_raster);

void save_scene(const SceneLayout& scene, const std::filesystem::path& file);
SceneLayout load_scene(const std::filesystem::path& file);

// category vocabularies for the bundled datasets
const std::vector<std::string>& room_categories(const std::string& dataset);
const std::vector<std::string>& object_categories(const std::string& dataset);

// default footprint (meters) per object category
std::pair<double, double> object_footprint_m(const std::string& category);

}  // namespace ognav
