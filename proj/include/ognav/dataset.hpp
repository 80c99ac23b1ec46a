#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include "ognav/fmm.hpp"
#include "ognav/grid.hpp"
#include "ognav/o2r.hpp"
#include "ognav/rng.hpp"

namespace ognav {

/** A complete map plus the explored subset an agent has swept so far. */
struct PartialMap {
  GridStack complete;             // possibly augmented copy of the scene raster
  std::vector<uint8_t> explored;  // height x width
};

struct Frontier {
  int id = 0;
  std::vector<Cell> cells;
};

/** Frontier cells grouped into components, plus a per-cell component label
    (-1 off frontiers). */
struct FrontierSet {
  int height = 0, width = 0;
  std::vector<Frontier> frontiers;
  std::vector<int> label;

  bool is_frontier(int r, int c) const {
    return label[static_cast<size_t>(r) * width + c] >= 0;
  }
  size_t cell_total() const;
};

struct SampleParams {
  double patch_m = 0.3;  // side of the square swept around each path cell
  bool augment = true;   // random rotation + shift of the complete map first
  int max_shift_cells = 10;
};

/** Union of patch_m x patch_m patches centered on start and on every path
    cell. */
std::vector<uint8_t> explored_from_path(const GridStack& complete,
                                        const std::vector<Cell>& path,
                                        double patch_m);

/** Draws two navigable, mutually reachable cells, walks the geodesic between
    them and sweeps patches along it. */
PartialMap sample_partial_map(const GridStack& complete, Rng& rng,
                              const SampleParams& params = {});

/** Frontier cells: explored, free, with an unexplored cell among their eight
    neighbors. Components are 8-connected; those under min_cells are dropped. */
FrontierSet extract_frontiers(const std::vector<float>& occupancy,
                              const std::vector<uint8_t>& explored, int height,
                              int width, int min_cells = 4);
FrontierSet extract_frontiers(const PartialMap& pm, int min_cells = 4);

/** Navigable cells whose geodesic distance to the category's instances stays
    under radius_m; the goal region for planning and adjudication. */
std::vector<Cell> success_region(const GridStack& complete,
                                 const std::string& category,
                                 double radius_m = 1.0);

/** Distance to the category's success region from everywhere reachable. */
DistanceField category_distance_field(const GridStack& complete,
                                      const std::string& category,
                                      double radius_m = 1.0);

double object_decay(double d_g, double d_max);  // max(1 - d/d_max, 0)

// Each potential is a full-size channel, zero off frontier cells.
std::vector<float> object_potential(const FrontierSet& fs,
                                    const DistanceField& category_dist,
                                    double d_max = 5.0);
std::vector<float> object_potential(const PartialMap& pm,
                                    const std::string& category,
                                    double d_max = 5.0);

/** Fraction of total navigable area covered by the unexplored navigable
    components assigned to each frontier (4-connected contact; a component
    counts toward the frontier it touches most). */
std::vector<float> area_potential(const FrontierSet& fs,
                                  const std::vector<uint8_t>& navigable,
                                  const std::vector<uint8_t>& explored);
std::vector<float> area_potential(const PartialMap& pm);

/** h(room(cell), category) per frontier cell; cells outside any labeled room
    score 0; rooms missing from the matrix score 0 once with a warning. */
std::vector<float> o2r_potential(const FrontierSet& fs,
                                 const GridStack& complete, const O2RMatrix& m,
                                 const std::string& category);
std::vector<float> o2r_potential(const PartialMap& pm, const O2RMatrix& m,
                                 const std::string& category);

struct DatasetSample {
  std::string id;
  std::string scene_id;
  uint64_t seed = 0;
  double patch_m = 0.3;
  double d_max = 5.0;
  std::vector<std::string> categories;
  // channels: "explored", "occupancy", "area", then per category
  // "object_<cat>" and "o2r_<cat>"
  GridStack maps;
};

DatasetSample make_sample(const std::string& id, const std::string& scene_id,
                          uint64_t seed, const PartialMap& pm,
                          const O2RMatrix& matrix,
                          const std::vector<std::string>& categories,
                          double d_max = 5.0, double patch_m = 0.3);

void emit_sample(const DatasetSample& sample,
                 const std::filesystem::path& dir);
DatasetSample load_sample(const std::filesystem::path& dir);

struct ManifestEntry {
  std::string dir;  // relative
  uint64_t hash = 0;
};

uint64_t hash_dir_contents(const std::filesystem::path& dir);
void write_manifest(const std::vector<ManifestEntry>& entries,
                    const std::filesystem::path& file);
std::vector<ManifestEntry> read_manifest(const std::filesystem::path& file);

}  // namespace ognav
