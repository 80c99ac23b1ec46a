#pragma once

#include <limits>
#include <optional>
#include <vector>

#include "ognav/grid.hpp"

namespace ognav {

constexpr double kUnreachable = std::numeric_limits<double>::infinity();

// descent was asked to start from a cell the front never reached
class NoPathError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/** Geodesic distances (meters) from a source set over a traversable mask,
    solved with a first-order upwind fast marching scheme. */
struct DistanceField {
  int height = 0, width = 0;
  double resolution = 0.0;
  std::vector<double> value;  // kUnreachable where the front never arrived

  double at(int r, int c) const {
    return value[static_cast<size_t>(r) * width + c];
  }
  double at(Cell cell) const { return at(cell.r, cell.c); }
  bool reachable(Cell cell) const { return at(cell) < kUnreachable; }
};

struct FmmOptions {
  // stop marching once the front passes this distance (meters)
  double cutoff = kUnreachable;
  // stop once this cell has been finalized
  std::optional<Cell> until;
  // seed exact Euclidean distances within this many cells of a source
  // (line-of-sight checked); removes the point-source start-up error
  int exact_init_radius = 4;
};

/** Occupancy (>0.5 means obstacle) to traversable mask; a cell is traversable
    when no obstacle lies within radius_m of its center. radius_m = 0 keeps
    plain free space. */
std::vector<uint8_t> traversable_mask(const std::vector<float>& occupancy,
                                      int height, int width, double resolution,
                                      double radius_m);

DistanceField geodesic_field(const std::vector<uint8_t>& traversable,
                             int height, int width, double resolution,
                             const std::vector<Cell>& sources,
                             const FmmOptions& opts = {});

/** Steepest-descent walk to the nearest source: the cells visited after
    `start`, ending on a source cell. Empty when start is itself a source. */
std::vector<Cell> shortest_path(const DistanceField& field, Cell start);

/** Metric length of start -> path polyline through cell centers. */
double path_length_m(const std::vector<Cell>& path, Cell start,
                     double resolution);

/** Distance from `query` to the nearest traversable cell of `region`.
    kUnreachable when separated. */
double geodesic_to_region(const std::vector<uint8_t>& traversable, int height,
                          int width, double resolution,
                          const std::vector<Cell>& region, Cell query);

}  // namespace ognav
