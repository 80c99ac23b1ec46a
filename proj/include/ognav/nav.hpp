#pragma once

#include <map>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include "ognav/dataset.hpp"
#include "ognav/grid.hpp"
#include "ognav/o2r.hpp"

namespace ognav {

/** Nearest instance of one category on an agent-centric semantic map:
    distance normalized by the map half-diagonal, direction clockwise from
    east. Defaults (1.0, 0, found=false) when the channel is empty. */
struct NearestObjectInfo {
  double distance = 1.0;
  double direction = 0.0;
  bool found = false;
};

NearestObjectInfo nearest_object_dir(const GridStack& sem_map,
                                     const std::string& category);
std::vector<NearestObjectInfo> nearest_object_dirs(const GridStack& sem_map);

struct FusionConfig {
  double w_object = 1.0;
  double w_area = 1.0;
  double w_o2r = 1.0;
  int goal_interval = 1;  // steps between goal re-selections
};

/** Weighted sum per cell; inputs must share length. */
std::vector<float> fuse_potentials(const std::vector<float>& object,
                                   const std::vector<float>& area,
                                   const std::vector<float>& o2r,
                                   const FusionConfig& cfg);

/** Argmax over frontier cells. Ties go to the cell geodesically nearest the
    agent, then to row-major order; empty frontier set selects nothing. */
std::optional<Cell> select_goal(const std::vector<float>& fused,
                                const FrontierSet& fs, Cell agent,
                                const std::vector<uint8_t>& traversable,
                                double resolution);

struct OraclePotentials {
  FrontierSet frontiers;
  std::vector<float> object;
  std::vector<float> area;
  std::vector<float> o2r;
};

/** Per-scene cache for oracle supervision: category distance fields are
    computed once and shared across queries. */
class ScenePotentialOracle {
 public:
  ScenePotentialOracle(const GridStack& complete, const O2RMatrix& matrix,
                       double d_max = 5.0, double success_radius_m = 1.0);

  const GridStack& complete() const { return *complete_; }
  const std::vector<uint8_t>& navigable() const { return navigable_; }
  const DistanceField& category_field(const std::string& category) const;
  const std::vector<Cell>& region(const std::string& category) const;

  OraclePotentials compute(const std::vector<uint8_t>& explored,
                           const std::string& target) const;

 private:
  std::shared_ptr<const GridStack> complete_;
  const O2RMatrix* matrix_;
  double d_max_, success_radius_;
  std::vector<uint8_t> navigable_;
  mutable std::map<std::string, DistanceField> fields_;
  mutable std::map<std::string, std::vector<Cell>> regions_;
};

/** Potentials for the live explored mask against the complete scene; equal to
    running the dataset pipeline on the same inputs. */
OraclePotentials oracle_potentials(const ScenePotentialOracle& oracle,
                                   const std::vector<uint8_t>& explored,
                                   const std::string& target);

}  // namespace ognav
