#pragma once

#include <cstdint>
#include <functional>
#include <map>
#include <memory>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include "ognav/dataset.hpp"
#include "ognav/grid.hpp"
#include "ognav/nav.hpp"
#include "ognav/scene.hpp"

namespace ognav {

class UnsatisfiableEpisode : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

struct SimConfig {
  double forward_step_m = 0.25;
  double turn_angle_deg = 30.0;
  double fov_deg = 90.0;
  double range_m = 5.0;
  int max_steps = 500;
  double success_radius_m = 1.0;
  double agent_radius_m = 0.18;
  double room_label_noise = 0.0;  // chance a cell's room label is corrupted
  double d_max = 5.0;
};

enum class Action { MoveForward, TurnLeft, TurnRight, Stop };
const char* to_string(Action a);

struct CellObservation {
  Cell cell;
  bool obstacle = false;
  // channel indices into the scene raster, -1 when unlabeled
  int object_channel = -1;
  int room_channel = -1;
};

struct Observation {
  std::vector<CellObservation> cells;
};

struct AgentState {
  Pose2D pose;
  GridStack map;  // live: occupancy, explored, object_*, room_*
  std::vector<Pose2D> trajectory;
  int steps = 0;
  int collisions = 0;
  bool stopped = false;
};

/** Live map sized like the scene with the full dataset vocabulary:
    "occupancy", "explored", one object channel per category, then room
    channels. */
AgentState make_agent(const GridStack& scene_raster, const std::string& dataset,
                      Pose2D start);

/** Cells whose centers lie within range and field of view and with clear line
    of sight from the pose; an obstacle cell is itself visible but blocks what
    lies behind it. */
Observation sense(const Pose2D& pose, const GridStack& scene_raster,
                  const SimConfig& cfg, Rng* noise_rng = nullptr);

/** Folds an observation into the live map; monotone in the explored mask and
    idempotent for a fixed observation. */
void update_map(AgentState& state, const Observation& obs,
                const GridStack& scene_raster);

/** Applies one action; forward moves are blocked (pose unchanged, collision
    counted) when the swept segment leaves the eroded traversable set. Returns
    false exactly when blocked. Acting after Stop throws std::logic_error. */
bool step_action(AgentState& state, Action action,
                 const std::vector<uint8_t>& traversable,
                 const SimConfig& cfg);

enum class FailureReason { None, Timeout, StopTooFar, NoFrontier };
const char* to_string(FailureReason r);

struct EpisodeSpec {
  std::string scene;  // resolved by the caller / batch runner
  Pose2D start;
  std::string target;
  uint64_t seed = 0;
};

struct EpisodeResult {
  int index = 0;
  std::string scene;
  std::string target;
  uint64_t seed = 0;
  bool success = false;
  bool stop_issued = false;
  FailureReason failure = FailureReason::None;
  int steps = 0;
  int collisions = 0;
  double path_length_m = 0.0;
  double optimal_length_m = 0.0;
};

/** Everything shared by episodes in one scene: raster, masks, oracle fields,
    success regions. */
class SceneContext {
 public:
  SceneContext(SceneLayout layout, const O2RMatrix& matrix,
               const SimConfig& cfg);
  // the oracle points into matrix_, so the context must stay put
  SceneContext(const SceneContext&) = delete;
  SceneContext& operator=(const SceneContext&) = delete;

  const SceneLayout& layout() const { return layout_; }
  const GridStack& raster() const { return *raster_; }
  const std::vector<uint8_t>& navigable() const { return navigable_; }
  const std::vector<uint8_t>& traversable() const { return traversable_; }
  const ScenePotentialOracle& oracle() const { return *oracle_; }
  const SimConfig& config() const { return cfg_; }

  // success region of a target category (empty when absent)
  const std::vector<Cell>& region(const std::string& target) const;
  // region cells the eroded agent can occupy
  const std::vector<Cell>& reachable_region(const std::string& target) const;

  /** Geodesic length (meters) of the best eroded-traversable route from start
      into the target's success region. Throws UnsatisfiableEpisode when the
      start is not navigable or no instance is reachable. */
  double optimal_length(const Pose2D& start, const std::string& target) const;

 private:
  SceneLayout layout_;
  O2RMatrix matrix_;
  SimConfig cfg_;
  std::shared_ptr<GridStack> raster_;
  std::vector<uint8_t> navigable_, traversable_;
  std::unique_ptr<ScenePotentialOracle> oracle_;
  mutable std::map<std::string, std::vector<Cell>> reachable_;
};

EpisodeResult run_episode(const SceneContext& ctx, const EpisodeSpec& spec,
                          const FusionConfig& fusion);

struct EpisodeGenParams {
  std::vector<std::string> targets;
  int count = 0;
  double min_optimal_m = 1.0;
  double max_optimal_m = 30.0;
  uint64_t seed = 0;
};

/** Satisfiable episodes round-robin over scenes and targets; start poses are
    drawn from the eroded-traversable set and kept when the optimal length
    lands in range. */
std::vector<EpisodeSpec> generate_episodes(
    const std::vector<std::pair<std::string, const SceneContext*>>& scenes,
    const EpisodeGenParams& params);

struct CategoryStats {
  int n = 0;
  double sr = 0.0;
  double spl = 0.0;
};

struct BatchReport {
  std::vector<EpisodeResult> episodes;
  int n = 0;
  std::optional<double> sr;
  std::optional<double> spl;
  std::map<std::string, CategoryStats> per_category;
};

BatchReport summarize(std::vector<EpisodeResult> episodes,
                      double min_length_clamp_m = 0.25);

/** Runs episodes across a worker pool; results and aggregates are identical
    for any job count. Scene contexts are built once per distinct scene name. */
BatchReport run_batch(
    const std::vector<EpisodeSpec>& specs,
    const std::function<SceneLayout(const std::string&)>& scene_loader,
    const O2RMatrix& matrix, const FusionConfig& fusion, const SimConfig& cfg,
    int jobs);

/** Deterministic JSON bytes; config_echo must be a serialized JSON object and
    should not mention the job count (reports are parallelism-invariant). */
std::string report_json(const BatchReport& report,
                        const std::string& config_echo);
std::string report_table(const BatchReport& report);

}  // namespace ognav
