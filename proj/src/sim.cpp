#include "ognav/sim.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <mutex>
#include <sstream>
#include <thread>

#include "json.hpp"
#include "ognav/fmm.hpp"
#include "ognav/metrics.hpp"

namespace ognav {

using json = nlohmann::json;

const char* to_string(Action a) {
  switch (a) {
    case Action::MoveForward: return "move_forward";
    case Action::TurnLeft: return "turn_left";
    case Action::TurnRight: return "turn_right";
    case Action::Stop: return "stop";
  }
  return "?";
}

const char* to_string(FailureReason r) {
  switch (r) {
    case FailureReason::None: return "none";
    case FailureReason::Timeout: return "timeout";
    case FailureReason::StopTooFar: return "stop_too_far";
    case FailureReason::NoFrontier: return "no_frontier";
  }
  return "?";
}

AgentState make_agent(const GridStack& scene_raster, const std::string& dataset,
                      Pose2D start) {
  std::vector<ChannelDesc> channels = {{ChannelKind::Occupancy, "occupancy"},
                                       {ChannelKind::Explored, "explored"}};
  for (const std::string& cat : object_categories(dataset))
    channels.push_back({ChannelKind::Object, "object_" + cat});
  for (const std::string& cat : room_categories(dataset))
    channels.push_back({ChannelKind::Room, "room_" + cat});

  AgentState state;
  state.pose = start;
  state.pose.theta = wrap_angle(start.theta);
  state.map = new_grid(scene_raster.height(), scene_raster.width(),
                       scene_raster.resolution(), std::move(channels));
  state.trajectory = {state.pose};
  return state;
}

Observation sense(const Pose2D& pose, const GridStack& scene_raster,
                  const SimConfig& cfg, Rng* noise_rng) {
  if (cfg.room_label_noise < 0.0 || cfg.room_label_noise > 1.0)
    throw std::invalid_argument("room_label_noise must lie in [0, 1]");
  if (cfg.room_label_noise > 0.0 && !noise_rng)
    throw std::invalid_argument("room label noise needs an rng");

  const int h = scene_raster.height(), w = scene_raster.width();
  const double res = scene_raster.resolution();
  const auto& occ = scene_raster.data("occupancy");
  std::vector<uint8_t> open(occ.size());
  for (size_t i = 0; i < occ.size(); ++i) open[i] = occ[i] == 0.0f ? 1 : 0;

  std::vector<int> object_channels, room_channels;
  for (int ch = 0; ch < scene_raster.channel_count(); ++ch) {
    const std::string& name = scene_raster.channels()[ch].name;
    if (name.rfind("object_", 0) == 0) object_channels.push_back(ch);
    if (name.rfind("room_", 0) == 0) room_channels.push_back(ch);
  }

  const double pr = pose.y / res, pc = pose.x / res;
  const Cell own = scene_raster.cell_of(pose.x, pose.y);
  const double half_fov = cfg.fov_deg * M_PI / 360.0;
  const int reach = static_cast<int>(std::ceil(cfg.range_m / res)) + 1;

  Observation obs;
  for (int r = std::max(0, own.r - reach); r <= std::min(h - 1, own.r + reach);
       ++r)
    for (int c = std::max(0, own.c - reach);
         c <= std::min(w - 1, own.c + reach); ++c) {
      const bool self = r == own.r && c == own.c;
      if (!self) {
        const double dy = (r + 0.5 - pr) * res, dx = (c + 0.5 - pc) * res;
        if (dy * dy + dx * dx > cfg.range_m * cfg.range_m) continue;
        const double off = wrap_angle(std::atan2(dy, dx) - pose.theta);
        if (std::abs(off) > half_fov + 1e-12) continue;
        if (!line_of_sight(open, h, w, pr, pc, r + 0.5, c + 0.5)) continue;
      }

      CellObservation cell;
      cell.cell = {r, c};
      cell.obstacle = occ[scene_raster.cell_index(r, c)] != 0.0f;
      for (int ch : object_channels)
        if (scene_raster.at(ch, r, c) != 0.0f) {
          cell.object_channel = ch;
          break;
        }
      for (int ch : room_channels)
        if (scene_raster.at(ch, r, c) != 0.0f) {
          cell.room_channel = ch;
          break;
        }
      if (cell.room_channel >= 0 && cfg.room_label_noise > 0.0 &&
          noise_rng->bernoulli(cfg.room_label_noise)) {
        // swap in one of the other room labels; a lone label degrades to none
        std::vector<int> others;
        for (int ch : room_channels)
          if (ch != cell.room_channel) others.push_back(ch);
        cell.room_channel =
            others.empty()
                ? -1
                : others[noise_rng->uniform_int(others.size())];
      }
      obs.cells.push_back(cell);
    }
  return obs;
}

void update_map(AgentState& state, const Observation& obs,
                const GridStack& scene_raster) {
  const int ch_occ = state.map.channel_index("occupancy");
  const int ch_exp = state.map.channel_index("explored");
  // scene raster channel -> live map channel, matched by name
  std::vector<int> remap(scene_raster.channel_count(), -1);
  for (int ch = 0; ch < scene_raster.channel_count(); ++ch) {
    const std::string& name = scene_raster.channels()[ch].name;
    if (state.map.has_channel(name)) remap[ch] = state.map.channel_index(name);
  }

  for (const CellObservation& cell : obs.cells) {
    state.map.set(ch_exp, cell.cell.r, cell.cell.c, 1.0f);
    state.map.set(ch_occ, cell.cell.r, cell.cell.c,
                  cell.obstacle ? 1.0f : 0.0f);
    if (cell.object_channel >= 0 && remap[cell.object_channel] >= 0)
      state.map.set(remap[cell.object_channel], cell.cell.r, cell.cell.c, 1.0f);
    if (cell.room_channel >= 0 && remap[cell.room_channel] >= 0)
      state.map.set(remap[cell.room_channel], cell.cell.r, cell.cell.c, 1.0f);
  }
}

bool step_action(AgentState& state, Action action,
                 const std::vector<uint8_t>& traversable,
                 const SimConfig& cfg) {
  if (state.stopped) throw std::logic_error("the agent already stopped");
  ++state.steps;

  const double turn = cfg.turn_angle_deg * M_PI / 180.0;
  switch (action) {
    case Action::Stop:
      state.stopped = true;
      return true;
    case Action::TurnLeft:
      state.pose.theta = wrap_angle(state.pose.theta - turn);
      state.trajectory.push_back(state.pose);
      return true;
    case Action::TurnRight:
      state.pose.theta = wrap_angle(state.pose.theta + turn);
      state.trajectory.push_back(state.pose);
      return true;
    case Action::MoveForward:
      break;
  }

  const int h = state.map.height(), w = state.map.width();
  const double res = state.map.resolution();
  const double nx = state.pose.x + cfg.forward_step_m * std::cos(state.pose.theta);
  const double ny = state.pose.y + cfg.forward_step_m * std::sin(state.pose.theta);
  const Cell dest = state.map.cell_of(nx, ny);
  const bool clear =
      state.map.in_bounds(dest) &&
      traversable[state.map.cell_index(dest)] != 0 &&
      line_of_sight(traversable, h, w, state.pose.y / res, state.pose.x / res,
                    ny / res, nx / res);
  if (!clear) {
    ++state.collisions;
    return false;
  }
  state.pose.x = nx;
  state.pose.y = ny;
  state.trajectory.push_back(state.pose);
  return true;
}

SceneContext::SceneContext(SceneLayout layout, const O2RMatrix& matrix,
                           const SimConfig& cfg)
    : layout_(std::move(layout)), matrix_(matrix), cfg_(cfg) {
  raster_ = std::make_shared<GridStack>(rasterize_scene(layout_));
  navigable_ = navigable_mask(*raster_);
  traversable_ =
      traversable_mask(raster_->data("occupancy"), raster_->height(),
                       raster_->width(), raster_->resolution(),
                       cfg_.agent_radius_m);
  // open with a 2x2 element: a corridor one cell wide is impassable for
  // spawn headings whose 30 degree lattice has no near-axis bearing, so
  // only keep cells covered by some fully clear 2x2 block
  const int h = raster_->height(), w = raster_->width();
  std::vector<uint8_t> blocks(static_cast<size_t>(h) * w, 0);
  for (int r = 0; r + 1 < h; ++r)
    for (int c = 0; c + 1 < w; ++c)
      blocks[r * w + c] = traversable_[r * w + c] &&
                          traversable_[r * w + c + 1] &&
                          traversable_[(r + 1) * w + c] &&
                          traversable_[(r + 1) * w + c + 1];
  std::vector<uint8_t> opened(static_cast<size_t>(h) * w, 0);
  for (int r = 0; r < h; ++r)
    for (int c = 0; c < w; ++c)
      opened[r * w + c] = (blocks[r * w + c]) ||
                          (c > 0 && blocks[r * w + c - 1]) ||
                          (r > 0 && blocks[(r - 1) * w + c]) ||
                          (r > 0 && c > 0 && blocks[(r - 1) * w + c - 1]);
  traversable_ = std::move(opened);
  oracle_ = std::make_unique<ScenePotentialOracle>(*raster_, matrix_,
                                                   cfg_.d_max,
                                                   cfg_.success_radius_m);
}

namespace {
std::mutex context_cache_mutex;
const std::vector<Cell> kNoCells;
}  // namespace

const std::vector<Cell>& SceneContext::region(const std::string& target) const {
  try {
    return oracle_->region(target);
  } catch (const std::invalid_argument&) {
    return kNoCells;
  }
}

const std::vector<Cell>& SceneContext::reachable_region(
    const std::string& target) const {
  std::lock_guard<std::mutex> lock(context_cache_mutex);
  auto it = reachable_.find(target);
  if (it == reachable_.end()) {
    std::vector<Cell> cells;
    for (const Cell& c : region(target))
      if (traversable_[raster_->cell_index(c)]) cells.push_back(c);
    it = reachable_.emplace(target, std::move(cells)).first;
  }
  return it->second;
}

double SceneContext::optimal_length(const Pose2D& start,
                                    const std::string& target) const {
  const Cell cell = raster_->cell_of(start.x, start.y);
  if (!raster_->in_bounds(cell) || !navigable_[raster_->cell_index(cell)])
    throw UnsatisfiableEpisode("start pose is not navigable");
  const std::vector<Cell>& goal_cells = reachable_region(target);
  if (goal_cells.empty())
    throw UnsatisfiableEpisode("no reachable '" + target + "' instance in '" +
                               layout_.id + "'");
  const double d =
      geodesic_to_region(traversable_, raster_->height(), raster_->width(),
                         raster_->resolution(), goal_cells, cell);
  if (d == kUnreachable)
    throw UnsatisfiableEpisode("'" + target + "' cannot be reached from (" +
                               std::to_string(start.x) + ", " +
                               std::to_string(start.y) + ")");
  return d;
}

namespace {

// planning sources for a frontier goal: the goal cell when the eroded agent
// can stand there, otherwise the nearest ring of traversable cells around it
std::vector<Cell> plan_sources(Cell goal, const std::vector<uint8_t>& traversable,
                               int h, int w) {
  const auto at = [&](int r, int c) { return size_t(r) * w + c; };
  for (int radius = 0; radius <= 3; ++radius) {
    std::vector<Cell> ring;
    for (int r = std::max(0, goal.r - radius);
         r <= std::min(h - 1, goal.r + radius); ++r)
      for (int c = std::max(0, goal.c - radius);
           c <= std::min(w - 1, goal.c + radius); ++c) {
        if (std::max(std::abs(r - goal.r), std::abs(c - goal.c)) != radius)
          continue;
        if (traversable[at(r, c)]) ring.push_back({r, c});
      }
    if (!ring.empty()) return ring;
  }
  return {};
}

/** Stride steering on a distance field. Each discrete bearing whose exact
    swept-segment check passes is a candidate; bearings whose landing strictly
    descends the field are preferred, and among them the one needing the
    fewest turns wins. When no stride descends (the cell-level descent needs a
    move the 0.25 m stride cannot execute), an escape mode takes the clearest
    remaining bearing with a revisit penalty, so the agent works itself out of
    stride-level local minima instead of oscillating. */
class FieldFollower {
 public:
  FieldFollower(const std::vector<uint8_t>& traversable, const GridStack& grid,
                const SimConfig& cfg)
      : trav_(traversable), grid_(grid), cfg_(cfg) {
    visits_.assign(grid.cell_count(), 0);
  }

  Action decide(const Pose2D& pose, const DistanceField& field) {
    const double turn = cfg_.turn_angle_deg * M_PI / 180.0;
    const int n_bearings =
        std::max(1, static_cast<int>(std::round(360.0 / cfg_.turn_angle_deg)));
    const Cell here = grid_.cell_of(pose.x, pose.y);
    const double here_value =
        field.reachable(here) ? field.at(here) : kUnreachable;

    double best_descent = kUnreachable, best_escape = kUnreachable;
    int descent_k = 0, escape_k = 0;
    for (int i = 0; i < n_bearings; ++i) {
      // k = signed turn count, scanning outward: 0, +1, -1, +2, ...
      const int k = (i % 2 == 0) ? i / 2 : -(i + 1) / 2;
      const double theta = pose.theta + k * turn;
      const double nx = pose.x + cfg_.forward_step_m * std::cos(theta);
      const double ny = pose.y + cfg_.forward_step_m * std::sin(theta);
      const Cell dest = grid_.cell_of(nx, ny);
      if (!grid_.in_bounds(dest) || !trav_[grid_.cell_index(dest)]) continue;
      const double res = grid_.resolution();
      if (!line_of_sight(trav_, grid_.height(), grid_.width(), pose.y / res,
                         pose.x / res, ny / res, nx / res))
        continue;
      if (!field.reachable(dest)) continue;
      const double value = field.at(dest);
      const double penalty = 0.02 * visits_[grid_.cell_index(dest)];
      const double turn_cost = cfg_.forward_step_m * std::abs(k);
      if (value <= here_value - 0.5 * cfg_.forward_step_m) {
        const double cost = value + turn_cost + penalty;
        if (cost < best_descent) {
          best_descent = cost;
          descent_k = k;
        }
      }
      const double cost = value + turn_cost + 4.0 * penalty;
      if (cost < best_escape) {
        best_escape = cost;
        escape_k = k;
      }
    }

    const int k = best_descent < kUnreachable ? descent_k : escape_k;
    if (best_escape == kUnreachable) return Action::TurnRight;  // boxed in
    if (k != 0) return k > 0 ? Action::TurnRight : Action::TurnLeft;
    if (visits_[grid_.cell_index(here)] < 60000)
      ++visits_[grid_.cell_index(here)];
    return Action::MoveForward;
  }

 private:
  const std::vector<uint8_t>& trav_;
  const GridStack& grid_;
  const SimConfig& cfg_;
  std::vector<uint16_t> visits_;
};

}  // namespace

EpisodeResult run_episode(const SceneContext& ctx, const EpisodeSpec& spec,
                          const FusionConfig& fusion) {
  // set OGNAV_SIM_TRACE for a stderr log of goal changes and planner events
  static const bool trace = std::getenv("OGNAV_SIM_TRACE") != nullptr;
  const SimConfig& cfg = ctx.config();
  const GridStack& raster = ctx.raster();
  const int h = raster.height(), w = raster.width();
  const double res = raster.resolution();

  EpisodeResult result;
  result.scene = spec.scene;
  result.target = spec.target;
  result.seed = spec.seed;
  result.optimal_length_m = ctx.optimal_length(spec.start, spec.target);

  AgentState state = make_agent(raster, ctx.layout().dataset, spec.start);
  Rng noise_rng(spec.seed);
  Rng* noise = cfg.room_label_noise > 0.0 ? &noise_rng : nullptr;

  const int target_channel = raster.channel_index("object_" + spec.target);
  const int explored_channel = state.map.channel_index("explored");

  bool target_seen = false;
  std::optional<DistanceField> approach;  // to the reachable success region
  std::optional<Cell> goal;
  std::optional<DistanceField> goal_field;
  int steps_since_select = fusion.goal_interval;  // select on the first step
  int arrive_turns = 0;
  int barren_turns = 0;
  double goal_watermark = kUnreachable;  // best field value seen for this goal
  int goal_stall = 0;
  std::vector<uint8_t> explored(raster.cell_count(), 0);
  std::vector<uint8_t> dead_goal(raster.cell_count(), 0);
  FieldFollower follower(ctx.traversable(), raster, cfg);
  const int full_circle =
      static_cast<int>(std::ceil(360.0 / cfg.turn_angle_deg));

  while (!state.stopped && state.steps < cfg.max_steps) {
    const Observation obs = sense(state.pose, raster, cfg, noise);
    update_map(state, obs, raster);
    if (!target_seen)
      for (const CellObservation& cell : obs.cells)
        if (cell.object_channel == target_channel) {
          target_seen = true;
          if (trace)
            std::fprintf(stderr, "[sim %s/%s] step %d: target seen\n",
                         spec.scene.c_str(), spec.target.c_str(), state.steps);
          break;
        }
    const Cell agent = raster.cell_of(state.pose.x, state.pose.y);
    if (trace && state.steps % 50 == 0 && state.steps > 0)
      std::fprintf(stderr,
                   "[sim %s/%s] step %d: at (%d,%d) th %.2f goal (%d,%d) "
                   "gf %.2f\n",
                   spec.scene.c_str(), spec.target.c_str(), state.steps,
                   agent.r, agent.c, state.pose.theta, goal ? goal->r : -1,
                   goal ? goal->c : -1,
                   goal_field && goal_field->reachable(agent)
                       ? goal_field->at(agent)
                       : -1.0);

    if (target_seen) {
      if (!approach)
        approach = geodesic_field(ctx.traversable(), h, w, res,
                                  ctx.reachable_region(spec.target));
      if (approach->reachable(agent) && approach->at(agent) <= 1e-9) {
        step_action(state, Action::Stop, ctx.traversable(), cfg);
        break;
      }
      if (!approach->reachable(agent)) {
        step_action(state, Action::TurnRight, ctx.traversable(), cfg);
        continue;
      }
      step_action(state, follower.decide(state.pose, *approach),
                  ctx.traversable(), cfg);
      continue;
    }

    if (++steps_since_select >= fusion.goal_interval || !goal) {
      const auto& exp = state.map.data(explored_channel);
      for (size_t i = 0; i < exp.size(); ++i) explored[i] = exp[i] != 0.0f;
      const OraclePotentials pots = ctx.oracle().compute(explored, spec.target);
      std::vector<float> fused =
          fuse_potentials(pots.object, pots.area, pots.o2r, fusion);
      for (size_t i = 0; i < fused.size(); ++i)
        if (dead_goal[i]) fused[i] = -1e9f;
      std::optional<Cell> picked =
          select_goal(fused, pots.frontiers, agent, ctx.traversable(), res);
      steps_since_select = 0;
      if (!picked || dead_goal[raster.cell_index(*picked)]) {
        // a cramped first glimpse can be all wall; sweep the sensor around
        // before declaring the map exhausted
        if (barren_turns < full_circle) {
          ++barren_turns;
          steps_since_select = fusion.goal_interval;
          step_action(state, Action::TurnRight, ctx.traversable(), cfg);
          continue;
        }
        if (trace)
          std::fprintf(stderr, "[sim %s/%s] step %d: no frontier (%s)\n",
                       spec.scene.c_str(), spec.target.c_str(), state.steps,
                       picked ? "all goals dead" : "none extracted");
        result.failure = FailureReason::NoFrontier;
        break;
      }
      barren_turns = 0;
      // hold the current goal unless the new argmax beats it by a clear
      // margin; oracle potentials sag as their component gets explored, so a
      // bare argmax ping-pongs between near-equal frontiers
      if (goal && !(*picked == *goal) &&
          pots.frontiers.label[raster.cell_index(*goal)] != -1 &&
          !dead_goal[raster.cell_index(*goal)] &&
          fused[raster.cell_index(*picked)] <
              fused[raster.cell_index(*goal)] + 0.25f)
        picked = goal;
      if (!goal || !(*picked == *goal)) {
        arrive_turns = 0;
        goal_watermark = kUnreachable;
        goal_stall = 0;
        if (trace)
          std::fprintf(stderr,
                       "[sim %s/%s] step %d: goal (%d,%d)->(%d,%d) agent "
                       "(%d,%d)\n",
                       spec.scene.c_str(), spec.target.c_str(), state.steps,
                       goal ? goal->r : -1, goal ? goal->c : -1, picked->r,
                       picked->c, agent.r, agent.c);
        goal = picked;
        const std::vector<Cell> sources =
            plan_sources(*goal, ctx.traversable(), h, w);
        goal_field.reset();
        if (!sources.empty())
          goal_field = geodesic_field(ctx.traversable(), h, w, res, sources);
      }
    }

    if (!goal_field || !goal_field->reachable(agent)) {
      // no executable route to this goal; skip it for the rest of the episode
      if (trace)
        std::fprintf(stderr, "[sim %s/%s] step %d: goal (%d,%d) unplannable\n",
                     spec.scene.c_str(), spec.target.c_str(), state.steps,
                     goal->r, goal->c);
      dead_goal[raster.cell_index(*goal)] = 1;
      goal.reset();
      goal_field.reset();
      steps_since_select = fusion.goal_interval;
      step_action(state, Action::TurnRight, ctx.traversable(), cfg);
      continue;
    }
    if (goal_field->at(agent) < goal_watermark - 1e-9) {
      goal_watermark = goal_field->at(agent);
      goal_stall = 0;
    } else if (++goal_stall >= 60) {
      // field-reachable but the stride controller made no headway; a goal
      // this stubborn is not worth the remaining budget
      if (trace)
        std::fprintf(stderr, "[sim %s/%s] step %d: goal (%d,%d) stalled\n",
                     spec.scene.c_str(), spec.target.c_str(), state.steps,
                     goal->r, goal->c);
      dead_goal[raster.cell_index(*goal)] = 1;
      goal.reset();
      goal_field.reset();
      steps_since_select = fusion.goal_interval;
      step_action(state, Action::TurnRight, ctx.traversable(), cfg);
      continue;
    }
    if (goal_field->at(agent) <= cfg.forward_step_m + 1e-9) {
      // close enough: sweep the sensor and pick the next goal; a goal that
      // survives a full turn in place cannot be explored any further
      if (++arrive_turns >= full_circle) {
        if (trace)
          std::fprintf(stderr, "[sim %s/%s] step %d: goal (%d,%d) exhausted\n",
                       spec.scene.c_str(), spec.target.c_str(), state.steps,
                       goal->r, goal->c);
        dead_goal[raster.cell_index(*goal)] = 1;
        goal.reset();
        goal_field.reset();
      }
      steps_since_select = fusion.goal_interval;
      step_action(state, Action::TurnRight, ctx.traversable(), cfg);
      continue;
    }
    step_action(state, follower.decide(state.pose, *goal_field),
                ctx.traversable(), cfg);
  }

  result.stop_issued = state.stopped;
  if (state.stopped) {
    const Cell cell = raster.cell_of(state.pose.x, state.pose.y);
    const double to_target =
        ctx.oracle().category_field(spec.target).at(cell);
    result.success = to_target <= 1e-9;
    if (!result.success) result.failure = FailureReason::StopTooFar;
  } else if (result.failure == FailureReason::None) {
    result.failure = FailureReason::Timeout;
  }
  result.steps = state.steps;
  result.collisions = state.collisions;
  for (size_t i = 1; i < state.trajectory.size(); ++i)
    result.path_length_m += std::hypot(
        state.trajectory[i].x - state.trajectory[i - 1].x,
        state.trajectory[i].y - state.trajectory[i - 1].y);
  return result;
}

std::vector<EpisodeSpec> generate_episodes(
    const std::vector<std::pair<std::string, const SceneContext*>>& scenes,
    const EpisodeGenParams& params) {
  if (params.count <= 0) return {};
  if (scenes.empty()) throw std::invalid_argument("no scenes to draw from");
  if (params.targets.empty()) throw std::invalid_argument("no targets given");

  std::map<const SceneContext*, std::vector<Cell>> standable;
  for (const auto& [name, ctx] : scenes) {
    if (standable.count(ctx)) continue;
    std::vector<Cell> cells;
    const GridStack& raster = ctx->raster();
    for (int r = 0; r < raster.height(); ++r)
      for (int c = 0; c < raster.width(); ++c)
        if (ctx->traversable()[raster.cell_index(r, c)]) cells.push_back({r, c});
    standable.emplace(ctx, std::move(cells));
  }

  Rng rng(params.seed);
  std::vector<EpisodeSpec> specs;
  const size_t t_count = params.targets.size();
  for (int i = 0; i < params.count; ++i) {
    const std::string& target = params.targets[i % t_count];
    const auto& [scene_name, ctx] = scenes[(size_t(i) / t_count) % scenes.size()];
    const std::vector<Cell>& cells = standable.at(ctx);

    bool placed = false;
    for (int attempt = 0; attempt < 200 && !placed; ++attempt) {
      const Cell cell = cells[rng.uniform_int(cells.size())];
      Pose2D start = ctx->raster().cell_center(cell);
      start.theta = rng.uniform(-M_PI, M_PI);
      double optimal;
      try {
        optimal = ctx->optimal_length(start, target);
      } catch (const UnsatisfiableEpisode&) {
        continue;  // start drawn in a pocket the target cannot be reached from
      }
      if (optimal < params.min_optimal_m || optimal > params.max_optimal_m)
        continue;
      specs.push_back({scene_name, start, target, mix_seed(params.seed, i)});
      placed = true;
    }
    if (!placed)
      throw UnsatisfiableEpisode("no valid start for target '" + target +
                                 "' in scene '" + scene_name + "'");
  }
  return specs;
}

BatchReport summarize(std::vector<EpisodeResult> episodes,
                      double min_length_clamp_m) {
  std::vector<EpisodeOutcome> outcomes;
  outcomes.reserve(episodes.size());
  for (const EpisodeResult& e : episodes)
    outcomes.push_back({e.success, e.path_length_m, e.optimal_length_m});

  BatchReport report;
  report.n = static_cast<int>(episodes.size());
  report.sr = success_rate(outcomes);
  report.spl = spl(outcomes, min_length_clamp_m);

  std::map<std::string, std::vector<EpisodeOutcome>> by_target;
  for (const EpisodeResult& e : episodes)
    by_target[e.target].push_back(
        {e.success, e.path_length_m, e.optimal_length_m});
  for (const auto& [target, group] : by_target) {
    CategoryStats stats;
    stats.n = static_cast<int>(group.size());
    stats.sr = *success_rate(group);
    stats.spl = *spl(group, min_length_clamp_m);
    report.per_category.emplace(target, stats);
  }
  report.episodes = std::move(episodes);
  return report;
}

BatchReport run_batch(
    const std::vector<EpisodeSpec>& specs,
    const std::function<SceneLayout(const std::string&)>& scene_loader,
    const O2RMatrix& matrix, const FusionConfig& fusion, const SimConfig& cfg,
    int jobs) {
  std::map<std::string, std::unique_ptr<SceneContext>> contexts;
  for (const EpisodeSpec& spec : specs)
    if (!contexts.count(spec.scene))
      contexts.emplace(spec.scene, std::make_unique<SceneContext>(
                                       scene_loader(spec.scene), matrix, cfg));

  std::vector<EpisodeResult> results(specs.size());
  std::atomic<size_t> next{0};
  std::mutex error_mutex;
  std::exception_ptr error;

  const auto worker = [&] {
    for (;;) {
      const size_t i = next.fetch_add(1);
      if (i >= specs.size()) return;
      try {
        results[i] = run_episode(*contexts.at(specs[i].scene), specs[i], fusion);
        results[i].index = static_cast<int>(i);
      } catch (...) {
        std::lock_guard<std::mutex> lock(error_mutex);
        if (!error) error = std::current_exception();
        return;
      }
    }
  };

  const int n_threads =
      std::max(1, std::min<int>(jobs, static_cast<int>(specs.size())));
  if (n_threads <= 1) {
    worker();
  } else {
    std::vector<std::thread> pool;
    for (int t = 0; t < n_threads; ++t) pool.emplace_back(worker);
    for (std::thread& t : pool) t.join();
  }
  if (error) std::rethrow_exception(error);
  return summarize(std::move(results));
}

namespace {

json stats_json(int n, const std::optional<double>& sr,
                const std::optional<double>& spl_value) {
  json j;
  j["n"] = n;
  j["sr"] = sr ? json(*sr) : json(nullptr);
  j["spl"] = spl_value ? json(*spl_value) : json(nullptr);
  return j;
}

}  // namespace

std::string report_json(const BatchReport& report,
                        const std::string& config_echo) {
  json config = json::parse(config_echo, nullptr, false);
  if (config.is_discarded() || !config.is_object())
    throw std::invalid_argument("config_echo must be a JSON object");

  json j;
  j["config"] = std::move(config);
  j["overall"] = stats_json(report.n, report.sr, report.spl);
  j["per_category"] = json::object();
  for (const auto& [target, stats] : report.per_category)
    j["per_category"][target] = stats_json(stats.n, stats.sr, stats.spl);
  j["episodes"] = json::array();
  for (const EpisodeResult& e : report.episodes)
    j["episodes"].push_back({{"index", e.index},
                             {"scene", e.scene},
                             {"target", e.target},
                             {"seed", e.seed},
                             {"success", e.success},
                             {"stop_issued", e.stop_issued},
                             {"failure", to_string(e.failure)},
                             {"steps", e.steps},
                             {"collisions", e.collisions},
                             {"path_length_m", e.path_length_m},
                             {"optimal_length_m", e.optimal_length_m}});
  return j.dump(2) + "\n";
}

std::string report_table(const BatchReport& report) {
  std::ostringstream out;
  char line[128];
  std::snprintf(line, sizeof line, "%-20s %6s %8s %8s\n", "category", "n", "SR",
                "SPL");
  out << line;
  const auto row = [&](const std::string& name, int n,
                       const std::optional<double>& sr,
                       const std::optional<double>& spl_value) {
    char sr_s[16] = "-", spl_s[16] = "-";
    if (sr) std::snprintf(sr_s, sizeof sr_s, "%.3f", *sr);
    if (spl_value) std::snprintf(spl_s, sizeof spl_s, "%.3f", *spl_value);
    std::snprintf(line, sizeof line, "%-20s %6d %8s %8s\n", name.c_str(), n,
                  sr_s, spl_s);
    out << line;
  };
  for (const auto& [target, stats] : report.per_category)
    row(target, stats.n, stats.sr, stats.spl);
  row("overall", report.n, report.sr, report.spl);
  return out.str();
}

}  // namespace ognav
