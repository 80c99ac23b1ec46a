#include "ognav/nav.hpp"

#include <algorithm>
#include <cmath>
#include <mutex>
#include <stdexcept>

#include "ognav/fmm.hpp"

namespace ognav {

namespace {

NearestObjectInfo nearest_in_channel(const GridStack& g, int ch) {
  const int h = g.height(), w = g.width();
  const double cy = h / 2.0, cx = w / 2.0;
  const double half_diag = 0.5 * std::hypot(double(h), double(w));

  NearestObjectInfo info;
  double best = std::numeric_limits<double>::infinity();
  for (int r = 0; r < h; ++r)
    for (int c = 0; c < w; ++c) {
      if (g.at(ch, r, c) == 0.0f) continue;
      const double dy = (r + 0.5) - cy, dx = (c + 0.5) - cx;
      const double d = std::hypot(dy, dx);
      if (d < best) {
        best = d;
        info.distance = std::min(d / half_diag, 1.0);
        info.direction = std::atan2(dy, dx);
        info.found = true;
      }
    }
  return info;
}

}  // namespace

NearestObjectInfo nearest_object_dir(const GridStack& sem_map,
                                     const std::string& category) {
  const std::string name = "object_" + category;
  if (!sem_map.has_channel(name)) return {};
  return nearest_in_channel(sem_map, sem_map.channel_index(name));
}

std::vector<NearestObjectInfo> nearest_object_dirs(const GridStack& sem_map) {
  std::vector<NearestObjectInfo> out;
  for (int ch = 0; ch < sem_map.channel_count(); ++ch)
    if (sem_map.channels()[ch].name.rfind("object_", 0) == 0)
      out.push_back(nearest_in_channel(sem_map, ch));
  return out;
}

std::vector<float> fuse_potentials(const std::vector<float>& object,
                                   const std::vector<float>& area,
                                   const std::vector<float>& o2r,
                                   const FusionConfig& cfg) {
  if (object.size() != area.size() || object.size() != o2r.size())
    throw std::invalid_argument("potential maps differ in size");
  std::vector<float> fused(object.size());
  for (size_t i = 0; i < fused.size(); ++i)
    fused[i] = static_cast<float>(cfg.w_object * object[i] +
                                  cfg.w_area * area[i] + cfg.w_o2r * o2r[i]);
  return fused;
}

std::optional<Cell> select_goal(const std::vector<float>& fused,
                                const FrontierSet& fs, Cell agent,
                                const std::vector<uint8_t>& traversable,
                                double resolution) {
  if (fused.size() != size_t(fs.height) * fs.width)
    throw std::invalid_argument("fused map does not match the frontiers");
  if (fs.frontiers.empty()) return std::nullopt;

  float best = -std::numeric_limits<float>::infinity();
  std::vector<Cell> tied;
  for (const Frontier& f : fs.frontiers)
    for (const Cell& cell : f.cells) {
      const float v = fused[size_t(cell.r) * fs.width + cell.c];
      if (v > best) {
        best = v;
        tied.clear();
      }
      if (v == best) tied.push_back(cell);
    }
  if (tied.size() == 1) return tied.front();

  const DistanceField from_agent =
      geodesic_field(traversable, fs.height, fs.width, resolution, {agent});
  const auto rank = [&](Cell c) {
    return std::tuple{from_agent.at(c), c.r, c.c};
  };
  return *std::min_element(tied.begin(), tied.end(),
                           [&](Cell a, Cell b) { return rank(a) < rank(b); });
}

ScenePotentialOracle::ScenePotentialOracle(const GridStack& complete,
                                           const O2RMatrix& matrix,
                                           double d_max,
                                           double success_radius_m)
    : complete_(std::make_shared<GridStack>(complete)),
      matrix_(&matrix),
      d_max_(d_max),
      success_radius_(success_radius_m) {
  const auto& occ = complete_->data("occupancy");
  navigable_.resize(occ.size());
  for (size_t i = 0; i < occ.size(); ++i)
    navigable_[i] = occ[i] == 0.0f ? 1 : 0;
}

namespace {
std::mutex oracle_cache_mutex;
}

const std::vector<Cell>& ScenePotentialOracle::region(
    const std::string& category) const {
  std::lock_guard<std::mutex> lock(oracle_cache_mutex);
  auto it = regions_.find(category);
  if (it == regions_.end())
    it = regions_
             .emplace(category,
                      success_region(*complete_, category, success_radius_))
             .first;
  return it->second;
}

const DistanceField& ScenePotentialOracle::category_field(
    const std::string& category) const {
  const std::vector<Cell>& sources = region(category);
  std::lock_guard<std::mutex> lock(oracle_cache_mutex);
  auto it = fields_.find(category);
  if (it == fields_.end())
    it = fields_
             .emplace(category,
                      geodesic_field(navigable_, complete_->height(),
                                     complete_->width(),
                                     complete_->resolution(), sources))
             .first;
  return it->second;
}

OraclePotentials ScenePotentialOracle::compute(
    const std::vector<uint8_t>& explored, const std::string& target) const {
  OraclePotentials out;
  out.frontiers = extract_frontiers(complete_->data("occupancy"), explored,
                                    complete_->height(), complete_->width());
  out.object = object_potential(out.frontiers, category_field(target), d_max_);
  out.area = area_potential(out.frontiers, navigable_, explored);
  out.o2r = o2r_potential(out.frontiers, *complete_, *matrix_, target);
  return out;
}

OraclePotentials oracle_potentials(const ScenePotentialOracle& oracle,
                                   const std::vector<uint8_t>& explored,
                                   const std::string& target) {
  return oracle.compute(explored, target);
}

}  // namespace ognav
