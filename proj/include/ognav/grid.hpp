#pragma once

#include <cstdint>
#include <filesystem>
#include <stdexcept>
#include <string>
#include <vector>

namespace ognav {

// Thrown when an on-disk artifact fails structural validation.
class FormatError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

enum class ChannelKind { Occupancy, Explored, Object, Room, Potential, Scalar };

const char* to_string(ChannelKind k);
ChannelKind channel_kind_from_string(const std::string& s);

struct ChannelDesc {
  ChannelKind kind = ChannelKind::Scalar;
  std::string name;  // unique within a grid; doubles as the payload file name
  bool operator==(const ChannelDesc&) const = default;
};

/** Pose in map coordinates: x east, y south (meters), theta clockwise from
    east, kept in [-pi, pi). */
struct Pose2D {
  double x = 0.0;
  double y = 0.0;
  double theta = 0.0;
};

double wrap_angle(double theta);

struct Cell {
  int r = 0;
  int c = 0;
  bool operator==(const Cell&) const = default;
};

/** Stack of equally-shaped float channels over one metric grid.
    Row-major, origin at the top-left corner, +x east along columns,
    +y south along rows; cell (r, c) is centered at ((c+0.5)*res, (r+0.5)*res). */
class GridStack {
 public:
  GridStack() = default;
  GridStack(int height, int width, double resolution,
            std::vector<ChannelDesc> channels);

  int height() const { return height_; }
  int width() const { return width_; }
  double resolution() const { return res_; }
  double width_m() const { return width_ * res_; }
  double height_m() const { return height_ * res_; }

  int channel_count() const { return static_cast<int>(channels_.size()); }
  const std::vector<ChannelDesc>& channels() const { return channels_; }
  bool has_channel(const std::string& name) const;
  int channel_index(const std::string& name) const;  // throws when absent
  void add_channel(const ChannelDesc& desc);

  std::vector<float>& data(int ch) { return data_[ch]; }
  const std::vector<float>& data(int ch) const { return data_[ch]; }
  std::vector<float>& data(const std::string& name);
  const std::vector<float>& data(const std::string& name) const;

  float at(int ch, int r, int c) const {
    return data_[ch][static_cast<size_t>(r) * width_ + c];
  }
  void set(int ch, int r, int c, float v) {
    data_[ch][static_cast<size_t>(r) * width_ + c] = v;
  }
  bool in_bounds(int r, int c) const {
    return r >= 0 && r < height_ && c >= 0 && c < width_;
  }
  bool in_bounds(Cell cell) const { return in_bounds(cell.r, cell.c); }
  size_t cell_index(int r, int c) const {
    return static_cast<size_t>(r) * width_ + c;
  }
  size_t cell_index(Cell cell) const { return cell_index(cell.r, cell.c); }
  size_t cell_count() const { return static_cast<size_t>(height_) * width_; }

  Pose2D cell_center(Cell cell) const;
  Cell cell_of(double x, double y) const;

 private:
  int height_ = 0, width_ = 0;
  double res_ = 0.0;
  std::vector<ChannelDesc> channels_;
  std::vector<std::vector<float>> data_;
};

GridStack new_grid(int height, int width, double resolution,
                   std::vector<ChannelDesc> channels);

/** Rigid transform of every channel: rotate by angle_rad (clockwise positive)
    about the grid center, then translate by (dx, dy) whole cells.
    Nearest-neighbor inverse mapping; cells sourced from outside read 0. */
GridStack transform(const GridStack& in, double angle_rad, int dx, int dy);

/** True when the open segment between the two points (continuous cell
    coordinates, e.g. r + 0.5) crosses only cells with open != 0. The cells
    containing the endpoints never block. */
bool line_of_sight(const std::vector<uint8_t>& open, int height, int width,
                   double r0, double c0, double r1, double c1);

void write_raster(const GridStack& grid, const std::filesystem::path& dir);
GridStack read_raster(const std::filesystem::path& dir);

}  // namespace ognav
