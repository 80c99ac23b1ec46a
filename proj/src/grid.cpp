#include "ognav/grid.hpp"

#include <bit>
#include <cmath>
#include <cstring>
#include <fstream>
#include <limits>
#include <sstream>

#include "json.hpp"

static_assert(std::endian::native == std::endian::little,
              "raster payloads are little-endian");

namespace ognav {

using nlohmann::json;
namespace fs = std::filesystem;

constexpr double kInfinity = std::numeric_limits<double>::infinity();

const char* to_string(ChannelKind k) {
  switch (k) {
    case ChannelKind::Occupancy: return "occupancy";
    case ChannelKind::Explored: return "explored";
    case ChannelKind::Object: return "object";
    case ChannelKind::Room: return "room";
    case ChannelKind::Potential: return "potential";
    case ChannelKind::Scalar: return "scalar";
  }
  return "scalar";
}

ChannelKind channel_kind_from_string(const std::string& s) {
  if (s == "occupancy") return ChannelKind::Occupancy;
  if (s == "explored") return ChannelKind::Explored;
  if (s == "object") return ChannelKind::Object;
  if (s == "room") return ChannelKind::Room;
  if (s == "potential") return ChannelKind::Potential;
  if (s == "scalar") return ChannelKind::Scalar;
  throw FormatError("unknown channel kind '" + s + "'");
}

double wrap_angle(double theta) {
  double t = std::fmod(theta + M_PI, 2.0 * M_PI);
  if (t < 0) t += 2.0 * M_PI;
  return t - M_PI;
}

static void validate_channel_names(const std::vector<ChannelDesc>& channels) {
  for (size_t i = 0; i < channels.size(); ++i) {
    const std::string& n = channels[i].name;
    if (n.empty() || n.find('/') != std::string::npos)
      throw std::invalid_argument("bad channel name '" + n + "'");
    for (size_t j = 0; j < i; ++j)
      if (channels[j].name == n)
        throw std::invalid_argument("duplicate channel name '" + n + "'");
  }
}

GridStack::GridStack(int height, int width, double resolution,
                     std::vector<ChannelDesc> channels)
    : height_(height), width_(width), res_(resolution),
      channels_(std::move(channels)) {
  if (height < 1 || width < 1)
    throw std::invalid_argument("grid dimensions must be positive");
  if (!(resolution > 0.0))
    throw std::invalid_argument("grid resolution must be positive");
  validate_channel_names(channels_);
  data_.assign(channels_.size(),
               std::vector<float>(static_cast<size_t>(height) * width, 0.0f));
}

bool GridStack::has_channel(const std::string& name) const {
  for (const auto& ch : channels_)
    if (ch.name == name) return true;
  return false;
}

int GridStack::channel_index(const std::string& name) const {
  for (size_t i = 0; i < channels_.size(); ++i)
    if (channels_[i].name == name) return static_cast<int>(i);
  throw std::invalid_argument("no channel named '" + name + "'");
}

void GridStack::add_channel(const ChannelDesc& desc) {
  auto next = channels_;
  next.push_back(desc);
  validate_channel_names(next);
  channels_ = std::move(next);
  data_.emplace_back(cell_count(), 0.0f);
}

std::vector<float>& GridStack::data(const std::string& name) {
  return data_[channel_index(name)];
}
const std::vector<float>& GridStack::data(const std::string& name) const {
  return data_[channel_index(name)];
}

Pose2D GridStack::cell_center(Cell cell) const {
  return {(cell.c + 0.5) * res_, (cell.r + 0.5) * res_, 0.0};
}

Cell GridStack::cell_of(double x, double y) const {
  return {static_cast<int>(std::floor(y / res_)),
          static_cast<int>(std::floor(x / res_))};
}

GridStack new_grid(int height, int width, double resolution,
                   std::vector<ChannelDesc> channels) {
  return GridStack(height, width, resolution, std::move(channels));
}

GridStack transform(const GridStack& in, double angle_rad, int dx, int dy) {
  GridStack out(in.height(), in.width(), in.resolution(), in.channels());
  const double cx = in.width() / 2.0, cy = in.height() / 2.0;
  const double cs = std::cos(angle_rad), sn = std::sin(angle_rad);
  for (int r = 0; r < in.height(); ++r) {
    for (int c = 0; c < in.width(); ++c) {
      // invert: rotate about the center, then shift by (dx, dy) cells
      const double ux = (c + 0.5) - dx - cx;
      const double uy = (r + 0.5) - dy - cy;
      const double sx = ux * cs + uy * sn + cx;
      const double sy = -ux * sn + uy * cs + cy;
      const int sc = static_cast<int>(std::floor(sx));
      const int sr = static_cast<int>(std::floor(sy));
      if (!in.in_bounds(sr, sc)) continue;
      for (int ch = 0; ch < in.channel_count(); ++ch)
        out.set(ch, r, c, in.at(ch, sr, sc));
    }
  }
  return out;
}

bool line_of_sight(const std::vector<uint8_t>& open, int height, int width,
                   double r0, double c0, double r1, double c1) {
  auto blocked = [&](int r, int c) {
    return r >= 0 && r < height && c >= 0 && c < width &&
           !open[static_cast<size_t>(r) * width + c];
  };
  int cr = static_cast<int>(std::floor(r0));
  int cc = static_cast<int>(std::floor(c0));
  const int tr = static_cast<int>(std::floor(r1));
  const int tc = static_cast<int>(std::floor(c1));
  const double dr = r1 - r0, dc = c1 - c0;
  const int sr = dr > 0 ? 1 : -1, sc = dc > 0 ? 1 : -1;
  const double tdr = dr == 0 ? kInfinity : std::abs(1.0 / dr);
  const double tdc = dc == 0 ? kInfinity : std::abs(1.0 / dc);
  double tmr = dr == 0 ? kInfinity
                       : (sr > 0 ? (cr + 1 - r0) : (r0 - cr)) * tdr;
  double tmc = dc == 0 ? kInfinity
                       : (sc > 0 ? (cc + 1 - c0) : (c0 - cc)) * tdc;
  int guard = 2 * (height + width) + 4;
  while ((cr != tr || cc != tc) && guard-- > 0) {
    if (tmr == tmc) {
      // exact corner crossing: passable only when the gap is not pinched shut
      if (blocked(cr + sr, cc) && blocked(cr, cc + sc)) return false;
      cr += sr;
      cc += sc;
      tmr += tdr;
      tmc += tdc;
    } else if (tmr < tmc) {
      cr += sr;
      tmr += tdr;
    } else {
      cc += sc;
      tmc += tdc;
    }
    if (cr == tr && cc == tc) break;
    if (blocked(cr, cc)) return false;
  }
  return true;
}

// ---- raster container ----

static json require_field(const json& j, const char* key,
                          const fs::path& where) {
  if (!j.contains(key))
    throw FormatError("raster meta " + where.string() + ": missing field '" +
                      key + "'");
  return j.at(key);
}

void write_raster(const GridStack& grid, const fs::path& dir) {
  fs::create_directories(dir);
  json meta;
  meta["height"] = grid.height();
  meta["width"] = grid.width();
  meta["resolution"] = grid.resolution();
  meta["dtype"] = "f32";
  meta["byte_order"] = "little-endian";
  json chans = json::array();
  for (const auto& ch : grid.channels())
    chans.push_back({{"kind", to_string(ch.kind)}, {"name", ch.name}});
  meta["channels"] = chans;
  {
    std::ofstream out(dir / "meta.json", std::ios::binary);
    out << meta.dump(2) << "\n";
    if (!out) throw FormatError("cannot write " + (dir / "meta.json").string());
  }
  for (int i = 0; i < grid.channel_count(); ++i) {
    const auto path = dir / (grid.channels()[i].name + ".f32");
    std::ofstream out(path, std::ios::binary);
    const auto& d = grid.data(i);
    out.write(reinterpret_cast<const char*>(d.data()),
              static_cast<std::streamsize>(d.size() * sizeof(float)));
    if (!out) throw FormatError("cannot write " + path.string());
  }
}

static void validate_channel_values(const ChannelDesc& ch,
                                    const std::vector<float>& d,
                                    const fs::path& dir) {
  auto fail = [&](size_t i, float v) {
    std::ostringstream msg;
    msg << "raster " << dir.string() << ": channel '" << ch.name
        << "' (" << to_string(ch.kind) << ") holds invalid value " << v
        << " at cell " << i;
    throw FormatError(msg.str());
  };
  switch (ch.kind) {
    case ChannelKind::Occupancy:
    case ChannelKind::Explored:
    case ChannelKind::Object:
    case ChannelKind::Room:
      for (size_t i = 0; i < d.size(); ++i)
        if (d[i] != 0.0f && d[i] != 1.0f) fail(i, d[i]);
      break;
    case ChannelKind::Potential:
      for (size_t i = 0; i < d.size(); ++i)
        if (!(d[i] >= -1.0f && d[i] <= 1.0f)) fail(i, d[i]);
      break;
    case ChannelKind::Scalar:
      break;
  }
}

GridStack read_raster(const fs::path& dir) {
  const auto meta_path = dir / "meta.json";
  std::ifstream in(meta_path, std::ios::binary);
  if (!in) throw FormatError("cannot open " + meta_path.string());
  json meta;
  try {
    in >> meta;
  } catch (const json::exception& e) {
    throw FormatError("raster meta " + meta_path.string() + ": " + e.what());
  }

  const auto jh = require_field(meta, "height", meta_path);
  const auto jw = require_field(meta, "width", meta_path);
  const auto jres = require_field(meta, "resolution", meta_path);
  if (!jh.is_number_integer() || !jw.is_number_integer() ||
      jh.get<int>() < 1 || jw.get<int>() < 1)
    throw FormatError("raster meta " + meta_path.string() +
                      ": height/width must be positive integers");
  if (!jres.is_number() || !(jres.get<double>() > 0))
    throw FormatError("raster meta " + meta_path.string() +
                      ": resolution must be positive");
  if (require_field(meta, "dtype", meta_path) != "f32")
    throw FormatError("raster meta " + meta_path.string() +
                      ": unsupported dtype");
  if (require_field(meta, "byte_order", meta_path) != "little-endian")
    throw FormatError("raster meta " + meta_path.string() +
                      ": unsupported byte_order");
  const auto jchans = require_field(meta, "channels", meta_path);
  if (!jchans.is_array() || jchans.empty())
    throw FormatError("raster meta " + meta_path.string() +
                      ": channels must be a non-empty array");

  std::vector<ChannelDesc> channels;
  for (const auto& jc : jchans) {
    ChannelDesc desc;
    desc.kind = channel_kind_from_string(
        require_field(jc, "kind", meta_path).get<std::string>());
    desc.name = require_field(jc, "name", meta_path).get<std::string>();
    channels.push_back(std::move(desc));
  }

  GridStack grid;
  try {
    grid = GridStack(jh.get<int>(), jw.get<int>(), jres.get<double>(),
                     channels);
  } catch (const std::invalid_argument& e) {
    throw FormatError("raster meta " + meta_path.string() + ": " + e.what());
  }

  const size_t expect_bytes = grid.cell_count() * sizeof(float);
  for (int i = 0; i < grid.channel_count(); ++i) {
    const auto path = dir / (channels[i].name + ".f32");
    std::ifstream ch(path, std::ios::binary | std::ios::ate);
    if (!ch) throw FormatError("raster channel payload missing: " + path.string());
    const auto size = static_cast<size_t>(ch.tellg());
    if (size != expect_bytes) {
      std::ostringstream msg;
      msg << "raster channel " << path.string() << ": expected "
          << expect_bytes << " bytes, found " << size;
      throw FormatError(msg.str());
    }
    ch.seekg(0);
    ch.read(reinterpret_cast<char*>(grid.data(i).data()),
            static_cast<std::streamsize>(expect_bytes));
    if (!ch) throw FormatError("raster channel unreadable: " + path.string());
    validate_channel_values(channels[i], grid.data(i), dir);
  }
  return grid;
}

}  // namespace ognav
