#include "ognav/o2r.hpp"

#include <algorithm>
#include <cctype>
#include <chrono>
#include <cstdlib>
#include <ctime>
#include <fstream>
#include <memory>
#include <numeric>
#include <sstream>

#include "json.hpp"
#include "httplib.h"
#include "ognav/grid.hpp"

namespace ognav {

namespace {

using nlohmann::json;

std::string lower(std::string s) {
  std::transform(s.begin(), s.end(), s.begin(),
                 [](unsigned char c) { return std::tolower(c); });
  return s;
}

void check_categories(const std::vector<std::string>& names,
                      const char* what) {
  if (names.empty())
    throw std::invalid_argument(std::string(what) + " list is empty");
  for (size_t i = 0; i < names.size(); ++i) {
    if (names[i].empty())
      throw std::invalid_argument(std::string(what) + " name at index " +
                                  std::to_string(i) + " is empty");
    for (size_t j = i + 1; j < names.size(); ++j)
      if (names[i] == names[j])
        throw std::invalid_argument("duplicate " + std::string(what) +
                                    " category '" + names[i] + "'");
  }
}

std::string snippet(const std::string& text, size_t limit = 500) {
  if (text.size() <= limit) return text;
  return text.substr(0, limit) + "...";
}

}  // namespace

O2RMatrix::O2RMatrix(std::vector<std::string> rooms,
                     std::vector<std::string> objects,
                     std::vector<double> scores, MatrixProvenance prov)
    : rooms_(std::move(rooms)),
      objects_(std::move(objects)),
      scores_(std::move(scores)),
      prov_(std::move(prov)) {
  check_categories(rooms_, "room");
  check_categories(objects_, "object");
  if (scores_.size() != rooms_.size() * objects_.size()) {
    std::ostringstream msg;
    msg << "score table has " << scores_.size() << " entries, expected "
        << rooms_.size() << " x " << objects_.size();
    throw std::invalid_argument(msg.str());
  }
  for (size_t r = 0; r < rooms_.size(); ++r)
    for (size_t o = 0; o < objects_.size(); ++o) {
      const double v = scores_[r * objects_.size() + o];
      if (!(v >= -1.0 && v <= 1.0)) {
        std::ostringstream msg;
        msg << "score out of range [-1, 1] at (" << rooms_[r] << ", "
            << objects_[o] << "): " << v;
        throw std::invalid_argument(msg.str());
      }
    }
}

int O2RMatrix::room_index(const std::string& room) const {
  auto it = std::find(rooms_.begin(), rooms_.end(), room);
  return it == rooms_.end() ? -1 : static_cast<int>(it - rooms_.begin());
}

int O2RMatrix::object_index(const std::string& object) const {
  auto it = std::find(objects_.begin(), objects_.end(), object);
  return it == objects_.end() ? -1 : static_cast<int>(it - objects_.begin());
}

double O2RMatrix::score(int room_idx, int object_idx) const {
  if (room_idx < 0 || room_idx >= static_cast<int>(rooms_.size()))
    throw std::out_of_range("room index " + std::to_string(room_idx) +
                            " out of range [0, " +
                            std::to_string(rooms_.size()) + ")");
  if (object_idx < 0 || object_idx >= static_cast<int>(objects_.size()))
    throw std::out_of_range("object index " + std::to_string(object_idx) +
                            " out of range [0, " +
                            std::to_string(objects_.size()) + ")");
  return scores_[static_cast<size_t>(room_idx) * objects_.size() + object_idx];
}

double O2RMatrix::score(const std::string& room,
                        const std::string& object) const {
  const int r = room_index(room);
  if (r < 0) throw std::invalid_argument("unknown room category '" + room + "'");
  const int o = object_index(object);
  if (o < 0)
    throw std::invalid_argument("unknown object category '" + object + "'");
  return score(r, o);
}

double combine_scores(double positive, double negative) {
  if (!(positive >= 0.0 && positive <= 1.0))
    throw std::invalid_argument("positive score " + std::to_string(positive) +
                                " outside [0, 1]");
  if (!(negative >= 0.0 && negative <= 1.0))
    throw std::invalid_argument("negative score " + std::to_string(negative) +
                                " outside [0, 1]");
  return positive - negative;
}

std::vector<std::string> top_rooms(const O2RMatrix& m,
                                   const std::string& object, int k) {
  const int o = m.object_index(object);
  if (o < 0)
    throw std::invalid_argument("unknown object category '" + object + "'");
  const int n = static_cast<int>(m.rooms().size());
  if (k < 1 || k > n)
    throw std::invalid_argument("k = " + std::to_string(k) +
                                " outside [1, " + std::to_string(n) + "]");
  std::vector<int> order(n);
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(), [&](int a, int b) {
    return m.score(a, o) > m.score(b, o);
  });
  std::vector<std::string> out;
  out.reserve(k);
  for (int i = 0; i < k; ++i) out.push_back(m.rooms()[order[i]]);
  return out;
}

void save_matrix(const O2RMatrix& m, const std::filesystem::path& file) {
  json j;
  j["rooms"] = m.rooms();
  j["objects"] = m.objects();
  json rows = json::array();
  for (size_t r = 0; r < m.rooms().size(); ++r) {
    json row = json::array();
    for (size_t o = 0; o < m.objects().size(); ++o)
      row.push_back(m.score(static_cast<int>(r), static_cast<int>(o)));
    rows.push_back(std::move(row));
  }
  j["scores"] = std::move(rows);
  j["provenance"] = {{"source", m.provenance().source},
                     {"model", m.provenance().model},
                     {"timestamp", m.provenance().timestamp}};
  std::ofstream out(file);
  if (!out) throw FormatError("cannot open " + file.string() + " for writing");
  out << j.dump(2) << '\n';
  if (!out) throw FormatError("failed writing " + file.string());
}

O2RMatrix load_matrix(const std::filesystem::path& file) {
  std::ifstream in(file);
  if (!in) throw FormatError("cannot open " + file.string());
  json j = json::parse(in, nullptr, false);
  if (j.is_discarded())
    throw FormatError(file.string() + ": not valid JSON");
  for (const char* key : {"rooms", "objects", "scores"})
    if (!j.contains(key))
      throw FormatError(file.string() + ": missing field '" + key + "'");
  if (!j["rooms"].is_array() || !j["objects"].is_array() ||
      !j["scores"].is_array())
    throw FormatError(file.string() +
                      ": 'rooms', 'objects' and 'scores' must be arrays");

  std::vector<std::string> rooms, objects;
  for (const auto& v : j["rooms"]) {
    if (!v.is_string())
      throw FormatError(file.string() + ": non-string room name");
    rooms.push_back(v.get<std::string>());
  }
  for (const auto& v : j["objects"]) {
    if (!v.is_string())
      throw FormatError(file.string() + ": non-string object name");
    objects.push_back(v.get<std::string>());
  }

  if (j["scores"].size() != rooms.size())
    throw FormatError(file.string() + ": 'scores' has " +
                      std::to_string(j["scores"].size()) + " rows, expected " +
                      std::to_string(rooms.size()));
  std::vector<double> scores;
  scores.reserve(rooms.size() * objects.size());
  for (size_t r = 0; r < j["scores"].size(); ++r) {
    const auto& row = j["scores"][r];
    if (!row.is_array() || row.size() != objects.size())
      throw FormatError(file.string() + ": score row for room '" + rooms[r] +
                        "' must hold " + std::to_string(objects.size()) +
                        " numbers");
    for (size_t o = 0; o < row.size(); ++o) {
      if (!row[o].is_number())
        throw FormatError(file.string() + ": non-numeric score at (" +
                          rooms[r] + ", " + objects[o] + ")");
      scores.push_back(row[o].get<double>());
    }
  }

  MatrixProvenance prov;
  if (j.contains("provenance")) {
    const auto& p = j["provenance"];
    if (p.contains("source")) prov.source = p["source"].get<std::string>();
    if (p.contains("model")) prov.model = p["model"].get<std::string>();
    if (p.contains("timestamp"))
      prov.timestamp = p["timestamp"].get<std::string>();
  }

  try {
    return O2RMatrix(std::move(rooms), std::move(objects), std::move(scores),
                     std::move(prov));
  } catch (const std::invalid_argument& e) {
    throw FormatError(file.string() + ": " + e.what());
  }
}

namespace {

// clang-format off
const std::vector<std::string> kGibsonRooms = {
    "bathroom", "bedroom", "child's room", "closet", "corridor",
    "dining room", "empty room", "exercise room", "garage", "home office",
    "kitchen", "living room", "lobby", "pantry room", "playroom",
    "staircase", "storage room", "television room", "utility room"};

const std::vector<std::string> kGibsonObjects = {
    "chair", "couch", "potted plant", "bed", "toilet", "tv", "dining table",
    "oven", "sink", "refrigerator", "book", "clock", "vase", "cup", "bottle"};

// synthetic defaults; override with your own file for serious use
const double kGibsonScores[19][15] = {
    // chair couch plant  bed  toilet tv   table oven  sink  fridge book clock vase  cup  bottle
    {-0.30, -0.80, 0.20, -0.90, 0.95, -0.85, -0.90, -0.95, 0.90, -0.90, -0.40, -0.10, 0.00, 0.10, 0.55},   // bathroom
    {0.40, 0.10, 0.30, 0.95, -0.90, 0.50, -0.60, -0.95, -0.70, -0.80, 0.70, 0.60, 0.20, 0.10, 0.10},    // bedroom
    {0.45, 0.00, 0.00, 0.85, -0.90, 0.30, -0.60, -0.95, -0.70, -0.85, 0.75, 0.40, -0.20, 0.10, 0.10},   // child's room
    {-0.50, -0.90, -0.60, -0.90, -0.90, -0.80, -0.95, -0.95, -0.90, -0.80, 0.00, -0.40, -0.30, -0.40, -0.20}, // closet
    {-0.20, -0.50, 0.50, -0.90, -0.90, -0.70, -0.80, -0.90, -0.80, -0.70, -0.30, 0.30, 0.30, -0.40, -0.40},  // corridor
    {0.85, -0.20, 0.45, -0.90, -0.90, -0.30, 0.95, -0.40, -0.30, 0.00, -0.10, 0.40, 0.60, 0.75, 0.60},    // dining room
    {-0.10, -0.30, -0.10, -0.90, -0.90, -0.50, -0.40, -0.90, -0.80, -0.60, -0.40, -0.30, -0.30, -0.50, -0.50}, // empty room
    {-0.10, -0.40, 0.10, -0.90, -0.90, 0.50, -0.80, -0.90, -0.30, -0.40, -0.30, 0.50, -0.50, 0.00, 0.50},   // exercise room
    {-0.20, -0.50, -0.40, -0.90, -0.90, -0.60, -0.70, -0.70, 0.00, 0.30, -0.50, -0.30, -0.60, -0.40, 0.20},  // garage
    {0.85, 0.20, 0.50, -0.90, -0.90, 0.20, -0.20, -0.95, -0.80, -0.60, 0.90, 0.60, 0.20, 0.50, 0.20},    // home office
    {0.30, -0.50, 0.20, -0.90, -0.90, -0.20, 0.40, 0.95, 0.92, 0.95, -0.20, 0.50, 0.10, 0.85, 0.80},     // kitchen
    {0.70, 0.95, 0.75, -0.90, -0.90, 0.90, 0.20, -0.90, -0.80, -0.70, 0.60, 0.70, 0.70, 0.40, 0.30},     // living room
    {0.30, 0.40, 0.60, -0.90, -0.90, -0.30, -0.40, -0.90, -0.80, -0.80, -0.20, 0.50, 0.50, -0.20, -0.20},  // lobby
    {-0.60, -0.90, -0.30, -0.90, -0.90, -0.80, -0.50, -0.20, -0.40, 0.40, -0.40, -0.30, -0.20, 0.30, 0.70},  // pantry room
    {0.40, 0.30, 0.00, -0.90, -0.90, 0.60, -0.30, -0.90, -0.70, -0.60, 0.50, 0.30, -0.30, 0.10, 0.00},    // playroom
    {-0.70, -0.95, 0.10, -0.90, -0.90, -0.90, -0.95, -0.95, -0.90, -0.90, -0.50, -0.20, 0.00, -0.60, -0.60},  // staircase
    {-0.30, -0.60, -0.50, -0.90, -0.90, -0.60, -0.60, -0.80, -0.80, -0.40, 0.10, -0.30, -0.10, -0.30, 0.00},  // storage room
    {0.60, 0.90, 0.40, -0.90, -0.90, 0.95, -0.10, -0.90, -0.80, -0.50, 0.30, 0.50, 0.30, 0.30, 0.20},    // television room
    {-0.40, -0.80, -0.30, -0.90, -0.90, -0.80, -0.80, -0.30, 0.50, -0.10, -0.50, -0.20, -0.50, -0.30, 0.30},  // utility room
};

const std::vector<std::string> kMp3dRooms = {
    "bathroom", "bedroom", "closet", "dining room", "entryway", "family room",
    "garage", "hallway", "library", "laundry room", "kitchen", "living room",
    "meeting room", "lounge", "office", "porch", "recroom", "stairs", "toilet",
    "utility room", "gym", "outdoor", "other-room", "bar", "classroom",
    "dining booth", "spa", "junk"};

const std::vector<std::string> kMp3dObjects = {
    "chair", "table", "picture", "cabinet", "cushion", "sofa", "bed",
    "chest_of_drawers", "plant", "sink", "toilet", "stool", "towel",
    "tv_monitor", "shower", "bathtub", "counter", "fireplace",
    "gym_equipment", "seating", "clothes"};

const double kMp3dScores[28][21] = {
    // chair table pictr cabin cushn sofa  bed  chest plant sink toilet stool towel tv   shwr  btub  cntr  fire  gym   seat  cloth
    {-0.30, -0.60, 0.10, 0.50, -0.60, -0.90, -0.90, -0.30, 0.10, 0.90, 0.95, 0.00, 0.90, -0.90, 0.90, 0.90, 0.50, -0.95, -0.80, -0.60, 0.20},  // bathroom
    { 0.40,  0.20, 0.60, 0.60, 0.70, 0.10, 0.95, 0.90, 0.30, -0.70, -0.90, 0.00, 0.20, 0.40, -0.90, -0.80, -0.60, -0.30, -0.60, 0.10, 0.80},   // bedroom
    {-0.50, -0.80, -0.40, 0.70, -0.30, -0.90, -0.80, 0.50, -0.60, -0.90, -0.95, -0.40, 0.30, -0.90, -0.90, -0.90, -0.70, -0.95, -0.70, -0.80, 0.90}, // closet
    { 0.85,  0.95, 0.50, 0.30, -0.20, -0.20, -0.95, -0.40, 0.50, -0.30, -0.95, 0.30, -0.60, -0.30, -0.95, -0.95, 0.20, -0.20, -0.90, 0.50, -0.60}, // dining room
    {-0.10, -0.30, 0.40, 0.20, -0.40, -0.40, -0.90, -0.20, 0.50, -0.80, -0.90, -0.30, -0.60, -0.70, -0.90, -0.90, -0.50, -0.60, -0.80, 0.00, 0.10}, // entryway
    { 0.60,  0.40, 0.60, 0.20, 0.80, 0.90, -0.40, 0.00, 0.50, -0.70, -0.90, 0.20, -0.50, 0.90, -0.90, -0.90, -0.30, 0.60, -0.40, 0.80, 0.00},   // family room
    {-0.20, -0.30, -0.50, 0.40, -0.70, -0.50, -0.70, -0.20, -0.40, 0.00, -0.80, 0.00, -0.60, -0.60, -0.80, -0.80, 0.30, -0.90, 0.20, -0.50, -0.30}, // garage
    {-0.20, -0.50, 0.60, 0.10, -0.50, -0.50, -0.90, -0.10, 0.50, -0.80, -0.90, -0.40, -0.60, -0.70, -0.90, -0.90, -0.60, -0.70, -0.80, -0.30, -0.20}, // hallway
    { 0.70,  0.60, 0.50, 0.40, 0.30, 0.40, -0.70, -0.10, 0.40, -0.80, -0.90, 0.20, -0.70, -0.40, -0.95, -0.95, -0.50, 0.30, -0.80, 0.60, -0.50},  // library
    {-0.40, -0.40, -0.30, 0.50, -0.50, -0.80, -0.90, 0.10, -0.20, 0.60, -0.50, -0.20, 0.70, -0.80, -0.40, -0.30, 0.40, -0.90, -0.70, -0.60, 0.85}, // laundry room
    { 0.30,  0.40, 0.10, 0.80, -0.50, -0.50, -0.95, -0.20, 0.20, 0.92, -0.80, 0.50, 0.10, -0.30, -0.90, -0.90, 0.95, -0.60, -0.90, 0.00, -0.60},  // kitchen
    { 0.70,  0.50, 0.70, 0.20, 0.90, 0.95, -0.60, 0.00, 0.75, -0.80, -0.95, 0.30, -0.50, 0.90, -0.90, -0.90, -0.20, 0.80, -0.40, 0.90, -0.30},   // living room
    { 0.80,  0.90, 0.40, 0.10, -0.20, 0.10, -0.95, -0.40, 0.30, -0.70, -0.90, 0.10, -0.70, 0.60, -0.95, -0.95, -0.30, -0.50, -0.90, 0.70, -0.70},  // meeting room
    { 0.60,  0.30, 0.50, 0.00, 0.70, 0.85, -0.50, -0.20, 0.60, -0.60, -0.90, 0.40, -0.50, 0.50, -0.90, -0.90, 0.00, 0.50, -0.50, 0.85, -0.40},   // lounge
    { 0.85,  0.60, 0.50, 0.50, 0.10, 0.20, -0.70, 0.10, 0.50, -0.80, -0.95, 0.20, -0.70, 0.30, -0.95, -0.95, -0.40, -0.40, -0.80, 0.40, -0.50},   // office
    { 0.30,  0.20, -0.30, -0.50, 0.10, 0.20, -0.90, -0.80, 0.70, -0.80, -0.90, 0.20, -0.60, -0.90, -0.90, -0.90, -0.60, -0.70, -0.70, 0.50, -0.50}, // porch
    { 0.40,  0.40, 0.20, 0.00, 0.40, 0.60, -0.50, -0.20, 0.20, -0.60, -0.80, 0.40, -0.50, 0.70, -0.90, -0.90, 0.10, 0.10, 0.50, 0.60, -0.40},    // recroom
    {-0.70, -0.95, 0.30, -0.70, -0.60, -0.95, -0.95, -0.70, 0.10, -0.90, -0.95, -0.60, -0.70, -0.90, -0.95, -0.95, -0.90, -0.80, -0.90, -0.70, -0.50}, // stairs
    {-0.50, -0.70, 0.00, 0.10, -0.70, -0.95, -0.95, -0.50, 0.00, 0.80, 0.90, -0.30, 0.70, -0.90, 0.30, 0.00, -0.20, -0.95, -0.90, -0.70, -0.20},  // toilet
    {-0.40, -0.30, -0.40, 0.60, -0.60, -0.80, -0.90, 0.00, -0.30, 0.50, -0.50, -0.10, 0.30, -0.80, -0.50, -0.60, 0.40, -0.90, -0.50, -0.60, 0.30}, // utility room
    {-0.20, -0.40, 0.00, -0.20, -0.10, -0.40, -0.80, -0.50, 0.10, -0.20, -0.80, 0.30, 0.60, 0.50, -0.30, -0.70, -0.50, -0.90, 0.95, 0.00, 0.30},  // gym
    { 0.20,  0.10, -0.60, -0.70, -0.20, -0.10, -0.90, -0.90, 0.80, -0.70, -0.90, 0.00, -0.70, -0.95, -0.90, -0.80, -0.70, -0.60, -0.50, 0.40, -0.60}, // outdoor
    { 0.10,  0.00, 0.10, 0.10, 0.00, 0.00, -0.20, 0.00, 0.10, -0.30, -0.50, 0.00, -0.20, -0.10, -0.50, -0.50, -0.20, -0.40, -0.40, 0.10, 0.00},   // other-room
    { 0.50,  0.50, 0.30, 0.40, 0.00, 0.30, -0.95, -0.40, 0.30, 0.40, -0.70, 0.90, -0.50, 0.60, -0.90, -0.90, 0.85, -0.30, -0.80, 0.60, -0.70},   // bar
    { 0.90,  0.80, 0.40, 0.30, -0.30, -0.30, -0.90, -0.40, 0.20, -0.60, -0.90, 0.20, -0.70, 0.40, -0.95, -0.95, -0.30, -0.90, -0.70, 0.60, -0.60},  // classroom
    { 0.80,  0.90, 0.20, -0.20, 0.20, 0.30, -0.95, -0.60, 0.10, -0.50, -0.90, 0.30, -0.70, -0.40, -0.95, -0.95, 0.10, -0.50, -0.90, 0.80, -0.80},  // dining booth
    {-0.30, -0.40, 0.00, -0.10, 0.10, -0.20, -0.60, -0.40, 0.40, 0.50, 0.20, 0.10, 0.90, -0.70, 0.80, 0.90, -0.30, -0.70, -0.20, 0.00, 0.20},    // spa
    {-0.10, -0.20, -0.30, 0.00, -0.30, -0.30, -0.50, -0.10, -0.30, -0.60, -0.70, -0.20, -0.40, -0.60, -0.80, -0.80, -0.40, -0.80, -0.60, -0.40, 0.10}, // junk
};
// clang-format on

O2RMatrix make_bundled(const std::vector<std::string>& rooms,
                       const std::vector<std::string>& objects,
                       const double* table) {
  std::vector<double> scores(table, table + rooms.size() * objects.size());
  return O2RMatrix(rooms, objects, std::move(scores), {"bundled", "", ""});
}

}  // namespace

const O2RMatrix& bundled_matrix(const std::string& dataset) {
  static const O2RMatrix gibson =
      make_bundled(kGibsonRooms, kGibsonObjects, &kGibsonScores[0][0]);
  static const O2RMatrix mp3d =
      make_bundled(kMp3dRooms, kMp3dObjects, &kMp3dScores[0][0]);
  if (dataset == "gibson") return gibson;
  if (dataset == "mp3d") return mp3d;
  throw std::invalid_argument("unknown dataset '" + dataset +
                              "' (expected 'gibson' or 'mp3d')");
}

namespace {

std::string replace_all(std::string text, const std::string& slot,
                        const std::string& value) {
  size_t pos = 0, hits = 0;
  while ((pos = text.find(slot, pos)) != std::string::npos) {
    text.replace(pos, slot.size(), value);
    pos += value.size();
    ++hits;
  }
  if (hits == 0)
    throw std::invalid_argument("prompt template is missing the " + slot +
                                " slot");
  return text;
}

std::string render(const std::string& preamble, const std::string& body,
                   const std::string& object,
                   const std::vector<std::string>& rooms) {
  std::string list;
  for (size_t i = 0; i < rooms.size(); ++i) {
    if (i) list += ", ";
    list += rooms[i];
  }
  std::string filled = replace_all(body, "{object}", object);
  filled = replace_all(filled, "{room-list}", list);
  return preamble.empty() ? filled : preamble + "\n\n" + filled;
}

}  // namespace

PromptPair PromptPair::defaults() {
  PromptPair p;
  p.preamble =
      "You are an expert on the layout of typical homes. Reason step by step "
      "about where household objects are usually located. After your "
      "reasoning, output one line per room in the exact form `room: score` "
      "with a score between 0 and 1. Cover every room in the list.";
  p.positive =
      "Which of the following rooms would you expect to find a {object} in? "
      "Rooms: {room-list}. Give a higher score to rooms where a {object} is "
      "more likely to be found.";
  p.negative =
      "Which of the following rooms is least likely to be relevant for a "
      "{object}? Rooms: {room-list}. Give a higher score to rooms where a "
      "{object} is less likely to be found.";
  return p;
}

std::string PromptPair::render_positive(
    const std::string& object, const std::vector<std::string>& rooms) const {
  return render(preamble, positive, object, rooms);
}

std::string PromptPair::render_negative(
    const std::string& object, const std::vector<std::string>& rooms) const {
  return render(preamble, negative, object, rooms);
}

std::vector<double> parse_room_scores(const std::string& text,
                                      const std::vector<std::string>& rooms,
                                      std::vector<std::string>* warnings) {
  const std::string low = lower(text);
  std::vector<double> out(rooms.size(), 0.0);
  std::vector<bool> found(rooms.size(), false);

  for (size_t i = 0; i < rooms.size(); ++i) {
    const std::string name = lower(rooms[i]);
    size_t pos = 0;
    while ((pos = low.find(name, pos)) != std::string::npos) {
      const size_t start = pos;
      pos += name.size();
      if (start > 0 && std::isalnum(static_cast<unsigned char>(low[start - 1])))
        continue;
      size_t p = start + name.size();
      while (p < low.size() && (low[p] == ' ' || low[p] == '"' || low[p] == '\''))
        ++p;
      if (p >= low.size() || low[p] != ':') continue;
      ++p;
      const char* tail = text.c_str() + p;
      char* end = nullptr;
      const double v = std::strtod(tail, &end);
      if (end == tail) continue;
      if (!(v >= 0.0 && v <= 1.0))
        throw ResponseParseError("score " + std::to_string(v) + " for room '" +
                                 rooms[i] + "' outside [0, 1] in reply: " +
                                 snippet(text));
      out[i] = v;
      found[i] = true;
    }
  }

  if (std::none_of(found.begin(), found.end(), [](bool b) { return b; }))
    throw ResponseParseError("no per-room scores found in reply: " +
                             snippet(text));
  if (warnings)
    for (size_t i = 0; i < rooms.size(); ++i)
      if (!found[i])
        warnings->push_back("no score for room '" + rooms[i] +
                            "'; defaulted to 0");
  return out;
}

namespace {

std::string iso_timestamp_now() {
  const std::time_t t =
      std::chrono::system_clock::to_time_t(std::chrono::system_clock::now());
  std::tm tm{};
  gmtime_r(&t, &tm);
  char buf[32];
  std::strftime(buf, sizeof buf, "%Y-%m-%dT%H:%M:%SZ", &tm);
  return buf;
}

// one chat-completion round trip, returns the assistant text
std::string chat_once(httplib::Client& cli, const LlmConfig& cfg,
                      const std::string& api_key, const std::string& prompt,
                      std::string* raw_request, std::string* raw_response) {
  json body = {{"model", cfg.model},
               {"temperature", cfg.temperature},
               {"messages", json::array({json{{"role", "user"},
                                              {"content", prompt}}})}};
  *raw_request = body.dump();
  httplib::Headers headers = {{"Authorization", "Bearer " + api_key}};
  auto res = cli.Post(cfg.path, headers, *raw_request, "application/json");
  if (!res)
    throw TransportError("request to " + cfg.base_url + cfg.path +
                         " failed: " + httplib::to_string(res.error()));
  *raw_response = res->body;
  if (res->status == 401 || res->status == 403)
    throw AuthError("endpoint rejected credentials (HTTP " +
                    std::to_string(res->status) + ")");
  if (res->status != 200)
    throw TransportError("endpoint returned HTTP " +
                         std::to_string(res->status) + ": " +
                         snippet(res->body));
  json j = json::parse(res->body, nullptr, false);
  if (j.is_discarded() || !j.contains("choices") || j["choices"].empty() ||
      !j["choices"][0].contains("message") ||
      !j["choices"][0]["message"].contains("content"))
    throw ResponseParseError("malformed completion payload: " +
                             snippet(res->body));
  return j["choices"][0]["message"]["content"].get<std::string>();
}

}  // namespace

LlmQueryResult query_llm_matrix(const std::vector<std::string>& rooms,
                                const std::vector<std::string>& objects,
                                const PromptPair& prompts,
                                const LlmConfig& cfg) {
  check_categories(rooms, "room");
  check_categories(objects, "object");

  LlmQueryResult result;
  auto fallback = [&](const std::string& why) -> LlmQueryResult& {
    result.matrix = bundled_matrix(cfg.fallback_dataset);
    result.used_fallback = true;
    result.warnings.push_back("falling back to bundled '" +
                              cfg.fallback_dataset + "' matrix: " + why);
    return result;
  };

  const char* key = std::getenv(cfg.api_key_env.c_str());
  if (key == nullptr || *key == '\0') {
    const std::string why =
        "environment variable " + cfg.api_key_env + " is not set";
    if (cfg.fallback_to_bundled) return fallback(why);
    throw AuthError(why);
  }

  std::vector<double> scores(rooms.size() * objects.size(), 0.0);
  try {
    std::unique_ptr<httplib::Client> client;
    try {
      client = std::make_unique<httplib::Client>(cfg.base_url);
    } catch (const std::invalid_argument& e) {
      // https without TLS support, or a malformed URL
      throw TransportError("cannot reach " + cfg.base_url + ": " + e.what());
    }
    httplib::Client& cli = *client;
    cli.set_connection_timeout(cfg.timeout_s, 0);
    cli.set_read_timeout(cfg.timeout_s, 0);

    for (size_t o = 0; o < objects.size(); ++o) {
      std::vector<double> pos, neg;
      for (const char* kind : {"positive", "negative"}) {
        const bool is_pos = kind[0] == 'p';
        const std::string prompt =
            is_pos ? prompts.render_positive(objects[o], rooms)
                   : prompts.render_negative(objects[o], rooms);
        std::exception_ptr last;
        bool ok = false;
        for (int attempt = 0; attempt <= cfg.max_retries && !ok; ++attempt) {
          LlmTranscript t{objects[o], kind, "", ""};
          try {
            const std::string reply =
                chat_once(cli, cfg, key, prompt, &t.request, &t.response);
            result.transcripts.push_back(t);
            auto parsed = parse_room_scores(reply, rooms, &result.warnings);
            (is_pos ? pos : neg) = std::move(parsed);
            ok = true;
          } catch (const AuthError&) {
            result.transcripts.push_back(t);
            throw;
          } catch (const TransportError&) {
            result.transcripts.push_back(t);
            last = std::current_exception();
          } catch (const ResponseParseError&) {
            result.transcripts.push_back(t);
            last = std::current_exception();
          }
        }
        if (!ok) std::rethrow_exception(last);
      }
      for (size_t r = 0; r < rooms.size(); ++r)
        scores[r * objects.size() + o] = combine_scores(pos[r], neg[r]);
    }
  } catch (const TransportError& e) {
    if (cfg.fallback_to_bundled) return fallback(e.what());
    throw;
  } catch (const AuthError& e) {
    if (cfg.fallback_to_bundled) return fallback(e.what());
    throw;
  }

  result.matrix = O2RMatrix(rooms, objects, std::move(scores),
                            {"llm", cfg.model, iso_timestamp_now()});
  return result;
}

void save_transcripts(const std::vector<LlmTranscript>& transcripts,
                      const std::filesystem::path& file) {
  json arr = json::array();
  for (const auto& t : transcripts)
    arr.push_back({{"object", t.object},
                   {"kind", t.kind},
                   {"request", t.request},
                   {"response", t.response}});
  std::ofstream out(file);
  if (!out) throw FormatError("cannot open " + file.string() + " for writing");
  out << arr.dump(2) << '\n';
  if (!out) throw FormatError("failed writing " + file.string());
}

}  // namespace ognav
