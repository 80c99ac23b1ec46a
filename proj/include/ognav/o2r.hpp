#pragma once

#include <filesystem>
#include <stdexcept>
#include <string>
#include <vector>

namespace ognav {

class AuthError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};
class TransportError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};
class ResponseParseError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

struct MatrixProvenance {
  std::string source = "bundled";  // "bundled" or "llm"
  std::string model;               // llm only
  std::string timestamp;           // llm only, ISO-8601
};

/** Object-to-room affinity scores in [-1, 1], rooms x objects. */
class O2RMatrix {
 public:
  O2RMatrix() = default;
  O2RMatrix(std::vector<std::string> rooms, std::vector<std::string> objects,
            std::vector<double> scores, MatrixProvenance prov = {});

  const std::vector<std::string>& rooms() const { return rooms_; }
  const std::vector<std::string>& objects() const { return objects_; }
  const MatrixProvenance& provenance() const { return prov_; }

  int room_index(const std::string& room) const;      // -1 when absent
  int object_index(const std::string& object) const;  // -1 when absent

  double score(int room_idx, int object_idx) const;
  // throws std::invalid_argument when either category is unknown
  double score(const std::string& room, const std::string& object) const;

  const std::vector<double>& scores() const { return scores_; }

 private:
  std::vector<std::string> rooms_, objects_;
  std::vector<double> scores_;  // rooms x objects, row-major
  MatrixProvenance prov_;
};

/** positive - negative, each validated to lie in [0, 1]. */
double combine_scores(double positive, double negative);

/** Top-k rooms for an object, descending score, ties kept in room order. */
std::vector<std::string> top_rooms(const O2RMatrix& m, const std::string& object,
                                   int k);

void save_matrix(const O2RMatrix& m, const std::filesystem::path& file);
O2RMatrix load_matrix(const std::filesystem::path& file);

// built-in default matrices keyed by dataset name ("gibson" or "mp3d");
// synthetic hand-tuned scores, usable offline
const O2RMatrix& bundled_matrix(const std::string& dataset);

/** Chain-of-thought prompt pair; both templates carry {object} and
    {room-list} slots. */
struct PromptPair {
  std::string preamble;
  std::string positive;
  std::string negative;

  static PromptPair defaults();
  std::string render_positive(const std::string& object,
                              const std::vector<std::string>& rooms) const;
  std::string render_negative(const std::string& object,
                              const std::vector<std::string>& rooms) const;
};

struct LlmConfig {
  std::string base_url = "https://api.openai.com";
  std::string path = "/v1/chat/completions";
  std::string model = "gpt-4";
  double temperature = 0.0;
  int max_retries = 2;
  int timeout_s = 60;
  bool fallback_to_bundled = false;
  std::string fallback_dataset = "gibson";
  std::string api_key_env = "O2R_LLM_API_KEY";
};

struct LlmTranscript {
  std::string object;
  std::string kind;  // "positive" or "negative"
  std::string request;
  std::string response;
};

struct LlmQueryResult {
  O2RMatrix matrix;
  std::vector<LlmTranscript> transcripts;
  std::vector<std::string> warnings;
  bool used_fallback = false;
};

/** Queries positive/negative scores per object over the room list and
    combines them into a matrix. On transport failure falls back to the
    bundled matrix when configured, else rethrows. */
LlmQueryResult query_llm_matrix(const std::vector<std::string>& rooms,
                                const std::vector<std::string>& objects,
                                const PromptPair& prompts,
                                const LlmConfig& cfg);

/** Pulls per-room scores out of a model reply: last `room: score` line per
    room (case-insensitive). Missing rooms score 0 with a warning; a reply
    with no parseable line at all, or any score outside [0, 1], throws
    ResponseParseError. */
std::vector<double> parse_room_scores(const std::string& text,
                                      const std::vector<std::string>& rooms,
                                      std::vector<std::string>* warnings);

void save_transcripts(const std::vector<LlmTranscript>& transcripts,
                      const std::filesystem::path& file);

}  // namespace ognav
