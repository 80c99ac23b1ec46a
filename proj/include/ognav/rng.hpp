#pragma once

#include <cstdint>
#include <random>
#include <string>

namespace ognav {

// mt19937_64 engine (bit-exact per the standard) with hand-rolled result
// mappings, because std:: distributions are implementation-defined and the
// dataset/scene pipelines promise byte-identical output for a fixed seed.
class Rng {
 public:
  explicit Rng(uint64_t seed) : eng_(seed) {}

  uint64_t next() { return eng_(); }

  // [0, bound), bound > 0; rejection sampling keeps it unbiased
  uint64_t uniform_int(uint64_t bound);

  // inclusive range
  int uniform_range(int lo, int hi);

  // [0, 1) with 53 random bits
  double uniform01();

  double uniform(double lo, double hi);

  bool bernoulli(double p) { return uniform01() < p; }

 private:
  std::mt19937_64 eng_;
};

// splitmix64 step; used to derive independent per-item seeds
uint64_t mix_seed(uint64_t a, uint64_t b);

uint64_t hash_string(const std::string& s);  // FNV-1a 64

uint64_t fnv1a(const void* data, size_t n, uint64_t h = 0xcbf29ce484222325ull);

}  // namespace ognav
