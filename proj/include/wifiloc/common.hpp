#pragma once
// Shared primitives: 2D points, deterministic RNG, number formatting,
// content hashing and a small indexed parallel runner.

#include <cmath>
#include <cstdint>
#include <functional>
#include <optional>
#include <random>
#include <string>
#include <string_view>
#include <vector>

namespace wifiloc {

struct Point2 {
  double x = 0.0;
  double y = 0.0;
};

inline double squared_distance(const Point2& a, const Point2& b) {
  const double dx = a.x - b.x;
  const double dy = a.y - b.y;
  return dx * dx + dy * dy;
}

inline double distance(const Point2& a, const Point2& b) {
  return std::sqrt(squared_distance(a, b));
}

// ---------------------------------------------------------------------------
// Deterministic randomness.
//
// Experiment results must reproduce bit-identically from a seed. The engine
// (std::mt19937_64) has a standard-mandated output sequence, but the std
// distribution templates do not, so the distributions live here.

class Rng {
 public:
  explicit Rng(uint64_t seed) : engine_(seed) {}

  uint64_t next_u64() { return engine_(); }

  // Unbiased integer in [0, n) via rejection sampling, n > 0.
  uint64_t bounded(uint64_t n);

  // Uniform in [0, 1), 53-bit resolution.
  double uniform01() { return static_cast<double>(engine_() >> 11) * 0x1.0p-53; }

  double uniform(double lo, double hi) { return lo + (hi - lo) * uniform01(); }

  // Standard normal via Box-Muller; one value per call, spare discarded.
  double normal();

  double normal(double mean, double sigma) { return mean + sigma * normal(); }

  template <typename T>
  void shuffle(std::vector<T>& v) {
    for (size_t i = v.size(); i > 1; --i) {
      const size_t j = static_cast<size_t>(bounded(i));
      std::swap(v[i - 1], v[j]);
    }
  }

  // k distinct indices from [0, n), returned sorted ascending.
  std::vector<size_t> sample_indices(size_t n, size_t k);

 private:
  std::mt19937_64 engine_;
};

// Independent stream seed from a master seed and a job index (SplitMix64
// finalizer); schedule-independent parallel work hangs off these.
uint64_t derive_seed(uint64_t master, uint64_t index);

// ---------------------------------------------------------------------------
// Text and number helpers.

// Shortest round-trip decimal form of a double (std::to_chars). Writing,
// parsing and re-writing a value is byte-stable.
std::string format_double(double v);

std::optional<double> parse_double(std::string_view s);
std::optional<int64_t> parse_int64(std::string_view s);

std::vector<std::string_view> split_whitespace(std::string_view line);
std::vector<std::string> split_char(std::string_view line, char sep);

std::string to_lower(std::string_view s);
bool icontains(std::string_view haystack, std::string_view needle);

// ---------------------------------------------------------------------------
// Content fingerprinting (FNV-1a 64-bit, hex-encoded).

class Fnv1a {
 public:
  void update(std::string_view bytes);
  void update_u64(uint64_t v);
  uint64_t digest() const { return h_; }
  std::string hex() const;

 private:
  uint64_t h_ = 0xcbf29ce484222325ull;
};

// ---------------------------------------------------------------------------
// Indexed parallel runner. Executes fn(0..n-1) on up to `workers` threads.
// Callers make jobs independent (derived seeds, slot-indexed outputs) so the
// outcome is schedule-independent.
void run_indexed(size_t n, size_t workers, const std::function<void(size_t)>& fn);

}  // namespace wifiloc
