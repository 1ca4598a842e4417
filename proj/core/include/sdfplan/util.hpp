#pragma once

#include <cstdint>
#include <functional>
#include <string>
#include <vector>

namespace sdfplan {

/// Deterministic RNG with explicit output transforms, so streams do not
/// depend on the standard library's distribution implementations.
/// Per-item streams are derived as Rng(seed, index) to keep results
/// independent of worker count.
class Rng {
 public:
  explicit Rng(uint64_t seed, uint64_t stream = 0);

  uint64_t next_u64();
  /// Uniform in [0, 1).
  double uniform01();
  /// Uniform in [lo, hi).
  double uniform(double lo, double hi);
  /// Uniform integer in [0, n).
  uint64_t uniform_index(uint64_t n);
  /// Standard normal via Box-Muller (consumes two uniforms per pair).
  double normal();
  double normal(double mean, double stddev) { return mean + stddev * normal(); }

 private:
  uint64_t state_[4];
  bool have_cached_normal_ = false;
  double cached_normal_ = 0.0;
};

/// FNV-1a 64-bit digest, used to fingerprint configs and artifacts.
uint64_t fnv1a64(const void* data, size_t n, uint64_t h = 0xcbf29ce484222325ULL);
uint64_t fnv1a64(const std::string& s);
uint64_t digest_file(const std::string& path);

/// Runs fn(i) for i in [0, n) on `workers` threads. Work items must be
/// independent; output ordering is the caller's responsibility (index the
/// results). workers <= 1 runs inline.
void parallel_for(size_t n, int workers, const std::function<void(size_t)>& fn);

/// Monotonic wall-clock seconds.
double now_seconds();

std::string format_seconds(double s);

}  // namespace sdfplan
