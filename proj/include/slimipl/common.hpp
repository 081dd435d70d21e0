#pragma once

#include <cstdint>
#include <random>
#include <stdexcept>
#include <string>
#include <vector>

#include <Eigen/Dense>

namespace slimipl {

using Matrix = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
using RowVector = Eigen::Matrix<double, 1, Eigen::Dynamic>;

// Token indices in [0, V). The CTC blank is never stored in a TokenSeq.
using TokenSeq = std::vector<int>;

using Rng = std::mt19937_64;

enum class ErrorCode {
  kInvalidConfig,
  kInvalidInput,
  kInputTooShort,
  kStaleTape,
  kCacheFull,
  kCacheNotReady,
  kShapeMismatch,
  kVersionMismatch,
  kIo,
  kParse,
  kMissingReferences,
};

const char* to_string(ErrorCode code);

class Error : public std::runtime_error {
 public:
  Error(ErrorCode code, const std::string& what)
      : std::runtime_error(std::string(to_string(code)) + ": " + what), code_(code) {}

  ErrorCode code() const { return code_; }

 private:
  ErrorCode code_;
};

// Unbiased integer in [0, n) using rejection on the raw 64-bit stream, so the
// draw sequence does not depend on the standard library's distributions.
inline std::uint64_t uniform_index(Rng& rng, std::uint64_t n) {
  if (n <= 1) {
    return 0;
  }
  const std::uint64_t limit = Rng::max() - (Rng::max() % n);
  std::uint64_t x = rng();
  while (x >= limit) {
    x = rng();
  }
  return x % n;
}

// Uniform double in [0, 1) with 53 random bits.
inline double uniform_unit(Rng& rng) {
  return static_cast<double>(rng() >> 11) * 0x1.0p-53;
}

// Inclusive integer range [lo, hi].
inline int uniform_int(Rng& rng, int lo, int hi) {
  return lo + static_cast<int>(uniform_index(rng, static_cast<std::uint64_t>(hi - lo) + 1));
}

// Box-Muller standard normal; stateless so RNG state alone determines the stream.
double standard_normal(Rng& rng);

// Derives an independent seed from a base seed and a stream tag (splitmix64).
std::uint64_t derive_seed(std::uint64_t base, std::uint64_t tag);

std::string rng_state(const Rng& rng);
void set_rng_state(Rng& rng, const std::string& state);

}  // namespace slimipl
