#include "slimipl/common.hpp"

#include <cmath>
#include <numbers>
#include <sstream>

namespace slimipl {

const char* to_string(ErrorCode code) {
  switch (code) {
    case ErrorCode::kInvalidConfig:
      return "invalid-config";
    case ErrorCode::kInvalidInput:
      return "invalid-input";
    case ErrorCode::kInputTooShort:
      return "input-too-short";
    case ErrorCode::kStaleTape:
      return "stale-tape";
    case ErrorCode::kCacheFull:
      return "cache-full";
    case ErrorCode::kCacheNotReady:
      return "not-ready";
    case ErrorCode::kShapeMismatch:
      return "shape-mismatch";
    case ErrorCode::kVersionMismatch:
      return "version-mismatch";
    case ErrorCode::kIo:
      return "io-error";
    case ErrorCode::kParse:
      return "parse-error";
    case ErrorCode::kMissingReferences:
      return "missing-references";
  }
  return "unknown-error";
}

double standard_normal(Rng& rng) {
  double u1 = uniform_unit(rng);
  while (u1 <= 0.0) {
    u1 = uniform_unit(rng);
  }
  const double u2 = uniform_unit(rng);
  return std::sqrt(-2.0 * std::log(u1)) * std::cos(2.0 * std::numbers::pi * u2);
}

std::uint64_t derive_seed(std::uint64_t base, std::uint64_t tag) {
  std::uint64_t z = base + 0x9e3779b97f4a7c15ULL * (tag + 1);
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
  return z ^ (z >> 31);
}

std::string rng_state(const Rng& rng) {
  std::ostringstream os;
  os << rng;
  return os.str();
}

void set_rng_state(Rng& rng, const std::string& state) {
  std::istringstream is(state);
  is >> rng;
  if (!is) {
    throw Error(ErrorCode::kParse, "corrupt rng state");
  }
}

}  // namespace slimipl
