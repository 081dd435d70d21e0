#include "slimipl/augment.hpp"

#include <algorithm>
#include <cmath>

namespace slimipl::augment {

void AugmentConfig::validate(int feature_dim) const {
  if (num_freq_masks < 0 || num_time_masks < 0 || freq_param < 0 || time_param < 0) {
    throw Error(ErrorCode::kInvalidConfig, "augment counts must be >= 0");
  }
  if (freq_param > feature_dim) {
    throw Error(ErrorCode::kInvalidConfig, "freq_param exceeds feature_dim");
  }
  if (!(max_time_ratio >= 0.0 && max_time_ratio <= 1.0)) {
    throw Error(ErrorCode::kInvalidConfig, "max_time_ratio must be in [0, 1]");
  }
}

Matrix spec_augment(const Matrix& features, const AugmentConfig& cfg, Rng& rng) {
  Matrix out = features;
  const int frames = static_cast<int>(features.rows());
  const int dims = static_cast<int>(features.cols());

  for (int i = 0; i < cfg.num_freq_masks; ++i) {
    const int width = uniform_int(rng, 0, std::min(cfg.freq_param, dims));
    const int start = uniform_int(rng, 0, dims - width);
    out.middleCols(start, width).setConstant(cfg.mask_value);
  }

  const int cap = static_cast<int>(std::floor(cfg.max_time_ratio * frames));
  const int max_width = std::min(cfg.time_param, cap);
  for (int i = 0; i < cfg.num_time_masks; ++i) {
    const int width = uniform_int(rng, 0, max_width);
    const int start = uniform_int(rng, 0, frames - width);
    out.middleRows(start, width).setConstant(cfg.mask_value);
  }
  return out;
}

}  // namespace slimipl::augment
