#pragma once

#include "slimipl/common.hpp"

namespace slimipl::augment {

// SpecAugment-style masking without time warping.
struct AugmentConfig {
  int num_freq_masks = 2;
  int freq_param = 6;
  int num_time_masks = 2;
  int time_param = 10;
  double max_time_ratio = 0.1;
  double mask_value = 0.0;

  void validate(int feature_dim) const;
  bool operator==(const AugmentConfig&) const = default;

  static AugmentConfig none() { return {0, 0, 0, 0, 0.0, 0.0}; }
  // Two frequency masks (F=30), ten time masks (T=50, p=0.1).
  static AugmentConfig librispeech() { return {2, 30, 10, 50, 0.1, 0.0}; }
  // Low-resource variant: twenty time masks with T=25.
  static AugmentConfig librilight_10h() { return {2, 30, 20, 25, 0.1, 0.0}; }
};

// Masks are drawn with inclusive-zero widths and may overlap.
Matrix spec_augment(const Matrix& features, const AugmentConfig& cfg, Rng& rng);

}  // namespace slimipl::augment
