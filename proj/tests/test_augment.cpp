#include <cmath>

#include "doctest.h"
#include "slimipl/augment.hpp"

using namespace slimipl;
using augment::AugmentConfig;

namespace {

Matrix ones(int T, int F) { return Matrix::Ones(T, F); }

// Probability that one mask of width U{0..W} and start U{0..n-w} covers index c.
double cover_prob(int n, int W, int c) {
  double p = 0.0;
  for (int w = 0; w <= W; ++w) {
    const int starts = n - w + 1;
    int hits = 0;
    for (int s = 0; s < starts; ++s) hits += (c >= s && c < s + w);
    p += static_cast<double>(hits) / starts / (W + 1);
  }
  return p;
}

}  // namespace

TEST_CASE("no masks is the identity") {
  Rng rng(1);
  const Matrix x = Matrix::Random(30, 8);
  CHECK(augment::spec_augment(x, AugmentConfig::none(), rng) == x);
}

TEST_CASE("freq_param equal to the band can blank every bin") {
  AugmentConfig cfg{1, 8, 0, 0, 0.0, 0.0};
  Rng rng(2);
  bool full = false;
  for (int i = 0; i < 2000 && !full; ++i) {
    full = augment::spec_augment(ones(10, 8), cfg, rng).cwiseAbs().maxCoeff() == 0.0;
  }
  CHECK(full);
}

TEST_CASE("time masks respect the ratio cap") {
  AugmentConfig cfg{0, 0, 1, 50, 0.1, 0.0};
  Rng rng(3);
  for (int i = 0; i < 500; ++i) {
    const Matrix out = augment::spec_augment(ones(40, 4), cfg, rng);
    int masked_rows = 0;
    for (int t = 0; t < 40; ++t) masked_rows += out.row(t).cwiseAbs().maxCoeff() == 0.0;
    CHECK(masked_rows <= 4);
  }
}

TEST_CASE("masked fraction matches the exact expectation") {
  const int T = 50, F = 12;
  AugmentConfig cfg{2, 5, 3, 8, 0.2, 0.0};
  std::vector<double> pf(F), pt(T);
  const int tw = std::min(cfg.time_param, static_cast<int>(std::floor(cfg.max_time_ratio * T)));
  for (int c = 0; c < F; ++c) pf[c] = 1 - std::pow(1 - cover_prob(F, cfg.freq_param, c), cfg.num_freq_masks);
  for (int t = 0; t < T; ++t) pt[t] = 1 - std::pow(1 - cover_prob(T, tw, t), cfg.num_time_masks);
  double expected = 0.0;
  for (int t = 0; t < T; ++t)
    for (int c = 0; c < F; ++c) expected += 1 - (1 - pt[t]) * (1 - pf[c]);
  expected /= T * F;

  Rng rng(4);
  const int trials = 4000;
  std::vector<double> fractions;
  double sum = 0.0, sq = 0.0;
  for (int i = 0; i < trials; ++i) {
    const Matrix out = augment::spec_augment(ones(T, F), cfg, rng);
    const double frac = 1.0 - out.sum() / (T * F);
    sum += frac;
    sq += frac * frac;
  }
  const double mean = sum / trials;
  const double sd = std::sqrt(sq / trials - mean * mean);
  CHECK(std::abs(mean - expected) <= 4 * sd / std::sqrt(trials));
}

TEST_CASE("mask value is written and other cells are untouched") {
  AugmentConfig cfg{2, 4, 2, 5, 0.5, -7.0};
  Rng rng(5);
  const Matrix x = Matrix::Constant(20, 10, 3.0);
  const Matrix out = augment::spec_augment(x, cfg, rng);
  for (Eigen::Index i = 0; i < out.size(); ++i) CHECK((out.data()[i] == 3.0 || out.data()[i] == -7.0));
}

TEST_CASE("same rng state, same masks") {
  AugmentConfig cfg;
  Rng a(6), b(6);
  const Matrix x = Matrix::Random(40, 16);
  CHECK(augment::spec_augment(x, cfg, a) == augment::spec_augment(x, cfg, b));
}

TEST_CASE("validation and presets") {
  CHECK_THROWS_AS((AugmentConfig{1, 20, 0, 0, 0.1, 0.0}).validate(16), Error);
  CHECK_THROWS_AS((AugmentConfig{-1, 2, 0, 0, 0.1, 0.0}).validate(16), Error);
  CHECK_THROWS_AS((AugmentConfig{1, 2, 0, 0, 1.5, 0.0}).validate(16), Error);
  const auto ls = AugmentConfig::librispeech();
  CHECK(ls.num_freq_masks == 2);
  CHECK(ls.freq_param == 30);
  CHECK(ls.num_time_masks == 10);
  CHECK(ls.time_param == 50);
  CHECK(ls.max_time_ratio == 0.1);
  const auto ll = AugmentConfig::librilight_10h();
  CHECK(ll.num_time_masks == 20);
  CHECK(ll.time_param == 25);
}
