// Slow reference implementations used to check the library.
#pragma once

#include <cmath>
#include <limits>
#include <map>
#include <span>
#include <vector>

#include "slimipl/common.hpp"
#include "slimipl/ctc.hpp"

namespace oracle {

using slimipl::Matrix;
using slimipl::TokenSeq;

inline double log_add(double a, double b) {
  if (a == -std::numeric_limits<double>::infinity()) return b;
  if (b == -std::numeric_limits<double>::infinity()) return a;
  const double m = std::max(a, b);
  return m + std::log(std::exp(a - m) + std::exp(b - m));
}

// Calls fn(path, log_prob) for every frame labeling of lp.
template <typename Fn>
void for_each_path(const Matrix& lp, Fn fn) {
  const int T = static_cast<int>(lp.rows());
  const int K = static_cast<int>(lp.cols());
  std::vector<int> path(T, 0);
  while (true) {
    double lpsum = 0.0;
    for (int t = 0; t < T; ++t) lpsum += lp(t, path[t]);
    fn(path, lpsum);
    int t = T - 1;
    while (t >= 0 && ++path[t] == K) path[t--] = 0;
    if (t < 0) break;
  }
}

inline TokenSeq collapse(const std::vector<int>& path, int blank) {
  TokenSeq out;
  int prev = -1;
  for (int s : path) {
    if (s != prev && s != blank) out.push_back(s);
    prev = s;
  }
  return out;
}

// -log sum over every path that collapses to target.
inline double ctc_nll(const Matrix& lp, const TokenSeq& target) {
  const int blank = static_cast<int>(lp.cols()) - 1;
  double total = -std::numeric_limits<double>::infinity();
  for_each_path(lp, [&](const std::vector<int>& path, double l) {
    if (collapse(path, blank) == target) total = log_add(total, l);
  });
  return -total;
}

// log p(y|x) of every labeling with nonzero mass.
inline std::map<TokenSeq, double> labeling_scores(const Matrix& lp) {
  const int blank = static_cast<int>(lp.cols()) - 1;
  std::map<TokenSeq, double> scores;
  for_each_path(lp, [&](const std::vector<int>& path, double l) {
    auto [it, fresh] = scores.try_emplace(collapse(path, blank), l);
    if (!fresh) it->second = log_add(it->second, l);
  });
  return scores;
}

inline TokenSeq best_labeling(const Matrix& lp) {
  const auto scores = labeling_scores(lp);
  auto best = scores.begin();
  for (auto it = scores.begin(); it != scores.end(); ++it) {
    if (it->second > best->second) best = it;
  }
  return best->first;
}

inline slimipl::ctc::LogPosteriors random_lp(slimipl::Rng& rng, int T, int V, double scale = 2.0) {
  Matrix logits(T, V + 1);
  for (Eigen::Index i = 0; i < logits.size(); ++i) {
    logits.data()[i] = scale * slimipl::standard_normal(rng);
  }
  return slimipl::ctc::LogPosteriors::from_logits(logits);
}

inline TokenSeq random_tokens(slimipl::Rng& rng, int max_len, int V) {
  TokenSeq y(slimipl::uniform_int(rng, 0, max_len));
  for (int& t : y) t = slimipl::uniform_int(rng, 0, V - 1);
  return y;
}

// Plain recursive Levenshtein distance.
inline std::size_t edit_distance(std::span<const int> a, std::span<const int> b) {
  if (a.empty()) return b.size();
  if (b.empty()) return a.size();
  const std::size_t sub = edit_distance(a.subspan(1), b.subspan(1)) + (a[0] != b[0] ? 1 : 0);
  const std::size_t del = edit_distance(a.subspan(1), b) + 1;
  const std::size_t ins = edit_distance(a, b.subspan(1)) + 1;
  return std::min({sub, del, ins});
}

}  // namespace oracle
