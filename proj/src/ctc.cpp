#include "slimipl/ctc.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <map>

namespace slimipl::ctc {

namespace {

constexpr double kNegInf = -std::numeric_limits<double>::infinity();

double log_add(double a, double b) {
  if (a == kNegInf) {
    return b;
  }
  if (b == kNegInf) {
    return a;
  }
  const double hi = std::max(a, b);
  return hi + std::log1p(std::exp(std::min(a, b) - hi));
}

double row_logsumexp(const Matrix& m, Eigen::Index row) {
  const double hi = m.row(row).maxCoeff();
  if (!std::isfinite(hi)) {
    return hi;
  }
  return hi + std::log((m.row(row).array() - hi).exp().sum());
}

}  // namespace

LogPosteriors::LogPosteriors(Matrix values) : values_(std::move(values)) {
  if (values_.rows() < 1 || values_.cols() < 2) {
    throw Error(ErrorCode::kInvalidInput, "log-posteriors need T >= 1 and V >= 1");
  }
}

LogPosteriors LogPosteriors::from_logits(const Matrix& logits) {
  Matrix out(logits.rows(), logits.cols());
  for (Eigen::Index t = 0; t < logits.rows(); ++t) {
    out.row(t) = logits.row(t).array() - row_logsumexp(logits, t);
  }
  return LogPosteriors(std::move(out));
}

double LogPosteriors::max_normalization_error() const {
  double worst = 0.0;
  for (Eigen::Index t = 0; t < values_.rows(); ++t) {
    worst = std::max(worst, std::abs(row_logsumexp(values_, t)));
  }
  return worst;
}

int min_frames(std::span<const int> target) {
  int needed = static_cast<int>(target.size());
  for (std::size_t i = 1; i < target.size(); ++i) {
    if (target[i] == target[i - 1]) {
      ++needed;
    }
  }
  return needed;
}

LossResult ctc_loss(const LogPosteriors& lp, std::span<const int> target) {
  const Matrix& y = lp.values();
  const int frames = lp.frames();
  const int blank = lp.blank();

  LossResult result;
  result.grad = Matrix::Zero(y.rows(), y.cols());
  for (int token : target) {
    if (token < 0 || token >= blank) {
      throw Error(ErrorCode::kInvalidInput, "target token out of range");
    }
  }
  if (frames < min_frames(target)) {
    result.loss = std::numeric_limits<double>::infinity();
    result.status = LossStatus::kInfeasibleAlignment;
    return result;
  }

  // Blank-interleaved target: b t0 b t1 ... b
  const int states = 2 * static_cast<int>(target.size()) + 1;
  std::vector<int> label(states, blank);
  for (std::size_t i = 0; i < target.size(); ++i) {
    label[2 * i + 1] = target[i];
  }
  auto can_skip = [&](int s) { return s >= 2 && label[s] != blank && label[s] != label[s - 2]; };

  Matrix alpha = Matrix::Constant(frames, states, kNegInf);
  Matrix beta = Matrix::Constant(frames, states, kNegInf);

  alpha(0, 0) = y(0, blank);
  if (states > 1) {
    alpha(0, 1) = y(0, label[1]);
  }
  for (int t = 1; t < frames; ++t) {
    // States unreachable from the end in the remaining frames stay at -inf in
    // beta, so no explicit band pruning is needed here.
    for (int s = 0; s < states; ++s) {
      double acc = alpha(t - 1, s);
      if (s >= 1) {
        acc = log_add(acc, alpha(t - 1, s - 1));
      }
      if (can_skip(s)) {
        acc = log_add(acc, alpha(t - 1, s - 2));
      }
      alpha(t, s) = acc == kNegInf ? kNegInf : acc + y(t, label[s]);
    }
  }

  beta(frames - 1, states - 1) = 0.0;
  if (states > 1) {
    beta(frames - 1, states - 2) = 0.0;
  }
  for (int t = frames - 2; t >= 0; --t) {
    for (int s = 0; s < states; ++s) {
      double acc = beta(t + 1, s) + y(t + 1, label[s]);
      if (s + 1 < states) {
        acc = log_add(acc, beta(t + 1, s + 1) + y(t + 1, label[s + 1]));
      }
      if (s + 2 < states && can_skip(s + 2)) {
        acc = log_add(acc, beta(t + 1, s + 2) + y(t + 1, label[s + 2]));
      }
      beta(t, s) = acc;
    }
  }

  double log_likelihood = alpha(frames - 1, states - 1);
  if (states > 1) {
    log_likelihood = log_add(log_likelihood, alpha(frames - 1, states - 2));
  }
  result.loss = -log_likelihood;

  for (int t = 0; t < frames; ++t) {
    for (int s = 0; s < states; ++s) {
      const double occ = alpha(t, s) + beta(t, s);
      if (occ != kNegInf) {
        result.grad(t, label[s]) -= std::exp(occ - log_likelihood);
      }
    }
  }
  return result;
}

Matrix logit_gradient(const LogPosteriors& lp, const Matrix& grad) {
  const Matrix probs = lp.values().array().exp().matrix();
  Matrix out = grad;
  for (Eigen::Index t = 0; t < grad.rows(); ++t) {
    out.row(t) -= probs.row(t) * grad.row(t).sum();
  }
  return out;
}

TokenSeq collapse(std::span<const int> frame_labels, int blank) {
  TokenSeq out;
  int prev = -1;
  for (int label : frame_labels) {
    if (label != prev && label != blank) {
      out.push_back(label);
    }
    prev = label;
  }
  return out;
}

TokenSeq greedy_decode(const LogPosteriors& lp) {
  const Matrix& y = lp.values();
  std::vector<int> best(y.rows());
  for (Eigen::Index t = 0; t < y.rows(); ++t) {
    // maxCoeff returns the first maximal index, i.e. lowest-index tie break.
    Eigen::Index arg = 0;
    y.row(t).maxCoeff(&arg);
    best[t] = static_cast<int>(arg);
  }
  return collapse(best, lp.blank());
}

void DecoderConfig::validate() const {
  if (beam_size < 1) {
    throw Error(ErrorCode::kInvalidConfig, "beam_size must be >= 1");
  }
  if (lm_weight < 0.0) {
    throw Error(ErrorCode::kInvalidConfig, "lm_weight must be >= 0");
  }
  if (lm == nullptr && lm_weight != 0.0) {
    throw Error(ErrorCode::kInvalidConfig, "lm_weight requires a language model");
  }
}

namespace {

struct Prefix {
  double blank_end = kNegInf;
  double label_end = kNegInf;
  double lm = 0.0;

  double acoustic() const { return log_add(blank_end, label_end); }
};

}  // namespace

Hypothesis beam_search(const LogPosteriors& lp, const DecoderConfig& cfg) {
  cfg.validate();
  const Matrix& y = lp.values();
  const int vocab = lp.vocab_size();
  const int blank = lp.blank();
  const bool use_lm = cfg.lm != nullptr && cfg.lm_weight != 0.0;
  if (cfg.lm != nullptr && cfg.lm->num_tokens() != vocab) {
    throw Error(ErrorCode::kInvalidConfig, "language model vocabulary does not match decoder");
  }

  auto partial_score = [&](const TokenSeq& tokens, const Prefix& p) {
    return p.acoustic() + cfg.lm_weight * p.lm + cfg.length_bonus * static_cast<double>(tokens.size());
  };

  std::map<TokenSeq, Prefix> beam;
  beam[TokenSeq{}].blank_end = 0.0;

  for (int t = 0; t < lp.frames(); ++t) {
    std::map<TokenSeq, Prefix> next;
    for (const auto& [tokens, prefix] : beam) {
      const double total = prefix.acoustic();
      Prefix& stay = next[tokens];
      stay.lm = prefix.lm;
      stay.blank_end = log_add(stay.blank_end, total + y(t, blank));

      const int last = tokens.empty() ? -1 : tokens.back();
      if (last >= 0) {
        stay.label_end = log_add(stay.label_end, prefix.label_end + y(t, last));
      }
      for (int c = 0; c < vocab; ++c) {
        TokenSeq extended = tokens;
        extended.push_back(c);
        auto [it, inserted] = next.try_emplace(std::move(extended));
        if (inserted) {
          it->second.lm = prefix.lm + (use_lm ? cfg.lm->log_prob(tokens, c) : 0.0);
        }
        // A repeat of the last label only extends through a blank-ended path.
        const double from = c == last ? prefix.blank_end : total;
        it->second.label_end = log_add(it->second.label_end, from + y(t, c));
      }
    }

    if (static_cast<int>(next.size()) > cfg.beam_size) {
      std::vector<std::pair<double, const TokenSeq*>> ranked;
      ranked.reserve(next.size());
      for (const auto& [tokens, prefix] : next) {
        ranked.emplace_back(partial_score(tokens, prefix), &tokens);
      }
      // Map iteration order is lexicographic, so stable_sort breaks score ties
      // toward the lexicographically smallest prefix.
      std::stable_sort(ranked.begin(), ranked.end(),
                       [](const auto& a, const auto& b) { return a.first > b.first; });
      std::map<TokenSeq, Prefix> kept;
      for (int i = 0; i < cfg.beam_size; ++i) {
        kept.emplace(*ranked[i].second, next.at(*ranked[i].second));
      }
      beam = std::move(kept);
    } else {
      beam = std::move(next);
    }
  }

  Hypothesis best;
  bool have = false;
  for (const auto& [tokens, prefix] : beam) {
    Hypothesis h;
    h.tokens = tokens;
    h.acoustic = prefix.acoustic();
    h.lm = use_lm ? prefix.lm + cfg.lm->log_prob(tokens, cfg.lm->end_marker()) : 0.0;
    h.score = h.acoustic + cfg.lm_weight * h.lm + cfg.length_bonus * static_cast<double>(tokens.size());
    if (!have || h.score > best.score) {
      best = std::move(h);
      have = true;
    }
  }
  return best;
}

}  // namespace slimipl::ctc
