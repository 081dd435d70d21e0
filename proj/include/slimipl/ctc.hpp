#pragma once

#include <optional>
#include <span>

#include "slimipl/common.hpp"
#include "slimipl/ngram_lm.hpp"

namespace slimipl::ctc {

// Per-frame log-probabilities over V tokens plus blank. The blank is always the
// last column (index V).
class LogPosteriors {
 public:
  LogPosteriors() = default;
  explicit LogPosteriors(Matrix values);

  // Row-wise log-softmax of unnormalized scores.
  static LogPosteriors from_logits(const Matrix& logits);

  const Matrix& values() const { return values_; }
  int frames() const { return static_cast<int>(values_.rows()); }
  int vocab_size() const { return static_cast<int>(values_.cols()) - 1; }
  int blank() const { return vocab_size(); }

  // Largest |logsumexp(row)| over rows.
  double max_normalization_error() const;

 private:
  Matrix values_;
};

enum class LossStatus { kOk, kInfeasibleAlignment };

struct LossResult {
  double loss = 0.0;
  // d loss / d log-posterior entries, treating every entry as a free variable.
  Matrix grad;
  LossStatus status = LossStatus::kOk;

  bool ok() const { return status == LossStatus::kOk; }
};

// Minimum frame count needed to emit `target`: one frame per token plus one
// separating blank per adjacent repeat.
int min_frames(std::span<const int> target);

LossResult ctc_loss(const LogPosteriors& lp, std::span<const int> target);

// Converts a log-posterior gradient to the gradient with respect to the logits
// that produced lp through log-softmax.
Matrix logit_gradient(const LogPosteriors& lp, const Matrix& grad);

// Merge adjacent repeats, then drop blanks.
TokenSeq collapse(std::span<const int> frame_labels, int blank);

TokenSeq greedy_decode(const LogPosteriors& lp);

struct DecoderConfig {
  int beam_size = 16;
  double lm_weight = 0.0;
  double length_bonus = 0.0;
  const CharNGramLM* lm = nullptr;

  void validate() const;
};

struct Hypothesis {
  TokenSeq tokens;
  double acoustic = 0.0;  // log p(tokens | x), summed over alignments
  double lm = 0.0;        // log p_lm(tokens) including the end marker
  double score = 0.0;     // acoustic + lm_weight * lm + length_bonus * |tokens|
};

// Prefix beam search maximizing acoustic + lm_weight * lm + length_bonus * len.
Hypothesis beam_search(const LogPosteriors& lp, const DecoderConfig& cfg);

inline TokenSeq beam_search_decode(const LogPosteriors& lp, const DecoderConfig& cfg) {
  return beam_search(lp, cfg).tokens;
}

}  // namespace slimipl::ctc
