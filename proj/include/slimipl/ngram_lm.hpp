#pragma once

#include <iosfwd>
#include <map>
#include <span>
#include <vector>

#include "slimipl/common.hpp"

namespace slimipl::ctc {

// Additively smoothed token n-gram model. Predicts tokens 0..V-1 and an end
// marker (index V); contexts are padded with a start marker.
class CharNGramLM {
 public:
  static constexpr int kStart = -1;

  using Context = std::vector<int>;

  CharNGramLM(int order, double smoothing, int num_tokens);

  int order() const { return order_; }
  double smoothing() const { return smoothing_; }
  int num_tokens() const { return num_tokens_; }
  // Predicted outcomes: tokens plus the end marker.
  int outcome_count() const { return num_tokens_ + 1; }
  int end_marker() const { return num_tokens_; }

  void add_sentence(std::span<const int> tokens);

  // Context is the full history; only the last order-1 symbols are used.
  double log_prob(std::span<const int> history, int next) const;
  double score(std::span<const int> tokens) const;

  // Last order-1 symbols of the start-padded history.
  Context context_of(std::span<const int> history) const;

  void write(std::ostream& os) const;
  static CharNGramLM read(std::istream& is);

  bool operator==(const CharNGramLM& other) const = default;

 private:
  struct Counts {
    std::map<int, std::int64_t> next;
    std::int64_t total = 0;

    bool operator==(const Counts&) const = default;
  };

  void bump(const Context& ctx, int next, std::int64_t count);

  int order_;
  double smoothing_;
  int num_tokens_;
  // Empty context holds unigram counts; the rest have exactly order-1 symbols.
  std::map<Context, Counts> counts_;
};

CharNGramLM train_ngram_lm(std::span<const TokenSeq> corpus, int order, double smoothing,
                           int num_tokens);

}  // namespace slimipl::ctc
