#include "slimipl/ngram_lm.hpp"

#include <charconv>
#include <cmath>
#include <istream>
#include <ostream>
#include <sstream>
#include <string>

namespace slimipl::ctc {

namespace {

std::string format_double(double v) {
  char buf[64];
  auto res = std::to_chars(buf, buf + sizeof(buf), v);
  return std::string(buf, res.ptr);
}

std::vector<std::string> split_tabs(const std::string& line) {
  std::vector<std::string> fields;
  std::size_t start = 0;
  while (true) {
    const auto pos = line.find('\t', start);
    fields.push_back(line.substr(start, pos - start));
    if (pos == std::string::npos) {
      break;
    }
    start = pos + 1;
  }
  return fields;
}

}  // namespace

CharNGramLM::CharNGramLM(int order, double smoothing, int num_tokens)
    : order_(order), smoothing_(smoothing), num_tokens_(num_tokens) {
  if (order < 1) {
    throw Error(ErrorCode::kInvalidInput, "n-gram order must be >= 1");
  }
  if (!(smoothing > 0.0) || !std::isfinite(smoothing)) {
    throw Error(ErrorCode::kInvalidInput, "smoothing must be a positive finite value");
  }
  if (num_tokens < 1) {
    throw Error(ErrorCode::kInvalidInput, "vocabulary must be nonempty");
  }
}

CharNGramLM::Context CharNGramLM::context_of(std::span<const int> history) const {
  Context ctx(order_ - 1, kStart);
  const int n = static_cast<int>(history.size());
  for (int i = 0; i < order_ - 1; ++i) {
    const int src = n - (order_ - 1) + i;
    if (src >= 0) {
      ctx[i] = history[src];
    }
  }
  return ctx;
}

void CharNGramLM::bump(const Context& ctx, int next, std::int64_t count) {
  Counts& c = counts_[ctx];
  c.next[next] += count;
  c.total += count;
}

void CharNGramLM::add_sentence(std::span<const int> tokens) {
  for (int t : tokens) {
    if (t < 0 || t >= num_tokens_) {
      throw Error(ErrorCode::kInvalidInput, "token out of range for language model");
    }
  }
  for (std::size_t i = 0; i <= tokens.size(); ++i) {
    const int next = i < tokens.size() ? tokens[i] : end_marker();
    bump(Context{}, next, 1);
    if (order_ > 1) {
      bump(context_of(tokens.first(i)), next, 1);
    }
  }
}

double CharNGramLM::log_prob(std::span<const int> history, int next) const {
  const double k = static_cast<double>(outcome_count());
  auto smoothed = [&](const Counts* c) {
    if (c == nullptr) {
      return std::log(1.0 / k);
    }
    auto it = c->next.find(next);
    const double hits = it == c->next.end() ? 0.0 : static_cast<double>(it->second);
    return std::log((hits + smoothing_) / (static_cast<double>(c->total) + smoothing_ * k));
  };
  auto lookup = [&](const Context& ctx) -> const Counts* {
    auto it = counts_.find(ctx);
    return it == counts_.end() || it->second.total == 0 ? nullptr : &it->second;
  };

  if (order_ > 1) {
    if (const Counts* c = lookup(context_of(history))) {
      return smoothed(c);
    }
  }
  return smoothed(lookup(Context{}));
}

double CharNGramLM::score(std::span<const int> tokens) const {
  double total = 0.0;
  for (std::size_t i = 0; i < tokens.size(); ++i) {
    total += log_prob(tokens.first(i), tokens[i]);
  }
  return total + log_prob(tokens, end_marker());
}

void CharNGramLM::write(std::ostream& os) const {
  os << "ngram\t" << order_ << '\t' << format_double(smoothing_) << '\t' << outcome_count() << '\n';
  for (const auto& [ctx, c] : counts_) {
    std::string ctx_text;
    for (std::size_t i = 0; i < ctx.size(); ++i) {
      if (i > 0) {
        ctx_text += ' ';
      }
      ctx_text += ctx[i] == kStart ? std::string("<s>") : std::to_string(ctx[i]);
    }
    for (const auto& [next, count] : c.next) {
      os << ctx_text << '\t' << next << '\t' << count << '\n';
    }
  }
}

CharNGramLM CharNGramLM::read(std::istream& is) {
  std::string line;
  if (!std::getline(is, line)) {
    throw Error(ErrorCode::kParse, "missing n-gram header");
  }
  const auto header = split_tabs(line);
  if (header.size() != 4 || header[0] != "ngram") {
    throw Error(ErrorCode::kParse, "malformed n-gram header");
  }
  double smoothing = 0.0;
  std::from_chars(header[2].data(), header[2].data() + header[2].size(), smoothing);
  CharNGramLM lm(std::stoi(header[1]), smoothing, std::stoi(header[3]) - 1);

  while (std::getline(is, line)) {
    if (line.empty()) {
      continue;
    }
    const auto fields = split_tabs(line);
    if (fields.size() != 3) {
      throw Error(ErrorCode::kParse, "malformed n-gram line: " + line);
    }
    Context ctx;
    std::istringstream cs(fields[0]);
    std::string sym;
    while (cs >> sym) {
      ctx.push_back(sym == "<s>" ? kStart : std::stoi(sym));
    }
    if (!ctx.empty() && static_cast<int>(ctx.size()) != lm.order_ - 1) {
      throw Error(ErrorCode::kParse, "context length does not match order");
    }
    lm.bump(ctx, std::stoi(fields[1]), std::stoll(fields[2]));
  }
  return lm;
}

CharNGramLM train_ngram_lm(std::span<const TokenSeq> corpus, int order, double smoothing,
                           int num_tokens) {
  if (corpus.empty()) {
    throw Error(ErrorCode::kInvalidInput, "language model corpus is empty");
  }
  CharNGramLM lm(order, smoothing, num_tokens);
  for (const auto& sentence : corpus) {
    lm.add_sentence(sentence);
  }
  return lm;
}

}  // namespace slimipl::ctc
