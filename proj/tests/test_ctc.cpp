#include <cmath>

#include "doctest.h"
#include "oracles.hpp"
#include "slimipl/ctc.hpp"
#include "slimipl/ngram_lm.hpp"

using namespace slimipl;
using ctc::LogPosteriors;

namespace {

LogPosteriors two_frame_lp(double b, double a) {
  Matrix m(2, 2);
  m << a, b, a, b;
  return LogPosteriors(m);
}

}  // namespace

TEST_CASE("empty target takes the all-blank path") {
  const auto lp = two_frame_lp(std::log(0.9), std::log(0.1));
  const auto r = ctc::ctc_loss(lp, TokenSeq{});
  CHECK(r.ok());
  CHECK(r.loss == doctest::Approx(-2.0 * std::log(0.9)).epsilon(1e-12));
  CHECK(r.loss == doctest::Approx(0.2107).epsilon(1e-3));
}

TEST_CASE("single token over two frames sums three alignments") {
  // a a, a b, b a with p(a)=0.1, p(b)=0.9
  const auto lp = two_frame_lp(std::log(0.9), std::log(0.1));
  const auto r = ctc::ctc_loss(lp, TokenSeq{0});
  CHECK(r.loss == doctest::Approx(-std::log(0.01 + 0.09 + 0.09)).epsilon(1e-12));
}

TEST_CASE("loss matches path enumeration") {
  Rng rng(11);
  int checked = 0;
  for (int i = 0; i < 200; ++i) {
    const int T = uniform_int(rng, 1, 7);
    const int V = uniform_int(rng, 1, 3);
    const auto lp = oracle::random_lp(rng, T, V);
    const auto y = oracle::random_tokens(rng, 3, V);
    const auto r = ctc::ctc_loss(lp, y);
    const double ref = oracle::ctc_nll(lp.values(), y);
    if (std::isinf(ref)) {
      CHECK_FALSE(r.ok());
      CHECK(std::isinf(r.loss));
    } else {
      REQUIRE(r.ok());
      CHECK(std::abs(r.loss - ref) <= 1e-9);
      ++checked;
    }
  }
  CHECK(checked > 100);
}

TEST_CASE("infeasible alignment") {
  Rng rng(3);
  const auto lp = oracle::random_lp(rng, 3, 2);
  // a a needs a blank between the repeats: 3 frames minimum, so a a a needs 5
  const TokenSeq y{0, 0, 0};
  CHECK(ctc::min_frames(y) == 5);
  const auto r = ctc::ctc_loss(lp, y);
  CHECK(r.status == ctc::LossStatus::kInfeasibleAlignment);
  CHECK(std::isinf(r.loss));
  CHECK(r.loss > 0);
  CHECK(r.grad.cwiseAbs().maxCoeff() == 0.0);
}

TEST_CASE("out of range token is rejected") {
  Rng rng(3);
  const auto lp = oracle::random_lp(rng, 4, 2);
  CHECK_THROWS_AS(ctc::ctc_loss(lp, TokenSeq{2}), Error);
  CHECK_THROWS_AS(ctc::ctc_loss(lp, TokenSeq{-1}), Error);
}

TEST_CASE("occupancy rows sum to one") {
  Rng rng(5);
  for (int i = 0; i < 20; ++i) {
    const auto lp = oracle::random_lp(rng, 12, 4);
    const auto r = ctc::ctc_loss(lp, TokenSeq{1, 2, 2, 0});
    REQUIRE(r.ok());
    for (int t = 0; t < lp.frames(); ++t) {
      CHECK(-r.grad.row(t).sum() == doctest::Approx(1.0).epsilon(1e-9));
    }
  }
}

TEST_CASE("logit gradient matches central differences") {
  Rng rng(7);
  const double eps = 1e-4;
  for (int i = 0; i < 20; ++i) {
    const int T = uniform_int(rng, 4, 10);
    const int V = uniform_int(rng, 2, 4);
    Matrix logits(T, V + 1);
    for (Eigen::Index k = 0; k < logits.size(); ++k) logits.data()[k] = standard_normal(rng);
    TokenSeq y = oracle::random_tokens(rng, 3, V);
    const auto lp = LogPosteriors::from_logits(logits);
    const auto r = ctc::ctc_loss(lp, y);
    REQUIRE(r.ok());
    const Matrix g = ctc::logit_gradient(lp, r.grad);
    double worst = 0.0;
    for (Eigen::Index k = 0; k < logits.size(); ++k) {
      Matrix up = logits, down = logits;
      up.data()[k] += eps;
      down.data()[k] -= eps;
      const double fd = (ctc::ctc_loss(LogPosteriors::from_logits(up), y).loss -
                         ctc::ctc_loss(LogPosteriors::from_logits(down), y).loss) /
                        (2 * eps);
      const double denom = std::max({std::abs(fd), std::abs(g.data()[k]), 1e-6});
      worst = std::max(worst, std::abs(fd - g.data()[k]) / denom);
    }
    CHECK(worst <= 1e-3);
  }
}

TEST_CASE("from_logits rows are normalized") {
  Rng rng(9);
  const auto lp = oracle::random_lp(rng, 30, 7, 20.0);
  CHECK(lp.max_normalization_error() <= 1e-12);
  CHECK(lp.blank() == 7);
}

TEST_CASE("collapse and greedy decode") {
  const int blank = 3;
  CHECK(ctc::collapse(std::vector<int>{0, 0, 3, 0, 1, 1, 3}, blank) == TokenSeq{0, 0, 1});
  CHECK(ctc::collapse(std::vector<int>{3, 3, 3}, blank).empty());
  CHECK(ctc::collapse(std::vector<int>{2, 2, 2}, blank) == TokenSeq{2});

  Matrix m = Matrix::Constant(4, 3, std::log(0.1));
  // frame argmax: 0, blank, blank, 1
  m(0, 0) = std::log(0.8);
  m(1, 2) = std::log(0.8);
  m(2, 2) = std::log(0.8);
  m(3, 1) = std::log(0.8);
  CHECK(ctc::greedy_decode(LogPosteriors(m)) == TokenSeq{0, 1});

  Matrix all_blank = Matrix::Constant(3, 3, std::log(0.1));
  all_blank.col(2).setConstant(std::log(0.8));
  CHECK(ctc::greedy_decode(LogPosteriors(all_blank)).empty());

  // ties go to the lowest index
  Matrix tie = Matrix::Constant(1, 3, std::log(1.0 / 3));
  CHECK(ctc::greedy_decode(LogPosteriors(tie)) == TokenSeq{0});
}

TEST_CASE("greedy output properties") {
  Rng rng(13);
  for (int i = 0; i < 300; ++i) {
    const int V = uniform_int(rng, 1, 5);
    const auto lp = oracle::random_lp(rng, uniform_int(rng, 1, 15), V);
    const auto y = ctc::greedy_decode(lp);
    for (int t : y) CHECK(t != lp.blank());
    // collapse is idempotent on its own output when no repeats remain
    std::vector<int> frames(y.begin(), y.end());
    const auto again = ctc::collapse(frames, lp.blank());
    bool has_repeat = false;
    for (std::size_t k = 1; k < y.size(); ++k) has_repeat |= y[k] == y[k - 1];
    if (!has_repeat) CHECK(again == y);
    if (ctc::min_frames(y) <= lp.frames()) CHECK(std::isfinite(ctc::ctc_loss(lp, y).loss));
  }
}

TEST_CASE("beam search with a huge beam is the exact argmax") {
  Rng rng(17);
  ctc::DecoderConfig cfg;
  cfg.beam_size = 10000;
  for (int i = 0; i < 100; ++i) {
    const auto lp = oracle::random_lp(rng, uniform_int(rng, 1, 5), uniform_int(rng, 1, 3));
    const auto hyp = ctc::beam_search(lp, cfg);
    const auto best = oracle::best_labeling(lp.values());
    CHECK(hyp.tokens == best);
    CHECK(hyp.acoustic == doctest::Approx(-oracle::ctc_nll(lp.values(), best)).epsilon(1e-9));
  }
}

TEST_CASE("single frame decodes to the best token or nothing") {
  Matrix m(1, 3);
  m << std::log(0.2), std::log(0.5), std::log(0.3);
  ctc::DecoderConfig cfg;
  CHECK(ctc::beam_search_decode(LogPosteriors(m), cfg) == TokenSeq{1});
  m << std::log(0.2), std::log(0.3), std::log(0.5);
  CHECK(ctc::beam_search_decode(LogPosteriors(m), cfg).empty());
}

TEST_CASE("beam of one never beats the exact search") {
  Rng rng(19);
  ctc::DecoderConfig narrow;
  narrow.beam_size = 1;
  ctc::DecoderConfig wide;
  wide.beam_size = 10000;
  for (int i = 0; i < 50; ++i) {
    const auto lp = oracle::random_lp(rng, 5, 3);
    CHECK(ctc::beam_search(lp, narrow).score <= ctc::beam_search(lp, wide).score + 1e-12);
  }
}

TEST_CASE("length bonus and LM weight move along the Lagrangian frontier") {
  Rng rng(23);
  std::vector<TokenSeq> corpus;
  for (int i = 0; i < 50; ++i) corpus.push_back(oracle::random_tokens(rng, 4, 3));
  const auto lm = ctc::train_ngram_lm(corpus, 2, 0.5, 3);
  for (int i = 0; i < 40; ++i) {
    const auto lp = oracle::random_lp(rng, 5, 3);
    ctc::DecoderConfig cfg;
    cfg.beam_size = 10000;
    cfg.lm = &lm;
    double prev_acoustic = std::numeric_limits<double>::infinity();
    for (double alpha : {0.0, 0.5, 1.0, 2.0, 4.0}) {
      cfg.lm_weight = alpha;
      const auto h = ctc::beam_search(lp, cfg);
      CHECK(h.acoustic <= prev_acoustic + 1e-9);
      CHECK(h.score == doctest::Approx(h.acoustic + alpha * h.lm).epsilon(1e-12));
      prev_acoustic = h.acoustic;
    }
    cfg.lm_weight = 0.0;
    std::size_t prev_len = 0;
    for (double beta : {-2.0, 0.0, 1.0, 3.0}) {
      cfg.length_bonus = beta;
      const auto h = ctc::beam_search(lp, cfg);
      CHECK(h.tokens.size() >= prev_len);
      prev_len = h.tokens.size();
    }
  }
}

TEST_CASE("decoder config validation") {
  Rng rng(29);
  const auto lp = oracle::random_lp(rng, 3, 2);
  ctc::DecoderConfig cfg;
  cfg.beam_size = 0;
  CHECK_THROWS_AS(ctc::beam_search(lp, cfg), Error);
  cfg.beam_size = 4;
  cfg.lm_weight = -1.0;
  CHECK_THROWS_AS(ctc::beam_search(lp, cfg), Error);
  cfg.lm_weight = 1.0;
  CHECK_THROWS_AS(ctc::beam_search(lp, cfg), Error);
}
