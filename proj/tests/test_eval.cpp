#include <algorithm>
#include <filesystem>
#include <fstream>

#include "doctest.h"
#include "oracles.hpp"
#include "slimipl/data.hpp"
#include "slimipl/eval.hpp"

using namespace slimipl;
using namespace slimipl::eval;

TEST_CASE("edit distance examples") {
  CHECK(edit_distance(TokenSeq{}, TokenSeq{}) == 0);
  CHECK(edit_distance(TokenSeq{1, 2, 3}, TokenSeq{}) == 3);
  CHECK(edit_distance(TokenSeq{}, TokenSeq{4, 4}) == 2);
  CHECK(edit_distance(TokenSeq{1, 2, 3}, TokenSeq{1, 3}) == 1);
  CHECK(edit_distance(TokenSeq{1, 2, 3}, TokenSeq{3, 2, 1}) == 2);
  // kitten / sitting
  CHECK(edit_distance(TokenSeq{10, 8, 19, 19, 4, 13}, TokenSeq{18, 8, 19, 19, 8, 13, 6}) == 3);
}

TEST_CASE("edit distance agrees with the recursive definition") {
  Rng rng(1);
  for (int i = 0; i < 300; ++i) {
    const auto a = oracle::random_tokens(rng, 6, 3);
    const auto b = oracle::random_tokens(rng, 6, 3);
    CHECK(edit_distance(a, b) == oracle::edit_distance(a, b));
  }
}

TEST_CASE("edit distance is a metric") {
  Rng rng(2);
  for (int i = 0; i < 500; ++i) {
    const auto a = oracle::random_tokens(rng, 8, 3);
    const auto b = oracle::random_tokens(rng, 8, 3);
    const auto c = oracle::random_tokens(rng, 8, 3);
    CHECK(edit_distance(a, c) <= edit_distance(a, b) + edit_distance(b, c));
    CHECK(edit_distance(a, b) == edit_distance(b, a));
    CHECK((edit_distance(a, b) == 0) == (a == b));
  }
}

TEST_CASE("pooled error rate") {
  const std::vector<TokenSeq> refs{{1, 2, 3, 4}, {5, 6}};
  const std::vector<TokenSeq> hyps{{1, 2, 3, 4}, {5}};
  CHECK(error_rate(hyps, refs) == doctest::Approx(1.0 / 6));
  const std::vector<TokenSeq> empty{{}, {}};
  CHECK(error_rate(empty, refs) == 1.0);
  CHECK_THROWS_AS(error_rate(empty, std::vector<TokenSeq>{{}, {}}), Error);
  CHECK_THROWS_AS(error_rate(hyps, std::vector<TokenSeq>{{1}}), Error);
}

TEST_CASE("pooled error rate ignores utterance order") {
  Rng rng(3);
  std::vector<TokenSeq> refs, hyps;
  for (int i = 0; i < 30; ++i) {
    refs.push_back(oracle::random_tokens(rng, 6, 4));
    refs.back().push_back(0);
    hyps.push_back(oracle::random_tokens(rng, 6, 4));
  }
  const double base = error_rate(hyps, refs);
  std::vector<std::size_t> order(refs.size());
  for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;
  std::shuffle(order.begin(), order.end(), rng);
  std::vector<TokenSeq> r2, h2;
  for (std::size_t i : order) {
    r2.push_back(refs[i]);
    h2.push_back(hyps[i]);
  }
  CHECK(error_rate(h2, r2) == base);
}

TEST_CASE("oracle scores pseudo-labels against hidden truth") {
  const auto corpus = data::generate_corpus(data::SynthTaskConfig{}, {2, 5, 2, 2}, 4);
  PlOracle oracle(corpus.hidden);
  std::vector<std::string> ids;
  std::vector<TokenSeq> truth, empty;
  for (const auto& u : corpus.unlabeled) {
    ids.push_back(u.id);
    truth.push_back(oracle.reference(u.id));
    empty.emplace_back();
  }
  CHECK(oracle.ter(ids, truth) == 0.0);
  CHECK(oracle.ter(ids, empty) == 1.0);
  CHECK_THROWS_AS(oracle.reference("labeled-0"), Error);
}

TEST_CASE("metrics json round trip") {
  MetricsRecord r;
  r.update_index = 1234;
  r.phase = "main";
  r.dev_ter = 0.123456789012345;
  r.train_loss_labeled = 3.5;
  r.pl_oracle_ter = 0.2;
  r.empty_pl_fraction = 0.0;
  r.lr = 0.0125;
  r.cache_mean_staleness = 511.5;
  r.divergence_flag = true;
  r.skipped_infeasible = 3;
  r.wall_ms = 99.0;
  const auto back = from_json_line(to_json_line(r));
  CHECK(back.same_trajectory(r));
  CHECK(back.wall_ms == 99.0);
  CHECK(back.train_loss_unlabeled == kNotApplicable);
  const auto no_wall = to_json_line(r, false);
  CHECK(no_wall.find("wall_ms") == std::string::npos);
}

TEST_CASE("run directory sink keeps records up to the resume point") {
  namespace fs = std::filesystem;
  const auto dir = fs::temp_directory_path() / "slimipl_sink_test";
  fs::remove_all(dir);
  {
    RunDirSink sink(dir.string());
    for (int i = 1; i <= 4; ++i) {
      MetricsRecord r;
      r.update_index = 100 * i;
      r.phase = "pretrain";
      sink.write(r);
    }
  }
  {
    RunDirSink sink(dir.string(), 200);
    MetricsRecord r;
    r.update_index = 300;
    r.phase = "main";
    sink.write(r);
  }
  std::ifstream in(dir / "metrics.jsonl");
  std::vector<MetricsRecord> lines;
  std::string line;
  while (std::getline(in, line)) lines.push_back(from_json_line(line));
  REQUIRE(lines.size() == 3);
  CHECK(lines[1].update_index == 200);
  CHECK(lines[2].phase == "main");
  std::ifstream csv(dir / "learning_curve.csv");
  int rows = 0;
  while (std::getline(csv, line)) ++rows;
  CHECK(rows == 4);
  fs::remove_all(dir);
}
