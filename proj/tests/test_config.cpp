#include <string>

#include "doctest.h"
#include "slimipl/config.hpp"

using namespace slimipl;
using namespace slimipl::config;

namespace {

std::string error_text(const std::string& ini, const std::vector<std::string>& ov = {}) {
  try {
    parse_ini(ini, ov);
  } catch (const Error& e) {
    return e.what();
  }
  return "";
}

std::string drop_line(const std::string& text, const std::string& prefix) {
  const auto pos = text.find("\n" + prefix);
  REQUIRE(pos != std::string::npos);
  const auto end = text.find('\n', pos + 1);
  return text.substr(0, pos) + text.substr(end);
}

}  // namespace

TEST_CASE("presets round trip through the text form") {
  for (const auto& name : preset_names()) {
    const auto cfg = preset(name);
    CHECK_NOTHROW(cfg.validate());
    CHECK(parse_ini(to_ini(cfg)) == cfg);
  }
  CHECK_THROWS_AS(preset("nope"), Error);
}

TEST_CASE("doubles survive the round trip bit for bit") {
  auto cfg = preset("desk");
  cfg.train.replace_prob = 0.1 + 0.2;
  cfg.train.lr = 1.0 / 3.0;
  const auto back = parse_ini(to_ini(cfg));
  CHECK(back.train.replace_prob == cfg.train.replace_prob);
  CHECK(back.train.lr == cfg.train.lr);
}

TEST_CASE("missing and unknown keys are named") {
  const auto text = to_ini(preset("desk"));
  CHECK(error_text(drop_line(text, "cache_size")).find("missing key train.cache_size") != std::string::npos);
  std::string extra = text;
  extra.replace(extra.find("[train]\n"), 8, "[train]\nwarmup = 3\n");
  CHECK(error_text(extra).find("unknown key train.warmup") != std::string::npos);
  CHECK(error_text(text + "\n[train]\nlr = 1\n").find("duplicate section") != std::string::npos);
  CHECK(error_text(text + "\n[extra]\nx = 1\n").find("unknown key extra.x") != std::string::npos);
  CHECK(error_text(text, {"train.nope=1"}).find("unknown key train.nope") != std::string::npos);
}

TEST_CASE("bad values are rejected") {
  const auto text = to_ini(preset("desk"));
  CHECK_THROWS_AS(parse_ini(text, {"train.cache_size=ten"}), Error);
  CHECK_THROWS_AS(parse_ini(text, {"train.replace_prob=1.5"}), Error);
  CHECK_THROWS_AS(parse_ini(text, {"train.variant=magic"}), Error);
  CHECK_THROWS_AS(parse_ini(text, {"train.filter_empty_pls=maybe"}), Error);
  CHECK_THROWS_AS(parse_ini(text, {"model.kernel=4"}), Error);
}

TEST_CASE("overrides apply and shared dimensions follow the task") {
  const auto text = to_ini(preset("desk"));
  const auto cfg = parse_ini(text, {"train.cache_size=7", "task.vocab_size=5", "train.dropout_initial=0.2",
                                    "train.variant=ema_no_cache"});
  CHECK(cfg.train.cache_size == 7);
  CHECK(cfg.model.vocab_size == 5);
  CHECK(cfg.model.dropout == 0.2);
  CHECK(cfg.train.variant == trainer::Variant::kEmaNoCache);
}

TEST_CASE("train section subset") {
  auto t = preset("ll10").train;
  t.filter_empty_pls = true;
  const auto text = train_to_ini(t);
  CHECK(text.find("[task]") == std::string::npos);
  CHECK(train_from_ini(text) == t);
}

TEST_CASE("low-resource hyperparameter rows") {
  const auto ll = trainer::TrainConfig::librilight_10h();
  CHECK(ll.cache_size == 1000);
  CHECK(ll.replace_prob == 0.1);
  CHECK(ll.lambda() == 10.0);
  CHECK(ll.dropout_initial == 0.5);
  CHECK(ll.dropout_final == 0.1);
  const auto ls = trainer::TrainConfig::librispeech_100h();
  CHECK(ls.cache_size == 100);
  CHECK(ls.replace_prob == 0.1);
  CHECK(ls.lambda() == 1.0);
  CHECK(ls.dropout_initial == 0.3);
  CHECK(ls.dropout_final == 0.1);
}
