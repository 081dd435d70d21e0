#include <cmath>
#include <sstream>

#include "doctest.h"
#include "slimipl/cache.hpp"

using namespace slimipl;
using namespace slimipl::cache;

namespace {

PLCacheEntry make_entry(std::int64_t version, int tag = 0) {
  PLCacheEntry e;
  e.batch.push_back({"u" + std::to_string(tag), std::make_shared<const Matrix>(Matrix::Constant(2, 3, tag))});
  e.pls.push_back({tag % 5});
  e.model_version = version;
  return e;
}

PLCache filled(std::size_t capacity) {
  PLCache c(capacity);
  for (std::size_t i = 0; i < capacity; ++i) c.insert(make_entry(0, static_cast<int>(i)));
  return c;
}

}  // namespace

TEST_CASE("insert assigns ids and refuses overflow") {
  PLCache c(3);
  CHECK(c.insert(make_entry(0)) == 0);
  CHECK(c.insert(make_entry(0)) == 1);
  CHECK_FALSE(c.full());
  CHECK(c.insert(make_entry(0)) == 2);
  CHECK(c.full());
  try {
    c.insert(make_entry(0));
    FAIL("expected cache-full");
  } catch (const Error& e) {
    CHECK(e.code() == ErrorCode::kCacheFull);
  }
  CHECK_THROWS_AS(PLCache(0), Error);
}

TEST_CASE("draw before the cache is full") {
  PLCache c(2);
  c.insert(make_entry(0));
  Rng rng(1);
  CHECK_THROWS_AS(c.draw_and_maybe_replace(0.5, [] { return make_entry(1); }, rng), Error);
}

TEST_CASE("p = 0 never replaces and p = 1 always does") {
  auto c = filled(4);
  Rng rng(2);
  int calls = 0;
  auto fresh = [&] { ++calls; return make_entry(1, 100 + calls); };
  for (int i = 0; i < 100; ++i) c.draw_and_maybe_replace(0.0, fresh, rng);
  CHECK(calls == 0);
  CHECK(c.replacements() == 0);
  for (int i = 0; i < 100; ++i) c.draw_and_maybe_replace(1.0, fresh, rng);
  CHECK(calls == 100);
  CHECK(c.replacements() == 100);
  CHECK(c.draws() == 200);
}

TEST_CASE("draw frequencies are uniform") {
  const std::size_t C = 10;
  auto c = filled(C);
  Rng rng(3);
  std::vector<int> counts(C, 0);
  const int n = 100000;
  for (int i = 0; i < n; ++i) {
    const auto e = c.draw_and_maybe_replace(0.0, [] { return make_entry(1); }, rng);
    ++counts[e.entry_id];
  }
  const double q = 1.0 / C;
  const double sigma = std::sqrt(n * q * (1 - q));
  for (int k : counts) CHECK(std::abs(k - n * q) <= 3 * sigma);
}

TEST_CASE("replacement fraction tracks p") {
  for (double p : {0.1, 0.5, 1.0}) {
    auto c = filled(8);
    Rng rng(4);
    const int n = 100000;
    for (int i = 0; i < n; ++i) c.draw_and_maybe_replace(p, [] { return make_entry(1); }, rng);
    const double frac = static_cast<double>(c.replacements()) / n;
    CHECK(std::abs(frac - p) <= 3 * std::sqrt(p * (1 - p) / n) + 1e-12);
  }
}

TEST_CASE("the returned entry is the drawn one even when evicted") {
  auto c = filled(5);
  Rng rng(5);
  int evictions = 0;
  for (int trial = 0; trial < 10000; ++trial) {
    const auto before = c.entries();
    const auto e = c.draw_and_maybe_replace(0.5, [&] { return make_entry(trial, 1000 + trial); }, rng);
    bool was_present = false;
    for (const auto& b : before) {
      if (b.entry_id == e.entry_id) {
        was_present = true;
        CHECK(b.batch[0].id == e.batch[0].id);
        CHECK(b.pls == e.pls);
        CHECK(b.model_version == e.model_version);
      }
    }
    CHECK(was_present);
    bool still = false;
    for (const auto& a : c.entries()) still |= a.entry_id == e.entry_id;
    evictions += !still;
  }
  CHECK(evictions > 0);
}

TEST_CASE("mean staleness approaches C / p") {
  const std::size_t C = 20;
  const double p = 0.25;
  auto c = filled(C);
  Rng rng(6);
  std::int64_t version = 0;
  double sum = 0.0;
  int samples = 0;
  for (int i = 0; i < 200000; ++i) {
    ++version;
    c.draw_and_maybe_replace(p, [&] { return make_entry(version); }, rng);
    if (i > 20000) {
      sum += c.age_stats(version).mean;
      ++samples;
    }
  }
  // Each slot is refreshed with probability p / C per draw.
  const double expected = C / p - 1.0;
  CHECK(std::abs(sum / samples - expected) <= 0.05 * expected);
}

TEST_CASE("age stats") {
  PLCache c(3);
  c.insert(make_entry(1));
  c.insert(make_entry(4));
  c.insert(make_entry(7));
  const auto s = c.age_stats(10);
  CHECK(s.mean == doctest::Approx(6.0));
  CHECK(s.max == 9);
}

TEST_CASE("snapshot round trip") {
  auto c = filled(4);
  Rng rng(7);
  for (int i = 0; i < 10; ++i) c.draw_and_maybe_replace(0.5, [&] { return make_entry(i, 50 + i); }, rng);
  std::stringstream ss;
  c.write(ss);
  const auto back = PLCache::read(ss);
  CHECK(back.capacity() == c.capacity());
  CHECK(back.draws() == c.draws());
  CHECK(back.replacements() == c.replacements());
  REQUIRE(back.size() == c.size());
  for (std::size_t i = 0; i < c.size(); ++i) {
    CHECK(back.entries()[i].entry_id == c.entries()[i].entry_id);
    CHECK(back.entries()[i].model_version == c.entries()[i].model_version);
    CHECK(back.entries()[i].pls == c.entries()[i].pls);
    CHECK(*back.entries()[i].batch[0].features == *c.entries()[i].batch[0].features);
  }
  // next ids continue from the same counter
  auto c2 = c;
  auto b2 = back;
  Rng r1(8), r2(8);
  CHECK(c2.draw_and_maybe_replace(1.0, [] { return make_entry(0); }, r1).entry_id ==
        b2.draw_and_maybe_replace(1.0, [] { return make_entry(0); }, r2).entry_id);
  CHECK(c2.entries() .size() == b2.entries().size());
}
