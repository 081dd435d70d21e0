#include "slimipl/cache.hpp"

#include <algorithm>

#include "slimipl/binary_io.hpp"

namespace slimipl::cache {

PLCache::PLCache(std::size_t capacity) : capacity_(capacity) {
  if (capacity == 0) {
    throw Error(ErrorCode::kInvalidConfig, "cache capacity must be >= 1");
  }
  entries_.reserve(capacity);
}

std::uint64_t PLCache::insert(PLCacheEntry entry) {
  if (full()) {
    throw Error(ErrorCode::kCacheFull, "cache already holds " + std::to_string(capacity_) + " entries");
  }
  if (entry.batch.size() != entry.pls.size()) {
    throw Error(ErrorCode::kInvalidInput, "batch and pseudo-label counts differ");
  }
  entry.entry_id = next_id_++;
  entries_.push_back(std::move(entry));
  return entries_.back().entry_id;
}

PLCacheEntry PLCache::draw_and_maybe_replace(double p, const FreshSupplier& fresh, Rng& rng) {
  if (!full()) {
    throw Error(ErrorCode::kCacheNotReady, "cache fill incomplete");
  }
  const std::size_t slot = uniform_index(rng, entries_.size());
  const bool replace = uniform_unit(rng) < p;
  ++draws_;
  PLCacheEntry drawn = entries_[slot];
  if (replace) {
    PLCacheEntry incoming = fresh();
    if (incoming.batch.size() != incoming.pls.size()) {
      throw Error(ErrorCode::kInvalidInput, "batch and pseudo-label counts differ");
    }
    incoming.entry_id = next_id_++;
    entries_[slot] = std::move(incoming);
    ++replacements_;
  }
  return drawn;
}

AgeStats PLCache::age_stats(std::int64_t current_version) const {
  AgeStats stats;
  if (entries_.empty()) {
    return stats;
  }
  double sum = 0.0;
  for (const auto& e : entries_) {
    const std::int64_t age = current_version - e.model_version;
    sum += static_cast<double>(age);
    stats.max = std::max(stats.max, age);
  }
  stats.mean = sum / static_cast<double>(entries_.size());
  return stats;
}

void PLCache::write(std::ostream& os) const {
  io::BinaryWriter w(os);
  w.u64(capacity_);
  w.u64(next_id_);
  w.u64(draws_);
  w.u64(replacements_);
  w.u64(entries_.size());
  for (const auto& e : entries_) {
    w.u64(e.entry_id);
    w.i64(e.model_version);
    w.u64(e.batch.size());
    for (std::size_t i = 0; i < e.batch.size(); ++i) {
      w.str(e.batch[i].id);
      w.matrix(*e.batch[i].features);
      w.tokens(e.pls[i]);
    }
  }
}

PLCache PLCache::read(std::istream& is) {
  io::BinaryReader r(is);
  PLCache cache(r.u64());
  cache.next_id_ = r.u64();
  cache.draws_ = r.u64();
  cache.replacements_ = r.u64();
  const auto count = r.u64();
  if (count > cache.capacity_) {
    throw Error(ErrorCode::kParse, "cache snapshot exceeds its capacity");
  }
  for (std::uint64_t k = 0; k < count; ++k) {
    PLCacheEntry e;
    e.entry_id = r.u64();
    e.model_version = r.i64();
    const auto n = r.u64();
    for (std::uint64_t i = 0; i < n; ++i) {
      CachedUtterance u;
      u.id = r.str();
      u.features = std::make_shared<const Matrix>(r.matrix());
      e.batch.push_back(std::move(u));
      e.pls.push_back(r.tokens());
    }
    cache.entries_.push_back(std::move(e));
  }
  return cache;
}

}  // namespace slimipl::cache
