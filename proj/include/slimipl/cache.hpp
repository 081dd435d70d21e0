#pragma once

#include <functional>
#include <iosfwd>
#include <memory>
#include <string>
#include <vector>

#include "slimipl/common.hpp"

namespace slimipl::cache {

struct CachedUtterance {
  std::string id;
  std::shared_ptr<const Matrix> features;
};

// One pseudo-labeled batch and the model version that labeled it.
struct PLCacheEntry {
  std::vector<CachedUtterance> batch;
  std::vector<TokenSeq> pls;  // parallel to batch
  std::int64_t model_version = 0;
  std::uint64_t entry_id = 0;  // assigned by PLCache::insert
};

struct AgeStats {
  double mean = 0.0;
  std::int64_t max = 0;
};

using FreshSupplier = std::function<PLCacheEntry()>;

class PLCache {
 public:
  explicit PLCache(std::size_t capacity);

  std::size_t capacity() const { return capacity_; }
  std::size_t size() const { return entries_.size(); }
  bool full() const { return entries_.size() == capacity_; }
  const std::vector<PLCacheEntry>& entries() const { return entries_; }
  std::uint64_t draws() const { return draws_; }
  std::uint64_t replacements() const { return replacements_; }

  // Fill-phase insert; returns the assigned entry id.
  std::uint64_t insert(PLCacheEntry entry);

  // Draws an entry uniformly. With probability p the drawn entry is evicted and
  // replaced by fresh(); the drawn entry is returned either way.
  PLCacheEntry draw_and_maybe_replace(double p, const FreshSupplier& fresh, Rng& rng);

  AgeStats age_stats(std::int64_t current_version) const;

  void write(std::ostream& os) const;
  static PLCache read(std::istream& is);

 private:
  std::size_t capacity_;
  std::vector<PLCacheEntry> entries_;
  std::uint64_t next_id_ = 0;
  std::uint64_t draws_ = 0;
  std::uint64_t replacements_ = 0;
};

}  // namespace slimipl::cache
