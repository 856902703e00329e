#pragma once

#include <cstddef>
#include <optional>
#include <span>
#include <vector>

#include "tcache/types.hpp"

namespace tcache {

/// A reader of the owning object's version must not observe `key` older than `ver`.
struct DependencyEntry {
  ObjectId key = 0;
  Version ver = kInitialVersion;

  friend bool operator==(const DependencyEntry&, const DependencyEntry&) = default;
};

/**
 * Bounded dependency list of one object version.
 *
 * Entries are kept most-recently-touched first, with at most one entry per
 * key (the one with the larger version) and never more than `bound()` entries.
 * Every constructor path goes through prune_lru so the invariants cannot be
 * bypassed.
 */
class DependencyList {
 public:
  DependencyList() = default;

  /// Builds a list from entries given in recency order (most recent first).
  static DependencyList from_recency_order(std::span<const DependencyEntry> by_recency,
                                           std::size_t bound = kUnbounded);

  std::span<const DependencyEntry> entries() const { return entries_; }
  std::size_t bound() const { return bound_; }
  std::size_t size() const { return entries_.size(); }
  bool empty() const { return entries_.empty(); }

  auto begin() const { return entries_.begin(); }
  auto end() const { return entries_.end(); }

  /// Version required for `key`, if the list mentions it.
  std::optional<Version> find(ObjectId key) const;

  friend bool operator==(const DependencyList&, const DependencyList&) = default;

 private:
  friend DependencyList prune_lru(std::span<const DependencyEntry>, std::size_t);

  std::vector<DependencyEntry> entries_;
  std::size_t bound_ = kUnbounded;
};

/// One accessed object inside a transaction: the version seen or produced and
/// the dependency list that came with it.
struct AccessTuple {
  ObjectId key = 0;
  Version ver = kInitialVersion;
  DependencyList deps;
};

/**
 * Aggregates the read and write sets of a transaction into one full
 * dependency list: every accessed (key, ver) plus every inherited dependency.
 *
 * Duplicate keys keep their maximum version. The result is in recency order:
 * directly accessed keys first (read set, then write set, in access order),
 * followed by inherited entries newest version first. A key's position is
 * that of its most recent occurrence.
 */
std::vector<DependencyEntry> merge_full_dep_list(std::span<const AccessTuple> read_set,
                                                 std::span<const AccessTuple> write_set);

/**
 * LRU pruning. `by_recency` is ordered most recent first. Keeps the `bound`
 * most recent distinct keys, each with the maximum version it carries
 * anywhere in `by_recency`.
 */
DependencyList prune_lru(std::span<const DependencyEntry> by_recency, std::size_t bound);

/// Monotone version allocator. Every issued version exceeds all accessed
/// versions and every version issued before.
class VersionClock {
 public:
  Version next(std::span<const Version> accessed_versions);
  Version last_issued() const { return last_; }

 private:
  Version last_ = kInitialVersion;
};

}  // namespace tcache
