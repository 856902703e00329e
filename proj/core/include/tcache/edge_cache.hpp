#pragma once

#include <atomic>
#include <cstdint>
#include <limits>
#include <memory>
#include <mutex>
#include <optional>
#include <string_view>
#include <unordered_map>
#include <vector>

#include "tcache/backend_db.hpp"
#include "tcache/dependency.hpp"
#include "tcache/history.hpp"
#include "tcache/types.hpp"

namespace tcache {

/// tcache runs the dependency checks; ttl and unaware never abort.
enum class CacheMode { kTCache, kTtl, kUnaware };

/// Reaction of a tcache-mode cache to a detected inconsistency.
enum class Strategy { kAbort, kEvict, kRetry };

inline constexpr Tick kNoTtl = std::numeric_limits<Tick>::max();

std::string_view to_string(CacheMode m);
std::string_view to_string(Strategy s);
CacheMode parse_cache_mode(std::string_view s);
Strategy parse_strategy(std::string_view s);

struct CacheConfig {
  CacheMode mode = CacheMode::kTCache;
  Strategy strategy = Strategy::kAbort;
  /// Entry lifetime in ticks; only consulted in ttl mode.
  Tick ttl = kNoTtl;
};

struct CacheEntry {
  ObjectRecord record;
  Tick inserted_at = 0;
};

enum class ViolationKind {
  /// A previously read version is older than the current read's dependencies require.
  kPrevTooOld,
  /// The current read is older than a previous read's dependencies require.
  kCurrTooOld,
};

struct Violation {
  ViolationKind kind = ViolationKind::kPrevTooOld;
  /// The too-old object, the version required of it and the version seen.
  ObjectId key = 0;
  Version required = kInitialVersion;
  Version seen = kInitialVersion;

  friend bool operator==(const Violation&, const Violation&) = default;
};

/// Per-transaction state held by the cache between reads.
struct TxnRecord {
  TxnId txn_id = 0;
  std::vector<AccessTuple> reads;
  std::vector<Value> values;
  bool aborted = false;
};

/**
 * Checks the current read against everything the transaction has read so far.
 * Returns kCurrTooOld when some earlier read's dependency list requires a
 * newer version of curr.key (witness carries the largest such requirement),
 * otherwise kPrevTooOld when curr.deps requires a newer version of an earlier
 * read, otherwise nullopt. O(reads * k).
 */
std::optional<Violation> check_consistency(const TxnRecord& txn, const AccessTuple& curr);

enum class ServedFrom { kHit, kMiss, kRetryReadThrough };

struct ReadResult {
  bool aborted = false;
  Value value = 0;
  Version ver = kInitialVersion;
  ServedFrom served_from = ServedFrom::kHit;
  /// Set whenever a violation was detected, including ones repaired by RETRY.
  std::optional<Violation> violation;
};

struct CacheStats {
  std::uint64_t hits = 0;
  std::uint64_t misses = 0;
  std::uint64_t aborts = 0;
  std::uint64_t evictions = 0;
  std::uint64_t db_reads = 0;
  std::uint64_t commits = 0;

  double hit_ratio() const {
    const auto total = hits + misses;
    return total == 0 ? 1.0 : static_cast<double>(hits) / static_cast<double>(total);
  }
};

/**
 * Read-only transactional edge cache.
 *
 * Hits are served locally; misses read a single entry from the database.
 * Per-key entries and per-transaction records are each mutated atomically,
 * so reads from many concurrent transactions and invalidation upcalls may
 * interleave freely. The cache holds the whole universe; entries are only
 * removed for a reason (invalidation, strategy eviction, TTL expiry).
 */
class EdgeCache {
 public:
  EdgeCache(CacheConfig cfg, BackendDb& db, HistorySink* sink = nullptr);

  /// Transactional read. `last_op` ends the transaction after this response.
  ReadResult cache_read(TxnId txn_id, ObjectId key, bool last_op, Tick now = 0);

  /// Consistency-unaware read whose entries expire after `ttl` ticks.
  ReadResult ttl_mode_read(TxnId txn_id, ObjectId key, bool last_op, Tick ttl, Tick now = 0);

  /// Evicts the entry if it is older than the invalidated version.
  void handle_invalidation(const Invalidation& inv);

  CacheStats cache_stats() const;
  const CacheConfig& config() const { return cfg_; }

  std::optional<Version> cached_version(ObjectId key) const;
  /// Installs a record directly, bypassing the database. Used to stage stale entries.
  void put(const ObjectRecord& rec, Tick now = 0);
  std::size_t active_transactions() const;

 private:
  struct TxnSlot {
    std::mutex mu;
    TxnRecord record;
  };

  struct Fetched {
    ObjectRecord record;
    ServedFrom from;
  };

  std::shared_ptr<TxnSlot> open_txn(TxnId txn_id);
  void close_txn(TxnId txn_id);

  Fetched lookup_or_fetch(ObjectId key, Tick ttl, Tick now);
  ObjectRecord fetch_and_fill(ObjectId key, Tick now);
  void evict_if_older(ObjectId key, Version required);

  ReadResult finish_read(TxnSlot& slot, const AccessTuple& curr, Value value, ServedFrom from, bool last_op,
                         Tick now);
  ReadResult abort_txn(TxnSlot& slot, const AccessTuple& curr, const Violation& v, ServedFrom from, bool last_op,
                       Tick now);
  ReadResult respond_aborted(TxnSlot& slot, bool last_op);
  std::optional<ReadResult> repeat_read(TxnSlot& slot, ObjectId key, bool last_op, Tick now);
  void emit(const TxnRecord& rec, TxnStatus status, Tick now, const AccessTuple* violating);

  std::mutex& stripe(ObjectId key) const { return entry_locks_[key % kStripes]; }

  static constexpr std::size_t kStripes = 64;

  CacheConfig cfg_;
  BackendDb& db_;
  HistorySink* sink_;

  std::vector<std::optional<CacheEntry>> entries_;
  std::vector<Version> max_invalidated_;
  mutable std::unique_ptr<std::mutex[]> entry_locks_;

  mutable std::mutex txn_mu_;
  std::unordered_map<TxnId, std::shared_ptr<TxnSlot>> txns_;

  std::atomic<std::uint64_t> hits_{0};
  std::atomic<std::uint64_t> misses_{0};
  std::atomic<std::uint64_t> aborts_{0};
  std::atomic<std::uint64_t> evictions_{0};
  std::atomic<std::uint64_t> db_reads_{0};
  std::atomic<std::uint64_t> commits_{0};
};

}  // namespace tcache
