#pragma once

#include <atomic>
#include <cstdint>
#include <memory>
#include <mutex>
#include <shared_mutex>
#include <span>
#include <vector>

#include "tcache/dependency.hpp"
#include "tcache/history.hpp"
#include "tcache/lossy_channel.hpp"
#include "tcache/types.hpp"

namespace tcache {

/// Committed state of one object. Shared verbatim with the cache.
struct ObjectRecord {
  ObjectId key = 0;
  Value value = 0;
  Version ver = kInitialVersion;
  DependencyList deps;
};

struct UpdateTxn {
  TxnId txn_id = 0;
  std::vector<ObjectId> read_keys;
  std::vector<ObjectId> write_keys;
};

enum class CommitStatus { kCommitted, kAborted };

struct CommitReport {
  TxnId txn_id = 0;
  CommitStatus status = CommitStatus::kCommitted;
  Version version = kInitialVersion;
  /// Versions observed by the read phase, one per distinct read key.
  std::vector<VersionedKey> reads;
  /// New records, one per distinct written key, in first-write order.
  std::vector<ObjectRecord> written;
};

struct DbConfig {
  std::size_t universe = 2000;
  std::size_t dep_bound = 5;
  Value initial_value = 0;
};

struct DbStats {
  std::uint64_t commits = 0;
  std::uint64_t aborts = 0;
  /// Single-entry reads served to caches.
  std::uint64_t entry_reads = 0;
  /// Reads performed by update transactions.
  std::uint64_t txn_reads = 0;
};

/**
 * Single-node serializable key-value store that maintains per-object
 * versions and dependency lists.
 *
 * Update transactions run under strict two-phase locking with locks taken in
 * key order, so they never deadlock and never conflict-abort. Version
 * allocation, record install, history emission and invalidation enqueue
 * happen under one commit mutex, which keeps versions, history order and
 * channel order identical to commit order.
 *
 * Thread-safe. db_read_entry only waits on a record's stripe lock while that
 * single record is being installed; it never waits on transaction locks.
 */
class BackendDb {
 public:
  /// `sink` may be null. The channel is owned by the database.
  BackendDb(DbConfig cfg, ChannelConfig channel_cfg, HistorySink* sink = nullptr);

  /**
   * Reads every read key, then installs every write key at a fresh version.
   * `new_values` is either empty (value := version) or parallel to
   * write_keys. Throws std::out_of_range for keys outside the universe.
   */
  CommitReport execute_update_txn(const UpdateTxn& txn, std::span<const Value> new_values = {}, Tick now = 0);

  /// Latest committed record. Throws std::out_of_range for unknown keys.
  ObjectRecord db_read_entry(ObjectId key);

  /// Invalidations deliverable at `now`, FIFO unless reordering is enabled.
  std::vector<Invalidation> drain_channel(Tick now) { return channel_.drain(now); }
  const LossyChannel& channel() const { return channel_; }

  Version last_version() const;
  std::size_t universe() const { return cfg_.universe; }
  const DbConfig& config() const { return cfg_; }
  DbStats stats() const;

 private:
  static constexpr std::size_t kStripes = 64;

  void check_key(ObjectId key) const;
  std::shared_mutex& stripe(ObjectId key) const { return record_locks_[key % kStripes]; }

  DbConfig cfg_;
  HistorySink* sink_;
  LossyChannel channel_;

  std::vector<ObjectRecord> records_;
  std::unique_ptr<std::mutex[]> key_locks_;
  mutable std::unique_ptr<std::shared_mutex[]> record_locks_;
  mutable std::mutex commit_mu_;
  VersionClock clock_;

  std::atomic<std::uint64_t> commits_{0};
  std::atomic<std::uint64_t> entry_reads_{0};
  std::atomic<std::uint64_t> txn_reads_{0};
};

}  // namespace tcache
