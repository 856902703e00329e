#include "tcache/backend_db.hpp"

#include <algorithm>
#include <stdexcept>
#include <string>
#include <unordered_map>

namespace tcache {

namespace {

std::vector<ObjectId> distinct_in_order(std::span<const ObjectId> keys) {
  std::vector<ObjectId> out;
  for (ObjectId k : keys) {
    if (std::find(out.begin(), out.end(), k) == out.end()) out.push_back(k);
  }
  return out;
}

}  // namespace

BackendDb::BackendDb(DbConfig cfg, ChannelConfig channel_cfg, HistorySink* sink)
    : cfg_(cfg),
      sink_(sink),
      channel_(channel_cfg),
      key_locks_(std::make_unique<std::mutex[]>(cfg.universe)),
      record_locks_(std::make_unique<std::shared_mutex[]>(kStripes)) {
  if (cfg_.universe == 0) throw std::invalid_argument("universe must be non-empty");
  records_.reserve(cfg_.universe);
  for (std::size_t i = 0; i < cfg_.universe; ++i) {
    records_.push_back(ObjectRecord{static_cast<ObjectId>(i), cfg_.initial_value, kInitialVersion,
                                    DependencyList::from_recency_order({}, cfg_.dep_bound)});
  }
}

void BackendDb::check_key(ObjectId key) const {
  if (key >= cfg_.universe) {
    throw std::out_of_range("object " + std::to_string(key) + " outside universe of " +
                            std::to_string(cfg_.universe) + " (misconfigured workload?)");
  }
}

ObjectRecord BackendDb::db_read_entry(ObjectId key) {
  check_key(key);
  entry_reads_.fetch_add(1, std::memory_order_relaxed);
  std::shared_lock lock(stripe(key));
  return records_[key];
}

CommitReport BackendDb::execute_update_txn(const UpdateTxn& txn, std::span<const Value> new_values, Tick now) {
  for (ObjectId k : txn.read_keys) check_key(k);
  for (ObjectId k : txn.write_keys) check_key(k);
  if (!new_values.empty() && new_values.size() != txn.write_keys.size()) {
    throw std::invalid_argument("new_values must be empty or parallel to write_keys");
  }

  const auto reads = distinct_in_order(txn.read_keys);
  const auto writes = distinct_in_order(txn.write_keys);

  std::vector<ObjectId> lock_order = reads;
  lock_order.insert(lock_order.end(), writes.begin(), writes.end());
  std::sort(lock_order.begin(), lock_order.end());
  lock_order.erase(std::unique(lock_order.begin(), lock_order.end()), lock_order.end());

  std::vector<std::unique_lock<std::mutex>> held;
  held.reserve(lock_order.size());
  for (ObjectId k : lock_order) held.emplace_back(key_locks_[k]);

  auto snapshot = [&](ObjectId k) {
    std::shared_lock lock(stripe(k));
    return records_[k];
  };

  CommitReport report;
  report.txn_id = txn.txn_id;

  std::vector<AccessTuple> read_set;
  std::vector<Version> accessed;
  for (ObjectId k : reads) {
    ObjectRecord rec = snapshot(k);
    report.reads.push_back({k, rec.ver});
    accessed.push_back(rec.ver);
    read_set.push_back({k, rec.ver, std::move(rec.deps)});
  }
  txn_reads_.fetch_add(reads.size(), std::memory_order_relaxed);

  std::vector<AccessTuple> write_set;
  for (ObjectId k : writes) {
    const bool was_read = std::find(reads.begin(), reads.end(), k) != reads.end();
    if (was_read) {
      write_set.push_back({k, kInitialVersion, {}});
    } else {
      ObjectRecord rec = snapshot(k);
      accessed.push_back(rec.ver);
      write_set.push_back({k, kInitialVersion, std::move(rec.deps)});
    }
  }

  std::unordered_map<ObjectId, Value> values;
  for (std::size_t i = 0; i < txn.write_keys.size(); ++i) {
    values[txn.write_keys[i]] = new_values.empty() ? Value{0} : new_values[i];
  }

  std::lock_guard commit(commit_mu_);
  const Version vt = clock_.next(accessed);
  report.version = vt;
  for (auto& t : write_set) t.ver = vt;

  const auto full = merge_full_dep_list(read_set, write_set);

  HistoryEvent event{txn.txn_id, TxnKind::kUpdate, TxnStatus::kCommitted, report.reads, {}, now};
  for (ObjectId k : writes) {
    std::vector<DependencyEntry> others;
    others.reserve(full.size());
    for (const auto& e : full) {
      if (e.key != k) others.push_back(e);
    }
    ObjectRecord rec{k, new_values.empty() ? static_cast<Value>(vt) : values[k], vt,
                     prune_lru(others, cfg_.dep_bound)};
    {
      std::unique_lock lock(stripe(k));
      records_[k] = rec;
    }
    report.written.push_back(std::move(rec));
    event.write_set.push_back({k, vt});
  }
  commits_.fetch_add(1, std::memory_order_relaxed);

  if (sink_ != nullptr) sink_->record_event(event);
  for (ObjectId k : writes) channel_.enqueue({k, vt}, now);
  return report;
}

Version BackendDb::last_version() const {
  std::lock_guard commit(commit_mu_);
  return clock_.last_issued();
}

DbStats BackendDb::stats() const {
  return DbStats{commits_.load(), 0, entry_reads_.load(), txn_reads_.load()};
}

}  // namespace tcache
