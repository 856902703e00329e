#include "tcache/edge_cache.hpp"

#include <algorithm>
#include <stdexcept>
#include <string>

namespace tcache {

std::string_view to_string(CacheMode m) {
  switch (m) {
    case CacheMode::kTCache: return "tcache";
    case CacheMode::kTtl: return "ttl";
    case CacheMode::kUnaware: return "unaware";
  }
  return "?";
}

std::string_view to_string(Strategy s) {
  switch (s) {
    case Strategy::kAbort: return "abort";
    case Strategy::kEvict: return "evict";
    case Strategy::kRetry: return "retry";
  }
  return "?";
}

CacheMode parse_cache_mode(std::string_view s) {
  if (s == "tcache") return CacheMode::kTCache;
  if (s == "ttl") return CacheMode::kTtl;
  if (s == "unaware") return CacheMode::kUnaware;
  throw std::invalid_argument("unknown cache mode '" + std::string(s) + "' (tcache|ttl|unaware)");
}

Strategy parse_strategy(std::string_view s) {
  if (s == "abort") return Strategy::kAbort;
  if (s == "evict") return Strategy::kEvict;
  if (s == "retry") return Strategy::kRetry;
  throw std::invalid_argument("unknown strategy '" + std::string(s) + "' (abort|evict|retry)");
}

std::optional<Violation> check_consistency(const TxnRecord& txn, const AccessTuple& curr) {
  std::optional<Violation> too_old_curr;
  for (const auto& prev : txn.reads) {
    if (auto required = prev.deps.find(curr.key); required && *required > curr.ver) {
      if (!too_old_curr || *required > too_old_curr->required) {
        too_old_curr = Violation{ViolationKind::kCurrTooOld, curr.key, *required, curr.ver};
      }
    }
  }
  if (too_old_curr) return too_old_curr;

  for (const auto& dep : curr.deps) {
    for (const auto& prev : txn.reads) {
      if (prev.key == dep.key && dep.ver > prev.ver) {
        return Violation{ViolationKind::kPrevTooOld, dep.key, dep.ver, prev.ver};
      }
    }
  }
  return std::nullopt;
}

EdgeCache::EdgeCache(CacheConfig cfg, BackendDb& db, HistorySink* sink)
    : cfg_(cfg),
      db_(db),
      sink_(sink),
      entries_(db.universe()),
      max_invalidated_(db.universe(), kInitialVersion),
      entry_locks_(std::make_unique<std::mutex[]>(kStripes)) {
  if (cfg_.ttl < 0) throw std::invalid_argument("ttl must be non-negative");
}

std::shared_ptr<EdgeCache::TxnSlot> EdgeCache::open_txn(TxnId txn_id) {
  std::lock_guard lock(txn_mu_);
  auto& slot = txns_[txn_id];
  if (!slot) {
    slot = std::make_shared<TxnSlot>();
    slot->record.txn_id = txn_id;
  }
  return slot;
}

void EdgeCache::close_txn(TxnId txn_id) {
  std::lock_guard lock(txn_mu_);
  txns_.erase(txn_id);
}

std::size_t EdgeCache::active_transactions() const {
  std::lock_guard lock(txn_mu_);
  return txns_.size();
}

ObjectRecord EdgeCache::fetch_and_fill(ObjectId key, Tick now) {
  ObjectRecord rec = db_.db_read_entry(key);
  db_reads_.fetch_add(1, std::memory_order_relaxed);
  std::lock_guard lock(stripe(key));
  // An invalidation for a newer version may have raced with the fetch.
  if (rec.ver >= max_invalidated_[key]) {
    auto& slot = entries_[key];
    if (!slot || slot->record.ver <= rec.ver) slot = CacheEntry{rec, now};
  }
  return rec;
}

EdgeCache::Fetched EdgeCache::lookup_or_fetch(ObjectId key, Tick ttl, Tick now) {
  if (key >= entries_.size()) {
    throw std::out_of_range("object " + std::to_string(key) + " outside cache universe");
  }
  {
    std::lock_guard lock(stripe(key));
    auto& slot = entries_[key];
    if (slot && ttl != kNoTtl && now - slot->inserted_at >= ttl) {
      slot.reset();
      evictions_.fetch_add(1, std::memory_order_relaxed);
    }
    if (slot) {
      hits_.fetch_add(1, std::memory_order_relaxed);
      return {slot->record, ServedFrom::kHit};
    }
  }
  misses_.fetch_add(1, std::memory_order_relaxed);
  return {fetch_and_fill(key, now), ServedFrom::kMiss};
}

void EdgeCache::evict_if_older(ObjectId key, Version required) {
  std::lock_guard lock(stripe(key));
  auto& slot = entries_[key];
  if (slot && slot->record.ver < required) {
    slot.reset();
    evictions_.fetch_add(1, std::memory_order_relaxed);
  }
}

void EdgeCache::handle_invalidation(const Invalidation& inv) {
  if (inv.key >= entries_.size()) return;
  std::lock_guard lock(stripe(inv.key));
  max_invalidated_[inv.key] = std::max(max_invalidated_[inv.key], inv.ver);
  auto& slot = entries_[inv.key];
  if (slot && slot->record.ver < inv.ver) {
    slot.reset();
    evictions_.fetch_add(1, std::memory_order_relaxed);
  }
}

void EdgeCache::put(const ObjectRecord& rec, Tick now) {
  std::lock_guard lock(stripe(rec.key));
  entries_.at(rec.key) = CacheEntry{rec, now};
}

std::optional<Version> EdgeCache::cached_version(ObjectId key) const {
  std::lock_guard lock(stripe(key));
  const auto& slot = entries_.at(key);
  if (!slot) return std::nullopt;
  return slot->record.ver;
}

CacheStats EdgeCache::cache_stats() const {
  return CacheStats{hits_.load(), misses_.load(), aborts_.load(), evictions_.load(), db_reads_.load(),
                    commits_.load()};
}

void EdgeCache::emit(const TxnRecord& rec, TxnStatus status, Tick now, const AccessTuple* violating) {
  if (sink_ == nullptr) return;
  HistoryEvent e;
  e.txn_id = rec.txn_id;
  e.kind = TxnKind::kReadOnly;
  e.status = status;
  e.timestamp = now;
  for (const auto& r : rec.reads) e.read_set.push_back({r.key, r.ver});
  if (violating != nullptr) e.read_set.push_back({violating->key, violating->ver});
  sink_->record_event(e);
}

ReadResult EdgeCache::finish_read(TxnSlot& slot, const AccessTuple& curr, Value value, ServedFrom from,
                                  bool last_op, Tick now) {
  slot.record.reads.push_back(curr);
  slot.record.values.push_back(value);
  ReadResult out{false, value, curr.ver, from, std::nullopt};
  if (last_op) {
    commits_.fetch_add(1, std::memory_order_relaxed);
    emit(slot.record, TxnStatus::kCommitted, now, nullptr);
    close_txn(slot.record.txn_id);
  }
  return out;
}

ReadResult EdgeCache::abort_txn(TxnSlot& slot, const AccessTuple& curr, const Violation& v, ServedFrom from,
                                bool last_op, Tick now) {
  slot.record.aborted = true;
  aborts_.fetch_add(1, std::memory_order_relaxed);
  // The violating read is part of what the transaction would have observed.
  emit(slot.record, TxnStatus::kAborted, now, &curr);
  if (last_op) close_txn(slot.record.txn_id);
  ReadResult out;
  out.aborted = true;
  out.served_from = from;
  out.violation = v;
  return out;
}

ReadResult EdgeCache::respond_aborted(TxnSlot& slot, bool last_op) {
  if (last_op) close_txn(slot.record.txn_id);
  ReadResult out;
  out.aborted = true;
  return out;
}

std::optional<ReadResult> EdgeCache::repeat_read(TxnSlot& slot, ObjectId key, bool last_op, Tick now) {
  const auto& reads = slot.record.reads;
  for (std::size_t i = 0; i < reads.size(); ++i) {
    if (reads[i].key != key) continue;
    hits_.fetch_add(1, std::memory_order_relaxed);
    ReadResult out{false, slot.record.values[i], reads[i].ver, ServedFrom::kHit, std::nullopt};
    if (last_op) {
      commits_.fetch_add(1, std::memory_order_relaxed);
      emit(slot.record, TxnStatus::kCommitted, now, nullptr);
      close_txn(slot.record.txn_id);
    }
    return out;
  }
  return std::nullopt;
}

ReadResult EdgeCache::cache_read(TxnId txn_id, ObjectId key, bool last_op, Tick now) {
  switch (cfg_.mode) {
    case CacheMode::kTtl: return ttl_mode_read(txn_id, key, last_op, cfg_.ttl, now);
    case CacheMode::kUnaware: return ttl_mode_read(txn_id, key, last_op, kNoTtl, now);
    case CacheMode::kTCache: break;
  }

  auto slot = open_txn(txn_id);
  std::lock_guard lock(slot->mu);
  if (slot->record.aborted) return respond_aborted(*slot, last_op);
  if (auto again = repeat_read(*slot, key, last_op, now)) return *again;

  auto fetched = lookup_or_fetch(key, kNoTtl, now);
  AccessTuple curr{key, fetched.record.ver, fetched.record.deps};
  auto violation = check_consistency(slot->record, curr);
  if (!violation) return finish_read(*slot, curr, fetched.record.value, fetched.from, last_op, now);

  switch (cfg_.strategy) {
    case Strategy::kAbort:
      return abort_txn(*slot, curr, *violation, fetched.from, last_op, now);
    case Strategy::kEvict:
      evict_if_older(violation->key, violation->required);
      return abort_txn(*slot, curr, *violation, fetched.from, last_op, now);
    case Strategy::kRetry: {
      evict_if_older(violation->key, violation->required);
      if (violation->kind == ViolationKind::kPrevTooOld) {
        return abort_txn(*slot, curr, *violation, fetched.from, last_op, now);
      }
      misses_.fetch_add(1, std::memory_order_relaxed);
      ObjectRecord fresh = fetch_and_fill(key, now);
      AccessTuple retried{key, fresh.ver, fresh.deps};
      if (auto again = check_consistency(slot->record, retried)) {
        evict_if_older(again->key, again->required);
        return abort_txn(*slot, retried, *again, ServedFrom::kRetryReadThrough, last_op, now);
      }
      auto out = finish_read(*slot, retried, fresh.value, ServedFrom::kRetryReadThrough, last_op, now);
      out.violation = violation;
      return out;
    }
  }
  return abort_txn(*slot, curr, *violation, fetched.from, last_op, now);
}

ReadResult EdgeCache::ttl_mode_read(TxnId txn_id, ObjectId key, bool last_op, Tick ttl, Tick now) {
  auto slot = open_txn(txn_id);
  std::lock_guard lock(slot->mu);
  if (auto again = repeat_read(*slot, key, last_op, now)) return *again;
  auto fetched = lookup_or_fetch(key, ttl, now);
  AccessTuple curr{key, fetched.record.ver, {}};
  return finish_read(*slot, curr, fetched.record.value, fetched.from, last_op, now);
}

}  // namespace tcache
