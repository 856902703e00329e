#include <doctest.h>

#include <algorithm>
#include <mutex>
#include <random>
#include <thread>

#include "tcache/backend_db.hpp"
#include "tcache/edge_cache.hpp"
#include "tcache/monitor.hpp"

using namespace tcache;

namespace {

DependencyList deps(std::initializer_list<DependencyEntry> e) {
  std::vector<DependencyEntry> v(e);
  return DependencyList::from_recency_order(v);
}

class Collect final : public HistorySink {
 public:
  void record_event(const HistoryEvent& e) override {
    std::lock_guard lock(mu);
    events.push_back(e);
  }
  std::mutex mu;
  std::vector<HistoryEvent> events;
};

// o2 is cached at version 0 while the database holds o1@2 -> (o2, 2) and o2@2.
struct StaleFixture {
  Collect sink;
  BackendDb db{{10, 5, 0}, {0.0, 1, 1, false, 1}};
  EdgeCache cache;

  explicit StaleFixture(Strategy s) : cache({CacheMode::kTCache, s, kNoTtl}, db, &sink) {
    db.execute_update_txn({1, {2}, {2}});
    cache.put(ObjectRecord{2, 0, 0, {}});
    db.execute_update_txn({2, {1, 2}, {1, 2}});
  }
};

}  // namespace

TEST_CASE("check_consistency: dependency exactly satisfied") {
  TxnRecord t{1, {{1, 5, deps({{2, 4}})}}, {0}, false};
  CHECK_FALSE(check_consistency(t, {2, 4, {}}).has_value());
}

TEST_CASE("check_consistency: a previous read is too old") {
  TxnRecord t{1, {{7, 3, {}}}, {0}, false};
  const auto v = check_consistency(t, {1, 9, deps({{7, 5}})});
  REQUIRE(v.has_value());
  CHECK(*v == Violation{ViolationKind::kPrevTooOld, 7, 5, 3});
}

TEST_CASE("check_consistency: the current read is too old") {
  TxnRecord t{1, {{1, 10, deps({{9, 8}})}}, {0}, false};
  const auto v = check_consistency(t, {9, 6, {}});
  REQUIRE(v.has_value());
  CHECK(*v == Violation{ViolationKind::kCurrTooOld, 9, 8, 6});
}

TEST_CASE("check_consistency agrees with a pairwise scan of all constraints") {
  std::mt19937_64 rng(99);
  std::uniform_int_distribution<int> key(0, 5), ver(0, 9), nread(0, 5), ndep(0, 3);
  auto random_deps = [&] {
    std::vector<DependencyEntry> d;
    const int n = ndep(rng);
    for (int i = 0; i < n; ++i) d.push_back({static_cast<ObjectId>(key(rng)), static_cast<Version>(ver(rng))});
    return DependencyList::from_recency_order(d);
  };
  for (int trial = 0; trial < 5000; ++trial) {
    TxnRecord t;
    const int n = nread(rng);
    for (int i = 0; i < n; ++i) {
      t.reads.push_back({static_cast<ObjectId>(key(rng)), static_cast<Version>(ver(rng)), random_deps()});
      t.values.push_back(0);
    }
    const AccessTuple curr{static_cast<ObjectId>(key(rng)), static_cast<Version>(ver(rng)), random_deps()};

    std::vector<Violation> curr_old, prev_old;
    for (const auto& r : t.reads) {
      for (const auto& d : r.deps) {
        if (d.key == curr.key && d.ver > curr.ver) curr_old.push_back({ViolationKind::kCurrTooOld, d.key, d.ver, curr.ver});
      }
      for (const auto& d : curr.deps) {
        if (d.key == r.key && d.ver > r.ver) prev_old.push_back({ViolationKind::kPrevTooOld, d.key, d.ver, r.ver});
      }
    }
    const auto got = check_consistency(t, curr);
    if (!curr_old.empty()) {
      REQUIRE(got.has_value());
      CHECK(got->kind == ViolationKind::kCurrTooOld);
      const auto top = std::max_element(curr_old.begin(), curr_old.end(),
                                        [](const auto& a, const auto& b) { return a.required < b.required; });
      CHECK(*got == *top);
    } else if (!prev_old.empty()) {
      REQUIRE(got.has_value());
      CHECK(std::find(prev_old.begin(), prev_old.end(), *got) != prev_old.end());
    } else {
      CHECK_FALSE(got.has_value());
    }
  }
}

TEST_CASE("cold reads miss, warm reads hit without touching the database") {
  BackendDb db({10, 5, 0}, {0.0, 1, 1, false, 1});
  EdgeCache cache({}, db);
  CHECK(cache.cache_read(1, 3, true).served_from == ServedFrom::kMiss);
  const auto before = db.stats().entry_reads;
  for (TxnId t = 2; t < 50; ++t) CHECK(cache.cache_read(t, 3, true).served_from == ServedFrom::kHit);
  CHECK(db.stats().entry_reads == before);
  CHECK(cache.cache_stats().misses == 1);
  CHECK(cache.cache_stats().db_reads == 1);
}

TEST_CASE("a warm cache without updates has hit ratio one") {
  BackendDb db({10, 5, 0}, {0.0, 1, 1, false, 1});
  EdgeCache cache({}, db);
  for (ObjectId k = 0; k < 10; ++k) cache.put(db.db_read_entry(k));
  for (TxnId t = 1; t < 100; ++t) cache.cache_read(t, static_cast<ObjectId>(t % 10), t % 3 == 0);
  CHECK(cache.cache_stats().hit_ratio() == doctest::Approx(1.0));
}

TEST_CASE("ABORT leaves the stale entry in place") {
  StaleFixture f(Strategy::kAbort);
  CHECK_FALSE(f.cache.cache_read(1, 1, false).aborted);
  const auto r = f.cache.cache_read(1, 2, true);
  CHECK(r.aborted);
  REQUIRE(r.violation.has_value());
  CHECK(*r.violation == Violation{ViolationKind::kCurrTooOld, 2, 2, 0});
  CHECK(f.cache.cached_version(2) == Version{0});
}

TEST_CASE("EVICT removes the too-old entry so the next read misses") {
  StaleFixture f(Strategy::kEvict);
  f.cache.cache_read(1, 1, false);
  CHECK(f.cache.cache_read(1, 2, true).aborted);
  CHECK_FALSE(f.cache.cached_version(2).has_value());
  const auto again = f.cache.cache_read(2, 2, true);
  CHECK(again.served_from == ServedFrom::kMiss);
  CHECK(again.ver == 2);
}

TEST_CASE("RETRY reads through when the current read is too old") {
  StaleFixture f(Strategy::kRetry);
  f.cache.cache_read(1, 1, false);
  const auto r = f.cache.cache_read(1, 2, true);
  CHECK_FALSE(r.aborted);
  CHECK(r.served_from == ServedFrom::kRetryReadThrough);
  CHECK(r.ver == 2);
  CHECK(r.violation.has_value());
  CHECK(f.cache.cached_version(2) == Version{2});
  REQUIRE(f.sink.events.size() == 1);
  CHECK(f.sink.events[0].status == TxnStatus::kCommitted);
}

TEST_CASE("RETRY evicts and aborts when a previous read is too old") {
  StaleFixture f(Strategy::kRetry);
  CHECK(f.cache.cache_read(1, 2, false).ver == 0);
  const auto r = f.cache.cache_read(1, 1, true);
  CHECK(r.aborted);
  REQUIRE(r.violation.has_value());
  CHECK(r.violation->kind == ViolationKind::kPrevTooOld);
  CHECK_FALSE(f.cache.cached_version(2).has_value());
}

TEST_CASE("aborted events carry the partial read set plus the violating read") {
  StaleFixture f(Strategy::kAbort);
  f.cache.cache_read(1, 1, false);
  f.cache.cache_read(1, 2, false);
  REQUIRE(f.sink.events.size() == 1);
  const auto& e = f.sink.events[0];
  CHECK(e.kind == TxnKind::kReadOnly);
  CHECK(e.status == TxnStatus::kAborted);
  CHECK(e.read_set == std::vector<VersionedKey>{{1, 2}, {2, 0}});
  CHECK(e.write_set.empty());
}

TEST_CASE("an aborted transaction keeps aborting until its last read") {
  StaleFixture f(Strategy::kAbort);
  f.cache.cache_read(1, 1, false);
  CHECK(f.cache.cache_read(1, 2, false).aborted);
  CHECK(f.cache.cache_read(1, 3, false).aborted);
  CHECK(f.cache.active_transactions() == 1);
  CHECK(f.cache.cache_read(1, 4, true).aborted);
  CHECK(f.cache.active_transactions() == 0);
  // the id now starts a fresh transaction
  CHECK_FALSE(f.cache.cache_read(1, 4, true).aborted);
}

TEST_CASE("repeat reads inside a transaction return the recorded snapshot") {
  BackendDb db({10, 5, 0}, {0.0, 1, 1, false, 1});
  EdgeCache cache({}, db);
  CHECK(cache.cache_read(1, 5, false).ver == 0);
  db.execute_update_txn({1, {5}, {5}});
  for (const auto& inv : db.drain_channel(100)) cache.handle_invalidation(inv);
  const auto again = cache.cache_read(1, 5, true);
  CHECK(again.ver == 0);
  CHECK(cache.cache_read(2, 5, true).ver == 1);
}

TEST_CASE("invalidations evict only older entries") {
  BackendDb db({10, 5, 0}, {0.0, 1, 1, false, 1});
  EdgeCache cache({}, db);
  cache.put({3, 0, 3, {}});
  cache.handle_invalidation({3, 5});
  CHECK_FALSE(cache.cached_version(3).has_value());
  cache.put({3, 0, 5, {}});
  cache.handle_invalidation({3, 5});
  CHECK(cache.cached_version(3) == Version{5});
  cache.handle_invalidation({4, 2});
  CHECK_FALSE(cache.cached_version(4).has_value());
}

TEST_CASE("a fill older than a seen invalidation is not cached") {
  BackendDb db({10, 5, 0}, {0.0, 1, 1, false, 1});
  EdgeCache cache({}, db);
  cache.handle_invalidation({6, 3});  // newer than anything the database will return
  CHECK(cache.cache_read(1, 6, true).served_from == ServedFrom::kMiss);
  CHECK_FALSE(cache.cached_version(6).has_value());
  CHECK(cache.cache_read(2, 6, true).served_from == ServedFrom::kMiss);
}

TEST_CASE("ttl mode expires entries and never aborts") {
  StaleFixture f(Strategy::kAbort);
  EdgeCache ttl({CacheMode::kTtl, Strategy::kAbort, 10}, f.db);
  ttl.put(ObjectRecord{2, 0, 0, {}}, 0);
  CHECK_FALSE(ttl.cache_read(1, 1, false, 0).aborted);
  const auto stale = ttl.cache_read(1, 2, true, 9);
  CHECK_FALSE(stale.aborted);
  CHECK(stale.ver == 0);
  const auto fresh = ttl.cache_read(2, 2, true, 10);
  CHECK(fresh.served_from == ServedFrom::kMiss);
  CHECK(fresh.ver == 2);

  EdgeCache zero({CacheMode::kTtl, Strategy::kAbort, 0}, f.db);
  for (TxnId t = 1; t <= 20; ++t) zero.cache_read(t, 3, true, static_cast<Tick>(t));
  CHECK(zero.cache_stats().hits == 0);
  CHECK(zero.cache_stats().db_reads == 20);
}

TEST_CASE("unaware mode commits the inconsistent read") {
  StaleFixture f(Strategy::kAbort);
  EdgeCache unaware({CacheMode::kUnaware, Strategy::kAbort, kNoTtl}, f.db, &f.sink);
  unaware.put(ObjectRecord{2, 0, 0, {}});
  unaware.cache_read(1, 1, false);
  CHECK_FALSE(unaware.cache_read(1, 2, true).aborted);
  CHECK(unaware.cache_stats().aborts == 0);
}

TEST_CASE("unknown keys are rejected") {
  BackendDb db({4, 5, 0}, {0.0, 1, 1, false, 1});
  EdgeCache cache({}, db);
  CHECK_THROWS_AS(cache.cache_read(1, 4, true), std::out_of_range);
}

TEST_CASE("concurrent readers, writers and invalidations keep the update graph acyclic") {
  ConsistencyMonitor monitor;
  BackendDb db({40, 5, 0}, {0.2, 0, 3, false, 8}, &monitor);
  EdgeCache cache({CacheMode::kTCache, Strategy::kEvict, kNoTtl}, db, &monitor);
  std::atomic<bool> stop{false};
  std::atomic<Tick> clock{0};
  std::thread writer([&] {
    std::mt19937_64 rng(1);
    std::uniform_int_distribution<int> cluster(0, 7), off(0, 4);
    for (TxnId t = 1; t <= 3000; ++t) {
      const auto base = static_cast<ObjectId>(cluster(rng) * 5);
      std::vector<ObjectId> keys{base + static_cast<ObjectId>(off(rng)), base + static_cast<ObjectId>(off(rng))};
      db.execute_update_txn({t, keys, keys}, {}, clock.fetch_add(1));
    }
    stop = true;
  });
  std::thread pump([&] {
    while (!stop.load()) {
      for (const auto& inv : db.drain_channel(clock.load())) cache.handle_invalidation(inv);
    }
  });
  std::vector<std::thread> readers;
  for (int w = 0; w < 3; ++w) {
    readers.emplace_back([&, w] {
      std::mt19937_64 rng(100 + w);
      std::uniform_int_distribution<int> cluster(0, 7), off(0, 4);
      for (TxnId i = 0; i < 2000; ++i) {
        const TxnId id = static_cast<TxnId>(w) * 100000 + i;
        const auto base = static_cast<ObjectId>(cluster(rng) * 5);
        for (int r = 0; r < 3; ++r) {
          const auto res = cache.cache_read(id, base + static_cast<ObjectId>(off(rng)), r == 2, clock.load());
          if (res.aborted) {
            if (r != 2) cache.cache_read(id, base, true, clock.load());
            break;
          }
        }
      }
    });
  }
  writer.join();
  for (auto& t : readers) t.join();
  pump.join();
  monitor.flush();
  const auto rep = monitor.report(1000);
  CHECK(rep.read_only_total() == 6000);
  CHECK(monitor.update_graph_acyclic());
  CHECK(cache.active_transactions() == 0);
}
