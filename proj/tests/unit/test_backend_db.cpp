#include <doctest.h>

#include <map>
#include <random>
#include <set>
#include <stdexcept>
#include <thread>

#include "tcache/backend_db.hpp"
#include "tcache/monitor.hpp"

using namespace tcache;

namespace {

ChannelConfig lossless() { return {0.0, 1, 1, false, 1}; }

struct LoggedTxn {
  Version ver;
  std::vector<VersionedKey> reads;  // observed versions
  std::vector<ObjectId> writes;
};

// Recomputes o@v's dependencies from the serial commit log by walking
// read-from edges back through every transaction the writer depends on.
std::map<ObjectId, Version> replay_deps(const std::vector<LoggedTxn>& log, ObjectId o, Version v) {
  std::map<std::pair<ObjectId, Version>, std::size_t> writer;
  for (std::size_t i = 0; i < log.size(); ++i) {
    for (auto k : log[i].writes) writer[{k, log[i].ver}] = i;
  }
  std::map<ObjectId, Version> out;
  if (v == kInitialVersion) return out;
  std::vector<std::size_t> stack{writer.at({o, v})};
  std::set<std::size_t> seen;
  while (!stack.empty()) {
    const auto t = stack.back();
    stack.pop_back();
    if (!seen.insert(t).second) continue;
    auto offer = [&](ObjectId k, Version ver) {
      auto& slot = out[k];
      slot = std::max(slot, ver);
    };
    for (auto k : log[t].writes) offer(k, log[t].ver);
    for (const auto& r : log[t].reads) {
      offer(r.key, r.ver);
      if (r.ver != kInitialVersion) stack.push_back(writer.at({r.key, r.ver}));
    }
  }
  out.erase(o);
  return out;
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

}  // namespace

TEST_CASE("fresh database serves version 0 with empty dependencies") {
  BackendDb db({10, 5, 42}, lossless());
  const auto r = db.db_read_entry(3);
  CHECK(r.ver == 0);
  CHECK(r.value == 42);
  CHECK(r.deps.empty());
  CHECK_THROWS_AS(db.db_read_entry(10), std::out_of_range);
}

TEST_CASE("two-object first commit makes each depend on the other at version 1") {
  BackendDb db({10, 5, 0}, lossless());
  const auto rep = db.execute_update_txn({1, {1, 2}, {1, 2}});
  CHECK(rep.status == CommitStatus::kCommitted);
  CHECK(rep.version == 1);
  const auto o1 = db.db_read_entry(1), o2 = db.db_read_entry(2);
  CHECK(o1.ver == 1);
  CHECK(o2.ver == 1);
  CHECK(o1.deps.find(2) == Version{1});
  CHECK(o2.deps.find(1) == Version{1});
  CHECK_FALSE(o1.deps.find(1).has_value());
}

TEST_CASE("a commit inherits the dependencies of every accessed object") {
  BackendDb db({10, kUnbounded, 0}, lossless());
  db.execute_update_txn({1, {2, 3, 4}, {2, 3, 4}});  // o2 depends on o3, o4 at 1
  db.execute_update_txn({2, {1, 5}, {1, 5}});        // o1 depends on o5 at 2
  db.execute_update_txn({3, {1, 2}, {1, 2}});
  const auto o1 = db.db_read_entry(1);
  CHECK(o1.ver == 3);
  std::set<std::pair<ObjectId, Version>> got;
  for (const auto& e : o1.deps) got.insert({e.key, e.ver});
  CHECK(got == std::set<std::pair<ObjectId, Version>>{{2, 3}, {3, 1}, {4, 1}, {5, 2}});
}

TEST_CASE("dependency lists respect the configured bound") {
  BackendDb db({20, 2, 0}, lossless());
  db.execute_update_txn({1, {0, 1, 2, 3, 4}, {0, 1, 2, 3, 4}});
  for (ObjectId k = 0; k < 5; ++k) CHECK(db.db_read_entry(k).deps.size() == 2);
}

TEST_CASE("replaying the commit log reproduces every unbounded dependency set") {
  BackendDb db({50, kUnbounded, 0}, lossless());
  std::mt19937_64 rng(17);
  std::uniform_int_distribution<int> nkeys(1, 5), key(0, 49), ro(0, 3);
  std::vector<LoggedTxn> log;
  for (TxnId t = 1; t <= 1000; ++t) {
    std::vector<ObjectId> reads, writes;
    const int n = nkeys(rng);
    for (int i = 0; i < n; ++i) {
      const auto k = static_cast<ObjectId>(key(rng));
      reads.push_back(k);
      if (ro(rng) != 0) writes.push_back(k);
    }
    if (writes.empty()) writes.push_back(reads.front());
    const auto rep = db.execute_update_txn({t, reads, writes});
    log.push_back({rep.version, rep.reads, writes});
    if (t % 100 == 0) {
      for (ObjectId o = 0; o < 50; ++o) {
        const auto rec = db.db_read_entry(o);
        std::map<ObjectId, Version> stored;
        for (const auto& e : rec.deps) stored[e.key] = e.ver;
        CHECK(stored == replay_deps(log, o, rec.ver));
      }
    }
  }
}

TEST_CASE("every written key produces one invalidation at the commit version") {
  BackendDb db({10, 5, 0}, lossless());
  db.execute_update_txn({1, {1, 2}, {1, 2}}, {}, 0);
  db.execute_update_txn({2, {3}, {3}}, {}, 0);
  const auto got = db.drain_channel(100);
  REQUIRE(got.size() == 3);
  CHECK(got[0].key == 1);
  CHECK(got[0].ver == 1);
  CHECK(got[1].key == 2);
  CHECK(got[2].key == 3);
  CHECK(got[2].ver == 2);
}

TEST_CASE("explicit values are stored, otherwise the value is the version") {
  BackendDb db({10, 5, 0}, lossless());
  const Value vals[] = {77};
  db.execute_update_txn({1, {4}, {4}}, vals);
  CHECK(db.db_read_entry(4).value == 77);
  db.execute_update_txn({2, {4}, {4}});
  CHECK(db.db_read_entry(4).value == 2);
}

TEST_CASE("history events carry reads and the commit version") {
  Collect sink;
  BackendDb db({10, 5, 0}, lossless(), &sink);
  db.execute_update_txn({7, {1, 2}, {2}}, {}, 33);
  REQUIRE(sink.events.size() == 1);
  const auto& e = sink.events[0];
  CHECK(e.txn_id == 7);
  CHECK(e.kind == TxnKind::kUpdate);
  CHECK(e.timestamp == 33);
  CHECK(e.read_set.size() == 2);
  REQUIRE(e.write_set.size() == 1);
  CHECK(e.write_set[0] == VersionedKey{2, 1});
}

TEST_CASE("concurrent update transactions stay serializable") {
  ConsistencyMonitor monitor;
  BackendDb db({30, 5, 0}, {0.2, 1, 10, false, 3}, &monitor);
  std::vector<std::thread> threads;
  std::atomic<bool> bad_read{false};
  for (int w = 0; w < 4; ++w) {
    threads.emplace_back([&, w] {
      std::mt19937_64 rng(w);
      std::uniform_int_distribution<int> key(0, 29);
      for (int i = 0; i < 2000; ++i) {
        std::vector<ObjectId> keys{static_cast<ObjectId>(key(rng)), static_cast<ObjectId>(key(rng)),
                                   static_cast<ObjectId>(key(rng))};
        db.execute_update_txn({static_cast<TxnId>(w * 10000 + i), keys, keys});
        const auto r = db.db_read_entry(keys[0]);
        if (r.ver > db.last_version() || r.ver == kInitialVersion) bad_read = true;
      }
    });
  }
  for (auto& t : threads) t.join();
  CHECK_FALSE(bad_read.load());
  CHECK(db.last_version() == 8000);
  CHECK(db.stats().commits == 8000);
  CHECK(monitor.update_graph_acyclic());
}

TEST_CASE("keys outside the universe are rejected") {
  BackendDb db({4, 5, 0}, lossless());
  CHECK_THROWS_AS(db.execute_update_txn({1, {1, 9}, {1}}), std::out_of_range);
  CHECK(db.last_version() == 0);
}
