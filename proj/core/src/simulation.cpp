#include "tcache/simulation.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <queue>
#include <thread>
#include <vector>

namespace tcache {

namespace {

enum Stream : std::uint64_t { kSampling = 0, kUpdates = 1, kReads = 2, kChannel = 3 };

std::uint64_t stream_seed(std::uint64_t seed, std::uint64_t stream) {
  std::seed_seq seq{static_cast<std::uint32_t>(seed), static_cast<std::uint32_t>(seed >> 32),
                    static_cast<std::uint32_t>(stream)};
  std::uint64_t out[1];
  seq.generate(reinterpret_cast<std::uint32_t*>(out), reinterpret_cast<std::uint32_t*>(out) + 2);
  return out[0];
}

/// Arrival tick of the i-th transaction of a fixed-rate client.
Tick arrival(std::uint64_t i, double rate) {
  return static_cast<Tick>(std::floor(static_cast<double>(i) * kTicksPerSecond / rate));
}

std::uint64_t arrivals_before(Tick end, double rate) {
  if (rate <= 0.0) return 0;
  std::uint64_t n = static_cast<std::uint64_t>(std::ceil(static_cast<double>(end) * rate / kTicksPerSecond));
  while (n > 0 && arrival(n - 1, rate) >= end) --n;
  while (arrival(n, rate) < end) ++n;
  return n;
}

CacheStats minus(const CacheStats& a, const CacheStats& b) {
  return {a.hits - b.hits,       a.misses - b.misses,     a.aborts - b.aborts,
          a.evictions - b.evictions, a.db_reads - b.db_reads, a.commits - b.commits};
}

DbStats minus(const DbStats& a, const DbStats& b) {
  return {a.commits - b.commits, a.aborts - b.aborts, a.entry_reads - b.entry_reads, a.txn_reads - b.txn_reads};
}

UpdateTxn as_update(TxnId id, const TxnRequest& req) {
  // Update transactions read all their objects, then write all of them.
  return UpdateTxn{id, req.keys, req.keys};
}

struct Components {
  ConsistencyMonitor monitor;
  BackendDb db;
  EdgeCache cache;

  Components(const ExperimentConfig& cfg, std::size_t universe)
      : db(DbConfig{universe, cfg.dependency_bound, 0},
           ChannelConfig{cfg.drop_prob, cfg.delay_min, cfg.delay_max, cfg.reorder, stream_seed(cfg.seed, kChannel)},
           &monitor),
        cache(CacheConfig{cfg.cache_mode, cfg.strategy, cfg.ttl}, db, &monitor) {}

  void deliver(Tick now) {
    for (const auto& inv : db.drain_channel(now)) cache.handle_invalidation(inv);
  }
};

struct ReadOnlyClientTxn {
  TxnId id;
  std::vector<ObjectId> keys;
};

void run_deterministic(const ExperimentConfig& cfg, const WorkloadSource& workload, Components& c, RunResult& out) {
  const Tick end = cfg.duration_ticks();
  const Tick warmup = std::min(cfg.warmup_ticks(), end);
  const std::uint64_t total_updates = arrivals_before(end, cfg.update_rate);
  const std::uint64_t total_reads = arrivals_before(end, cfg.read_rate);

  Rng update_rng(stream_seed(cfg.seed, kUpdates));
  Rng read_rng(stream_seed(cfg.seed, kReads));

  enum class Kind { kUpdate, kReadIssue, kReadStep };
  struct Event {
    Tick at;
    std::uint64_t seq;
    Kind kind;
    std::size_t txn;  // index into active read-only txns
    std::size_t pos;
    bool operator>(const Event& o) const { return at != o.at ? at > o.at : seq > o.seq; }
  };
  std::priority_queue<Event, std::vector<Event>, std::greater<>> queue;
  std::uint64_t seq = 0;
  std::uint64_t next_update = 0;
  std::uint64_t next_read = 0;
  if (total_updates > 0) queue.push({arrival(0, cfg.update_rate), seq++, Kind::kUpdate, 0, 0});
  if (total_reads > 0) queue.push({arrival(0, cfg.read_rate), seq++, Kind::kReadIssue, 0, 0});

  std::vector<ReadOnlyClientTxn> active;
  std::vector<std::size_t> free_slots;
  CacheStats cache_at_warmup;
  DbStats db_at_warmup;
  bool warm = warmup == 0;

  while (!queue.empty()) {
    const Event ev = queue.top();
    queue.pop();
    if (!warm && ev.at >= warmup) {
      cache_at_warmup = c.cache.cache_stats();
      db_at_warmup = c.db.stats();
      warm = true;
    }
    c.deliver(ev.at);

    switch (ev.kind) {
      case Kind::kUpdate: {
        const TxnRequest req = workload.next(TxnKind::kUpdate, ev.at, update_rng);
        c.db.execute_update_txn(as_update(next_update + 1, req), {}, ev.at);
        if (++next_update < total_updates) {
          queue.push({arrival(next_update, cfg.update_rate), seq++, Kind::kUpdate, 0, 0});
        }
        break;
      }
      case Kind::kReadIssue: {
        TxnRequest req = workload.next(TxnKind::kReadOnly, ev.at, read_rng);
        std::size_t slot;
        if (free_slots.empty()) {
          slot = active.size();
          active.push_back({});
        } else {
          slot = free_slots.back();
          free_slots.pop_back();
        }
        active[slot] = ReadOnlyClientTxn{next_read + 1, std::move(req.keys)};
        queue.push({ev.at, seq++, Kind::kReadStep, slot, 0});
        if (++next_read < total_reads) queue.push({arrival(next_read, cfg.read_rate), seq++, Kind::kReadIssue, 0, 0});
        break;
      }
      case Kind::kReadStep: {
        const auto& txn = active[ev.txn];
        const bool last = ev.pos + 1 == txn.keys.size();
        const auto result = c.cache.cache_read(txn.id, txn.keys[ev.pos], last, ev.at);
        if (result.aborted && !last) {
          // Tell the cache the client gave up so the record is collected.
          c.cache.cache_read(txn.id, txn.keys.back(), true, ev.at);
        }
        if (last || result.aborted) {
          free_slots.push_back(ev.txn);
        } else {
          queue.push({ev.at + cfg.read_gap, seq++, Kind::kReadStep, ev.txn, ev.pos + 1});
        }
        break;
      }
    }
  }
  if (!warm) {
    cache_at_warmup = c.cache.cache_stats();
    db_at_warmup = c.db.stats();
  }
  out.updates_issued = next_update;
  out.reads_issued = next_read;
  out.cache = minus(c.cache.cache_stats(), cache_at_warmup);
  out.db = minus(c.db.stats(), db_at_warmup);
  out.measured_seconds = static_cast<double>(end - warmup) / kTicksPerSecond;
}

void run_stress(const ExperimentConfig& cfg, const WorkloadSource& workload, Components& c, RunResult& out) {
  const Tick end = cfg.duration_ticks();
  const std::uint64_t total_updates = arrivals_before(end, cfg.update_rate);
  const std::uint64_t total_reads = arrivals_before(end, cfg.read_rate);
  const std::uint64_t total_ops = std::max<std::uint64_t>(1, total_updates + total_reads);

  std::atomic<std::uint64_t> ops{0};
  std::atomic<std::uint64_t> next_update{0};
  std::atomic<std::uint64_t> next_read{0};
  std::atomic<bool> done{false};
  auto now = [&] { return static_cast<Tick>(ops.load() * static_cast<std::uint64_t>(end) / total_ops); };

  std::vector<std::thread> threads;
  threads.emplace_back([&] {
    Rng rng(stream_seed(cfg.seed, kUpdates));
    for (std::uint64_t i; (i = next_update.fetch_add(1)) < total_updates;) {
      const Tick t = now();
      c.db.execute_update_txn(as_update(i + 1, workload.next(TxnKind::kUpdate, t, rng)), {}, t);
      ops.fetch_add(1);
    }
  });
  for (std::size_t w = 0; w < cfg.stress_threads; ++w) {
    threads.emplace_back([&, w] {
      Rng rng(stream_seed(cfg.seed, kReads + 16 * (w + 1)));
      for (std::uint64_t i; (i = next_read.fetch_add(1)) < total_reads;) {
        const auto req = workload.next(TxnKind::kReadOnly, now(), rng);
        for (std::size_t pos = 0; pos < req.keys.size(); ++pos) {
          const bool last = pos + 1 == req.keys.size();
          const auto r = c.cache.cache_read(i + 1, req.keys[pos], last, now());
          if (r.aborted) {
            if (!last) c.cache.cache_read(i + 1, req.keys.back(), true, now());
            break;
          }
        }
        ops.fetch_add(1);
      }
    });
  }
  std::thread pump([&] {
    while (!done.load()) {
      c.deliver(now() + cfg.delay_max);
      std::this_thread::yield();
    }
  });
  for (auto& t : threads) t.join();
  done = true;
  pump.join();

  out.updates_issued = std::min(next_update.load(), total_updates);
  out.reads_issued = std::min(next_read.load(), total_reads);
  out.cache = c.cache.cache_stats();
  out.db = c.db.stats();
  out.measured_seconds = static_cast<double>(end) / kTicksPerSecond;
}

}  // namespace

SyntheticSource::SyntheticSource(SyntheticSpec spec) : spec_(std::move(spec)) { spec_.validate(); }

TxnRequest SyntheticSource::next(TxnKind kind, Tick now, Rng& rng) const {
  return gen_synthetic_txn(spec_, rng, kind, now);
}

GraphSource::GraphSource(Graph sampled, std::size_t walk_len) : graph_(std::move(sampled)), walk_len_(walk_len) {}

TxnRequest GraphSource::next(TxnKind kind, Tick now, Rng& rng) const {
  return gen_graph_txn(graph_, walk_len_, rng, kind, now);
}

double RunResult::db_reads_per_s() const {
  return measured_seconds <= 0.0 ? 0.0 : static_cast<double>(cache.db_reads) / measured_seconds;
}

SampledGraph sample_graph_workload(const ExperimentConfig& cfg, Graph* source) {
  const auto& spec = std::get<GraphSpec>(cfg.workload);
  Graph g = load_edge_list(spec.edge_list);
  Rng rng(stream_seed(cfg.seed, kSampling));
  auto sampled = random_walk_downsample(g, std::min(spec.target_nodes, g.num_nodes()), spec.restart_prob, rng);
  if (source != nullptr) *source = std::move(g);
  return sampled;
}

std::unique_ptr<WorkloadSource> make_workload(const ExperimentConfig& cfg) {
  if (std::holds_alternative<SyntheticSpec>(cfg.workload)) {
    return std::make_unique<SyntheticSource>(cfg.effective_synthetic());
  }
  return std::make_unique<GraphSource>(sample_graph_workload(cfg).graph, std::get<GraphSpec>(cfg.workload).walk_len);
}

RunResult run_experiment(const ExperimentConfig& cfg) {
  cfg.validate();
  const auto workload = make_workload(cfg);
  return run_experiment(cfg, *workload);
}

RunResult run_experiment(const ExperimentConfig& cfg, const WorkloadSource& workload) {
  cfg.validate();
  Components c(cfg, workload.universe());
  RunResult out;
  out.config = cfg;
  if (cfg.execution == ExecutionMode::kDeterministic) {
    run_deterministic(cfg, workload, c, out);
  } else {
    run_stress(cfg, workload, c, out);
  }
  out.channel = c.db.channel().stats();
  const Tick since = cfg.execution == ExecutionMode::kDeterministic ? std::min(cfg.warmup_ticks(), cfg.duration_ticks()) : 0;
  out.report = c.monitor.report(cfg.report_bucket, since);
  out.update_graph_acyclic = c.monitor.update_graph_acyclic();
  return out;
}

}  // namespace tcache
