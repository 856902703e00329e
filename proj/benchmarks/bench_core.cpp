#include <benchmark/benchmark.h>

#include <vector>

#include "tcache/harness.hpp"

using namespace tcache;

namespace {

std::vector<AccessTuple> tuples(std::size_t n, std::size_t bound, ObjectId base) {
  std::vector<AccessTuple> out;
  for (std::size_t i = 0; i < n; ++i) {
    std::vector<DependencyEntry> deps;
    for (std::size_t j = 0; j < bound; ++j) {
      deps.push_back({static_cast<ObjectId>(base + 100 + i * bound + j), static_cast<Version>(j + 1)});
    }
    out.push_back({static_cast<ObjectId>(base + i), static_cast<Version>(i + 1), DependencyList::from_recency_order(deps, bound)});
  }
  return out;
}

void BM_MergeAndPrune(benchmark::State& state) {
  const auto k = static_cast<std::size_t>(state.range(0));
  const auto reads = tuples(5, k, 0);
  const auto writes = tuples(5, k, 0);
  for (auto _ : state) {
    auto full = merge_full_dep_list(reads, writes);
    benchmark::DoNotOptimize(prune_lru(full, k));
  }
}
BENCHMARK(BM_MergeAndPrune)->Arg(1)->Arg(3)->Arg(5)->Arg(20);

void BM_CheckConsistency(benchmark::State& state) {
  const auto k = static_cast<std::size_t>(state.range(0));
  TxnRecord txn;
  txn.reads = tuples(4, k, 0);
  const auto curr = tuples(1, k, 50).front();
  for (auto _ : state) benchmark::DoNotOptimize(check_consistency(txn, curr));
}
BENCHMARK(BM_CheckConsistency)->Arg(1)->Arg(5)->Arg(20);

void BM_DbCommit(benchmark::State& state) {
  BackendDb db(DbConfig{2000, static_cast<std::size_t>(state.range(0)), 0}, ChannelConfig{});
  Rng rng(1);
  std::uniform_int_distribution<ObjectId> key(0, 1999);
  TxnId id = 0;
  Tick now = 0;
  for (auto _ : state) {
    std::vector<ObjectId> keys{key(rng), key(rng), key(rng), key(rng), key(rng)};
    benchmark::DoNotOptimize(db.execute_update_txn({++id, keys, keys}, {}, now));
    if (++now % 64 == 0) benchmark::DoNotOptimize(db.drain_channel(now + 100));
  }
}
BENCHMARK(BM_DbCommit)->Arg(0)->Arg(5);

void BM_CacheReadTxn(benchmark::State& state) {
  BackendDb db(DbConfig{2000, 5, 0}, ChannelConfig{});
  EdgeCache cache(CacheConfig{}, db);
  SyntheticSpec spec;
  spec.mode = AccessMode::kPareto;
  Rng rng(2);
  TxnId id = 0;
  for (auto _ : state) {
    const auto req = gen_synthetic_txn(spec, rng);
    ++id;
    for (std::size_t i = 0; i < req.keys.size(); ++i) {
      if (cache.cache_read(id, req.keys[i], i + 1 == req.keys.size()).aborted) break;
    }
  }
}
BENCHMARK(BM_CacheReadTxn);

void BM_SimulatedSecond(benchmark::State& state) {
  ExperimentConfig cfg;
  SyntheticSpec s;
  s.mode = AccessMode::kPareto;
  cfg.workload = s;
  cfg.duration_s = 10;
  cfg.warmup_s = 0;
  for (auto _ : state) benchmark::DoNotOptimize(run_experiment(cfg));
  state.counters["sim_s_per_s"] = benchmark::Counter(10.0 * static_cast<double>(state.iterations()), benchmark::Counter::kIsRate);
}
BENCHMARK(BM_SimulatedSecond)->Unit(benchmark::kMillisecond);

}  // namespace

BENCHMARK_MAIN();
