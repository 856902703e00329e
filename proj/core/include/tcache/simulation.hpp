#pragma once

#include <cstdint>
#include <memory>
#include <string>

#include "tcache/backend_db.hpp"
#include "tcache/config.hpp"
#include "tcache/edge_cache.hpp"
#include "tcache/lossy_channel.hpp"
#include "tcache/monitor.hpp"
#include "tcache/workloads.hpp"

namespace tcache {

/// Produces transaction key sets for the client drivers.
class WorkloadSource {
 public:
  virtual ~WorkloadSource() = default;
  virtual TxnRequest next(TxnKind kind, Tick now, Rng& rng) const = 0;
  virtual std::size_t universe() const = 0;
};

class SyntheticSource final : public WorkloadSource {
 public:
  explicit SyntheticSource(SyntheticSpec spec);
  TxnRequest next(TxnKind kind, Tick now, Rng& rng) const override;
  std::size_t universe() const override { return spec_.universe; }

 private:
  SyntheticSpec spec_;
};

class GraphSource final : public WorkloadSource {
 public:
  GraphSource(Graph sampled, std::size_t walk_len);
  TxnRequest next(TxnKind kind, Tick now, Rng& rng) const override;
  std::size_t universe() const override { return graph_.num_nodes(); }
  const Graph& graph() const { return graph_; }

 private:
  Graph graph_;
  std::size_t walk_len_;
};

struct RunResult {
  ExperimentConfig config;
  /// Totals cover the measurement window (after warmup); the series covers the run.
  MonitorReport report;
  /// Counter deltas over the measurement window.
  CacheStats cache;
  DbStats db;
  ChannelStats channel;
  std::uint64_t updates_issued = 0;
  std::uint64_t reads_issued = 0;
  double measured_seconds = 0.0;
  bool update_graph_acyclic = true;

  double db_reads_per_s() const;
};

/// Sampled graph for a graph workload: the down-sample of the configured edge
/// list drawn with the config seed. `source` receives the loaded input graph.
SampledGraph sample_graph_workload(const ExperimentConfig& cfg, Graph* source = nullptr);

std::unique_ptr<WorkloadSource> make_workload(const ExperimentConfig& cfg);

/**
 * Wires database, channel, cache, monitor and clients and runs one experiment.
 *
 * Deterministic mode is a discrete-event simulation on a logical clock:
 * update and read-only transactions arrive at exactly their configured rates,
 * reads of one transaction are read_gap ticks apart, and pending
 * invalidations are delivered before every event. Identical configs give
 * identical results. Stress mode runs the same components from concurrent
 * threads; its results are statistical only.
 */
RunResult run_experiment(const ExperimentConfig& cfg);

/// Same, with a prebuilt workload (skips graph loading).
RunResult run_experiment(const ExperimentConfig& cfg, const WorkloadSource& workload);

}  // namespace tcache
