#pragma once

#include <cstdint>
#include <string>
#include <string_view>
#include <variant>

#include <nlohmann/json.hpp>

#include "tcache/edge_cache.hpp"
#include "tcache/lossy_channel.hpp"
#include "tcache/workloads.hpp"

namespace tcache {

struct GraphSpec {
  std::string edge_list;
  std::size_t target_nodes = 1000;
  double restart_prob = 0.15;
  /// Steps after the start node; a transaction accesses walk_len + 1 objects.
  std::size_t walk_len = 4;
};

enum class ExecutionMode { kDeterministic, kStress };

struct ExperimentConfig {
  std::string name = "run";
  std::uint64_t seed = 1;

  std::size_t dependency_bound = 5;
  CacheMode cache_mode = CacheMode::kTCache;
  Strategy strategy = Strategy::kAbort;
  Tick ttl = kNoTtl;

  double drop_prob = 0.2;
  Tick delay_min = 1;
  Tick delay_max = 10;
  bool reorder = false;

  std::variant<SyntheticSpec, GraphSpec> workload = SyntheticSpec{};

  double update_rate = 100.0;
  double read_rate = 500.0;
  /// Ticks between consecutive reads of one read-only transaction.
  Tick read_gap = 1;

  double duration_s = 60.0;
  /// Transactions completing before this are left out of the summary totals.
  double warmup_s = 5.0;
  /// Divides every workload timeline constant (drift period, formation time) and the duration.
  double time_compression = 1.0;
  Tick report_bucket = 1000;

  ExecutionMode execution = ExecutionMode::kDeterministic;
  std::size_t stress_threads = 4;

  /// Throws std::invalid_argument naming the offending field.
  void validate() const;

  Tick duration_ticks() const;
  Tick warmup_ticks() const;
  /// Workload spec with time compression applied.
  SyntheticSpec effective_synthetic() const;
};

nlohmann::json to_json(const ExperimentConfig& cfg);
/// Missing fields keep their defaults; unknown fields are rejected.
ExperimentConfig config_from_json(const nlohmann::json& j);
ExperimentConfig load_config(const std::string& path);

/// Applies "dotted.path=value" to a config document. The value is parsed as
/// JSON when possible and taken as a string otherwise.
void apply_override(nlohmann::json& doc, std::string_view assignment);

/// Version tag embedded into every artifact.
std::string_view code_version();

}  // namespace tcache
