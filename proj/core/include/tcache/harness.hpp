#pragma once

#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include <nlohmann/json.hpp>

#include "tcache/simulation.hpp"

namespace tcache {

// ---------------------------------------------------------------------------
// Presets

struct PresetPoint {
  std::string sweep_value;
  RunResult result;
};

struct PresetResult {
  std::string name;
  /// Name of the swept parameter ("alpha", "dependency_bound", "t_s", ...).
  std::string axis;
  /// Time-series presets report the per-bucket series of their single run.
  bool time_series = false;
  std::vector<PresetPoint> points;
  /// Graph presets keep the sample and its source for the relabel map.
  std::optional<SampledGraph> sample;
  std::optional<Graph> source_graph;
};

/// Edge list used by graph presets unless overridden.
std::string default_graph_path();

std::vector<std::string> preset_names();

/// Base config document of a preset with `overrides` applied ("a.b=value").
/// Throws std::invalid_argument for an unknown preset.
nlohmann::json preset_base(std::string_view name, const std::vector<std::string>& overrides = {});

/// Sweep points of a preset, each a validated config.
std::vector<std::pair<std::string, ExperimentConfig>> preset_configs(std::string_view name,
                                                                     const std::vector<std::string>& overrides = {});

PresetResult run_preset(std::string_view name, const std::vector<std::string>& overrides = {});

// ---------------------------------------------------------------------------
// Outputs. CSVs are RFC 4180 (CRLF, header row).

void write_series_csv(const MonitorReport& report, std::ostream& out);
/// Sweep table, or the series for time-series presets.
void write_combined_csv(const PresetResult& preset, std::ostream& out);
/// Whitespace columns with a commented header carrying config and version.
void write_gnuplot(const PresetResult& preset, std::ostream& out);

nlohmann::json summary_json(const RunResult& r);
nlohmann::json summary_json(const PresetResult& p);

/// Writes <name>.csv, <name>.json, <name>.dat (and <name>_relabel.csv for graph
/// presets) into `dir`. Returns the written paths.
std::vector<std::filesystem::path> write_preset_outputs(const PresetResult& p, const std::filesystem::path& dir);
/// Writes <name>_series.csv, <name>.json and <name>.dat for a single run.
std::vector<std::filesystem::path> write_run_outputs(const RunResult& r, const std::filesystem::path& dir);

// ---------------------------------------------------------------------------
// Small-history verification against the exhaustive oracle

struct ValidateOptions {
  std::size_t trials = 10000;
  std::uint64_t seed = 1;
  std::size_t dependency_bound = kUnbounded;
  double drop_prob = 0.2;
  std::size_t max_universe = 12;
  /// Update plus read-only transactions per trial.
  std::size_t max_txns = 10;
  /// Failing trials are written here as replayable traces; empty disables.
  std::filesystem::path trace_dir;
};

struct ValidateResult {
  std::size_t trials = 0;
  std::uint64_t update_commits = 0;
  std::uint64_t read_only_committed = 0;
  std::uint64_t read_only_aborted = 0;
  /// Committed read-only transactions the oracle cannot serialize with the updates.
  std::uint64_t oracle_inconsistent = 0;
  /// Transactions (committed or aborted) where monitor and oracle disagree.
  std::uint64_t disagreements = 0;
  /// Trials whose committed read-only transactions cannot all be serialized together.
  std::uint64_t joint_failures = 0;
  std::vector<std::filesystem::path> traces;
  double seconds = 0.0;
};

/// Runs randomized tiny histories through database, channel and cache, then
/// checks every read-only transaction with brute_force_serializable and
/// against the monitor's classification.
ValidateResult validate_small(const ValidateOptions& opt);

/// Replays a trace written by validate_small; returns the same trial's result.
ValidateResult replay_trace(const std::filesystem::path& trace);

}  // namespace tcache
