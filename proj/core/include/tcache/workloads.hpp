#pragma once

#include <cstdint>
#include <iosfwd>
#include <optional>
#include <random>
#include <string>
#include <string_view>
#include <vector>

#include "tcache/history.hpp"
#include "tcache/types.hpp"

namespace tcache {

using Rng = std::mt19937_64;

/// Pareto law with shape `alpha` truncated to [low, high].
class BoundedPareto {
 public:
  BoundedPareto(double alpha, double low, double high);

  double operator()(Rng& rng) const;
  double cdf(double x) const;

  double alpha() const { return alpha_; }
  double low() const { return low_; }
  double high() const { return high_; }

 private:
  double alpha_;
  double low_;
  double high_;
  double tail_;  // (low/high)^alpha
};

enum class AccessMode { kPerfect, kPareto, kUniform };

std::string_view to_string(AccessMode m);
AccessMode parse_access_mode(std::string_view s);

struct DriftSpec {
  Tick period = 180 * kTicksPerSecond;
  std::int64_t shift = 1;
};

/// Access mode switches from `before` to the workload's `mode` at switch_time.
struct FormationSpec {
  Tick switch_time = 58 * kTicksPerSecond;
  AccessMode before = AccessMode::kUniform;
};

struct SyntheticSpec {
  std::size_t universe = 2000;
  std::size_t cluster_size = 5;
  AccessMode mode = AccessMode::kPerfect;
  double alpha = 1.0;
  std::size_t accesses = 5;
  std::optional<DriftSpec> drift;
  std::optional<FormationSpec> formation;

  void validate() const;
};

struct TxnRequest {
  TxnKind kind = TxnKind::kReadOnly;
  std::vector<ObjectId> keys;
  Tick issue_time = 0;
};

/// Offset added to every cluster boundary at `now` (0 without drift).
std::size_t apply_drift(const SyntheticSpec& spec, Tick now);

/// Access mode in force at `now`.
AccessMode effective_mode(const SyntheticSpec& spec, Tick now);

/// Draws one transaction's key multiset. Duplicates are allowed.
TxnRequest gen_synthetic_txn(const SyntheticSpec& spec, Rng& rng, TxnKind kind = TxnKind::kReadOnly, Tick now = 0);

// ---------------------------------------------------------------------------
// Graphs

/// Undirected simple graph with dense node ids and the original labels.
struct Graph {
  std::vector<std::vector<ObjectId>> adj;
  std::vector<std::uint64_t> labels;

  std::size_t num_nodes() const { return adj.size(); }
  std::size_t num_edges() const;
  std::size_t degree(ObjectId n) const { return adj[n].size(); }
  bool has_edge(ObjectId a, ObjectId b) const;
};

/// Builds a graph from an edge list over arbitrary labels. Self-loops are
/// dropped, duplicates collapsed, direction ignored.
Graph graph_from_edges(const std::vector<std::pair<std::uint64_t, std::uint64_t>>& edges);

/// SNAP-style text: "u v" per line, '#' comments. Throws std::runtime_error
/// naming the line on parse failure, and on an empty graph.
Graph load_edge_list(std::istream& in);
Graph load_edge_list(const std::string& path);
void write_edge_list(const Graph& g, std::ostream& out, std::string_view header = {});

struct SampledGraph {
  Graph graph;
  /// original[new_id] = node id in the source graph.
  std::vector<ObjectId> original;
};

/// Restart random walk from a uniform start; keeps the first `target` distinct
/// nodes visited and the induced edges, relabeled in visit order. Restarts from
/// a uniform unvisited node after 100 * target steps without discovering one.
SampledGraph random_walk_downsample(const Graph& g, std::size_t target, double restart_prob, Rng& rng);

/// Induced subgraph on `target` uniformly chosen nodes. Baseline for sampling quality.
SampledGraph uniform_node_sample(const Graph& g, std::size_t target, Rng& rng);

/// Mean local clustering coefficient (nodes with degree < 2 contribute 0).
double average_clustering(const Graph& g);

/// Uniform start node followed by `walk_len` uniform-neighbor steps.
TxnRequest gen_graph_txn(const Graph& g, std::size_t walk_len, Rng& rng, TxnKind kind = TxnKind::kReadOnly,
                         Tick now = 0);

/// Planted-community graph: communities of [min_size, max_size] nodes, each
/// intra pair linked with probability p_in, plus `bridges_per_node` random
/// inter-community edges per node on average.
Graph make_clustered_graph(std::size_t nodes, std::size_t min_size, std::size_t max_size, double p_in,
                           double bridges_per_node, Rng& rng);

void write_relabel_csv(const SampledGraph& s, const Graph& source, std::ostream& out);

}  // namespace tcache
