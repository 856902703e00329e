#pragma once

#include <cstdint>
#include <deque>
#include <mutex>
#include <optional>
#include <span>
#include <string>
#include <unordered_map>
#include <vector>

#include "tcache/history.hpp"
#include "tcache/types.hpp"

namespace tcache {

enum class Classification { kConsistent, kInconsistent };

/**
 * Multi-version serialization graph over update transactions.
 *
 * Nodes are update transactions in arrival (commit) order. For every key the
 * graph keeps the version order of its writers, and adds ww edges
 * (writer -> next writer), wr edges (writer -> reader of that version) and
 * rw edges (reader -> next writer).
 */
class SerializationGraph {
 public:
  using Node = std::uint32_t;

  struct Edge {
    TxnId from;
    TxnId to;
    friend bool operator==(const Edge&, const Edge&) = default;
  };

  /// Adds a committed update. Throws std::logic_error if its versions do not
  /// fit the per-key history or if it closes a cycle.
  Node add_update(const HistoryEvent& e);

  /// True iff a read-only transaction with these reads cannot be placed in
  /// any serialization of the recorded updates. Throws std::logic_error for a
  /// version that was never written.
  bool closes_cycle(std::span<const VersionedKey> reads) const;

  /// wr sources and rw targets a read-only transaction with `reads` would get.
  std::vector<Edge> read_only_edges(TxnId reader, std::span<const VersionedKey> reads) const;

  std::vector<Edge> edges() const;
  bool acyclic() const;
  std::size_t size() const { return txn_ids_.size(); }
  Version last_version() const { return last_version_; }

 private:
  struct KeyHistory {
    /// (version, writer node), ascending by version.
    std::vector<std::pair<Version, Node>> writers;
    /// Update readers of the latest version, waiting for the next writer.
    std::vector<Node> current_readers;
  };

  /// Writer of key@ver; nullopt for the initial version. Throws if unknown.
  std::optional<Node> writer_of(ObjectId key, Version ver) const;
  std::optional<Node> next_writer_after(ObjectId key, Version ver) const;
  void add_edge(Node from, Node to);
  bool reachable(std::span<const Node> sources, std::span<const Node> targets) const;

  std::vector<TxnId> txn_ids_;
  std::vector<std::vector<Node>> out_;
  std::unordered_map<ObjectId, KeyHistory> keys_;
  Version last_version_ = kInitialVersion;
  bool forward_only_ = true;

  mutable std::vector<std::uint32_t> mark_;
  mutable std::uint32_t epoch_ = 0;
};

/// One time bucket of read-only outcomes.
struct BucketRow {
  Tick start = 0;
  std::uint64_t committed_consistent = 0;
  std::uint64_t committed_inconsistent = 0;
  std::uint64_t aborted = 0;

  std::uint64_t total() const { return committed_consistent + committed_inconsistent + aborted; }
  double consistent_pct() const;
  double inconsistent_pct() const;
  double abort_pct() const;
};

struct MonitorReport {
  std::uint64_t committed_consistent = 0;
  std::uint64_t committed_inconsistent = 0;
  std::uint64_t aborted_would_be_consistent = 0;
  std::uint64_t aborted_would_be_inconsistent = 0;
  std::uint64_t update_commits = 0;
  Tick window = 0;
  std::vector<BucketRow> series;

  std::uint64_t committed() const { return committed_consistent + committed_inconsistent; }
  std::uint64_t aborted() const { return aborted_would_be_consistent + aborted_would_be_inconsistent; }
  std::uint64_t read_only_total() const { return committed() + aborted(); }

  /// Inconsistent commits out of all commits.
  double inconsistent_commit_fraction() const;
  /// Inconsistent commits out of all read-only transactions (the middle band).
  double inconsistent_band() const;
  double abort_band() const;
  double consistent_band() const;
  /// Detected inconsistencies out of all inconsistencies (detected or not).
  double detection_ratio() const;
};

struct MonitorConfig {
  /// Extra update versions to wait for beyond the largest version a read-only
  /// transaction observed before classifying it.
  Version horizon = 0;
};

/**
 * Experiment-only observer. Records every completed transaction, maintains
 * the update serialization graph and classifies each read-only transaction
 * (committed or aborted) by adding it to that graph and testing for a cycle.
 *
 * Thread-safe; events may come from the database and the cache concurrently.
 * Update events must arrive in commit order.
 */
class ConsistencyMonitor final : public HistorySink {
 public:
  explicit ConsistencyMonitor(MonitorConfig cfg = {}) : cfg_(cfg) {}

  void record_event(const HistoryEvent& e) override;

  /// Most recent committed read-only transaction with this id.
  Classification classify_read_only(TxnId txn_id);
  /// Most recent aborted read-only transaction with this id; kConsistent means
  /// the abort was unnecessary.
  Classification classify_abort(TxnId txn_id);

  /// Classifies everything still waiting on its horizon.
  void flush();
  /// Totals count read-only transactions stamped at or after `since`; the
  /// series always covers the whole run.
  MonitorReport report(Tick window, Tick since = 0);

  bool update_graph_acyclic() const;
  std::vector<SerializationGraph::Edge> update_edges() const;
  /// Edges the most recent read-only transaction with this id added to the graph.
  std::vector<SerializationGraph::Edge> read_only_edges(TxnId txn_id);
  std::size_t pending() const;

 private:
  struct ReadOnlyTxn {
    HistoryEvent event;
    Version max_read = kInitialVersion;
    bool classified = false;
    Classification cls = Classification::kConsistent;
  };

  void try_classify_pending();
  ReadOnlyTxn& latest(TxnId txn_id, TxnStatus status);

  MonitorConfig cfg_;
  mutable std::mutex mu_;
  SerializationGraph graph_;
  std::vector<ReadOnlyTxn> read_only_;
  std::deque<std::size_t> waiting_;
  std::unordered_map<TxnId, std::size_t> last_committed_;
  std::unordered_map<TxnId, std::size_t> last_aborted_;
  std::uint64_t update_commits_ = 0;
};

/**
 * Exhaustive oracle: true iff some total order of all committed updates in
 * `history` plus all `candidates` lets every transaction read exactly the
 * latest preceding write of each key it read. Refuses (std::length_error)
 * beyond `max_txns` transactions.
 */
bool brute_force_serializable(std::span<const HistoryEvent> history, std::span<const HistoryEvent> candidates,
                              std::size_t max_txns = 10);

std::string to_string(Classification c);

}  // namespace tcache
