#include "tcache/monitor.hpp"

#include <algorithm>
#include <map>
#include <set>
#include <stdexcept>
#include <string>

namespace tcache {

std::string to_string(Classification c) {
  return c == Classification::kConsistent ? "consistent" : "inconsistent";
}

// ---------------------------------------------------------------------------
// SerializationGraph

std::optional<SerializationGraph::Node> SerializationGraph::writer_of(ObjectId key, Version ver) const {
  if (ver == kInitialVersion) return std::nullopt;
  auto it = keys_.find(key);
  if (it != keys_.end()) {
    const auto& w = it->second.writers;
    auto pos = std::lower_bound(w.begin(), w.end(), std::make_pair(ver, Node{0}));
    if (pos != w.end() && pos->first == ver) return pos->second;
  }
  throw std::logic_error("history references object " + std::to_string(key) + " at version " +
                         std::to_string(ver) + " which no recorded update wrote");
}

std::optional<SerializationGraph::Node> SerializationGraph::next_writer_after(ObjectId key, Version ver) const {
  auto it = keys_.find(key);
  if (it == keys_.end()) return std::nullopt;
  const auto& w = it->second.writers;
  auto pos = std::upper_bound(w.begin(), w.end(), ver,
                              [](Version v, const std::pair<Version, Node>& p) { return v < p.first; });
  if (pos == w.end()) return std::nullopt;
  return pos->second;
}

void SerializationGraph::add_edge(Node from, Node to) {
  if (from == to) return;
  auto& adj = out_[from];
  if (std::find(adj.begin(), adj.end(), to) != adj.end()) return;
  adj.push_back(to);
  if (from > to) {
    forward_only_ = false;
    const Node src[] = {to};
    const Node dst[] = {from};
    if (reachable(src, dst)) {
      throw std::logic_error("update history is not serializable: txn " + std::to_string(txn_ids_[from]) +
                             " closes a cycle");
    }
  }
}

SerializationGraph::Node SerializationGraph::add_update(const HistoryEvent& e) {
  std::optional<Version> commit_ver;
  for (const auto& w : e.write_set) {
    if (commit_ver && *commit_ver != w.ver) {
      throw std::logic_error("update txn " + std::to_string(e.txn_id) + " writes at two different versions");
    }
    commit_ver = w.ver;
  }
  if (commit_ver) {
    if (*commit_ver <= last_version_) {
      throw std::logic_error("update txn " + std::to_string(e.txn_id) + " version " + std::to_string(*commit_ver) +
                             " does not follow " + std::to_string(last_version_));
    }
  }
  // Validate reads before mutating anything.
  for (const auto& r : e.read_set) (void)writer_of(r.key, r.ver);

  const Node node = static_cast<Node>(txn_ids_.size());
  txn_ids_.push_back(e.txn_id);
  out_.emplace_back();
  mark_.push_back(0);

  for (const auto& r : e.read_set) {
    if (auto w = writer_of(r.key, r.ver)) add_edge(*w, node);
    if (auto next = next_writer_after(r.key, r.ver)) {
      add_edge(node, *next);
    } else {
      keys_[r.key].current_readers.push_back(node);
    }
  }
  for (const auto& w : e.write_set) {
    auto& kh = keys_[w.key];
    if (!kh.writers.empty()) add_edge(kh.writers.back().second, node);
    for (Node reader : kh.current_readers) add_edge(reader, node);
    kh.current_readers.clear();
    kh.writers.emplace_back(w.ver, node);
  }
  if (commit_ver) last_version_ = *commit_ver;
  return node;
}

bool SerializationGraph::reachable(std::span<const Node> sources, std::span<const Node> targets) const {
  if (sources.empty() || targets.empty()) return false;
  Node bound = static_cast<Node>(txn_ids_.size());
  if (forward_only_) bound = *std::max_element(targets.begin(), targets.end()) + 1;

  if (++epoch_ == 0) {
    std::fill(mark_.begin(), mark_.end(), 0);
    epoch_ = 1;
  }
  std::vector<Node> stack;
  for (Node s : sources) {
    if (s < bound && mark_[s] != epoch_) {
      mark_[s] = epoch_;
      stack.push_back(s);
    }
  }
  while (!stack.empty()) {
    const Node n = stack.back();
    stack.pop_back();
    if (std::find(targets.begin(), targets.end(), n) != targets.end()) return true;
    for (Node m : out_[n]) {
      if (m < bound && mark_[m] != epoch_) {
        mark_[m] = epoch_;
        stack.push_back(m);
      }
    }
  }
  return false;
}

bool SerializationGraph::closes_cycle(std::span<const VersionedKey> reads) const {
  // A cycle through the reader needs a path from one of its rw successors
  // (next writer after a version it read) to one of its wr predecessors
  // (writer of a version it read).
  std::vector<Node> wr_sources;
  std::vector<Node> rw_targets;
  for (const auto& r : reads) {
    if (auto w = writer_of(r.key, r.ver)) wr_sources.push_back(*w);
    if (auto next = next_writer_after(r.key, r.ver)) rw_targets.push_back(*next);
  }
  return reachable(rw_targets, wr_sources);
}

std::vector<SerializationGraph::Edge> SerializationGraph::read_only_edges(TxnId reader,
                                                                          std::span<const VersionedKey> reads) const {
  std::vector<Edge> out;
  for (const auto& r : reads) {
    if (auto w = writer_of(r.key, r.ver)) out.push_back({txn_ids_[*w], reader});
    if (auto next = next_writer_after(r.key, r.ver)) out.push_back({reader, txn_ids_[*next]});
  }
  return out;
}

std::vector<SerializationGraph::Edge> SerializationGraph::edges() const {
  std::vector<Edge> out;
  for (Node n = 0; n < out_.size(); ++n) {
    for (Node m : out_[n]) out.push_back({txn_ids_[n], txn_ids_[m]});
  }
  return out;
}

bool SerializationGraph::acyclic() const {
  std::vector<std::size_t> indegree(out_.size(), 0);
  for (const auto& adj : out_) {
    for (Node m : adj) ++indegree[m];
  }
  std::vector<Node> ready;
  for (Node n = 0; n < out_.size(); ++n) {
    if (indegree[n] == 0) ready.push_back(n);
  }
  std::size_t seen = 0;
  while (!ready.empty()) {
    const Node n = ready.back();
    ready.pop_back();
    ++seen;
    for (Node m : out_[n]) {
      if (--indegree[m] == 0) ready.push_back(m);
    }
  }
  return seen == out_.size();
}

// ---------------------------------------------------------------------------
// Reports

namespace {

double pct(std::uint64_t part, std::uint64_t whole) {
  return whole == 0 ? 0.0 : 100.0 * static_cast<double>(part) / static_cast<double>(whole);
}

double frac(std::uint64_t part, std::uint64_t whole) {
  return whole == 0 ? 0.0 : static_cast<double>(part) / static_cast<double>(whole);
}

}  // namespace

double BucketRow::consistent_pct() const { return pct(committed_consistent, total()); }
double BucketRow::inconsistent_pct() const { return pct(committed_inconsistent, total()); }
double BucketRow::abort_pct() const { return pct(aborted, total()); }

double MonitorReport::inconsistent_commit_fraction() const { return frac(committed_inconsistent, committed()); }
double MonitorReport::inconsistent_band() const { return frac(committed_inconsistent, read_only_total()); }
double MonitorReport::abort_band() const { return frac(aborted(), read_only_total()); }
double MonitorReport::consistent_band() const { return frac(committed_consistent, read_only_total()); }
double MonitorReport::detection_ratio() const {
  return frac(aborted_would_be_inconsistent, aborted_would_be_inconsistent + committed_inconsistent);
}

// ---------------------------------------------------------------------------
// ConsistencyMonitor

void ConsistencyMonitor::record_event(const HistoryEvent& e) {
  std::lock_guard lock(mu_);
  if (e.kind == TxnKind::kUpdate) {
    if (e.status != TxnStatus::kCommitted) return;  // aborted updates leave no trace
    graph_.add_update(e);
    ++update_commits_;
    try_classify_pending();
    return;
  }
  if (!e.write_set.empty()) {
    throw std::logic_error("read-only txn " + std::to_string(e.txn_id) + " carries writes");
  }
  ReadOnlyTxn ro;
  ro.event = e;
  for (const auto& r : e.read_set) ro.max_read = std::max(ro.max_read, r.ver);
  const std::size_t idx = read_only_.size();
  read_only_.push_back(std::move(ro));
  (e.status == TxnStatus::kCommitted ? last_committed_ : last_aborted_)[e.txn_id] = idx;
  waiting_.push_back(idx);
  try_classify_pending();
}

void ConsistencyMonitor::try_classify_pending() {
  const Version seen = graph_.last_version();
  std::deque<std::size_t> still;
  for (std::size_t idx : waiting_) {
    auto& ro = read_only_[idx];
    if (ro.classified) continue;
    if (ro.max_read + cfg_.horizon <= seen) {
      ro.cls = graph_.closes_cycle(ro.event.read_set) ? Classification::kInconsistent : Classification::kConsistent;
      ro.classified = true;
    } else {
      still.push_back(idx);
    }
  }
  waiting_.swap(still);
}

void ConsistencyMonitor::flush() {
  std::lock_guard lock(mu_);
  for (std::size_t idx : waiting_) {
    auto& ro = read_only_[idx];
    if (ro.classified) continue;
    ro.cls = graph_.closes_cycle(ro.event.read_set) ? Classification::kInconsistent : Classification::kConsistent;
    ro.classified = true;
  }
  waiting_.clear();
}

ConsistencyMonitor::ReadOnlyTxn& ConsistencyMonitor::latest(TxnId txn_id, TxnStatus status) {
  auto& index = status == TxnStatus::kCommitted ? last_committed_ : last_aborted_;
  auto it = index.find(txn_id);
  if (it == index.end()) {
    throw std::out_of_range("no " + std::string(status == TxnStatus::kCommitted ? "committed" : "aborted") +
                            " read-only txn " + std::to_string(txn_id));
  }
  auto& ro = read_only_[it->second];
  if (!ro.classified) {
    ro.cls = graph_.closes_cycle(ro.event.read_set) ? Classification::kInconsistent : Classification::kConsistent;
    ro.classified = true;
  }
  return ro;
}

Classification ConsistencyMonitor::classify_read_only(TxnId txn_id) {
  std::lock_guard lock(mu_);
  return latest(txn_id, TxnStatus::kCommitted).cls;
}

Classification ConsistencyMonitor::classify_abort(TxnId txn_id) {
  std::lock_guard lock(mu_);
  return latest(txn_id, TxnStatus::kAborted).cls;
}

std::vector<SerializationGraph::Edge> ConsistencyMonitor::read_only_edges(TxnId txn_id) {
  std::lock_guard lock(mu_);
  const auto& ro = latest(txn_id, TxnStatus::kCommitted);
  return graph_.read_only_edges(txn_id, ro.event.read_set);
}

bool ConsistencyMonitor::update_graph_acyclic() const {
  std::lock_guard lock(mu_);
  return graph_.acyclic();
}

std::vector<SerializationGraph::Edge> ConsistencyMonitor::update_edges() const {
  std::lock_guard lock(mu_);
  return graph_.edges();
}

std::size_t ConsistencyMonitor::pending() const {
  std::lock_guard lock(mu_);
  return waiting_.size();
}

MonitorReport ConsistencyMonitor::report(Tick window, Tick since) {
  if (window <= 0) throw std::invalid_argument("report window must be positive");
  flush();
  std::lock_guard lock(mu_);
  MonitorReport rep;
  rep.window = window;
  rep.update_commits = update_commits_;
  std::map<Tick, BucketRow> buckets;
  for (const auto& ro : read_only_) {
    const bool consistent = ro.cls == Classification::kConsistent;
    const Tick start = (ro.event.timestamp / window) * window;
    auto& row = buckets[start];
    row.start = start;
    const bool counted = ro.event.timestamp >= since;
    if (ro.event.status == TxnStatus::kCommitted) {
      ++(consistent ? row.committed_consistent : row.committed_inconsistent);
      if (counted) ++(consistent ? rep.committed_consistent : rep.committed_inconsistent);
    } else {
      ++row.aborted;
      if (counted) ++(consistent ? rep.aborted_would_be_consistent : rep.aborted_would_be_inconsistent);
    }
  }
  if (!buckets.empty()) {
    for (Tick t = buckets.begin()->first; t <= buckets.rbegin()->first; t += window) {
      auto it = buckets.find(t);
      rep.series.push_back(it == buckets.end() ? BucketRow{t, 0, 0, 0} : it->second);
    }
  }
  return rep;
}

// ---------------------------------------------------------------------------
// Brute-force oracle

namespace {

struct OracleTxn {
  std::vector<std::pair<std::size_t, Version>> reads;
  std::vector<std::pair<std::size_t, Version>> writes;
};

class OrderSearch {
 public:
  OrderSearch(std::vector<OracleTxn> txns, std::size_t keys) : txns_(std::move(txns)), state_(keys, kInitialVersion) {}

  bool run() { return place(0); }

 private:
  bool place(std::uint32_t placed) {
    if (placed == (1u << txns_.size()) - 1) return true;
    if (dead_.count({placed, state_})) return false;
    for (std::size_t i = 0; i < txns_.size(); ++i) {
      if (placed & (1u << i)) continue;
      const auto& t = txns_[i];
      bool ok = std::all_of(t.reads.begin(), t.reads.end(), [&](const auto& r) { return state_[r.first] == r.second; });
      if (!ok) continue;
      std::vector<Version> saved = state_;
      for (const auto& [k, v] : t.writes) state_[k] = v;
      if (place(placed | (1u << i))) return true;
      state_ = std::move(saved);
    }
    dead_.insert({placed, state_});
    return false;
  }

  std::vector<OracleTxn> txns_;
  std::vector<Version> state_;
  std::set<std::pair<std::uint32_t, std::vector<Version>>> dead_;
};

}  // namespace

bool brute_force_serializable(std::span<const HistoryEvent> history, std::span<const HistoryEvent> candidates,
                              std::size_t max_txns) {
  std::vector<const HistoryEvent*> all;
  for (const auto& e : history) {
    if (e.kind == TxnKind::kUpdate && e.status == TxnStatus::kCommitted) all.push_back(&e);
  }
  for (const auto& e : candidates) all.push_back(&e);
  if (all.size() > max_txns || all.size() > 20) {
    throw std::length_error("brute-force oracle refuses " + std::to_string(all.size()) + " transactions (limit " +
                            std::to_string(std::min<std::size_t>(max_txns, 20)) + ")");
  }

  std::map<ObjectId, std::size_t> dense;
  auto slot = [&](ObjectId k) { return dense.try_emplace(k, dense.size()).first->second; };
  std::vector<OracleTxn> txns;
  for (const auto* e : all) {
    OracleTxn t;
    for (const auto& r : e->read_set) t.reads.emplace_back(slot(r.key), r.ver);
    for (const auto& w : e->write_set) t.writes.emplace_back(slot(w.key), w.ver);
    txns.push_back(std::move(t));
  }
  return OrderSearch(std::move(txns), dense.size()).run();
}

}  // namespace tcache
