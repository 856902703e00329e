#include "tcache/harness.hpp"

#include <algorithm>
#include <chrono>
#include <fstream>
#include <map>
#include <mutex>
#include <numeric>
#include <ostream>
#include <sstream>
#include <stdexcept>

#include <fmt/format.h>

#ifndef TCACHE_DEFAULT_GRAPH
#define TCACHE_DEFAULT_GRAPH "data/clustered_graph.txt"
#endif

namespace tcache {

using nlohmann::json;

std::string default_graph_path() { return TCACHE_DEFAULT_GRAPH; }

// ---------------------------------------------------------------------------
// Presets

namespace {

struct PresetDef {
  std::string_view name;
  std::string_view axis;
  bool time_series;
  json base;
  /// (label, patch) per sweep point; each patch is merged into the base.
  std::vector<std::pair<std::string, json>> points;
};

json synthetic(std::size_t universe, std::string_view mode, double alpha = 1.0) {
  return {{"type", "synthetic"}, {"universe", universe}, {"cluster_size", 5}, {"mode", mode}, {"alpha", alpha},
          {"accesses", 5}};
}

json graph_workload() {
  return {{"type", "graph"}, {"edge_list", default_graph_path()}, {"target_nodes", 1000}, {"restart_prob", 0.15},
          {"walk_len", 4}};
}

std::string label(double v) { return fmt::format("{}", v); }

PresetDef make_preset(std::string_view name) {
  PresetDef d{name, "", false, json::object(), {}};
  auto& b = d.base;
  b["name"] = name;
  b["seed"] = 1;
  if (name == "alpha-sweep") {
    d.axis = "alpha";
    b["dependency_bound"] = 5;
    b["workload"] = synthetic(2000, "pareto");
    for (double a : {1.0 / 32, 1.0 / 16, 1.0 / 8, 1.0 / 4, 1.0 / 2, 1.0, 2.0, 4.0}) {
      d.points.emplace_back(label(a), json{{"workload", {{"alpha", a}}}});
    }
  } else if (name == "unclustered") {
    d.axis = "mode";
    b["dependency_bound"] = 5;
    b["workload"] = synthetic(2000, "uniform");
    d.points.emplace_back("uniform", json::object());
  } else if (name == "convergence") {
    d.axis = "t_s";
    d.time_series = true;
    b["dependency_bound"] = 5;
    b["workload"] = synthetic(1000, "perfect");
    b["workload"]["formation"] = {{"switch_ms", 58000}, {"before", "uniform"}};
    b["run"] = {{"duration_s", 100}, {"warmup_s", 0}};
    d.points.emplace_back("series", json::object());
  } else if (name == "drift") {
    d.axis = "t_s";
    d.time_series = true;
    b["dependency_bound"] = 5;
    b["workload"] = synthetic(1000, "perfect");
    b["workload"]["drift"] = {{"period_ms", 180000}, {"shift", 1}};
    b["run"] = {{"duration_s", 720}, {"warmup_s", 0}, {"time_compression", 1}};
    d.points.emplace_back("series", json::object());
  } else if (name == "strategy" || name == "strategy-graph") {
    d.axis = "strategy";
    if (name == "strategy") {
      b["dependency_bound"] = 5;
      b["workload"] = synthetic(2000, "pareto", 1.0);
    } else {
      b["dependency_bound"] = 3;
      b["workload"] = graph_workload();
    }
    for (const char* s : {"abort", "evict", "retry"}) {
      d.points.emplace_back(s, json{{"cache", {{"strategy", s}}}});
    }
  } else if (name == "dep-sweep") {
    d.axis = "dependency_bound";
    b["workload"] = graph_workload();
    d.points.emplace_back("unaware", json{{"cache", {{"mode", "unaware"}}}, {"dependency_bound", 0}});
    for (int k = 0; k <= 5; ++k) d.points.emplace_back(std::to_string(k), json{{"dependency_bound", k}});
  } else if (name == "ttl-sweep") {
    d.axis = "ttl_ms";
    b["dependency_bound"] = 3;
    b["workload"] = graph_workload();
    d.points.emplace_back("tcache", json::object());
    d.points.emplace_back("inf", json{{"cache", {{"mode", "unaware"}}}});
    for (int ttl : {20000, 10000, 5000, 2000, 1000, 500, 200, 100, 50, 20, 10}) {
      d.points.emplace_back(std::to_string(ttl), json{{"cache", {{"mode", "ttl"}, {"ttl_ms", ttl}}}});
    }
  } else {
    throw std::invalid_argument("unknown preset '" + std::string(name) + "'");
  }
  return d;
}

}  // namespace

std::vector<std::string> preset_names() {
  return {"alpha-sweep", "unclustered", "convergence", "drift", "strategy", "strategy-graph", "dep-sweep", "ttl-sweep"};
}

json preset_base(std::string_view name, const std::vector<std::string>& overrides) {
  json doc = make_preset(name).base;
  for (const auto& o : overrides) apply_override(doc, o);
  return doc;
}

std::vector<std::pair<std::string, ExperimentConfig>> preset_configs(std::string_view name,
                                                                     const std::vector<std::string>& overrides) {
  const PresetDef d = make_preset(name);
  std::vector<std::pair<std::string, ExperimentConfig>> out;
  for (const auto& [lbl, patch] : d.points) {
    json doc = d.base;
    doc.merge_patch(patch);
    for (const auto& o : overrides) apply_override(doc, o);
    out.emplace_back(lbl, config_from_json(doc));
  }
  return out;
}

PresetResult run_preset(std::string_view name, const std::vector<std::string>& overrides) {
  const PresetDef d = make_preset(name);
  PresetResult res;
  res.name = d.name;
  res.axis = d.axis;
  res.time_series = d.time_series;
  const auto configs = preset_configs(name, overrides);

  std::unique_ptr<GraphSource> graph;
  for (const auto& [lbl, cfg] : configs) {
    if (std::holds_alternative<GraphSpec>(cfg.workload)) {
      if (!graph) {
        Graph source;
        res.sample = sample_graph_workload(cfg, &source);
        res.source_graph = std::move(source);
        graph = std::make_unique<GraphSource>(res.sample->graph, std::get<GraphSpec>(cfg.workload).walk_len);
      }
      res.points.push_back({lbl, run_experiment(cfg, *graph)});
    } else {
      res.points.push_back({lbl, run_experiment(cfg)});
    }
  }
  return res;
}

// ---------------------------------------------------------------------------
// Outputs

namespace {

constexpr std::string_view kCrlf = "\r\n";

std::string csv_field(std::string_view s) {
  if (s.find_first_of(",\"\r\n") == std::string_view::npos) return std::string(s);
  std::string q = "\"";
  for (char c : s) {
    if (c == '"') q += '"';
    q += c;
  }
  return q + '"';
}

json cache_json(const CacheStats& c) {
  return {{"hits", c.hits},         {"misses", c.misses},     {"aborts", c.aborts},
          {"evictions", c.evictions}, {"db_reads", c.db_reads}, {"commits", c.commits},
          {"hit_ratio", c.hit_ratio()}};
}

json report_json(const MonitorReport& r) {
  return {{"committed_consistent", r.committed_consistent},
          {"committed_inconsistent", r.committed_inconsistent},
          {"aborted_would_be_consistent", r.aborted_would_be_consistent},
          {"aborted_would_be_inconsistent", r.aborted_would_be_inconsistent},
          {"update_commits", r.update_commits},
          {"read_only_total", r.read_only_total()},
          {"consistent_pct", 100.0 * r.consistent_band()},
          {"inconsistent_pct", 100.0 * r.inconsistent_band()},
          {"abort_pct", 100.0 * r.abort_band()},
          {"inconsistent_commit_fraction", r.inconsistent_commit_fraction()},
          {"detection_ratio", r.detection_ratio()}};
}

void write_file(const std::filesystem::path& p, const std::string& content) {
  std::ofstream out(p, std::ios::binary);
  if (!out) throw std::runtime_error("cannot write '" + p.string() + "'");
  out << content;
}

}  // namespace

void write_series_csv(const MonitorReport& report, std::ostream& out) {
  out << "t_s,consistent%,inconsistent%,abort%,read_only_txns" << kCrlf;
  for (const auto& b : report.series) {
    out << fmt::format("{:.3f},{:.4f},{:.4f},{:.4f},{}", static_cast<double>(b.start) / kTicksPerSecond,
                       b.consistent_pct(), b.inconsistent_pct(), b.abort_pct(), b.total())
        << kCrlf;
  }
}

void write_combined_csv(const PresetResult& p, std::ostream& out) {
  if (p.time_series) {
    write_series_csv(p.points.at(0).result.report, out);
    return;
  }
  out << "sweep_value,consistent%,inconsistent%,abort%,hit_ratio,db_reads_per_s" << kCrlf;
  for (const auto& pt : p.points) {
    const auto& r = pt.result;
    out << fmt::format("{},{:.4f},{:.4f},{:.4f},{:.6f},{:.3f}", csv_field(pt.sweep_value),
                       100.0 * r.report.consistent_band(), 100.0 * r.report.inconsistent_band(),
                       100.0 * r.report.abort_band(), r.cache.hit_ratio(), r.db_reads_per_s())
        << kCrlf;
  }
}

void write_gnuplot(const PresetResult& p, std::ostream& out) {
  out << "# preset " << p.name << " " << code_version() << "\n";
  out << "# config " << to_json(p.points.at(0).result.config).dump() << "\n";
  if (p.time_series) {
    out << "# t_s consistent inconsistent abort\n";
    for (const auto& b : p.points.at(0).result.report.series) {
      out << fmt::format("{:.3f} {:.4f} {:.4f} {:.4f}\n", static_cast<double>(b.start) / kTicksPerSecond,
                         b.consistent_pct(), b.inconsistent_pct(), b.abort_pct());
    }
    return;
  }
  // Non-numeric sweep values are plotted by index with the label as xtic.
  out << "# index " << p.axis << " consistent inconsistent abort hit_ratio db_reads_per_s detection_ratio\n";
  for (std::size_t i = 0; i < p.points.size(); ++i) {
    const auto& r = p.points[i].result;
    out << fmt::format("{} \"{}\" {:.4f} {:.4f} {:.4f} {:.6f} {:.3f} {:.6f}\n", i, p.points[i].sweep_value,
                       100.0 * r.report.consistent_band(), 100.0 * r.report.inconsistent_band(),
                       100.0 * r.report.abort_band(), r.cache.hit_ratio(), r.db_reads_per_s(),
                       r.report.detection_ratio());
  }
}

json summary_json(const RunResult& r) {
  return {{"code_version", code_version()},
          {"seed", r.config.seed},
          {"config", to_json(r.config)},
          {"totals", report_json(r.report)},
          {"cache", cache_json(r.cache)},
          {"db", {{"commits", r.db.commits}, {"aborts", r.db.aborts}, {"entry_reads", r.db.entry_reads},
                  {"reads_per_s", r.db_reads_per_s()}}},
          {"channel", {{"enqueued", r.channel.enqueued}, {"dropped", r.channel.dropped},
                       {"delivered", r.channel.delivered}}},
          {"updates_issued", r.updates_issued},
          {"reads_issued", r.reads_issued},
          {"measured_seconds", r.measured_seconds},
          {"update_graph_acyclic", r.update_graph_acyclic}};
}

json summary_json(const PresetResult& p) {
  json points = json::array();
  for (const auto& pt : p.points) {
    json s = summary_json(pt.result);
    s["sweep_value"] = pt.sweep_value;
    points.push_back(std::move(s));
  }
  json out = {{"preset", p.name}, {"axis", p.axis}, {"code_version", code_version()}, {"points", points}};
  if (p.sample) {
    out["graph"] = {{"sampled_nodes", p.sample->graph.num_nodes()},
                    {"sampled_edges", p.sample->graph.num_edges()},
                    {"sampled_clustering", average_clustering(p.sample->graph)}};
  }
  return out;
}

std::vector<std::filesystem::path> write_preset_outputs(const PresetResult& p, const std::filesystem::path& dir) {
  std::filesystem::create_directories(dir);
  std::vector<std::filesystem::path> written;
  std::ostringstream csv, dat;
  write_combined_csv(p, csv);
  write_gnuplot(p, dat);
  written.push_back(dir / (p.name + ".csv"));
  write_file(written.back(), csv.str());
  written.push_back(dir / (p.name + ".json"));
  write_file(written.back(), summary_json(p).dump(2) + "\n");
  written.push_back(dir / (p.name + ".dat"));
  write_file(written.back(), dat.str());
  if (p.sample && p.source_graph) {
    std::ostringstream rel;
    write_relabel_csv(*p.sample, *p.source_graph, rel);
    written.push_back(dir / (p.name + "_relabel.csv"));
    write_file(written.back(), rel.str());
  }
  return written;
}

std::vector<std::filesystem::path> write_run_outputs(const RunResult& r, const std::filesystem::path& dir) {
  PresetResult p;
  p.name = r.config.name;
  p.axis = "t_s";
  p.time_series = true;
  p.points.push_back({"series", r});
  std::filesystem::create_directories(dir);
  std::ostringstream csv, dat;
  write_series_csv(r.report, csv);
  write_gnuplot(p, dat);
  std::vector<std::filesystem::path> written{dir / (p.name + "_series.csv"), dir / (p.name + ".json"),
                                             dir / (p.name + ".dat")};
  write_file(written[0], csv.str());
  write_file(written[1], summary_json(r).dump(2) + "\n");
  write_file(written[2], dat.str());
  return written;
}

// ---------------------------------------------------------------------------
// validate_small

namespace {

struct TrialParams {
  std::uint64_t seed = 0;
  std::size_t index = 0;
  std::size_t universe = 2;
  std::size_t updates = 1;
  std::size_t reads = 1;
  Strategy strategy = Strategy::kAbort;
  std::size_t bound = kUnbounded;
  double drop = 0.2;
};

json params_json(const TrialParams& t) {
  return {{"seed", t.seed},         {"index", t.index},   {"universe", t.universe},
          {"updates", t.updates},   {"reads", t.reads},   {"strategy", to_string(t.strategy)},
          {"dependency_bound", t.bound == kUnbounded ? json("inf") : json(t.bound)},
          {"drop_prob", t.drop}};
}

TrialParams params_from_json(const json& j) {
  TrialParams t;
  t.seed = j.at("seed");
  t.index = j.at("index");
  t.universe = j.at("universe");
  t.updates = j.at("updates");
  t.reads = j.at("reads");
  t.strategy = parse_strategy(j.at("strategy").get<std::string>());
  t.bound = j.at("dependency_bound").is_string() ? kUnbounded : j.at("dependency_bound").get<std::size_t>();
  t.drop = j.at("drop_prob");
  return t;
}

json event_json(const HistoryEvent& e) {
  auto pairs = [](const std::vector<VersionedKey>& v) {
    json a = json::array();
    for (const auto& p : v) a.push_back({p.key, p.ver});
    return a;
  };
  return {{"txn", e.txn_id},
          {"kind", e.kind == TxnKind::kUpdate ? "update" : "read_only"},
          {"status", e.status == TxnStatus::kCommitted ? "committed" : "aborted"},
          {"reads", pairs(e.read_set)},
          {"writes", pairs(e.write_set)},
          {"t", e.timestamp}};
}

class Recorder final : public HistorySink {
 public:
  explicit Recorder(HistorySink& next) : next_(next) {}
  void record_event(const HistoryEvent& e) override {
    {
      std::lock_guard lock(mu_);
      events.push_back(e);
    }
    next_.record_event(e);
  }
  std::vector<HistoryEvent> events;

 private:
  std::mutex mu_;
  HistorySink& next_;
};

std::vector<ObjectId> distinct_keys(std::size_t universe, std::size_t count, Rng& rng) {
  std::vector<ObjectId> all(universe);
  std::iota(all.begin(), all.end(), ObjectId{0});
  std::shuffle(all.begin(), all.end(), rng);
  all.resize(std::min(count, universe));
  return all;
}

struct TrialOutcome {
  std::vector<HistoryEvent> events;
  std::vector<std::string> findings;
  std::uint64_t committed = 0;
  std::uint64_t aborted = 0;
  std::uint64_t updates = 0;
  std::uint64_t oracle_inconsistent = 0;
  std::uint64_t disagreements = 0;
  bool joint_failure = false;
};

TrialOutcome run_trial(const TrialParams& p) {
  Rng rng(p.seed);
  ConsistencyMonitor monitor;
  Recorder rec(monitor);
  BackendDb db(DbConfig{p.universe, p.bound, 0}, ChannelConfig{p.drop, 0, 4, false, rng()}, &rec);
  EdgeCache cache(CacheConfig{CacheMode::kTCache, p.strategy, kNoTtl}, db, &rec);

  std::bernoulli_distribution prefill(0.7);
  for (ObjectId k = 0; k < p.universe; ++k) {
    if (prefill(rng)) cache.put(db.db_read_entry(k), 0);
  }

  struct Reader {
    TxnId id;
    std::vector<ObjectId> keys;
    std::size_t pos = 0;
  };
  std::vector<Reader> pending;
  for (std::size_t i = 0; i < p.reads; ++i) {
    std::uniform_int_distribution<std::size_t> len(2, std::min<std::size_t>(4, p.universe));
    pending.push_back({i + 1, distinct_keys(p.universe, len(rng), rng)});
  }
  std::vector<Reader> active;
  std::size_t updates_left = p.updates;
  TxnId next_update = 1;

  for (Tick now = 0; updates_left > 0 || !pending.empty() || !active.empty(); ++now) {
    for (const auto& inv : db.drain_channel(now)) cache.handle_invalidation(inv);
    std::vector<int> choices;
    if (updates_left > 0) choices.push_back(0);
    if (!pending.empty()) choices.push_back(1);
    if (!active.empty()) choices.insert(choices.end(), {2, 2});
    const int c = choices[std::uniform_int_distribution<std::size_t>(0, choices.size() - 1)(rng)];
    if (c == 0) {
      std::uniform_int_distribution<std::size_t> len(1, std::min<std::size_t>(3, p.universe));
      auto keys = distinct_keys(p.universe, len(rng), rng);
      db.execute_update_txn(UpdateTxn{next_update++, keys, keys}, {}, now);
      --updates_left;
    } else if (c == 1) {
      active.push_back(std::move(pending.back()));
      pending.pop_back();
    } else {
      const std::size_t i = std::uniform_int_distribution<std::size_t>(0, active.size() - 1)(rng);
      auto& r = active[i];
      const bool last = r.pos + 1 == r.keys.size();
      const auto res = cache.cache_read(r.id, r.keys[r.pos], last, now);
      if (res.aborted && !last) cache.cache_read(r.id, r.keys.back(), true, now);
      if (last || res.aborted) {
        active.erase(active.begin() + static_cast<std::ptrdiff_t>(i));
      } else {
        ++r.pos;
      }
    }
  }
  monitor.flush();

  TrialOutcome out;
  out.events = rec.events;
  std::vector<HistoryEvent> updates, committed_ro;
  for (const auto& e : out.events) {
    if (e.kind == TxnKind::kUpdate) updates.push_back(e);
  }
  out.updates = updates.size();
  const std::size_t cap = p.updates + p.reads + 1;
  for (const auto& e : out.events) {
    if (e.kind != TxnKind::kReadOnly) continue;
    const bool serializable = brute_force_serializable(updates, std::span(&e, 1), cap);
    const bool committed = e.status == TxnStatus::kCommitted;
    const auto cls = committed ? monitor.classify_read_only(e.txn_id) : monitor.classify_abort(e.txn_id);
    if (committed) {
      ++out.committed;
      committed_ro.push_back(e);
      if (!serializable) {
        ++out.oracle_inconsistent;
        out.findings.push_back(fmt::format("committed read-only txn {} is not serializable", e.txn_id));
      }
    } else {
      ++out.aborted;
    }
    if ((cls == Classification::kConsistent) != serializable) {
      ++out.disagreements;
      out.findings.push_back(fmt::format("monitor says {} for {} read-only txn {}, oracle says {}", to_string(cls),
                                         committed ? "committed" : "aborted", e.txn_id,
                                         serializable ? "serializable" : "not serializable"));
    }
  }
  if (!committed_ro.empty()) out.joint_failure = !brute_force_serializable(updates, committed_ro, cap);
  return out;
}

void accumulate(ValidateResult& r, const TrialOutcome& o) {
  ++r.trials;
  r.update_commits += o.updates;
  r.read_only_committed += o.committed;
  r.read_only_aborted += o.aborted;
  r.oracle_inconsistent += o.oracle_inconsistent;
  r.disagreements += o.disagreements;
  r.joint_failures += o.joint_failure ? 1 : 0;
}

}  // namespace

ValidateResult validate_small(const ValidateOptions& opt) {
  if (opt.max_universe < 2) throw std::invalid_argument("validate_small: max_universe must be at least 2");
  if (opt.max_txns < 2 || opt.max_txns > 12) throw std::invalid_argument("validate_small: max_txns must be in [2, 12]");
  const auto start = std::chrono::steady_clock::now();
  ValidateResult res;
  Rng master(opt.seed);
  const Strategy strategies[] = {Strategy::kAbort, Strategy::kEvict, Strategy::kRetry};
  for (std::size_t i = 0; i < opt.trials; ++i) {
    TrialParams p;
    p.seed = master();
    p.index = i;
    p.universe = std::uniform_int_distribution<std::size_t>(2, opt.max_universe)(master);
    const std::size_t n = std::uniform_int_distribution<std::size_t>(2, opt.max_txns)(master);
    p.reads = std::uniform_int_distribution<std::size_t>(1, n - 1)(master);
    p.updates = n - p.reads;
    p.strategy = strategies[i % 3];
    p.bound = opt.dependency_bound;
    p.drop = opt.drop_prob;
    const TrialOutcome o = run_trial(p);
    accumulate(res, o);
    if (!o.findings.empty() && !opt.trace_dir.empty() && res.traces.size() < 20) {
      std::filesystem::create_directories(opt.trace_dir);
      json events = json::array();
      for (const auto& e : o.events) events.push_back(event_json(e));
      const auto path = opt.trace_dir / fmt::format("trace_{}.json", i);
      write_file(path, json{{"code_version", code_version()},
                            {"trial", params_json(p)},
                            {"findings", o.findings},
                            {"events", events}}
                           .dump(2) +
                           "\n");
      res.traces.push_back(path);
    }
  }
  res.seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
  return res;
}

ValidateResult replay_trace(const std::filesystem::path& trace) {
  std::ifstream in(trace);
  if (!in) throw std::runtime_error("cannot open trace '" + trace.string() + "'");
  const json j = json::parse(in);
  ValidateResult res;
  accumulate(res, run_trial(params_from_json(j.at("trial"))));
  return res;
}

}  // namespace tcache
