#include "tcache/workloads.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <sstream>
#include <stdexcept>
#include <unordered_map>
#include <unordered_set>

namespace tcache {

BoundedPareto::BoundedPareto(double alpha, double low, double high)
    : alpha_(alpha), low_(low), high_(high), tail_(std::pow(low / high, alpha)) {
  if (!(alpha > 0.0)) throw std::invalid_argument("pareto alpha must be positive");
  if (!(low > 0.0) || !(high > low)) throw std::invalid_argument("pareto support must satisfy 0 < low < high");
}

double BoundedPareto::operator()(Rng& rng) const {
  const double u = std::uniform_real_distribution<double>(0.0, 1.0)(rng);
  const double x = low_ * std::pow(1.0 - u * (1.0 - tail_), -1.0 / alpha_);
  return std::clamp(x, low_, high_);
}

double BoundedPareto::cdf(double x) const {
  if (x <= low_) return 0.0;
  if (x >= high_) return 1.0;
  return (1.0 - std::pow(low_ / x, alpha_)) / (1.0 - tail_);
}

std::string_view to_string(AccessMode m) {
  switch (m) {
    case AccessMode::kPerfect: return "perfect";
    case AccessMode::kPareto: return "pareto";
    case AccessMode::kUniform: return "uniform";
  }
  return "?";
}

AccessMode parse_access_mode(std::string_view s) {
  if (s == "perfect") return AccessMode::kPerfect;
  if (s == "pareto") return AccessMode::kPareto;
  if (s == "uniform") return AccessMode::kUniform;
  throw std::invalid_argument("unknown access mode '" + std::string(s) + "' (perfect|pareto|uniform)");
}

void SyntheticSpec::validate() const {
  if (universe == 0) throw std::invalid_argument("workload.universe must be positive");
  if (cluster_size == 0 || cluster_size > universe) {
    throw std::invalid_argument("workload.cluster_size must be in [1, universe]");
  }
  if (accesses == 0) throw std::invalid_argument("workload.accesses must be positive");
  if (mode == AccessMode::kPareto && !(alpha > 0.0)) throw std::invalid_argument("workload.alpha must be positive");
  if (drift && drift->period <= 0) throw std::invalid_argument("workload.drift.period must be positive");
}

std::size_t apply_drift(const SyntheticSpec& spec, Tick now) {
  if (!spec.drift || now < 0) return 0;
  const auto n = static_cast<std::int64_t>(spec.universe);
  const std::int64_t shifts = now / spec.drift->period;
  std::int64_t offset = (shifts % n) * (spec.drift->shift % n) % n;
  if (offset < 0) offset += n;
  return static_cast<std::size_t>(offset);
}

AccessMode effective_mode(const SyntheticSpec& spec, Tick now) {
  if (spec.formation && now < spec.formation->switch_time) return spec.formation->before;
  return spec.mode;
}

TxnRequest gen_synthetic_txn(const SyntheticSpec& spec, Rng& rng, TxnKind kind, Tick now) {
  const std::size_t n = spec.universe;
  const std::size_t c = spec.cluster_size;
  const std::size_t clusters = (n + c - 1) / c;
  const std::size_t offset = apply_drift(spec, now);

  TxnRequest req;
  req.kind = kind;
  req.issue_time = now;
  req.keys.reserve(spec.accesses);

  switch (effective_mode(spec, now)) {
    case AccessMode::kUniform: {
      std::uniform_int_distribution<std::size_t> any(0, n - 1);
      for (std::size_t i = 0; i < spec.accesses; ++i) req.keys.push_back(static_cast<ObjectId>(any(rng)));
      break;
    }
    case AccessMode::kPerfect: {
      const std::size_t cluster = std::uniform_int_distribution<std::size_t>(0, clusters - 1)(rng);
      const std::size_t head = cluster * c;
      const std::size_t size = std::min(c, n - head);
      std::uniform_int_distribution<std::size_t> member(0, size - 1);
      for (std::size_t i = 0; i < spec.accesses; ++i) {
        req.keys.push_back(static_cast<ObjectId>((head + member(rng) + offset) % n));
      }
      break;
    }
    case AccessMode::kPareto: {
      const std::size_t cluster = std::uniform_int_distribution<std::size_t>(0, clusters - 1)(rng);
      const std::size_t head = (cluster * c + offset) % n;
      const BoundedPareto pareto(spec.alpha, 1.0, static_cast<double>(n));
      for (std::size_t i = 0; i < spec.accesses; ++i) {
        const auto step = static_cast<std::size_t>(std::floor(pareto(rng))) - 1;
        req.keys.push_back(static_cast<ObjectId>((head + std::min(step, n - 1)) % n));
      }
      break;
    }
  }
  return req;
}

// ---------------------------------------------------------------------------
// Graphs

std::size_t Graph::num_edges() const {
  std::size_t twice = 0;
  for (const auto& a : adj) twice += a.size();
  return twice / 2;
}

bool Graph::has_edge(ObjectId a, ObjectId b) const {
  const auto& n = adj[a];
  return std::binary_search(n.begin(), n.end(), b);
}

Graph graph_from_edges(const std::vector<std::pair<std::uint64_t, std::uint64_t>>& edges) {
  Graph g;
  std::unordered_map<std::uint64_t, ObjectId> dense;
  auto id = [&](std::uint64_t label) {
    auto [it, inserted] = dense.try_emplace(label, static_cast<ObjectId>(g.labels.size()));
    if (inserted) {
      g.labels.push_back(label);
      g.adj.emplace_back();
    }
    return it->second;
  };
  for (const auto& [u, v] : edges) {
    const ObjectId a = id(u);
    const ObjectId b = id(v);
    if (a == b) continue;
    g.adj[a].push_back(b);
    g.adj[b].push_back(a);
  }
  for (auto& n : g.adj) {
    std::sort(n.begin(), n.end());
    n.erase(std::unique(n.begin(), n.end()), n.end());
  }
  return g;
}

Graph load_edge_list(std::istream& in) {
  std::vector<std::pair<std::uint64_t, std::uint64_t>> edges;
  std::string line;
  std::size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    const auto first = line.find_first_not_of(" \t\r");
    if (first == std::string::npos || line[first] == '#') continue;
    std::istringstream fields(line);
    std::uint64_t u = 0;
    std::uint64_t v = 0;
    std::string rest;
    if (!(fields >> u >> v) || (fields >> rest)) {
      throw std::runtime_error("edge list line " + std::to_string(lineno) + ": expected \"u v\", got \"" + line + "\"");
    }
    edges.emplace_back(u, v);
  }
  Graph g = graph_from_edges(edges);
  if (g.num_edges() == 0) throw std::runtime_error("edge list contains no edges");
  return g;
}

Graph load_edge_list(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open edge list '" + path + "'");
  return load_edge_list(in);
}

void write_edge_list(const Graph& g, std::ostream& out, std::string_view header) {
  if (!header.empty()) out << "# " << header << '\n';
  out << "# Nodes: " << g.num_nodes() << " Edges: " << g.num_edges() << '\n';
  out << "# FromNodeId\tToNodeId\n";
  for (ObjectId a = 0; a < g.num_nodes(); ++a) {
    for (ObjectId b : g.adj[a]) {
      if (a < b) out << g.labels[a] << '\t' << g.labels[b] << '\n';
    }
  }
}

namespace {

SampledGraph induce(const Graph& g, const std::vector<ObjectId>& nodes) {
  SampledGraph s;
  s.original = nodes;
  std::unordered_map<ObjectId, ObjectId> relabel;
  for (ObjectId i = 0; i < nodes.size(); ++i) relabel[nodes[i]] = i;
  s.graph.adj.resize(nodes.size());
  s.graph.labels.resize(nodes.size());
  for (ObjectId i = 0; i < nodes.size(); ++i) {
    s.graph.labels[i] = i;
    for (ObjectId nb : g.adj[nodes[i]]) {
      if (auto it = relabel.find(nb); it != relabel.end()) s.graph.adj[i].push_back(it->second);
    }
    std::sort(s.graph.adj[i].begin(), s.graph.adj[i].end());
  }
  return s;
}

}  // namespace

SampledGraph random_walk_downsample(const Graph& g, std::size_t target, double restart_prob, Rng& rng) {
  if (target > g.num_nodes()) {
    throw std::invalid_argument("down-sample target " + std::to_string(target) + " exceeds graph size " +
                                std::to_string(g.num_nodes()));
  }
  if (restart_prob < 0.0 || restart_prob > 1.0) throw std::invalid_argument("restart_prob must be in [0, 1]");

  std::uniform_int_distribution<ObjectId> any(0, static_cast<ObjectId>(g.num_nodes() - 1));
  std::bernoulli_distribution restart(restart_prob);
  std::vector<ObjectId> order;
  std::unordered_set<ObjectId> seen;
  auto visit = [&](ObjectId n) {
    if (seen.insert(n).second) {
      order.push_back(n);
      return true;
    }
    return false;
  };

  ObjectId start = any(rng);
  ObjectId at = start;
  visit(start);
  const std::size_t stall_limit = 100 * std::max<std::size_t>(target, 1);
  std::size_t stalled = 0;
  while (order.size() < target) {
    if (stalled > stall_limit) {
      std::vector<ObjectId> unvisited;
      for (ObjectId n = 0; n < g.num_nodes(); ++n) {
        if (!seen.count(n)) unvisited.push_back(n);
      }
      start = unvisited[std::uniform_int_distribution<std::size_t>(0, unvisited.size() - 1)(rng)];
      at = start;
      visit(start);
      stalled = 0;
      continue;
    }
    if (restart(rng) || g.adj[at].empty()) {
      at = start;
    } else {
      const auto& nb = g.adj[at];
      at = nb[std::uniform_int_distribution<std::size_t>(0, nb.size() - 1)(rng)];
    }
    stalled = visit(at) ? 0 : stalled + 1;
  }
  return induce(g, order);
}

SampledGraph uniform_node_sample(const Graph& g, std::size_t target, Rng& rng) {
  if (target > g.num_nodes()) throw std::invalid_argument("sample target exceeds graph size");
  std::vector<ObjectId> all(g.num_nodes());
  for (ObjectId i = 0; i < all.size(); ++i) all[i] = i;
  std::shuffle(all.begin(), all.end(), rng);
  all.resize(target);
  return induce(g, all);
}

double average_clustering(const Graph& g) {
  if (g.num_nodes() == 0) return 0.0;
  double sum = 0.0;
  for (ObjectId n = 0; n < g.num_nodes(); ++n) {
    const auto& nb = g.adj[n];
    if (nb.size() < 2) continue;
    std::size_t links = 0;
    for (std::size_t i = 0; i < nb.size(); ++i) {
      for (std::size_t j = i + 1; j < nb.size(); ++j) {
        if (g.has_edge(nb[i], nb[j])) ++links;
      }
    }
    sum += 2.0 * static_cast<double>(links) / static_cast<double>(nb.size() * (nb.size() - 1));
  }
  return sum / static_cast<double>(g.num_nodes());
}

TxnRequest gen_graph_txn(const Graph& g, std::size_t walk_len, Rng& rng, TxnKind kind, Tick now) {
  if (g.num_nodes() == 0) throw std::invalid_argument("cannot generate transactions on an empty graph");
  TxnRequest req;
  req.kind = kind;
  req.issue_time = now;
  ObjectId at = std::uniform_int_distribution<ObjectId>(0, static_cast<ObjectId>(g.num_nodes() - 1))(rng);
  req.keys.push_back(at);
  for (std::size_t step = 0; step < walk_len; ++step) {
    const auto& nb = g.adj[at];
    if (!nb.empty()) at = nb[std::uniform_int_distribution<std::size_t>(0, nb.size() - 1)(rng)];
    req.keys.push_back(at);
  }
  return req;
}

Graph make_clustered_graph(std::size_t nodes, std::size_t min_size, std::size_t max_size, double p_in,
                           double bridges_per_node, Rng& rng) {
  if (min_size == 0 || max_size < min_size) throw std::invalid_argument("community sizes must satisfy 1 <= min <= max");
  std::vector<std::pair<std::uint64_t, std::uint64_t>> edges;
  std::vector<std::size_t> community(nodes);
  std::uniform_int_distribution<std::size_t> size_of(min_size, max_size);
  std::bernoulli_distribution link(p_in);
  std::size_t next = 0;
  std::size_t id = 0;
  while (next < nodes) {
    const std::size_t end = std::min(nodes, next + size_of(rng));
    for (std::size_t a = next; a < end; ++a) {
      community[a] = id;
      for (std::size_t b = a + 1; b < end; ++b) {
        if (link(rng)) edges.emplace_back(a, b);
      }
      // Keep each community connected.
      if (a + 1 < end) edges.emplace_back(a, a + 1);
    }
    next = end;
    ++id;
  }
  const auto bridges = static_cast<std::size_t>(std::llround(bridges_per_node * static_cast<double>(nodes) / 2.0));
  std::uniform_int_distribution<std::size_t> any(0, nodes - 1);
  for (std::size_t i = 0; i < bridges; ++i) {
    const std::size_t a = any(rng);
    const std::size_t b = any(rng);
    if (community[a] != community[b]) edges.emplace_back(a, b);
  }
  // Chain communities so the graph is connected.
  for (std::size_t a = 0; a + 1 < nodes; ++a) {
    if (community[a] != community[a + 1] && community[a] % 4 == 0) edges.emplace_back(a, a + 1);
  }
  auto g = graph_from_edges(edges);
  return g;
}

void write_relabel_csv(const SampledGraph& s, const Graph& source, std::ostream& out) {
  out << "sampled_id,original_label\r\n";
  for (ObjectId i = 0; i < s.original.size(); ++i) out << i << ',' << source.labels[s.original[i]] << "\r\n";
}

}  // namespace tcache
