#include "tcache/config.hpp"

#include <cmath>
#include <fstream>
#include <initializer_list>
#include <stdexcept>

#ifndef TCACHE_VERSION
#define TCACHE_VERSION "dev"
#endif

namespace tcache {

using nlohmann::json;

std::string_view code_version() { return "tcache-" TCACHE_VERSION; }

namespace {

[[noreturn]] void field_error(std::string_view field, std::string_view what) {
  throw std::invalid_argument("config field '" + std::string(field) + "': " + std::string(what));
}

void only_keys(const json& obj, std::string_view where, std::initializer_list<std::string_view> allowed) {
  if (!obj.is_object()) field_error(where, "expected an object");
  for (const auto& [k, _] : obj.items()) {
    bool ok = false;
    for (auto a : allowed) ok = ok || a == k;
    if (!ok) field_error(std::string(where).empty() ? k : std::string(where) + "." + k, "unknown field");
  }
}

template <typename T>
void read(const json& obj, const char* key, std::string_view where, T& out) {
  if (!obj.contains(key)) return;
  try {
    out = obj.at(key).get<T>();
  } catch (const json::exception& e) {
    field_error(std::string(where) + key, e.what());
  }
}

/// Non-negative integer or "inf".
template <typename T>
void read_unbounded(const json& obj, const char* key, std::string_view where, T& out, T unbounded) {
  if (!obj.contains(key)) return;
  const auto& v = obj.at(key);
  if (v.is_string() && (v == "inf" || v == "unbounded")) {
    out = unbounded;
  } else if (v.is_number_integer() && v.get<std::int64_t>() >= 0) {
    out = static_cast<T>(v.get<std::int64_t>());
  } else {
    field_error(std::string(where) + key, "expected a non-negative integer or \"inf\"");
  }
}

template <typename T>
json unbounded_json(T value, T unbounded) {
  if (value == unbounded) return "inf";
  return static_cast<std::int64_t>(value);
}

template <typename Parse>
auto read_enum(const json& obj, const char* key, std::string_view where, Parse parse, decltype(parse("")) fallback) {
  if (!obj.contains(key)) return fallback;
  try {
    return parse(obj.at(key).get<std::string>());
  } catch (const std::exception& e) {
    field_error(std::string(where) + key, e.what());
  }
}

}  // namespace

void ExperimentConfig::validate() const {
  if (drop_prob < 0.0 || drop_prob > 1.0) field_error("channel.drop_prob", "must be in [0, 1]");
  if (delay_min < 0 || delay_max < delay_min) field_error("channel.delay_max_ms", "must satisfy 0 <= min <= max");
  if (cache_mode == CacheMode::kTtl && ttl < 0) field_error("cache.ttl_ms", "must be non-negative");
  if (!(update_rate >= 0.0)) field_error("clients.update_rate", "must be non-negative");
  if (!(read_rate >= 0.0)) field_error("clients.read_rate", "must be non-negative");
  if (read_gap < 0) field_error("clients.read_gap_ms", "must be non-negative");
  if (!(duration_s > 0.0)) field_error("run.duration_s", "must be positive");
  if (!(warmup_s >= 0.0)) field_error("run.warmup_s", "must be non-negative");
  if (!(time_compression > 0.0)) field_error("run.time_compression", "must be positive");
  if (report_bucket <= 0) field_error("run.report_bucket_ms", "must be positive");
  if (execution == ExecutionMode::kStress && stress_threads == 0) field_error("run.stress_threads", "must be positive");
  if (const auto* syn = std::get_if<SyntheticSpec>(&workload)) {
    try {
      syn->validate();
    } catch (const std::invalid_argument& e) {
      throw std::invalid_argument(std::string("config field ") + e.what());
    }
  } else {
    const auto& g = std::get<GraphSpec>(workload);
    if (g.edge_list.empty()) field_error("workload.edge_list", "required for graph workloads");
    if (g.target_nodes == 0) field_error("workload.target_nodes", "must be positive");
    if (g.restart_prob < 0.0 || g.restart_prob > 1.0) field_error("workload.restart_prob", "must be in [0, 1]");
    if (g.walk_len == 0) field_error("workload.walk_len", "must be at least 1");
  }
}

Tick ExperimentConfig::duration_ticks() const {
  return static_cast<Tick>(std::llround(duration_s * kTicksPerSecond / time_compression));
}

Tick ExperimentConfig::warmup_ticks() const {
  return static_cast<Tick>(std::llround(warmup_s * kTicksPerSecond / time_compression));
}

SyntheticSpec ExperimentConfig::effective_synthetic() const {
  SyntheticSpec s = std::get<SyntheticSpec>(workload);
  if (s.drift) s.drift->period = std::max<Tick>(1, std::llround(s.drift->period / time_compression));
  if (s.formation) s.formation->switch_time = std::llround(s.formation->switch_time / time_compression);
  return s;
}

json to_json(const ExperimentConfig& c) {
  json w;
  if (const auto* s = std::get_if<SyntheticSpec>(&c.workload)) {
    w = {{"type", "synthetic"},
         {"universe", s->universe},
         {"cluster_size", s->cluster_size},
         {"mode", to_string(s->mode)},
         {"alpha", s->alpha},
         {"accesses", s->accesses}};
    if (s->drift) w["drift"] = {{"period_ms", s->drift->period}, {"shift", s->drift->shift}};
    if (s->formation) {
      w["formation"] = {{"switch_ms", s->formation->switch_time}, {"before", to_string(s->formation->before)}};
    }
  } else {
    const auto& g = std::get<GraphSpec>(c.workload);
    w = {{"type", "graph"},
         {"edge_list", g.edge_list},
         {"target_nodes", g.target_nodes},
         {"restart_prob", g.restart_prob},
         {"walk_len", g.walk_len}};
  }
  return json{
      {"name", c.name},
      {"seed", c.seed},
      {"dependency_bound", unbounded_json(c.dependency_bound, kUnbounded)},
      {"cache", {{"mode", to_string(c.cache_mode)}, {"strategy", to_string(c.strategy)}, {"ttl_ms", unbounded_json(c.ttl, kNoTtl)}}},
      {"channel",
       {{"drop_prob", c.drop_prob}, {"delay_min_ms", c.delay_min}, {"delay_max_ms", c.delay_max}, {"reorder", c.reorder}}},
      {"workload", w},
      {"clients", {{"update_rate", c.update_rate}, {"read_rate", c.read_rate}, {"read_gap_ms", c.read_gap}}},
      {"run",
       {{"duration_s", c.duration_s},
        {"warmup_s", c.warmup_s},
        {"time_compression", c.time_compression},
        {"report_bucket_ms", c.report_bucket},
        {"execution", c.execution == ExecutionMode::kDeterministic ? "deterministic" : "stress"},
        {"stress_threads", c.stress_threads}}},
  };
}

ExperimentConfig config_from_json(const json& j) {
  ExperimentConfig c;
  only_keys(j, "", {"name", "seed", "dependency_bound", "cache", "channel", "workload", "clients", "run"});
  read(j, "name", "", c.name);
  read(j, "seed", "", c.seed);
  read_unbounded(j, "dependency_bound", "", c.dependency_bound, kUnbounded);

  if (j.contains("cache")) {
    const auto& s = j.at("cache");
    only_keys(s, "cache", {"mode", "strategy", "ttl_ms"});
    c.cache_mode = read_enum(s, "mode", "cache.", parse_cache_mode, c.cache_mode);
    c.strategy = read_enum(s, "strategy", "cache.", parse_strategy, c.strategy);
    read_unbounded(s, "ttl_ms", "cache.", c.ttl, kNoTtl);
  }
  if (j.contains("channel")) {
    const auto& s = j.at("channel");
    only_keys(s, "channel", {"drop_prob", "delay_min_ms", "delay_max_ms", "reorder"});
    read(s, "drop_prob", "channel.", c.drop_prob);
    read(s, "delay_min_ms", "channel.", c.delay_min);
    read(s, "delay_max_ms", "channel.", c.delay_max);
    read(s, "reorder", "channel.", c.reorder);
  }
  if (j.contains("workload")) {
    const auto& s = j.at("workload");
    std::string type = "synthetic";
    read(s, "type", "workload.", type);
    if (type == "synthetic") {
      only_keys(s, "workload", {"type", "universe", "cluster_size", "mode", "alpha", "accesses", "drift", "formation"});
      SyntheticSpec w;
      read(s, "universe", "workload.", w.universe);
      read(s, "cluster_size", "workload.", w.cluster_size);
      w.mode = read_enum(s, "mode", "workload.", parse_access_mode, w.mode);
      read(s, "alpha", "workload.", w.alpha);
      read(s, "accesses", "workload.", w.accesses);
      if (s.contains("drift") && !s.at("drift").is_null()) {
        only_keys(s.at("drift"), "workload.drift", {"period_ms", "shift"});
        DriftSpec d;
        read(s.at("drift"), "period_ms", "workload.drift.", d.period);
        read(s.at("drift"), "shift", "workload.drift.", d.shift);
        w.drift = d;
      }
      if (s.contains("formation") && !s.at("formation").is_null()) {
        only_keys(s.at("formation"), "workload.formation", {"switch_ms", "before"});
        FormationSpec f;
        read(s.at("formation"), "switch_ms", "workload.formation.", f.switch_time);
        f.before = read_enum(s.at("formation"), "before", "workload.formation.", parse_access_mode, f.before);
        w.formation = f;
      }
      c.workload = w;
    } else if (type == "graph") {
      only_keys(s, "workload", {"type", "edge_list", "target_nodes", "restart_prob", "walk_len"});
      GraphSpec g;
      read(s, "edge_list", "workload.", g.edge_list);
      read(s, "target_nodes", "workload.", g.target_nodes);
      read(s, "restart_prob", "workload.", g.restart_prob);
      read(s, "walk_len", "workload.", g.walk_len);
      c.workload = g;
    } else {
      field_error("workload.type", "expected \"synthetic\" or \"graph\"");
    }
  }
  if (j.contains("clients")) {
    const auto& s = j.at("clients");
    only_keys(s, "clients", {"update_rate", "read_rate", "read_gap_ms"});
    read(s, "update_rate", "clients.", c.update_rate);
    read(s, "read_rate", "clients.", c.read_rate);
    read(s, "read_gap_ms", "clients.", c.read_gap);
  }
  if (j.contains("run")) {
    const auto& s = j.at("run");
    only_keys(s, "run",
              {"duration_s", "warmup_s", "time_compression", "report_bucket_ms", "execution", "stress_threads"});
    read(s, "duration_s", "run.", c.duration_s);
    read(s, "warmup_s", "run.", c.warmup_s);
    read(s, "time_compression", "run.", c.time_compression);
    read(s, "report_bucket_ms", "run.", c.report_bucket);
    std::string exec = "deterministic";
    read(s, "execution", "run.", exec);
    if (exec == "deterministic") {
      c.execution = ExecutionMode::kDeterministic;
    } else if (exec == "stress") {
      c.execution = ExecutionMode::kStress;
    } else {
      field_error("run.execution", "expected \"deterministic\" or \"stress\"");
    }
    read(s, "stress_threads", "run.", c.stress_threads);
  }
  c.validate();
  return c;
}

ExperimentConfig load_config(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open config '" + path + "'");
  json j;
  try {
    j = json::parse(in, nullptr, true, /*ignore_comments=*/true);
  } catch (const json::parse_error& e) {
    throw std::invalid_argument("config '" + path + "': " + e.what());
  }
  return config_from_json(j);
}

void apply_override(json& doc, std::string_view assignment) {
  const auto eq = assignment.find('=');
  if (eq == std::string_view::npos || eq == 0) {
    throw std::invalid_argument("override '" + std::string(assignment) + "' is not key=value");
  }
  const std::string path(assignment.substr(0, eq));
  const std::string raw(assignment.substr(eq + 1));
  json value;
  try {
    value = json::parse(raw);
  } catch (const json::parse_error&) {
    value = raw;
  }
  std::string pointer;
  for (char ch : path) pointer += ch == '.' ? '/' : ch;
  doc[json::json_pointer("/" + pointer)] = value;
}

}  // namespace tcache
