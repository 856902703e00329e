#include <cstdlib>
#include <fstream>
#include <iostream>
#include <optional>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <fmt/format.h>

#include "tcache/harness.hpp"

namespace {

using namespace tcache;

void print_summary(const std::string& label, const RunResult& r) {
  const auto& m = r.report;
  fmt::print("{:>10}  consistent {:6.2f}%  inconsistent {:6.2f}%  abort {:6.2f}%  detect {:5.3f}  hit {:5.3f}  "
             "db_reads/s {:8.1f}\n",
             label, 100.0 * m.consistent_band(), 100.0 * m.inconsistent_band(), 100.0 * m.abort_band(),
             m.detection_ratio(), r.cache.hit_ratio(), r.db_reads_per_s());
}

void print_paths(const std::vector<std::filesystem::path>& paths) {
  for (const auto& p : paths) fmt::print("wrote {}\n", p.string());
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Transactional edge-cache simulator"};
  app.require_subcommand(1);
  app.fallthrough();
  std::optional<std::uint64_t> seed;
  std::string out_dir = "out";
  app.add_option("--seed", seed, "Seed for every run (overrides config)");
  app.add_option("--out-dir", out_dir, "Directory for CSV/JSON/gnuplot outputs")->capture_default_str();

  auto* run = app.add_subcommand("run", "Run one experiment from a config file");
  std::string config_path;
  std::vector<std::string> run_overrides;
  run->add_option("--config", config_path, "JSON config file")->required()->check(CLI::ExistingFile);
  run->add_option("--override", run_overrides, "key.path=value, applied after the file");

  auto* preset = app.add_subcommand("preset", "Run a named parameter sweep");
  std::string preset_name;
  std::vector<std::string> preset_overrides;
  preset->add_option("name", preset_name, "Preset name")->required()->check(CLI::IsMember(preset_names()));
  preset->add_option("--override", preset_overrides, "key.path=value, applied to every sweep point");

  auto* list = app.add_subcommand("list-presets", "Print preset names");

  auto* validate = app.add_subcommand("validate-small", "Check tiny random histories against the exhaustive oracle");
  ValidateOptions vopt;
  std::string bound = "inf";
  std::string trace_dir;
  validate->add_option("--trials", vopt.trials)->capture_default_str();
  validate->add_option("--dependency-bound", bound, "Integer or inf")->capture_default_str();
  validate->add_option("--drop", vopt.drop_prob)->capture_default_str();
  validate->add_option("--trace-dir", trace_dir, "Where failing traces go (default <out-dir>/traces)");

  auto* replay = app.add_subcommand("replay", "Re-run a trace written by validate-small");
  std::string trace_path;
  replay->add_option("trace", trace_path)->required()->check(CLI::ExistingFile);

  auto* gen = app.add_subcommand("gen-graph", "Write a planted-community graph as an edge list");
  std::size_t nodes = 4000, min_size = 3, max_size = 8;
  double p_in = 0.7, bridges = 0.3;
  std::string graph_out = "clustered_graph.txt";
  gen->add_option("--nodes", nodes)->capture_default_str();
  gen->add_option("--min-size", min_size)->capture_default_str();
  gen->add_option("--max-size", max_size)->capture_default_str();
  gen->add_option("--p-in", p_in)->capture_default_str();
  gen->add_option("--bridges", bridges, "Inter-community edges per node")->capture_default_str();
  gen->add_option("--out", graph_out)->capture_default_str();

  CLI11_PARSE(app, argc, argv);

  try {
    if (run->parsed()) {
      std::ifstream in(config_path);
      auto doc = nlohmann::json::parse(in, nullptr, true, true);
      for (const auto& o : run_overrides) apply_override(doc, o);
      if (seed) doc["seed"] = *seed;
      const auto cfg = config_from_json(doc);
      const auto r = run_experiment(cfg);
      print_summary(cfg.name, r);
      print_paths(write_run_outputs(r, out_dir));
    } else if (preset->parsed()) {
      if (seed) preset_overrides.push_back(fmt::format("seed={}", *seed));
      const auto p = run_preset(preset_name, preset_overrides);
      for (const auto& pt : p.points) print_summary(pt.sweep_value, pt.result);
      print_paths(write_preset_outputs(p, out_dir));
    } else if (list->parsed()) {
      for (const auto& n : preset_names()) fmt::print("{}\n", n);
    } else if (validate->parsed()) {
      if (seed) vopt.seed = *seed;
      vopt.dependency_bound = bound == "inf" ? kUnbounded : std::stoul(bound);
      vopt.trace_dir = trace_dir.empty() ? std::filesystem::path(out_dir) / "traces" : std::filesystem::path(trace_dir);
      const auto r = validate_small(vopt);
      fmt::print("trials {}  updates {}  read-only committed {}  aborted {}\n", r.trials, r.update_commits,
                 r.read_only_committed, r.read_only_aborted);
      fmt::print("committed inconsistent (oracle) {}  monitor/oracle disagreements {}  joint failures {}  {:.1f}s\n",
                 r.oracle_inconsistent, r.disagreements, r.joint_failures, r.seconds);
      print_paths(r.traces);
      return r.oracle_inconsistent == 0 && r.disagreements == 0 ? 0 : 1;
    } else if (replay->parsed()) {
      const auto r = replay_trace(trace_path);
      fmt::print("committed inconsistent {}  disagreements {}  joint failure {}\n", r.oracle_inconsistent,
                 r.disagreements, r.joint_failures);
    } else if (gen->parsed()) {
      Rng rng(seed.value_or(1));
      const auto g = make_clustered_graph(nodes, min_size, max_size, p_in, bridges, rng);
      std::ofstream out(graph_out);
      write_edge_list(g, out,
                      fmt::format("planted communities: nodes {} sizes {}-{} p_in {} bridges {} seed {}", nodes,
                                  min_size, max_size, p_in, bridges, seed.value_or(1)));
      fmt::print("{} nodes, {} edges, average clustering {:.4f}\n", g.num_nodes(), g.num_edges(),
                 average_clustering(g));
    }
  } catch (const std::exception& e) {
    fmt::print(stderr, "error: {}\n", e.what());
    return 2;
  }
  return 0;
}
