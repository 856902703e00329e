#include <doctest.h>

#include <sstream>
#include <stdexcept>

#include "tcache/harness.hpp"

using namespace tcache;

namespace {

ExperimentConfig small(double seconds = 20) {
  ExperimentConfig c;
  SyntheticSpec s;
  s.universe = 500;
  s.cluster_size = 5;
  s.mode = AccessMode::kPareto;
  s.alpha = 1.0;
  c.workload = s;
  c.duration_s = seconds;
  c.warmup_s = 2;
  return c;
}

}  // namespace

TEST_CASE("lossless channel with unbounded lists and perfect clusters commits nothing inconsistent") {
  auto c = small();
  c.drop_prob = 0.0;
  c.dependency_bound = kUnbounded;
  std::get<SyntheticSpec>(c.workload).mode = AccessMode::kPerfect;
  const auto r = run_experiment(c);
  CHECK(r.report.read_only_total() > 0);
  CHECK(r.report.committed_inconsistent == 0);
  CHECK(r.update_graph_acyclic);
}

TEST_CASE("clients issue exactly rate times duration transactions") {
  auto c = small(60);
  const auto r = run_experiment(c);
  CHECK(r.updates_issued == 6000);
  CHECK(r.reads_issued == 30000);
  CHECK(r.measured_seconds == doctest::Approx(58.0));

  c.read_rate = 0;
  const auto quiet = run_experiment(c);
  CHECK(quiet.reads_issued == 0);
  CHECK(quiet.report.read_only_total() == 0);
  CHECK(quiet.updates_issued == 6000);
}

TEST_CASE("deterministic runs repeat exactly") {
  const auto c = small();
  const auto a = run_experiment(c);
  const auto b = run_experiment(c);
  CHECK(summary_json(a).dump() == summary_json(b).dump());
  std::ostringstream sa, sb;
  write_series_csv(a.report, sa);
  write_series_csv(b.report, sb);
  CHECK(sa.str() == sb.str());

  auto other = c;
  other.seed = 2;
  CHECK(summary_json(run_experiment(other)).dump() != summary_json(a).dump());
}

TEST_CASE("loss and short lists produce detectable inconsistency") {
  auto c = small();
  c.dependency_bound = 0;
  const auto unaware = run_experiment(c);
  CHECK(unaware.report.committed_inconsistent > 0);
  c.dependency_bound = 5;
  const auto aware = run_experiment(c);
  CHECK(aware.report.committed_inconsistent < unaware.report.committed_inconsistent);
  CHECK(aware.report.aborted_would_be_inconsistent > 0);
}

TEST_CASE("stress mode runs to completion") {
  auto c = small(5);
  c.execution = ExecutionMode::kStress;
  c.stress_threads = 3;
  const auto r = run_experiment(c);
  CHECK(r.updates_issued == 500);
  CHECK(r.reads_issued == 2500);
  CHECK(r.report.read_only_total() == 2500);
  CHECK(r.update_graph_acyclic);
}

TEST_CASE("preset catalogue") {
  const auto names = preset_names();
  CHECK(names.size() == 8);
  CHECK_THROWS_AS((void)preset_base("no-such-preset"), std::invalid_argument);
  for (const auto& n : names) {
    CAPTURE(n);
    CHECK_FALSE(preset_configs(n).empty());
  }
  const auto points = preset_configs("strategy", {"run.duration_s=7"});
  REQUIRE(points.size() == 3);
  CHECK(points[1].second.strategy == Strategy::kEvict);
  CHECK(points[2].second.duration_s == 7.0);
  CHECK_THROWS_AS((void)preset_configs("strategy", {"cache.bogus=1"}), std::invalid_argument);
}

TEST_CASE("preset outputs are RFC 4180 and echo the config") {
  const auto p = run_preset("strategy", {"run.duration_s=8", "run.warmup_s=1"});
  REQUIRE(p.points.size() == 3);
  std::ostringstream csv;
  write_combined_csv(p, csv);
  const auto text = csv.str();
  CHECK(text.rfind("sweep_value,consistent%,inconsistent%,abort%,hit_ratio,db_reads_per_s\r\n", 0) == 0);
  CHECK(std::count(text.begin(), text.end(), '\n') == 4);
  CHECK(std::count(text.begin(), text.end(), '\r') == 4);

  const auto j = summary_json(p);
  CHECK(j["code_version"] == std::string(code_version()));
  CHECK(j["points"].size() == 3);

  std::ostringstream dat;
  write_gnuplot(p, dat);
  CHECK(dat.str().find(std::string(code_version())) != std::string::npos);

  const auto dir = std::filesystem::temp_directory_path() / "tcache_test_outputs";
  std::filesystem::remove_all(dir);
  const auto files = write_preset_outputs(p, dir);
  CHECK(files.size() == 3);
  for (const auto& f : files) CHECK(std::filesystem::exists(f));
  std::filesystem::remove_all(dir);
}

TEST_CASE("series csv") {
  const auto r = run_experiment(small(3));
  std::ostringstream out;
  write_series_csv(r.report, out);
  const auto text = out.str();
  CHECK(text.rfind("t_s,consistent%,inconsistent%,abort%,read_only_txns\r\n", 0) == 0);
  CHECK(std::count(text.begin(), text.end(), '\n') == std::count(text.begin(), text.end(), '\r'));
}

TEST_CASE("small histories: unbounded lists never commit an inconsistent read") {
  ValidateOptions o;
  o.trials = 1500;
  const auto r = validate_small(o);
  CHECK(r.trials == 1500);
  CHECK(r.read_only_committed > 0);
  CHECK(r.read_only_aborted > 0);
  CHECK(r.oracle_inconsistent == 0);
  CHECK(r.disagreements == 0);
}

TEST_CASE("small histories: empty lists commit inconsistent reads and the monitor agrees") {
  ValidateOptions o;
  o.trials = 1500;
  o.dependency_bound = 0;
  const auto dir = std::filesystem::temp_directory_path() / "tcache_test_traces";
  std::filesystem::remove_all(dir);
  o.trace_dir = dir;
  const auto r = validate_small(o);
  CHECK(r.oracle_inconsistent > 0);
  CHECK(r.disagreements == 0);
  REQUIRE_FALSE(r.traces.empty());
  const auto again = replay_trace(r.traces.front());
  CHECK(again.trials == 1);
  CHECK(again.oracle_inconsistent > 0);
  std::filesystem::remove_all(dir);
}
