#include <doctest.h>

#include <cstdlib>
#include <sys/wait.h>

#include "gflow/cli.hpp"
#include "gflow/io.hpp"
#include "helpers.hpp"

using namespace gflow;
namespace fs = std::filesystem;

namespace {

int run_cli(const std::string& args) {
  const std::string cmd = std::string(GFLOW_CLI_PATH) + " " + args + " >/dev/null 2>&1";
  const int rc = std::system(cmd.c_str());
  return WIFEXITED(rc) ? WEXITSTATUS(rc) : -1;
}

std::string small_config(const fs::path& out, bool trajectories = true) {
  nlohmann::json cfg = {
      {"spec", {{"kind", "compact"}, {"alpha1", 1.0}, {"alpha2", 2.0}, {"extra_dims", 1}}},
      {"guidance", {{"w", {0, 3}}, {"target", "positive"}}},
      {"n", 8},
      {"seed", 5},
      {"outputs", {{"directory", out.string()}, {"trajectories", trajectories}}}};
  return cfg.dump(2);
}

}  // namespace

TEST_SUITE("cli") {

TEST_CASE("git blob hash") {
  CHECK(git_blob_hash("") == "e69de29bb2d1d6434b8b29ae775ad8c2e48c5391");
  CHECK(git_blob_hash("hello\n") == "ce013625030ba8dba906f756967f9e9ca394464a");
}

TEST_CASE("number formatting") {
  CHECK(format_number(0.1) == "0.1");
  CHECK(format_number(NAN) == "nan");
  CHECK(format_number(-INFINITY) == "-inf");
  CHECK(std::stod(format_number(1.0 / 3.0)) == 1.0 / 3.0);
  CHECK(format_w(3.0) == "3");
  CHECK(format_w(0.5) == "0.5");
}

TEST_CASE("config parsing and validation") {
  const auto cfg = parse_experiment_config(small_config("out"));
  CHECK(cfg.ws == std::vector<double>{0.0, 3.0});
  CHECK(cfg.n == 8);
  CHECK(cfg.spec.dim() == 2);
  CHECK(cfg.hash == git_blob_hash(small_config("out")));

  auto bad = nlohmann::json::parse(small_config("out"));
  bad["spec"]["alpha1"] = 0.0;
  CHECK_THROWS_WITH_AS(parse_experiment_config(bad.dump()), doctest::Contains("alpha1"), ConfigError);
  bad = nlohmann::json::parse(small_config("out"));
  bad["guidance"]["w"] = -2.0;
  CHECK_THROWS_AS(parse_experiment_config(bad.dump()), ConfigError);
  bad = nlohmann::json::parse(small_config("out"));
  bad["extra"] = 1;
  CHECK_THROWS_WITH_AS(parse_experiment_config(bad.dump()), doctest::Contains("extra"), ConfigError);
  CHECK_THROWS_AS(parse_experiment_config("{not json"), ConfigError);

  const auto preset = integrator_from_json({{"preset", "paper-6.1"}});
  CHECK(preset.method == IntegratorMethod::Rk4Fixed);
  CHECK(preset.max_steps == 1000);
  CHECK_THROWS_AS(integrator_from_json({{"horizon", 1.0}}), ConfigError);
  const auto mc = score_source_from_json({{"kind", "monte_carlo"}, {"samples", 500}, {"seed", 2}});
  CHECK(mc.kind == ScoreSourceKind::MonteCarlo);
  CHECK(mc.mc_samples == 500);
  CHECK_THROWS_AS(score_source_from_json({{"kind", "corrupted"}, {"samples", 5}}), ConfigError);
}

TEST_CASE("run writes reproducible, hash-stamped outputs") {
  const auto dir = testing::scratch_dir("run");
  auto cfg = parse_experiment_config(small_config(dir / "a"));
  const auto res = run_experiment(cfg, 2);
  CHECK(res.failures == 0);
  CHECK(fs::exists(dir / "a" / "batch_w0.csv"));
  CHECK(fs::exists(dir / "a" / "batch_w3.csv"));
  CHECK(fs::exists(dir / "a" / "meta_w3.json"));
  CHECK(fs::exists(dir / "a" / "trajectories_w3" / "traj_7.csv"));
  CHECK(fs::exists(dir / "a" / "sweep_summary.csv"));

  const auto batch = read_batch_csv(dir / "a" / "batch_w3.csv");
  CHECK(batch.config_hash == cfg.hash);
  CHECK(batch.w == 3.0);
  CHECK(batch.dim == 2);
  CHECK(batch.rows.size() == 8);
  const auto meta = nlohmann::json::parse(read_text_file(dir / "a" / "meta_w3.json"));
  CHECK(meta["config_hash"] == cfg.hash);
  const auto traj = read_trajectory_csv(dir / "a" / "trajectories_w3" / "traj_2.csv");
  CHECK(traj.seed_index == 2);
  CHECK(traj.times.size() * 2 == traj.states.size());
  CHECK(traj.states[traj.states.size() - 2] == batch.rows[2].final_state[0]);

  // Same config, different worker count: byte-identical batch files.
  cfg.outputs.directory = dir / "b";
  run_experiment(cfg, 1);
  CHECK(read_text_file(dir / "a" / "batch_w3.csv") == read_text_file(dir / "b" / "batch_w3.csv"));

  const auto files = export_plotdata(expand_glob((dir / "a" / "batch_w*.csv").string()),
                                     "meandiff:" + (dir / "a" / "batch_w3.csv").string() + "," +
                                         (dir / "a" / "batch_w0.csv").string(),
                                     dir, 50);
  REQUIRE(files.size() == 2);
  const auto bands = read_text_file(dir / "bands.csv");
  CHECK(bands.find("w,s,mean,std,lower,upper,count") != std::string::npos);
  CHECK(bands.find("# config_hash: " + cfg.hash) == 0);
  CHECK_THROWS_AS(export_plotdata({dir / "a" / "batch_w0.csv"}, "5", dir), ConfigError);
}

TEST_CASE("command-line exit codes") {
  const auto dir = testing::scratch_dir("exit");
  write_text_file(dir / "good.json", small_config(dir / "out", false));
  auto bad = nlohmann::json::parse(small_config(dir / "out"));
  bad["spec"]["alpha1"] = 0.0;
  write_text_file(dir / "bad.json", bad.dump());

  CHECK(run_cli("run --config " + (dir / "good.json").string()) == 0);
  CHECK(fs::exists(dir / "out" / "batch_w0.csv"));
  CHECK(run_cli("run --config " + (dir / "bad.json").string()) == 2);
  CHECK(run_cli("run --config " + (dir / "missing.json").string()) == 2);
  CHECK(run_cli("verify --suite nonsense") == 2);
  CHECK(run_cli("frobnicate") == 2);
  CHECK(run_cli("export-plotdata --input '" + (dir / "nothing*.csv").string() + "'") == 2);
  CHECK(run_cli("export-plotdata --input '" + (dir / "out" / "batch_w*.csv").string() +
                "' --projection 0 --out " + dir.string()) == 0);
  CHECK(fs::exists(dir / "scatter.csv"));
}

}  // TEST_SUITE
