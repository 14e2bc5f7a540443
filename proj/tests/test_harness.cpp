#include <gtest/gtest.h>

#include <filesystem>
#include <fstream>
#include <sstream>

#include "skyrescue/harness.hpp"
#include "support.hpp"

using namespace skyrescue;
using namespace skyrescue::harness;
using skyrescue::testing::shared_desk;
using skyrescue::testing::throws_kind;
namespace fs = std::filesystem;

namespace {

std::string fresh_dir(const std::string& name) {
  const fs::path p = fs::temp_directory_path() / ("skyrescue_" + name);
  fs::remove_all(p);
  fs::create_directories(p);
  return p.string();
}

std::vector<std::string> lines(const std::string& path) {
  std::ifstream is(path);
  std::vector<std::string> out;
  for (std::string l; std::getline(is, l);) out.push_back(l);
  return out;
}

std::vector<double> column(const std::string& path, const std::string& name) {
  const auto ls = lines(path);
  std::vector<std::string> header;
  std::stringstream hs(ls.at(0));
  for (std::string c; std::getline(hs, c, ',');) header.push_back(c);
  const auto idx = static_cast<std::size_t>(std::find(header.begin(), header.end(), name) - header.begin());
  std::vector<double> out;
  for (std::size_t i = 1; i < ls.size(); ++i) {
    std::stringstream rs(ls[i]);
    std::string c;
    for (std::size_t k = 0; k <= idx; ++k) std::getline(rs, c, ',');
    out.push_back(std::stod(c));
  }
  return out;
}

// A finished run directory: scenario, curve, one episode's artifacts, manifest.
std::string make_run(const std::string& name) {
  const std::string dir = fresh_dir(name);
  auto scn = shared_desk();
  trainer::TrainerConfig cfg = trainer::TrainerConfig::desk();
  cfg.episodes = 4;
  const trainer::TrainResult r = trainer::train(scn, cfg, trainer::Variant::random);
  scenario::save_scenario_file(*scn, dir + "/scenario.scn.json");
  write_reward_curve(dir + "/reward_curve.csv", r.curve);
  write_episode_artifacts(dir, *scn, r.last_episode.records, r.last_episode.resource_maps, r.last_plan);
  write_manifest(dir, {"skyrescue", "train"}, to_json(cfg),
                 {"scenario.scn.json", "reward_curve.csv", "trajectory.csv", "resource_map.csv"});
  return dir;
}

}  // namespace

TEST(Harness, Fnv1a) {
  EXPECT_EQ(fnv1a64(""), 0xcbf29ce484222325ULL);
  EXPECT_EQ(fnv1a64("a"), 0xaf63dc4c8601ec8cULL);
  const std::string dir = fresh_dir("hash");
  { std::ofstream(dir + "/x.txt") << "a"; }
  EXPECT_EQ(hash_file(dir + "/x.txt"), "af63dc4c8601ec8c");
  EXPECT_TRUE(throws_kind([&] { hash_file(dir + "/none"); }, ErrorKind::missing_artifact));
}

TEST(Harness, OracleAssignment) {
  Eigen::MatrixXd c(2, 2);
  c << 1, 2, 2, 1;
  EXPECT_EQ(oracle_assignment(c), 2.0);
  EXPECT_EQ(oracle_assignment(Eigen::MatrixXd::Zero(4, 4)), 0.0);
  EXPECT_TRUE(throws_kind([] { oracle_assignment(Eigen::MatrixXd::Zero(9, 9)); }, ErrorKind::too_large));
  EXPECT_TRUE(throws_kind([] { oracle_assignment(Eigen::MatrixXd::Zero(3, 2)); }, ErrorKind::cardinality_mismatch));
  Rng rng(1);
  std::uniform_real_distribution<double> u(0, 1);
  for (int trial = 0; trial < 20; ++trial) {
    Eigen::MatrixXd m(7, 7);
    for (int i = 0; i < 7; ++i)
      for (int j = 0; j < 7; ++j) m(i, j) = u(rng);
    EXPECT_NEAR(oracle_assignment(m), assignment::hungarian_solve(m).total_cost, 1e-12);
  }
}

TEST(Harness, OraclePerSlotSingleton) {
  env::World w(shared_desk(), {}, 1);
  const PerSlotChoice c = oracle_perslot(w, 0, {0.5}, {{costmodel::TargetKind::local, -1}});
  EXPECT_EQ(c.index, 0u);
  EXPECT_EQ(c.decision.target.kind, costmodel::TargetKind::local);
  EXPECT_EQ(c.decision.local_fraction, 1.0);
}

TEST(Harness, OraclePerSlotAgreesWithArgminOnRandomWorlds) {
  Rng rng(2);
  std::uniform_real_distribution<double> q(0, 50), v(0.1, 5);
  const env::RandomPolicy rp;
  const auto grid = env::fraction_grid(11);
  for (int world = 0; world < 100; ++world) {
    auto scn = skyrescue::testing::shared_desk(static_cast<std::uint64_t>(100 + world));
    env::EnvConfig cfg;
    cfg.V = v(rng);
    env::World w(scn, cfg, static_cast<std::uint64_t>(world));
    const int steps = world % 7;
    for (int s = 0; s < steps; ++s) {
      std::vector<env::VectorXd> acts;
      for (int u = 0; u < 3; ++u) acts.push_back(rp.act(w, u, w.observe(u), rng));
      w.step(acts);
    }
    const int u = world % 3;
    w.mutable_uav(u).queue.q_value = world % 5 == 0 ? 0.0 : q(rng);
    const PerSlotChoice oracle = oracle_perslot(w, u, grid, legal_targets(w, u));
    const auto cands = env::enumerate_candidates(w, u, grid);
    const auto idx = lyapunov::per_slot_argmin_index(cands, w.uav(u).queue);
    EXPECT_EQ(oracle.index, idx) << "world " << world;
    EXPECT_EQ(oracle.decision.target, cands[idx].decision.target);
  }
}

TEST(Harness, ZeroQueueMinimisesLatency) {
  env::World w(shared_desk(), {}, 3);
  const auto grid = env::fraction_grid(11);
  for (int u = 0; u < 3; ++u) {
    const PerSlotChoice c = oracle_perslot(w, u, grid, legal_targets(w, u));
    for (const auto& cand : env::enumerate_candidates(w, u, grid)) EXPECT_LE(c.t_total_s, cand.t_total_s);
  }
}

TEST(Harness, ConfigJsonRoundTrip) {
  scenario::GenConfig g;
  g.gers = 40;
  g.data_gb_max = 60.0;
  EXPECT_EQ(to_json(gen_config_from_json(to_json(g))), to_json(g));
  trainer::TrainerConfig t = trainer::TrainerConfig::full();
  t.env.V = 3.5;
  t.env.assignment_mode = assignment::Mode::round_robin;
  t.seed = 77;
  const trainer::TrainerConfig back = trainer_config_from_json(to_json(t));
  EXPECT_EQ(back.batch, 512);
  EXPECT_EQ(back.env.V, 3.5);
  EXPECT_EQ(back.seed, 77u);
  EXPECT_EQ(to_json(back), to_json(t));
}

TEST(Harness, SweepGridParsing) {
  EXPECT_EQ(parse_grid("12.5,50,125GB"), (std::vector<double>{12.5, 50, 125}));
  EXPECT_EQ(parse_grid("1TF, 2TF"), (std::vector<double>{1, 2}));
  EXPECT_TRUE(throws_kind([] { parse_grid("a,b"); }, ErrorKind::usage_error));
  EXPECT_EQ(parse_sweep_var("data_size"), SweepVar::data_size);
  EXPECT_TRUE(throws_kind([] { parse_sweep_var("colour"); }, ErrorKind::usage_error));
  for (SweepVar v : {SweepVar::V, SweepVar::ger_compute, SweepVar::ger_count, SweepVar::data_size,
                     SweepVar::denoise_steps, SweepVar::batch, SweepVar::lr})
    EXPECT_EQ(parse_sweep_var(to_string(v)), v);
}

TEST(Harness, RunArtifactsAndPlotData) {
  const std::string run = make_run("run");
  EXPECT_EQ(lines(run + "/reward_curve.csv").size(), 5u);
  EXPECT_EQ(lines(run + "/trajectory.csv").size(), 1u + 75u);
  const auto traj_uav = column(run + "/trajectory.csv", "uav_id");
  for (int id = 0; id < 3; ++id) EXPECT_EQ(std::count(traj_uav.begin(), traj_uav.end(), static_cast<double>(id)), 25);
  EXPECT_EQ(lines(run + "/assignment.csv").size(), 1u + 15u);
  const auto mx = column(run + "/resource_map.csv", "max_flops");
  const auto rem = column(run + "/resource_map.csv", "remaining_flops");
  ASSERT_EQ(mx.size(), 75u * 25u);
  for (std::size_t i = 0; i < mx.size(); ++i) EXPECT_LE(rem[i], mx[i]);
  EXPECT_EQ(lines(run + "/episode_log.ndjson").size(), 75u);
  const json first = json::parse(lines(run + "/episode_log.ndjson")[0]);
  for (const char* k : {"episode", "slot", "uav", "action", "reward", "t_total", "e_total", "q"})
    EXPECT_TRUE(first.contains(k)) << k;

  const json m = read_manifest(run + "/manifest.json");
  EXPECT_EQ(m["artifacts"]["reward_curve.csv"], hash_file(run + "/reward_curve.csv"));

  const std::string out = fresh_dir("plot");
  const auto written = emit_plotdata(run, out);
  EXPECT_EQ(written.size(), 4u);
  EXPECT_EQ(lines(out + "/plot_reward_curve.csv").size(), 5u);
  EXPECT_EQ(lines(out + "/plot_round_trajectory.csv").size(), 76u);
  EXPECT_EQ(lines(out + "/plot_resource_map.csv").size(), 76u);
  EXPECT_EQ(lines(out + "/plot_queue_energy.csv").size(), 76u);
  EXPECT_TRUE(throws_kind([&] { emit_plotdata(fresh_dir("empty"), out); }, ErrorKind::missing_artifact));
}

TEST(Harness, SweepOrderIndependence) {
  SweepSpec spec;
  spec.var = SweepVar::V;
  spec.variant = trainer::Variant::lyapunov;
  spec.trainer = trainer::TrainerConfig::desk();
  spec.trainer.episodes = 1;
  spec.eval_episodes = 1;
  spec.grid = {0.5, 2.0, 8.0};
  spec.threads = 1;
  spec.out_dir = fresh_dir("sweep_a");
  const auto a = run_sweep(spec);
  spec.grid = {8.0, 0.5, 2.0};
  spec.threads = 3;
  spec.out_dir = fresh_dir("sweep_b");
  const auto b = run_sweep(spec);
  ASSERT_EQ(a.size(), 3u);
  EXPECT_EQ(a[0].mean_latency_s, b[1].mean_latency_s);
  EXPECT_EQ(a[1].mean_latency_s, b[2].mean_latency_s);
  EXPECT_EQ(a[2].mean_latency_s, b[0].mean_latency_s);
  EXPECT_EQ(a[2].mean_energy_j, b[0].mean_energy_j);
  EXPECT_EQ(lines(spec.out_dir + "/sweep.csv").size(), 4u);
  EXPECT_TRUE(fs::exists(spec.out_dir + "/latency_vs_V.csv"));

  spec.grid.clear();
  EXPECT_TRUE(throws_kind([&] { run_sweep(spec); }, ErrorKind::invalid_range));
  spec.grid = {1.0};
  spec.eval_seeds = {spec.trainer.seed};
  EXPECT_TRUE(throws_kind([&] { run_sweep(spec); }, ErrorKind::invalid_range));
}

TEST(Harness, DataSizeSweepRows) {
  SweepSpec spec;
  spec.var = SweepVar::data_size;
  spec.variant = trainer::Variant::greedy_local;
  spec.trainer.episodes = 1;
  spec.eval_episodes = 1;
  spec.grid = parse_grid("12.5,50,125GB");
  spec.out_dir = fresh_dir("sweep_data");
  const auto rows = run_sweep(spec);
  ASSERT_EQ(rows.size(), 3u);
  EXPECT_LT(rows[0].mean_latency_s, rows[2].mean_latency_s);
}

TEST(Harness, ThreadBudget) {
  EXPECT_EQ(thread_budget(3), 3);
  EXPECT_GE(thread_budget(0), 1);
}
