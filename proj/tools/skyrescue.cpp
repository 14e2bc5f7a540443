// skyrescue command-line front end.
#include <algorithm>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <memory>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <json.hpp>

#include "skyrescue/assignment.hpp"
#include "skyrescue/error.hpp"
#include "skyrescue/harness.hpp"
#include "skyrescue/lyapunov.hpp"
#include "skyrescue/scenario.hpp"
#include "skyrescue/trainer.hpp"

namespace fs = std::filesystem;
using namespace skyrescue;
using nlohmann::json;

namespace {

struct GenFlags {
  scenario::GenConfig gen;
  std::uint64_t seed = 7;
  std::string scenario_path;

  void add(CLI::App* cmd, bool allow_file) {
    cmd->add_option("--uavs", gen.uavs, "number of UAVs");
    cmd->add_option("--rounds", gen.rounds, "assignment rounds");
    cmd->add_option("--slots-per-round", gen.slots_per_round, "slots per round");
    cmd->add_option("--subareas", gen.subareas, "subareas (0 = uavs x rounds)");
    cmd->add_option("--gers", gen.gers, "ground robots");
    cmd->add_option("--region-m", gen.region_m, "square region side in metres");
    cmd->add_option("--data-gb", gen.data_gb_max, "upper subarea data size in GB");
    cmd->add_option("--ger-tflops", gen.ger_tflops_max, "upper GER compute in TFLOPs");
    cmd->add_option("--budget-j", gen.energy_budget_j, "per-slot energy budget");
    if (allow_file) {
      cmd->add_option("--scenario", scenario_path, "existing .scn.json (overrides generation flags)");
      cmd->add_option("--scenario-seed", seed, "generator seed");
    } else {
      cmd->add_option("--seed", seed, "generator seed");
    }
  }

  scenario::Scenario make() const {
    if (!scenario_path.empty()) return scenario::load_scenario_file(scenario_path);
    return scenario::generate_scenario(gen, seed);
  }
};

struct TrainFlags {
  std::string variant = "hg";
  std::string preset = "desk";
  int episodes = -1;
  std::uint64_t seed = 1;
  int batch = 0;
  double lr = 0.0;
  double V = -1.0;
  int steps = 0;

  void add(CLI::App* cmd) {
    cmd->add_option("--variant", variant, "hg | plain | random | greedy-local | lyapunov");
    cmd->add_option("--preset", preset, "desk | full | batch300 | default")
        ->check(CLI::IsMember({"desk", "full", "batch300", "default"}));
    cmd->add_option("--episodes", episodes, "training episodes");
    cmd->add_option("--seed", seed, "training seed");
    cmd->add_option("--batch", batch, "mini-batch size");
    cmd->add_option("--lr", lr, "actor and critic learning rate");
    cmd->add_option("--V", V, "drift-plus-penalty weight");
    cmd->add_option("--denoise-steps", steps, "diffusion steps");
  }

  trainer::TrainerConfig make() const {
    trainer::TrainerConfig c = preset == "desk"    ? trainer::TrainerConfig::desk()
                               : preset == "full" ? trainer::TrainerConfig::full()
                               : preset == "batch300" ? trainer::TrainerConfig::batch300()
                                                   : trainer::TrainerConfig{};
    if (episodes >= 0) c.episodes = episodes;
    c.seed = seed;
    if (batch > 0) c.batch = batch;
    if (lr > 0.0) c.actor_lr = c.critic_lr = lr;
    if (V >= 0.0) c.env.V = V;
    if (steps > 0) c.denoise_steps = steps;
    return c;
  }
};

json metrics_json(const trainer::EvalResult& e) {
  return {{"mean_latency_s", e.mean_latency_s},
          {"mean_energy_j", e.mean_energy_j},
          {"mean_reward", e.mean_reward},
          {"mean_q", e.mean_q},
          {"episodes", e.episodes.size()},
          {"audit",
           {{"records", e.audit.records},
            {"unflagged_static", e.audit.unflagged_static},
            {"unlogged_mobility", e.audit.unlogged_mobility},
            {"mobility_violations", e.audit.mobility_violations}}}};
}

void write_json(const std::string& path, const json& j) {
  std::ofstream f(path);
  if (!f) throw Error(ErrorKind::io_error, "cannot write " + path);
  f << j.dump(2) << '\n';
}

Eigen::MatrixXd parse_matrix(const std::string& text) {
  std::vector<std::vector<double>> rows;
  std::string body = text;
  std::replace(body.begin(), body.end(), '/', ';');  // shells and cmake mangle ';'
  std::stringstream ss(body);
  std::string row;
  while (std::getline(ss, row, ';')) {
    std::vector<double> r;
    std::stringstream rs(row);
    std::string cell;
    while (std::getline(rs, cell, ',')) {
      try {
        r.push_back(std::stod(cell));
      } catch (const std::exception&) {
        throw Error(ErrorKind::usage_error, "bad matrix entry '" + cell + "'");
      }
    }
    if (!rows.empty() && r.size() != rows[0].size()) throw Error(ErrorKind::usage_error, "ragged matrix");
    rows.push_back(r);
  }
  if (rows.empty()) throw Error(ErrorKind::usage_error, "empty matrix");
  Eigen::MatrixXd m(static_cast<Eigen::Index>(rows.size()), static_cast<Eigen::Index>(rows[0].size()));
  for (std::size_t i = 0; i < rows.size(); ++i)
    for (std::size_t j = 0; j < rows[i].size(); ++j)
      m(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)) = rows[i][j];
  return m;
}

int run(const std::vector<std::string>& argv) {
  CLI::App app{"UAV rescue offloading simulator, trainer and oracles"};
  app.require_subcommand(0, 1);
  std::string from_manifest;
  std::string out;
  app.add_option("--from-manifest", from_manifest, "re-run the command recorded in a manifest.json");

  GenFlags gen_flags;
  auto* gen = app.add_subcommand("gen", "generate a scenario");
  gen_flags.add(gen, false);
  gen->add_option("--out", out, "output directory")->required();

  std::string validate_path;
  auto* validate = app.add_subcommand("validate", "check a scenario file");
  validate->add_option("scenario", validate_path, "path to .scn.json")->required();

  GenFlags train_gen;
  TrainFlags train_flags;
  auto* train = app.add_subcommand("train", "train a variant and export curves");
  train_gen.add(train, true);
  train_flags.add(train);
  train->add_option("--out", out, "output directory")->required();

  std::string eval_run;
  int eval_episodes = 10;
  std::uint64_t eval_seed = 1000001;
  auto* eval = app.add_subcommand("eval", "evaluate a trained run on held-out seeds");
  eval->add_option("--run", eval_run, "directory written by train")->required();
  eval->add_option("--episodes", eval_episodes, "evaluation episodes");
  eval->add_option("--eval-seed", eval_seed, "evaluation seed");
  eval->add_option("--out", out, "output directory")->required();

  GenFlags sweep_gen;
  TrainFlags sweep_train;
  std::string sweep_var, sweep_grid;
  std::vector<std::uint64_t> sweep_seeds{1000001};
  int sweep_eval_episodes = 5;
  int threads = 0;
  auto* sweep = app.add_subcommand("sweep", "latency/energy over a parameter grid");
  sweep_gen.add(sweep, true);
  sweep_train.add(sweep);
  sweep->add_option("--var", sweep_var, "V | ger_compute | ger_count | data_size | denoise_steps | batch | lr")
      ->required();
  sweep->add_option("--grid", sweep_grid, "comma-separated values, units allowed (12.5,50,125GB)")->required();
  sweep->add_option("--eval-seeds", sweep_seeds, "evaluation seeds")->delimiter(',');
  sweep->add_option("--eval-episodes", sweep_eval_episodes, "evaluation episodes per seed");
  sweep->add_option("--threads", threads, "worker threads (default SKYRESCUE_THREADS)");
  sweep->add_option("--out", out, "output directory")->required();

  auto* oracle = app.add_subcommand("oracle", "brute-force reference solvers");
  oracle->require_subcommand(1);
  std::string matrix;
  int random_n = 0;
  std::uint64_t oracle_seed = 1;
  auto* o_assign = oracle->add_subcommand("assignment", "exhaustive assignment minimum");
  auto* matrix_opt = o_assign->add_option("--matrix", matrix, "rows separated by ';' or '/', entries by ','");
  o_assign->add_option("--random", random_n, "random n x n matrix instead")->excludes(matrix_opt);
  o_assign->add_option("--seed", oracle_seed, "seed for --random");
  GenFlags perslot_gen;
  int perslot_uav = 0, perslot_grid = 11, perslot_slots = 0;
  double perslot_q = 0.0;
  auto* o_perslot = oracle->add_subcommand("perslot", "exhaustive per-slot drift-plus-penalty minimum");
  perslot_gen.add(o_perslot, true);
  o_perslot->add_option("--uav", perslot_uav, "UAV index");
  o_perslot->add_option("--grid", perslot_grid, "local-fraction grid points");
  o_perslot->add_option("--q", perslot_q, "virtual queue value");
  o_perslot->add_option("--advance", perslot_slots, "slots to advance with local actions first");
  o_perslot->add_option("--seed", oracle_seed, "world seed");
  for (auto* c : {o_assign, o_perslot}) c->add_option("--out", out, "write oracle.json here");

  std::string plot_run;
  auto* plot = app.add_subcommand("plotdata", "plot-ready CSVs from a run directory");
  plot->add_option("--run", plot_run, "run directory")->required();
  plot->add_option("--out", out, "output directory")->required();

  std::vector<std::string> rev(argv.rbegin(), argv.rend() - 1);
  try {
    app.parse(rev);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return 2;
  }

  if (!from_manifest.empty()) {
    if (app.get_subcommands().size() > 0) {
      std::cerr << "--from-manifest takes no subcommand\n";
      return 2;
    }
    const json m = harness::read_manifest(from_manifest);
    // Replays the recorded command verbatim, outputs included.
    return run(m.at("argv").get<std::vector<std::string>>());
  }
  if (app.get_subcommands().empty()) {
    std::cerr << app.help();
    return 2;
  }

  if (!out.empty()) fs::create_directories(out);

  if (*gen) {
    const scenario::Scenario scn = gen_flags.make();
    scenario::save_scenario_file(scn, out + "/scenario.scn.json");
    json cfg = {{"gen", harness::to_json(gen_flags.gen)}, {"seed", gen_flags.seed}};
    harness::write_manifest(out, argv, cfg, {"scenario.scn.json"});
    std::cout << out << "/scenario.scn.json\n";
    return 0;
  }

  if (*validate) {
    const scenario::Scenario scn = scenario::load_scenario_file(validate_path);
    std::cout << "ok: " << scn.uavs.size() << " UAVs, " << scn.subareas.size() << " subareas, " << scn.gers.size()
              << " GERs\n";
    return 0;
  }

  if (*train) {
    auto scn = std::make_shared<const scenario::Scenario>(train_gen.make());
    const auto variant = trainer::parse_variant(train_flags.variant);
    const trainer::TrainerConfig cfg = train_flags.make();
    const trainer::TrainResult r = trainer::train(scn, cfg, variant);
    scenario::save_scenario_file(*scn, out + "/scenario.scn.json");
    harness::write_reward_curve(out + "/reward_curve.csv", r.curve);
    harness::write_episode_artifacts(out, *scn, r.last_episode.records, r.last_episode.resource_maps, r.last_plan);
    std::vector<std::string> artifacts{"scenario.scn.json",  "reward_curve.csv",  "queue_trace.csv",
                                       "trajectory.csv",     "assignment.csv",    "cost_breakdown.csv",
                                       "resource_map.csv",   "episode_log.ndjson"};
    if (trainer::learns(variant)) {
      trainer::save_checkpoints(r, out + "/checkpoints");
      for (std::size_t u = 0; u < r.agents.size(); ++u) {
        artifacts.push_back("checkpoints/actor_" + std::to_string(u) + ".skyn");
        artifacts.push_back("checkpoints/critic_" + std::to_string(u) + ".skyn");
      }
    }
    const auto& last = r.curve.empty() ? env::EpisodeMetrics{} : r.curve.back();
    write_json(out + "/metrics.json", {{"variant", trainer::to_string(variant)},
                                       {"episodes", r.curve.size()},
                                       {"updates", r.updates},
                                       {"final_mean_reward", last.mean_reward},
                                       {"final_mean_latency_s", last.mean_latency_s},
                                       {"final_mean_energy_j", last.mean_energy_j},
                                       {"audit_unflagged_static", r.audit.unflagged_static},
                                       {"audit_unlogged_mobility", r.audit.unlogged_mobility}});
    artifacts.push_back("metrics.json");
    json cfg_doc = {{"variant", trainer::to_string(variant)}, {"trainer", harness::to_json(cfg)}};
    harness::write_manifest(out, argv, cfg_doc, artifacts);
    std::cout << "trained " << trainer::to_string(variant) << " for " << r.curve.size() << " episodes; final latency "
              << last.mean_latency_s << " s\n";
    return 0;
  }

  if (*eval) {
    const json m = harness::read_manifest(eval_run + "/manifest.json");
    const json& c = m.at("config");
    const auto variant = trainer::parse_variant(c.at("variant").get<std::string>());
    const trainer::TrainerConfig cfg = harness::trainer_config_from_json(c.at("trainer"));
    if (eval_seed == cfg.seed) throw Error(ErrorKind::usage_error, "evaluation seed must differ from the training seed");
    auto scn = std::make_shared<const scenario::Scenario>(scenario::load_scenario_file(eval_run + "/scenario.scn.json"));
    env::World probe(scn, trainer::env_config_for(cfg, variant), 0);
    trainer::TrainResult tr;
    tr.variant = variant;
    tr.agents = trainer::load_checkpoints(eval_run + "/checkpoints", variant, cfg, probe.uav_count(), probe.obs_dim(),
                                          probe.act_dim());
    const auto policy = trainer::make_policy(tr);
    const auto e = trainer::evaluate(scn, cfg, variant, *policy, trainer::eval_world_seed(eval_seed), eval_episodes);
    std::vector<std::vector<env::GerUsage>> maps;
    std::vector<env::SlotRecord> last;
    const int per = scn->time.slots_per_episode();
    const std::size_t uavs = scn->uavs.size();
    const std::size_t from = e.records.size() >= uavs * per ? e.records.size() - uavs * per : 0;
    last.assign(e.records.begin() + static_cast<std::ptrdiff_t>(from), e.records.end());
    const std::size_t mfrom = e.resource_maps.size() >= static_cast<std::size_t>(per) ? e.resource_maps.size() - per : 0;
    maps.assign(e.resource_maps.begin() + static_cast<std::ptrdiff_t>(mfrom), e.resource_maps.end());
    scenario::save_scenario_file(*scn, out + "/scenario.scn.json");
    harness::write_episode_artifacts(out, *scn, last, maps, e.last_plan);
    write_json(out + "/metrics.json", metrics_json(e));
    harness::write_manifest(out, argv, {{"variant", trainer::to_string(variant)}, {"eval_seed", eval_seed},
                                        {"episodes", eval_episodes}, {"trainer", harness::to_json(cfg)}},
                            {"scenario.scn.json", "metrics.json", "queue_trace.csv", "trajectory.csv",
                             "assignment.csv", "cost_breakdown.csv", "resource_map.csv", "episode_log.ndjson"});
    std::cout << "mean latency " << e.mean_latency_s << " s, mean energy " << e.mean_energy_j << " J\n";
    return 0;
  }

  if (*sweep) {
    harness::SweepSpec spec;
    spec.var = harness::parse_sweep_var(sweep_var);
    spec.grid = harness::parse_grid(sweep_grid);
    spec.variant = trainer::parse_variant(sweep_train.variant);
    spec.gen = sweep_gen.gen;
    spec.scenario_seed = sweep_gen.seed;
    spec.trainer = sweep_train.make();
    spec.eval_seeds = sweep_seeds;
    spec.eval_episodes = sweep_eval_episodes;
    spec.out_dir = out;
    spec.threads = threads;
    const auto rows = harness::run_sweep(spec);
    const std::string latency_file = "latency_vs_" + harness::to_string(spec.var) + ".csv";
    harness::write_manifest(out, argv,
                            {{"var", sweep_var}, {"grid", spec.grid}, {"variant", sweep_train.variant},
                             {"eval_seeds", sweep_seeds}, {"trainer", harness::to_json(spec.trainer)},
                             {"gen", harness::to_json(spec.gen)}},
                            {"sweep.csv", latency_file});
    for (const auto& r : rows) std::cout << sweep_var << "=" << r.value << " latency " << r.mean_latency_s << " s\n";
    return 0;
  }

  if (*o_assign) {
    Eigen::MatrixXd cost;
    if (random_n > 0) {
      Rng rng(oracle_seed);
      std::uniform_real_distribution<double> u(0.0, 10.0);
      cost.resize(random_n, random_n);
      for (int i = 0; i < random_n; ++i)
        for (int j = 0; j < random_n; ++j) cost(i, j) = u(rng);
    } else if (!matrix.empty()) {
      cost = parse_matrix(matrix);
    } else {
      std::cerr << "oracle assignment needs --matrix or --random\n";
      return 2;
    }
    const double best = harness::oracle_assignment(cost);
    const double hung = assignment::hungarian_solve(cost).total_cost;
    std::cout << "oracle " << best << "\nhungarian " << hung << "\n";
    if (!out.empty()) {
      fs::create_directories(out);
      write_json(out + "/oracle.json", {{"oracle", best}, {"hungarian", hung}});
    }
    return 0;
  }

  if (*o_perslot) {
    auto scn = std::make_shared<const scenario::Scenario>(perslot_gen.make());
    env::World world(scn, {}, oracle_seed);
    for (int s = 0; s < perslot_slots && !world.done(); ++s) {
      std::vector<env::VectorXd> raw;
      for (int u = 0; u < world.uav_count(); ++u) raw.push_back(world.encode(u, {costmodel::TargetKind::local, -1}, 1.0));
      world.step(raw);
    }
    world.mutable_uav(perslot_uav).queue.q_value = perslot_q;
    const auto grid = env::fraction_grid(perslot_grid);
    const auto best = harness::oracle_perslot(world, perslot_uav, grid, harness::legal_targets(world, perslot_uav));
    const auto cands = env::enumerate_candidates(world, perslot_uav, grid);
    const std::size_t argmin = lyapunov::per_slot_argmin_index(cands, world.uav(perslot_uav).queue);
    std::cout << "oracle index " << best.index << " cost " << best.cost << " latency " << best.t_total_s
              << " energy " << best.e_total_j << "\nargmin index " << argmin << "\n";
    if (!out.empty()) {
      fs::create_directories(out);
      write_json(out + "/oracle.json", {{"oracle_index", best.index}, {"argmin_index", argmin}, {"cost", best.cost},
                                        {"t_total_s", best.t_total_s}, {"e_total_j", best.e_total_j}});
    }
    return best.index == argmin ? 0 : 1;
  }

  if (*plot) {
    for (const auto& f : harness::emit_plotdata(plot_run, out)) std::cout << out << "/" << f << "\n";
    return 0;
  }
  return 2;
}

}  // namespace

int main(int argc, char** argv) {
  std::vector<std::string> args(argv, argv + argc);
  try {
    return run(args);
  } catch (const Error& e) {
    std::cerr << "error: " << e.what() << "\n";
    return e.kind() == ErrorKind::usage_error ? 2 : 1;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
}
