#include <gtest/gtest.h>

#include <filesystem>

#include "skyrescue/trainer.hpp"
#include "support.hpp"

using namespace skyrescue;
using namespace skyrescue::trainer;
using skyrescue::testing::shared_desk;
using skyrescue::testing::throws_kind;

namespace {

TrainerConfig tiny(int episodes) {
  TrainerConfig c = TrainerConfig::desk();
  c.episodes = episodes;
  c.batch = 16;
  c.actor_hidden = 16;
  c.critic_hidden = 32;
  return c;
}

}  // namespace

TEST(Trainer, VariantNames) {
  for (Variant v : {Variant::hg, Variant::plain, Variant::random, Variant::greedy_local, Variant::lyapunov})
    EXPECT_EQ(parse_variant(to_string(v)), v);
  EXPECT_EQ(to_string(Variant::greedy_local), "greedy-local");
  EXPECT_TRUE(throws_kind([] { parse_variant("maddpg"); }, ErrorKind::usage_error));
  EXPECT_TRUE(learns(Variant::hg));
  EXPECT_TRUE(learns(Variant::plain));
  EXPECT_FALSE(learns(Variant::random));
}

TEST(Trainer, Presets) {
  EXPECT_EQ(TrainerConfig::full().batch, 512);
  EXPECT_EQ(TrainerConfig::full().actor_lr, 1e-4);
  EXPECT_EQ(TrainerConfig::batch300().batch, 300);
  EXPECT_EQ(TrainerConfig::batch300().update_every, TrainerConfig::full().update_every);
  EXPECT_EQ(TrainerConfig{}.gamma, 0.9);
  EXPECT_EQ(TrainerConfig{}.eps0, 0.9);
  EXPECT_EQ(TrainerConfig{}.eps_decay, 1e-4);
  EXPECT_EQ(TrainerConfig{}.denoise_steps, 5);
  EXPECT_EQ(env_config_for({}, Variant::plain).assignment_mode, assignment::Mode::round_robin);
  EXPECT_EQ(env_config_for({}, Variant::hg).assignment_mode, assignment::Mode::hungarian);
}

TEST(Trainer, SeedsStayApart) {
  for (std::uint64_t s = 0; s < 1000; ++s)
    for (std::uint64_t t = 0; t < 20; ++t) ASSERT_NE(world_seed(t), eval_world_seed(s));
}

TEST(Trainer, SingleEpisodeIsWarmUpOnly) {
  TrainerConfig c = tiny(1);
  c.batch = 64;
  const TrainResult r = train(shared_desk(), c, Variant::hg);
  EXPECT_EQ(r.updates, 0);
  ASSERT_EQ(r.curve.size(), 1u);
  EXPECT_EQ(r.last_episode.records.size(), 75u);
  EXPECT_EQ(r.agents.size(), 3u);
  EXPECT_EQ(r.audit.unflagged_static, 0);
}

TEST(Trainer, SeedRepeatGivesIdenticalCurve) {
  for (Variant v : {Variant::hg, Variant::plain}) {
    const TrainResult a = train(shared_desk(), tiny(3), v);
    const TrainResult b = train(shared_desk(), tiny(3), v);
    EXPECT_GT(a.updates, 0);
    ASSERT_EQ(a.curve.size(), b.curve.size());
    for (std::size_t i = 0; i < a.curve.size(); ++i) {
      EXPECT_EQ(a.curve[i].mean_reward, b.curve[i].mean_reward);
      EXPECT_EQ(a.curve[i].mean_latency_s, b.curve[i].mean_latency_s);
    }
    for (std::size_t u = 0; u < a.agents.size(); ++u)
      EXPECT_EQ(a.agents[u].actor->net().parameters(), b.agents[u].actor->net().parameters());
  }
}

TEST(Trainer, DifferentSeedsDiffer) {
  TrainerConfig c = tiny(2);
  const TrainResult a = train(shared_desk(), c, Variant::random);
  c.seed = 2;
  const TrainResult b = train(shared_desk(), c, Variant::random);
  EXPECT_NE(a.curve[0].mean_reward, b.curve[0].mean_reward);
}

TEST(Trainer, BaselinesRunWithoutAgents) {
  for (Variant v : {Variant::random, Variant::greedy_local, Variant::lyapunov}) {
    const TrainResult r = train(shared_desk(), tiny(2), v);
    EXPECT_TRUE(r.agents.empty());
    EXPECT_EQ(r.updates, 0);
    EXPECT_EQ(r.curve.size(), 2u);
  }
}

TEST(Trainer, EvaluateIsDeterministic) {
  const TrainResult r = train(shared_desk(), tiny(2), Variant::hg);
  const auto p = make_policy(r);
  const EvalResult a = evaluate(shared_desk(), tiny(2), Variant::hg, *p, eval_world_seed(1), 2);
  const EvalResult b = evaluate(shared_desk(), tiny(2), Variant::hg, *p, eval_world_seed(1), 2);
  EXPECT_EQ(a.mean_latency_s, b.mean_latency_s);
  EXPECT_EQ(a.episodes.size(), 2u);
  EXPECT_EQ(a.records.size(), 150u);
  EXPECT_EQ(a.audit.unflagged_static, 0);
}

TEST(Trainer, CheckpointRoundTrip) {
  const TrainerConfig c = tiny(2);
  const TrainResult r = train(shared_desk(), c, Variant::hg);
  const auto dir = (std::filesystem::temp_directory_path() / "skyrescue_trainer_ckpt").string();
  std::filesystem::remove_all(dir);
  save_checkpoints(r, dir);
  const auto agents = load_checkpoints(dir, Variant::hg, c, 3, r.obs_dim, r.act_dim);
  ASSERT_EQ(agents.size(), 3u);
  const ActorPolicy loaded(agents, 0.0, "hg");
  const auto original = make_policy(r);
  const EvalResult a = evaluate(shared_desk(), c, Variant::hg, *original, eval_world_seed(3), 1);
  const EvalResult b = evaluate(shared_desk(), c, Variant::hg, loaded, eval_world_seed(3), 1);
  // Checkpoints store float32, so actions agree only to single precision.
  EXPECT_NEAR(a.mean_latency_s, b.mean_latency_s, 1e-3 * std::max(1.0, a.mean_latency_s));
  EXPECT_TRUE(throws_kind([&] { load_checkpoints(dir, Variant::hg, c, 3, r.obs_dim + 1, r.act_dim); },
                          ErrorKind::shape_mismatch));
  EXPECT_TRUE(throws_kind([&] { load_checkpoints(dir + "_none", Variant::hg, c, 3, r.obs_dim, r.act_dim); },
                          ErrorKind::missing_artifact));
}

TEST(Trainer, RejectsBadConfig) {
  TrainerConfig c = tiny(1);
  c.gamma = 1.0;
  EXPECT_TRUE(throws_kind([&] { train(shared_desk(), c, Variant::hg); }, ErrorKind::invalid_range));
  c = tiny(1);
  c.psi = 0.0;
  EXPECT_TRUE(throws_kind([&] { train(shared_desk(), c, Variant::hg); }, ErrorKind::invalid_range));
}
