#include <gtest/gtest.h>

#include <cmath>
#include <cstring>

#include "atc/errors.hpp"
#include "atc/scenario_io.hpp"
#include "atc/trainer.hpp"

using namespace atc;

namespace {

ScenarioConfig small_merge() {
  ScenarioConfig cfg = load_scenario(ATC_SCENARIO_DIR "/case2_small.json");
  cfg.max_aircraft = 4;
  return cfg;
}

NetworkShape shape_for(const ScenarioConfig& cfg, int hidden = 32) {
  const ObservationLayout layout{cfg.n_closest};
  return NetworkShape{layout.own_width(), layout.local_width(), 16, hidden, kActionCount};
}

std::vector<EpisodeMetrics> train(const ScenarioConfig& cfg, TrainerConfig tc, int episodes, ActorCritic& net) {
  net.initialize(tc.seed);
  Adam opt(net.shape(), AdamConfig{tc.lr});
  Trainer trainer(tc, net, opt);
  std::vector<Environment> envs(static_cast<std::size_t>(tc.parallel_envs), Environment(cfg));
  std::vector<EpisodeMetrics> out;
  for (int e = 0; e < episodes; ++e) out.push_back(trainer.train_episode(envs));
  return out;
}

bool same_params(const ParameterSet& a, const ParameterSet& b) {
  const auto sa = a.spans(), sb = b.spans();
  for (std::size_t k = 0; k < sa.size(); ++k) {
    if (std::memcmp(sa[k].data(), sb[k].data(), sa[k].size() * sizeof(double)) != 0) return false;
  }
  return true;
}

}  // namespace

TEST(RunEpisode, TransitionsMatchLifetimesAndAreContiguous) {
  const ScenarioConfig cfg = small_merge();
  Environment env(cfg);
  ActorCritic net(shape_for(cfg));
  net.initialize(1);
  const Rollout r = run_episode(env, net, 11, 12, ActionSelection::Sample, true);
  EXPECT_EQ(r.buffer.size(), r.transitions);
  std::size_t total = 0;
  for (const auto& [id, seq] : r.buffer.by_agent()) {
    ASSERT_FALSE(seq.empty());
    for (std::size_t k = 1; k < seq.size(); ++k) EXPECT_EQ(seq[k].epoch, seq[k - 1].epoch + 1);
    for (const Transition& t : seq) EXPECT_EQ(t.agent, id);
    EXPECT_TRUE(seq.back().done);
    total += seq.size();
  }
  EXPECT_EQ(total, r.transitions);
  EXPECT_EQ(r.aircraft, cfg.max_aircraft);
  EXPECT_EQ(r.goals + r.conflicted_aircraft, r.aircraft);
}

TEST(PrepareSamples, ReturnsPerAgentSequence) {
  EpisodeBuffer buffer;
  for (int k = 0; k < 3; ++k) {
    Transition t;
    t.agent = 5;
    t.epoch = k;
    t.reward = k == 2 ? -1.0 : 0.0;
    t.value = -0.5;
    t.done = k == 2;
    t.observation = {0.0};
    buffer.add(t);
  }
  Transition other;
  other.agent = 2;
  other.reward = 4.0;
  other.value = 1.0;
  other.observation = {0.0};
  buffer.add(other);  // still flying: bootstraps from its own value
  TrainerConfig tc;
  const auto samples = prepare_samples(buffer, tc);
  ASSERT_EQ(samples.size(), 4u);
  EXPECT_NEAR(samples[0].target, 4.0 + 0.99 * 1.0, 1e-12);
  EXPECT_NEAR(samples[1].target, -0.9801, 1e-12);
  EXPECT_NEAR(samples[1].advantage, -0.4801, 1e-12);
  EXPECT_NEAR(samples[3].target, -1.0, 1e-12);
}

TEST(Trainer, IdenticalSeedsReproduceBitForBit) {
  const ScenarioConfig cfg = small_merge();
  TrainerConfig tc;
  tc.seed = 17;
  ActorCritic a(shape_for(cfg)), b(shape_for(cfg));
  const auto ma = train(cfg, tc, 4, a);
  const auto mb = train(cfg, tc, 4, b);
  for (std::size_t k = 0; k < ma.size(); ++k) {
    EXPECT_EQ(ma[k].score, mb[k].score);
    EXPECT_EQ(ma[k].goals, mb[k].goals);
    EXPECT_EQ(ma[k].actor_loss, mb[k].actor_loss);
    EXPECT_EQ(ma[k].critic_loss, mb[k].critic_loss);
  }
  EXPECT_TRUE(same_params(a.params(), b.params()));
}

TEST(Trainer, ParallelRolloutsAreDeterministic) {
  const ScenarioConfig cfg = small_merge();
  TrainerConfig tc;
  tc.seed = 3;
  tc.parallel_envs = 3;
  tc.minibatch_size = 16;
  ActorCritic a(shape_for(cfg)), b(shape_for(cfg));
  train(cfg, tc, 3, a);
  train(cfg, tc, 3, b);
  EXPECT_TRUE(same_params(a.params(), b.params()));
}

TEST(Trainer, HugeEntropyCoefficientKeepsPolicyNearUniform) {
  const ScenarioConfig cfg = small_merge();
  TrainerConfig tc;
  tc.seed = 5;
  tc.entropy_coef = 100.0;
  tc.lr = 1e-3;
  ActorCritic net(shape_for(cfg));
  train(cfg, tc, 50, net);
  Environment env(cfg);
  const Rollout r = run_episode(env, net, 99, 98, ActionSelection::Sample, true);
  double dev = 0.0;
  int count = 0;
  for (const auto& [id, seq] : r.buffer.by_agent()) {
    for (const Transition& t : seq) {
      for (double p : net.forward(t.observation).policy) {
        dev += std::abs(p - 1.0 / 3.0);
        ++count;
      }
    }
  }
  EXPECT_LT(dev / count, 0.05);
}

TEST(Trainer, RejectsWrongEnvironmentCount) {
  const ScenarioConfig cfg = small_merge();
  TrainerConfig tc;
  tc.parallel_envs = 2;
  ActorCritic net(shape_for(cfg));
  Adam opt(net.shape(), AdamConfig{});
  Trainer trainer(tc, net, opt);
  Environment env(cfg);
  EXPECT_THROW(trainer.train_episode(env), ContractError);
}

TEST(TrainerConfig, Validation) {
  TrainerConfig tc;
  EXPECT_NO_THROW(tc.validate());
  tc.gamma = 0.0;
  EXPECT_THROW(tc.validate(), ConfigError);
  tc = TrainerConfig{};
  tc.clip_epsilon = 0.0;
  EXPECT_THROW(tc.validate(), ConfigError);
  tc = TrainerConfig{};
  tc.gamma = 1.0;
  EXPECT_NO_THROW(tc.validate());
}

TEST(Evaluate, ZeroEpisodesIsContractError) {
  const ScenarioConfig cfg = small_merge();
  ActorCritic net(shape_for(cfg));
  EXPECT_THROW(evaluate(cfg, net, 0, ActionSelection::Sample, 1), ContractError);
}

TEST(Evaluate, StatisticsOfAConstantPolicy) {
  // Zero weights with a dominant HOLD bias: greedy HOLD everywhere.
  const ScenarioConfig cfg = small_merge();
  ActorCritic net(shape_for(cfg));
  net.params().layers[kPolicyHead].bias[static_cast<std::size_t>(Action::Hold)] = 50.0;
  const EvalStats s = evaluate(cfg, net, 12, ActionSelection::Greedy, 4);
  Environment env(cfg);
  double sum = 0.0;
  for (int e = 0; e < 12; ++e) {
    const int score = run_scripted_episode(env, derive_seed(4, 2, static_cast<std::uint64_t>(e)),
                                           [](const AgentObservation&) { return Action::Hold; });
    EXPECT_EQ(score, s.scores[static_cast<std::size_t>(e)]);
    sum += score;
  }
  EXPECT_DOUBLE_EQ(s.mean, sum / 12.0);
  EXPECT_DOUBLE_EQ(s.resolution_rate, s.mean / cfg.max_aircraft);
  // Both first arrivals reach the merge together at constant speed.
  EXPECT_LE(s.mean, cfg.max_aircraft - 2);
}

TEST(Evaluate, AlwaysAccelerateConflictsOnDefaultMerge) {
  const ScenarioConfig cfg = load_scenario(ATC_SCENARIO_DIR "/case2.json");
  Environment env(cfg);
  double sum = 0.0;
  for (int e = 0; e < 5; ++e) {
    sum += run_scripted_episode(env, derive_seed(1, 2, static_cast<std::uint64_t>(e)),
                                [](const AgentObservation&) { return Action::Accelerate; });
  }
  EXPECT_LT(sum / 5.0, 30.0);
}

TEST(DeriveSeed, StreamsAreDistinct) {
  EXPECT_NE(derive_seed(1, 0, 0), derive_seed(1, 1, 0));
  EXPECT_NE(derive_seed(1, 0, 0), derive_seed(1, 0, 1));
  EXPECT_NE(derive_seed(1, 0, 0), derive_seed(2, 0, 0));
  EXPECT_EQ(derive_seed(9, 3, 4), derive_seed(9, 3, 4));
}
