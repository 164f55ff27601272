#pragma once

#include <cstdint>
#include <functional>
#include <map>
#include <span>
#include <vector>

#include "atc/environment.hpp"
#include "atc/network.hpp"

namespace atc {

enum class LossVariant { A2C, PPO };
enum class ActionSelection { Sample, Greedy };

struct TrainerConfig {
  double gamma = 0.99;
  double clip_epsilon = 0.2;
  double entropy_coef = 0.01;
  double value_weight = 0.5;
  LossVariant loss = LossVariant::PPO;
  int epochs_per_update = 1;
  // 0 means one gradient step over the whole episode buffer per epoch.
  int minibatch_size = 0;
  double lr = 1e-4;
  int max_episodes = 5000;
  int eval_interval = 0;
  int eval_episodes = 20;
  double grad_clip = 5.0;
  bool normalize_advantages = false;
  // Independent environments rolled out per update (synchronous A2C).
  int parallel_envs = 1;
  std::uint64_t seed = 0;

  void validate() const;
};

struct Transition {
  std::vector<double> observation;
  int action = 0;
  double log_prob = 0.0;  // under the policy that sampled the action
  double reward = 0.0;
  double value = 0.0;
  bool done = false;
  AircraftId agent = 0;
  int epoch = 0;
};

// Per-agent transition sequences for one episode.
class EpisodeBuffer {
 public:
  void add(Transition t);
  const std::map<AircraftId, std::vector<Transition>>& by_agent() const { return agents_; }
  std::size_t size() const;

 private:
  std::map<AircraftId, std::vector<Transition>> agents_;
};

struct Rollout {
  EpisodeBuffer buffer;
  int goals = 0;
  int conflicted_aircraft = 0;
  int aircraft = 0;
  int length = 0;  // decision epochs
  double total_reward = 0.0;
  std::size_t transitions = 0;
};

// Runs one full episode where every active agent acts on its own observation
// with the shared network. Transitions are stored only when collect is set.
Rollout run_episode(Environment& env, const ActorCritic& net, std::uint64_t env_seed,
                    std::uint64_t policy_seed, ActionSelection mode, bool collect);

// Runs one episode with a fixed, non-learning policy and returns the episode score.
using ScriptedPolicy = std::function<Action(const AgentObservation&)>;
int run_scripted_episode(Environment& env, std::uint64_t env_seed, const ScriptedPolicy& policy);

// Flattened training sample with its return target and fixed advantage.
struct Sample {
  std::vector<double> observation;
  int action = 0;
  double log_prob_old = 0.0;
  double target = 0.0;
  double advantage = 0.0;
};

// Returns and advantages per agent sequence; agents are concatenated in id order.
std::vector<Sample> prepare_samples(const EpisodeBuffer& buffer, const TrainerConfig& config);

struct LossStats {
  double actor = 0.0;
  double critic = 0.0;
  double entropy = 0.0;
  double grad_norm = 0.0;
};

// Mean combined loss actor + value_weight * critic - entropy_coef * H over the
// batch and its exact gradient (before clipping).
LossStats compute_gradients(const ActorCritic& net, std::span<const Sample> batch,
                            const TrainerConfig& config, ParameterSet& grads);

struct EpisodeMetrics {
  int episode = 0;
  double score = 0.0;  // summed reward over every agent and epoch
  int goals = 0;
  int conflicts = 0;  // aircraft that were ever in conflict
  double mean_reward = 0.0;
  double actor_loss = 0.0;
  double critic_loss = 0.0;
  double entropy = 0.0;
  double grad_norm = 0.0;  // before clipping, averaged over gradient steps
  int length = 0;
  double wall_seconds = 0.0;
};

// Centralized learner: one shared network, updated once per episode from the
// pooled experience of every agent.
class Trainer {
 public:
  Trainer(TrainerConfig config, ActorCritic& net, Adam& optimizer);

  // Rolls out one episode in each environment (they are reset here), then
  // performs the update. envs.size() must equal parallel_envs.
  EpisodeMetrics train_episode(std::span<Environment> envs);
  EpisodeMetrics train_episode(Environment& env) { return train_episode(std::span<Environment>(&env, 1)); }

  LossStats update(std::vector<Sample> samples);

  int episodes_completed() const { return episode_; }
  const TrainerConfig& config() const { return config_; }

 private:
  TrainerConfig config_;
  ActorCritic& net_;
  Adam& optimizer_;
  int episode_ = 0;
};

struct EvalStats {
  int episodes = 0;
  double mean = 0.0;
  double stddev = 0.0;  // sample standard deviation
  double median = 0.0;
  double resolution_rate = 0.0;  // mean / max_aircraft
  std::vector<int> scores;
};

EvalStats evaluate(const ScenarioConfig& scenario, const ActorCritic& net, int episodes,
                   ActionSelection mode, std::uint64_t seed);

// Independent stream seeds derived from a base seed.
std::uint64_t derive_seed(std::uint64_t base, std::uint64_t stream, std::uint64_t index);

}  // namespace atc
