#include "atc/trainer.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <future>
#include <numeric>
#include <random>

#include "atc/errors.hpp"
#include "atc/losses.hpp"

namespace atc {

void TrainerConfig::validate() const {
  if (!(gamma > 0.0 && gamma <= 1.0)) throw ConfigError("gamma must lie in (0, 1]");
  if (!(clip_epsilon > 0.0)) throw ConfigError("clip_epsilon must be > 0");
  if (!(entropy_coef >= 0.0)) throw ConfigError("entropy_coef must be >= 0");
  if (!(value_weight >= 0.0)) throw ConfigError("value_weight must be >= 0");
  if (epochs_per_update < 1) throw ConfigError("epochs_per_update must be >= 1");
  if (minibatch_size < 0) throw ConfigError("minibatch_size must be >= 0");
  if (!(lr > 0.0)) throw ConfigError("lr must be > 0");
  if (max_episodes < 1) throw ConfigError("episodes must be >= 1");
  if (eval_interval < 0) throw ConfigError("eval_interval must be >= 0");
  if (eval_episodes < 1) throw ConfigError("eval_episodes must be >= 1");
  if (!(grad_clip > 0.0)) throw ConfigError("grad_clip must be > 0");
  if (parallel_envs < 1) throw ConfigError("parallel_envs must be >= 1");
}

std::uint64_t derive_seed(std::uint64_t base, std::uint64_t stream, std::uint64_t index) {
  // splitmix64 over a combined key
  std::uint64_t z = base + 0x9E3779B97F4A7C15ULL * (stream + 1) + 0xD1B54A32D192ED03ULL * index;
  z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
  z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
  return z ^ (z >> 31);
}

void EpisodeBuffer::add(Transition t) { agents_[t.agent].push_back(std::move(t)); }

std::size_t EpisodeBuffer::size() const {
  std::size_t n = 0;
  for (const auto& [id, seq] : agents_) n += seq.size();
  return n;
}

namespace {

int select_action(const std::vector<double>& policy, ActionSelection mode, std::mt19937_64& rng) {
  if (mode == ActionSelection::Greedy) {
    return static_cast<int>(std::max_element(policy.begin(), policy.end()) - policy.begin());
  }
  const double u = std::uniform_real_distribution<double>(0.0, 1.0)(rng);
  double acc = 0.0;
  for (std::size_t k = 0; k < policy.size(); ++k) {
    acc += policy[k];
    if (u < acc) return static_cast<int>(k);
  }
  return static_cast<int>(policy.size()) - 1;
}

}  // namespace

Rollout run_episode(Environment& env, const ActorCritic& net, std::uint64_t env_seed,
                    std::uint64_t policy_seed, ActionSelection mode, bool collect) {
  std::mt19937_64 rng(policy_seed);
  Rollout out;
  StepOutcome outcome = env.reset(env_seed);

  // Pending transitions waiting for this epoch's reward, keyed by agent.
  std::map<AircraftId, Transition> open;
  while (!outcome.episode_done) {
    std::map<AircraftId, Action> actions;
    open.clear();
    for (AgentObservation& obs : outcome.observations) {
      const ForwardResult fwd = net.forward(obs.features);
      const int a = select_action(fwd.policy, mode, rng);
      actions.emplace(obs.id, action_from_index(a));
      if (collect) {
        Transition t;
        t.observation = std::move(obs.features);
        t.action = a;
        t.log_prob = fwd.log_policy[static_cast<std::size_t>(a)];
        t.value = fwd.value;
        t.agent = obs.id;
        t.epoch = env.steps();
        open.emplace(obs.id, std::move(t));
      }
    }
    outcome = env.step(actions);
    ++out.length;
    for (const AgentResult& r : outcome.results) {
      out.total_reward += r.reward;
      ++out.transitions;
      if (collect) {
        Transition& t = open.at(r.id);
        t.reward = r.reward;
        t.done = r.done;
        out.buffer.add(std::move(t));
      }
    }
  }
  out.goals = env.episode_score();
  out.aircraft = static_cast<int>(env.aircraft().size());
  for (const AircraftState& a : env.aircraft()) {
    if (a.ever_in_conflict) ++out.conflicted_aircraft;
  }
  return out;
}

int run_scripted_episode(Environment& env, std::uint64_t env_seed, const ScriptedPolicy& policy) {
  StepOutcome outcome = env.reset(env_seed);
  while (!outcome.episode_done) {
    std::map<AircraftId, Action> actions;
    for (const AgentObservation& obs : outcome.observations) actions.emplace(obs.id, policy(obs));
    outcome = env.step(actions);
  }
  return env.episode_score();
}

std::vector<Sample> prepare_samples(const EpisodeBuffer& buffer, const TrainerConfig& config) {
  std::vector<Sample> samples;
  samples.reserve(buffer.size());
  for (const auto& [id, seq] : buffer.by_agent()) {
    std::vector<double> rewards, values;
    rewards.reserve(seq.size());
    values.reserve(seq.size());
    for (const Transition& t : seq) {
      rewards.push_back(t.reward);
      values.push_back(t.value);
    }
    // Agents still flying at the cutoff bootstrap from their last value.
    const double bootstrap = (seq.empty() || seq.back().done) ? 0.0 : seq.back().value;
    const auto returns = discounted_returns(rewards, bootstrap, config.gamma);
    const auto adv = advantages(returns, values);
    for (std::size_t k = 0; k < seq.size(); ++k) {
      samples.push_back({seq[k].observation, seq[k].action, seq[k].log_prob, returns[k], adv[k]});
    }
  }
  if (config.normalize_advantages && samples.size() > 1) {
    std::vector<double> adv(samples.size()), zero(samples.size(), 0.0);
    for (std::size_t k = 0; k < samples.size(); ++k) adv[k] = samples[k].advantage;
    const auto normed = advantages(adv, zero, true);
    for (std::size_t k = 0; k < samples.size(); ++k) samples[k].advantage = normed[k];
  }
  return samples;
}

LossStats compute_gradients(const ActorCritic& net, std::span<const Sample> batch,
                            const TrainerConfig& config, ParameterSet& grads) {
  grads.fill(0.0);
  LossStats stats;
  if (batch.empty()) return stats;
  const double inv_n = 1.0 / static_cast<double>(batch.size());
  std::vector<double> d_logits;
  for (const Sample& s : batch) {
    const ForwardResult fwd = net.forward(s.observation);
    const auto a = static_cast<std::size_t>(s.action);
    const double h = entropy(fwd.policy);
    std::vector<double> g_actor;
    if (config.loss == LossVariant::PPO) {
      stats.actor += actor_loss_ppo(fwd.log_policy[a], s.log_prob_old, s.advantage, config.clip_epsilon);
      g_actor = ppo_logit_gradient(fwd.policy, s.log_prob_old, s.action, s.advantage,
                                   config.clip_epsilon);
    } else {
      stats.actor += actor_loss_a2c(fwd.log_policy[a], s.advantage, h, 0.0);
      g_actor = a2c_logit_gradient(fwd.policy, s.action, s.advantage);
    }
    const double err = fwd.value - s.target;
    stats.critic += err * err;
    stats.entropy += h;
    const auto g_entropy = entropy_logit_gradient(fwd.policy);
    d_logits.resize(g_actor.size());
    for (std::size_t k = 0; k < g_actor.size(); ++k) {
      d_logits[k] = inv_n * (g_actor[k] - config.entropy_coef * g_entropy[k]);
    }
    const double d_value = inv_n * config.value_weight * 2.0 * err;
    net.backward(fwd.trace, d_logits, d_value, grads);
  }
  stats.actor *= inv_n;
  stats.critic *= inv_n;
  stats.entropy *= inv_n;
  stats.grad_norm = std::sqrt(grads.squared_norm());
  return stats;
}

Trainer::Trainer(TrainerConfig config, ActorCritic& net, Adam& optimizer)
    : config_(config), net_(net), optimizer_(optimizer) {
  config_.validate();
  optimizer_.set_lr(config_.lr);
}

LossStats Trainer::update(std::vector<Sample> samples) {
  ParameterSet grads = ParameterSet::zeros(net_.shape());
  LossStats total;
  int batches = 0;
  std::mt19937_64 rng(derive_seed(config_.seed, 4, static_cast<std::uint64_t>(episode_)));
  const std::size_t batch =
      config_.minibatch_size > 0 ? static_cast<std::size_t>(config_.minibatch_size) : samples.size();
  for (int epoch = 0; epoch < config_.epochs_per_update; ++epoch) {
    if (config_.minibatch_size > 0) std::shuffle(samples.begin(), samples.end(), rng);
    for (std::size_t start = 0; start < samples.size(); start += batch) {
      const std::size_t count = std::min(batch, samples.size() - start);
      const LossStats s =
          compute_gradients(net_, std::span<const Sample>(samples).subspan(start, count), config_, grads);
      if (!std::isfinite(s.actor) || !std::isfinite(s.critic) || !std::isfinite(s.grad_norm)) {
        throw NumericalError("non-finite loss or gradient at episode " + std::to_string(episode_));
      }
      if (s.grad_norm > config_.grad_clip) grads.scale(config_.grad_clip / s.grad_norm);
      optimizer_.step(net_.params(), grads);
      total.actor += s.actor;
      total.critic += s.critic;
      total.entropy += s.entropy;
      total.grad_norm += s.grad_norm;
      ++batches;
    }
  }
  if (!net_.params().all_finite()) throw NumericalError("non-finite parameters after update");
  if (batches > 0) {
    const double inv = 1.0 / batches;
    total.actor *= inv;
    total.critic *= inv;
    total.entropy *= inv;
    total.grad_norm *= inv;
  }
  return total;
}

EpisodeMetrics Trainer::train_episode(std::span<Environment> envs) {
  if (envs.size() != static_cast<std::size_t>(config_.parallel_envs)) {
    throw ContractError("train_episode expects " + std::to_string(config_.parallel_envs) + " environments");
  }
  const auto started = std::chrono::steady_clock::now();
  const auto k_envs = static_cast<std::uint64_t>(envs.size());
  const auto episode = static_cast<std::uint64_t>(episode_);

  std::vector<Rollout> rollouts(envs.size());
  auto roll = [&](std::size_t k) {
    const std::uint64_t index = episode * k_envs + k;
    return run_episode(envs[k], net_, derive_seed(config_.seed, 0, index),
                       derive_seed(config_.seed, 1, index), ActionSelection::Sample, true);
  };
  if (envs.size() == 1) {
    rollouts[0] = roll(0);
  } else {
    std::vector<std::future<Rollout>> jobs;
    for (std::size_t k = 0; k < envs.size(); ++k) jobs.push_back(std::async(std::launch::async, roll, k));
    for (std::size_t k = 0; k < envs.size(); ++k) rollouts[k] = jobs[k].get();
  }

  // Ordered concatenation by environment index keeps K>1 runs deterministic.
  std::vector<Sample> samples;
  EpisodeMetrics m;
  m.episode = episode_ + 1;
  std::size_t transitions = 0;
  for (const Rollout& r : rollouts) {
    auto part = prepare_samples(r.buffer, config_);
    samples.insert(samples.end(), std::make_move_iterator(part.begin()), std::make_move_iterator(part.end()));
    m.score += r.total_reward;
    m.goals += r.goals;
    m.conflicts += r.conflicted_aircraft;
    m.length += r.length;
    transitions += r.transitions;
  }
  m.mean_reward = transitions > 0 ? m.score / static_cast<double>(transitions) : 0.0;
  if (envs.size() > 1) {
    // Per-environment averages when several rollouts feed one update.
    const double inv = 1.0 / static_cast<double>(envs.size());
    m.score *= inv;
    m.goals = static_cast<int>(std::lround(m.goals * inv));
    m.conflicts = static_cast<int>(std::lround(m.conflicts * inv));
    m.length = static_cast<int>(std::lround(m.length * inv));
  }

  const LossStats stats = update(std::move(samples));
  m.actor_loss = stats.actor;
  m.critic_loss = stats.critic;
  m.entropy = stats.entropy;
  m.grad_norm = stats.grad_norm;
  ++episode_;
  m.wall_seconds =
      std::chrono::duration<double>(std::chrono::steady_clock::now() - started).count();
  return m;
}

EvalStats evaluate(const ScenarioConfig& scenario, const ActorCritic& net, int episodes,
                   ActionSelection mode, std::uint64_t seed) {
  if (episodes < 1) throw ContractError("evaluate needs at least one episode");
  Environment env(scenario);
  EvalStats stats;
  stats.episodes = episodes;
  for (int e = 0; e < episodes; ++e) {
    const auto index = static_cast<std::uint64_t>(e);
    const Rollout r = run_episode(env, net, derive_seed(seed, 2, index), derive_seed(seed, 3, index),
                                  mode, false);
    stats.scores.push_back(r.goals);
  }
  const double n = static_cast<double>(episodes);
  stats.mean = std::accumulate(stats.scores.begin(), stats.scores.end(), 0.0) / n;
  double var = 0.0;
  for (int s : stats.scores) var += (s - stats.mean) * (s - stats.mean);
  stats.stddev = episodes > 1 ? std::sqrt(var / (n - 1.0)) : 0.0;
  std::vector<int> sorted = stats.scores;
  std::sort(sorted.begin(), sorted.end());
  const auto mid = sorted.size() / 2;
  stats.median = sorted.size() % 2 == 1 ? sorted[mid] : 0.5 * (sorted[mid - 1] + sorted[mid]);
  stats.resolution_rate = scenario.max_aircraft > 0 ? stats.mean / scenario.max_aircraft : 1.0;
  return stats;
}

}  // namespace atc
