#include "atc/losses.hpp"

#include <algorithm>
#include <cmath>

#include "atc/errors.hpp"

namespace atc {

std::vector<double> discounted_returns(std::span<const double> rewards, double bootstrap_value,
                                       double gamma) {
  std::vector<double> out(rewards.size());
  double running = bootstrap_value;
  for (std::size_t k = rewards.size(); k-- > 0;) {
    running = rewards[k] + gamma * running;
    out[k] = running;
  }
  return out;
}

std::vector<double> advantages(std::span<const double> returns, std::span<const double> values,
                               bool normalize) {
  if (returns.size() != values.size()) {
    throw ContractError("advantages: returns and values differ in length");
  }
  std::vector<double> out(returns.size());
  for (std::size_t k = 0; k < out.size(); ++k) out[k] = returns[k] - values[k];
  if (normalize && out.size() > 1) {
    double mean = 0.0;
    for (double a : out) mean += a;
    mean /= static_cast<double>(out.size());
    double var = 0.0;
    for (double a : out) var += (a - mean) * (a - mean);
    const double sd = std::sqrt(var / static_cast<double>(out.size()));
    for (double& a : out) a = (a - mean) / (sd + 1e-8);
  }
  return out;
}

double entropy(std::span<const double> policy) {
  double h = 0.0;
  for (double p : policy) {
    if (p > 0.0) h -= p * std::log(p);
  }
  return h;
}

double actor_loss_a2c(double log_prob, double advantage, double entropy_value, double beta_entropy) {
  return -(log_prob * advantage) - beta_entropy * entropy_value;
}

double ppo_surrogate(double ratio, double advantage, double epsilon) {
  const double clipped = std::clamp(ratio, 1.0 - epsilon, 1.0 + epsilon);
  return std::min(ratio * advantage, clipped * advantage);
}

double actor_loss_ppo(double log_prob_new, double log_prob_old, double advantage, double epsilon) {
  if (!(epsilon > 0.0)) throw ContractError("clip epsilon must be > 0");
  return -ppo_surrogate(std::exp(log_prob_new - log_prob_old), advantage, epsilon);
}

double critic_loss(std::span<const double> returns, std::span<const double> values) {
  if (returns.size() != values.size()) throw ContractError("critic_loss: length mismatch");
  if (returns.empty()) return 0.0;
  double acc = 0.0;
  for (std::size_t k = 0; k < returns.size(); ++k) {
    const double e = returns[k] - values[k];
    acc += e * e;
  }
  return acc / static_cast<double>(returns.size());
}

std::vector<double> a2c_logit_gradient(std::span<const double> policy, int action, double advantage) {
  // d log pi(a) / dz_k = [k == a] - pi_k
  std::vector<double> g(policy.size());
  for (std::size_t k = 0; k < policy.size(); ++k) {
    const double indicator = static_cast<int>(k) == action ? 1.0 : 0.0;
    g[k] = -advantage * (indicator - policy[k]);
  }
  return g;
}

std::vector<double> ppo_logit_gradient(std::span<const double> policy, double log_prob_old, int action,
                                       double advantage, double epsilon) {
  const double log_prob = std::log(policy[static_cast<std::size_t>(action)]);
  const double ratio = std::exp(log_prob - log_prob_old);
  const double clipped = std::clamp(ratio, 1.0 - epsilon, 1.0 + epsilon);
  std::vector<double> g(policy.size(), 0.0);
  if (clipped * advantage < ratio * advantage) return g;  // flat clipped branch
  for (std::size_t k = 0; k < policy.size(); ++k) {
    const double indicator = static_cast<int>(k) == action ? 1.0 : 0.0;
    g[k] = -advantage * ratio * (indicator - policy[k]);
  }
  return g;
}

std::vector<double> entropy_logit_gradient(std::span<const double> policy) {
  // dH/dz_k = -pi_k (log pi_k + H)
  const double h = entropy(policy);
  std::vector<double> g(policy.size(), 0.0);
  for (std::size_t k = 0; k < policy.size(); ++k) {
    if (policy[k] > 0.0) g[k] = -policy[k] * (std::log(policy[k]) + h);
  }
  return g;
}

}  // namespace atc
