#pragma once

#include <span>
#include <vector>

namespace atc {

// R_t = r_t + gamma * R_{t+1}, seeded with the bootstrap value past the end
// (zero for an agent that terminated).
std::vector<double> discounted_returns(std::span<const double> rewards, double bootstrap_value,
                                       double gamma);

// A_t = R_t - V(s_t), optionally standardized to zero mean / unit variance.
std::vector<double> advantages(std::span<const double> returns, std::span<const double> values,
                               bool normalize = false);

double entropy(std::span<const double> policy);

// Descent form of log pi(a|s) * A + beta * H: -(log_prob * advantage) - beta * entropy.
double actor_loss_a2c(double log_prob, double advantage, double entropy, double beta_entropy);

// min(ratio * A, clip(ratio, 1 - eps, 1 + eps) * A)
double ppo_surrogate(double ratio, double advantage, double epsilon);

// Descent form: -ppo_surrogate(exp(new - old), A, eps). Entropy is added separately.
double actor_loss_ppo(double log_prob_new, double log_prob_old, double advantage, double epsilon);

// Mean of (R - V)^2.
double critic_loss(std::span<const double> returns, std::span<const double> values);

// Gradients w.r.t. the policy logits, given the softmax output.
// d/dz of -(log pi(a) * A).
std::vector<double> a2c_logit_gradient(std::span<const double> policy, int action, double advantage);
// d/dz of actor_loss_ppo. Zero once the clipped branch is strictly the minimum.
std::vector<double> ppo_logit_gradient(std::span<const double> policy, double log_prob_old, int action,
                                       double advantage, double epsilon);
// d/dz of H(softmax(z)).
std::vector<double> entropy_logit_gradient(std::span<const double> policy);

}  // namespace atc
