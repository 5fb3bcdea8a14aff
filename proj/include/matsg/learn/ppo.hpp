// ppo.hpp - generalized advantage estimation and the clipped PPO update.
#pragma once

#include <span>
#include <string>
#include <vector>

#include "matsg/core/rng.hpp"
#include "matsg/core/rollout.hpp"
#include "matsg/learn/network.hpp"

namespace matsg::learn {

struct PpoConfig {
    double clip = 0.2;
    double gae_lambda = 0.95;
    double gamma = 0.99;
    std::size_t epochs = 4;
    std::size_t minibatch = 256;
    double learning_rate = 3e-4;
    double entropy_coef = 0.01;
    double value_coef = 0.5;
    std::size_t batch = 2048;
    std::size_t updates = 175;
    double max_grad_norm = 0.5;  // global gradient-norm clip; 0 disables

    void validate() const;  // throws matsg::Error
};

struct Gae {
    std::vector<double> advantages;
    std::vector<double> returns;
};

// values holds one entry per reward plus the bootstrap value of the state
// after the last reward; dones[t] cuts the recursion after step t.
Gae compute_gae(std::span<const double> rewards, std::span<const double> values, const std::vector<bool>& dones,
                double gamma, double lambda);

struct Sample {
    core::Observation observation;
    std::uint32_t action = 0;
    double old_log_prob = 0.0;
    double old_value = 0.0;
    double advantage = 0.0;
    double ret = 0.0;
};

// GAE over one agent's trajectory (episodes may be concatenated; done or
// truncated transitions end a segment).
std::vector<Sample> make_samples(const std::vector<core::Transition>& trajectory, double gamma, double lambda);

// Shifts and scales advantages to mean 0 and standard deviation 1.
void normalize_advantages(std::vector<Sample>& batch);

struct LossStats {
    double total = 0.0;
    double policy_loss = 0.0;
    double value_loss = 0.0;
    double entropy = 0.0;
    double clip_fraction = 0.0;
    double approx_kl = 0.0;
};

// Mean clipped-surrogate loss plus value_coef * squared value error minus
// entropy_coef * entropy over batch[indices]. When `grad` is given it is
// resized to the parameter count and receives the exact gradient.
LossStats ppo_loss(const PolicyNetwork& net, std::span<const Sample> batch, std::span<const std::size_t> indices,
                   const PpoConfig& cfg, std::vector<double>* grad,
                   kernels::Exec exec = kernels::Exec::parallel);

class Adam {
public:
    explicit Adam(std::size_t n, double beta1 = 0.9, double beta2 = 0.999, double eps = 1e-8);
    void step(std::span<double> params, std::span<const double> grad, double lr);
    std::size_t steps() const { return t_; }

private:
    std::vector<double> m_, v_;
    double beta1_, beta2_, eps_;
    std::size_t t_ = 0;
};

struct UpdateReport {
    LossStats stats;  // averaged over minibatch steps
    std::size_t samples = 0;
    std::size_t minibatch_steps = 0;
    bool aborted = false;
    std::string message;
};

// Normalizes advantages, then runs cfg.epochs passes of shuffled minibatch
// Adam steps. A non-finite loss or gradient restores the weights held at
// entry and reports the failure.
UpdateReport ppo_update(PolicyNetwork& net, Adam& adam, std::vector<Sample>& batch, const PpoConfig& cfg, Rng& rng);

// Samples from (or, when greedy, takes the argmax of) the network's policy.
class NetworkPolicy final : public core::AgentPolicy {
public:
    explicit NetworkPolicy(const PolicyNetwork& net, bool greedy = false) : net_(&net), greedy_(greedy) {}
    core::PolicyDecision decide(const core::Observation& obs, Rng& rng) override;
    double value(const core::Observation& obs) override { return net_->forward(obs).value; }

private:
    const PolicyNetwork* net_;
    bool greedy_;
};

}  // namespace matsg::learn
