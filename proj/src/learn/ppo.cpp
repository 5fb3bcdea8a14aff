#include "matsg/learn/ppo.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include "matsg/core/error.hpp"

namespace matsg::learn {

void PpoConfig::validate() const {
    if (!(clip > 0.0 && clip < 1.0)) throw Error("ppo clip must lie in (0, 1)");
    if (!(gae_lambda >= 0.0 && gae_lambda <= 1.0)) throw Error("gae lambda must lie in [0, 1]");
    if (!(gamma > 0.0 && gamma <= 1.0)) throw Error("gamma must lie in (0, 1]");
    if (epochs == 0 || minibatch == 0 || batch == 0 || updates == 0)
        throw Error("epochs, minibatch, batch and updates must be positive");
    if (!(learning_rate >= 0.0) || !(entropy_coef >= 0.0) || !(value_coef >= 0.0) || !(max_grad_norm >= 0.0))
        throw Error("learning rate and loss coefficients must be non-negative");
}

Gae compute_gae(std::span<const double> rewards, std::span<const double> values, const std::vector<bool>& dones,
                double gamma, double lambda) {
    const std::size_t n = rewards.size();
    if (values.size() != n + 1 || dones.size() != n)
        throw Error("gae needs n rewards, n dones and n + 1 values");
    Gae g;
    g.advantages.resize(n);
    g.returns.resize(n);
    double acc = 0.0;
    for (std::size_t t = n; t-- > 0;) {
        const double live = dones[t] ? 0.0 : 1.0;
        const double delta = rewards[t] + gamma * values[t + 1] * live - values[t];
        acc = delta + gamma * lambda * live * acc;
        g.advantages[t] = acc;
        g.returns[t] = acc + values[t];
    }
    return g;
}

std::vector<Sample> make_samples(const std::vector<core::Transition>& trajectory, double gamma, double lambda) {
    std::vector<Sample> out;
    out.reserve(trajectory.size());
    std::size_t start = 0;
    while (start < trajectory.size()) {
        std::size_t end = start;
        while (end < trajectory.size() && !trajectory[end].done && !trajectory[end].truncated) ++end;
        if (end == trajectory.size()) throw Error("trajectory segment does not end in done or truncated");
        ++end;  // include the closing transition
        std::vector<double> rewards, values;
        std::vector<bool> dones(end - start, false);
        for (std::size_t t = start; t < end; ++t) {
            rewards.push_back(trajectory[t].reward);
            values.push_back(trajectory[t].value_estimate);
        }
        const auto& last = trajectory[end - 1];
        values.push_back(last.done ? 0.0 : last.bootstrap_value);
        dones.back() = last.done;
        const Gae g = compute_gae(rewards, values, dones, gamma, lambda);
        for (std::size_t t = start; t < end; ++t) {
            Sample s;
            s.observation = trajectory[t].observation;
            s.action = trajectory[t].action;
            s.old_log_prob = trajectory[t].log_prob;
            s.old_value = trajectory[t].value_estimate;
            s.advantage = g.advantages[t - start];
            s.ret = g.returns[t - start];
            out.push_back(std::move(s));
        }
        start = end;
    }
    return out;
}

void normalize_advantages(std::vector<Sample>& batch) {
    if (batch.empty()) return;
    double mean = 0.0;
    for (const auto& s : batch) mean += s.advantage;
    mean /= static_cast<double>(batch.size());
    double var = 0.0;
    for (const auto& s : batch) var += (s.advantage - mean) * (s.advantage - mean);
    var /= static_cast<double>(batch.size());
    const double sd = std::sqrt(var);
    for (auto& s : batch) s.advantage = sd > 1e-12 ? (s.advantage - mean) / sd : s.advantage - mean;
}

LossStats ppo_loss(const PolicyNetwork& net, std::span<const Sample> batch, std::span<const std::size_t> indices,
                   const PpoConfig& cfg, std::vector<double>* grad, kernels::Exec exec) {
    if (indices.empty()) throw Error("ppo loss over an empty minibatch");
    if (grad) grad->assign(net.params().size(), 0.0);
    const double n = static_cast<double>(indices.size());
    const std::size_t a_count = net.shape().actions;
    LossStats st;
    std::vector<double> dlogits(a_count);
    for (const std::size_t idx : indices) {
        const Sample& s = batch[idx];
        if (s.action >= a_count) throw Error("sample action outside the policy head");
        const ForwardPass f = net.forward(s.observation, exec);
        const double logp = std::log(f.probs[s.action]);
        const double ratio = std::exp(logp - s.old_log_prob);
        const double clipped = std::clamp(ratio, 1.0 - cfg.clip, 1.0 + cfg.clip);
        const double unclipped_obj = ratio * s.advantage, clipped_obj = clipped * s.advantage;
        // The min picks the unclipped term unless the clipped one is strictly smaller.
        const bool use_unclipped = unclipped_obj <= clipped_obj;
        st.policy_loss -= std::min(unclipped_obj, clipped_obj);
        if (std::abs(ratio - 1.0) > cfg.clip) st.clip_fraction += 1.0;
        st.approx_kl += (ratio - 1.0) - (logp - s.old_log_prob);
        double entropy = 0.0;
        for (double p : f.probs)
            if (p > 0.0) entropy -= p * std::log(p);
        st.entropy += entropy;
        const double err = f.value - s.ret;
        st.value_loss += err * err;
        if (!grad) continue;

        // d(loss)/d(log pi(a)) for the surrogate, then through the softmax.
        const double dlogp = use_unclipped ? -ratio * s.advantage : 0.0;
        for (std::size_t k = 0; k < a_count; ++k) {
            const double p = f.probs[k];
            const double onehot = k == s.action ? 1.0 : 0.0;
            const double logpk = p > 0.0 ? std::log(p) : 0.0;
            // -entropy_coef * H has gradient entropy_coef * p_k (log p_k + H).
            dlogits[k] = (dlogp * (onehot - p) + cfg.entropy_coef * p * (logpk + entropy)) / n;
        }
        const double dvalue = cfg.value_coef * 2.0 * err / n;
        net.backward(s.observation, f, dlogits, dvalue, *grad, exec);
    }
    st.policy_loss /= n;
    st.value_loss /= n;
    st.entropy /= n;
    st.clip_fraction /= n;
    st.approx_kl /= n;
    st.total = st.policy_loss + cfg.value_coef * st.value_loss - cfg.entropy_coef * st.entropy;
    return st;
}

Adam::Adam(std::size_t n, double beta1, double beta2, double eps)
    : m_(n, 0.0), v_(n, 0.0), beta1_(beta1), beta2_(beta2), eps_(eps) {}

void Adam::step(std::span<double> params, std::span<const double> grad, double lr) {
    if (params.size() != m_.size() || grad.size() != m_.size()) throw Error("adam state size mismatch");
    ++t_;
    const double c1 = 1.0 - std::pow(beta1_, static_cast<double>(t_));
    const double c2 = 1.0 - std::pow(beta2_, static_cast<double>(t_));
    const auto n = static_cast<std::ptrdiff_t>(params.size());
#pragma omp parallel for schedule(static) if (n > (1 << 16))
    for (std::ptrdiff_t i = 0; i < n; ++i) {
        m_[i] = beta1_ * m_[i] + (1.0 - beta1_) * grad[i];
        v_[i] = beta2_ * v_[i] + (1.0 - beta2_) * grad[i] * grad[i];
        params[i] -= lr * (m_[i] / c1) / (std::sqrt(v_[i] / c2) + eps_);
    }
}

UpdateReport ppo_update(PolicyNetwork& net, Adam& adam, std::vector<Sample>& batch, const PpoConfig& cfg, Rng& rng) {
    cfg.validate();
    UpdateReport rep;
    rep.samples = batch.size();
    if (batch.empty()) {
        rep.aborted = true;
        rep.message = "empty batch";
        return rep;
    }
    normalize_advantages(batch);
    const std::vector<double> entry = net.params();
    std::vector<std::size_t> order(batch.size());
    std::iota(order.begin(), order.end(), std::size_t{0});
    std::vector<double> grad;
    for (std::size_t epoch = 0; epoch < cfg.epochs; ++epoch) {
        for (std::size_t i = order.size(); i > 1; --i) std::swap(order[i - 1], order[rng.below(i)]);
        for (std::size_t start = 0; start < order.size(); start += cfg.minibatch) {
            const std::size_t end = std::min(order.size(), start + cfg.minibatch);
            const std::span<const std::size_t> mb(order.data() + start, end - start);
            const LossStats st = ppo_loss(net, batch, mb, cfg, &grad);
            double norm2 = 0.0;
            for (double g : grad) norm2 += g * g;
            if (!std::isfinite(st.total) || !std::isfinite(norm2)) {
                net.params() = entry;
                rep.aborted = true;
                rep.message = "non-finite loss at epoch " + std::to_string(epoch) + " (policy " +
                              std::to_string(st.policy_loss) + ", value " + std::to_string(st.value_loss) +
                              ", entropy " + std::to_string(st.entropy) + ")";
                return rep;
            }
            const double norm = std::sqrt(norm2);
            if (cfg.max_grad_norm > 0.0 && norm > cfg.max_grad_norm)
                for (double& g : grad) g *= cfg.max_grad_norm / norm;
            adam.step(net.params(), grad, cfg.learning_rate);
            rep.stats.total += st.total;
            rep.stats.policy_loss += st.policy_loss;
            rep.stats.value_loss += st.value_loss;
            rep.stats.entropy += st.entropy;
            rep.stats.clip_fraction += st.clip_fraction;
            rep.stats.approx_kl += st.approx_kl;
            ++rep.minibatch_steps;
        }
    }
    const double k = static_cast<double>(rep.minibatch_steps);
    rep.stats.total /= k;
    rep.stats.policy_loss /= k;
    rep.stats.value_loss /= k;
    rep.stats.entropy /= k;
    rep.stats.clip_fraction /= k;
    rep.stats.approx_kl /= k;
    return rep;
}

core::PolicyDecision NetworkPolicy::decide(const core::Observation& obs, Rng& rng) {
    const ForwardPass f = net_->forward(obs);
    std::uint32_t a = 0;
    if (greedy_) {
        a = static_cast<std::uint32_t>(std::max_element(f.probs.begin(), f.probs.end()) - f.probs.begin());
    } else {
        a = static_cast<std::uint32_t>(rng.categorical(f.probs));
    }
    return {a, std::log(f.probs[a]), f.value};
}

}  // namespace matsg::learn
