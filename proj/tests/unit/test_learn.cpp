#include <omp.h>

#include <cmath>
#include <cstdio>
#include <numeric>

#include "doctest.h"
#include "matsg/core/error.hpp"
#include "matsg/dsl/parser.hpp"
#include "matsg/learn/evaluate.hpp"
#include "matsg/learn/ppo.hpp"
#include "matsg/sim/intersection_env.hpp"

using namespace matsg;
using namespace matsg::learn;

namespace {

core::Observation random_obs(Rng& rng, std::size_t binary, std::size_t dense, double density) {
    core::Observation o;
    o.binary_size = static_cast<std::uint32_t>(binary);
    for (std::uint32_t i = 0; i < binary; ++i)
        if (rng.bernoulli(density)) o.active.push_back(i);
    for (std::size_t k = 0; k < dense; ++k) o.dense.push_back(rng.uniform(-1.0, 1.0));
    return o;
}

PolicyNetwork tiny_net(std::uint64_t seed) {
    PolicyNetwork net({6, 3, 4, 3}, seed);
    // Larger policy weights than the default init so every term matters.
    Rng rng(seed);
    for (double& p : net.params()) p = rng.normal(0.0, 0.5);
    return net;
}

// Two samples whose probability ratios sit well inside or outside the clip band.
std::vector<Sample> tiny_batch(const PolicyNetwork& net, Rng& rng) {
    std::vector<Sample> batch;
    const double log_ratios[] = {0.08, -0.5};
    for (int i = 0; i < 2; ++i) {
        Sample s;
        s.observation = random_obs(rng, 6, 3, 0.5);
        s.action = static_cast<std::uint32_t>(rng.below(3));
        const auto f = net.forward(s.observation);
        s.old_log_prob = std::log(f.probs[s.action]) - log_ratios[i];
        s.advantage = rng.uniform(-2.0, 2.0);
        s.ret = rng.uniform(-1.0, 1.0);
        s.old_value = f.value;
        batch.push_back(s);
    }
    return batch;
}

double rel_error(double a, double b) { return std::abs(a - b) / std::max(1e-6, std::max(std::abs(a), std::abs(b))); }

std::shared_ptr<const sim::RoadMap> fourway() {
    static auto map = std::make_shared<const sim::RoadMap>(sim::make_fourway());
    return map;
}

}  // namespace

TEST_CASE("kernels: serial and parallel versions agree bitwise") {
    const int saved = omp_get_max_threads();
    omp_set_num_threads(4);
    Rng rng(1);
    for (int trial = 0; trial < 5; ++trial) {
        const std::size_t in = 200 + rng.below(400), out = 64 + rng.below(100);
        std::vector<double> w(in * out), b(out), x(in), g(out);
        for (double& v : w) v = rng.normal();
        for (double& v : b) v = rng.normal();
        for (double& v : x) v = rng.normal();
        for (double& v : g) v = rng.normal();
        std::vector<double> y1(out), y2(out);
        kernels::dense_forward(kernels::Exec::serial, w, b, x, y1);
        kernels::dense_forward(kernels::Exec::parallel, w, b, x, y2);
        CHECK(y1 == y2);

        std::vector<double> gx1(in), gx2(in);
        kernels::dense_backward_input(kernels::Exec::serial, w, g, gx1);
        kernels::dense_backward_input(kernels::Exec::parallel, w, g, gx2);
        CHECK(gx1 == gx2);

        std::vector<double> gw1(in * out, 0.5), gw2(in * out, 0.5), gb1(out), gb2(out);
        kernels::dense_accumulate(kernels::Exec::serial, gw1, gb1, x, g);
        kernels::dense_accumulate(kernels::Exec::parallel, gw2, gb2, x, g);
        CHECK(gw1 == gw2);
        CHECK(gb1 == gb2);

        const std::size_t binary = in - 3;
        const auto obs = random_obs(rng, binary, 3, 0.3);
        kernels::sparse_forward(kernels::Exec::serial, w, b, obs.active, obs.dense, binary, y1);
        kernels::sparse_forward(kernels::Exec::parallel, w, b, obs.active, obs.dense, binary, y2);
        CHECK(y1 == y2);
        // Against the dense product of the expanded input.
        std::vector<double> full(in, 0.0), y3(out);
        for (auto i : obs.active) full[i] = 1.0;
        for (std::size_t k = 0; k < 3; ++k) full[binary + k] = obs.dense[k];
        kernels::dense_forward(kernels::Exec::serial, w, b, full, y3);
        for (std::size_t o = 0; o < out; ++o) CHECK(y1[o] == doctest::Approx(y3[o]).epsilon(1e-12));

        kernels::sparse_accumulate(kernels::Exec::serial, gw1, gb1, obs.active, obs.dense, binary, g);
        kernels::sparse_accumulate(kernels::Exec::parallel, gw2, gb2, obs.active, obs.dense, binary, g);
        CHECK(gw1 == gw2);
    }
    omp_set_num_threads(saved);
}

TEST_CASE("policy forward: zero weights give a uniform policy and zero value") {
    PolicyNetwork net({10, 2, 8, 5}, 3);
    std::fill(net.params().begin(), net.params().end(), 0.0);
    Rng rng(2);
    const auto f = net.forward(random_obs(rng, 10, 2, 0.5));
    for (double p : f.probs) CHECK(p == doctest::Approx(0.2).epsilon(1e-15));
    CHECK(f.value == 0.0);
}

TEST_CASE("policy forward: distributions sum to one and ignore logit shifts") {
    Rng rng(4);
    for (int trial = 0; trial < 50; ++trial) {
        PolicyNetwork net({20, 3, 16, 7}, trial);
        for (double& p : net.params()) p = rng.normal(0.0, 2.0);
        const auto obs = random_obs(rng, 20, 3, 0.4);
        const auto f = net.forward(obs);
        CHECK(std::accumulate(f.probs.begin(), f.probs.end(), 0.0) == doctest::Approx(1.0).epsilon(1e-9));
        CHECK(std::isfinite(f.value));
        CHECK(net.forward(obs).probs == f.probs);
        auto shifted = f.logits;
        for (double& l : shifted) l += 123.25;
        const auto q = softmax(shifted);
        for (std::size_t k = 0; k < q.size(); ++k) CHECK(q[k] == doctest::Approx(f.probs[k]).epsilon(1e-12));
    }
}

TEST_CASE("policy forward: shape mismatch is an error") {
    PolicyNetwork net({10, 2, 8, 5}, 3);
    Rng rng(1);
    CHECK_THROWS_AS(net.forward(random_obs(rng, 11, 2, 0.5)), Error);
    CHECK_THROWS_AS(net.forward(random_obs(rng, 10, 3, 0.5)), Error);
    auto bad = random_obs(rng, 10, 2, 0.5);
    bad.active.push_back(10);
    CHECK_THROWS_AS(net.forward(bad), Error);
}

TEST_CASE("gae: one-step TD when lambda is zero") {
    const auto g = compute_gae(std::vector{1.5}, std::vector{0.25, 2.0}, std::vector<bool>{false}, 0.9, 0.0);
    CHECK(g.advantages[0] == doctest::Approx(1.5 + 0.9 * 2.0 - 0.25));
    CHECK(g.returns[0] == doctest::Approx(1.5 + 0.9 * 2.0));
}

TEST_CASE("gae: gamma = lambda = 1 on a terminal episode telescopes") {
    const std::vector<double> r{1.0, -2.0, 0.5, 3.0}, v{0.3, 0.1, -0.4, 0.9, 7.0};
    const auto g = compute_gae(r, v, std::vector<bool>{false, false, false, true}, 1.0, 1.0);
    for (std::size_t t = 0; t < r.size(); ++t) {
        const double tail = std::accumulate(r.begin() + t, r.end(), 0.0);
        CHECK(g.advantages[t] == doctest::Approx(tail - v[t]).epsilon(1e-14));
    }
}

TEST_CASE("gae: recursion matches the brute-force double sum") {
    // The worked example: rewards [1, 1], values [0.5, 0.5] and bootstrap 0.
    auto brute = [](const std::vector<double>& r, const std::vector<double>& v, const std::vector<bool>& d, double gamma,
                    double lambda) {
        std::vector<double> adv(r.size(), 0.0);
        for (std::size_t t = 0; t < r.size(); ++t) {
            double weight = 1.0;
            for (std::size_t k = t; k < r.size(); ++k) {
                const double delta = r[k] + gamma * v[k + 1] * (d[k] ? 0.0 : 1.0) - v[k];
                adv[t] += weight * delta;
                if (d[k]) break;
                weight *= gamma * lambda;
            }
        }
        return adv;
    };
    const auto g = compute_gae(std::vector{1.0, 1.0}, std::vector{0.5, 0.5, 0.0}, std::vector<bool>{false, false}, 0.9,
                               0.8);
    const auto b = brute({1.0, 1.0}, {0.5, 0.5, 0.0}, {false, false}, 0.9, 0.8);
    CHECK(g.advantages[0] == doctest::Approx(b[0]).epsilon(1e-14));
    CHECK(g.advantages[1] == doctest::Approx(b[1]).epsilon(1e-14));
    CHECK(b[1] == doctest::Approx(0.5));
    CHECK(b[0] == doctest::Approx(0.95 + 0.72 * 0.5));

    Rng rng(9);
    for (int trial = 0; trial < 100; ++trial) {
        const std::size_t n = 1 + rng.below(30);
        std::vector<double> r(n), v(n + 1);
        std::vector<bool> d(n);
        for (auto& x : r) x = rng.normal();
        for (auto& x : v) x = rng.normal();
        for (std::size_t t = 0; t < n; ++t) d[t] = rng.bernoulli(0.1);
        const double gamma = rng.uniform(0.5, 1.0), lambda = rng.uniform(0.0, 1.0);
        const auto fast = compute_gae(r, v, d, gamma, lambda);
        const auto slow = brute(r, v, d, gamma, lambda);
        for (std::size_t t = 0; t < n; ++t) {
            REQUIRE(fast.advantages[t] == doctest::Approx(slow[t]).epsilon(1e-12));
            REQUIRE(fast.returns[t] == doctest::Approx(slow[t] + v[t]).epsilon(1e-12));
        }
    }
    CHECK_THROWS_AS(compute_gae(std::vector{1.0}, std::vector{1.0}, std::vector<bool>{false}, 0.9, 0.9), Error);
}

TEST_CASE("gae: trajectory segments bootstrap only on truncation") {
    std::vector<core::Transition> traj(4);
    const double rewards[] = {1.0, 2.0, 3.0, 4.0}, values[] = {0.5, 0.25, 1.0, 2.0};
    for (int i = 0; i < 4; ++i) {
        traj[i].reward = rewards[i];
        traj[i].value_estimate = values[i];
    }
    traj[1].done = true;
    traj[1].bootstrap_value = 100.0;  // ignored on termination
    traj[3].truncated = true;
    traj[3].bootstrap_value = 10.0;
    const auto s = make_samples(traj, 0.5, 1.0);
    REQUIRE(s.size() == 4);
    CHECK(s[1].advantage == doctest::Approx(2.0 - 0.25));
    CHECK(s[0].advantage == doctest::Approx(1.0 + 0.5 * 2.0 - 0.5));
    CHECK(s[3].advantage == doctest::Approx(4.0 + 0.5 * 10.0 - 2.0));
    CHECK(s[2].advantage == doctest::Approx(3.0 + 0.5 * 4.0 + 0.25 * 10.0 - 1.0));
    traj[3].truncated = false;
    CHECK_THROWS_AS(make_samples(traj, 0.5, 1.0), Error);
}

TEST_CASE("ppo: advantage normalization") {
    Rng rng(5);
    std::vector<Sample> batch(300);
    for (auto& s : batch) s.advantage = rng.normal(3.0, 7.0);
    normalize_advantages(batch);
    double mean = 0.0, var = 0.0;
    for (const auto& s : batch) mean += s.advantage;
    mean /= batch.size();
    for (const auto& s : batch) var += (s.advantage - mean) * (s.advantage - mean);
    CHECK(std::abs(mean) < 1e-9);
    CHECK(std::abs(std::sqrt(var / batch.size()) - 1.0) < 1e-6);
}

TEST_CASE("ppo: analytic gradient matches central finite differences") {
    PpoConfig cfg;
    for (std::uint64_t seed = 1; seed <= 5; ++seed) {
        PolicyNetwork net = tiny_net(seed);
        Rng rng(seed);
        const auto batch = tiny_batch(net, rng);
        const std::vector<std::size_t> idx{0, 1};
        std::vector<double> grad;
        ppo_loss(net, batch, idx, cfg, &grad);
        const double h = 1e-5;
        double worst = 0.0;
        for (std::size_t i = 0; i < net.params().size(); ++i) {
            const double keep = net.params()[i];
            net.params()[i] = keep + h;
            const double up = ppo_loss(net, batch, idx, cfg, nullptr).total;
            net.params()[i] = keep - h;
            const double down = ppo_loss(net, batch, idx, cfg, nullptr).total;
            net.params()[i] = keep;
            worst = std::max(worst, rel_error(grad[i], (up - down) / (2.0 * h)));
        }
        CAPTURE(seed);
        CHECK(worst < 1e-3);
    }
}

TEST_CASE("ppo: at ratio one the surrogate gradient is the vanilla policy gradient") {
    PpoConfig cfg;
    cfg.entropy_coef = 0.0;
    cfg.value_coef = 0.0;
    PolicyNetwork net = tiny_net(11);
    Rng rng(11);
    auto batch = tiny_batch(net, rng);
    for (auto& s : batch) s.old_log_prob = std::log(net.forward(s.observation).probs[s.action]);
    const std::vector<std::size_t> idx{0, 1};
    std::vector<double> grad;
    const auto st = ppo_loss(net, batch, idx, cfg, &grad);
    CHECK(st.clip_fraction == 0.0);
    // -mean(A log pi(a|o)) differentiated numerically.
    auto pg_loss = [&] {
        double l = 0.0;
        for (const auto& s : batch) l -= s.advantage * std::log(net.forward(s.observation).probs[s.action]);
        return l / 2.0;
    };
    for (std::size_t i = 0; i < net.params().size(); ++i) {
        const double keep = net.params()[i];
        net.params()[i] = keep + 1e-6;
        const double up = pg_loss();
        net.params()[i] = keep - 1e-6;
        const double down = pg_loss();
        net.params()[i] = keep;
        REQUIRE(rel_error(grad[i], (up - down) / 2e-6) < 1e-5);
    }
}

TEST_CASE("ppo: zero learning rate leaves the weights untouched") {
    PolicyNetwork net = tiny_net(2);
    const auto before = net.params();
    Rng rng(2);
    auto batch = tiny_batch(net, rng);
    PpoConfig cfg;
    cfg.learning_rate = 0.0;
    Adam adam(net.params().size());
    const auto rep = ppo_update(net, adam, batch, cfg, rng);
    CHECK_FALSE(rep.aborted);
    CHECK(net.params() == before);
}

TEST_CASE("ppo: non-finite loss aborts and restores the weights") {
    PolicyNetwork net = tiny_net(3);
    const auto before = net.params();
    Rng rng(3);
    auto batch = tiny_batch(net, rng);
    batch[0].ret = std::nan("");
    Adam adam(net.params().size());
    const auto rep = ppo_update(net, adam, batch, PpoConfig{}, rng);
    CHECK(rep.aborted);
    CHECK(rep.message.find("non-finite") != std::string::npos);
    CHECK(net.params() == before);
}

TEST_CASE("ppo: updating one agent leaves another agent's weights unchanged") {
    PolicyNetwork a = tiny_net(4), b = tiny_net(5);
    const auto b_before = b.params();
    Rng rng(4);
    auto batch = tiny_batch(a, rng);
    Adam adam(a.params().size());
    ppo_update(a, adam, batch, PpoConfig{}, rng);
    CHECK(b.params() == b_before);
    CHECK(a.params() != tiny_net(4).params());
}

TEST_CASE("adam: the first step moves each weight by the learning rate against its gradient sign") {
    std::vector<double> p{1.0, -2.0, 0.5}, g{0.3, -4.0, 0.0};
    Adam adam(3);
    adam.step(p, g, 0.01);
    CHECK(p[0] == doctest::Approx(0.99));
    CHECK(p[1] == doctest::Approx(-1.99));
    CHECK(p[2] == 0.5);
}

TEST_CASE("ppo: repeated updates raise the probability of an advantaged action") {
    PolicyNetwork net({6, 3, 8, 3}, 7);
    Rng rng(7);
    const auto obs = random_obs(rng, 6, 3, 0.5);
    Adam adam(net.params().size());
    PpoConfig cfg;
    cfg.learning_rate = 1e-2;
    cfg.minibatch = 16;
    const double before = net.forward(obs).probs[2];
    for (int u = 0; u < 20; ++u) {
        std::vector<Sample> batch;
        NetworkPolicy pol(net);
        for (int i = 0; i < 32; ++i) {
            const auto d = pol.decide(obs, rng);
            batch.push_back({obs, d.action, d.log_prob, d.value, d.action == 2 ? 1.0 : -0.5, 0.0});
        }
        ppo_update(net, adam, batch, cfg, rng);
    }
    CHECK(net.forward(obs).probs[2] > std::max(0.9, before));
}

TEST_CASE("checkpoint: round trip and corruption") {
    PolicyNetwork net({40, 3, 8, 5}, 12);
    const auto bytes = encode_checkpoint(net);
    CHECK(std::string(bytes.begin(), bytes.begin() + 4) == "MGPP");
    CHECK(decode_checkpoint(bytes) == net);
    const std::string path = "test_learn_checkpoint.bin";
    save_checkpoint(net, path);
    CHECK(load_checkpoint(path) == net);
    std::remove(path.c_str());

    auto bad = bytes;
    bad[0] = 'X';
    CHECK_THROWS_AS(decode_checkpoint(bad), Error);
    bad = bytes;
    bad[4] = 9;
    CHECK_THROWS_AS(decode_checkpoint(bad), Error);
    bad = bytes;
    bad.pop_back();
    CHECK_THROWS_AS(decode_checkpoint(bad), Error);
    bad = bytes;
    bad.push_back(0);
    CHECK_THROWS_AS(decode_checkpoint(bad), Error);
    CHECK_THROWS_AS(load_checkpoint("/nonexistent/ckpt.bin"), Error);
}

TEST_CASE("evaluate: empty list, determinism and standstill safety") {
    const auto spec = dsl::load_spec_or_throw(std::string(MATSG_SOURCE_DIR) + "/scenarios/intersection.scen");
    sim::IntersectionEnv env(fourway(), spec, sim::ActionSpace::macro);
    PolicyNetwork net({sim::kChannels * sim::kGridSize * sim::kGridSize, 3, 16, env.action_count()}, 1);
    CHECK(evaluate_policy(env, {{core::AgentId{0}, &net}}, {}, 3, 0).empty());

    std::vector<dsl::ScenarioParams> scenarios;
    const char* routes[] = {"straight", "left", "right"};
    for (int i = 0; i < 6; ++i)
        scenarios.push_back({"intersection",
                             {{"route", std::string(routes[i % 3])},
                              {"npc_count", std::int64_t{i}},
                              {"npc_speed", 6.0},
                              {"npc_keeps_distance", i % 2 == 0},
                              {"npc_respects_lights", i % 3 == 0}},
                             static_cast<std::uint64_t>(40 + i)});
    const auto a = evaluate_policy(env, {{core::AgentId{0}, &net}}, scenarios, 2, 5);
    const auto b = evaluate_policy(env, {{core::AgentId{0}, &net}}, scenarios, 2, 5);
    REQUIRE(a.size() == scenarios.size());
    for (std::size_t i = 0; i < a.size(); ++i) {
        CHECK(a[i].mean_return == b[i].mean_return);
        CHECK(a[i].route_completion == b[i].route_completion);
        CHECK(a[i].collision_count == b[i].collision_count);
        CHECK(a[i].episodes == 2);
    }

    core::FixedPolicy stop(static_cast<std::uint32_t>(sim::MacroCommand::stop));
    const auto s = pool(evaluate(env, {{core::AgentId{0}, &stop}}, scenarios, 3, 1));
    CHECK(s.route_completion == 0.0);
    CHECK(s.collision_count == 0);
    CHECK(s.episodes == 18);
}
