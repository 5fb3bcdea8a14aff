// config.hpp - declarative experiment configuration.
//
//   # comment
//   [experiment]
//   kind = ued
//   seeds = 1, 2, 3
//   [scenario]
//   file = ../scenarios/intersection.scen
//   [curriculum]
//   replay_prob = 0.5
//   [ppo]
//   batch = 1024
#pragma once

#include <string>
#include <vector>

#include "matsg/curriculum/dcd.hpp"
#include "matsg/learn/ppo.hpp"
#include "matsg/sim/intersection_env.hpp"

namespace matsg::harness {

enum class ExperimentKind { actions, ued };

struct ExperimentConfig {
    ExperimentKind kind = ExperimentKind::ued;
    std::string scenario_file = "scenarios/intersection.scen";
    std::string map_file;  // empty selects the built-in junction
    std::vector<std::uint64_t> seeds{1, 2, 3};
    std::uint64_t env_steps = 150000;  // ued budget
    std::size_t updates = 175;         // actions budget
    std::size_t bin = 5;
    std::string out_dir = "out";
    std::vector<sim::ActionSpace> action_spaces{sim::ActionSpace::continuous, sim::ActionSpace::waypoint,
                                                sim::ActionSpace::macro};
    sim::ActionSpace action_space = sim::ActionSpace::macro;  // ued runs
    std::vector<curriculum::Method> methods{curriculum::Method::dr, curriculum::Method::plr, curriculum::Method::dcd};
    std::size_t eval_every = 10;  // policy updates; 0 disables holdout evaluation
    std::size_t eval_episodes = 3;
    std::size_t checkpoints = 4;
    std::size_t hidden = 128;
    bool freeze_policy = false;  // rollouts only, no PPO updates
    curriculum::CurriculumConfig curriculum;
    learn::PpoConfig ppo;

    // Throws matsg::Error on an inconsistent configuration.
    void validate() const;
};

// Unknown sections or keys, malformed values and duplicate keys are errors
// carrying the line number.
ExperimentConfig parse_config(std::string_view text);

// Parses a file; a relative scenario or map path is resolved against the
// directory holding the config.
ExperimentConfig load_config(const std::string& path);

std::vector<std::uint64_t> parse_seed_list(std::string_view text);

}  // namespace matsg::harness
