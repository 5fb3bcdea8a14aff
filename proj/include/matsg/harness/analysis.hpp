// analysis.hpp - parameter-distribution and buffer-regret reports over run snapshots.
#pragma once

#include <string>
#include <vector>

#include "matsg/curriculum/level_buffer.hpp"
#include "matsg/dsl/scenario.hpp"

namespace matsg::harness {

// Fractions and means over a list of scenarios; NaN where the list is empty
// or the knob is unbound.
struct ParamSummary {
    std::size_t scenarios = 0;
    double straight = 0.0, left = 0.0, right = 0.0;
    double mean_npc_count = 0.0;
    double unsafe_distance = 0.0;  // NPCs that do not keep a safety distance
    double ignores_lights = 0.0;
    double mean_npc_speed = 0.0;
};

ParamSummary summarize_params(const dsl::ScenarioSpec& spec, const std::vector<dsl::ScenarioParams>& params);

// Mean regret per (maneuver, npc_count bucket) cell; NaN marks empty cells.
// Buckets are {0}, {1, 2}, {3, 4}, {5+}. An unbound knob collapses its axis to `any`.
struct RegretMatrix {
    std::vector<std::string> rows, cols;
    std::vector<std::vector<double>> mean;
    std::vector<std::vector<std::size_t>> count;
};

RegretMatrix regret_matrix(const dsl::ScenarioSpec& spec, const std::vector<curriculum::BufferEntry>& entries);

// Entropy of the cell means (normalized to a distribution over all cells)
// divided by log(cell count). Uniform regret over every cell gives 1; a
// matrix with zero total regret counts as unconcentrated (1).
double normalized_entropy(const RegretMatrix& m);

// Reads <dir>/spec.scen and <dir>/snapshots/*_params.csv; writes
// params_report.csv and one SVG per summarized quantity.
void analyze_params_dir(const std::string& dir);
// Reads <dir>/spec.scen and <dir>/snapshots/*_buffer.csv; writes
// regret_matrix.csv, regret_entropy.csv and a heatmap per run at its final checkpoint.
void analyze_regret_dir(const std::string& dir);

}  // namespace matsg::harness
