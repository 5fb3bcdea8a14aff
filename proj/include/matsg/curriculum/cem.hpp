// cem.hpp - cross-entropy refit of a factored scenario generator.
#pragma once

#include <string>
#include <utility>
#include <vector>

#include "matsg/dsl/generator.hpp"

namespace matsg::curriculum {

struct CemConfig {
    std::size_t population = 16;
    double elite_fraction = 0.25;
    double smoothing = 0.7;  // weight of the elite fit

    // Throws matsg::Error on an out-of-range field.
    void validate() const;
    std::size_t elite_count() const;
};

// Floor on a refitted Gaussian stddev as a fraction of the sampling range.
inline constexpr double kStddevFloorFraction = 0.05;

using ScoredParams = std::pair<dsl::ScenarioParams, double>;

// One CEM step on the first cfg.population entries of history (stable order
// breaks score ties). Throws when history is shorter than the population.
// The result satisfies dsl::validate_distribution and never uses uniform ranges.
dsl::GeneratorDistribution update_generator(const dsl::ScenarioSpec& spec, const dsl::GeneratorDistribution& current,
                                            const std::vector<ScoredParams>& history, const CemConfig& cfg);

// Per-factor text, one `name kind fields...` line per parameter.
std::string format_generator(const dsl::ScenarioSpec& spec, const dsl::GeneratorDistribution& dist);
dsl::GeneratorDistribution parse_generator(const dsl::ScenarioSpec& spec, std::string_view text);

}  // namespace matsg::curriculum
