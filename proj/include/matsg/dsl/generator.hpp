// generator.hpp - factored sampling distribution over a scenario schema.
#pragma once

#include <variant>
#include <vector>

#include "matsg/core/rng.hpp"
#include "matsg/dsl/scenario.hpp"

namespace matsg::dsl {

// Smallest probability any categorical value or Bernoulli outcome may take.
inline constexpr double kProbabilityFloor = 0.01;

// Generated scenario seeds keep the top bit clear; evaluation scenarios use
// seeds with the top bit set, so the two sets never intersect.
inline constexpr std::uint64_t kReservedSeedBit = 1ULL << 63;

struct CategoricalFactor {
    std::vector<double> probs;
    bool operator==(const CategoricalFactor&) const = default;
};

// Truncated to the parameter's range on sampling.
struct GaussianFactor {
    double mean = 0.0;
    double stddev = 1.0;
    bool operator==(const GaussianFactor&) const = default;
};

struct BernoulliFactor {
    double p = 0.5;
    bool operator==(const BernoulliFactor&) const = default;
};

using Factor = std::variant<CategoricalFactor, GaussianFactor, BernoulliFactor>;

struct GeneratorDistribution {
    std::vector<Factor> factors;  // aligned with ScenarioSpec::params
    // Domain randomization samples ranges uniformly and ignores the Gaussian factors.
    bool uniform_ranges = false;

    bool operator==(const GeneratorDistribution&) const = default;
};

GeneratorDistribution uniform_distribution(const ScenarioSpec& spec);

// Throws matsg::Error on a factor/domain mismatch.
ScenarioParams sample_params(const ScenarioSpec& spec, const GeneratorDistribution& dist, Rng& rng);

// Throws matsg::Error describing the first violated invariant (alignment,
// normalization within 1e-9, probability floor, positive stddev).
void validate_distribution(const ScenarioSpec& spec, const GeneratorDistribution& dist);

// Range bounds as reals; integer ranges are widened by 0.5 on each side so
// rounding maps every integer to an equal-width interval.
std::pair<double, double> sampling_bounds(const DomainKind& d);

}  // namespace matsg::dsl
