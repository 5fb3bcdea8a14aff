// regret.hpp - maximum Monte Carlo regret of a policy on one scenario.
#pragma once

#include <span>

namespace matsg::curriculum {

struct RegretEstimate {
    double value = 0.0;
    std::size_t horizon_terms = 0;
    double r_max_used = 0.0;
};

// mean over visited states of (r_max - V(s_t)), clamped below at zero.
// Throws matsg::Error on an empty or non-finite input.
RegretEstimate mm_regret(std::span<const double> values, double r_max);

// Upper bound on the undiscounted return of one episode: the whole route as
// progress plus the largest cruise term at every decision.
double return_upper_bound(double route_length, std::size_t decisions);

}  // namespace matsg::curriculum
