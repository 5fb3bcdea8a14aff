#include "matsg/curriculum/regret.hpp"

#include <algorithm>
#include <cmath>

#include "matsg/core/error.hpp"

namespace matsg::curriculum {

RegretEstimate mm_regret(std::span<const double> values, double r_max) {
    if (values.empty()) throw Error("regret needs at least one value estimate");
    if (!std::isfinite(r_max)) throw Error("regret needs a finite r_max");
    double sum = 0.0;
    for (double v : values) {
        if (!std::isfinite(v)) throw Error("regret over a non-finite value estimate");
        sum += r_max - v;
    }
    return {std::max(0.0, sum / static_cast<double>(values.size())), values.size(), r_max};
}

double return_upper_bound(double route_length, std::size_t decisions) {
    return route_length + static_cast<double>(decisions);
}

}  // namespace matsg::curriculum
