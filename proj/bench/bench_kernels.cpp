// bench_kernels - serial vs OpenMP timings of the network kernels at the policy's sizes.
#include <omp.h>

#include <chrono>
#include <cstdio>
#include <functional>
#include <vector>

#include "matsg/core/rng.hpp"
#include "matsg/learn/kernels.hpp"
#include "matsg/sim/birdview.hpp"

using namespace matsg;
using namespace matsg::learn;

namespace {

double time_ms(const std::function<void()>& f, int reps) {
    f();
    const auto t0 = std::chrono::steady_clock::now();
    for (int i = 0; i < reps; ++i) f();
    const auto t1 = std::chrono::steady_clock::now();
    return std::chrono::duration<double, std::milli>(t1 - t0).count() / reps;
}

}  // namespace

int main() {
    const std::size_t binary = sim::kChannels * sim::kGridSize * sim::kGridSize, dense = 3, hidden = 128;
    Rng rng(1);
    std::vector<double> w((binary + dense) * hidden), b(hidden), w2(hidden * hidden), x(hidden), y(hidden);
    for (auto& v : w) v = rng.normal(0.0, 0.05);
    for (auto& v : w2) v = rng.normal(0.0, 0.1);
    for (auto& v : x) v = rng.uniform(-1.0, 1.0);
    std::vector<std::uint32_t> active;
    for (std::uint32_t i = 0; i < binary; ++i)
        if (rng.bernoulli(0.08)) active.push_back(i);
    std::vector<double> dn{0.3, -0.2, 0.5}, g(hidden, 0.01), gw(w.size(), 0.0), gw2(w2.size(), 0.0), gx(hidden), gb(hidden, 0.0);

    std::printf("threads: %d, binary inputs: %zu (%zu active), hidden: %zu\n", omp_get_max_threads(), binary,
                active.size(), hidden);
    std::printf("%-22s %12s %12s\n", "kernel", "serial ms", "parallel ms");
    for (auto [name, fn] : std::vector<std::pair<const char*, std::function<void(kernels::Exec)>>>{
             {"sparse_forward", [&](kernels::Exec e) { kernels::sparse_forward(e, w, b, active, dn, binary, y); }},
             {"sparse_accumulate", [&](kernels::Exec e) { kernels::sparse_accumulate(e, gw, gb, active, dn, binary, g); }},
             {"dense_forward", [&](kernels::Exec e) { kernels::dense_forward(e, w2, b, x, y); }},
             {"dense_backward_input", [&](kernels::Exec e) { kernels::dense_backward_input(e, w2, g, gx); }},
             {"dense_accumulate", [&](kernels::Exec e) { kernels::dense_accumulate(e, gw2, gb, x, g); }}}) {
        const double s = time_ms([&] { fn(kernels::Exec::serial); }, 200);
        const double p = time_ms([&] { fn(kernels::Exec::parallel); }, 200);
        std::printf("%-22s %12.4f %12.4f\n", name, s, p);
    }
    return 0;
}
