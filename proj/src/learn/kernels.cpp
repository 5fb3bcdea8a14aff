#include "matsg/learn/kernels.hpp"

#include <algorithm>

#include <omp.h>

namespace matsg::learn::kernels {

namespace {

// Below this many multiply-adds a parallel region costs more than it saves.
constexpr std::size_t kParallelWork = 1 << 14;

bool go_parallel(Exec exec, std::size_t work) { return exec == Exec::parallel && work >= kParallelWork; }

// Runs fn(o0, o1) over contiguous output blocks, one block per thread.
template <class Fn>
void for_output_blocks(bool parallel, std::size_t out, Fn&& fn) {
    if (!parallel) {
        fn(std::size_t{0}, out);
        return;
    }
#pragma omp parallel
    {
        const auto t = static_cast<std::size_t>(omp_get_thread_num());
        const auto nt = static_cast<std::size_t>(omp_get_num_threads());
        const std::size_t o0 = out * t / nt, o1 = out * (t + 1) / nt;
        if (o0 < o1) fn(o0, o1);
    }
}

}  // namespace

void dense_forward(Exec exec, std::span<const double> w, std::span<const double> b, std::span<const double> x,
                   std::span<double> y) {
    const std::size_t in = x.size(), out = y.size();
    for_output_blocks(go_parallel(exec, in * out), out, [&](std::size_t o0, std::size_t o1) {
        for (std::size_t o = o0; o < o1; ++o) y[o] = b[o];
        for (std::size_t i = 0; i < in; ++i) {
            const double xi = x[i];
            const double* row = w.data() + i * out;
            for (std::size_t o = o0; o < o1; ++o) y[o] += xi * row[o];
        }
    });
}

void dense_backward_input(Exec exec, std::span<const double> w, std::span<const double> g, std::span<double> gx) {
    const std::size_t in = gx.size(), out = g.size();
    const auto n = static_cast<std::ptrdiff_t>(in);
#pragma omp parallel for schedule(static) if (go_parallel(exec, in * out))
    for (std::ptrdiff_t i = 0; i < n; ++i) {
        const double* row = w.data() + i * out;
        double acc = 0.0;
        for (std::size_t o = 0; o < out; ++o) acc += row[o] * g[o];
        gx[i] = acc;
    }
}

void dense_accumulate(Exec exec, std::span<double> gw, std::span<double> gb, std::span<const double> x,
                      std::span<const double> g) {
    const std::size_t in = x.size(), out = g.size();
    const auto n = static_cast<std::ptrdiff_t>(in);
#pragma omp parallel for schedule(static) if (go_parallel(exec, in * out))
    for (std::ptrdiff_t i = 0; i < n; ++i) {
        double* row = gw.data() + i * out;
        const double xi = x[i];
        for (std::size_t o = 0; o < out; ++o) row[o] += xi * g[o];
    }
    for (std::size_t o = 0; o < out; ++o) gb[o] += g[o];
}

void sparse_forward(Exec exec, std::span<const double> w, std::span<const double> b,
                    std::span<const std::uint32_t> active, std::span<const double> dense, std::size_t binary_size,
                    std::span<double> y) {
    const std::size_t out = y.size();
    // Each block streams every active row but touches only its own outputs.
    for_output_blocks(go_parallel(exec, (active.size() + dense.size()) * out), out,
                      [&](std::size_t o0, std::size_t o1) {
                          for (std::size_t o = o0; o < o1; ++o) y[o] = b[o];
                          for (const std::uint32_t i : active) {
                              const double* row = w.data() + static_cast<std::size_t>(i) * out;
                              for (std::size_t o = o0; o < o1; ++o) y[o] += row[o];
                          }
                          for (std::size_t k = 0; k < dense.size(); ++k) {
                              const double* row = w.data() + (binary_size + k) * out;
                              for (std::size_t o = o0; o < o1; ++o) y[o] += dense[k] * row[o];
                          }
                      });
}

void sparse_accumulate(Exec exec, std::span<double> gw, std::span<double> gb, std::span<const std::uint32_t> active,
                       std::span<const double> dense, std::size_t binary_size, std::span<const double> g) {
    const std::size_t out = g.size();
    const auto rows = static_cast<std::ptrdiff_t>(active.size());
    // Active indices are distinct, so rows never alias across threads.
#pragma omp parallel for schedule(static) if (go_parallel(exec, active.size() * out))
    for (std::ptrdiff_t r = 0; r < rows; ++r) {
        double* row = gw.data() + static_cast<std::size_t>(active[r]) * out;
        for (std::size_t o = 0; o < out; ++o) row[o] += g[o];
    }
    for (std::size_t k = 0; k < dense.size(); ++k) {
        double* row = gw.data() + (binary_size + k) * out;
        for (std::size_t o = 0; o < out; ++o) row[o] += dense[k] * g[o];
    }
    for (std::size_t o = 0; o < out; ++o) gb[o] += g[o];
}

}  // namespace matsg::learn::kernels
