// kernels.hpp - the layer products of the policy network.
//
// Weights are stored input-major: W[i * out + o] connects input i to output
// o, so one active binary input contributes a contiguous weight row. Every
// kernel has a serial reference and an OpenMP version. The parallel version
// partitions outputs (or weight rows) so that each element is written by one
// thread with the same summation order as the serial loop; both produce
// bitwise-identical results.
#pragma once

#include <cstdint>
#include <span>

namespace matsg::learn::kernels {

enum class Exec { serial, parallel };

// y = b + x W for dense x of size in.
void dense_forward(Exec exec, std::span<const double> w, std::span<const double> b, std::span<const double> x,
                   std::span<double> y);

// gx = W g, the gradient with respect to the layer input.
void dense_backward_input(Exec exec, std::span<const double> w, std::span<const double> g, std::span<double> gx);

// gW += x^T g and gb += g.
void dense_accumulate(Exec exec, std::span<double> gw, std::span<double> gb, std::span<const double> x,
                      std::span<const double> g);

// y = b + sum of the weight rows of the active binary inputs + dense tail,
// where the tail occupies rows binary_size.. of W.
void sparse_forward(Exec exec, std::span<const double> w, std::span<const double> b,
                    std::span<const std::uint32_t> active, std::span<const double> dense, std::size_t binary_size,
                    std::span<double> y);

// Gradient of sparse_forward: rows of active inputs and the dense tail
// receive g (scaled by the tail values); gb += g.
void sparse_accumulate(Exec exec, std::span<double> gw, std::span<double> gb, std::span<const std::uint32_t> active,
                       std::span<const double> dense, std::size_t binary_size, std::span<const double> g);

}  // namespace matsg::learn::kernels
