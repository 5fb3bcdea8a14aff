// network.hpp - two tanh hidden layers with a categorical policy head and a
// value head, trained with hand-written gradients.
#pragma once

#include <span>
#include <string>
#include <vector>

#include "matsg/core/posg.hpp"
#include "matsg/learn/kernels.hpp"

namespace matsg::learn {

struct NetworkShape {
    std::size_t binary_size = 0;  // sparse 0/1 inputs
    std::size_t dense_size = 0;   // real-valued tail
    std::size_t hidden = 128;
    std::size_t actions = 0;

    std::size_t input_size() const { return binary_size + dense_size; }
    bool operator==(const NetworkShape&) const = default;
};

// A named block of the flat parameter vector, stored row-major as rows x cols.
struct Tensor {
    std::string name;
    std::size_t rows = 0;
    std::size_t cols = 0;
    std::size_t offset = 0;
    std::size_t size() const { return rows * cols; }
};

struct ForwardPass {
    std::vector<double> h1, h2;  // tanh activations
    std::vector<double> logits, probs;
    double value = 0.0;
};

class PolicyNetwork {
public:
    PolicyNetwork() = default;
    // Scaled Gaussian initialization: 1/sqrt(fan_in) for hidden layers and
    // the value head, 0.01/sqrt(fan_in) for the policy head; zero biases.
    PolicyNetwork(NetworkShape shape, std::uint64_t seed);

    const NetworkShape& shape() const { return shape_; }
    const std::vector<Tensor>& tensors() const { return tensors_; }
    std::vector<double>& params() { return params_; }
    const std::vector<double>& params() const { return params_; }
    std::span<const double> tensor(std::size_t k) const;

    // Throws matsg::Error when the observation does not match the shape.
    ForwardPass forward(const core::Observation& obs, kernels::Exec exec = kernels::Exec::parallel) const;

    // Adds to `grad` (laid out like params) the gradient of a loss whose
    // derivatives with respect to the logits and the value are given.
    void backward(const core::Observation& obs, const ForwardPass& f, std::span<const double> dlogits, double dvalue,
                  std::span<double> grad, kernels::Exec exec = kernels::Exec::parallel) const;

    bool operator==(const PolicyNetwork& o) const { return shape_ == o.shape_ && params_ == o.params_; }

private:
    void layout();

    NetworkShape shape_;
    std::vector<Tensor> tensors_;
    std::vector<double> params_;

    friend PolicyNetwork load_checkpoint(const std::string& path);
    friend PolicyNetwork decode_checkpoint(std::span<const std::uint8_t> bytes);
};

// Binary checkpoint: "MGPP", u32 version, shape, tensor table, then the
// little-endian f64 parameters.
std::vector<std::uint8_t> encode_checkpoint(const PolicyNetwork& net);
PolicyNetwork decode_checkpoint(std::span<const std::uint8_t> bytes);
void save_checkpoint(const PolicyNetwork& net, const std::string& path);
PolicyNetwork load_checkpoint(const std::string& path);

// Numerically stable softmax.
std::vector<double> softmax(std::span<const double> logits);

}  // namespace matsg::learn
