#include "matsg/learn/network.hpp"

#include <algorithm>
#include <bit>
#include <cmath>
#include <cstring>
#include <fstream>
#include <iterator>

#include "matsg/core/error.hpp"
#include "matsg/core/rng.hpp"

namespace matsg::learn {

namespace {

constexpr std::uint32_t kCheckpointVersion = 1;
constexpr char kMagic[4] = {'M', 'G', 'P', 'P'};

enum TensorIndex : std::size_t { kW1, kB1, kW2, kB2, kWpi, kBpi, kWv, kBv };

class Writer {
public:
    void raw(const void* p, std::size_t n) {
        const auto* b = static_cast<const std::uint8_t*>(p);
        out_.insert(out_.end(), b, b + n);
    }
    void u32(std::uint32_t v) { le(v); }
    void u64(std::uint64_t v) { le(v); }
    void f64(double v) { le(std::bit_cast<std::uint64_t>(v)); }
    std::vector<std::uint8_t> take() { return std::move(out_); }

private:
    template <class T>
    void le(T v) {
        for (std::size_t i = 0; i < sizeof(T); ++i) out_.push_back(static_cast<std::uint8_t>(v >> (8 * i)));
    }
    std::vector<std::uint8_t> out_;
};

class Reader {
public:
    explicit Reader(std::span<const std::uint8_t> in) : in_(in) {}
    void need(std::size_t n) const {
        if (pos_ + n > in_.size()) throw Error("checkpoint truncated");
    }
    std::string bytes(std::size_t n) {
        need(n);
        std::string s(reinterpret_cast<const char*>(in_.data() + pos_), n);
        pos_ += n;
        return s;
    }
    std::uint32_t u32() { return static_cast<std::uint32_t>(le(4)); }
    std::uint64_t u64() { return le(8); }
    double f64() { return std::bit_cast<double>(le(8)); }
    bool done() const { return pos_ == in_.size(); }

private:
    std::uint64_t le(std::size_t n) {
        need(n);
        std::uint64_t v = 0;
        for (std::size_t i = 0; i < n; ++i) v |= static_cast<std::uint64_t>(in_[pos_ + i]) << (8 * i);
        pos_ += n;
        return v;
    }
    std::span<const std::uint8_t> in_;
    std::size_t pos_ = 0;
};

}  // namespace

std::vector<double> softmax(std::span<const double> logits) {
    std::vector<double> p(logits.size());
    if (logits.empty()) return p;
    const double m = *std::max_element(logits.begin(), logits.end());
    double z = 0.0;
    for (std::size_t i = 0; i < p.size(); ++i) z += p[i] = std::exp(logits[i] - m);
    for (double& x : p) x /= z;
    return p;
}

void PolicyNetwork::layout() {
    const std::size_t in = shape_.input_size(), h = shape_.hidden, a = shape_.actions;
    tensors_.clear();
    std::size_t offset = 0;
    auto add = [&](std::string name, std::size_t rows, std::size_t cols) {
        tensors_.push_back({std::move(name), rows, cols, offset});
        offset += rows * cols;
    };
    add("w1", in, h);
    add("b1", 1, h);
    add("w2", h, h);
    add("b2", 1, h);
    add("w_pi", h, a);
    add("b_pi", 1, a);
    add("w_v", h, 1);
    add("b_v", 1, 1);
    params_.assign(offset, 0.0);
}

PolicyNetwork::PolicyNetwork(NetworkShape shape, std::uint64_t seed) : shape_(shape) {
    if (shape_.input_size() == 0 || shape_.hidden == 0 || shape_.actions == 0)
        throw Error("network shape needs inputs, hidden units and actions");
    layout();
    Rng rng(mix_seed(seed, 0x1417));
    auto fill = [&](std::size_t k, double scale) {
        const Tensor& t = tensors_[k];
        const double stddev = scale / std::sqrt(static_cast<double>(t.rows));
        for (std::size_t i = 0; i < t.size(); ++i) params_[t.offset + i] = rng.normal(0.0, stddev);
    };
    fill(kW1, 1.0);
    fill(kW2, 1.0);
    fill(kWpi, 0.01);
    fill(kWv, 1.0);
}

std::span<const double> PolicyNetwork::tensor(std::size_t k) const {
    const Tensor& t = tensors_.at(k);
    return std::span<const double>(params_).subspan(t.offset, t.size());
}

ForwardPass PolicyNetwork::forward(const core::Observation& obs, kernels::Exec exec) const {
    if (obs.binary_size != shape_.binary_size || obs.dense.size() != shape_.dense_size)
        throw Error("observation shape " + std::to_string(obs.binary_size) + "+" + std::to_string(obs.dense.size()) +
                    " does not match network input " + std::to_string(shape_.binary_size) + "+" +
                    std::to_string(shape_.dense_size));
    if (!obs.active.empty() && obs.active.back() >= shape_.binary_size)
        throw Error("observation index beyond the binary input size");
    const std::size_t h = shape_.hidden;
    ForwardPass f;
    f.h1.resize(h);
    f.h2.resize(h);
    f.logits.resize(shape_.actions);
    kernels::sparse_forward(exec, tensor(kW1), tensor(kB1), obs.active, obs.dense, shape_.binary_size, f.h1);
    for (double& x : f.h1) x = std::tanh(x);
    kernels::dense_forward(exec, tensor(kW2), tensor(kB2), f.h1, f.h2);
    for (double& x : f.h2) x = std::tanh(x);
    kernels::dense_forward(exec, tensor(kWpi), tensor(kBpi), f.h2, f.logits);
    double v = 0.0;
    kernels::dense_forward(exec, tensor(kWv), tensor(kBv), f.h2, std::span<double>(&v, 1));
    f.value = v;
    f.probs = softmax(f.logits);
    return f;
}

void PolicyNetwork::backward(const core::Observation& obs, const ForwardPass& f, std::span<const double> dlogits,
                             double dvalue, std::span<double> grad, kernels::Exec exec) const {
    if (grad.size() != params_.size()) throw Error("gradient buffer has the wrong size");
    if (dlogits.size() != shape_.actions) throw Error("logit gradient has the wrong size");
    const std::size_t h = shape_.hidden;
    auto g = [&](std::size_t k) { return grad.subspan(tensors_[k].offset, tensors_[k].size()); };

    kernels::dense_accumulate(exec, g(kWpi), g(kBpi), f.h2, dlogits);
    kernels::dense_accumulate(exec, g(kWv), g(kBv), f.h2, std::span<const double>(&dvalue, 1));

    std::vector<double> dh2(h), tmp(h);
    kernels::dense_backward_input(exec, tensor(kWpi), dlogits, dh2);
    kernels::dense_backward_input(exec, tensor(kWv), std::span<const double>(&dvalue, 1), tmp);
    for (std::size_t j = 0; j < h; ++j) dh2[j] = (dh2[j] + tmp[j]) * (1.0 - f.h2[j] * f.h2[j]);

    kernels::dense_accumulate(exec, g(kW2), g(kB2), f.h1, dh2);
    std::vector<double> dh1(h);
    kernels::dense_backward_input(exec, tensor(kW2), dh2, dh1);
    for (std::size_t j = 0; j < h; ++j) dh1[j] *= 1.0 - f.h1[j] * f.h1[j];

    kernels::sparse_accumulate(exec, g(kW1), g(kB1), obs.active, obs.dense, shape_.binary_size, dh1);
}

std::vector<std::uint8_t> encode_checkpoint(const PolicyNetwork& net) {
    Writer w;
    w.raw(kMagic, 4);
    w.u32(kCheckpointVersion);
    const auto& s = net.shape();
    w.u64(s.binary_size);
    w.u64(s.dense_size);
    w.u64(s.hidden);
    w.u64(s.actions);
    w.u32(static_cast<std::uint32_t>(net.tensors().size()));
    for (const auto& t : net.tensors()) {
        w.u32(static_cast<std::uint32_t>(t.name.size()));
        w.raw(t.name.data(), t.name.size());
        w.u64(t.rows);
        w.u64(t.cols);
    }
    for (double p : net.params()) w.f64(p);
    return w.take();
}

PolicyNetwork decode_checkpoint(std::span<const std::uint8_t> bytes) {
    Reader r(bytes);
    if (r.bytes(4) != std::string(kMagic, 4)) throw Error("not a policy checkpoint (bad magic)");
    const std::uint32_t version = r.u32();
    if (version != kCheckpointVersion) throw Error("unsupported checkpoint version " + std::to_string(version));
    PolicyNetwork net;
    net.shape_.binary_size = r.u64();
    net.shape_.dense_size = r.u64();
    net.shape_.hidden = r.u64();
    net.shape_.actions = r.u64();
    net.layout();
    const std::uint32_t count = r.u32();
    if (count != net.tensors_.size()) throw Error("checkpoint tensor table does not match its shape");
    for (const auto& t : net.tensors_) {
        const std::string name = r.bytes(r.u32());
        const std::uint64_t rows = r.u64(), cols = r.u64();
        if (name != t.name || rows != t.rows || cols != t.cols)
            throw Error("checkpoint tensor '" + name + "' does not match its shape");
    }
    for (double& p : net.params_) {
        p = r.f64();
        if (!std::isfinite(p)) throw Error("checkpoint holds a non-finite weight");
    }
    if (!r.done()) throw Error("checkpoint has trailing bytes");
    return net;
}

void save_checkpoint(const PolicyNetwork& net, const std::string& path) {
    const auto bytes = encode_checkpoint(net);
    std::ofstream out(path, std::ios::binary);
    if (!out) throw Error("cannot write checkpoint '" + path + "'");
    out.write(reinterpret_cast<const char*>(bytes.data()), static_cast<std::streamsize>(bytes.size()));
    if (!out) throw Error("cannot write checkpoint '" + path + "'");
}

PolicyNetwork load_checkpoint(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw Error("cannot read checkpoint '" + path + "'");
    const std::vector<std::uint8_t> bytes((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
    return decode_checkpoint(bytes);
}

}  // namespace matsg::learn
