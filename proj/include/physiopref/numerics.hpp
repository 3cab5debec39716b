#pragma once

#include <cstdint>
#include <functional>
#include <random>
#include <span>
#include <string>
#include <vector>

#include "physiopref/errors.hpp"

namespace physio {

// Deterministic seeded generator. The raw stream comes from std::mt19937_64
// (fully specified by the standard), and every derived draw (uniform,
// normal, categorical) is implemented here so results are reproducible
// byte-for-byte. Child streams are derived as
//   child(i) = Rng(splitmix64(seed + (i + 1) * 0x9E3779B97F4A7C15)).
class Rng {
public:
    explicit Rng(std::uint64_t seed) : seed_(seed), gen_(splitmix64(seed)) {}

    std::uint64_t seed() const { return seed_; }
    std::uint64_t u64() { return gen_(); }

    // Uniform in [0, 1) with 53 random bits.
    double uniform() { return static_cast<double>(u64() >> 11) * 0x1.0p-53; }

    // Standard normal via Box-Muller (two uniforms per draw, no cached spare).
    double normal();

    // Index drawn from an unnormalized nonnegative weight vector.
    std::size_t categorical(std::span<const double> weights);

    // Integer in [0, n).
    std::uint64_t below(std::uint64_t n);

    Rng child(std::uint64_t i) const {
        return Rng(splitmix64(seed_ + (i + 1) * 0x9E3779B97F4A7C15ULL));
    }

    // Fisher-Yates using this stream.
    template <typename T>
    void shuffle(std::vector<T>& v) {
        for (std::size_t i = v.size(); i > 1; --i) {
            std::size_t j = static_cast<std::size_t>(below(i));
            std::swap(v[i - 1], v[j]);
        }
    }

    static std::uint64_t splitmix64(std::uint64_t x);

private:
    std::uint64_t seed_;
    std::mt19937_64 gen_;
};

// Dense 64-bit tensor. All public operations keep values finite.
struct Tensor {
    std::vector<std::size_t> shape;
    std::vector<double> data;

    Tensor() = default;
    explicit Tensor(std::vector<std::size_t> s);

    std::size_t size() const { return data.size(); }
    double& operator[](std::size_t i) { return data[i]; }
    double operator[](std::size_t i) const { return data[i]; }
    double& at2(std::size_t r, std::size_t c) { return data[r * shape[1] + c]; }
    double at2(std::size_t r, std::size_t c) const { return data[r * shape[1] + c]; }

    void fill(double v);
    bool same_shape(const Tensor& other) const { return shape == other.shape; }
};

// Named parameter tensors with fixed insertion order. Order matters: every
// reduction over parameters runs in insertion order so results are
// bit-stable across runs.
class ParameterSet {
public:
    Tensor& add(const std::string& name, std::vector<std::size_t> shape);
    Tensor& get(const std::string& name);
    const Tensor& get(const std::string& name) const;
    bool has(const std::string& name) const;

    std::size_t tensor_count() const { return names_.size(); }
    const std::string& name(std::size_t i) const { return names_[i]; }
    Tensor& tensor(std::size_t i) { return tensors_[i]; }
    const Tensor& tensor(std::size_t i) const { return tensors_[i]; }

    std::size_t total_params() const;
    void fill(double v);

    // Same names and shapes, all-zero values.
    ParameterSet zeros_like() const;

    // this += scale * other (shapes must match).
    void axpy(double scale, const ParameterSet& other);

    double l2_norm() const;

    // Flat coordinate access in insertion order, for gradient checking.
    double get_flat(std::size_t i) const;
    void set_flat(std::size_t i, double v);

    bool same_layout(const ParameterSet& other) const;

private:
    std::vector<std::string> names_;
    std::vector<Tensor> tensors_;
};

struct AdamParams {
    double lr = 1e-3;
    double beta1 = 0.9;
    double beta2 = 0.999;
    double eps = 1e-8;
};

// First/second moment estimates mirroring a ParameterSet, plus step count.
struct AdamState {
    ParameterSet m;
    ParameterSet v;
    std::int64_t t = 0;
    AdamParams hp;

    static AdamState init(const ParameterSet& params, AdamParams hp = {});
};

// One Adam update with bias correction. t is incremented first.
void adam_step(ParameterSet& params, const ParameterSet& grads, AdamState& state);

// Numerically stable log-softmax of one row (max subtraction).
std::vector<double> log_softmax(std::span<const double> logits);

double sigmoid(double x);
// log(sigmoid(x)) without overflow for large |x|.
double log_sigmoid(double x);

// out = W x for a 2-D tensor W. Row-major, sequential accumulation.
void matvec(const Tensor& w, std::span<const double> x, std::span<double> out);

// Given dL/dy for y = W x, accumulates dW into dw and dL/dx into dx.
void matvec_backward(const Tensor& w, std::span<const double> x, std::span<const double> out_grad,
                     Tensor& dw, std::span<double> dx);

// Central-difference gradient check. Returns the max over checked
// coordinates of |analytic - numeric| / max(1, |numeric|). Checks every
// coordinate when the parameter count is at most max_coords, otherwise a
// seeded sample of max_coords coordinates.
double grad_check(const std::function<double(const ParameterSet&)>& f,
                  const std::function<ParameterSet(const ParameterSet&)>& analytic_grad,
                  const ParameterSet& theta, double h = 1e-5,
                  std::size_t max_coords = 512, std::uint64_t seed = 0);

}  // namespace physio
