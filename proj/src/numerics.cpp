#include "physiopref/numerics.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

namespace physio {

std::uint64_t Rng::splitmix64(std::uint64_t x) {
    x += 0x9E3779B97F4A7C15ULL;
    x = (x ^ (x >> 30)) * 0xBF58476D1CE4E5B9ULL;
    x = (x ^ (x >> 27)) * 0x94D049BB133111EBULL;
    return x ^ (x >> 31);
}

double Rng::normal() {
    // Box-Muller; u1 nudged away from 0 so log stays finite.
    double u1 = uniform();
    double u2 = uniform();
    if (u1 <= 0.0) u1 = 0x1.0p-53;
    return std::sqrt(-2.0 * std::log(u1)) * std::cos(2.0 * M_PI * u2);
}

std::size_t Rng::categorical(std::span<const double> weights) {
    double total = 0.0;
    for (double w : weights) {
        if (!(w >= 0.0) || !std::isfinite(w)) throw NumericError("categorical: bad weight");
        total += w;
    }
    if (total <= 0.0) throw NumericError("categorical: zero total weight");
    double x = uniform() * total;
    double acc = 0.0;
    for (std::size_t i = 0; i + 1 < weights.size(); ++i) {
        acc += weights[i];
        if (x < acc) return i;
    }
    return weights.size() - 1;
}

std::uint64_t Rng::below(std::uint64_t n) {
    if (n == 0) throw UsageError("Rng::below(0)");
    // Rejection sampling for an unbiased draw.
    std::uint64_t limit = UINT64_MAX - UINT64_MAX % n;
    std::uint64_t x;
    do {
        x = u64();
    } while (x >= limit);
    return x % n;
}

Tensor::Tensor(std::vector<std::size_t> s) : shape(std::move(s)) {
    std::size_t n = 1;
    for (auto d : shape) n *= d;
    data.assign(n, 0.0);
}

void Tensor::fill(double v) { std::fill(data.begin(), data.end(), v); }

Tensor& ParameterSet::add(const std::string& name, std::vector<std::size_t> shape) {
    if (has(name)) throw UsageError("ParameterSet: duplicate tensor name '" + name + "'");
    names_.push_back(name);
    tensors_.emplace_back(std::move(shape));
    return tensors_.back();
}

Tensor& ParameterSet::get(const std::string& name) {
    for (std::size_t i = 0; i < names_.size(); ++i) {
        if (names_[i] == name) return tensors_[i];
    }
    throw UsageError("ParameterSet: no tensor named '" + name + "'");
}

const Tensor& ParameterSet::get(const std::string& name) const {
    return const_cast<ParameterSet*>(this)->get(name);
}

bool ParameterSet::has(const std::string& name) const {
    return std::find(names_.begin(), names_.end(), name) != names_.end();
}

std::size_t ParameterSet::total_params() const {
    std::size_t n = 0;
    for (const auto& t : tensors_) n += t.size();
    return n;
}

void ParameterSet::fill(double v) {
    for (auto& t : tensors_) t.fill(v);
}

ParameterSet ParameterSet::zeros_like() const {
    ParameterSet out;
    for (std::size_t i = 0; i < names_.size(); ++i) out.add(names_[i], tensors_[i].shape);
    return out;
}

void ParameterSet::axpy(double scale, const ParameterSet& other) {
    if (!same_layout(other)) throw UsageError("ParameterSet::axpy: layout mismatch");
    for (std::size_t i = 0; i < tensors_.size(); ++i) {
        auto& dst = tensors_[i].data;
        const auto& src = other.tensors_[i].data;
        for (std::size_t j = 0; j < dst.size(); ++j) dst[j] += scale * src[j];
    }
}

double ParameterSet::l2_norm() const {
    double s = 0.0;
    for (const auto& t : tensors_) {
        for (double x : t.data) s += x * x;
    }
    return std::sqrt(s);
}

double ParameterSet::get_flat(std::size_t i) const {
    for (const auto& t : tensors_) {
        if (i < t.size()) return t.data[i];
        i -= t.size();
    }
    throw UsageError("ParameterSet::get_flat: index out of range");
}

void ParameterSet::set_flat(std::size_t i, double v) {
    for (auto& t : tensors_) {
        if (i < t.size()) {
            t.data[i] = v;
            return;
        }
        i -= t.size();
    }
    throw UsageError("ParameterSet::set_flat: index out of range");
}

bool ParameterSet::same_layout(const ParameterSet& other) const {
    if (names_ != other.names_) return false;
    for (std::size_t i = 0; i < tensors_.size(); ++i) {
        if (!tensors_[i].same_shape(other.tensors_[i])) return false;
    }
    return true;
}

AdamState AdamState::init(const ParameterSet& params, AdamParams hp) {
    AdamState s;
    s.m = params.zeros_like();
    s.v = params.zeros_like();
    s.t = 0;
    s.hp = hp;
    return s;
}

void adam_step(ParameterSet& params, const ParameterSet& grads, AdamState& state) {
    if (!params.same_layout(grads) || !params.same_layout(state.m)) {
        throw UsageError("adam_step: parameter/gradient shape mismatch");
    }
    state.t += 1;
    const double b1 = state.hp.beta1;
    const double b2 = state.hp.beta2;
    const double corr1 = 1.0 - std::pow(b1, static_cast<double>(state.t));
    const double corr2 = 1.0 - std::pow(b2, static_cast<double>(state.t));
    for (std::size_t i = 0; i < params.tensor_count(); ++i) {
        auto& p = params.tensor(i).data;
        const auto& g = grads.tensor(i).data;
        auto& m = state.m.tensor(i).data;
        auto& v = state.v.tensor(i).data;
        for (std::size_t j = 0; j < p.size(); ++j) {
            m[j] = b1 * m[j] + (1.0 - b1) * g[j];
            v[j] = b2 * v[j] + (1.0 - b2) * g[j] * g[j];
            const double mhat = m[j] / corr1;
            const double vhat = v[j] / corr2;
            p[j] -= state.hp.lr * mhat / (std::sqrt(vhat) + state.hp.eps);
        }
    }
}

std::vector<double> log_softmax(std::span<const double> logits) {
    if (logits.empty()) throw UsageError("log_softmax: empty row");
    double mx = logits[0];
    for (double x : logits) {
        if (!std::isfinite(x)) throw NumericError("log_softmax: non-finite input");
        mx = std::max(mx, x);
    }
    double sum = 0.0;
    for (double x : logits) sum += std::exp(x - mx);
    const double lse = mx + std::log(sum);
    std::vector<double> out(logits.size());
    for (std::size_t i = 0; i < logits.size(); ++i) out[i] = logits[i] - lse;
    return out;
}

double sigmoid(double x) {
    if (x >= 0.0) {
        const double z = std::exp(-x);
        return 1.0 / (1.0 + z);
    }
    const double z = std::exp(x);
    return z / (1.0 + z);
}

double log_sigmoid(double x) {
    // -softplus(-x)
    if (x >= 0.0) return -std::log1p(std::exp(-x));
    return x - std::log1p(std::exp(x));
}

void matvec(const Tensor& w, std::span<const double> x, std::span<double> out) {
    const std::size_t rows = w.shape[0];
    const std::size_t cols = w.shape[1];
    for (std::size_t r = 0; r < rows; ++r) {
        double acc = 0.0;
        const double* wr = &w.data[r * cols];
        for (std::size_t c = 0; c < cols; ++c) acc += wr[c] * x[c];
        out[r] = acc;
    }
}

void matvec_backward(const Tensor& w, std::span<const double> x, std::span<const double> out_grad,
                     Tensor& dw, std::span<double> dx) {
    const std::size_t rows = w.shape[0];
    const std::size_t cols = w.shape[1];
    for (std::size_t r = 0; r < rows; ++r) {
        const double g = out_grad[r];
        if (g == 0.0) continue;
        double* dwr = &dw.data[r * cols];
        const double* wr = &w.data[r * cols];
        for (std::size_t c = 0; c < cols; ++c) {
            dwr[c] += g * x[c];
            dx[c] += g * wr[c];
        }
    }
}

double grad_check(const std::function<double(const ParameterSet&)>& f,
                  const std::function<ParameterSet(const ParameterSet&)>& analytic_grad,
                  const ParameterSet& theta, double h, std::size_t max_coords,
                  std::uint64_t seed) {
    if (!(h > 0.0)) throw UsageError("grad_check: h must be positive");
    const double f0 = f(theta);
    if (!std::isfinite(f0)) throw NumericError("grad_check: non-finite function value");

    ParameterSet analytic = analytic_grad(theta);
    const std::size_t n = theta.total_params();

    std::vector<std::size_t> coords;
    if (n <= max_coords) {
        coords.resize(n);
        std::iota(coords.begin(), coords.end(), std::size_t{0});
    } else {
        Rng rng(seed);
        coords.reserve(max_coords);
        for (std::size_t i = 0; i < max_coords; ++i) {
            coords.push_back(static_cast<std::size_t>(rng.below(n)));
        }
    }

    ParameterSet work = theta;
    double max_rel = 0.0;
    for (std::size_t idx : coords) {
        const double orig = work.get_flat(idx);
        work.set_flat(idx, orig + h);
        const double fp = f(work);
        work.set_flat(idx, orig - h);
        const double fm = f(work);
        work.set_flat(idx, orig);
        if (!std::isfinite(fp) || !std::isfinite(fm)) {
            throw NumericError("grad_check: non-finite function value at perturbed point");
        }
        const double numeric = (fp - fm) / (2.0 * h);
        const double rel = std::abs(analytic.get_flat(idx) - numeric) /
                           std::max(1.0, std::abs(numeric));
        max_rel = std::max(max_rel, rel);
    }
    return max_rel;
}

}  // namespace physio
