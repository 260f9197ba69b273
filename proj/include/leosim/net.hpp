#pragma once

#include <cmath>
#include <cstddef>
#include <vector>

#include "leosim/errors.hpp"
#include "leosim/rng.hpp"

namespace leosim {

// Fully connected net, tanh between layers, linear output. Doubles
// throughout so the finite-difference gradient check is meaningful.
class Mlp {
 public:
  struct Layer {
    int in = 0, out = 0;
    std::vector<double> w;  // out x in, row-major
    std::vector<double> b;  // out
  };

  Mlp() = default;

  // dims = {input, hidden..., output}; Xavier-uniform init
  Mlp(const std::vector<int>& dims, Rng& rng) {
    if (dims.size() < 2) throw ConfigError("mlp: need at least input and output dims");
    for (std::size_t i = 0; i + 1 < dims.size(); ++i) {
      Layer l;
      l.in = dims[i];
      l.out = dims[i + 1];
      if (l.in <= 0 || l.out <= 0) throw ConfigError("mlp: non-positive layer dim");
      const double s = std::sqrt(6.0 / (l.in + l.out));
      l.w.resize(static_cast<std::size_t>(l.in) * l.out);
      l.b.assign(static_cast<std::size_t>(l.out), 0.0);
      for (auto& v : l.w) v = rng.uniform(-s, s);
      layers_.push_back(std::move(l));
    }
  }

  int input_dim() const { return layers_.front().in; }
  int output_dim() const { return layers_.back().out; }
  const std::vector<Layer>& layers() const { return layers_; }

  struct Cache {
    std::vector<std::vector<double>> act;  // act[0] = input, act[i] = output of layer i-1
  };

  std::vector<double> forward(const std::vector<double>& x) const {
    Cache c;
    return forward(x, c);
  }

  std::vector<double> forward(const std::vector<double>& x, Cache& cache) const {
    if (static_cast<int>(x.size()) != input_dim()) throw SimError("mlp: input size mismatch");
    cache.act.assign(layers_.size() + 1, {});
    cache.act[0] = x;
    for (std::size_t li = 0; li < layers_.size(); ++li) {
      const Layer& l = layers_[li];
      const auto& in = cache.act[li];
      auto& out = cache.act[li + 1];
      out.assign(static_cast<std::size_t>(l.out), 0.0);
      const bool last = li + 1 == layers_.size();
      for (int o = 0; o < l.out; ++o) {
        double acc = l.b[static_cast<std::size_t>(o)];
        const double* wrow = l.w.data() + static_cast<std::size_t>(o) * l.in;
        for (int i = 0; i < l.in; ++i) acc += wrow[i] * in[static_cast<std::size_t>(i)];
        out[static_cast<std::size_t>(o)] = last ? acc : std::tanh(acc);
      }
    }
    return cache.act.back();
  }

  // Backprop dloss/doutput through the cached activations, accumulating
  // parameter gradients into `grads` (same shape, += semantics).
  void backward(const Cache& cache, const std::vector<double>& dout, Mlp& grads) const {
    std::vector<double> delta = dout;
    for (std::size_t li = layers_.size(); li-- > 0;) {
      const Layer& l = layers_[li];
      Layer& g = grads.layers_[li];
      const auto& in = cache.act[li];
      std::vector<double> dprev(static_cast<std::size_t>(l.in), 0.0);
      for (int o = 0; o < l.out; ++o) {
        const double d = delta[static_cast<std::size_t>(o)];
        g.b[static_cast<std::size_t>(o)] += d;
        double* gw = g.w.data() + static_cast<std::size_t>(o) * l.in;
        const double* wrow = l.w.data() + static_cast<std::size_t>(o) * l.in;
        for (int i = 0; i < l.in; ++i) {
          gw[i] += d * in[static_cast<std::size_t>(i)];
          dprev[static_cast<std::size_t>(i)] += d * wrow[i];
        }
      }
      if (li > 0) {
        // through the tanh of the previous layer's output
        for (int i = 0; i < l.in; ++i) {
          const double a = cache.act[li][static_cast<std::size_t>(i)];
          dprev[static_cast<std::size_t>(i)] *= 1.0 - a * a;
        }
      }
      delta = std::move(dprev);
    }
  }

  Mlp zeros_like() const {
    Mlp z = *this;
    for (auto& l : z.layers_) {
      std::fill(l.w.begin(), l.w.end(), 0.0);
      std::fill(l.b.begin(), l.b.end(), 0.0);
    }
    return z;
  }

  std::size_t param_count() const {
    std::size_t n = 0;
    for (const auto& l : layers_) n += l.w.size() + l.b.size();
    return n;
  }

  std::vector<double> flatten() const {
    std::vector<double> v;
    v.reserve(param_count());
    for (const auto& l : layers_) {
      v.insert(v.end(), l.w.begin(), l.w.end());
      v.insert(v.end(), l.b.begin(), l.b.end());
    }
    return v;
  }

  void unflatten(const std::vector<double>& v) {
    if (v.size() != param_count()) throw SimError("mlp: unflatten size mismatch");
    std::size_t k = 0;
    for (auto& l : layers_) {
      for (auto& w : l.w) w = v[k++];
      for (auto& b : l.b) b = v[k++];
    }
  }

  void set_layers(std::vector<Layer> layers) { layers_ = std::move(layers); }

 private:
  std::vector<Layer> layers_;
};

// Adaptive per-parameter step sizes with bias correction.
class Adam {
 public:
  Adam(double beta1 = 0.9, double beta2 = 0.999, double eps = 1e-8)
      : beta1_(beta1), beta2_(beta2), eps_(eps) {}

  void step(std::vector<double>& params, const std::vector<double>& grads, double lr) {
    if (m_.empty()) {
      m_.assign(params.size(), 0.0);
      v_.assign(params.size(), 0.0);
    }
    if (params.size() != m_.size() || grads.size() != m_.size())
      throw SimError("adam: size mismatch");
    ++t_;
    const double c1 = 1.0 - std::pow(beta1_, t_);
    const double c2 = 1.0 - std::pow(beta2_, t_);
    for (std::size_t i = 0; i < params.size(); ++i) {
      m_[i] = beta1_ * m_[i] + (1.0 - beta1_) * grads[i];
      v_[i] = beta2_ * v_[i] + (1.0 - beta2_) * grads[i] * grads[i];
      params[i] -= lr * (m_[i] / c1) / (std::sqrt(v_[i] / c2) + eps_);
    }
  }

 private:
  double beta1_, beta2_, eps_;
  std::vector<double> m_, v_;
  long t_ = 0;
};

}  // namespace leosim
