#pragma once

#include <algorithm>
#include <cstdint>
#include <sstream>
#include <string>
#include <vector>

#include "leosim/env.hpp"
#include "leosim/errors.hpp"
#include "leosim/net.hpp"
#include "leosim/rng.hpp"
#include "leosim/textio.hpp"

namespace leosim {

struct AgentConfig {
  std::vector<int> hidden = {64, 64};
  double learning_rate = 1e-3;
  double discount = 0.99;
  double epsilon_start = 1.0;
  double epsilon_end = 0.05;
  int epsilon_decay_steps = 5000;
  int replay_capacity = 50000;
  int batch_size = 64;
  int target_sync_period = 500;
  int train_episodes = 400;
  std::uint64_t seed = 1;
};

struct NormBounds {
  double snr_lo = 0.0;
  double snr_hi = 1.0;
  std::uint64_t q_max = 1;
  int num_actions = 1;
};

inline NormBounds norm_bounds_for(const Environment& env) {
  NormBounds b;
  b.snr_lo = env.profile().min_snr_db();
  b.snr_hi = env.profile().max_snr_db();
  b.q_max = env.sizing().q_max;
  b.num_actions = env.num_actions();
  return b;
}

// Feature layout: [snr, elevation, queue] scaled to [0,1], then a one-hot
// of the previous rate. Input dim = 3 + num_actions.
inline std::vector<double> normalize_state(const EnvState& s, const NormBounds& b) {
  auto unit = [](double v) { return std::clamp(v, 0.0, 1.0); };
  std::vector<double> f(3 + static_cast<std::size_t>(b.num_actions), 0.0);
  f[0] = unit((s.snr_db - b.snr_lo) / (b.snr_hi - b.snr_lo));
  f[1] = unit(s.elevation_deg / 90.0);
  f[2] = unit(static_cast<double>(s.queue_len) / static_cast<double>(b.q_max));
  if (s.prev_rate_index < 0 || s.prev_rate_index >= b.num_actions)
    throw SimError("normalize_state: prev rate index out of range");
  f[3 + static_cast<std::size_t>(s.prev_rate_index)] = 1.0;
  return f;
}

// Argmax with ties broken toward the lowest index, so greedy behavior is
// deterministic even on a freshly initialized net.
inline int argmax_action(const std::vector<double>& q) {
  int best = 0;
  for (int i = 1; i < static_cast<int>(q.size()); ++i)
    if (q[static_cast<std::size_t>(i)] > q[static_cast<std::size_t>(best)]) best = i;
  return best;
}

inline int select_action(const Mlp& net, const std::vector<double>& features, double epsilon,
                         Rng& rng) {
  if (epsilon > 0.0 && rng.uniform() < epsilon)
    return static_cast<int>(rng.below(static_cast<std::uint64_t>(net.output_dim())));
  return argmax_action(net.forward(features));
}

struct Transition {
  std::vector<double> s;
  int a = 0;
  double r = 0.0;
  std::vector<double> s2;
  bool done = false;
};

// Bounded FIFO; overwrites the oldest entry once full.
class ReplayBuffer {
 public:
  explicit ReplayBuffer(int capacity) : capacity_(capacity) {
    if (capacity <= 0) throw ConfigError("replay buffer: capacity must be positive");
  }

  void push(Transition t) {
    if (static_cast<int>(data_.size()) < capacity_) {
      data_.push_back(std::move(t));
    } else {
      data_[head_] = std::move(t);
      head_ = (head_ + 1) % static_cast<std::size_t>(capacity_);
    }
  }

  std::size_t size() const { return data_.size(); }
  int capacity() const { return capacity_; }
  const Transition& at(std::size_t i) const { return data_[i]; }

  // uniform with replacement
  std::vector<std::size_t> sample_indices(int batch, Rng& rng) const {
    std::vector<std::size_t> idx(static_cast<std::size_t>(batch));
    for (auto& i : idx) i = static_cast<std::size_t>(rng.below(data_.size()));
    return idx;
  }

 private:
  int capacity_;
  std::size_t head_ = 0;
  std::vector<Transition> data_;
};

// One optimizer step of the squared TD error
//   y = r + gamma * max_a' Q_target(s', a')   (y = r on terminal)
//   L = mean_batch (Q(s, a) - y)^2
// Returns the batch loss before the step.
inline double td_update(Mlp& online, const Mlp& target, Adam& opt,
                        const std::vector<const Transition*>& batch, double gamma, double lr) {
  if (batch.empty()) throw SimError("td_update: empty batch");
  Mlp grads = online.zeros_like();
  const double inv_n = 1.0 / static_cast<double>(batch.size());
  double loss = 0.0;
  Mlp::Cache cache;
  for (const Transition* tr : batch) {
    const auto q = online.forward(tr->s, cache);
    double y = tr->r;
    if (!tr->done) {
      const auto qn = target.forward(tr->s2);
      y += gamma * *std::max_element(qn.begin(), qn.end());
    }
    const double err = q[static_cast<std::size_t>(tr->a)] - y;
    loss += err * err * inv_n;
    std::vector<double> dout(q.size(), 0.0);
    dout[static_cast<std::size_t>(tr->a)] = 2.0 * err * inv_n;
    online.backward(cache, dout, grads);
  }
  auto params = online.flatten();
  opt.step(params, grads.flatten(), lr);
  online.unflatten(params);
  return loss;
}

struct CurvePoint {
  int episode = 0;
  double episode_return = 0.0;
  int qualified = 0;
  double epsilon = 0.0;
};

struct TrainResult {
  Mlp net;
  NormBounds bounds;
  std::vector<CurvePoint> curve;
};

inline double epsilon_at(const AgentConfig& a, long global_step) {
  if (global_step >= a.epsilon_decay_steps) return a.epsilon_end;
  const double frac = static_cast<double>(global_step) / a.epsilon_decay_steps;
  return a.epsilon_start + frac * (a.epsilon_end - a.epsilon_start);
}

// Standard replay + target-network training loop. All randomness comes
// from named substreams of cfg.seed, so runs are exactly repeatable.
inline TrainResult train(Environment& env, const AgentConfig& cfg) {
  const NormBounds bounds = norm_bounds_for(env);
  Rng init_rng(substream_seed(cfg.seed, "netinit"));
  Rng explore_rng(substream_seed(cfg.seed, "explore"));
  Rng replay_rng(substream_seed(cfg.seed, "replay"));

  std::vector<int> dims;
  dims.push_back(3 + bounds.num_actions);
  for (int h : cfg.hidden) dims.push_back(h);
  dims.push_back(bounds.num_actions);

  Mlp online(dims, init_rng);
  Mlp target = online;
  Adam opt;
  ReplayBuffer replay(cfg.replay_capacity);

  TrainResult res;
  long g = 0;  // global env-step counter
  for (int ep = 0; ep < cfg.train_episodes; ++ep) {
    env.reset();
    int ep_qualified = 0;
    const double ep_eps_start = epsilon_at(cfg, g);
    while (!env.done()) {
      const auto feats = normalize_state(env.state(), bounds);
      const int a = select_action(online, feats, epsilon_at(cfg, g), explore_rng);
      const StepOutcome out = env.step(a);
      ep_qualified += out.qualified;
      replay.push({feats, a, out.r_tilde, normalize_state(out.next_state, bounds), out.done});
      if (replay.size() >= static_cast<std::size_t>(cfg.batch_size)) {
        const auto idx = replay.sample_indices(cfg.batch_size, replay_rng);
        std::vector<const Transition*> batch;
        batch.reserve(idx.size());
        for (auto i : idx) batch.push_back(&replay.at(i));
        td_update(online, target, opt, batch, cfg.discount, cfg.learning_rate);
      }
      ++g;
      if (g % cfg.target_sync_period == 0) target = online;
    }
    res.curve.push_back({ep, env.total_return(), ep_qualified, ep_eps_start});
  }
  res.net = std::move(online);
  res.bounds = bounds;
  return res;
}

inline Policy greedy_policy(const Mlp& net, const NormBounds& bounds) {
  return [net, bounds](const EnvState& s) {
    return argmax_action(net.forward(normalize_state(s, bounds)));
  };
}

inline std::string learning_curve_csv(const std::vector<CurvePoint>& curve) {
  std::ostringstream out;
  out << "episode,return,qualified,epsilon\n";
  for (const auto& p : curve)
    out << p.episode << ',' << fmt_double(p.episode_return) << ',' << p.qualified << ','
        << fmt_double(p.epsilon) << '\n';
  return out.str();
}

}  // namespace leosim
