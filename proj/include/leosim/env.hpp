#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <functional>
#include <sstream>
#include <string>
#include <vector>

#include "leosim/errors.hpp"
#include "leosim/linkbudget.hpp"
#include "leosim/quality.hpp"
#include "leosim/rng.hpp"
#include "leosim/textio.hpp"
#include "leosim/txqueue.hpp"

namespace leosim {

struct RateLevel {
  std::uint32_t channel = 0;
  double ratio = 0.0;  // channel bandwidth ratio, C / (6 * 4^stages)
};

struct RewardParams {
  double psnr_threshold_db = 32.0;
  double msssim_threshold = 0.94;
  double lambda_over = 1.0;
  double lambda_under = 0.1;
  double lambda_drop = 1.0;
  double q_th_fraction = 0.8;   // overload knee, fraction of q_max
  double q_low_fraction = 0.05; // underutilization floor, fraction of q_max
};

struct JitterParams {
  bool enabled = false;
  double psnr_bound_db = 1.5;
  double msssim_bound = 0.01;
};

enum class SnrToEncoder { instantaneous, predicted };
enum class QualityAt { forward, encode };

struct EnvConfig {
  LinkParams link;
  int num_steps = 49;
  double decision_interval_s = 5.0;
  SweepShape sweep;

  int batch_size = 12;                  // images encoded per decision interval
  int qci = 3;
  std::uint64_t drain_budget = 1105920; // symbols per interval
  int image_height = 768;
  int image_width = 512;
  int encoder_stages = 4;
  std::vector<std::uint32_t> channels = {32, 64, 96, 128, 192};
  int initial_rate_index = 2;

  RewardParams reward;
  JitterParams jitter;
  QualityAt quality_at = QualityAt::forward;
  bool predictor_enabled = true;
  SnrToEncoder snr_to_encoder = SnrToEncoder::predicted;
  double estimation_noise_db = 0.0;     // sigma of the ground SNR estimate
  std::uint64_t seed = 1;
};

struct EnvState {
  double snr_db = 0.0;        // predicted or instantaneous per config
  double elevation_deg = 0.0;
  std::uint64_t queue_len = 0;
  int prev_rate_index = 0;
};

struct QueuePenalties {
  double over = 0.0;
  double under = 0.0;
};

struct StepTraceRow {
  int step = 0;
  double elevation_deg = 0.0;
  double snr_db = 0.0;       // actual SNR during the interval
  double snr_pred_db = 0.0;  // one-interval-ahead profile lookup
  std::uint32_t action_c = 0;
  int admitted = 0;
  int dropped = 0;
  int forwarded = 0;
  int qualified = 0;
  std::uint64_t q_post = 0;  // post-drain
  double r_tilde = 0.0;
};

struct FrameTraceRow {
  std::uint64_t frame_id = 0;
  std::uint32_t channel = 0;
  double snr_db = 0.0;  // SNR the quality was evaluated at
  double psnr_db = 0.0;
  double msssim = 0.0;
  bool qualified = false;
};

struct StepOutcome {
  EnvState next_state;
  double r_tilde = 0.0;
  bool done = false;
  int admitted = 0;
  int dropped = 0;
  int forwarded = 0;
  int qualified = 0;
  std::uint64_t q_post = 0;
  double p_over = 0.0;
  double p_under = 0.0;
  double p_drop = 0.0;
};

// Per-image reward: 1 iff both thresholds are met (inclusive).
inline double frame_reward(const QualityPoint& q, const RewardParams& rp) {
  return (q.psnr_db >= rp.psnr_threshold_db && q.msssim >= rp.msssim_threshold) ? 1.0 : 0.0;
}

// Occupancy penalties, sampled on the post-drain queue length.
inline QueuePenalties queue_penalties(std::uint64_t q_post, std::uint64_t q_max,
                                      const RewardParams& rp) {
  QueuePenalties p;
  const double q = static_cast<double>(q_post);
  const double qmax = static_cast<double>(q_max);
  const double q_th = rp.q_th_fraction * qmax;
  const double q_low = rp.q_low_fraction * qmax;
  if (q > q_th) p.over = rp.lambda_over * (q - q_th) / (qmax - q_th);
  if (q <= q_low) p.under = rp.lambda_under;
  return p;
}

// Decision-stepped satellite downlink: each step encodes a batch at the
// commanded rate, offers it to the transmit queue, drains one interval's
// worth of symbols, and scores the frames that completed transmission.
class Environment {
 public:
  Environment(EnvConfig cfg, QualityTable table)
      : cfg_(std::move(cfg)),
        table_(std::move(table)),
        profile_(build_overpass(cfg_.link, cfg_.num_steps, cfg_.decision_interval_s, cfg_.sweep)),
        queue_(1) {
    validate_config();
    for (auto c : cfg_.channels) {
      RateLevel r;
      r.channel = c;
      r.ratio = static_cast<double>(c) / (6.0 * std::pow(4.0, cfg_.encoder_stages));
      rates_.push_back(r);
      (void)table_.lookup(c, profile_.min_snr_db());  // every action must be scoreable
    }
    const std::uint64_t max_sym = symbols_per_image(cfg_.channels.back(), cfg_.image_height,
                                                    cfg_.image_width, cfg_.encoder_stages);
    sizing_ = compute_sizing(cfg_.qci, cfg_.batch_size, max_sym, cfg_.drain_budget);
    // ground SNR estimates are drawn once so that re-reading state() is pure
    Rng est(substream_seed(cfg_.seed, "estnoise"));
    est_snr_.resize(profile_.num_steps());
    for (int t = 0; t < profile_.num_steps(); ++t)
      est_snr_[t] = profile_.samples[t].snr_db +
                    (cfg_.estimation_noise_db > 0.0 ? cfg_.estimation_noise_db * est.normal() : 0.0);
    reset();
  }

  void reset() {
    queue_ = TransmitQueue(sizing_.q_max);
    t_ = 0;
    prev_rate_ = cfg_.initial_rate_index;
    next_frame_id_ = 0;
    total_return_ = 0.0;
    jitter_rng_ = Rng(substream_seed(cfg_.seed, "jitter"));
    trace_.clear();
    frames_.clear();
    queue_log_.clear();
  }

  int num_actions() const { return static_cast<int>(rates_.size()); }
  const std::vector<RateLevel>& rates() const { return rates_; }
  const OverpassProfile& profile() const { return profile_; }
  const QueueSizing& sizing() const { return sizing_; }
  const EnvConfig& config() const { return cfg_; }
  int current_step() const { return t_; }
  bool done() const { return t_ >= profile_.num_steps(); }
  double total_return() const { return total_return_; }

  double true_snr(int t) const { return profile_.samples.at(t).snr_db; }
  double estimated_snr(int t) const { return est_snr_.at(t); }
  double predicted_next_snr(int t) const { return predict_snr(profile_, t); }

  // SNR riding the uplink command to the encoder.
  double commanded_snr(int t) const {
    if (cfg_.predictor_enabled && cfg_.snr_to_encoder == SnrToEncoder::predicted)
      return predicted_next_snr(t);
    return estimated_snr(t);
  }

  // Decision state for the step about to execute. With the predictor the
  // SNR component is the one-interval-ahead lookup; without it, the
  // latest ground estimate.
  EnvState state() const {
    const int t = std::min(t_, profile_.num_steps() - 1);
    EnvState s;
    s.snr_db = cfg_.predictor_enabled ? predicted_next_snr(t) : estimated_snr(t);
    s.elevation_deg = profile_.samples[t].elevation_deg;
    s.queue_len = queue_.q_len();
    s.prev_rate_index = prev_rate_;
    return s;
  }

  StepOutcome step(int action_index) {
    if (done()) throw SimError("env.step: episode already finished");
    if (action_index < 0 || action_index >= num_actions())
      throw SimError("env.step: action index out of range");
    const int t = t_;
    const RateLevel& rate = rates_[action_index];
    const double cmd_snr = commanded_snr(t);
    const std::uint64_t n_sym = symbols_per_image(rate.channel, cfg_.image_height,
                                                  cfg_.image_width, cfg_.encoder_stages);

    std::vector<FrameRecord> batch(static_cast<std::size_t>(cfg_.batch_size));
    for (auto& f : batch) {
      f.frame_id = next_frame_id_++;
      f.channel = rate.channel;
      f.symbols_total = n_sym;
      f.symbols_left = n_sym;
      f.encode_step = t;
      f.snr_at_encode_db = cmd_snr;
      if (cfg_.jitter.enabled) {
        f.psnr_jitter_db = jitter_rng_.uniform(-cfg_.jitter.psnr_bound_db, cfg_.jitter.psnr_bound_db);
        f.msssim_jitter = jitter_rng_.uniform(-cfg_.jitter.msssim_bound, cfg_.jitter.msssim_bound);
      }
    }

    QueueLogRow qrow;
    qrow.step = t;
    qrow.q_len_pre = queue_.q_len();
    const EnqueueResult enq = queue_.enqueue_batch(batch);
    qrow.q_len_post_enqueue = queue_.q_len();
    const DrainResult dr = queue_.drain(sizing_.drain_budget);
    qrow.q_len_post_drain = queue_.q_len();
    qrow.admitted = enq.admitted;
    qrow.dropped = enq.dropped;
    qrow.forwarded = static_cast<int>(dr.forwarded.size());
    queue_log_.push_back(qrow);

    int qualified = 0;
    for (const auto& f : dr.forwarded) {
      const double eval_snr =
          cfg_.quality_at == QualityAt::forward ? true_snr(t) : f.snr_at_encode_db;
      QualityPoint q = table_.lookup(f.channel, eval_snr);
      q.psnr_db += f.psnr_jitter_db;
      q.msssim = std::min(1.0, q.msssim + f.msssim_jitter);
      const bool ok = frame_reward(q, cfg_.reward) > 0.0;
      qualified += ok ? 1 : 0;
      frames_.push_back({f.frame_id, f.channel, eval_snr, q.psnr_db, q.msssim, ok});
    }

    const QueuePenalties pen = queue_penalties(queue_.q_len(), sizing_.q_max, cfg_.reward);
    const double p_drop = cfg_.reward.lambda_drop * enq.dropped;

    StepOutcome out;
    out.admitted = enq.admitted;
    out.dropped = enq.dropped;
    out.forwarded = static_cast<int>(dr.forwarded.size());
    out.qualified = qualified;
    out.q_post = queue_.q_len();
    out.p_over = pen.over;
    out.p_under = pen.under;
    out.p_drop = p_drop;
    out.r_tilde = qualified - pen.over - pen.under - p_drop;
    total_return_ += out.r_tilde;

    StepTraceRow row;
    row.step = t;
    row.elevation_deg = profile_.samples[t].elevation_deg;
    row.snr_db = true_snr(t);
    row.snr_pred_db = predicted_next_snr(t);
    row.action_c = rate.channel;
    row.admitted = out.admitted;
    row.dropped = out.dropped;
    row.forwarded = out.forwarded;
    row.qualified = out.qualified;
    row.q_post = out.q_post;
    row.r_tilde = out.r_tilde;
    trace_.push_back(row);

    prev_rate_ = action_index;
    ++t_;
    out.done = done();
    out.next_state = state();
    return out;
  }

  const std::vector<StepTraceRow>& trace() const { return trace_; }
  const std::vector<FrameTraceRow>& frame_trace() const { return frames_; }
  const std::vector<QueueLogRow>& queue_log() const { return queue_log_; }
  std::uint64_t residual_frames() const { return queue_.frames_queued(); }
  std::uint64_t queue_len() const { return queue_.q_len(); }

  // Mean-arrival stability of a constant-rate policy against the drain.
  bool stable_under(int action_index) const {
    const std::uint64_t n_sym = symbols_per_image(rates_.at(action_index).channel,
                                                  cfg_.image_height, cfg_.image_width,
                                                  cfg_.encoder_stages);
    return stability_check(static_cast<double>(cfg_.batch_size) * static_cast<double>(n_sym),
                           sizing_.drain_budget);
  }

 private:
  void validate_config() {
    if (cfg_.batch_size <= 0) throw ConfigError("env: batch_size must be positive");
    if (cfg_.channels.empty()) throw ConfigError("env: empty channel set");
    for (std::size_t i = 0; i < cfg_.channels.size(); ++i) {
      if (cfg_.channels[i] == 0) throw ConfigError("env: channel count must be positive");
      if (i > 0 && cfg_.channels[i] <= cfg_.channels[i - 1])
        throw ConfigError("env: channels must be strictly ascending");
    }
    if (cfg_.initial_rate_index < 0 ||
        cfg_.initial_rate_index >= static_cast<int>(cfg_.channels.size()))
      throw ConfigError("env: initial_rate_index out of range");
    const auto& rp = cfg_.reward;
    if (!(rp.q_low_fraction >= 0.0 && rp.q_low_fraction < rp.q_th_fraction &&
          rp.q_th_fraction < 1.0))
      throw ConfigError("env: need 0 <= q_low_fraction < q_th_fraction < 1");
    if (rp.lambda_over < 0 || rp.lambda_under < 0 || rp.lambda_drop < 0)
      throw ConfigError("env: penalty weights must be non-negative");
    if (!(rp.msssim_threshold > 0.0 && rp.msssim_threshold <= 1.0))
      throw ConfigError("env: msssim threshold out of (0, 1]");
    if (cfg_.estimation_noise_db < 0.0) throw ConfigError("env: negative estimation noise");
    if (!cfg_.predictor_enabled && cfg_.snr_to_encoder == SnrToEncoder::predicted)
      throw ConfigError("env: snr_to_encoder=predicted requires the predictor enabled");
  }

  EnvConfig cfg_;
  QualityTable table_;
  OverpassProfile profile_;
  TransmitQueue queue_;
  QueueSizing sizing_;
  std::vector<RateLevel> rates_;
  std::vector<double> est_snr_;
  Rng jitter_rng_{1};
  int t_ = 0;
  int prev_rate_ = 0;
  std::uint64_t next_frame_id_ = 0;
  double total_return_ = 0.0;
  std::vector<StepTraceRow> trace_;
  std::vector<FrameTraceRow> frames_;
  std::vector<QueueLogRow> queue_log_;
};

using Policy = std::function<int(const EnvState&)>;

inline Policy fixed_policy(int action_index) {
  return [action_index](const EnvState&) { return action_index; };
}

// Runs an episode to completion and returns the accumulated r_tilde.
inline double episode_return(Environment& env, const Policy& policy) {
  env.reset();
  while (!env.done()) env.step(policy(env.state()));
  return env.total_return();
}

inline std::string step_trace_csv(const std::vector<StepTraceRow>& rows) {
  std::ostringstream out;
  out << "step,elevation_deg,snr_db,snr_pred_db,action_c,admitted,dropped,forwarded,qualified,"
         "q_post,r_tilde\n";
  for (const auto& r : rows) {
    out << r.step << ',' << fmt_double(r.elevation_deg) << ',' << fmt_double(r.snr_db) << ','
        << fmt_double(r.snr_pred_db) << ',' << r.action_c << ',' << r.admitted << ',' << r.dropped
        << ',' << r.forwarded << ',' << r.qualified << ',' << r.q_post << ','
        << fmt_double(r.r_tilde) << '\n';
  }
  return out.str();
}

inline std::string frame_trace_csv(const std::vector<FrameTraceRow>& rows) {
  std::ostringstream out;
  out << "frame_id,channel,snr_db,psnr_db,msssim,qualified\n";
  for (const auto& r : rows) {
    out << r.frame_id << ',' << r.channel << ',' << fmt_double(r.snr_db) << ','
        << fmt_double(r.psnr_db) << ',' << fmt_double(r.msssim) << ',' << (r.qualified ? 1 : 0)
        << '\n';
  }
  return out.str();
}

}  // namespace leosim
