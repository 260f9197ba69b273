#pragma once

#include <cstdint>
#include <sstream>
#include <string>
#include <vector>

#include "leosim/env.hpp"
#include "leosim/errors.hpp"
#include "leosim/linkbudget.hpp"
#include "leosim/metrics.hpp"
#include "leosim/textio.hpp"

namespace leosim {

struct TelemetryFrame {
  int sequence = 0;
  double sample_time_s = 0.0;
  std::uint64_t queue_len = 0;
};

struct UplinkCommand {
  int sequence = 0;
  double issue_time_s = 0.0;
  int apply_step = 0;
  int rate_index = 0;
  std::uint32_t channel = 0;
  double commanded_snr_db = 0.0;
};

struct LoopTiming {
  double downlink_ms = 0.0;
  double processing_ms = 0.0;
  double uplink_ms = 0.0;
  double total_ms = 0.0;
};

// Telemetry descends, the gateway thinks, the command ascends. Each radio
// leg is slant range over c; the decision loop only works because this
// total stays far below one decision interval.
inline LoopTiming loop_latency(const LinkParams& p, double elevation_deg, double processing_ms) {
  if (processing_ms < 0.0) throw ConfigError("loop_latency: negative processing delay");
  LoopTiming t;
  const double leg_ms = slant_range_km(p, elevation_deg) / kLightSpeedKmPerS * 1000.0;
  t.downlink_ms = leg_ms;
  t.uplink_ms = leg_ms;
  t.processing_ms = processing_ms;
  t.total_ms = 2.0 * leg_ms + processing_ms;
  return t;
}

struct ClosedLoopResult {
  EpisodeReport report;
  std::vector<StepTraceRow> trace;
  std::vector<FrameTraceRow> frame_trace;
  std::vector<QueueLogRow> queue_log;
  std::vector<TelemetryFrame> telemetry;
  std::vector<UplinkCommand> commands;
  std::string command_log_jsonl;
};

// Predict-decide-execute loop around the environment. Iteration t ingests
// the telemetry that closed interval t-1, estimates the current SNR,
// looks up the predicted one, and uplinks the rate command applied to
// interval t. Pure bookkeeping on top of env.step: a fixed policy driven
// here reproduces the direct stepping trace exactly.
inline ClosedLoopResult run_closed_loop(Environment& env, const Policy& policy,
                                        double processing_ms, const std::string& policy_name) {
  env.reset();
  ClosedLoopResult res;
  std::ostringstream jsonl;
  const double interval_s = env.config().decision_interval_s;
  while (!env.done()) {
    const int t = env.current_step();
    TelemetryFrame tel;
    tel.sequence = t;
    tel.sample_time_s = t * interval_s;
    tel.queue_len = env.queue_len();

    const double snr_est = env.estimated_snr(t);
    const double snr_pred = env.predicted_next_snr(t);
    const EnvState st = env.state();
    const int action = policy(st);
    if (action < 0 || action >= env.num_actions())
      throw SimError("closed loop: policy returned an invalid action");

    const LoopTiming timing =
        loop_latency(env.config().link, env.profile().samples[t].elevation_deg, processing_ms);
    if (!(timing.total_ms < interval_s * 1000.0))
      throw ConfigError("closed loop: control latency (" + fmt_double(timing.total_ms) +
                        " ms) exceeds the decision interval; raise decision_interval_s");

    UplinkCommand cmd;
    cmd.sequence = t;
    cmd.issue_time_s = tel.sample_time_s + (timing.downlink_ms + timing.processing_ms) / 1000.0;
    cmd.apply_step = t;
    cmd.rate_index = action;
    cmd.channel = env.rates()[static_cast<std::size_t>(action)].channel;
    cmd.commanded_snr_db = env.commanded_snr(t);

    env.step(action);

    res.telemetry.push_back(tel);
    res.commands.push_back(cmd);
    jsonl << "{\"step\":" << t << ",\"telemetry\":{\"sequence\":" << tel.sequence
          << ",\"sample_time_s\":" << fmt_double(tel.sample_time_s)
          << ",\"queue_len\":" << tel.queue_len << "},\"snr_estimate_db\":" << fmt_double(snr_est)
          << ",\"snr_predicted_db\":" << fmt_double(snr_pred)
          << ",\"state_snr_db\":" << fmt_double(st.snr_db)
          << ",\"command\":{\"sequence\":" << cmd.sequence
          << ",\"issue_time_s\":" << fmt_double(cmd.issue_time_s)
          << ",\"apply_step\":" << cmd.apply_step << ",\"rate_index\":" << cmd.rate_index
          << ",\"channel\":" << cmd.channel
          << ",\"commanded_snr_db\":" << fmt_double(cmd.commanded_snr_db)
          << "},\"timing\":{\"downlink_ms\":" << fmt_double(timing.downlink_ms)
          << ",\"processing_ms\":" << fmt_double(timing.processing_ms)
          << ",\"uplink_ms\":" << fmt_double(timing.uplink_ms)
          << ",\"total_ms\":" << fmt_double(timing.total_ms) << "}}\n";
  }
  res.trace = env.trace();
  res.frame_trace = env.frame_trace();
  res.queue_log = env.queue_log();
  res.command_log_jsonl = jsonl.str();
  const double cbr_denom = 6.0 * std::pow(4.0, env.config().encoder_stages);
  res.report = summarize(policy_name, res.trace, res.queue_log, env.sizing().q_max, cbr_denom);
  return res;
}

}  // namespace leosim
