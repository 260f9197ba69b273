#include <gtest/gtest.h>

#include <cmath>

#include "leosim/gateway.hpp"
#include "leosim/quality.hpp"

using namespace leosim;

namespace {
// 50-digit reference evaluation of 2 * slant_range / c in milliseconds.
constexpr double kZenithRoundTripMs = 6.0041537135667369;
constexpr double kHorizonRoundTripMs = 23.375966168879622;
}  // namespace

TEST(LoopLatency, GeometrySpotValues) {
  LinkParams p;
  const auto zen = loop_latency(p, 90.0, 0.0);
  EXPECT_NEAR(zen.total_ms, kZenithRoundTripMs, 1e-6);
  EXPECT_DOUBLE_EQ(zen.downlink_ms, zen.uplink_ms);
  const auto hor = loop_latency(p, 0.0, 0.0);
  EXPECT_NEAR(hor.total_ms, kHorizonRoundTripMs, 1e-6);
}

TEST(LoopLatency, ProcessingIsAdditive) {
  LinkParams p;
  const auto base = loop_latency(p, 45.0, 0.0);
  const auto plus = loop_latency(p, 45.0, 5.0);
  EXPECT_DOUBLE_EQ(plus.total_ms - base.total_ms, 5.0);
  EXPECT_DOUBLE_EQ(plus.processing_ms, 5.0);
  EXPECT_THROW(loop_latency(p, 45.0, -1.0), ConfigError);
}

TEST(LoopLatency, AlwaysBelowDefaultDecisionInterval) {
  LinkParams p;
  for (double el = 0.0; el <= 90.0; el += 1.0) {
    EXPECT_LT(loop_latency(p, el, 1.0).total_ms, 5000.0);
  }
}

TEST(ClosedLoop, MatchesDirectStepping) {
  EnvConfig cfg;
  Environment env(cfg, default_table());
  const auto res = run_closed_loop(env, fixed_policy(2), 1.0, "mid_rate");

  Environment direct_env(cfg, default_table());
  episode_return(direct_env, fixed_policy(2));
  EXPECT_EQ(step_trace_csv(res.trace), step_trace_csv(direct_env.trace()));
  EXPECT_EQ(queue_log_csv(res.queue_log), queue_log_csv(direct_env.queue_log()));
  EXPECT_EQ(frame_trace_csv(res.frame_trace), frame_trace_csv(direct_env.frame_trace()));
  EXPECT_EQ(res.report.qualified, 492);
  EXPECT_EQ(res.report.forwarded, 588);
  EXPECT_EQ(res.report.dropped, 0);
}

TEST(ClosedLoop, TelemetryAndCommandsAreSequential) {
  Environment env(EnvConfig{}, default_table());
  const auto res = run_closed_loop(env, fixed_policy(4), 1.0, "max_rate");
  ASSERT_EQ(res.telemetry.size(), 49u);
  ASSERT_EQ(res.commands.size(), 49u);
  for (int t = 0; t < 49; ++t) {
    const auto& tel = res.telemetry[static_cast<std::size_t>(t)];
    const auto& cmd = res.commands[static_cast<std::size_t>(t)];
    EXPECT_EQ(tel.sequence, t);
    EXPECT_EQ(cmd.sequence, t);
    EXPECT_EQ(cmd.apply_step, t);
    EXPECT_DOUBLE_EQ(tel.sample_time_s, t * 5.0);
    // command goes up after telemetry lands and the gateway thinks
    EXPECT_GT(cmd.issue_time_s, tel.sample_time_s);
    EXPECT_LT(cmd.issue_time_s, tel.sample_time_s + 5.0);
    EXPECT_EQ(cmd.channel, 192u);
  }
}

TEST(ClosedLoop, TelemetryReportsPreEnqueueQueue) {
  Environment env(EnvConfig{}, default_table());
  const auto res = run_closed_loop(env, fixed_policy(4), 1.0, "max_rate");
  for (std::size_t t = 0; t < res.telemetry.size(); ++t)
    EXPECT_EQ(res.telemetry[t].queue_len, res.queue_log[t].q_len_pre);
}

TEST(ClosedLoop, CommandCarriesPredictedSnrWhenConfigured) {
  EnvConfig cfg;  // snr_to_encoder = predicted
  Environment env(cfg, default_table());
  const auto res = run_closed_loop(env, fixed_policy(2), 1.0, "mid_rate");
  for (std::size_t t = 0; t < res.commands.size(); ++t) {
    const int next = std::min<int>(static_cast<int>(t) + 1, 48);
    EXPECT_DOUBLE_EQ(res.commands[t].commanded_snr_db,
                     env.profile().samples[next].snr_db);
  }

  EnvConfig inst = cfg;
  inst.snr_to_encoder = SnrToEncoder::instantaneous;
  Environment env2(inst, default_table());
  const auto res2 = run_closed_loop(env2, fixed_policy(2), 1.0, "mid_rate");
  for (std::size_t t = 0; t < res2.commands.size(); ++t)
    EXPECT_DOUBLE_EQ(res2.commands[t].commanded_snr_db,
                     env2.profile().samples[t].snr_db);
}

TEST(ClosedLoop, LatencyMustFitTheInterval) {
  EnvConfig cfg;
  cfg.num_steps = 3;
  cfg.decision_interval_s = 0.01;  // 10 ms < 23.4 ms round trip at the horizon
  Environment env(cfg, default_table());
  EXPECT_THROW(run_closed_loop(env, fixed_policy(0), 1.0, "min_rate"), ConfigError);
}

TEST(ClosedLoop, InvalidPolicyActionRejected) {
  Environment env(EnvConfig{}, default_table());
  const Policy bad = [](const EnvState&) { return 17; };
  EXPECT_THROW(run_closed_loop(env, bad, 1.0, "bad"), SimError);
}

// Hand-checked three-interval episode at the maximum rate: forwarded
// counts 7, 8, 7 with no drops and 14 frames still aboard at the end.
TEST(ClosedLoop, ThreeStepManualOracle) {
  EnvConfig cfg;
  cfg.num_steps = 3;
  Environment env(cfg, default_table());
  const auto res = run_closed_loop(env, fixed_policy(4), 1.0, "max_rate");
  ASSERT_EQ(res.trace.size(), 3u);
  EXPECT_EQ(res.trace[0].forwarded, 7);
  EXPECT_EQ(res.trace[1].forwarded, 8);
  EXPECT_EQ(res.trace[2].forwarded, 7);
  EXPECT_EQ(res.report.forwarded, 22);
  EXPECT_EQ(res.report.qualified, 22);  // C=192 qualifies across the window
  EXPECT_EQ(res.report.dropped, 0);
  EXPECT_EQ(res.report.offered, 36);
  EXPECT_EQ(res.report.residual_queued, 14);
  EXPECT_EQ(res.queue_log[2].q_len_post_drain, 1990656u);
  EXPECT_DOUBLE_EQ(res.report.mean_channel, 192.0);
  EXPECT_DOUBLE_EQ(res.report.mean_cbr, 0.125);
}

TEST(ClosedLoop, JsonlHasOneRecordPerStep) {
  Environment env(EnvConfig{}, default_table());
  const auto res = run_closed_loop(env, fixed_policy(2), 1.0, "mid_rate");
  int lines = 0;
  for (char c : res.command_log_jsonl)
    if (c == '\n') ++lines;
  EXPECT_EQ(lines, 49);
  EXPECT_NE(res.command_log_jsonl.find("\"telemetry\""), std::string::npos);
  EXPECT_NE(res.command_log_jsonl.find("\"command\""), std::string::npos);
  EXPECT_NE(res.command_log_jsonl.find("\"timing\""), std::string::npos);
  EXPECT_EQ(res.command_log_jsonl.rfind("{\"step\":0,", 0), 0u);
}
