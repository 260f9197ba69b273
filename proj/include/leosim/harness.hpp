#pragma once

#include <cstdint>
#include <cstdlib>
#include <filesystem>
#include <iostream>
#include <optional>
#include <string>
#include <vector>

#include "leosim/agent.hpp"
#include "leosim/checkpoint.hpp"
#include "leosim/config.hpp"
#include "leosim/env.hpp"
#include "leosim/errors.hpp"
#include "leosim/gateway.hpp"
#include "leosim/metrics.hpp"
#include "leosim/quality.hpp"
#include "leosim/textio.hpp"

namespace leosim {

struct RunOptions {
  std::string config_path;
  std::optional<std::uint64_t> seed;
  std::optional<std::string> out_dir;
  std::optional<std::string> quality_table;
  std::string policy;  // evaluate/sweep: baseline name or checkpoint path
  std::string sweep_param;
  std::vector<std::string> sweep_values;
  std::vector<std::string> report_inputs;
};

namespace harness_detail {

inline ExperimentConfig load_with_overrides(const RunOptions& opt) {
  ExperimentConfig cfg = load_config(opt.config_path);
  if (opt.seed) {
    cfg.seed = *opt.seed;
    cfg.env.seed = *opt.seed;
    cfg.agent.seed = *opt.seed;
  }
  if (opt.quality_table) cfg.quality_table_path = *opt.quality_table;
  return cfg;
}

// LEOSIM_OUTPUT_ROOT prefixes relative output paths; absolute ones win.
inline std::filesystem::path resolve_out_dir(const ExperimentConfig& cfg, const RunOptions& opt,
                                             const std::string& default_leaf) {
  std::filesystem::path p = opt.out_dir ? std::filesystem::path(*opt.out_dir)
                                        : std::filesystem::path(cfg.output_dir) / default_leaf;
  if (p.is_relative()) {
    if (const char* root = std::getenv("LEOSIM_OUTPUT_ROOT")) p = std::filesystem::path(root) / p;
  }
  std::error_code ec;
  std::filesystem::create_directories(p, ec);
  if (ec) throw SimError("cannot create output directory: " + p.string());
  return p;
}

inline double cbr_denominator(const EnvConfig& env) {
  return 6.0 * std::pow(4.0, env.encoder_stages);
}

struct ResolvedPolicy {
  Policy policy;
  std::string name;
};

inline int mid_rate_index(const std::vector<std::uint32_t>& channels) {
  for (std::size_t i = 0; i < channels.size(); ++i)
    if (channels[i] == 96) return static_cast<int>(i);
  return static_cast<int>((channels.size() - 1) / 2);
}

inline ResolvedPolicy resolve_policy(const std::string& spec, const Environment& env) {
  const int k = env.num_actions();
  if (spec == "min_rate") return {fixed_policy(0), "min_rate"};
  if (spec == "max_rate") return {fixed_policy(k - 1), "max_rate"};
  if (spec == "mid_rate") return {fixed_policy(mid_rate_index(env.config().channels)), "mid_rate"};
  if (!std::filesystem::exists(spec))
    throw ConfigError("policy '" + spec +
                      "' is neither min_rate/mid_rate/max_rate nor a checkpoint file");
  Mlp net = load_checkpoint_file(spec);
  const NormBounds bounds = norm_bounds_for(env);
  if (net.input_dim() != 3 + bounds.num_actions || net.output_dim() != bounds.num_actions)
    throw ConfigError("checkpoint '" + spec + "' does not match the configured action set");
  return {greedy_policy(net, bounds), "rl_dqn"};
}

inline void write_run_outputs(const std::filesystem::path& dir, const ExperimentConfig& cfg,
                              const Environment& env, const ClosedLoopResult& res) {
  write_file((dir / "config_snapshot.json").string(), config_snapshot(cfg));
  write_file((dir / "report.txt").string(),
             report_details_text(res.report) + "\n" + compare_text({res.report}));
  write_file((dir / "report.csv").string(), compare_csv({res.report}));
  write_file((dir / "step_trace.csv").string(), step_trace_csv(res.trace));
  write_file((dir / "queue_log.csv").string(), queue_log_csv(res.queue_log));
  write_file((dir / "frame_trace.csv").string(), frame_trace_csv(res.frame_trace));
  write_file((dir / "command_log.jsonl").string(), res.command_log_jsonl);
  write_file((dir / "profile.csv").string(), profile_csv(env.profile()));
}

}  // namespace harness_detail

inline int cmd_train(const RunOptions& opt) {
  using namespace harness_detail;
  ExperimentConfig cfg = load_with_overrides(opt);
  const auto dir = resolve_out_dir(cfg, opt, "train");
  QualityTable table = load_quality_table_file(cfg.quality_table_path);
  Environment env(cfg.env, table);
  if (!env.stable_under(0))
    std::cout << "note: even the lowest rate exceeds the drain budget; expect drops\n";
  TrainResult tr = train(env, cfg.agent);
  write_file((dir / "config_snapshot.json").string(), config_snapshot(cfg));
  save_checkpoint_file((dir / "checkpoint.bin").string(), tr.net);
  write_file((dir / "learning_curve.csv").string(), learning_curve_csv(tr.curve));
  const auto& last = tr.curve.back();
  std::cout << "trained " << cfg.agent.train_episodes << " episodes (seed " << cfg.seed
            << "); final return " << fmt_double(last.episode_return) << ", qualified "
            << last.qualified << "\ncheckpoint: " << (dir / "checkpoint.bin").string() << '\n';
  return 0;
}

inline int cmd_evaluate(const RunOptions& opt) {
  using namespace harness_detail;
  ExperimentConfig cfg = load_with_overrides(opt);
  if (opt.policy.empty()) throw ConfigError("evaluate: --policy is required");
  QualityTable table = load_quality_table_file(cfg.quality_table_path);
  Environment env(cfg.env, table);
  ResolvedPolicy rp = resolve_policy(opt.policy, env);
  const auto dir = resolve_out_dir(cfg, opt, "evaluate_" + rp.name);
  ClosedLoopResult res = run_closed_loop(env, rp.policy, cfg.processing_delay_ms, rp.name);
  write_run_outputs(dir, cfg, env, res);
  std::cout << report_details_text(res.report) << "\noutputs: " << dir.string() << '\n';
  return 0;
}

inline int cmd_sweep(const RunOptions& opt) {
  using namespace harness_detail;
  if (opt.sweep_param.empty() || opt.sweep_values.empty())
    throw ConfigError("sweep: --param and --values are required");
  if (opt.policy.empty()) throw ConfigError("sweep: --policy is required");

  // patch the raw JSON at the dotted path, then revalidate via the loader
  nlohmann::json base;
  try {
    base = nlohmann::json::parse(read_file(opt.config_path), nullptr, true, true);
  } catch (const nlohmann::json::parse_error& e) {
    throw ConfigError(std::string("config: ") + e.what());
  }
  ExperimentConfig cfg0 = load_config_json(base);
  if (opt.seed) cfg0.seed = *opt.seed;
  const auto dir = resolve_out_dir(cfg0, opt, "sweep");

  std::vector<EpisodeReport> reports;
  for (const auto& value : opt.sweep_values) {
    nlohmann::json patched = base;
    nlohmann::json* node = &patched;
    std::string rest = opt.sweep_param;
    while (true) {
      const auto dot = rest.find('.');
      const std::string head = rest.substr(0, dot);
      if (head.empty()) throw ConfigError("sweep: bad --param path");
      if (dot == std::string::npos) {
        nlohmann::json parsed;
        try {
          parsed = nlohmann::json::parse(value, nullptr, true, true);
        } catch (const nlohmann::json::parse_error&) {
          parsed = value;  // bare strings are allowed unquoted
        }
        (*node)[head] = parsed;
        break;
      }
      if (!node->contains(head)) (*node)[head] = nlohmann::json::object();
      node = &(*node)[head];
      rest = rest.substr(dot + 1);
    }
    ExperimentConfig cfg = load_config_json(patched);
    if (opt.seed) {
      cfg.seed = *opt.seed;
      cfg.env.seed = *opt.seed;
      cfg.agent.seed = *opt.seed;
    }
    if (opt.quality_table) cfg.quality_table_path = *opt.quality_table;
    QualityTable table = load_quality_table_file(cfg.quality_table_path);
    Environment env(cfg.env, table);
    ResolvedPolicy rp = resolve_policy(opt.policy, env);
    ClosedLoopResult res = run_closed_loop(env, rp.policy, cfg.processing_delay_ms,
                                           opt.sweep_param + "=" + value);
    const auto sub = dir / (opt.sweep_param + "=" + value);
    std::error_code ec;
    std::filesystem::create_directories(sub, ec);
    if (ec) throw SimError("cannot create output directory: " + sub.string());
    write_run_outputs(sub, cfg, env, res);
    reports.push_back(res.report);
  }
  write_file((dir / "sweep.csv").string(), compare_csv(reports));
  write_file((dir / "sweep.txt").string(), compare_text(reports));
  std::cout << compare_text(reports) << "\noutputs: " << dir.string() << '\n';
  return 0;
}

// Predictor ablation arms, fixed order and naming.
struct AblationArm {
  std::string name;
  bool predictor_enabled;
  SnrToEncoder snr_to_encoder;
};

inline std::vector<AblationArm> ablation_arms() {
  return {{"wo_snr_pred", false, SnrToEncoder::instantaneous},
          {"snr_pred_pl_only", true, SnrToEncoder::instantaneous},
          {"snr_pred_encoder", true, SnrToEncoder::predicted}};
}

inline int cmd_ablate(const RunOptions& opt) {
  using namespace harness_detail;
  ExperimentConfig cfg = load_with_overrides(opt);
  const auto dir = resolve_out_dir(cfg, opt, "ablate");
  QualityTable table = load_quality_table_file(cfg.quality_table_path);

  std::vector<EpisodeReport> reports;
  for (const auto& arm : ablation_arms()) {
    ExperimentConfig acfg = cfg;
    acfg.env.predictor_enabled = arm.predictor_enabled;
    acfg.env.snr_to_encoder = arm.snr_to_encoder;
    Environment env(acfg.env, table);
    TrainResult tr = train(env, acfg.agent);
    Environment eval_env(acfg.env, table);
    ClosedLoopResult res = run_closed_loop(eval_env, greedy_policy(tr.net, tr.bounds),
                                           acfg.processing_delay_ms, arm.name);
    const auto sub = dir / arm.name;
    std::error_code ec;
    std::filesystem::create_directories(sub, ec);
    if (ec) throw SimError("cannot create output directory: " + sub.string());
    write_run_outputs(sub, acfg, eval_env, res);
    save_checkpoint_file((sub / "checkpoint.bin").string(), tr.net);
    write_file((sub / "learning_curve.csv").string(), learning_curve_csv(tr.curve));
    reports.push_back(res.report);
  }
  write_file((dir / "ablation.csv").string(), ablation_csv(reports));
  std::cout << ablation_csv(reports) << "\noutputs: " << dir.string() << '\n';
  return 0;
}

namespace harness_detail {

inline std::vector<StepTraceRow> parse_step_trace_csv(const std::string& text) {
  const auto lines = split_lines(text);
  if (lines.empty()) throw ConfigError("step trace: empty file");
  std::vector<StepTraceRow> rows;
  for (std::size_t i = 1; i < lines.size(); ++i) {
    if (trim(lines[i]).empty()) continue;
    const auto c = split_csv(lines[i]);
    const std::string ctx = "step trace line " + std::to_string(i + 1);
    if (c.size() != 11) throw ConfigError(ctx + ": expected 11 cells");
    StepTraceRow r;
    r.step = static_cast<int>(parse_int(c[0], ctx));
    r.elevation_deg = parse_double(c[1], ctx);
    r.snr_db = parse_double(c[2], ctx);
    r.snr_pred_db = parse_double(c[3], ctx);
    r.action_c = static_cast<std::uint32_t>(parse_int(c[4], ctx));
    r.admitted = static_cast<int>(parse_int(c[5], ctx));
    r.dropped = static_cast<int>(parse_int(c[6], ctx));
    r.forwarded = static_cast<int>(parse_int(c[7], ctx));
    r.qualified = static_cast<int>(parse_int(c[8], ctx));
    r.q_post = static_cast<std::uint64_t>(parse_int(c[9], ctx));
    r.r_tilde = parse_double(c[10], ctx);
    rows.push_back(r);
  }
  return rows;
}

inline std::vector<QueueLogRow> parse_queue_log_csv(const std::string& text) {
  const auto lines = split_lines(text);
  if (lines.empty()) throw ConfigError("queue log: empty file");
  std::vector<QueueLogRow> rows;
  for (std::size_t i = 1; i < lines.size(); ++i) {
    if (trim(lines[i]).empty()) continue;
    const auto c = split_csv(lines[i]);
    const std::string ctx = "queue log line " + std::to_string(i + 1);
    if (c.size() != 7) throw ConfigError(ctx + ": expected 7 cells");
    QueueLogRow r;
    r.step = static_cast<int>(parse_int(c[0], ctx));
    r.q_len_pre = static_cast<std::uint64_t>(parse_int(c[1], ctx));
    r.q_len_post_enqueue = static_cast<std::uint64_t>(parse_int(c[2], ctx));
    r.q_len_post_drain = static_cast<std::uint64_t>(parse_int(c[3], ctx));
    r.admitted = static_cast<int>(parse_int(c[4], ctx));
    r.dropped = static_cast<int>(parse_int(c[5], ctx));
    r.forwarded = static_cast<int>(parse_int(c[6], ctx));
    rows.push_back(r);
  }
  return rows;
}

inline std::string policy_name_of_run(const std::filesystem::path& run_dir) {
  const auto report = run_dir / "report.csv";
  if (std::filesystem::exists(report)) {
    const auto lines = split_lines(read_file(report.string()));
    if (lines.size() >= 2) {
      const auto cells = split_csv(lines[1]);
      if (!cells.empty() && !cells[0].empty()) return cells[0];
    }
  }
  return run_dir.filename().string();
}

}  // namespace harness_detail

// Re-aggregates finished runs from their traces alone; the numbers must
// match what the runs reported originally.
inline int cmd_report(const RunOptions& opt) {
  using namespace harness_detail;
  if (opt.report_inputs.empty()) throw ConfigError("report: give at least one run directory");
  std::vector<EpisodeReport> reports;
  for (const auto& in : opt.report_inputs) {
    const std::filesystem::path run_dir(in);
    const auto snap = run_dir / "config_snapshot.json";
    if (!std::filesystem::exists(snap))
      throw ConfigError("report: missing config_snapshot.json in " + in);
    ExperimentConfig cfg = load_config(snap.string());
    const auto trace = parse_step_trace_csv(read_file((run_dir / "step_trace.csv").string()));
    const auto qlog = parse_queue_log_csv(read_file((run_dir / "queue_log.csv").string()));
    const std::uint64_t max_sym = symbols_per_image(cfg.env.channels.back(), cfg.env.image_height,
                                                    cfg.env.image_width, cfg.env.encoder_stages);
    const auto sizing =
        compute_sizing(cfg.env.qci, cfg.env.batch_size, max_sym, cfg.env.drain_budget);
    reports.push_back(summarize(policy_name_of_run(run_dir), trace, qlog, sizing.q_max,
                                cbr_denominator(cfg.env)));
  }
  std::cout << compare_text(reports);
  if (opt.out_dir) {
    std::error_code ec;
    std::filesystem::create_directories(*opt.out_dir, ec);
    if (ec) throw SimError("cannot create output directory: " + *opt.out_dir);
    write_file((std::filesystem::path(*opt.out_dir) / "report.csv").string(),
               compare_csv(reports));
    write_file((std::filesystem::path(*opt.out_dir) / "report.txt").string(),
               compare_text(reports));
  }
  return 0;
}

}  // namespace leosim
