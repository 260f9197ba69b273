#include <gtest/gtest.h>

#include <cstdlib>
#include <filesystem>
#include <unistd.h>

#include "leosim/checkpoint.hpp"
#include "leosim/config.hpp"
#include "leosim/harness.hpp"

using namespace leosim;
namespace fs = std::filesystem;

namespace {

constexpr const char* kDefaultConfig = LEOSIM_SOURCE_DIR "/data/default_config.json";
constexpr const char* kTablePath = LEOSIM_SOURCE_DIR "/data/quality_table_default.csv";

fs::path make_temp_dir(const std::string& tag) {
  const auto p =
      fs::temp_directory_path() / ("leosim_harness_" + tag + "_" + std::to_string(::getpid()));
  fs::remove_all(p);
  fs::create_directories(p);
  return p;
}

// minimal config: defaults everywhere, quality table pinned to an absolute path
std::string config_text(const std::string& extra_sections = "") {
  std::string t = "{\n  \"quality_table\": \"" + std::string(kTablePath) + "\"";
  if (!extra_sections.empty()) t += ",\n" + extra_sections;
  t += "\n}\n";
  return t;
}

std::string tiny_agent_section() {
  return R"(  "overpass": {"num_steps": 5},
  "agent": {"hidden": [8], "train_episodes": 2, "epsilon_decay_steps": 10,
            "replay_capacity": 64, "batch_size": 4, "target_sync_period": 5})";
}

std::string slurp(const fs::path& p) { return read_file(p.string()); }

}  // namespace

TEST(ConfigLoader, DefaultFileMatchesBuiltinDefaults) {
  const ExperimentConfig from_file = load_config(kDefaultConfig);
  const ExperimentConfig defaults;
  EXPECT_EQ(config_snapshot(from_file), config_snapshot(defaults));
}

TEST(ConfigLoader, SeedFansOutToBothSides) {
  const auto cfg = load_config_text(R"({"seed": 42})");
  EXPECT_EQ(cfg.seed, 42u);
  EXPECT_EQ(cfg.env.seed, 42u);
  EXPECT_EQ(cfg.agent.seed, 42u);
}

TEST(ConfigLoader, UnknownKeysAreNamedWithTheirPath) {
  try {
    load_config_text(R"({"sed": 1})");
    FAIL() << "expected ConfigError";
  } catch (const ConfigError& e) {
    EXPECT_NE(std::string(e.what()).find("unknown key 'sed'"), std::string::npos) << e.what();
  }
  try {
    load_config_text(R"({"link": {"freq": 20}})");
    FAIL() << "expected ConfigError";
  } catch (const ConfigError& e) {
    EXPECT_NE(std::string(e.what()).find("unknown key 'link.freq'"), std::string::npos) << e.what();
  }
}

TEST(ConfigLoader, TypeAndSignErrors) {
  EXPECT_THROW(load_config_text(R"({"seed": "abc"})"), ConfigError);
  EXPECT_THROW(load_config_text(R"({"seed": -1})"), ConfigError);
  EXPECT_THROW(load_config_text(R"({"frames": {"channels": "32"}})"), ConfigError);
  EXPECT_THROW(load_config_text(R"({"overpass": {"num_steps": 3.5}})"), ConfigError);
  EXPECT_THROW(load_config_text(R"({"agent": {"hidden": [2.5]}})"), ConfigError);
  EXPECT_THROW(load_config_text(R"({"frames": {"channels": [-32]}})"), ConfigError);
  EXPECT_THROW(load_config_text(R"([1, 2])"), ConfigError);
  EXPECT_THROW(load_config_text("{ not json"), ConfigError);
}

TEST(ConfigLoader, EnumValuesAreChecked) {
  try {
    load_config_text(R"({"control": {"snr_to_encoder": "oracle"}})");
    FAIL() << "expected ConfigError";
  } catch (const ConfigError& e) {
    const std::string w = e.what();
    EXPECT_NE(w.find("control.snr_to_encoder"), std::string::npos) << w;
    EXPECT_NE(w.find("'oracle'"), std::string::npos) << w;
  }
  EXPECT_THROW(load_config_text(R"({"control": {"quality_at": "never"}})"), ConfigError);
  EXPECT_THROW(load_config_text(R"({"control": {"snr_to_encoder": 1}})"), ConfigError);
}

TEST(ConfigLoader, QueueSizingCrossCheck) {
  // default frames: largest image is 147,456 symbols, q_max = 3*12*147456 = 5,308,416
  const auto both_ok =
      load_config_text(R"({"queue": {"drain_budget": 1105920, "qdi": 5}})");
  EXPECT_EQ(both_ok.env.drain_budget, 1105920u);
  ASSERT_TRUE(both_ok.qdi_given.has_value());
  EXPECT_EQ(*both_ok.qdi_given, 5);

  try {
    load_config_text(R"({"queue": {"drain_budget": 1105920, "qdi": 6}})");
    FAIL() << "expected ConfigError";
  } catch (const ConfigError& e) {
    EXPECT_NE(std::string(e.what()).find("implies qdi=5"), std::string::npos) << e.what();
  }

  const auto qdi_only = load_config_text(R"({"queue": {"qdi": 6}})");
  EXPECT_EQ(qdi_only.env.drain_budget, 884736u);  // ceil(5308416 / 6)
  const auto snap = config_snapshot(qdi_only);
  EXPECT_NE(snap.find("\"qdi\": 6"), std::string::npos);

  EXPECT_THROW(load_config_text(R"({"queue": {"qdi": 0}})"), ConfigError);
  EXPECT_THROW(load_config_text(R"({"queue": {"drain_budget": 0}})"), ConfigError);
  EXPECT_THROW(load_config_text(R"({"queue": {"qci": 0}})"), ConfigError);
}

TEST(ConfigLoader, AgentValidation) {
  EXPECT_THROW(load_config_text(R"({"agent": {"discount": 1.5}})"), ConfigError);
  EXPECT_THROW(load_config_text(R"({"agent": {"epsilon_start": 0.1, "epsilon_end": 0.2}})"),
               ConfigError);
  EXPECT_THROW(load_config_text(R"({"agent": {"hidden": []}})"), ConfigError);
  EXPECT_THROW(load_config_text(R"({"agent": {"hidden": [64, 0]}})"), ConfigError);
  EXPECT_THROW(load_config_text(R"({"agent": {"learning_rate": 0}})"), ConfigError);
  EXPECT_NO_THROW(load_config_text(R"({"agent": {"discount": 0.0}})"));
}

TEST(ConfigLoader, CommentsAreAccepted) {
  const auto cfg = load_config_text("{\n  // an inline note\n  \"seed\": 9\n}\n");
  EXPECT_EQ(cfg.seed, 9u);
}

TEST(ConfigLoader, SnapshotRoundTripIsStable) {
  ExperimentConfig cfg = load_config(kDefaultConfig);
  cfg.seed = 123;
  cfg.env.seed = 123;
  cfg.agent.seed = 123;
  const std::string snap1 = config_snapshot(cfg);
  const ExperimentConfig reloaded = load_config_text(snap1);
  EXPECT_EQ(config_snapshot(reloaded), snap1);
  EXPECT_EQ(reloaded.env.seed, 123u);
}

TEST(ConfigLoader, MissingFileNamesThePath) {
  try {
    load_config("/nonexistent/leosim.json");
    FAIL() << "expected ConfigError";
  } catch (const ConfigError& e) {
    EXPECT_NE(std::string(e.what()).find("/nonexistent/leosim.json"), std::string::npos);
  }
}

TEST(ResolvePolicy, NamesAndCheckpoints) {
  Environment env(EnvConfig{}, default_table());
  EXPECT_EQ(harness_detail::resolve_policy("min_rate", env).name, "min_rate");
  EXPECT_EQ(harness_detail::resolve_policy("max_rate", env).name, "max_rate");
  const auto mid = harness_detail::resolve_policy("mid_rate", env);
  EXPECT_EQ(mid.name, "mid_rate");
  EXPECT_EQ(mid.policy(env.state()), 2);  // the C=96 slot

  EXPECT_THROW(harness_detail::resolve_policy("median_rate", env), ConfigError);

  const auto dir = make_temp_dir("resolve");
  Rng rng(7);
  Mlp wrong({4, 8, 3}, rng);  // dims do not match 8 inputs x 5 actions
  save_checkpoint_file((dir / "wrong.bin").string(), wrong);
  EXPECT_THROW(harness_detail::resolve_policy((dir / "wrong.bin").string(), env), ConfigError);

  Mlp right({8, 6, 5}, rng);
  save_checkpoint_file((dir / "right.bin").string(), right);
  const auto rl = harness_detail::resolve_policy((dir / "right.bin").string(), env);
  EXPECT_EQ(rl.name, "rl_dqn");
  const int a = rl.policy(env.state());
  EXPECT_GE(a, 0);
  EXPECT_LT(a, 5);
}

TEST(MidRateIndex, PrefersTheNinetySixChannel) {
  EXPECT_EQ(harness_detail::mid_rate_index({32, 64, 96, 128, 192}), 2);
  EXPECT_EQ(harness_detail::mid_rate_index({96, 128}), 0);
  EXPECT_EQ(harness_detail::mid_rate_index({16, 48, 80, 112}), 1);  // no 96: middle slot
  EXPECT_EQ(harness_detail::mid_rate_index({40}), 0);
}

TEST(Evaluate, WritesEveryArtifactAndIsReproducible) {
  const auto dir = make_temp_dir("eval");
  write_file((dir / "cfg.json").string(), config_text());

  RunOptions opt;
  opt.config_path = (dir / "cfg.json").string();
  opt.policy = "mid_rate";
  opt.out_dir = (dir / "run_a").string();
  ASSERT_EQ(cmd_evaluate(opt), 0);

  for (const char* f : {"config_snapshot.json", "report.txt", "report.csv", "step_trace.csv",
                        "queue_log.csv", "frame_trace.csv", "command_log.jsonl", "profile.csv"})
    EXPECT_TRUE(fs::exists(dir / "run_a" / f)) << f;

  const auto report = slurp(dir / "run_a" / "report.csv");
  EXPECT_NE(report.find("mid_rate,492,588,0,96.00,0.062500,"), std::string::npos) << report;

  opt.out_dir = (dir / "run_b").string();
  ASSERT_EQ(cmd_evaluate(opt), 0);
  for (const char* f : {"config_snapshot.json", "report.csv", "step_trace.csv", "queue_log.csv",
                        "frame_trace.csv", "command_log.jsonl", "profile.csv"})
    EXPECT_EQ(slurp(dir / "run_a" / f), slurp(dir / "run_b" / f)) << f;
}

TEST(Evaluate, PolicyIsRequiredAndSeedOverrides) {
  const auto dir = make_temp_dir("eval_seed");
  write_file((dir / "cfg.json").string(), config_text());

  RunOptions opt;
  opt.config_path = (dir / "cfg.json").string();
  opt.out_dir = (dir / "out").string();
  EXPECT_THROW(cmd_evaluate(opt), ConfigError);

  opt.policy = "min_rate";
  opt.seed = 777;
  ASSERT_EQ(cmd_evaluate(opt), 0);
  const auto snap = slurp(dir / "out" / "config_snapshot.json");
  EXPECT_NE(snap.find("\"seed\": 777"), std::string::npos);
}

TEST(Evaluate, OutputRootPrefixesRelativePaths) {
  const auto dir = make_temp_dir("eval_root");
  write_file((dir / "cfg.json").string(), config_text());
  ASSERT_EQ(::setenv("LEOSIM_OUTPUT_ROOT", dir.c_str(), 1), 0);

  RunOptions opt;
  opt.config_path = (dir / "cfg.json").string();
  opt.policy = "min_rate";  // no --out: defaults to <output_dir>/evaluate_min_rate
  const int rc = cmd_evaluate(opt);
  ::unsetenv("LEOSIM_OUTPUT_ROOT");
  ASSERT_EQ(rc, 0);
  EXPECT_TRUE(fs::exists(dir / "runs" / "evaluate_min_rate" / "report.csv"));
}

TEST(Report, ReaggregationMatchesTheOriginalRun) {
  const auto dir = make_temp_dir("report");
  write_file((dir / "cfg.json").string(), config_text());

  RunOptions eval;
  eval.config_path = (dir / "cfg.json").string();
  eval.policy = "max_rate";
  eval.out_dir = (dir / "run").string();
  ASSERT_EQ(cmd_evaluate(eval), 0);

  RunOptions rep;
  rep.report_inputs = {(dir / "run").string()};
  rep.out_dir = (dir / "summary").string();
  ASSERT_EQ(cmd_report(rep), 0);
  EXPECT_EQ(slurp(dir / "summary" / "report.csv"), slurp(dir / "run" / "report.csv"));
}

TEST(Report, RejectsRunsWithoutSnapshotOrInputs) {
  RunOptions rep;
  EXPECT_THROW(cmd_report(rep), ConfigError);
  const auto dir = make_temp_dir("report_bad");
  rep.report_inputs = {dir.string()};
  EXPECT_THROW(cmd_report(rep), ConfigError);
}

TEST(TraceParsers, RoundTripAndErrors) {
  using harness_detail::parse_queue_log_csv;
  using harness_detail::parse_step_trace_csv;

  Environment env(EnvConfig{}, default_table());
  episode_return(env, fixed_policy(2));
  const auto trace = parse_step_trace_csv(step_trace_csv(env.trace()));
  ASSERT_EQ(trace.size(), env.trace().size());
  EXPECT_EQ(step_trace_csv(trace), step_trace_csv(env.trace()));
  const auto qlog = parse_queue_log_csv(queue_log_csv(env.queue_log()));
  EXPECT_EQ(queue_log_csv(qlog), queue_log_csv(env.queue_log()));

  EXPECT_THROW(parse_step_trace_csv(""), ConfigError);
  try {
    parse_step_trace_csv("header\n1,2,3\n");
    FAIL() << "expected ConfigError";
  } catch (const ConfigError& e) {
    const std::string w = e.what();
    EXPECT_NE(w.find("line 2"), std::string::npos) << w;
    EXPECT_NE(w.find("11 cells"), std::string::npos) << w;
  }
  EXPECT_THROW(parse_step_trace_csv("h\n0,1,2,3,4,5,6,7,8,9,x\n"), ConfigError);
  EXPECT_THROW(parse_queue_log_csv("h\n0,1,2\n"), ConfigError);
  EXPECT_THROW(parse_queue_log_csv("h\n0,1,2,3,4,5,nope\n"), ConfigError);
}

TEST(PolicyName, ComesFromReportCsvElseDirectory) {
  const auto dir = make_temp_dir("polname");
  fs::create_directories(dir / "some_run");
  EXPECT_EQ(harness_detail::policy_name_of_run(dir / "some_run"), "some_run");
  write_file((dir / "some_run" / "report.csv").string(),
             "policy,qualified,forwarded,dropped,mean_channel,mean_cbr,qual_over_fwd_pct\n"
             "rl_dqn,1,2,3,96.00,0.062500,50.00\n");
  EXPECT_EQ(harness_detail::policy_name_of_run(dir / "some_run"), "rl_dqn");
}

TEST(Sweep, PatchesTheParameterAndWritesPerValueRuns) {
  const auto dir = make_temp_dir("sweep");
  write_file((dir / "cfg.json").string(), config_text());

  RunOptions opt;
  opt.config_path = (dir / "cfg.json").string();
  opt.policy = "mid_rate";
  opt.out_dir = (dir / "out").string();
  opt.sweep_param = "overpass.min_elevation_deg";
  opt.sweep_values = {"0", "20"};
  ASSERT_EQ(cmd_sweep(opt), 0);

  EXPECT_TRUE(fs::exists(dir / "out" / "sweep.csv"));
  EXPECT_TRUE(fs::exists(dir / "out" / "sweep.txt"));
  const auto a = dir / "out" / "overpass.min_elevation_deg=0";
  const auto b = dir / "out" / "overpass.min_elevation_deg=20";
  EXPECT_TRUE(fs::exists(a / "step_trace.csv"));
  EXPECT_TRUE(fs::exists(b / "step_trace.csv"));

  // a 20 degree floor keeps the whole pass above the C=96 quality knee
  using harness_detail::parse_queue_log_csv;
  using harness_detail::parse_step_trace_csv;
  const auto ta = parse_step_trace_csv(slurp(a / "step_trace.csv"));
  const auto tb = parse_step_trace_csv(slurp(b / "step_trace.csv"));
  int qa = 0, qb = 0;
  for (const auto& r : ta) qa += r.qualified;
  for (const auto& r : tb) qb += r.qualified;
  EXPECT_EQ(qa, 492);
  EXPECT_EQ(qb, 588);

  const auto sweep_csv = slurp(dir / "out" / "sweep.csv");
  EXPECT_EQ(split_lines(sweep_csv).size(), 3u);
  EXPECT_NE(sweep_csv.find("overpass.min_elevation_deg=0,"), std::string::npos);
  EXPECT_NE(sweep_csv.find("overpass.min_elevation_deg=20,"), std::string::npos);
}

TEST(Sweep, BadValuesSurfaceAsConfigErrors) {
  const auto dir = make_temp_dir("sweep_bad");
  write_file((dir / "cfg.json").string(), config_text());

  RunOptions opt;
  opt.config_path = (dir / "cfg.json").string();
  opt.policy = "mid_rate";
  opt.out_dir = (dir / "out").string();
  opt.sweep_param = "overpass.num_steps";
  opt.sweep_values = {"4"};  // even step counts cannot place the zenith sample
  EXPECT_THROW(cmd_sweep(opt), ConfigError);

  opt.sweep_param = "";
  EXPECT_THROW(cmd_sweep(opt), ConfigError);
}

TEST(Train, WritesCheckpointAndCurveReproducibly) {
  const auto dir = make_temp_dir("train");
  write_file((dir / "cfg.json").string(), config_text(tiny_agent_section()));

  RunOptions opt;
  opt.config_path = (dir / "cfg.json").string();
  opt.seed = 5;
  opt.out_dir = (dir / "t1").string();
  ASSERT_EQ(cmd_train(opt), 0);
  for (const char* f : {"config_snapshot.json", "checkpoint.bin", "learning_curve.csv"})
    EXPECT_TRUE(fs::exists(dir / "t1" / f)) << f;

  const Mlp net = load_checkpoint_file((dir / "t1" / "checkpoint.bin").string());
  EXPECT_EQ(net.input_dim(), 8);
  EXPECT_EQ(net.output_dim(), 5);

  opt.out_dir = (dir / "t2").string();
  ASSERT_EQ(cmd_train(opt), 0);
  EXPECT_EQ(slurp(dir / "t1" / "checkpoint.bin"), slurp(dir / "t2" / "checkpoint.bin"));
  EXPECT_EQ(slurp(dir / "t1" / "learning_curve.csv"), slurp(dir / "t2" / "learning_curve.csv"));

  // the checkpoint drives evaluate end to end
  RunOptions eval;
  eval.config_path = (dir / "cfg.json").string();
  eval.policy = (dir / "t1" / "checkpoint.bin").string();
  eval.out_dir = (dir / "eval").string();
  ASSERT_EQ(cmd_evaluate(eval), 0);
  EXPECT_NE(slurp(dir / "eval" / "report.csv").find("rl_dqn,"), std::string::npos);
}

TEST(Ablate, ProducesThreeArmsInFixedOrder) {
  const auto arms = ablation_arms();
  ASSERT_EQ(arms.size(), 3u);
  EXPECT_EQ(arms[0].name, "wo_snr_pred");
  EXPECT_FALSE(arms[0].predictor_enabled);
  EXPECT_EQ(arms[1].name, "snr_pred_pl_only");
  EXPECT_TRUE(arms[1].predictor_enabled);
  EXPECT_EQ(arms[1].snr_to_encoder, SnrToEncoder::instantaneous);
  EXPECT_EQ(arms[2].name, "snr_pred_encoder");
  EXPECT_EQ(arms[2].snr_to_encoder, SnrToEncoder::predicted);

  const auto dir = make_temp_dir("ablate");
  write_file((dir / "cfg.json").string(), config_text(tiny_agent_section()));
  RunOptions opt;
  opt.config_path = (dir / "cfg.json").string();
  opt.out_dir = (dir / "out").string();
  ASSERT_EQ(cmd_ablate(opt), 0);

  const auto csv = slurp(dir / "out" / "ablation.csv");
  EXPECT_EQ(split_lines(csv)[0], "metric,wo_snr_pred,snr_pred_pl_only,snr_pred_encoder");
  for (const char* arm : {"wo_snr_pred", "snr_pred_pl_only", "snr_pred_encoder"}) {
    EXPECT_TRUE(fs::exists(dir / "out" / arm / "checkpoint.bin")) << arm;
    EXPECT_TRUE(fs::exists(dir / "out" / arm / "step_trace.csv")) << arm;
    EXPECT_TRUE(fs::exists(dir / "out" / arm / "learning_curve.csv")) << arm;
  }
}
