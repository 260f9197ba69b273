#include <exception>
#include <iostream>
#include <string>

#include <CLI11.hpp>

#include "leosim/harness.hpp"

namespace {

void add_common(CLI::App* sub, leosim::RunOptions& opt, bool config_required = true) {
  auto* c = sub->add_option("--config", opt.config_path, "experiment config (JSON, // comments ok)");
  if (config_required) c->required()->check(CLI::ExistingFile);
  sub->add_option_function<std::uint64_t>(
      "--seed", [&opt](const std::uint64_t& s) { opt.seed = s; },
      "override the config seed");
  sub->add_option_function<std::string>(
      "--out", [&opt](const std::string& s) { opt.out_dir = s; },
      "output directory (default: <output_dir>/<subcommand...>)");
  sub->add_option_function<std::string>(
      "--quality-table", [&opt](const std::string& s) { opt.quality_table = s; },
      "override the quality table path");
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"queue-aware rate control simulator for a LEO image downlink"};
  app.require_subcommand(1);

  leosim::RunOptions opt;

  auto* train = app.add_subcommand("train", "train the DQN controller");
  add_common(train, opt);

  auto* evaluate = app.add_subcommand("evaluate", "run one closed-loop episode with a policy");
  add_common(evaluate, opt);
  evaluate->add_option("--policy", opt.policy,
                       "min_rate | mid_rate | max_rate | path to checkpoint.bin")
      ->required();

  auto* sweep = app.add_subcommand("sweep", "evaluate a policy across config variants");
  add_common(sweep, opt);
  sweep->add_option("--policy", opt.policy,
                    "min_rate | mid_rate | max_rate | path to checkpoint.bin")
      ->required();
  sweep->add_option("--param", opt.sweep_param, "dotted config path, e.g. queue.qci")->required();
  sweep->add_option("--values", opt.sweep_values, "values to substitute")->required();

  auto* ablate = app.add_subcommand("ablate", "train and evaluate the SNR predictor arms");
  add_common(ablate, opt);

  auto* report = app.add_subcommand("report", "re-aggregate metrics from finished run dirs");
  report->add_option("runs", opt.report_inputs, "run directories")->required();
  report->add_option_function<std::string>(
      "--out", [&opt](const std::string& s) { opt.out_dir = s; },
      "also write report.csv/report.txt here");

  CLI11_PARSE(app, argc, argv);

  try {
    if (*train) return leosim::cmd_train(opt);
    if (*evaluate) return leosim::cmd_evaluate(opt);
    if (*sweep) return leosim::cmd_sweep(opt);
    if (*ablate) return leosim::cmd_ablate(opt);
    if (*report) return leosim::cmd_report(opt);
  } catch (const leosim::ConfigError& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 2;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 3;
  }
  return 0;
}
