// Command-line front end: train / calibrate / eval / analyze.

#include <cstdint>
#include <exception>
#include <iostream>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "rmrl/analyze.hpp"
#include "rmrl/checkpoint.hpp"
#include "rmrl/config.hpp"
#include "rmrl/train.hpp"

namespace {

int run_train(const std::string& config_path, std::int64_t seed_override,
              std::string out_dir) {
  rmrl::ExperimentConfig cfg = rmrl::load_config_file(config_path);
  if (seed_override >= 0) cfg.run.seed = static_cast<std::uint64_t>(seed_override);
  if (out_dir.empty()) {
    out_dir = std::string("runs/") + rmrl::to_string(cfg.strategy.kind) + "_seed" +
              std::to_string(cfg.run.seed);
  }
  rmrl::Trainer trainer(/*verbose=*/true);
  const auto summary = trainer.run(cfg, out_dir);
  std::cout << "run complete: " << summary.total_steps << " steps, "
            << summary.total_resets << " resets, final eval success "
            << summary.final_success_rate << "\n"
            << "metrics: " << summary.metrics_path << "\n"
            << "checkpoint: " << summary.final_checkpoint << std::endl;
  return 0;
}

int run_calibrate(const std::string& config_path, std::int64_t probe_steps) {
  const rmrl::ExperimentConfig cfg = rmrl::load_config_file(config_path);
  const auto result = rmrl::calibrate_threshold(cfg, probe_steps);
  std::cout << "measure: " << rmrl::to_string(cfg.strategy.measure.kind) << "\n"
            << "recommended threshold: " << result.epsilon << "\n"
            << "random-policy median: " << result.random_median << "\n"
            << "no-op median: " << result.noop_median << "\n";
  std::cout << "random-policy values:";
  for (double v : result.random_values) std::cout << ' ' << v;
  std::cout << "\nno-op values:";
  for (double v : result.noop_values) std::cout << ' ' << v;
  std::cout << std::endl;
  return 0;
}

int run_eval(const std::string& checkpoint_path, const std::string& mode_name,
             int tasks, std::int64_t seed) {
  const auto ck = rmrl::load_checkpoint(checkpoint_path);
  const rmrl::ExperimentConfig cfg = rmrl::parse_config(ck.config_text);
  const rmrl::PolicyNet net = rmrl::net_from_checkpoint(ck);
  const auto mode =
      mode_name == "pos-ood" ? rmrl::EvalMode::PosOoD : rmrl::EvalMode::Train;
  const auto result = rmrl::evaluate(net, cfg.env, mode, tasks,
                                     static_cast<std::uint64_t>(seed));
  std::cout << "tasks: " << result.tasks << "\n"
            << "success_rate: " << result.success_rate << "\n"
            << "mean_steps_to_success: " << result.mean_steps_to_success << std::endl;
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Reset-minimizing RL experiment harness"};
  app.require_subcommand(1);

  std::string config_path, out_dir, checkpoint_path, mode_name = "train";
  std::int64_t seed = -1, probe_steps = 3000, eval_seed = 0;
  int tasks = 200;
  int smooth = 1;
  std::string analyze_out;
  std::vector<std::string> run_dirs;

  auto* train = app.add_subcommand("train", "run a training experiment");
  train->add_option("--config", config_path, "experiment config file")->required();
  train->add_option("--seed", seed, "override the config seed");
  train->add_option("--out", out_dir, "output run directory");

  auto* calibrate = app.add_subcommand("calibrate", "recommend a measure threshold");
  calibrate->add_option("--config", config_path, "experiment config file")->required();
  calibrate->add_option("--probe-steps", probe_steps, "steps per probe")->required();

  auto* eval = app.add_subcommand("eval", "evaluate a checkpoint");
  eval->add_option("--checkpoint", checkpoint_path, "checkpoint file")->required();
  eval->add_option("--mode", mode_name, "train|pos-ood")
      ->check(CLI::IsMember({"train", "pos-ood"}));
  eval->add_option("--tasks", tasks, "number of evaluation tasks");
  eval->add_option("--seed", eval_seed, "evaluation seed");

  auto* analyze = app.add_subcommand("analyze", "emit curve tables and point clouds");
  analyze->add_option("dirs", run_dirs, "run directories")->required();
  analyze->add_option("--smooth", smooth, "smoothing window (eval points)");
  analyze->add_option("--out", analyze_out, "output directory");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    return app.exit(e) == 0 ? 0 : 1;
  }

  try {
    if (*train) return run_train(config_path, seed, out_dir);
    if (*calibrate) return run_calibrate(config_path, probe_steps);
    if (*eval) return run_eval(checkpoint_path, mode_name, tasks, eval_seed);
    if (*analyze) {
      rmrl::AnalyzeOptions opt;
      opt.smooth_window = smooth;
      opt.out_dir = analyze_out;
      const int ok = rmrl::analyze_runs(run_dirs, opt);
      if (ok == 0) {
        std::cerr << "analyze: no run directory could be analyzed" << std::endl;
        return 2;
      }
      return 0;
    }
  } catch (const rmrl::ConfigError& e) {
    std::cerr << "config error: " << e.what() << std::endl;
    return 1;
  } catch (const std::invalid_argument& e) {
    std::cerr << "usage error: " << e.what() << std::endl;
    return 1;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << std::endl;
    return 2;
  }
  return 1;
}
