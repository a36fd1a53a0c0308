#pragma once

#include <algorithm>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <string>
#include <vector>

#include "rmrl/checkpoint.hpp"
#include "rmrl/config.hpp"
#include "rmrl/learner.hpp"
#include "rmrl/measures.hpp"
#include "rmrl/metrics.hpp"
#include "rmrl/policy.hpp"
#include "rmrl/strategy.hpp"
#include "rmrl/tabletop.hpp"
#include "rmrl/trajectory.hpp"

namespace rmrl {

struct EvalResult {
  double success_rate = 0.0;
  double mean_steps_to_success = 0.0;
  int tasks = 0;
};

/// Episodic evaluation protocol: a hard reset per task, mode-greedy actions,
/// at most max_phase_steps steps. Never touches the parameters.
inline EvalResult evaluate(const PolicyNet& net, const EnvConfig& env_cfg,
                           EvalMode mode, int n_tasks, std::uint64_t seed) {
  if (n_tasks <= 0) throw std::invalid_argument("evaluate: n_tasks must be positive");
  if (net.dims().obs != kObsDim || net.dims().actions != kNumActions) {
    throw std::runtime_error("evaluate: network shape does not match the environment");
  }
  const TabletopEnv env(env_cfg);
  int hits = 0;
  std::int64_t steps_sum = 0;
  for (int task = 0; task < n_tasks; ++task) {
    Rng rng(seed, 7000000ULL + static_cast<std::uint64_t>(task));
    EnvState state = env.reset_full(rng);
    const GoalSpec goal = env.sample_goal(mode, rng, state.object);
    for (int k = 0; k < env_cfg.max_phase_steps; ++k) {
      const auto obs = env.observe(state, goal);
      const ActResult a = greedy_act(net, obs.data());
      const StepResult r = env.step(state, static_cast<ActionId>(a.action), goal, rng);
      if (r.success) {
        ++hits;
        steps_sum += k + 1;
        break;
      }
    }
  }
  EvalResult out;
  out.tasks = n_tasks;
  out.success_rate = static_cast<double>(hits) / n_tasks;
  out.mean_steps_to_success = hits > 0 ? static_cast<double>(steps_sum) / hits : 0.0;
  return out;
}

// ---------------------------------------------------------------------------
// Threshold calibration
// ---------------------------------------------------------------------------

struct CalibrationResult {
  double epsilon = 0.0;
  std::vector<double> random_values;
  std::vector<double> noop_values;
  double random_median = 0.0;
  double noop_median = 0.0;
};

namespace detail {

inline double quantile(std::vector<double> v, double q) {
  if (v.empty()) throw std::invalid_argument("quantile of empty sample");
  std::sort(v.begin(), v.end());
  const double pos = q * static_cast<double>(v.size() - 1);
  const auto lo = static_cast<std::size_t>(pos);
  const double frac = pos - static_cast<double>(lo);
  if (lo + 1 >= v.size()) return v.back();
  return v[lo] * (1.0 - frac) + v[lo + 1] * frac;
}

}  // namespace detail

/// Threshold between the value distribution of a random policy right after
/// a reset and that of doing nothing: geometric mean of the random probe's
/// lower quartile and the no-op probe's upper quartile. Quartiles of exactly
/// frozen probes are floored at 1e-6 so the mean stays positive.
inline double calibrate_from_samples(const std::vector<double>& random_values,
                                     const std::vector<double>& noop_values) {
  const double q_random = std::max(detail::quantile(random_values, 0.25), 1e-6);
  const double q_noop = std::max(detail::quantile(noop_values, 0.75), 1e-6);
  return std::sqrt(q_random * q_noop);
}

/// Runs the two probes in the configured environment, one measure value per
/// full horizon started from a fresh reset.
inline CalibrationResult calibrate_threshold(const ExperimentConfig& cfg,
                                             std::int64_t probe_steps) {
  const MeasureConfig& measure = cfg.strategy.measure;
  measure.validate();
  const auto horizon = static_cast<std::int64_t>(measure.horizon);
  if (probe_steps < horizon) {
    throw std::invalid_argument("probe_steps shorter than one measure horizon");
  }
  const TabletopEnv env(cfg.env);
  auto probe = [&](bool random_policy, std::uint64_t stream) {
    std::vector<double> values;
    Rng rng(cfg.run.seed, stream);
    for (std::int64_t done = 0; done + horizon <= probe_steps; done += horizon) {
      EnvState state = env.reset_full(rng);
      const GoalSpec goal = env.sample_goal(EvalMode::Train, rng, state.object);
      std::vector<StateVec> traj;
      traj.reserve(measure.horizon);
      for (std::int64_t k = 0; k < horizon; ++k) {
        const auto action = random_policy
                                ? static_cast<ActionId>(rng.below(kNumActions))
                                : ActionId::Release;
        env.step(state, action, goal, rng);
        const Vec2 obj = state.sensed_object();
        traj.push_back({obj.x, obj.y});
      }
      values.push_back(measure_value(traj, measure));
    }
    return values;
  };
  CalibrationResult out;
  out.random_values = probe(true, 11);
  out.noop_values = probe(false, 12);
  out.epsilon = calibrate_from_samples(out.random_values, out.noop_values);
  out.random_median = detail::quantile(out.random_values, 0.5);
  out.noop_median = detail::quantile(out.noop_values, 0.5);
  return out;
}

// ---------------------------------------------------------------------------
// Training
// ---------------------------------------------------------------------------

struct TrainSummary {
  std::int64_t total_steps = 0;
  std::int64_t total_resets = 0;
  double final_success_rate = 0.0;
  std::string final_checkpoint;
  std::string metrics_path;
};

/// Orchestrates one training run: workers collect rollouts in lockstep, the
/// single-threaded update follows, metrics and checkpoints land in out_dir.
/// Deterministic given (config, seed, worker count).
class Trainer {
 public:
  explicit Trainer(bool verbose = false) : verbose_(verbose) {}

  TrainSummary run(const ExperimentConfig& cfg, const std::string& out_dir) {
    cfg.validate();
    namespace fs = std::filesystem;
    fs::create_directories(fs::path(out_dir) / "checkpoints");
    const std::string config_text = emit_config(cfg);
    {
      std::ofstream cf(fs::path(out_dir) / "config.ini");
      cf << config_text;
    }
    MetricsWriter metrics((fs::path(out_dir) / "metrics.txt").string());
    std::ofstream traj_file(fs::path(out_dir) / "trajectories.txt");
    traj_file << "# rmrl trajectories v1\n";

    const TabletopEnv env(cfg.env);
    const StrategyConfig& strategy = cfg.strategy;
    const int n_workers = cfg.run.workers;
    const int rollout_len = cfg.learner.rollout_length;

    PolicyNet net;
    {
      Rng init_rng(cfg.run.seed, 1);
      net.init(init_rng);
    }
    AdamState adam(net.params().size());
    Rng update_rng(cfg.run.seed, 2);

    struct Worker {
      EnvState state;
      TrajectoryBuffer buffer{600, 2};
      NiDetector* detector = nullptr;
      PhaseManager pm;
      StepCounters counters;
      Rng rng{0};
      std::int64_t own_step = 0;
      double phase_return = 0.0;
      int phase_len = 0;
      std::vector<std::array<double, 3>> pending;  // step, x, y
      int sample_tick = 0;
    };

    std::vector<Worker> workers(n_workers);
    std::vector<NiDetector> detectors;
    detectors.reserve(n_workers);
    const bool measure_led = strategy.kind == StrategyKind::MeasureLed;
    const std::size_t buffer_cap =
        measure_led ? std::max<std::size_t>(strategy.measure.horizon, 2) : 600;
    std::int64_t total_resets = 0;

    for (int w = 0; w < n_workers; ++w) {
      Worker& wk = workers[w];
      wk.rng = Rng(cfg.run.seed, 1000 + static_cast<std::uint64_t>(w));
      wk.buffer = TrajectoryBuffer(buffer_cap, 2);
      if (measure_led) {
        detectors.emplace_back(strategy.measure);
      }
      wk.state = env.reset_full(wk.rng);
      metrics.write({0, w, MetricsRecord::Kind::Reset,
                     {static_cast<double>(ResetCause::Initial)}});
      ++total_resets;
      wk.pm.goal = next_goal(strategy, wk.pm, wk.rng, env, wk.state.object);
    }
    for (int w = 0; w < n_workers; ++w) {
      if (measure_led) workers[w].detector = &detectors[w];
    }

    RolloutBatch batch(n_workers, rollout_len);
    std::int64_t agg_steps = 0;
    std::int64_t update_index = 0;
    const std::int64_t steps_per_update =
        static_cast<std::int64_t>(n_workers) * rollout_len;

    auto flush_pending = [&](Worker& wk, int w, PhaseOutcome outcome) {
      for (const auto& row : wk.pending) {
        traj_file << static_cast<std::int64_t>(row[0]) << ' ' << w << ' ' << row[1]
                  << ' ' << row[2] << ' ' << static_cast<int>(outcome) << '\n';
      }
      wk.pending.clear();
    };

    while (agg_steps < cfg.run.total_steps) {
      for (int w = 0; w < n_workers; ++w) {
        Worker& wk = workers[w];
        for (int t = 0; t < rollout_len; ++t) {
          const std::int64_t global_step =
              (update_index * rollout_len + t + 1) * n_workers;
          const GoalSpec goal = wk.pm.goal;
          const auto obs = env.observe(wk.state, goal);
          const ActResult ar = act(net, obs.data(), wk.rng);
          const StepResult res =
              env.step(wk.state, static_cast<ActionId>(ar.action), goal, wk.rng);
          ++wk.own_step;
          ++wk.counters.steps_since_reset;
          wk.counters.steps_in_phase = wk.state.step_in_phase;
          wk.phase_return += res.reward;
          ++wk.phase_len;

          const Vec2 sensed = wk.state.sensed_object();
          wk.buffer.append(wk.own_step, {sensed.x, sensed.y});
          if (++wk.sample_tick >= 10) {
            wk.sample_tick = 0;
            wk.pending.push_back({static_cast<double>(global_step), sensed.x, sensed.y});
          }

          MeasureVerdict verdict;
          if (wk.detector != nullptr) {
            verdict = wk.detector->observe(wk.buffer);
            if (verdict.checked) {
              metrics.write({global_step, w, MetricsRecord::Kind::Measure,
                             {static_cast<double>(strategy.measure.kind), verdict.value,
                              verdict.ni ? 1.0 : 0.0}});
            }
          }

          const bool phase_ended =
              res.success || wk.state.step_in_phase >= strategy.phase_length;
          wk.counters.phase_ended = phase_ended;
          const auto cause =
              should_reset(strategy, wk.counters, verdict, res.gt_irreversible);

          StepSample& sample = batch.at(t, w);
          sample.obs.assign(obs.begin(), obs.end());
          sample.action = ar.action;
          sample.log_prob = ar.log_prob;
          sample.reward = res.reward;
          sample.value = ar.value;
          sample.terminal = false;
          sample.truncated = false;
          sample.boot_value = 0.0;
          sample.phase_boundary = phase_ended || cause.has_value();
          sample.reset = cause.has_value();

          if (cause.has_value()) {
            const PhaseOutcome outcome =
                res.success ? PhaseOutcome::Success
                            : (wk.state.step_in_phase >= strategy.phase_length
                                   ? PhaseOutcome::Timeout
                                   : PhaseOutcome::Interrupted);
            wk.pm.close(wk.own_step, outcome);
            metrics.write({global_step, w, MetricsRecord::Kind::Success,
                           {static_cast<double>(outcome),
                            static_cast<double>(wk.phase_len), wk.phase_return}});
            flush_pending(wk, w, outcome);
            metrics.write({global_step, w, MetricsRecord::Kind::Reset,
                           {static_cast<double>(*cause)}});
            ++total_resets;
            sample.terminal = true;
            wk.state = env.reset_full(wk.rng);
            wk.buffer.clear();
            if (wk.detector != nullptr) wk.detector->reset();
            wk.counters = StepCounters{};
            wk.phase_return = 0.0;
            wk.phase_len = 0;
            wk.pm.goal = next_goal(strategy, wk.pm, wk.rng, env, wk.state.object);
          } else if (phase_ended) {
            const PhaseOutcome outcome =
                res.success ? PhaseOutcome::Success : PhaseOutcome::Timeout;
            wk.pm.close(wk.own_step, outcome);
            metrics.write({global_step, w, MetricsRecord::Kind::Success,
                           {static_cast<double>(outcome),
                            static_cast<double>(wk.phase_len), wk.phase_return}});
            flush_pending(wk, w, outcome);
            wk.phase_return = 0.0;
            wk.phase_len = 0;
            if (res.success) {
              sample.terminal = true;
            } else {
              // truncation: bootstrap the old-goal value of the state that
              // carries over into the next phase
              sample.truncated = true;
              const auto boot_obs = env.observe(wk.state, goal);
              PolicyNet::Activations a;
              net.forward(boot_obs.data(), a);
              sample.boot_value = a.value;
            }
            const GoalSpec fresh =
                next_goal(strategy, wk.pm, wk.rng, env, wk.state.object);
            wk.pm.goal = fresh;
            wk.state.step_in_phase = 0;
            wk.buffer.mark_phase_boundary(wk.own_step);
          } else if (t == rollout_len - 1) {
            sample.truncated = true;
            const auto boot_obs = env.observe(wk.state, wk.pm.goal);
            PolicyNet::Activations a;
            net.forward(boot_obs.data(), a);
            sample.boot_value = a.value;
          }
        }
      }

      const GaeResult gae = compute_gae(batch, cfg.learner.gamma, cfg.learner.gae_tau);
      try {
        ppo_update(net, adam, batch, gae, cfg.learner, update_rng);
      } catch (const NonFiniteLossError&) {
        save_checkpoint(
            (std::filesystem::path(out_dir) / "checkpoints" / "ckpt_abort.bin").string(),
            net, adam, agg_steps, config_text);
        throw;
      }

      const std::int64_t prev_agg = agg_steps;
      agg_steps += steps_per_update;
      ++update_index;
      for (int w = 0; w < n_workers; ++w) {
        double mean_reward = 0.0;
        for (int t = 0; t < rollout_len; ++t) mean_reward += batch.at(t, w).reward;
        mean_reward /= rollout_len;
        metrics.write({agg_steps, w, MetricsRecord::Kind::Reward, {mean_reward}});
      }

      const bool at_checkpoint =
          prev_agg / cfg.run.checkpoint_every != agg_steps / cfg.run.checkpoint_every;
      const bool done = agg_steps >= cfg.run.total_steps;
      if (at_checkpoint || done) {
        const std::string ckpt_path =
            (std::filesystem::path(out_dir) / "checkpoints" /
             ("ckpt_" + std::to_string(agg_steps) + ".bin"))
                .string();
        save_checkpoint(ckpt_path, net, adam, agg_steps, config_text);
        const EvalResult ev =
            evaluate(net, cfg.env, EvalMode::Train, cfg.run.eval_tasks, cfg.run.seed);
        metrics.write({agg_steps, -1, MetricsRecord::Kind::Eval,
                       {0.0, ev.success_rate, ev.mean_steps_to_success}});
        if (verbose_) {
          std::cout << "step " << agg_steps << "  resets " << total_resets
                    << "  eval success " << ev.success_rate << std::endl;
        }
        last_eval_ = ev;
      }
    }

    for (int w = 0; w < n_workers; ++w) {
      flush_pending(workers[w], w, PhaseOutcome::Interrupted);
    }
    const std::string final_path =
        (std::filesystem::path(out_dir) / "checkpoints" / "ckpt_final.bin").string();
    save_checkpoint(final_path, net, adam, agg_steps, config_text);
    metrics.flush();

    TrainSummary summary;
    summary.total_steps = agg_steps;
    summary.total_resets = total_resets;
    summary.final_success_rate = last_eval_.success_rate;
    summary.final_checkpoint = final_path;
    summary.metrics_path = (std::filesystem::path(out_dir) / "metrics.txt").string();
    return summary;
  }

 private:
  bool verbose_ = false;
  EvalResult last_eval_;
};

}  // namespace rmrl
