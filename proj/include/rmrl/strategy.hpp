#pragma once

#include <cstdint>
#include <optional>
#include <stdexcept>

#include "rmrl/measures.hpp"
#include "rmrl/tabletop.hpp"
#include "rmrl/trajectory.hpp"

namespace rmrl {

enum class StrategyKind { Episodic, Periodic, MeasureLed, ForwardBackwardGT };

inline const char* to_string(StrategyKind k) {
  switch (k) {
    case StrategyKind::Episodic: return "episodic";
    case StrategyKind::Periodic: return "periodic";
    case StrategyKind::MeasureLed: return "measure_led";
    case StrategyKind::ForwardBackwardGT: return "forward_backward_gt";
  }
  return "?";
}

/// Selects the training regime: when resets fire and where goals come from.
struct StrategyConfig {
  StrategyKind kind = StrategyKind::MeasureLed;
  std::int64_t period = 1000;   // Periodic / ForwardBackwardGT
  int phase_length = 300;       // H, steps per phase without success
  Vec2 forward_goal{0.7, 0.3};  // the fixed task goal g*
  double backward_lo = 0.35;    // designated reset region for backward goals
  double backward_hi = 0.65;
  MeasureConfig measure;        // MeasureLed only

  void validate() const {
    if (phase_length < 1) throw std::invalid_argument("phase_length must be >= 1");
    if (kind == StrategyKind::Periodic || kind == StrategyKind::ForwardBackwardGT) {
      if (period < phase_length) {
        throw std::invalid_argument("period must be >= phase_length");
      }
    }
    if (kind == StrategyKind::MeasureLed) measure.validate();
    if (!(backward_lo < backward_hi)) {
      throw std::invalid_argument("backward region must satisfy lo < hi");
    }
  }
};

struct StepCounters {
  std::int64_t steps_since_reset = 0;
  int steps_in_phase = 0;
  bool phase_ended = false;
};

/// Reset rule of each regime. Resets fire immediately, mid-phase when needed;
/// the ground-truth branch of FB preempts its periodic one.
inline std::optional<ResetCause> should_reset(const StrategyConfig& strategy,
                                              const StepCounters& counters,
                                              const MeasureVerdict& verdict,
                                              bool gt_irreversible) {
  switch (strategy.kind) {
    case StrategyKind::Episodic:
      if (counters.phase_ended) return ResetCause::EpisodicBoundary;
      return std::nullopt;
    case StrategyKind::Periodic:
      if (counters.steps_since_reset >= strategy.period) return ResetCause::Periodic;
      return std::nullopt;
    case StrategyKind::MeasureLed:
      if (verdict.ni) return ResetCause::MeasureNI;
      return std::nullopt;
    case StrategyKind::ForwardBackwardGT:
      if (gt_irreversible) return ResetCause::GroundTruthIrreversible;
      if (counters.steps_since_reset >= strategy.period) return ResetCause::Periodic;
      return std::nullopt;
  }
  return std::nullopt;
}

/// Per-worker phase bookkeeping. The forward/backward direction flips only
/// when a phase completes; an interrupted phase is retried in the same
/// direction, so completed phases alternate strictly.
struct PhaseManager {
  std::int64_t phase_index = 0;
  GoalSpec goal;
  std::int64_t start_step = 0;
  bool fb_forward = true;

  PhaseRecord close(std::int64_t end_step, PhaseOutcome outcome) {
    PhaseRecord rec;
    rec.phase_index = phase_index;
    rec.goal = goal;
    rec.start_step = start_step;
    rec.end_step = end_step;
    rec.outcome = outcome;
    if (outcome != PhaseOutcome::Interrupted) fb_forward = !fb_forward;
    ++phase_index;
    start_step = end_step;
    return rec;
  }
};

/// Goal for the phase that is about to start.
inline GoalSpec next_goal(const StrategyConfig& strategy, const PhaseManager& pm,
                          Rng& rng, const TabletopEnv& env, const Vec2& object_pos) {
  switch (strategy.kind) {
    case StrategyKind::Episodic:
      return {GoalKind::Point, strategy.forward_goal};
    case StrategyKind::Periodic:
    case StrategyKind::MeasureLed:
      return env.sample_goal(EvalMode::Train, rng, object_pos);
    case StrategyKind::ForwardBackwardGT:
      if (pm.fb_forward) return {GoalKind::Point, strategy.forward_goal};
      return env.sample_point_goal(strategy.backward_lo, strategy.backward_hi, rng,
                                   object_pos, GoalKind::InitialState);
  }
  return {GoalKind::Point, strategy.forward_goal};
}

}  // namespace rmrl
