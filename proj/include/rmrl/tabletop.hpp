#pragma once

#include <array>
#include <cmath>
#include <stdexcept>

#include "rmrl/geom.hpp"
#include "rmrl/rng.hpp"

namespace rmrl {

/// Planar pick-and-place on a unit table. The gripper moves in cardinal
/// steps, can run a loose object over (pushing it ahead), pick it up inside
/// the grasp radius, and release it with a small random roll. An object past
/// the table edge drops into the gutter and can never come back.
struct EnvConfig {
  double move_step = 0.05;
  double grasp_radius = 0.06;
  double success_tol = 0.05;
  double gutter_margin = 0.0;
  double slip_std = 0.02;
  int max_phase_steps = 300;
  double reward_alpha = 1.0;
  double reward_beta = 10.0;

  void validate() const {
    if (move_step <= 0.0) throw std::invalid_argument("move_step must be > 0");
    if (success_tol <= 0.0) throw std::invalid_argument("success_tol must be > 0");
    if (max_phase_steps < 1) throw std::invalid_argument("max_phase_steps must be >= 1");
    if (grasp_radius < 0.0 || grasp_radius > 1.0 || move_step > 1.0 ||
        success_tol > 1.0 || gutter_margin < 0.0 || gutter_margin > 1.0 ||
        slip_std < 0.0 || slip_std > 1.0) {
      throw std::invalid_argument("spatial parameters must lie within [0, 1]");
    }
  }
};

enum class ActionId {
  MoveXPlus,
  MoveXMinus,
  MoveYPlus,
  MoveYMinus,
  PickUp,
  Release,
};

inline constexpr int kNumActions = 6;
inline constexpr int kObsDim = 7;

// goal sampling regions (unit table)
inline constexpr double kTrainLo = 0.2;
inline constexpr double kTrainHi = 0.8;
inline constexpr double kOodLo = 0.05;
inline constexpr double kOodHi = 0.95;

enum class EvalMode { Train, PosOoD };

struct TaskSpec {
  GoalSpec goal;
  EvalMode mode = EvalMode::Train;
};

struct EnvState {
  Vec2 gripper;
  Vec2 object;
  bool holding = false;
  bool in_gutter = false;
  Vec2 gutter_sensed;  // where the object was last seen on the table
  int step_in_phase = 0;

  /// Object position as the agent senses it; frozen at the table edge once
  /// the object is in the gutter.
  Vec2 sensed_object() const { return in_gutter ? gutter_sensed : object; }
};

struct StepResult {
  double reward = 0.0;
  bool success = false;
  bool gt_irreversible = false;
};

inline double shaping_reward(double d_prev, double d_curr, bool success,
                             const EnvConfig& cfg) {
  return cfg.reward_alpha * (d_prev - d_curr) + (success ? cfg.reward_beta : 0.0);
}

class TabletopEnv {
 public:
  explicit TabletopEnv(EnvConfig cfg = {}) : cfg_(cfg) { cfg_.validate(); }

  const EnvConfig& config() const { return cfg_; }

  EnvState reset_full(Rng& rng) const {
    EnvState s;
    s.gripper = {rng.uniform(0.3, 0.7), rng.uniform(0.3, 0.7)};
    s.object = {rng.uniform(kTrainLo, kTrainHi), rng.uniform(kTrainLo, kTrainHi)};
    s.holding = false;
    s.in_gutter = false;
    s.gutter_sensed = s.object;
    s.step_in_phase = 0;
    return s;
  }

  bool success_check(const EnvState& s, const GoalSpec& goal) const {
    return !s.holding && !s.in_gutter &&
           distance(s.object, goal.pos) <= cfg_.success_tol;
  }

  /// Distance term of the shaped reward: gripper-to-object plus
  /// object-to-goal, on the sensed object position.
  double goal_distance(const EnvState& s, const GoalSpec& goal) const {
    const Vec2 obj = s.sensed_object();
    return distance(s.gripper, obj) + distance(obj, goal.pos);
  }

  StepResult step(EnvState& s, ActionId action, const GoalSpec& goal,
                  Rng& rng) const {
    const double d_prev = goal_distance(s, goal);
    switch (action) {
      case ActionId::MoveXPlus: apply_move(s, {cfg_.move_step, 0.0}); break;
      case ActionId::MoveXMinus: apply_move(s, {-cfg_.move_step, 0.0}); break;
      case ActionId::MoveYPlus: apply_move(s, {0.0, cfg_.move_step}); break;
      case ActionId::MoveYMinus: apply_move(s, {0.0, -cfg_.move_step}); break;
      case ActionId::PickUp:
        if (!s.holding && !s.in_gutter &&
            distance(s.gripper, s.object) <= cfg_.grasp_radius) {
          s.holding = true;
          s.object = s.gripper;
        }
        break;
      case ActionId::Release:
        if (s.holding) {
          s.holding = false;
          s.object = s.object + Vec2{rng.normal(cfg_.slip_std), rng.normal(cfg_.slip_std)};
          settle_object(s);
        }
        break;
    }
    ++s.step_in_phase;
    StepResult r;
    r.success = success_check(s, goal);
    r.gt_irreversible = s.in_gutter;
    r.reward = shaping_reward(d_prev, goal_distance(s, goal), r.success, cfg_);
    return r;
  }

  std::array<double, kObsDim> observe(const EnvState& s, const GoalSpec& goal) const {
    const Vec2 obj = s.sensed_object();
    return {s.gripper.x,
            s.gripper.y,
            obj.x - s.gripper.x,
            obj.y - s.gripper.y,
            goal.pos.x - s.gripper.x,
            goal.pos.y - s.gripper.y,
            s.holding ? 1.0 : 0.0};
  }

  /// Uniform point in the mode's region, resampled until it is not already
  /// satisfied by the given object position. Falls back to the farthest
  /// region corner after 100 rejections.
  GoalSpec sample_goal(EvalMode mode, Rng& rng, const Vec2& object_pos) const {
    const double lo = mode == EvalMode::Train ? kTrainLo : kOodLo;
    const double hi = mode == EvalMode::Train ? kTrainHi : kOodHi;
    return sample_point_goal(lo, hi, rng, object_pos, GoalKind::Point);
  }

  GoalSpec sample_point_goal(double lo, double hi, Rng& rng, const Vec2& object_pos,
                             GoalKind kind) const {
    for (int attempt = 0; attempt < 100; ++attempt) {
      const Vec2 g{rng.uniform(lo, hi), rng.uniform(lo, hi)};
      if (distance(g, object_pos) > cfg_.success_tol) return {kind, g};
    }
    Vec2 best{lo, lo};
    double best_d = -1.0;
    for (const Vec2 corner : {Vec2{lo, lo}, Vec2{lo, hi}, Vec2{hi, lo}, Vec2{hi, hi}}) {
      const double d = distance(corner, object_pos);
      if (d > best_d) {
        best_d = d;
        best = corner;
      }
    }
    return {kind, best};
  }

 private:
  void apply_move(EnvState& s, Vec2 delta) const {
    const Vec2 g0 = s.gripper;
    const Vec2 g1 = clamp_to_unit(g0 + delta);
    if (s.holding) {
      s.object = g1;
    } else if (!s.in_gutter) {
      // The object is shoved ahead only when the gripper actually runs it
      // over: the perpendicular foot of the object on the motion segment
      // must fall inside the segment. Approaching and stopping short leaves
      // the object in place, which is what makes a grasp reachable.
      const Vec2 seg = g1 - g0;
      const double len2 = seg.dot(seg);
      if (len2 > 0.0) {
        const double t = (s.object - g0).dot(seg) / len2;
        if (t >= 0.0 && t <= 1.0 &&
            distance(s.object, g0 + seg * t) <= cfg_.grasp_radius) {
          s.object = s.object + (g1 - g0);
          settle_object(s);
        }
      }
    }
    s.gripper = g1;
  }

  void settle_object(EnvState& s) const {
    const double m = cfg_.gutter_margin;
    if (s.object.x < -m || s.object.x > 1.0 + m || s.object.y < -m ||
        s.object.y > 1.0 + m) {
      if (!s.in_gutter) s.gutter_sensed = clamp_to_unit(s.object);
      s.in_gutter = true;
      s.holding = false;
    }
  }

  EnvConfig cfg_;
};

/// Issues a new goal without touching the world; only the phase step counter
/// restarts. Throws if the goal would be satisfied immediately.
inline std::pair<EnvState, TaskSpec> soft_goal_switch(const TabletopEnv& env,
                                                      const EnvState& s,
                                                      const GoalSpec& goal,
                                                      EvalMode mode = EvalMode::Train) {
  if (env.success_check(s, goal)) {
    throw std::invalid_argument("soft_goal_switch: goal already satisfied");
  }
  EnvState next = s;
  next.step_in_phase = 0;
  return {next, TaskSpec{goal, mode}};
}

}  // namespace rmrl
