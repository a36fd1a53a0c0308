#include <catch2/catch_amalgamated.hpp>

#include <cmath>

#include "rmrl/rng.hpp"
#include "rmrl/tabletop.hpp"

using namespace rmrl;

namespace {

EnvState make_state(Vec2 gripper, Vec2 object, bool holding = false) {
  EnvState s;
  s.gripper = gripper;
  s.object = object;
  s.holding = holding;
  s.gutter_sensed = object;
  return s;
}

EnvConfig no_slip() {
  EnvConfig cfg;
  cfg.slip_std = 0.0;
  return cfg;
}

}  // namespace

TEST_CASE("reset produces a valid state and is seed deterministic") {
  const TabletopEnv env;
  Rng rng(123);
  const EnvState s = env.reset_full(rng);
  REQUIRE(s.gripper.x >= 0.0);
  REQUIRE(s.gripper.x <= 1.0);
  REQUIRE(s.gripper.y >= 0.0);
  REQUIRE(s.gripper.y <= 1.0);
  REQUIRE(s.object.x >= kTrainLo);
  REQUIRE(s.object.x <= kTrainHi);
  REQUIRE_FALSE(s.holding);
  REQUIRE_FALSE(s.in_gutter);

  Rng rng_a(77), rng_b(77);
  const EnvState a = env.reset_full(rng_a);
  const EnvState b = env.reset_full(rng_b);
  REQUIRE(a.gripper == b.gripper);
  REQUIRE(a.object == b.object);
}

TEST_CASE("different seeds give different object positions") {
  const TabletopEnv env;
  int distinct = 0;
  Rng base(1000);
  EnvState prev = env.reset_full(base);
  for (int seed = 1; seed <= 100; ++seed) {
    Rng rng(seed);
    const EnvState s = env.reset_full(rng);
    if (distance(s.object, prev.object) > 1e-6) ++distinct;
    prev = s;
  }
  REQUIRE(distinct >= 95);
}

TEST_CASE("moves translate the gripper by the step, clamped to the table") {
  const TabletopEnv env(no_slip());
  Rng rng(1);
  EnvState s = make_state({0.5, 0.5}, {0.9, 0.9});
  const GoalSpec goal{GoalKind::Point, {0.2, 0.2}};
  env.step(s, ActionId::MoveXPlus, goal, rng);
  REQUIRE_THAT(s.gripper.x, Catch::Matchers::WithinAbs(0.55, 1e-12));
  REQUIRE(s.gripper.y == 0.5);

  s.gripper = {0.98, 0.5};
  env.step(s, ActionId::MoveXPlus, goal, rng);
  REQUIRE(s.gripper.x == 1.0);
  env.step(s, ActionId::MoveYMinus, goal, rng);
  for (int i = 0; i < 20; ++i) env.step(s, ActionId::MoveYMinus, goal, rng);
  REQUIRE(s.gripper.y == 0.0);
}

TEST_CASE("pickup succeeds inside the grasp radius and snaps the object") {
  const TabletopEnv env(no_slip());
  Rng rng(1);
  const GoalSpec goal{GoalKind::Point, {0.2, 0.2}};

  EnvState s = make_state({0.5, 0.5}, {0.55, 0.5});  // distance 0.05 <= 0.06
  env.step(s, ActionId::PickUp, goal, rng);
  REQUIRE(s.holding);
  REQUIRE(s.object == s.gripper);

  EnvState far = make_state({0.5, 0.5}, {0.57, 0.5});  // distance 0.07 > 0.06
  env.step(far, ActionId::PickUp, goal, rng);
  REQUIRE_FALSE(far.holding);
}

TEST_CASE("a held object rides with the gripper and releases in place") {
  const TabletopEnv env(no_slip());
  Rng rng(1);
  const GoalSpec goal{GoalKind::Point, {0.2, 0.2}};
  EnvState s = make_state({0.5, 0.5}, {0.5, 0.5}, /*holding=*/true);
  env.step(s, ActionId::MoveYPlus, goal, rng);
  REQUIRE(s.object == s.gripper);
  REQUIRE_THAT(s.object.y, Catch::Matchers::WithinAbs(0.55, 1e-12));
  env.step(s, ActionId::Release, goal, rng);
  REQUIRE_FALSE(s.holding);
  REQUIRE_THAT(s.object.y, Catch::Matchers::WithinAbs(0.55, 1e-12));  // no slip
  // release when not holding is a no-op
  const Vec2 before = s.object;
  env.step(s, ActionId::Release, goal, rng);
  REQUIRE(s.object == before);
}

TEST_CASE("walking over a loose object pushes it ahead by the displacement") {
  const TabletopEnv env(no_slip());
  Rng rng(1);
  const GoalSpec goal{GoalKind::Point, {0.2, 0.2}};
  EnvState s = make_state({0.5, 0.5}, {0.52, 0.5});
  env.step(s, ActionId::MoveXPlus, goal, rng);  // runs the object over
  REQUIRE_THAT(s.object.x, Catch::Matchers::WithinAbs(0.57, 1e-12));
  REQUIRE(s.object.y == 0.5);
}

TEST_CASE("approaching and stopping short does not push") {
  const TabletopEnv env(no_slip());
  Rng rng(1);
  const GoalSpec goal{GoalKind::Point, {0.2, 0.2}};
  EnvState s = make_state({0.5, 0.5}, {0.58, 0.5});
  env.step(s, ActionId::MoveXPlus, goal, rng);  // ends 0.03 away, foot beyond segment
  REQUIRE(s.object.x == 0.58);
  REQUIRE_THAT(distance(s.gripper, s.object), Catch::Matchers::WithinAbs(0.03, 1e-12));
  env.step(s, ActionId::PickUp, goal, rng);
  REQUIRE(s.holding);
}

TEST_CASE("an object pushed past the edge is in the gutter for good") {
  const TabletopEnv env(no_slip());
  Rng rng(9);
  const GoalSpec goal{GoalKind::Point, {0.2, 0.2}};
  EnvState s = make_state({0.97, 0.5}, {0.99, 0.5});
  const auto res = env.step(s, ActionId::MoveXPlus, goal, rng);
  REQUIRE(s.in_gutter);
  REQUIRE(res.gt_irreversible);
  REQUIRE(s.object.x > 1.0);
  REQUIRE(s.sensed_object().x == 1.0);  // frozen at the exit point

  // gutter absorption under random fuzzing
  const Vec2 sensed = s.sensed_object();
  for (int i = 0; i < 1000; ++i) {
    const auto a = static_cast<ActionId>(rng.below(kNumActions));
    const auto r = env.step(s, a, goal, rng);
    REQUIRE(s.in_gutter);
    REQUIRE(r.gt_irreversible);
    REQUIRE_FALSE(s.holding);
    REQUIRE(s.sensed_object() == sensed);
    REQUIRE_FALSE(r.success);
  }
}

TEST_CASE("success requires release within tolerance outside the gutter") {
  const TabletopEnv env(no_slip());
  const GoalSpec goal{GoalKind::Point, {0.5, 0.5}};
  REQUIRE(env.success_check(make_state({0.2, 0.2}, {0.5, 0.5}), goal));
  REQUIRE(env.success_check(make_state({0.2, 0.2}, {0.54, 0.5}), goal));
  REQUIRE_FALSE(env.success_check(make_state({0.2, 0.2}, {0.56, 0.5}), goal));
  REQUIRE_FALSE(env.success_check(make_state({0.5, 0.5}, {0.5, 0.5}, true), goal));
  EnvState gutter = make_state({0.2, 0.2}, {0.5, 0.5});
  gutter.in_gutter = true;
  REQUIRE_FALSE(env.success_check(gutter, goal));
}

TEST_CASE("shaping reward follows the distance-difference formula") {
  EnvConfig cfg;
  REQUIRE_THAT(shaping_reward(0.5, 0.3, false, cfg),
               Catch::Matchers::WithinAbs(0.2, 1e-12));
  REQUIRE_THAT(shaping_reward(0.4, 0.4, true, cfg),
               Catch::Matchers::WithinAbs(10.0, 1e-12));
  REQUIRE_THAT(shaping_reward(0.3, 0.5, false, cfg),
               Catch::Matchers::WithinAbs(-0.2, 1e-12));
}

TEST_CASE("rewards telescope over a phase without success") {
  const TabletopEnv env;  // slip noise on
  Rng rng(2024);
  int phases_checked = 0;
  while (phases_checked < 1000) {
    EnvState s = env.reset_full(rng);
    const GoalSpec goal = env.sample_goal(EvalMode::Train, rng, s.object);
    const double d0 = env.goal_distance(s, goal);
    double sum = 0.0;
    bool succeeded = false;
    for (int k = 0; k < 300; ++k) {
      const auto r =
          env.step(s, static_cast<ActionId>(rng.below(kNumActions)), goal, rng);
      sum += r.reward;
      if (r.success) {
        succeeded = true;
        break;
      }
    }
    if (succeeded) continue;
    const double dT = env.goal_distance(s, goal);
    REQUIRE_THAT(sum, Catch::Matchers::WithinAbs(
                          env.config().reward_alpha * (d0 - dT), 1e-9));
    ++phases_checked;
  }
}

TEST_CASE("environment is deterministic with zero slip") {
  const TabletopEnv env(no_slip());
  Rng action_rng(5);
  std::vector<ActionId> actions;
  for (int i = 0; i < 400; ++i) {
    actions.push_back(static_cast<ActionId>(action_rng.below(kNumActions)));
  }
  auto run = [&]() {
    Rng rng(99);
    EnvState s = env.reset_full(rng);
    const GoalSpec goal{GoalKind::Point, {0.3, 0.7}};
    for (const auto a : actions) env.step(s, a, goal, rng);
    return s;
  };
  const EnvState s1 = run();
  const EnvState s2 = run();
  REQUIRE(s1.gripper == s2.gripper);
  REQUIRE(s1.object == s2.object);
  REQUIRE(s1.holding == s2.holding);
  REQUIRE(s1.in_gutter == s2.in_gutter);
}

TEST_CASE("goal sampling respects regions and excludes the success ball") {
  const TabletopEnv env;
  Rng rng(6);
  const Vec2 object{0.5, 0.5};
  for (int i = 0; i < 500; ++i) {
    const GoalSpec g = env.sample_goal(EvalMode::Train, rng, object);
    REQUIRE(g.pos.x >= kTrainLo);
    REQUIRE(g.pos.x <= kTrainHi);
    REQUIRE(g.pos.y >= kTrainLo);
    REQUIRE(g.pos.y <= kTrainHi);
    REQUIRE(distance(g.pos, object) > env.config().success_tol);
  }
  bool outside_train = false;
  for (int i = 0; i < 500; ++i) {
    const GoalSpec g = env.sample_goal(EvalMode::PosOoD, rng, object);
    REQUIRE(g.pos.x >= kOodLo);
    REQUIRE(g.pos.x <= kOodHi);
    if (g.pos.x < kTrainLo || g.pos.x > kTrainHi || g.pos.y < kTrainLo ||
        g.pos.y > kTrainHi) {
      outside_train = true;
    }
  }
  REQUIRE(outside_train);
}

TEST_CASE("soft goal switch leaves the world untouched") {
  const TabletopEnv env(no_slip());
  Rng rng(8);
  EnvState s = env.reset_full(rng);
  s.step_in_phase = 211;
  const GoalSpec goal{GoalKind::Point, {s.object.x + 0.3, s.object.y}};
  const auto [next, task] = soft_goal_switch(env, s, goal);
  REQUIRE(next.gripper == s.gripper);
  REQUIRE(next.object == s.object);
  REQUIRE(next.holding == s.holding);
  REQUIRE(next.in_gutter == s.in_gutter);
  REQUIRE(next.step_in_phase == 0);
  REQUIRE(task.goal == goal);

  const GoalSpec satisfied{GoalKind::Point, s.object};
  REQUIRE_THROWS_AS(soft_goal_switch(env, s, satisfied), std::invalid_argument);

  // a thousand switches never emit a reset: the state never changes
  EnvState cursor = s;
  for (int i = 0; i < 1000; ++i) {
    const GoalSpec g = env.sample_goal(EvalMode::Train, rng, cursor.object);
    const auto [after, t] = soft_goal_switch(env, cursor, g);
    REQUIRE(after.object == cursor.object);
    REQUIRE(after.gripper == cursor.gripper);
    cursor = after;
  }
}

TEST_CASE("random policy succeeds less often from near-edge object starts") {
  const TabletopEnv env;
  Rng rng(31415);
  auto success_rate = [&](bool near_edge) {
    int hits = 0;
    const int rollouts = 1500;
    for (int i = 0; i < rollouts; ++i) {
      EnvState s = env.reset_full(rng);
      if (near_edge) {
        // object within 0.05 of an edge, random side
        const double along = rng.uniform(0.05, 0.95);
        const double off = rng.uniform(0.0, 0.05);
        switch (rng.below(4)) {
          case 0: s.object = {off, along}; break;
          case 1: s.object = {1.0 - off, along}; break;
          case 2: s.object = {along, off}; break;
          default: s.object = {along, 1.0 - off}; break;
        }
      } else {
        s.object = {0.5 + rng.uniform(-0.05, 0.05), 0.5 + rng.uniform(-0.05, 0.05)};
      }
      s.gutter_sensed = s.object;
      const GoalSpec goal = env.sample_goal(EvalMode::Train, rng, s.object);
      for (int k = 0; k < 300; ++k) {
        const auto r =
            env.step(s, static_cast<ActionId>(rng.below(kNumActions)), goal, rng);
        if (r.success) {
          ++hits;
          break;
        }
      }
    }
    return static_cast<double>(hits) / rollouts;
  };
  const double center = success_rate(false);
  const double edge = success_rate(true);
  INFO("center " << center << " edge " << edge);
  REQUIRE(edge < center);
  REQUIRE(edge < 0.75 * center);  // measurably lower, not a statistical sliver
}
