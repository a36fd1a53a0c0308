#include <catch2/catch_amalgamated.hpp>

#include <algorithm>
#include <cmath>

#include "oracles.hpp"
#include "rmrl/measures.hpp"
#include "rmrl/rng.hpp"

using namespace rmrl;

namespace {

std::vector<StateVec> constant_states(std::size_t n, StateVec value) {
  return std::vector<StateVec>(n, value);
}

std::vector<StateVec> random_states(std::size_t n, std::size_t dim, Rng& rng) {
  std::vector<StateVec> out(n);
  for (auto& s : out) {
    s.resize(dim);
    for (auto& v : s) v = rng.uniform();
  }
  return out;
}

}  // namespace

// ---------------------------------------------------------------------------
// std_dispersion
// ---------------------------------------------------------------------------

TEST_CASE("std dispersion of a constant sequence is zero") {
  REQUIRE(std_dispersion(constant_states(5, {0.3, 0.7})) == 0.0);
}

TEST_CASE("std dispersion two-point case") {
  const std::vector<StateVec> states{{0.0, 0.0}, {1.0, 1.0}};
  REQUIRE_THAT(std_dispersion(states), Catch::Matchers::WithinAbs(0.5, 1e-12));
}

TEST_CASE("std dispersion of uniform samples approaches 1/sqrt(12)") {
  Rng rng(7);
  const auto states = random_states(600, 2, rng);
  REQUIRE_THAT(std_dispersion(states),
               Catch::Matchers::WithinAbs(1.0 / std::sqrt(12.0), 0.02));
}

TEST_CASE("std dispersion rejects an empty sequence") {
  REQUIRE_THROWS_AS(std_dispersion({}), std::invalid_argument);
}

// ---------------------------------------------------------------------------
// entropy_dispersion
// ---------------------------------------------------------------------------

TEST_CASE("entropy is zero when all states share one cell") {
  const auto states = constant_states(10, {0.31, 0.32});
  REQUIRE(entropy_dispersion(states, 16, {0.0, 0.0}, {1.0, 1.0}) == 0.0);
}

TEST_CASE("entropy of equal occupancy over 4 cells is ln 4") {
  std::vector<StateVec> states;
  for (int rep = 0; rep < 3; ++rep) {
    states.push_back({0.1, 0.1});
    states.push_back({0.9, 0.1});
    states.push_back({0.1, 0.9});
    states.push_back({0.9, 0.9});
  }
  REQUIRE_THAT(entropy_dispersion(states, 2, {0.0, 0.0}, {1.0, 1.0}),
               Catch::Matchers::WithinAbs(std::log(4.0), 1e-9));
}

TEST_CASE("entropy of cell counts (3,1) matches the histogram formula") {
  const std::vector<StateVec> states{{0.1, 0.1}, {0.1, 0.1}, {0.1, 0.1}, {0.9, 0.9}};
  const double expected = -(0.75 * std::log(0.75) + 0.25 * std::log(0.25));
  REQUIRE_THAT(entropy_dispersion(states, 2, {0.0, 0.0}, {1.0, 1.0}),
               Catch::Matchers::WithinAbs(expected, 1e-12));
  REQUIRE_THAT(expected, Catch::Matchers::WithinAbs(0.5623, 5e-5));
}

TEST_CASE("out-of-bounds states clamp to edge cells") {
  const std::vector<StateVec> inside{{0.01, 0.5}, {0.99, 0.5}};
  const std::vector<StateVec> outside{{-3.0, 0.5}, {4.0, 0.5}};
  REQUIRE(entropy_dispersion(outside, 4, {0.0, 0.0}, {1.0, 1.0}) ==
          entropy_dispersion(inside, 4, {0.0, 0.0}, {1.0, 1.0}));
}

TEST_CASE("entropy rejects an empty sequence") {
  REQUIRE_THROWS_AS(entropy_dispersion({}, 4, {0.0, 0.0}, {1.0, 1.0}),
                    std::invalid_argument);
}

// ---------------------------------------------------------------------------
// dtw_distance
// ---------------------------------------------------------------------------

TEST_CASE("dtw of identical sequences is zero") {
  Rng rng(3);
  const auto a = random_states(8, 2, rng);
  REQUIRE(dtw_distance(a, a) == 0.0);
}

TEST_CASE("dtw single-pair alignment is the point distance") {
  REQUIRE(dtw_distance({{0.0}}, {{3.0}}) == 3.0);
}

TEST_CASE("dtw of [0,1,2] vs [0,2] is 1") {
  const std::vector<StateVec> a{{0.0}, {1.0}, {2.0}};
  const std::vector<StateVec> b{{0.0}, {2.0}};
  REQUIRE(dtw_distance(a, b) == 1.0);
  REQUIRE(oracles::dtw_bruteforce(a, b) == 1.0);
}

TEST_CASE("dtw rejects empty input") {
  REQUIRE_THROWS_AS(dtw_distance({}, {{1.0}}), std::invalid_argument);
  REQUIRE_THROWS_AS(dtw_distance({{1.0}}, {}), std::invalid_argument);
}

TEST_CASE("dtw is symmetric and matches brute force on small sequences") {
  Rng rng(11);
  for (int trial = 0; trial < 60; ++trial) {
    const std::size_t n = 1 + rng.below(8);
    const std::size_t m = 1 + rng.below(8);
    const std::size_t dim = 1 + rng.below(3);
    const auto a = random_states(n, dim, rng);
    const auto b = random_states(m, dim, rng);
    const double d = dtw_distance(a, b);
    REQUIRE_THAT(dtw_distance(b, a), Catch::Matchers::WithinAbs(d, 1e-12));
    REQUIRE_THAT(oracles::dtw_bruteforce(a, b),
                 Catch::Matchers::WithinRel(d, 1e-12));
  }
}

TEST_CASE("dtw is order sensitive") {
  const std::vector<StateVec> a{{0.0}, {1.0}, {2.0}, {3.0}};
  std::vector<StateVec> shuffled{{3.0}, {0.0}, {2.0}, {1.0}};
  REQUIRE(dtw_distance(a, a) == 0.0);
  REQUIRE(dtw_distance(a, shuffled) > 0.0);
}

// ---------------------------------------------------------------------------
// dispersion_decision (Algorithm 1 semantics)
// ---------------------------------------------------------------------------

namespace {

MeasureConfig std_cfg(std::size_t horizon, int n_tol, double eps) {
  MeasureConfig cfg;
  cfg.kind = MeasureKind::Std;
  cfg.horizon = horizon;
  cfg.n_tol = n_tol;
  cfg.threshold = eps;
  return cfg;
}

}  // namespace

TEST_CASE("two consecutive frozen horizons trigger the dispersion detector") {
  const auto cfg = std_cfg(300, 2, 0.01);
  TrajectoryBuffer buf(300, 2);
  DispersionCounter counter;
  bool ni = false;
  std::int64_t ni_step = -1;
  for (int i = 1; i <= 600; ++i) {
    buf.append(i, {0.4, 0.6});
    const auto v = dispersion_decision(buf, cfg, counter);
    if (v.ni) {
      ni = true;
      ni_step = v.checked_at_step;
    }
  }
  REQUIRE(ni);
  REQUIRE(ni_step == 600);
  REQUIRE(counter.n_irr == 0);  // reset after firing
}

TEST_CASE("high-variance second horizon resets the consecutive counter") {
  const auto cfg = std_cfg(300, 2, 0.01);
  TrajectoryBuffer buf(300, 2);
  DispersionCounter counter;
  Rng rng(5);
  bool ni = false;
  for (int i = 1; i <= 300; ++i) {
    buf.append(i, {0.4, 0.6});
    ni = ni || dispersion_decision(buf, cfg, counter).ni;
  }
  REQUIRE(counter.n_irr == 1);
  for (int i = 301; i <= 600; ++i) {
    buf.append(i, {rng.uniform(), rng.uniform()});
    ni = ni || dispersion_decision(buf, cfg, counter).ni;
  }
  REQUIRE_FALSE(ni);
  REQUIRE(counter.n_irr == 0);
}

TEST_CASE("no check below the horizon") {
  const auto cfg = std_cfg(300, 2, 0.01);
  TrajectoryBuffer buf(300, 2);
  DispersionCounter counter;
  for (int i = 1; i <= 299; ++i) {
    buf.append(i, {0.4, 0.6});
    const auto v = dispersion_decision(buf, cfg, counter);
    REQUIRE_FALSE(v.checked);
    REQUIRE_FALSE(v.ni);
  }
  REQUIRE(buf.size() == 299);
}

TEST_CASE("dispersion decision rejects distance kinds") {
  MeasureConfig cfg = std_cfg(300, 2, 0.01);
  cfg.kind = MeasureKind::L2;
  TrajectoryBuffer buf(300, 2);
  DispersionCounter counter;
  REQUIRE_THROWS_AS(dispersion_decision(buf, cfg, counter), std::invalid_argument);
}

// ---------------------------------------------------------------------------
// distance_decision (Algorithm 2 semantics)
// ---------------------------------------------------------------------------

namespace {

MeasureConfig l2_cfg(std::size_t horizon, std::size_t window, double eps) {
  MeasureConfig cfg;
  cfg.kind = MeasureKind::L2;
  cfg.horizon = horizon;
  cfg.window = window;
  cfg.threshold = eps;
  return cfg;
}

}  // namespace

TEST_CASE("600 identical states give d_maxmin 0 and fire the L2 detector") {
  const auto cfg = l2_cfg(600, 100, 0.01);
  TrajectoryBuffer buf(600, 2);
  MeasureVerdict last;
  for (int i = 1; i <= 600; ++i) {
    buf.append(i, {0.5, 0.5});
    const auto v = distance_decision(buf, cfg);
    if (v.checked) last = v;
  }
  REQUIRE(last.checked);
  REQUIRE(last.value == 0.0);
  REQUIRE(last.ni);
  REQUIRE(buf.size() == 0);
}

TEST_CASE("a line of never-revisited states stays above threshold") {
  const auto cfg = l2_cfg(600, 100, 0.05);
  TrajectoryBuffer buf(600, 1);
  MeasureVerdict last;
  for (int i = 0; i < 600; ++i) {
    buf.append(i, {0.1 * i});
    const auto v = distance_decision(buf, cfg);
    if (v.checked) last = v;
  }
  REQUIRE(last.checked);
  REQUIRE(last.value >= 0.1);
  REQUIRE_FALSE(last.ni);
}

TEST_CASE("a frozen recent window already visited in the past fires") {
  const auto cfg = l2_cfg(600, 100, 0.01);
  TrajectoryBuffer buf(600, 2);
  Rng rng(19);
  // diverse prefix passing through (0.5, 0.5), then 100 frozen states there
  for (int i = 0; i < 500; ++i) {
    if (i == 250) {
      buf.append(i, {0.5, 0.5});
    } else {
      buf.append(i, {rng.uniform(), rng.uniform()});
    }
  }
  MeasureVerdict last;
  for (int i = 500; i < 600; ++i) {
    buf.append(i, {0.5, 0.5});
    const auto v = distance_decision(buf, cfg);
    if (v.checked) last = v;
  }
  REQUIRE(last.checked);
  REQUIRE(last.value == 0.0);
  REQUIRE(last.ni);
}

TEST_CASE("distance config requires window < horizon / 2") {
  MeasureConfig cfg = l2_cfg(600, 300, 0.01);
  REQUIRE_THROWS_AS(cfg.validate(), std::invalid_argument);
  REQUIRE_THROWS_AS(NiDetector(cfg), std::invalid_argument);
  cfg.window = 299;
  REQUIRE_NOTHROW(cfg.validate());
}

TEST_CASE("distance decision is order sensitive") {
  const auto cfg = l2_cfg(600, 100, 0.01);
  Rng rng(23);
  std::vector<StateVec> traj;
  for (int i = 0; i < 500; ++i) {
    // past visit of the frozen point planted at index 250
    if (i == 250) traj.push_back({0.5, 0.5});
    else traj.push_back({rng.uniform(), rng.uniform()});
  }
  for (int i = 0; i < 100; ++i) traj.push_back({0.5, 0.5});

  TrajectoryBuffer forward(600, 2), reversed(600, 2);
  for (int i = 0; i < 600; ++i) forward.append(i, traj[i]);
  for (int i = 0; i < 600; ++i) reversed.append(i, traj[599 - i]);
  const auto v_fwd = distance_decision(forward, cfg);
  const auto v_rev = distance_decision(reversed, cfg);
  REQUIRE(v_fwd.ni);
  REQUIRE_FALSE(v_rev.ni);
}

// ---------------------------------------------------------------------------
// dispersion invariants
// ---------------------------------------------------------------------------

TEST_CASE("dispersion measures are permutation invariant") {
  Rng rng(31);
  auto states = random_states(64, 2, rng);
  const double s0 = std_dispersion(states);
  const double e0 = entropy_dispersion(states, 8, {0.0, 0.0}, {1.0, 1.0});
  for (int trial = 0; trial < 5; ++trial) {
    for (std::size_t i = states.size() - 1; i > 0; --i) {
      std::swap(states[i], states[rng.below(i + 1)]);
    }
    REQUIRE_THAT(std_dispersion(states), Catch::Matchers::WithinAbs(s0, 1e-12));
    REQUIRE_THAT(entropy_dispersion(states, 8, {0.0, 0.0}, {1.0, 1.0}),
                 Catch::Matchers::WithinAbs(e0, 1e-12));
  }
}

TEST_CASE("raising the threshold never un-declares NI") {
  Rng rng(37);
  for (int trial = 0; trial < 20; ++trial) {
    // trajectories mixing random walk and frozen stretches
    std::vector<StateVec> traj;
    StateVec pos{rng.uniform(), rng.uniform()};
    bool frozen = false;
    for (int i = 0; i < 900; ++i) {
      if (rng.uniform() < 0.01) frozen = !frozen;
      if (!frozen) {
        pos[0] = std::clamp(pos[0] + rng.uniform(-0.05, 0.05), 0.0, 1.0);
        pos[1] = std::clamp(pos[1] + rng.uniform(-0.05, 0.05), 0.0, 1.0);
      }
      traj.push_back(pos);
    }
    const double eps_low = rng.uniform(0.001, 0.05);
    const double eps_high = eps_low + rng.uniform(0.0, 0.1);
    auto run_detector = [&](double eps) {
      MeasureConfig cfg = std_cfg(300, 2, eps);
      TrajectoryBuffer buf(300, 2);
      DispersionCounter counter;
      bool ni = false;
      for (std::size_t i = 0; i < traj.size(); ++i) {
        buf.append(static_cast<std::int64_t>(i), traj[i]);
        ni = ni || dispersion_decision(buf, cfg, counter).ni;
      }
      return ni;
    };
    if (run_detector(eps_low)) REQUIRE(run_detector(eps_high));
  }
}

// ---------------------------------------------------------------------------
// phi counting
// ---------------------------------------------------------------------------

namespace {

PartitionCountConfig phi_cfg(std::size_t width, double alpha) {
  PartitionCountConfig cfg;
  cfg.block_width = width;
  cfg.alpha = alpha;
  cfg.metric = MeasureKind::Std;
  return cfg;
}

}  // namespace

TEST_CASE("phi of 10 identical states with width 5 is 2") {
  const auto traj = constant_states(10, {0.5, 0.5});
  REQUIRE(phi_count(traj, phi_cfg(5, 0.1)) == 2);
  REQUIRE(oracles::phi_bruteforce(traj, phi_cfg(5, 0.1)) == 2);
}

TEST_CASE("phi of a strictly increasing ramp is 0") {
  std::vector<StateVec> traj;
  for (int i = 0; i < 10; ++i) traj.push_back({static_cast<double>(i)});
  REQUIRE(phi_count(traj, phi_cfg(5, 0.1)) == 0);
  REQUIRE(oracles::phi_bruteforce(traj, phi_cfg(5, 0.1)) == 0);
}

TEST_CASE("phi of 4 identical states with width 5 is 0") {
  REQUIRE(phi_count(constant_states(4, {0.5, 0.5}), phi_cfg(5, 0.1)) == 0);
}

TEST_CASE("phi requires a non-empty trajectory") {
  REQUIRE_THROWS_AS(phi_count({}, phi_cfg(2, 0.1)), std::invalid_argument);
}

TEST_CASE("greedy phi matches exhaustive enumeration on adversarial prefixes") {
  // an outlier prefix must not poison the later tight block
  std::vector<StateVec> traj{{5.0}};
  for (int i = 0; i < 5; ++i) traj.push_back({0.0});
  const auto cfg = phi_cfg(5, 0.1);
  REQUIRE(oracles::phi_bruteforce(traj, cfg) == 1);
  REQUIRE(phi_count(traj, cfg) == 1);
}

TEST_CASE("greedy phi matches enumeration on random mixtures") {
  Rng rng(41);
  for (int trial = 0; trial < 150; ++trial) {
    const std::size_t n = 1 + rng.below(12);
    std::vector<StateVec> traj;
    StateVec pos{rng.uniform()};
    for (std::size_t i = 0; i < n; ++i) {
      if (rng.uniform() < 0.4) pos[0] = rng.uniform();
      traj.push_back(pos);
    }
    PartitionCountConfig cfg = phi_cfg(2 + rng.below(4), rng.uniform(0.0, 0.3));
    cfg.bounds_lo = {0.0};
    cfg.bounds_hi = {1.0};
    if (trial % 3 == 0) {
      cfg.metric = MeasureKind::Ent;
      cfg.bins_per_dim = 4;
      cfg.alpha = rng.uniform(0.0, 0.8);
    }
    REQUIRE(phi_count(traj, cfg) == oracles::phi_bruteforce(traj, cfg));
  }
}

TEST_CASE("phi decision thresholds the count") {
  const auto traj = constant_states(10, {0.5, 0.5});
  REQUIRE(phi_decision(traj, phi_cfg(5, 0.1), 2));
  REQUIRE_FALSE(phi_decision(traj, phi_cfg(5, 0.1), 3));
  std::vector<StateVec> ramp;
  for (int i = 0; i < 10; ++i) ramp.push_back({static_cast<double>(i)});
  REQUIRE_FALSE(phi_decision(ramp, phi_cfg(5, 0.1), 1));
}
