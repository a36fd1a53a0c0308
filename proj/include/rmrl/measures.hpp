#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <limits>
#include <stdexcept>
#include <unordered_map>
#include <vector>

#include "rmrl/trajectory.hpp"

namespace rmrl {

enum class MeasureKind { Std, Ent, L2, Dtw };

inline const char* to_string(MeasureKind k) {
  switch (k) {
    case MeasureKind::Std: return "std";
    case MeasureKind::Ent: return "ent";
    case MeasureKind::L2: return "l2";
    case MeasureKind::Dtw: return "dtw";
  }
  return "?";
}

inline bool is_dispersion_kind(MeasureKind k) {
  return k == MeasureKind::Std || k == MeasureKind::Ent;
}

/// Parameters of one irreversibility detector.
///
/// horizon is the trajectory length per check (N); window is the recent
/// slice length of the distance-based check (M) and must satisfy M < N/2.
/// threshold is the decision epsilon; n_tol the number of consecutive
/// low-dispersion checks required before declaring near-irreversibility.
struct MeasureConfig {
  MeasureKind kind = MeasureKind::Std;
  std::size_t horizon = 300;
  std::size_t window = 100;
  double threshold = 0.01;
  int n_tol = 2;
  int bins_per_dim = 16;
  std::vector<double> bounds_lo{0.0, 0.0};
  std::vector<double> bounds_hi{1.0, 1.0};

  void validate() const {
    if (horizon == 0) throw std::invalid_argument("measure horizon must be positive");
    if (threshold < 0.0) throw std::invalid_argument("measure threshold must be >= 0");
    if (n_tol < 1) throw std::invalid_argument("n_tol must be >= 1");
    if (!is_dispersion_kind(kind)) {
      if (window == 0) throw std::invalid_argument("measure window must be positive");
      if (2 * window >= horizon) {
        throw std::invalid_argument("measure window must be < horizon / 2");
      }
    }
    if (kind == MeasureKind::Ent) {
      if (bins_per_dim < 1) throw std::invalid_argument("bins_per_dim must be >= 1");
      if (bounds_lo.size() != bounds_hi.size()) {
        throw std::invalid_argument("entropy bounds dimensions differ");
      }
      for (std::size_t d = 0; d < bounds_lo.size(); ++d) {
        if (!(bounds_lo[d] < bounds_hi[d])) {
          throw std::invalid_argument("entropy bounds must satisfy lo < hi");
        }
      }
    }
  }
};

struct MeasureVerdict {
  double value = 0.0;
  bool ni = false;
  bool checked = false;
  std::int64_t checked_at_step = -1;
};

// ---------------------------------------------------------------------------
// Diversity measures
// ---------------------------------------------------------------------------

/// Mean over dimensions of the per-coordinate population standard deviation.
inline double std_dispersion(const std::vector<StateVec>& states) {
  if (states.empty()) throw std::invalid_argument("std_dispersion: empty sequence");
  const std::size_t n = states.size();
  const std::size_t dim = states.front().size();
  double acc = 0.0;
  for (std::size_t d = 0; d < dim; ++d) {
    double mean = 0.0;
    for (const auto& s : states) {
      if (s.size() != dim) throw std::invalid_argument("std_dispersion: ragged states");
      mean += s[d];
    }
    mean /= static_cast<double>(n);
    double var = 0.0;
    for (const auto& s : states) {
      const double dv = s[d] - mean;
      var += dv * dv;
    }
    acc += std::sqrt(var / static_cast<double>(n));
  }
  return acc / static_cast<double>(dim);
}

/// Shannon entropy (nats) of the empirical joint-cell distribution after
/// equal-width discretization. States outside the bounds land in edge cells.
inline double entropy_dispersion(const std::vector<StateVec>& states,
                                 int bins_per_dim,
                                 const std::vector<double>& lo,
                                 const std::vector<double>& hi) {
  if (states.empty()) throw std::invalid_argument("entropy_dispersion: empty sequence");
  if (bins_per_dim < 1) throw std::invalid_argument("entropy_dispersion: bins < 1");
  const std::size_t dim = states.front().size();
  if (lo.size() < dim || hi.size() < dim) {
    throw std::invalid_argument("entropy_dispersion: bounds dimension too small");
  }
  std::unordered_map<std::uint64_t, std::size_t> counts;
  for (const auto& s : states) {
    if (s.size() != dim) throw std::invalid_argument("entropy_dispersion: ragged states");
    std::uint64_t cell = 0;
    for (std::size_t d = 0; d < dim; ++d) {
      const double width = (hi[d] - lo[d]) / bins_per_dim;
      auto idx = static_cast<std::int64_t>(std::floor((s[d] - lo[d]) / width));
      idx = std::clamp<std::int64_t>(idx, 0, bins_per_dim - 1);
      cell = cell * static_cast<std::uint64_t>(bins_per_dim) +
             static_cast<std::uint64_t>(idx);
    }
    ++counts[cell];
  }
  const double n = static_cast<double>(states.size());
  double h = 0.0;
  for (const auto& [cell, c] : counts) {
    (void)cell;
    const double p = static_cast<double>(c) / n;
    h -= p * std::log(p);
  }
  return h;
}

inline double euclidean(const StateVec& a, const StateVec& b) {
  if (a.size() != b.size()) throw std::invalid_argument("state dimensions differ");
  double acc = 0.0;
  for (std::size_t d = 0; d < a.size(); ++d) {
    const double dv = a[d] - b[d];
    acc += dv * dv;
  }
  return std::sqrt(acc);
}

/// Classic dynamic-time-warping distance with Euclidean local cost.
/// Alignment starts at (first, first), ends at (last, last); moves advance
/// a, b, or both. Returns the total accumulated cost.
inline double dtw_distance(const std::vector<StateVec>& a,
                           const std::vector<StateVec>& b) {
  if (a.empty() || b.empty()) throw std::invalid_argument("dtw_distance: empty sequence");
  const std::size_t n = a.size(), m = b.size();
  const double inf = std::numeric_limits<double>::infinity();
  std::vector<double> prev(m), curr(m);
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = 0; j < m; ++j) {
      const double c = euclidean(a[i], b[j]);
      double best;
      if (i == 0 && j == 0) {
        best = 0.0;
      } else {
        best = inf;
        if (i > 0) best = std::min(best, prev[j]);
        if (j > 0) best = std::min(best, curr[j - 1]);
        if (i > 0 && j > 0) best = std::min(best, prev[j - 1]);
      }
      curr[j] = c + best;
    }
    std::swap(prev, curr);
  }
  return prev[m - 1];
}

// ---------------------------------------------------------------------------
// Online decision procedures
// ---------------------------------------------------------------------------

/// Consecutive-low-dispersion counter carried between checks.
struct DispersionCounter {
  int n_irr = 0;
};

namespace detail {

inline double dispersion_value(const std::vector<StateVec>& traj,
                               const MeasureConfig& cfg) {
  if (cfg.kind == MeasureKind::Std) return std_dispersion(traj);
  return entropy_dispersion(traj, cfg.bins_per_dim, cfg.bounds_lo, cfg.bounds_hi);
}

/// Algorithm value of the distance-based check over a full horizon:
/// L2: max over the recent window of the min distance to the past;
/// Dtw: dtw(window, past) normalized by the window length.
inline double distance_value(const std::vector<StateVec>& traj,
                             const MeasureConfig& cfg) {
  const std::size_t n_hor = traj.size();
  const std::size_t m = cfg.window;
  if (n_hor < 2 * m + 1) throw std::invalid_argument("distance_value: horizon too short");
  if (cfg.kind == MeasureKind::Dtw) {
    const std::vector<StateVec> recent(traj.end() - static_cast<std::ptrdiff_t>(m),
                                       traj.end());
    const std::vector<StateVec> past(traj.begin(),
                                     traj.end() - static_cast<std::ptrdiff_t>(m));
    return dtw_distance(recent, past) / static_cast<double>(m);
  }
  double d_maxmin = 0.0;
  for (std::size_t i = 0; i < m; ++i) {
    const StateVec& s = traj[n_hor - m + i];
    const std::size_t past_end = n_hor - 2 * m + i;
    double d_min = std::numeric_limits<double>::infinity();
    for (std::size_t j = 0; j < past_end; ++j) {
      d_min = std::min(d_min, euclidean(s, traj[j]));
    }
    d_maxmin = std::max(d_maxmin, d_min);
  }
  return d_maxmin;
}

}  // namespace detail

/// Raw measure value on a full-horizon trajectory, as used by the online
/// decisions and by threshold calibration.
inline double measure_value(const std::vector<StateVec>& traj,
                            const MeasureConfig& cfg) {
  if (is_dispersion_kind(cfg.kind)) return detail::dispersion_value(traj, cfg);
  return detail::distance_value(traj, cfg);
}

/// Dispersion-based check. A no-op until the buffer holds a full horizon;
/// then computes the dispersion, updates the consecutive-low counter, clears
/// the buffer, and reports NI exactly when the counter reaches n_tol.
inline MeasureVerdict dispersion_decision(TrajectoryBuffer& buffer,
                                          const MeasureConfig& cfg,
                                          DispersionCounter& counter) {
  if (!is_dispersion_kind(cfg.kind)) {
    throw std::invalid_argument("dispersion_decision: kind must be Std or Ent");
  }
  MeasureVerdict v;
  if (buffer.size() < cfg.horizon) return v;
  const auto traj = buffer.window(cfg.horizon);
  v.checked = true;
  v.checked_at_step = buffer.last_step();
  v.value = detail::dispersion_value(traj, cfg);
  if (v.value < cfg.threshold) {
    ++counter.n_irr;
    if (counter.n_irr >= cfg.n_tol) {
      v.ni = true;
      counter.n_irr = 0;
    }
  } else {
    counter.n_irr = 0;
  }
  buffer.clear();
  return v;
}

/// Distance-based check. A no-op until the buffer holds a full horizon;
/// then flags NI when every state of the recent window sits within
/// threshold of the earlier history. Clears the buffer after evaluation.
inline MeasureVerdict distance_decision(TrajectoryBuffer& buffer,
                                        const MeasureConfig& cfg) {
  if (is_dispersion_kind(cfg.kind)) {
    throw std::invalid_argument("distance_decision: kind must be L2 or Dtw");
  }
  cfg.validate();
  MeasureVerdict v;
  if (buffer.size() < cfg.horizon) return v;
  const auto traj = buffer.window(cfg.horizon);
  v.checked = true;
  v.checked_at_step = buffer.last_step();
  v.value = detail::distance_value(traj, cfg);
  v.ni = v.value < cfg.threshold;
  buffer.clear();
  return v;
}

/// Stateful wrapper dispatching to the configured decision procedure.
class NiDetector {
 public:
  explicit NiDetector(MeasureConfig cfg) : cfg_(std::move(cfg)) { cfg_.validate(); }

  MeasureVerdict observe(TrajectoryBuffer& buffer) {
    if (is_dispersion_kind(cfg_.kind)) {
      return dispersion_decision(buffer, cfg_, counter_);
    }
    return distance_decision(buffer, cfg_);
  }

  void reset() { counter_.n_irr = 0; }

  const MeasureConfig& config() const { return cfg_; }

 private:
  MeasureConfig cfg_;
  DispersionCounter counter_;
};

// ---------------------------------------------------------------------------
// Partition counting
// ---------------------------------------------------------------------------

/// Parameters of the block-counting function. The block width and the
/// decision count are distinct parameters here.
struct PartitionCountConfig {
  std::size_t block_width = 2;
  int count_threshold = 1;
  double alpha = 0.0;
  MeasureKind metric = MeasureKind::Std;
  int bins_per_dim = 16;
  std::vector<double> bounds_lo{0.0, 0.0};
  std::vector<double> bounds_hi{1.0, 1.0};

  void validate() const {
    if (block_width < 2) throw std::invalid_argument("block_width must be >= 2");
    if (count_threshold < 1) throw std::invalid_argument("count_threshold must be >= 1");
    if (alpha < 0.0) throw std::invalid_argument("alpha must be >= 0");
    if (!is_dispersion_kind(metric)) {
      throw std::invalid_argument("partition metric must be Std or Ent");
    }
  }
};

/// Maximum number of disjoint contiguous blocks of width >= block_width whose
/// internal diversity is below alpha, over all partitions of the trajectory.
///
/// Scanned left to right, closing the earliest-ending qualifying block first;
/// the count of disjoint qualifying intervals picked that way is maximal, so
/// the scan matches exhaustive partition enumeration.
inline int phi_count(const std::vector<StateVec>& trajectory,
                     const PartitionCountConfig& cfg) {
  cfg.validate();
  if (trajectory.empty()) throw std::invalid_argument("phi_count: empty trajectory");
  const std::size_t n = trajectory.size();
  const std::size_t w = cfg.block_width;
  if (n < w) return 0;

  int count = 0;
  std::size_t base = 0;
  if (cfg.metric == MeasureKind::Std) {
    const std::size_t dim = trajectory.front().size();
    // prefix sums per dimension for O(1) block variance
    std::vector<std::vector<double>> s1(dim, std::vector<double>(n + 1, 0.0));
    std::vector<std::vector<double>> s2(dim, std::vector<double>(n + 1, 0.0));
    for (std::size_t i = 0; i < n; ++i) {
      if (trajectory[i].size() != dim) {
        throw std::invalid_argument("phi_count: ragged trajectory");
      }
      for (std::size_t d = 0; d < dim; ++d) {
        s1[d][i + 1] = s1[d][i] + trajectory[i][d];
        s2[d][i + 1] = s2[d][i] + trajectory[i][d] * trajectory[i][d];
      }
    }
    auto block_std = [&](std::size_t p, std::size_t q) {  // [p, q] inclusive
      const double len = static_cast<double>(q - p + 1);
      double acc = 0.0;
      for (std::size_t d = 0; d < dim; ++d) {
        const double sum = s1[d][q + 1] - s1[d][p];
        const double sq = s2[d][q + 1] - s2[d][p];
        const double var = std::max(0.0, sq / len - (sum / len) * (sum / len));
        acc += std::sqrt(var);
      }
      return acc / static_cast<double>(dim);
    };
    for (std::size_t q = w - 1; q < n; ++q) {
      bool found = false;
      for (std::size_t p = base; p + w <= q + 1; ++p) {
        if (block_std(p, q) < cfg.alpha) {
          found = true;
          break;
        }
      }
      if (found) {
        ++count;
        base = q + 1;
      }
    }
  } else {
    const std::size_t dim = trajectory.front().size();
    std::vector<std::uint64_t> cells(n);
    for (std::size_t i = 0; i < n; ++i) {
      if (trajectory[i].size() != dim) {
        throw std::invalid_argument("phi_count: ragged trajectory");
      }
      std::uint64_t cell = 0;
      for (std::size_t d = 0; d < dim; ++d) {
        const double width = (cfg.bounds_hi[d] - cfg.bounds_lo[d]) / cfg.bins_per_dim;
        auto idx = static_cast<std::int64_t>(
            std::floor((trajectory[i][d] - cfg.bounds_lo[d]) / width));
        idx = std::clamp<std::int64_t>(idx, 0, cfg.bins_per_dim - 1);
        cell = cell * static_cast<std::uint64_t>(cfg.bins_per_dim) +
               static_cast<std::uint64_t>(idx);
      }
      cells[i] = cell;
    }
    for (std::size_t q = w - 1; q < n; ++q) {
      bool found = false;
      if (q + 1 >= base + w) {
        // widen [p, q] from the narrowest start downward; H = ln n - S/n
        // with S = sum c*ln(c) kept incrementally
        std::unordered_map<std::uint64_t, std::size_t> counts;
        double s = 0.0;
        std::size_t len = 0;
        std::size_t p = q + 1;
        auto add = [&](std::size_t i) {
          std::size_t& c = counts[cells[i]];
          if (c > 0) s -= static_cast<double>(c) * std::log(static_cast<double>(c));
          ++c;
          s += static_cast<double>(c) * std::log(static_cast<double>(c));
          ++len;
        };
        while (p > q - w + 1) add(--p);
        while (true) {
          const double h = std::log(static_cast<double>(len)) -
                           s / static_cast<double>(len);
          if (h < cfg.alpha) {
            found = true;
            break;
          }
          if (p == base) break;
          add(--p);
        }
      }
      if (found) {
        ++count;
        base = q + 1;
      }
    }
  }
  return count;
}

inline bool phi_decision(const std::vector<StateVec>& trajectory,
                         const PartitionCountConfig& cfg, int count_threshold) {
  return phi_count(trajectory, cfg) >= count_threshold;
}

inline bool phi_decision(const std::vector<StateVec>& trajectory,
                         const PartitionCountConfig& cfg) {
  return phi_decision(trajectory, cfg, cfg.count_threshold);
}

}  // namespace rmrl
