#pragma once

#include <cmath>
#include <cstdint>
#include <deque>
#include <ostream>
#include <stdexcept>
#include <string>
#include <vector>

#include "rmrl/geom.hpp"

namespace rmrl {

using StateVec = std::vector<double>;

enum class PhaseOutcome { Success, Timeout, Interrupted };

enum class ResetCause {
  Initial,
  Periodic,
  MeasureNI,
  GroundTruthIrreversible,
  EpisodicBoundary,
};

inline const char* to_string(ResetCause c) {
  switch (c) {
    case ResetCause::Initial: return "initial";
    case ResetCause::Periodic: return "periodic";
    case ResetCause::MeasureNI: return "measure_ni";
    case ResetCause::GroundTruthIrreversible: return "gt_irreversible";
    case ResetCause::EpisodicBoundary: return "episodic";
  }
  return "?";
}

inline const char* to_string(PhaseOutcome o) {
  switch (o) {
    case PhaseOutcome::Success: return "success";
    case PhaseOutcome::Timeout: return "timeout";
    case PhaseOutcome::Interrupted: return "interrupted";
  }
  return "?";
}

struct ResetEvent {
  std::int64_t step = 0;
  int worker = 0;
  ResetCause cause = ResetCause::Initial;
};

/// One period between goal switches. Phases of a worker tile its step axis:
/// phase i+1 starts at the step where phase i ended.
struct PhaseRecord {
  std::int64_t phase_index = 0;
  GoalSpec goal;
  std::int64_t start_step = 0;
  std::int64_t end_step = 0;
  PhaseOutcome outcome = PhaseOutcome::Timeout;
};

/// Bounded, append-only window of recent states. One buffer per worker;
/// everything the irreversibility measures see flows through here.
///
/// Entries keep strictly increasing step indices and a fixed dimension;
/// eviction is oldest-first once capacity is reached.
class TrajectoryBuffer {
 public:
  TrajectoryBuffer(std::size_t capacity, std::size_t dim)
      : capacity_(capacity), dim_(dim) {
    if (capacity == 0) throw std::invalid_argument("buffer capacity must be positive");
    if (dim == 0) throw std::invalid_argument("buffer dimension must be positive");
  }

  std::size_t capacity() const { return capacity_; }
  std::size_t dim() const { return dim_; }
  std::size_t size() const { return entries_.size(); }
  bool empty() const { return entries_.empty(); }

  void append(std::int64_t step, const StateVec& s) {
    if (s.size() != dim_) {
      throw std::invalid_argument("state dimension " + std::to_string(s.size()) +
                                  " does not match buffer dimension " +
                                  std::to_string(dim_));
    }
    for (double v : s) {
      if (!std::isfinite(v)) throw std::invalid_argument("non-finite state entry");
    }
    if (!entries_.empty() && step <= steps_.back()) {
      throw std::invalid_argument("step indices must be strictly increasing");
    }
    if (entries_.size() == capacity_) {
      entries_.pop_front();
      steps_.pop_front();
      prune_boundaries();
    }
    entries_.push_back(s);
    steps_.push_back(step);
  }

  /// Appends with the next step index (last + 1, starting at 0).
  void append(const StateVec& s) {
    append(entries_.empty() ? 0 : steps_.back() + 1, s);
  }

  const StateVec& at(std::size_t i) const { return entries_.at(i); }
  std::int64_t step_at(std::size_t i) const { return steps_.at(i); }
  std::int64_t last_step() const {
    if (steps_.empty()) throw std::out_of_range("empty buffer");
    return steps_.back();
  }

  /// Most recent k states in chronological order.
  std::vector<StateVec> window(std::size_t k) const {
    if (k > entries_.size()) {
      throw std::out_of_range("window of " + std::to_string(k) +
                              " exceeds buffer length " +
                              std::to_string(entries_.size()));
    }
    return std::vector<StateVec>(entries_.end() - static_cast<std::ptrdiff_t>(k),
                                 entries_.end());
  }

  std::vector<StateVec> contents() const {
    return std::vector<StateVec>(entries_.begin(), entries_.end());
  }

  void clear() {
    entries_.clear();
    steps_.clear();
    boundaries_.clear();
  }

  void mark_phase_boundary(std::int64_t step) { boundaries_.push_back(step); }

  /// Phase boundary marks still inside the retained window.
  std::vector<std::int64_t> phase_boundaries() const {
    return std::vector<std::int64_t>(boundaries_.begin(), boundaries_.end());
  }

  /// Flat text table: step dim0 .. dimD-1, one row per retained state.
  void write_table(std::ostream& os) const {
    for (std::size_t i = 0; i < entries_.size(); ++i) {
      os << steps_[i];
      for (double v : entries_[i]) os << ' ' << v;
      os << '\n';
    }
  }

 private:
  void prune_boundaries() {
    while (!boundaries_.empty() && !steps_.empty() &&
           boundaries_.front() < steps_.front()) {
      boundaries_.pop_front();
    }
  }

  std::size_t capacity_;
  std::size_t dim_;
  std::deque<StateVec> entries_;
  std::deque<std::int64_t> steps_;
  std::deque<std::int64_t> boundaries_;
};

}  // namespace rmrl
