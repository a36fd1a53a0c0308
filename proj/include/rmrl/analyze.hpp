#pragma once

#include <algorithm>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <sstream>
#include <string>
#include <vector>

#include "rmrl/metrics.hpp"

namespace rmrl {

struct AnalyzeOptions {
  int smooth_window = 1;
  std::string out_dir;  // empty: write next to each run's metrics
};

namespace detail {

struct EvalPoint {
  std::int64_t step;
  double success;
};

inline double smoothed(const std::vector<EvalPoint>& pts, std::size_t i, int window) {
  const std::size_t lo = i + 1 >= static_cast<std::size_t>(window) ? i + 1 - window : 0;
  double acc = 0.0;
  for (std::size_t j = lo; j <= i; ++j) acc += pts[j].success;
  return acc / static_cast<double>(i - lo + 1);
}

}  // namespace detail

/// Emits curve tables and the object point cloud for one run directory.
/// Returns the cumulative reset count found in the metrics.
inline std::int64_t analyze_run(const std::string& run_dir, const AnalyzeOptions& opt) {
  namespace fs = std::filesystem;
  const std::string metrics_path = (fs::path(run_dir) / "metrics.txt").string();
  const auto records = parse_metrics(metrics_path);
  if (records.empty()) throw std::runtime_error("empty metrics file: " + metrics_path);

  std::vector<detail::EvalPoint> evals;
  std::vector<std::int64_t> reset_steps;
  for (const auto& r : records) {
    if (r.kind == MetricsRecord::Kind::Eval && r.payload.size() >= 2 &&
        r.payload[0] == 0.0) {
      evals.push_back({r.step, r.payload[1]});
    } else if (r.kind == MetricsRecord::Kind::Reset) {
      reset_steps.push_back(r.step);
    }
  }
  std::sort(reset_steps.begin(), reset_steps.end());

  auto out_path = [&](const std::string& name) {
    if (opt.out_dir.empty()) return (fs::path(run_dir) / name).string();
    fs::create_directories(opt.out_dir);
    const std::string run_name = fs::path(run_dir).filename().string();
    return (fs::path(opt.out_dir) / (run_name + "_" + name)).string();
  };

  {
    std::ofstream out(out_path("steps_curve.tsv"));
    out << "step\tsuccess_rate\n";
    for (std::size_t i = 0; i < evals.size(); ++i) {
      out << evals[i].step << '\t' << detail::smoothed(evals, i, opt.smooth_window)
          << '\n';
    }
  }
  {
    // step function on the reset axis: one row per reset event carrying the
    // most recent evaluation at or before it, plus a closing row at the end
    std::ofstream out(out_path("resets_curve.tsv"));
    out << "resets\tsuccess_rate\n";
    std::size_t ei = 0;
    double last_success = 0.0;
    std::int64_t count = 0;
    for (const std::int64_t rs : reset_steps) {
      while (ei < evals.size() && evals[ei].step <= rs) {
        last_success = detail::smoothed(evals, ei, opt.smooth_window);
        ++ei;
      }
      ++count;
      out << count << '\t' << last_success << '\n';
    }
    if (!evals.empty()) {
      out << count << '\t' << detail::smoothed(evals, evals.size() - 1, opt.smooth_window)
          << '\n';
    }
  }
  {
    const std::string traj_path = (fs::path(run_dir) / "trajectories.txt").string();
    std::ifstream in(traj_path);
    std::ofstream out(out_path("pointcloud.tsv"));
    out << "object_x\tobject_y\toutcome\n";
    if (in) {
      std::string line;
      while (std::getline(in, line)) {
        if (line.empty() || line.front() == '#') continue;
        std::istringstream ls(line);
        std::int64_t step;
        int worker, outcome;
        double x, y;
        if (ls >> step >> worker >> x >> y >> outcome) {
          out << x << '\t' << y << '\t' << outcome << '\n';
        }
      }
    }
  }
  return static_cast<std::int64_t>(reset_steps.size());
}

/// Analyzes each run directory, reporting per-directory failures without
/// aborting the rest. Returns the number of runs analyzed successfully.
inline int analyze_runs(const std::vector<std::string>& run_dirs,
                        const AnalyzeOptions& opt) {
  int ok = 0;
  for (const auto& dir : run_dirs) {
    try {
      analyze_run(dir, opt);
      ++ok;
    } catch (const std::exception& e) {
      std::cerr << "analyze: " << dir << ": " << e.what() << '\n';
    }
  }
  return ok;
}

}  // namespace rmrl
