#pragma once

#include <charconv>
#include <cstdint>
#include <fstream>
#include <sstream>
#include <stdexcept>
#include <string>
#include <system_error>

#include "rmrl/learner.hpp"
#include "rmrl/measures.hpp"
#include "rmrl/strategy.hpp"
#include "rmrl/tabletop.hpp"

namespace rmrl {

class ConfigError : public std::runtime_error {
 public:
  explicit ConfigError(const std::string& what) : std::runtime_error(what) {}
};

struct RunConfig {
  int workers = 8;
  std::int64_t total_steps = 300000;
  std::uint64_t seed = 1;
  std::int64_t checkpoint_every = 25000;
  int eval_tasks = 200;

  void validate() const {
    if (workers < 1) throw ConfigError("run.workers must be >= 1");
    if (total_steps < 1) throw ConfigError("run.total_steps must be >= 1");
    if (checkpoint_every < 1) throw ConfigError("run.checkpoint_every must be >= 1");
    if (eval_tasks < 1) throw ConfigError("run.eval_tasks must be >= 1");
  }
};

struct ExperimentConfig {
  EnvConfig env;
  OptimConfig learner;
  StrategyConfig strategy;
  RunConfig run;

  void validate() const {
    try {
      env.validate();
      learner.validate();
      strategy.validate();
      run.validate();
    } catch (const ConfigError&) {
      throw;
    } catch (const std::exception& e) {
      throw ConfigError(e.what());
    }
  }

  bool operator==(const ExperimentConfig& o) const {
    const MeasureConfig &m = strategy.measure, &om = o.strategy.measure;
    return env.move_step == o.env.move_step && env.grasp_radius == o.env.grasp_radius &&
           env.success_tol == o.env.success_tol && env.gutter_margin == o.env.gutter_margin &&
           env.slip_std == o.env.slip_std && env.max_phase_steps == o.env.max_phase_steps &&
           env.reward_alpha == o.env.reward_alpha && env.reward_beta == o.env.reward_beta &&
           learner.gamma == o.learner.gamma && learner.gae_tau == o.learner.gae_tau &&
           learner.clip == o.learner.clip && learner.epochs == o.learner.epochs &&
           learner.minibatches == o.learner.minibatches &&
           learner.learning_rate == o.learner.learning_rate &&
           learner.value_coef == o.learner.value_coef &&
           learner.entropy_coef == o.learner.entropy_coef &&
           learner.grad_norm_clip == o.learner.grad_norm_clip &&
           learner.rollout_length == o.learner.rollout_length &&
           strategy.kind == o.strategy.kind && strategy.period == o.strategy.period &&
           strategy.phase_length == o.strategy.phase_length &&
           strategy.forward_goal == o.strategy.forward_goal &&
           strategy.backward_lo == o.strategy.backward_lo &&
           strategy.backward_hi == o.strategy.backward_hi &&
           m.kind == om.kind && m.horizon == om.horizon && m.window == om.window &&
           m.threshold == om.threshold && m.n_tol == om.n_tol &&
           m.bins_per_dim == om.bins_per_dim && m.bounds_lo == om.bounds_lo &&
           m.bounds_hi == om.bounds_hi && run.workers == o.run.workers &&
           run.total_steps == o.run.total_steps && run.seed == o.run.seed &&
           run.checkpoint_every == o.run.checkpoint_every &&
           run.eval_tasks == o.run.eval_tasks;
  }
};

namespace detail {

inline std::string trim(const std::string& s) {
  const auto b = s.find_first_not_of(" \t\r");
  if (b == std::string::npos) return "";
  const auto e = s.find_last_not_of(" \t\r");
  return s.substr(b, e - b + 1);
}

inline double parse_double(const std::string& v, const std::string& key) {
  double out = 0.0;
  const char* begin = v.data();
  const char* end = v.data() + v.size();
  const auto res = std::from_chars(begin, end, out);
  if (res.ec != std::errc() || res.ptr != end) {
    throw ConfigError("invalid number for " + key + ": '" + v + "'");
  }
  return out;
}

inline std::int64_t parse_int(const std::string& v, const std::string& key) {
  std::int64_t out = 0;
  const auto res = std::from_chars(v.data(), v.data() + v.size(), out);
  if (res.ec != std::errc() || res.ptr != v.data() + v.size()) {
    throw ConfigError("invalid integer for " + key + ": '" + v + "'");
  }
  return out;
}

inline std::uint64_t parse_uint(const std::string& v, const std::string& key) {
  std::uint64_t out = 0;
  const auto res = std::from_chars(v.data(), v.data() + v.size(), out);
  if (res.ec != std::errc() || res.ptr != v.data() + v.size()) {
    throw ConfigError("invalid integer for " + key + ": '" + v + "'");
  }
  return out;
}

inline std::string format_double(double v) {
  char buf[64];
  const auto res = std::to_chars(buf, buf + sizeof(buf), v);
  return std::string(buf, res.ptr);
}

inline MeasureKind parse_measure_kind(const std::string& v) {
  if (v == "std") return MeasureKind::Std;
  if (v == "ent") return MeasureKind::Ent;
  if (v == "l2") return MeasureKind::L2;
  if (v == "dtw") return MeasureKind::Dtw;
  throw ConfigError("unknown measure kind '" + v + "'");
}

inline StrategyKind parse_strategy_kind(const std::string& v) {
  if (v == "episodic") return StrategyKind::Episodic;
  if (v == "periodic") return StrategyKind::Periodic;
  if (v == "measure_led") return StrategyKind::MeasureLed;
  if (v == "forward_backward_gt") return StrategyKind::ForwardBackwardGT;
  throw ConfigError("unknown strategy kind '" + v + "'");
}

}  // namespace detail

/// Parses the sectioned key = value experiment file. Unknown sections or
/// keys are rejected; '#' and ';' start comments.
inline ExperimentConfig parse_config(const std::string& text) {
  using namespace detail;
  ExperimentConfig cfg;
  std::istringstream in(text);
  std::string line, section;
  int lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    const auto comment = line.find_first_of("#;");
    if (comment != std::string::npos) line = line.substr(0, comment);
    line = trim(line);
    if (line.empty()) continue;
    if (line.front() == '[') {
      if (line.back() != ']') {
        throw ConfigError("line " + std::to_string(lineno) + ": malformed section");
      }
      section = trim(line.substr(1, line.size() - 2));
      if (section != "env" && section != "learner" && section != "strategy" &&
          section != "measure" && section != "run") {
        throw ConfigError("line " + std::to_string(lineno) + ": unknown section [" +
                          section + "]");
      }
      continue;
    }
    const auto eq = line.find('=');
    if (eq == std::string::npos) {
      throw ConfigError("line " + std::to_string(lineno) + ": expected key = value");
    }
    const std::string key = trim(line.substr(0, eq));
    const std::string value = trim(line.substr(eq + 1));
    if (section.empty()) {
      throw ConfigError("line " + std::to_string(lineno) + ": key outside any section");
    }
    const std::string qual = section + "." + key;
    if (section == "env") {
      if (key == "move_step") cfg.env.move_step = parse_double(value, qual);
      else if (key == "grasp_radius") cfg.env.grasp_radius = parse_double(value, qual);
      else if (key == "success_tol") cfg.env.success_tol = parse_double(value, qual);
      else if (key == "gutter_margin") cfg.env.gutter_margin = parse_double(value, qual);
      else if (key == "slip_std") cfg.env.slip_std = parse_double(value, qual);
      else if (key == "max_phase_steps") cfg.env.max_phase_steps = static_cast<int>(parse_int(value, qual));
      else if (key == "reward_alpha") cfg.env.reward_alpha = parse_double(value, qual);
      else if (key == "reward_beta") cfg.env.reward_beta = parse_double(value, qual);
      else throw ConfigError("unknown key " + qual);
    } else if (section == "learner") {
      if (key == "gamma") cfg.learner.gamma = parse_double(value, qual);
      else if (key == "gae_tau") cfg.learner.gae_tau = parse_double(value, qual);
      else if (key == "clip") cfg.learner.clip = parse_double(value, qual);
      else if (key == "epochs") cfg.learner.epochs = static_cast<int>(parse_int(value, qual));
      else if (key == "minibatches") cfg.learner.minibatches = static_cast<int>(parse_int(value, qual));
      else if (key == "learning_rate") cfg.learner.learning_rate = parse_double(value, qual);
      else if (key == "value_coef") cfg.learner.value_coef = parse_double(value, qual);
      else if (key == "entropy_coef") cfg.learner.entropy_coef = parse_double(value, qual);
      else if (key == "grad_norm_clip") cfg.learner.grad_norm_clip = parse_double(value, qual);
      else if (key == "rollout_length") cfg.learner.rollout_length = static_cast<int>(parse_int(value, qual));
      else throw ConfigError("unknown key " + qual);
    } else if (section == "strategy") {
      if (key == "kind") cfg.strategy.kind = parse_strategy_kind(value);
      else if (key == "period") cfg.strategy.period = parse_int(value, qual);
      else if (key == "phase_length") cfg.strategy.phase_length = static_cast<int>(parse_int(value, qual));
      else if (key == "forward_goal_x") cfg.strategy.forward_goal.x = parse_double(value, qual);
      else if (key == "forward_goal_y") cfg.strategy.forward_goal.y = parse_double(value, qual);
      else if (key == "backward_lo") cfg.strategy.backward_lo = parse_double(value, qual);
      else if (key == "backward_hi") cfg.strategy.backward_hi = parse_double(value, qual);
      else throw ConfigError("unknown key " + qual);
    } else if (section == "measure") {
      MeasureConfig& m = cfg.strategy.measure;
      if (key == "kind") m.kind = parse_measure_kind(value);
      else if (key == "horizon") m.horizon = static_cast<std::size_t>(parse_int(value, qual));
      else if (key == "window") m.window = static_cast<std::size_t>(parse_int(value, qual));
      else if (key == "threshold") m.threshold = parse_double(value, qual);
      else if (key == "n_tol") m.n_tol = static_cast<int>(parse_int(value, qual));
      else if (key == "bins_per_dim") m.bins_per_dim = static_cast<int>(parse_int(value, qual));
      else if (key == "bounds_lo") m.bounds_lo.assign(2, parse_double(value, qual));
      else if (key == "bounds_hi") m.bounds_hi.assign(2, parse_double(value, qual));
      else throw ConfigError("unknown key " + qual);
    } else if (section == "run") {
      if (key == "workers") cfg.run.workers = static_cast<int>(parse_int(value, qual));
      else if (key == "total_steps") cfg.run.total_steps = parse_int(value, qual);
      else if (key == "seed") cfg.run.seed = parse_uint(value, qual);
      else if (key == "checkpoint_every") cfg.run.checkpoint_every = parse_int(value, qual);
      else if (key == "eval_tasks") cfg.run.eval_tasks = static_cast<int>(parse_int(value, qual));
      else throw ConfigError("unknown key " + qual);
    }
  }
  cfg.validate();
  return cfg;
}

/// Canonical text form; parse(emit(c)) == c for every valid config.
inline std::string emit_config(const ExperimentConfig& cfg) {
  using detail::format_double;
  std::ostringstream os;
  os << "[env]\n";
  os << "move_step = " << format_double(cfg.env.move_step) << '\n';
  os << "grasp_radius = " << format_double(cfg.env.grasp_radius) << '\n';
  os << "success_tol = " << format_double(cfg.env.success_tol) << '\n';
  os << "gutter_margin = " << format_double(cfg.env.gutter_margin) << '\n';
  os << "slip_std = " << format_double(cfg.env.slip_std) << '\n';
  os << "max_phase_steps = " << cfg.env.max_phase_steps << '\n';
  os << "reward_alpha = " << format_double(cfg.env.reward_alpha) << '\n';
  os << "reward_beta = " << format_double(cfg.env.reward_beta) << '\n';
  os << "\n[learner]\n";
  os << "gamma = " << format_double(cfg.learner.gamma) << '\n';
  os << "gae_tau = " << format_double(cfg.learner.gae_tau) << '\n';
  os << "clip = " << format_double(cfg.learner.clip) << '\n';
  os << "epochs = " << cfg.learner.epochs << '\n';
  os << "minibatches = " << cfg.learner.minibatches << '\n';
  os << "learning_rate = " << format_double(cfg.learner.learning_rate) << '\n';
  os << "value_coef = " << format_double(cfg.learner.value_coef) << '\n';
  os << "entropy_coef = " << format_double(cfg.learner.entropy_coef) << '\n';
  os << "grad_norm_clip = " << format_double(cfg.learner.grad_norm_clip) << '\n';
  os << "rollout_length = " << cfg.learner.rollout_length << '\n';
  os << "\n[strategy]\n";
  os << "kind = " << to_string(cfg.strategy.kind) << '\n';
  os << "period = " << cfg.strategy.period << '\n';
  os << "phase_length = " << cfg.strategy.phase_length << '\n';
  os << "forward_goal_x = " << format_double(cfg.strategy.forward_goal.x) << '\n';
  os << "forward_goal_y = " << format_double(cfg.strategy.forward_goal.y) << '\n';
  os << "backward_lo = " << format_double(cfg.strategy.backward_lo) << '\n';
  os << "backward_hi = " << format_double(cfg.strategy.backward_hi) << '\n';
  const MeasureConfig& m = cfg.strategy.measure;
  os << "\n[measure]\n";
  os << "kind = " << to_string(m.kind) << '\n';
  os << "horizon = " << m.horizon << '\n';
  os << "window = " << m.window << '\n';
  os << "threshold = " << format_double(m.threshold) << '\n';
  os << "n_tol = " << m.n_tol << '\n';
  os << "bins_per_dim = " << m.bins_per_dim << '\n';
  os << "bounds_lo = " << format_double(m.bounds_lo.empty() ? 0.0 : m.bounds_lo[0]) << '\n';
  os << "bounds_hi = " << format_double(m.bounds_hi.empty() ? 1.0 : m.bounds_hi[0]) << '\n';
  os << "\n[run]\n";
  os << "workers = " << cfg.run.workers << '\n';
  os << "total_steps = " << cfg.run.total_steps << '\n';
  os << "seed = " << cfg.run.seed << '\n';
  os << "checkpoint_every = " << cfg.run.checkpoint_every << '\n';
  os << "eval_tasks = " << cfg.run.eval_tasks << '\n';
  return os.str();
}

inline ExperimentConfig load_config_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open config file: " + path);
  std::ostringstream buf;
  buf << in.rdbuf();
  return parse_config(buf.str());
}

}  // namespace rmrl
