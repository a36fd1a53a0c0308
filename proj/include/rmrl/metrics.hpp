#pragma once

#include <charconv>
#include <cstdint>
#include <fstream>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

namespace rmrl {

/// Line-oriented training metrics: one record per line,
///   <global_step> <worker> <kind> <payload...>
/// Workers buffer their records during a rollout and the single writer
/// flushes them merged in worker order, so files are deterministic.
struct MetricsRecord {
  enum class Kind { Reward, Success, Reset, Measure, Eval };

  std::int64_t step = 0;
  int worker = 0;
  Kind kind = Kind::Reward;
  std::vector<double> payload;
};

inline const char* to_string(MetricsRecord::Kind k) {
  switch (k) {
    case MetricsRecord::Kind::Reward: return "reward";
    case MetricsRecord::Kind::Success: return "success";
    case MetricsRecord::Kind::Reset: return "reset";
    case MetricsRecord::Kind::Measure: return "measure";
    case MetricsRecord::Kind::Eval: return "eval";
  }
  return "?";
}

inline MetricsRecord::Kind metrics_kind_from(const std::string& s) {
  if (s == "reward") return MetricsRecord::Kind::Reward;
  if (s == "success") return MetricsRecord::Kind::Success;
  if (s == "reset") return MetricsRecord::Kind::Reset;
  if (s == "measure") return MetricsRecord::Kind::Measure;
  if (s == "eval") return MetricsRecord::Kind::Eval;
  throw std::runtime_error("unknown metrics kind '" + s + "'");
}

inline constexpr const char* kMetricsHeader = "# rmrl metrics v1";

class MetricsWriter {
 public:
  explicit MetricsWriter(const std::string& path) : out_(path, std::ios::trunc) {
    if (!out_) throw std::runtime_error("cannot open metrics file: " + path);
    out_ << kMetricsHeader << '\n';
  }

  void write(const MetricsRecord& rec) {
    out_ << rec.step << ' ' << rec.worker << ' ' << to_string(rec.kind);
    char buf[64];
    for (double v : rec.payload) {
      const auto res = std::to_chars(buf, buf + sizeof(buf), v);
      out_ << ' ';
      out_.write(buf, res.ptr - buf);
    }
    out_ << '\n';
  }

  void flush() { out_.flush(); }

 private:
  std::ofstream out_;
};

inline std::vector<MetricsRecord> parse_metrics(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open metrics file: " + path);
  std::string line;
  if (!std::getline(in, line) || line != kMetricsHeader) {
    throw std::runtime_error("bad metrics header in " + path);
  }
  std::vector<MetricsRecord> out;
  std::size_t lineno = 1;
  while (std::getline(in, line)) {
    ++lineno;
    if (line.empty()) continue;
    std::istringstream ls(line);
    MetricsRecord rec;
    std::string kind;
    if (!(ls >> rec.step >> rec.worker >> kind)) {
      throw std::runtime_error(path + ":" + std::to_string(lineno) +
                               ": malformed metrics record");
    }
    rec.kind = metrics_kind_from(kind);
    double v;
    while (ls >> v) rec.payload.push_back(v);
    if (!ls.eof()) {
      throw std::runtime_error(path + ":" + std::to_string(lineno) +
                               ": malformed metrics payload");
    }
    out.push_back(std::move(rec));
  }
  return out;
}

// payload layouts
//   reset:   cause_code
//   measure: measure_kind_code rho ni
//   success: outcome_code phase_len phase_return
//   reward:  mean_step_reward
//   eval:    mode_code success_rate mean_steps_to_success

}  // namespace rmrl
