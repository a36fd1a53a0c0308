#pragma once

#include <cstdint>
#include <cstring>
#include <fstream>
#include <stdexcept>
#include <string>
#include <vector>

#include "rmrl/policy.hpp"

namespace rmrl {

/// Versioned binary checkpoint: network shape, parameters, Adam moments,
/// global step, and the resolved config text the run was started with.
struct Checkpoint {
  NetDims dims;
  std::vector<double> params;
  AdamState adam;
  std::int64_t global_step = 0;
  std::string config_text;
};

namespace detail {

inline constexpr char kCkptMagic[8] = {'R', 'M', 'R', 'L', 'C', 'K', 'P', 'T'};
inline constexpr std::uint32_t kCkptVersion = 1;

template <typename T>
void put(std::ofstream& out, const T& v) {
  out.write(reinterpret_cast<const char*>(&v), sizeof(T));
}

template <typename T>
T get(std::ifstream& in) {
  T v{};
  in.read(reinterpret_cast<char*>(&v), sizeof(T));
  if (!in) throw std::runtime_error("truncated checkpoint");
  return v;
}

inline void put_vec(std::ofstream& out, const std::vector<double>& v) {
  put<std::uint64_t>(out, v.size());
  out.write(reinterpret_cast<const char*>(v.data()),
            static_cast<std::streamsize>(v.size() * sizeof(double)));
}

inline std::vector<double> get_vec(std::ifstream& in) {
  const auto n = get<std::uint64_t>(in);
  std::vector<double> v(n);
  in.read(reinterpret_cast<char*>(v.data()),
          static_cast<std::streamsize>(n * sizeof(double)));
  if (!in) throw std::runtime_error("truncated checkpoint");
  return v;
}

}  // namespace detail

inline void save_checkpoint(const std::string& path, const PolicyNet& net,
                            const AdamState& adam, std::int64_t global_step,
                            const std::string& config_text) {
  using namespace detail;
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw std::runtime_error("cannot open checkpoint for writing: " + path);
  out.write(kCkptMagic, sizeof(kCkptMagic));
  put(out, kCkptVersion);
  put<std::int32_t>(out, net.dims().obs);
  put<std::int32_t>(out, net.dims().hidden1);
  put<std::int32_t>(out, net.dims().hidden2);
  put<std::int32_t>(out, net.dims().actions);
  put<std::int64_t>(out, global_step);
  put_vec(out, net.params());
  put_vec(out, adam.m);
  put_vec(out, adam.v);
  put<std::int64_t>(out, adam.t);
  put<std::uint64_t>(out, config_text.size());
  out.write(config_text.data(), static_cast<std::streamsize>(config_text.size()));
  if (!out) throw std::runtime_error("failed writing checkpoint: " + path);
}

inline Checkpoint load_checkpoint(const std::string& path) {
  using namespace detail;
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("cannot open checkpoint: " + path);
  char magic[8];
  in.read(magic, sizeof(magic));
  if (!in || std::memcmp(magic, kCkptMagic, sizeof(magic)) != 0) {
    throw std::runtime_error("not a checkpoint file: " + path);
  }
  const auto version = get<std::uint32_t>(in);
  if (version != kCkptVersion) {
    throw std::runtime_error("unsupported checkpoint version " + std::to_string(version));
  }
  Checkpoint ck;
  ck.dims.obs = get<std::int32_t>(in);
  ck.dims.hidden1 = get<std::int32_t>(in);
  ck.dims.hidden2 = get<std::int32_t>(in);
  ck.dims.actions = get<std::int32_t>(in);
  ck.global_step = get<std::int64_t>(in);
  ck.params = get_vec(in);
  ck.adam.m = get_vec(in);
  ck.adam.v = get_vec(in);
  ck.adam.t = get<std::int64_t>(in);
  const auto len = get<std::uint64_t>(in);
  ck.config_text.resize(len);
  in.read(ck.config_text.data(), static_cast<std::streamsize>(len));
  if (!in) throw std::runtime_error("truncated checkpoint: " + path);
  if (ck.params.size() != static_cast<std::size_t>(ck.dims.param_count())) {
    throw std::runtime_error("checkpoint parameter count mismatch");
  }
  return ck;
}

/// Restores a policy network from a checkpoint.
inline PolicyNet net_from_checkpoint(const Checkpoint& ck) {
  PolicyNet net(ck.dims);
  net.params() = ck.params;
  return net;
}

}  // namespace rmrl
