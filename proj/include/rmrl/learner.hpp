#pragma once

#include <cmath>
#include <numeric>
#include <stdexcept>
#include <string>
#include <vector>

#include "rmrl/policy.hpp"
#include "rmrl/rng.hpp"

namespace rmrl {

struct OptimConfig {
  double gamma = 0.99;
  double gae_tau = 0.95;
  double clip = 0.1;
  int epochs = 10;
  int minibatches = 4;
  double learning_rate = 3e-4;
  double value_coef = 0.5;
  double entropy_coef = 0.01;
  double grad_norm_clip = 0.5;
  int rollout_length = 200;

  void validate() const {
    if (gamma <= 0.0 || gamma > 1.0) throw std::invalid_argument("gamma must be in (0, 1]");
    if (gae_tau <= 0.0 || gae_tau > 1.0) throw std::invalid_argument("gae_tau must be in (0, 1]");
    if (clip < 0.0) throw std::invalid_argument("clip must be >= 0");
    if (epochs < 1 || minibatches < 1) throw std::invalid_argument("epochs and minibatches must be >= 1");
    if (learning_rate <= 0.0) throw std::invalid_argument("learning_rate must be > 0");
    if (value_coef < 0.0 || entropy_coef < 0.0) throw std::invalid_argument("loss coefficients must be >= 0");
    if (grad_norm_clip <= 0.0) throw std::invalid_argument("grad_norm_clip must be > 0");
    if (rollout_length < 1) throw std::invalid_argument("rollout_length must be >= 1");
  }
};

/// One transition of the on-policy batch. terminal marks hard chain breaks
/// (success or reset, no bootstrap); truncated marks soft breaks (goal
/// switch or rollout end) that bootstrap from boot_value.
struct StepSample {
  std::vector<double> obs;
  int action = 0;
  double log_prob = 0.0;
  double reward = 0.0;
  double value = 0.0;
  bool terminal = false;
  bool truncated = false;
  double boot_value = 0.0;
  bool phase_boundary = false;
  bool reset = false;
};

struct RolloutBatch {
  int workers = 1;
  int length = 0;
  std::vector<StepSample> steps;  // indexed [t * workers + w]

  RolloutBatch(int n_workers, int n_length)
      : workers(n_workers), length(n_length),
        steps(static_cast<std::size_t>(n_workers) * n_length) {}

  StepSample& at(int t, int w) { return steps[static_cast<std::size_t>(t) * workers + w]; }
  const StepSample& at(int t, int w) const {
    return steps[static_cast<std::size_t>(t) * workers + w];
  }
  int size() const { return workers * length; }
};

struct GaeResult {
  std::vector<double> advantages;  // normalized, batch-wide
  std::vector<double> returns;     // raw advantages + values
};

/// In-place shift/scale to zero mean and unit variance (population).
inline void normalize_advantages(std::vector<double>& a) {
  if (a.size() < 2) return;
  double mean = 0.0;
  for (double x : a) mean += x;
  mean /= static_cast<double>(a.size());
  double var = 0.0;
  for (double x : a) var += (x - mean) * (x - mean);
  const double stddev = std::sqrt(var / static_cast<double>(a.size()));
  for (double& x : a) x = (x - mean) / (stddev + 1e-8);
}

/// Backward GAE recursion per worker chain. Hard terminals bootstrap zero,
/// truncations bootstrap the stored continuing value; both break the chain.
/// Advantages are normalized to zero mean and unit variance over the batch
/// after returns are formed from the raw values.
inline GaeResult compute_gae(const RolloutBatch& batch, double gamma, double tau) {
  GaeResult out;
  const int n = batch.size();
  out.advantages.assign(n, 0.0);
  out.returns.assign(n, 0.0);
  for (int w = 0; w < batch.workers; ++w) {
    double a_next = 0.0;
    for (int t = batch.length - 1; t >= 0; --t) {
      const StepSample& s = batch.at(t, w);
      double boot;
      if (s.terminal) {
        boot = 0.0;
      } else if (s.truncated) {
        boot = s.boot_value;
      } else {
        if (t + 1 >= batch.length) {
          throw std::invalid_argument(
              "compute_gae: last step of a chain must be terminal or truncated");
        }
        boot = batch.at(t + 1, w).value;
      }
      const double delta = s.reward + gamma * boot - s.value;
      const double mask = (s.terminal || s.truncated) ? 0.0 : 1.0;
      const double adv = delta + gamma * tau * mask * a_next;
      const int idx = t * batch.workers + w;
      out.advantages[idx] = adv;
      out.returns[idx] = adv + s.value;
      a_next = adv;
    }
  }
  normalize_advantages(out.advantages);
  return out;
}

struct UpdateStats {
  double policy_loss = 0.0;
  double value_loss = 0.0;
  double entropy = 0.0;
  double grad_norm = 0.0;
  std::vector<double> value_loss_per_epoch;
};

class NonFiniteLossError : public std::runtime_error {
 public:
  explicit NonFiniteLossError(const std::string& what) : std::runtime_error(what) {}
};

namespace detail {

struct SampleRef {
  const StepSample* s;
  double advantage;
  double ret;
};

struct LossAccum {
  double policy = 0.0;
  double value = 0.0;
  double entropy = 0.0;
};

/// Mean clipped-surrogate loss over the samples, with gradient accumulation
/// into grad when it is non-null. The per-sample loss is
///   -min(ratio*A, clip(ratio)*A) + value_coef*(V - R)^2 - entropy_coef*H.
inline LossAccum ppo_loss_and_grad(const PolicyNet& net,
                                   const std::vector<SampleRef>& samples,
                                   const OptimConfig& cfg,
                                   std::vector<double>* grad) {
  LossAccum acc;
  const int na = net.dims().actions;
  const double inv_n = 1.0 / static_cast<double>(samples.size());
  PolicyNet::Activations a;
  std::vector<double> dlogits(na);
  for (const auto& ref : samples) {
    const StepSample& s = *ref.s;
    net.forward(s.obs.data(), a);
    const double lp_new = net.log_prob(a, s.action);
    const double ratio = std::exp(lp_new - s.log_prob);
    const double adv = ref.advantage;
    const double unclipped = ratio * adv;
    const double clipped = std::clamp(ratio, 1.0 - cfg.clip, 1.0 + cfg.clip) * adv;
    acc.policy += -std::min(unclipped, clipped);
    const double verr = a.value - ref.ret;
    acc.value += verr * verr;
    const double h = net.entropy(a);
    acc.entropy += h;
    if (grad != nullptr) {
      // surrogate gradient flows through the unclipped branch when it is the
      // strict min, or on ties while the ratio is inside the clip region
      const bool inside = ratio > 1.0 - cfg.clip && ratio < 1.0 + cfg.clip;
      const bool use_unclipped =
          unclipped < clipped || (unclipped == clipped && inside);
      const double g_lp = use_unclipped ? -adv * ratio : 0.0;
      for (int k = 0; k < na; ++k) {
        const double onehot = k == s.action ? 1.0 : 0.0;
        double dz = g_lp * (onehot - a.probs[k]);
        // entropy bonus: dH/dz_k = -p_k (log p_k + H)
        if (a.probs[k] > 0.0) {
          dz += cfg.entropy_coef * a.probs[k] * (std::log(a.probs[k]) + h);
        }
        dlogits[k] = dz * inv_n;
      }
      const double dvalue = 2.0 * cfg.value_coef * verr * inv_n;
      net.backward(a, dlogits.data(), dvalue, *grad);
    }
  }
  acc.policy *= inv_n;
  acc.value *= inv_n;
  acc.entropy *= inv_n;
  return acc;
}

}  // namespace detail

/// Total PPO objective on a set of samples, for gradient verification.
inline double ppo_loss(const PolicyNet& net, const std::vector<StepSample>& samples,
                       const std::vector<double>& advantages,
                       const std::vector<double>& returns, const OptimConfig& cfg) {
  std::vector<detail::SampleRef> refs;
  refs.reserve(samples.size());
  for (std::size_t i = 0; i < samples.size(); ++i) {
    refs.push_back({&samples[i], advantages[i], returns[i]});
  }
  const auto acc = detail::ppo_loss_and_grad(net, refs, cfg, nullptr);
  return acc.policy + cfg.value_coef * acc.value - cfg.entropy_coef * acc.entropy;
}

/// Analytic gradient of the same objective, for gradient verification.
inline void ppo_gradient(const PolicyNet& net, const std::vector<StepSample>& samples,
                         const std::vector<double>& advantages,
                         const std::vector<double>& returns, const OptimConfig& cfg,
                         std::vector<double>& grad) {
  grad.assign(net.params().size(), 0.0);
  std::vector<detail::SampleRef> refs;
  refs.reserve(samples.size());
  for (std::size_t i = 0; i < samples.size(); ++i) {
    refs.push_back({&samples[i], advantages[i], returns[i]});
  }
  detail::ppo_loss_and_grad(net, refs, cfg, &grad);
}

/// Clipped-surrogate update: epochs x minibatches over the shuffled batch,
/// advantages re-normalized per minibatch, gradients global-norm clipped and
/// applied with Adam. Throws NonFiniteLossError before applying a broken
/// minibatch.
inline UpdateStats ppo_update(PolicyNet& net, AdamState& adam,
                              const RolloutBatch& batch, const GaeResult& gae,
                              const OptimConfig& cfg, Rng& rng) {
  cfg.validate();
  const int n = batch.size();
  if (n == 0) throw std::invalid_argument("ppo_update: empty batch");
  std::vector<int> index(n);
  std::iota(index.begin(), index.end(), 0);
  std::vector<double> grad(net.params().size(), 0.0);
  UpdateStats stats;
  int mb_count = 0;
  for (int epoch = 0; epoch < cfg.epochs; ++epoch) {
    for (int i = n - 1; i > 0; --i) {
      const int j = static_cast<int>(rng.below(static_cast<std::uint64_t>(i) + 1));
      std::swap(index[i], index[j]);
    }
    double epoch_value_loss = 0.0;
    for (int mb = 0; mb < cfg.minibatches; ++mb) {
      const int begin = static_cast<int>(static_cast<std::int64_t>(n) * mb / cfg.minibatches);
      const int end = static_cast<int>(static_cast<std::int64_t>(n) * (mb + 1) / cfg.minibatches);
      if (begin == end) continue;
      std::vector<double> mb_adv(end - begin);
      for (int i = begin; i < end; ++i) mb_adv[i - begin] = gae.advantages[index[i]];
      normalize_advantages(mb_adv);
      std::vector<detail::SampleRef> refs;
      refs.reserve(end - begin);
      for (int i = begin; i < end; ++i) {
        const int k = index[i];
        refs.push_back({&batch.steps[k], mb_adv[i - begin], gae.returns[k]});
      }
      std::fill(grad.begin(), grad.end(), 0.0);
      const auto acc = detail::ppo_loss_and_grad(net, refs, cfg, &grad);
      const double total =
          acc.policy + cfg.value_coef * acc.value - cfg.entropy_coef * acc.entropy;
      if (!std::isfinite(total)) {
        throw NonFiniteLossError(
            "ppo_update: non-finite loss (policy=" + std::to_string(acc.policy) +
            " value=" + std::to_string(acc.value) +
            " entropy=" + std::to_string(acc.entropy) + ")");
      }
      double norm2 = 0.0;
      for (double g : grad) norm2 += g * g;
      const double norm = std::sqrt(norm2);
      if (norm > cfg.grad_norm_clip) {
        const double scale = cfg.grad_norm_clip / norm;
        for (double& g : grad) g *= scale;
      }
      adam.step(net.params(), grad, cfg.learning_rate);
      stats.policy_loss = acc.policy;
      stats.value_loss = acc.value;
      stats.entropy = acc.entropy;
      stats.grad_norm = norm;
      epoch_value_loss += acc.value;
      ++mb_count;
    }
    stats.value_loss_per_epoch.push_back(epoch_value_loss / cfg.minibatches);
  }
  (void)mb_count;
  return stats;
}

}  // namespace rmrl
