#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <stdexcept>
#include <vector>

#include "rmrl/rng.hpp"

namespace rmrl {

struct NetDims {
  int obs = 7;
  int hidden1 = 64;
  int hidden2 = 64;
  int actions = 6;

  int param_count() const {
    return hidden1 * obs + hidden1 + hidden2 * hidden1 + hidden2 +
           actions * hidden2 + actions + hidden2 + 1;
  }

  bool operator==(const NetDims& o) const {
    return obs == o.obs && hidden1 == o.hidden1 && hidden2 == o.hidden2 &&
           actions == o.actions;
  }
};

/// Two tanh hidden layers feeding a categorical action head and a scalar
/// value head. Parameters live in one flat vector; forward caches the
/// activations needed for the manual reverse pass.
class PolicyNet {
 public:
  explicit PolicyNet(NetDims dims = {}) : d_(dims), w_(dims.param_count(), 0.0) {
    o_w1 = 0;
    o_b1 = o_w1 + d_.hidden1 * d_.obs;
    o_w2 = o_b1 + d_.hidden1;
    o_b2 = o_w2 + d_.hidden2 * d_.hidden1;
    o_wa = o_b2 + d_.hidden2;
    o_ba = o_wa + d_.actions * d_.hidden2;
    o_wv = o_ba + d_.actions;
    o_bv = o_wv + d_.hidden2;
  }

  /// Uniform fan-based init; both heads scaled down so the initial policy is
  /// near uniform and initial values near zero.
  void init(Rng& rng) {
    auto fill = [&](int off, int rows, int cols, double scale) {
      const double s = scale * std::sqrt(6.0 / (rows + cols));
      for (int i = 0; i < rows * cols; ++i) w_[off + i] = rng.uniform(-s, s);
    };
    fill(o_w1, d_.hidden1, d_.obs, 1.0);
    fill(o_w2, d_.hidden2, d_.hidden1, 1.0);
    fill(o_wa, d_.actions, d_.hidden2, 0.01);
    fill(o_wv, 1, d_.hidden2, 0.01);
    for (int i = 0; i < d_.hidden1; ++i) w_[o_b1 + i] = 0.0;
    for (int i = 0; i < d_.hidden2; ++i) w_[o_b2 + i] = 0.0;
    for (int i = 0; i < d_.actions; ++i) w_[o_ba + i] = 0.0;
    w_[o_bv] = 0.0;
  }

  struct Activations {
    std::vector<double> x, a1, a2, logits, probs;
    double value = 0.0;
    double logz = 0.0;  // log sum exp of logits
  };

  void forward(const double* obs, Activations& act) const {
    act.x.assign(obs, obs + d_.obs);
    act.a1.assign(d_.hidden1, 0.0);
    act.a2.assign(d_.hidden2, 0.0);
    act.logits.assign(d_.actions, 0.0);
    act.probs.assign(d_.actions, 0.0);
    for (int i = 0; i < d_.hidden1; ++i) {
      double z = w_[o_b1 + i];
      const double* row = &w_[o_w1 + i * d_.obs];
      for (int j = 0; j < d_.obs; ++j) z += row[j] * obs[j];
      act.a1[i] = std::tanh(z);
    }
    for (int i = 0; i < d_.hidden2; ++i) {
      double z = w_[o_b2 + i];
      const double* row = &w_[o_w2 + i * d_.hidden1];
      for (int j = 0; j < d_.hidden1; ++j) z += row[j] * act.a1[j];
      act.a2[i] = std::tanh(z);
    }
    for (int a = 0; a < d_.actions; ++a) {
      double z = w_[o_ba + a];
      const double* row = &w_[o_wa + a * d_.hidden2];
      for (int j = 0; j < d_.hidden2; ++j) z += row[j] * act.a2[j];
      act.logits[a] = z;
    }
    double v = w_[o_bv];
    for (int j = 0; j < d_.hidden2; ++j) v += w_[o_wv + j] * act.a2[j];
    act.value = v;
    const double zmax = *std::max_element(act.logits.begin(), act.logits.end());
    double acc = 0.0;
    for (int a = 0; a < d_.actions; ++a) acc += std::exp(act.logits[a] - zmax);
    act.logz = zmax + std::log(acc);
    for (int a = 0; a < d_.actions; ++a) {
      act.probs[a] = std::exp(act.logits[a] - act.logz);
    }
  }

  /// Accumulates d(loss)/d(params) into grad given the loss gradient at the
  /// action logits and at the value output.
  void backward(const Activations& act, const double* dlogits, double dvalue,
                std::vector<double>& grad) const {
    std::vector<double> dh2(d_.hidden2, 0.0);
    for (int a = 0; a < d_.actions; ++a) {
      const double g = dlogits[a];
      if (g != 0.0) {
        double* row = &grad[o_wa + a * d_.hidden2];
        const double* wrow = &w_[o_wa + a * d_.hidden2];
        for (int j = 0; j < d_.hidden2; ++j) {
          row[j] += g * act.a2[j];
          dh2[j] += g * wrow[j];
        }
      }
      grad[o_ba + a] += g;
    }
    if (dvalue != 0.0) {
      for (int j = 0; j < d_.hidden2; ++j) {
        grad[o_wv + j] += dvalue * act.a2[j];
        dh2[j] += dvalue * w_[o_wv + j];
      }
      grad[o_bv] += dvalue;
    }
    std::vector<double> dh1(d_.hidden1, 0.0);
    for (int i = 0; i < d_.hidden2; ++i) {
      const double dpre = dh2[i] * (1.0 - act.a2[i] * act.a2[i]);
      if (dpre == 0.0) continue;
      double* row = &grad[o_w2 + i * d_.hidden1];
      const double* wrow = &w_[o_w2 + i * d_.hidden1];
      for (int j = 0; j < d_.hidden1; ++j) {
        row[j] += dpre * act.a1[j];
        dh1[j] += dpre * wrow[j];
      }
      grad[o_b2 + i] += dpre;
    }
    for (int i = 0; i < d_.hidden1; ++i) {
      const double dpre = dh1[i] * (1.0 - act.a1[i] * act.a1[i]);
      if (dpre == 0.0) continue;
      double* row = &grad[o_w1 + i * d_.obs];
      for (int j = 0; j < d_.obs; ++j) row[j] += dpre * act.x[j];
      grad[o_b1 + i] += dpre;
    }
  }

  double log_prob(const Activations& act, int action) const {
    return act.logits[action] - act.logz;
  }

  double entropy(const Activations& act) const {
    double h = 0.0;
    for (int a = 0; a < d_.actions; ++a) {
      if (act.probs[a] > 0.0) h -= act.probs[a] * std::log(act.probs[a]);
    }
    return h;
  }

  int sample_action(const Activations& act, Rng& rng) const {
    const double u = rng.uniform();
    double cum = 0.0;
    for (int a = 0; a < d_.actions; ++a) {
      cum += act.probs[a];
      if (u < cum) return a;
    }
    return d_.actions - 1;
  }

  static int argmax_action(const Activations& act) {
    return static_cast<int>(std::max_element(act.probs.begin(), act.probs.end()) -
                            act.probs.begin());
  }

  std::vector<double>& params() { return w_; }
  const std::vector<double>& params() const { return w_; }
  const NetDims& dims() const { return d_; }

 private:
  NetDims d_;
  std::vector<double> w_;
  int o_w1, o_b1, o_w2, o_b2, o_wa, o_ba, o_wv, o_bv;
};

struct ActResult {
  int action = 0;
  double log_prob = 0.0;
  double value = 0.0;
};

/// Samples an action from the current policy.
inline ActResult act(const PolicyNet& net, const double* obs, Rng& rng) {
  for (int i = 0; i < net.dims().obs; ++i) {
    if (!std::isfinite(obs[i])) {
      throw std::invalid_argument("act: non-finite observation");
    }
  }
  PolicyNet::Activations a;
  net.forward(obs, a);
  ActResult r;
  r.action = net.sample_action(a, rng);
  r.log_prob = net.log_prob(a, r.action);
  r.value = a.value;
  return r;
}

/// Mode of the action distribution, used at evaluation time.
inline ActResult greedy_act(const PolicyNet& net, const double* obs) {
  PolicyNet::Activations a;
  net.forward(obs, a);
  ActResult r;
  r.action = PolicyNet::argmax_action(a);
  r.log_prob = net.log_prob(a, r.action);
  r.value = a.value;
  return r;
}

/// Adam with global state over the flat parameter vector.
struct AdamState {
  std::vector<double> m, v;
  std::int64_t t = 0;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double eps = 1e-8;

  explicit AdamState(std::size_t n = 0) : m(n, 0.0), v(n, 0.0) {}

  void step(std::vector<double>& w, const std::vector<double>& grad, double lr) {
    if (m.size() != w.size()) {
      m.assign(w.size(), 0.0);
      v.assign(w.size(), 0.0);
    }
    ++t;
    const double bc1 = 1.0 - std::pow(beta1, static_cast<double>(t));
    const double bc2 = 1.0 - std::pow(beta2, static_cast<double>(t));
    for (std::size_t i = 0; i < w.size(); ++i) {
      m[i] = beta1 * m[i] + (1.0 - beta1) * grad[i];
      v[i] = beta2 * v[i] + (1.0 - beta2) * grad[i] * grad[i];
      const double mhat = m[i] / bc1;
      const double vhat = v[i] / bc2;
      w[i] -= lr * mhat / (std::sqrt(vhat) + eps);
    }
  }
};

}  // namespace rmrl
