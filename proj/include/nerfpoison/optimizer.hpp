#pragma once

#include <cmath>
#include <span>
#include <stdexcept>
#include <vector>

#include "nerfpoison/errors.hpp"
#include "nerfpoison/tape.hpp"

namespace nerfpoison {

enum class OptKind { Sgd, Adam };

struct OptimizerState {
  OptKind kind = OptKind::Sgd;
  double lr = 0.01;
  double beta1 = 0.9, beta2 = 0.999, eps = 1e-7;
  std::vector<double> m, v;  // adam moments, lazily sized
  long step = 0;
};

inline void opt_step(std::vector<double>& params, std::span<const double> g,
                     OptimizerState& st) {
  if (g.size() != params.size()) throw std::invalid_argument("opt_step: length mismatch");
  for (double v : g)
    if (!std::isfinite(v)) throw NumericError("opt_step: non-finite gradient");
  if (st.kind == OptKind::Sgd) {
    for (size_t i = 0; i < params.size(); ++i) params[i] -= st.lr * g[i];
    ++st.step;
    return;
  }
  if (st.m.size() != params.size()) {
    st.m.assign(params.size(), 0.0);
    st.v.assign(params.size(), 0.0);
  }
  ++st.step;
  const double c1 = 1.0 - std::pow(st.beta1, static_cast<double>(st.step));
  const double c2 = 1.0 - std::pow(st.beta2, static_cast<double>(st.step));
  for (size_t i = 0; i < params.size(); ++i) {
    st.m[i] = st.beta1 * st.m[i] + (1.0 - st.beta1) * g[i];
    st.v[i] = st.beta2 * st.v[i] + (1.0 - st.beta2) * g[i] * g[i];
    params[i] -= st.lr * (st.m[i] / c1) / (std::sqrt(st.v[i] / c2) + st.eps);
  }
}

// Optimizer whose update is itself recorded on the tape, so the new
// parameters stay differentiable with respect to the gradients.
struct RecordedOptimizer {
  OptKind kind = OptKind::Sgd;
  double lr = 0.01;
  double beta1 = 0.9, beta2 = 0.999, eps = 1e-7;
  long step = 0;
  Var m{}, v{};  // adam moment chains on the tape

  Var apply(Tape& t, Var theta, Var g) {
    if (t.value(theta).size() != t.value(g).size())
      throw std::invalid_argument("RecordedOptimizer: length mismatch");
    if (kind == OptKind::Sgd) {
      ++step;
      return t.sub(theta, t.mul(t.scalar(lr), g));
    }
    if (!m.valid()) {
      int n = static_cast<int>(t.value(theta).size());
      m = t.zeros(n);
      v = t.zeros(n);
    }
    ++step;
    const double c1 = 1.0 - std::pow(beta1, static_cast<double>(step));
    const double c2 = 1.0 - std::pow(beta2, static_cast<double>(step));
    m = t.add(t.mul(t.scalar(beta1), m), t.mul(t.scalar(1.0 - beta1), g));
    v = t.add(t.mul(t.scalar(beta2), v), t.mul(t.scalar(1.0 - beta2), t.mul(g, g)));
    Var mhat = t.div(m, t.scalar(c1));
    Var vhat = t.div(v, t.scalar(c2));
    Var denom = t.add(t.sqrt(vhat), t.scalar(eps));
    return t.sub(theta, t.mul(t.scalar(lr), t.div(mhat, denom)));
  }
};

}  // namespace nerfpoison
