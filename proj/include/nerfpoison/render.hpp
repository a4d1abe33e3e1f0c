#pragma once

#include <array>
#include <cmath>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

#include "nerfpoison/camera.hpp"
#include "nerfpoison/errors.hpp"
#include "nerfpoison/field.hpp"
#include "nerfpoison/rng.hpp"
#include "nerfpoison/tape.hpp"

namespace nerfpoison {

enum class SampleMode { Midpoint, Stratified };

struct RaySamples {
  std::vector<double> t;      // N increasing sample distances
  std::vector<double> delta;  // segment lengths; last uses far - t_N
};

inline RaySamples sample_ray(const Ray& ray, int n, SampleMode mode, Rng* rng = nullptr) {
  if (n < 1) throw std::invalid_argument("sample_ray: N must be >= 1");
  if (mode == SampleMode::Stratified && !rng)
    throw std::invalid_argument("sample_ray: stratified mode needs an rng");
  RaySamples s;
  s.t.resize(n);
  s.delta.resize(n);
  const double bin = (ray.far - ray.near) / n;
  for (int i = 0; i < n; ++i) {
    double u = mode == SampleMode::Midpoint ? 0.5 : rng->uniform();
    s.t[i] = ray.near + (i + u) * bin;
  }
  for (int i = 0; i + 1 < n; ++i) s.delta[i] = s.t[i + 1] - s.t[i];
  s.delta[n - 1] = ray.far - s.t[n - 1];
  return s;
}

// Per-ray color and per-sample weights for a batch laid out ray-major:
// element r*N + i is sample i of ray r.
struct Composited {
  std::array<Var, 3> color;   // each of length n_rays
  std::vector<Var> weights;   // n_samples entries, each of length n_rays
};

inline Composited composite(Tape& t, Var sigma, const std::array<Var, 3>& rgb,
                            std::span<const double> delta, int n_rays, int n_samples) {
  const size_t total = static_cast<size_t>(n_rays) * n_samples;
  if (delta.size() != total || t.value(sigma).size() != total)
    throw std::invalid_argument("composite: shape mismatch");
  for (double v : t.value(sigma))
    if (v < 0.0) throw std::invalid_argument("composite: negative density");
  for (double v : delta)
    if (v < 0.0) throw std::invalid_argument("composite: negative segment length");

  Composited out;
  out.weights.reserve(n_samples);
  Var trans = t.constant(std::vector<double>(n_rays, 1.0));  // T(1) = 1
  std::array<Var, 3> acc{};
  for (int i = 0; i < n_samples; ++i) {
    std::vector<int32_t> idx(n_rays);
    std::vector<double> dslice(n_rays);
    for (int r = 0; r < n_rays; ++r) {
      idx[r] = static_cast<int32_t>(r) * n_samples + i;
      dslice[r] = delta[static_cast<size_t>(r) * n_samples + i];
    }
    Var sig = t.gather(sigma, idx);
    Var decay = t.exp(t.neg(t.mul(sig, t.constant(dslice))));
    Var trans_next = t.mul(trans, decay);
    Var w = t.sub(trans, trans_next);  // T(i)(1 - e^{-sigma delta})
    out.weights.push_back(w);
    for (int c = 0; c < 3; ++c) {
      Var term = t.mul(w, t.gather(rgb[c], idx));
      acc[c] = acc[c].valid() ? t.add(acc[c], term) : term;
    }
    trans = trans_next;
  }
  out.color = acc;
  return out;
}

// Sample, evaluate the field, and composite a batch of rays on the tape.
inline Composited render_rays_recorded(Tape& t, const RadianceField& field, Var theta,
                                       std::span<const Ray> rays, int n_samples,
                                       SampleMode mode, Rng* rng = nullptr) {
  const int n_rays = static_cast<int>(rays.size());
  std::vector<double> pts(static_cast<size_t>(n_rays) * n_samples * 3);
  std::vector<double> delta(static_cast<size_t>(n_rays) * n_samples);
  for (int r = 0; r < n_rays; ++r) {
    RaySamples s = sample_ray(rays[r], n_samples, mode, rng);
    for (int i = 0; i < n_samples; ++i) {
      size_t k = static_cast<size_t>(r) * n_samples + i;
      for (int a = 0; a < 3; ++a)
        pts[k * 3 + a] = rays[r].origin[a] + s.t[i] * rays[r].direction[a];
      delta[k] = s.delta[i];
    }
  }
  FieldEval e = field.eval_batch(t, theta, pts);
  return composite(t, e.sigma, e.rgb, delta, n_rays, n_samples);
}

// Plain (non-recorded) rendering; colors interleaved rgb per ray.
inline std::vector<double> render_rays(const RadianceField& field, std::span<const Ray> rays,
                                       int n_samples, SampleMode mode, Rng* rng = nullptr) {
  Tape t;
  Var theta = t.leaf(field.params(), /*requires_grad=*/false);
  Composited c = render_rays_recorded(t, field, theta, rays, n_samples, mode, rng);
  std::vector<double> out(rays.size() * 3);
  for (int ch = 0; ch < 3; ++ch) {
    const std::vector<double>& v = t.value(c.color[ch]);
    for (size_t r = 0; r < rays.size(); ++r) out[r * 3 + ch] = v[r];
  }
  return out;
}

enum class LossMode { SquaredL2, L2Norm };

// Loss against targets that are themselves on the tape (e.g. warped colors).
inline Var recon_loss_vars(Tape& t, const Composited& rendered,
                           const std::array<Var, 3>& targets,
                           LossMode mode = LossMode::SquaredL2) {
  Var sq{};
  for (int c = 0; c < 3; ++c) {
    Var d = t.sub(rendered.color[c], targets[c]);
    Var d2 = t.mul(d, d);
    sq = sq.valid() ? t.add(sq, d2) : d2;
  }
  if (mode == LossMode::L2Norm) sq = t.sqrt(t.add(sq, t.scalar(1e-24)));
  return t.sum(sq);
}

// Sum over the batch of per-ray ||C_hat - C||^2 (default) or ||C_hat - C||.
inline Var recon_loss(Tape& t, const Composited& rendered, std::span<const double> targets,
                      LossMode mode = LossMode::SquaredL2) {
  const size_t n_rays = t.value(rendered.color[0]).size();
  if (targets.size() != n_rays * 3) throw std::invalid_argument("recon_loss: count mismatch");
  Var sq{};
  for (int c = 0; c < 3; ++c) {
    std::vector<double> tgt(n_rays);
    for (size_t r = 0; r < n_rays; ++r) tgt[r] = targets[r * 3 + c];
    Var d = t.sub(rendered.color[c], t.constant(tgt));
    Var d2 = t.mul(d, d);
    sq = sq.valid() ? t.add(sq, d2) : d2;
  }
  if (mode == LossMode::L2Norm) sq = t.sqrt(t.add(sq, t.scalar(1e-24)));
  return t.sum(sq);
}

inline Var recon_loss(Tape& t, const RadianceField& field, Var theta, std::span<const Ray> rays,
                      std::span<const double> targets, int n_samples, SampleMode mode,
                      Rng* rng = nullptr, LossMode loss_mode = LossMode::SquaredL2) {
  Composited c = render_rays_recorded(t, field, theta, rays, n_samples, mode, rng);
  return recon_loss(t, c, targets, loss_mode);
}

}  // namespace nerfpoison
