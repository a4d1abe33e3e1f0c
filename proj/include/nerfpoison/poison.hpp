#pragma once

#include <array>
#include <cmath>
#include <cstdint>
#include <functional>
#include <memory>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "nerfpoison/camera.hpp"
#include "nerfpoison/errors.hpp"
#include "nerfpoison/field.hpp"
#include "nerfpoison/image.hpp"
#include "nerfpoison/optimizer.hpp"
#include "nerfpoison/render.hpp"
#include "nerfpoison/rng.hpp"
#include "nerfpoison/train.hpp"
#include "nerfpoison/warp.hpp"

namespace nerfpoison {

struct PoisonConfig {
  double rho = 2.0;               // pixels (flow) or color units (additive)
  int k = 5;                      // recorded inner steps per epoch
  int m = 40;                     // outer epochs
  double alpha = 0.5;             // inner learning rate
  double alpha_prime_base = 0.1;  // outer step base before normalization
  int batch_rays = 1024;
  int unroll_depth = -1;  // -1 => k (full unroll); earlier steps detached
  OptKind inner_opt = OptKind::Sgd;
  PerturbKind mode = PerturbKind::SpatialFlow;
  int samples_per_ray = 32;
  LossMode loss = LossMode::SquaredL2;
  bool reset_theta_per_epoch = false;  // ablation; default warm-starts across epochs
  bool random_init_delta = false;      // uniform in [-rho/10, rho/10]
  size_t trace_budget_bytes = size_t{256} << 20;
  uint64_t seed = 0;

  int effective_unroll() const { return unroll_depth < 0 ? std::max(k, 1) : unroll_depth; }

  void validate() const {
    if (!(rho > 0)) throw ConfigError("poison: rho must be > 0");
    if (k < 0) throw ConfigError("poison: k must be >= 0");
    if (m < 1) throw ConfigError("poison: m must be >= 1");
    if (!(alpha > 0)) throw ConfigError("poison: alpha must be > 0");
    if (!(alpha_prime_base > 0)) throw ConfigError("poison: alpha_prime_base must be > 0");
    if (batch_rays < 1) throw ConfigError("poison: batch_rays must be >= 1");
    if (samples_per_ray < 1) throw ConfigError("poison: samples_per_ray must be >= 1");
    int t = effective_unroll();
    if (t < 1 || t > std::max(k, 1))
      throw ConfigError("poison: unroll_depth must satisfy 1 <= t <= max(k,1)");
  }
};

struct PoisonResult {
  std::vector<FlowField> flows;            // spatial mode
  std::vector<std::vector<double>> eps;    // additive mode
  std::vector<Image> poisoned;
  std::vector<double> final_theta;
  std::vector<double> outer_loss, mean_abs_grad, alpha_prime;  // per epoch
};

namespace detail {
inline size_t delta_stride(const Image& img, PerturbKind mode) {
  return static_cast<size_t>(img.width) * img.height * (mode == PerturbKind::SpatialFlow ? 2 : 3);
}

// Perturbed target colors for a mixed-image batch, reassembled in batch order.
inline std::array<Var, 3> batch_targets_recorded(Tape& t, std::span<const Image> images,
                                                 Var delta, PerturbKind mode, double rho,
                                                 std::span<const std::array<int, 3>> batch) {
  const int n = static_cast<int>(batch.size());
  std::array<Var, 3> out{};
  for (size_t img = 0; img < images.size(); ++img) {
    std::vector<std::pair<int, int>> pixels;
    std::vector<int32_t> pos;
    for (int b = 0; b < n; ++b)
      if (batch[b][0] == static_cast<int>(img)) {
        pixels.emplace_back(batch[b][1], batch[b][2]);
        pos.push_back(b);
      }
    if (pixels.empty()) continue;
    int base = 0;
    for (size_t j = 0; j < img; ++j) base += static_cast<int>(delta_stride(images[j], mode));
    std::array<Var, 3> cols =
        mode == PerturbKind::SpatialFlow
            ? warp_targets_recorded(t, images[img], delta, base, pixels)
            : additive_targets_recorded(t, images[img], delta, base, rho, pixels);
    for (int c = 0; c < 3; ++c) {
      Var sc = t.scatter_add(cols[c], std::vector<int32_t>(pos), n);
      out[c] = out[c].valid() ? t.add(out[c], sc) : sc;
    }
  }
  return out;
}
}  // namespace detail

struct InnerRecorded {
  Var delta;  // perturbation leaf (all images concatenated)
  Var theta;  // parameters after k recorded steps
};

// Inner loop: k optimizer steps against targets sampled through the
// perturbation, every update recorded so theta_k depends on delta.
inline InnerRecorded inner_train_recorded(Tape& t, const RadianceField& field,
                                          std::span<const Image> images,
                                          std::span<const Camera> cams,
                                          std::span<const double> delta_all,
                                          std::span<const double> theta0,
                                          const PoisonConfig& cfg, Rng& batch_rng) {
  cfg.validate();
  InnerRecorded r;
  r.delta = t.leaf(delta_all);
  r.theta = t.leaf(theta0);
  RecordedOptimizer opt{cfg.inner_opt, cfg.alpha};
  const int detach_before = cfg.k - cfg.effective_unroll();

  for (int s = 0; s < cfg.k; ++s) {
    auto mark = t.push_marker();
    std::vector<std::array<int, 3>> batch(cfg.batch_rays);
    std::vector<Ray> rays;
    rays.reserve(cfg.batch_rays);
    for (auto& b : batch) {
      b[0] = static_cast<int>(batch_rng.uniform_int(images.size()));
      b[1] = static_cast<int>(batch_rng.uniform_int(static_cast<size_t>(images[b[0]].width)));
      b[2] = static_cast<int>(batch_rng.uniform_int(static_cast<size_t>(images[b[0]].height)));
      rays.push_back(pixel_ray(cams[b[0]], b[1], b[2]));
    }
    std::array<Var, 3> targets =
        detail::batch_targets_recorded(t, images, r.delta, cfg.mode, cfg.rho, batch);
    Composited c =
        render_rays_recorded(t, field, r.theta, rays, cfg.samples_per_ray, SampleMode::Midpoint);
    Var loss = recon_loss_vars(t, c, targets, cfg.loss);
    if (!std::isfinite(t.scalar_value(loss)))
      throw NumericError("inner_train_recorded: non-finite loss at step " + std::to_string(s));
    Var g = t.grad_of(loss, r.theta);
    r.theta = opt.apply(t, r.theta, g);

    std::vector<Var> keep{r.theta};
    if (opt.m.valid()) {
      keep.push_back(opt.m);
      keep.push_back(opt.v);
    }
    // drop this step's intermediate values once the trace exceeds the budget;
    // un-checkpointed markers are harmless and cleaned up on truncate
    if (t.bytes() > cfg.trace_budget_bytes) t.checkpoint_segment(mark, keep);

    if (s < detach_before) {
      // truncated unroll: treat this step's result as a constant
      r.theta = t.leaf(t.value(r.theta));
      if (opt.m.valid()) {
        opt.m = t.leaf(t.value(opt.m));
        opt.v = t.leaf(t.value(opt.v));
      }
    }
  }
  return r;
}

// Outer objective: render with theta_k against CLEAN targets and backpropagate
// through the recorded inner updates into delta.
inline std::vector<double> outer_grad(Tape& t, const RadianceField& field,
                                      const InnerRecorded& inner,
                                      std::span<const Image> clean_images,
                                      std::span<const Camera> cams, const PoisonConfig& cfg,
                                      Rng& eval_rng, double* outer_loss_out = nullptr,
                                      double seed = 1.0) {
  PixelBatch b = sample_pixel_batch(clean_images, cams, cfg.batch_rays, eval_rng);
  Composited c = render_rays_recorded(t, field, inner.theta, b.rays, cfg.samples_per_ray,
                                      SampleMode::Midpoint);
  Var loss = recon_loss(t, c, b.targets, cfg.loss);
  double lv = t.scalar_value(loss);
  if (!std::isfinite(lv)) throw NumericError("outer_grad: non-finite outer loss");
  if (outer_loss_out) *outer_loss_out = lv;
  Adjoints adj = t.backward(loss, seed);
  return adj.of(inner.delta);
}

// alpha' = base / max(mean |g|, 1e-12)
inline double normalized_outer_step(std::span<const double> g, double base) {
  double mean = 0.0;
  for (double v : g) mean += std::abs(v);
  if (!g.empty()) mean /= static_cast<double>(g.size());
  return base / std::max(mean, 1e-12);
}

inline PoisonResult poison_dataset(std::span<const Image> images, std::span<const Camera> cams,
                                   const std::function<std::unique_ptr<RadianceField>()>& init,
                                   const PoisonConfig& cfg) {
  cfg.validate();
  if (images.empty() || images.size() != cams.size())
    throw DataError("poison_dataset: need matching non-empty images and cameras");

  std::unique_ptr<RadianceField> field = init();
  std::vector<double> init_theta = field->params();
  std::vector<double> theta = init_theta;

  size_t total = 0;
  for (const Image& img : images) total += detail::delta_stride(img, cfg.mode);
  std::vector<double> delta(total, 0.0);
  Rng init_rng = make_rng(cfg.seed, /*stream=*/12);
  if (cfg.random_init_delta)
    for (double& v : delta) v = init_rng.uniform(-cfg.rho / 10.0, cfg.rho / 10.0);

  Rng batch_rng = make_rng(cfg.seed, /*stream=*/10);
  Rng eval_rng = make_rng(cfg.seed, /*stream=*/11);

  PoisonResult res;
  for (int epoch = 0; epoch < cfg.m; ++epoch) {
    try {
      if (cfg.reset_theta_per_epoch) theta = init_theta;
      Tape t;
      InnerRecorded inner =
          inner_train_recorded(t, *field, images, cams, delta, theta, cfg, batch_rng);
      double outer = 0.0;
      std::vector<double> g =
          outer_grad(t, *field, inner, images, cams, cfg, eval_rng, &outer);
      double ap = normalized_outer_step(g, cfg.alpha_prime_base);
      double mean = 0.0;
      for (double v : g) mean += std::abs(v);
      mean /= std::max<size_t>(g.size(), 1);

      for (size_t i = 0; i < delta.size(); ++i) {
        double v = delta[i] + ap * g[i];  // ascent on the outer objective
        delta[i] = std::min(std::max(v, -cfg.rho), cfg.rho);
      }
      theta = t.value(inner.theta);
      for (double v : theta)
        if (!std::isfinite(v)) throw NumericError("non-finite parameters");

      res.outer_loss.push_back(outer);
      res.mean_abs_grad.push_back(mean);
      res.alpha_prime.push_back(ap);
    } catch (const NumericError& e) {
      throw NumericError("poison_dataset: epoch " + std::to_string(epoch) + ": " + e.what());
    }
  }

  size_t off = 0;
  for (size_t i = 0; i < images.size(); ++i) {
    size_t stride = detail::delta_stride(images[i], cfg.mode);
    std::span<const double> d(delta.data() + off, stride);
    if (cfg.mode == PerturbKind::SpatialFlow) {
      FlowField f(images[i].width, images[i].height);
      f.data.assign(d.begin(), d.end());
      res.poisoned.push_back(apply_flow(images[i], f));
      res.flows.push_back(std::move(f));
    } else {
      res.eps.emplace_back(d.begin(), d.end());
      res.poisoned.push_back(apply_additive(images[i], d, cfg.rho));
    }
    off += stride;
  }
  res.final_theta = std::move(theta);
  return res;
}

}  // namespace nerfpoison
