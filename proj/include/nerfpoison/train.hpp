#pragma once

#include <cmath>
#include <cstdint>
#include <span>
#include <vector>

#include "nerfpoison/camera.hpp"
#include "nerfpoison/errors.hpp"
#include "nerfpoison/field.hpp"
#include "nerfpoison/image.hpp"
#include "nerfpoison/optimizer.hpp"
#include "nerfpoison/render.hpp"
#include "nerfpoison/rng.hpp"

namespace nerfpoison {

struct FitConfig {
  OptKind optimizer = OptKind::Adam;
  double lr = 0.02;
  int steps = 2000;
  int batch_rays = 1024;
  int samples_per_ray = 64;
  SampleMode sampling = SampleMode::Midpoint;
  LossMode loss = LossMode::SquaredL2;
  bool lr_decay = true;  // exponential decay to 10% over the run
  uint64_t seed = 0;

  void validate() const {
    if (steps < 0) throw ConfigError("fit: steps must be >= 0");
    if (batch_rays < 1) throw ConfigError("fit: batch_rays must be >= 1");
    if (samples_per_ray < 1) throw ConfigError("fit: samples_per_ray must be >= 1");
    if (!(lr > 0)) throw ConfigError("fit: lr must be > 0");
  }
};

struct PixelBatch {
  std::vector<Ray> rays;
  std::vector<double> targets;  // rgb interleaved, 3 per ray
};

// Uniform (image, pixel) pairs with replacement.
inline PixelBatch sample_pixel_batch(std::span<const Image> images,
                                     std::span<const Camera> cams, int batch_rays, Rng& rng) {
  PixelBatch b;
  b.rays.reserve(batch_rays);
  b.targets.reserve(static_cast<size_t>(batch_rays) * 3);
  for (int i = 0; i < batch_rays; ++i) {
    size_t img = rng.uniform_int(images.size());
    int x = static_cast<int>(rng.uniform_int(static_cast<size_t>(images[img].width)));
    int y = static_cast<int>(rng.uniform_int(static_cast<size_t>(images[img].height)));
    b.rays.push_back(pixel_ray(cams[img], x, y));
    for (int c = 0; c < 3; ++c) b.targets.push_back(images[img].at(x, y, c));
  }
  return b;
}

// Standard (non-poisoned) training: sample a ray batch, render, backprop,
// step the optimizer. Returns the per-step loss curve.
inline std::vector<double> fit(RadianceField& field, std::span<const Image> images,
                               std::span<const Camera> cams, const FitConfig& cfg) {
  cfg.validate();
  if (images.empty() || images.size() != cams.size())
    throw DataError("fit: need matching non-empty images and cameras");

  Rng batch_rng = make_rng(cfg.seed, /*stream=*/1);
  Rng sample_rng = make_rng(cfg.seed, /*stream=*/2);
  OptimizerState opt{cfg.optimizer, cfg.lr};
  std::vector<double> params = field.params();
  std::vector<double> losses;
  losses.reserve(cfg.steps);

  for (int s = 0; s < cfg.steps; ++s) {
    if (cfg.lr_decay && cfg.steps > 1)
      opt.lr = cfg.lr * std::pow(0.1, static_cast<double>(s) / (cfg.steps - 1));
    PixelBatch b = sample_pixel_batch(images, cams, cfg.batch_rays, batch_rng);
    Tape t;
    Var theta = t.leaf(params);
    Var loss = recon_loss(t, field, theta, b.rays, b.targets, cfg.samples_per_ray,
                          cfg.sampling, &sample_rng, cfg.loss);
    double lv = t.scalar_value(loss);
    if (!std::isfinite(lv)) throw NumericError("fit: non-finite loss at step " + std::to_string(s));
    losses.push_back(lv);
    auto grads = t.backward(loss);
    opt_step(params, grads.of(theta), opt);
    field.set_params(params);
  }
  return losses;
}

}  // namespace nerfpoison
