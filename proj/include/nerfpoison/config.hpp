#pragma once

#include <fstream>
#include <string>

#include <json.hpp>

#include "nerfpoison/errors.hpp"
#include "nerfpoison/poison.hpp"
#include "nerfpoison/synthetic.hpp"
#include "nerfpoison/train.hpp"

namespace nerfpoison {

// One JSON document with sections scene / train / poison / render / loss.
struct RunConfig {
  SyntheticSceneSpec scene;
  int heldout_count = 2;

  FitConfig train;
  std::string backend = "grid";
  int grid_resolution = 16;
  int mlp_levels = 4;

  PoisonConfig poison;

  bool deterministic = true;

  void validate() const {
    scene.validate();
    train.validate();
    poison.validate();
    if (heldout_count < 0 || heldout_count >= scene.camera_count)
      throw ConfigError("config: heldout_count must be in [0, camera_count)");
    if (backend != "grid" && backend != "mlp")
      throw ConfigError("config: backend must be \"grid\" or \"mlp\"");
    if (grid_resolution < 2) throw ConfigError("config: grid_resolution must be >= 2");
    if (mlp_levels < 0) throw ConfigError("config: mlp_levels must be >= 0");
  }
};

namespace detail {
inline OptKind parse_opt(const std::string& s) {
  if (s == "sgd") return OptKind::Sgd;
  if (s == "adam") return OptKind::Adam;
  throw ConfigError("config: unknown optimizer \"" + s + "\"");
}

inline SampleMode parse_sampling(const std::string& s) {
  if (s == "midpoint") return SampleMode::Midpoint;
  if (s == "stratified") return SampleMode::Stratified;
  throw ConfigError("config: unknown sampling_mode \"" + s + "\"");
}

inline PerturbKind parse_mode(const std::string& s) {
  if (s == "spatial-flow") return PerturbKind::SpatialFlow;
  if (s == "per-pixel-additive") return PerturbKind::PerPixelAdditive;
  throw ConfigError("config: unknown perturbation mode \"" + s + "\"");
}
}  // namespace detail

inline RunConfig load_run_config(const std::string& path) {
  std::ifstream f(path);
  if (!f) throw ConfigError("config: cannot open " + path);
  nlohmann::json j;
  try {
    f >> j;
  } catch (const nlohmann::json::exception& e) {
    throw ConfigError("config: malformed JSON in " + path + ": " + e.what());
  }

  RunConfig c;
  try {
    if (j.contains("scene")) {
      c.scene = scene_spec_from_json(j["scene"]);
      c.heldout_count = j["scene"].value("heldout_count", c.heldout_count);
    }
    if (j.contains("train")) {
      const auto& t = j["train"];
      c.train.optimizer = detail::parse_opt(t.value("optimizer", std::string("adam")));
      c.train.steps = t.value("steps", c.train.steps);
      c.train.batch_rays = t.value("batch_rays", c.train.batch_rays);
      c.train.lr = t.value("lr", c.train.lr);
      c.train.lr_decay = t.value("lr_decay", c.train.lr_decay);
      c.train.seed = t.value("seed", c.train.seed);
      c.backend = t.value("backend", c.backend);
      c.grid_resolution = t.value("grid_resolution", c.grid_resolution);
      c.mlp_levels = t.value("mlp_levels", c.mlp_levels);
    }
    if (j.contains("poison")) {
      const auto& p = j["poison"];
      c.poison.rho = p.value("rho", c.poison.rho);
      c.poison.k = p.value("k", c.poison.k);
      c.poison.m = p.value("m", c.poison.m);
      c.poison.alpha = p.value("alpha", c.poison.alpha);
      c.poison.alpha_prime_base = p.value("alpha_prime_base", c.poison.alpha_prime_base);
      c.poison.batch_rays = p.value("batch_rays", c.poison.batch_rays);
      c.poison.unroll_depth = p.value("unroll_depth", c.poison.unroll_depth);
      c.poison.inner_opt = detail::parse_opt(p.value("optimizer", std::string("sgd")));
      c.poison.mode = detail::parse_mode(p.value("mode", std::string("spatial-flow")));
      c.poison.seed = p.value("seed", c.poison.seed);
      c.poison.reset_theta_per_epoch =
          p.value("reset_theta_per_epoch", c.poison.reset_theta_per_epoch);
      c.poison.random_init_delta = p.value("random_init_delta", c.poison.random_init_delta);
    }
    if (j.contains("render")) {
      const auto& r = j["render"];
      int n = r.value("samples_per_ray", c.train.samples_per_ray);
      c.train.samples_per_ray = n;
      c.poison.samples_per_ray = n;
      SampleMode m = detail::parse_sampling(r.value("sampling_mode", std::string("midpoint")));
      c.train.sampling = m;
    }
    if (j.contains("loss")) {
      LossMode m = j["loss"].value("squared", true) ? LossMode::SquaredL2 : LossMode::L2Norm;
      c.train.loss = m;
      c.poison.loss = m;
    }
    c.deterministic = j.value("deterministic", true);
  } catch (const nlohmann::json::exception& e) {
    throw ConfigError("config: bad field in " + path + ": " + e.what());
  }
  if (c.deterministic) c.train.sampling = SampleMode::Midpoint;
  c.validate();
  return c;
}

}  // namespace nerfpoison
