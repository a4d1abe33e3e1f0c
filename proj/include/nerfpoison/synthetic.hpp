#pragma once

#include <array>
#include <cmath>
#include <fstream>
#include <string>
#include <utility>
#include <vector>

#include <json.hpp>

#include "nerfpoison/camera.hpp"
#include "nerfpoison/errors.hpp"
#include "nerfpoison/field.hpp"
#include "nerfpoison/image.hpp"
#include "nerfpoison/render.hpp"
#include "nerfpoison/rng.hpp"

namespace nerfpoison {

struct Primitive {
  std::string kind;  // "sphere" (size = radius) or "box" (size = half-extent)
  std::array<double, 3> center{};
  double size = 0;
  double density = 0;
  std::array<double, 3> rgb{};
};

struct SyntheticSceneSpec {
  int grid_resolution = 16;
  std::vector<Primitive> primitives;
  int camera_count = 7;
  double ring_radius = 3.0;
  double ring_height = 1.0;
  std::array<double, 3> look_at{0, 0, 0};
  int image_width = 32, image_height = 32;
  double focal = 32.0;
  double near = 0.5, far = 6.0;

  void validate() const {
    if (grid_resolution < 2) throw ConfigError("scene: grid_resolution must be >= 2");
    if (camera_count < 1) throw ConfigError("scene: camera_count must be >= 1");
    if (!(ring_radius > 0)) throw ConfigError("scene: ring_radius must be > 0");
    if (image_width < 1 || image_height < 1) throw ConfigError("scene: bad image size");
    if (!(focal > 0)) throw ConfigError("scene: focal must be > 0");
    if (!(near > 0) || !(near < far)) throw ConfigError("scene: need 0 < near < far");
    for (const Primitive& p : primitives) {
      if (p.kind != "sphere" && p.kind != "box")
        throw ConfigError("scene: unknown primitive kind \"" + p.kind + "\"");
      if (!(p.size > 0) || !(p.density > 0))
        throw ConfigError("scene: primitive size and density must be > 0");
      for (int a = 0; a < 3; ++a)
        if (std::abs(p.center[a]) + p.size > 1.0)
          throw ConfigError("scene: primitive extends outside the unit cube");
    }
  }
};

inline SyntheticSceneSpec scene_spec_from_json(const nlohmann::json& j) {
  SyntheticSceneSpec s;
  s.grid_resolution = j.value("grid_resolution", s.grid_resolution);
  s.camera_count = j.value("camera_count", s.camera_count);
  s.ring_radius = j.value("ring_radius", s.ring_radius);
  s.ring_height = j.value("ring_height", s.ring_height);
  if (j.contains("look_at")) s.look_at = j.at("look_at").get<std::array<double, 3>>();
  s.image_width = j.value("image_width", s.image_width);
  s.image_height = j.value("image_height", s.image_height);
  s.focal = j.value("focal", s.focal);
  s.near = j.value("near", s.near);
  s.far = j.value("far", s.far);
  for (const auto& pj : j.value("primitives", nlohmann::json::array())) {
    Primitive p;
    p.kind = pj.at("kind").get<std::string>();
    p.center = pj.at("center").get<std::array<double, 3>>();
    p.size = pj.at("size").get<double>();
    p.density = pj.at("density").get<double>();
    p.rgb = pj.at("rgb").get<std::array<double, 3>>();
    s.primitives.push_back(std::move(p));
  }
  s.validate();
  return s;
}

inline nlohmann::json scene_spec_to_json(const SyntheticSceneSpec& s) {
  nlohmann::json j;
  j["grid_resolution"] = s.grid_resolution;
  j["camera_count"] = s.camera_count;
  j["ring_radius"] = s.ring_radius;
  j["ring_height"] = s.ring_height;
  j["look_at"] = s.look_at;
  j["image_width"] = s.image_width;
  j["image_height"] = s.image_height;
  j["focal"] = s.focal;
  j["near"] = s.near;
  j["far"] = s.far;
  j["primitives"] = nlohmann::json::array();
  for (const Primitive& p : s.primitives)
    j["primitives"].push_back({{"kind", p.kind},
                               {"center", p.center},
                               {"size", p.size},
                               {"density", p.density},
                               {"rgb", p.rgb}});
  return j;
}

namespace detail {
inline bool point_in_primitive(const Primitive& p, const std::array<double, 3>& q) {
  if (p.kind == "sphere") {
    double d2 = 0;
    for (int a = 0; a < 3; ++a) d2 += (q[a] - p.center[a]) * (q[a] - p.center[a]);
    return d2 <= p.size * p.size;
  }
  for (int a = 0; a < 3; ++a)
    if (std::abs(q[a] - p.center[a]) > p.size) return false;
  return true;
}

// softplus^-1 so the activated grid density equals the requested level
inline double inv_softplus(double y) { return std::log(std::expm1(y)); }
inline double logit(double y) {
  double c = std::min(std::max(y, 1e-6), 1.0 - 1e-6);
  return std::log(c / (1.0 - c));
}

inline Camera look_at_camera(const SyntheticSceneSpec& s, double angle) {
  std::array<double, 3> eye{s.ring_radius * std::cos(angle), s.ring_radius * std::sin(angle),
                            s.ring_height};
  std::array<double, 3> z{}, x{}, y{};
  double n = 0;
  for (int a = 0; a < 3; ++a) {
    z[a] = eye[a] - s.look_at[a];  // camera looks along -z
    n += z[a] * z[a];
  }
  n = std::sqrt(n);
  for (double& v : z) v /= n;
  std::array<double, 3> up{0, 0, 1};
  x = {up[1] * z[2] - up[2] * z[1], up[2] * z[0] - up[0] * z[2], up[0] * z[1] - up[1] * z[0]};
  n = std::sqrt(x[0] * x[0] + x[1] * x[1] + x[2] * x[2]);
  if (n < 1e-9) throw ConfigError("scene: camera looks straight along the up axis");
  for (double& v : x) v /= n;
  y = {z[1] * x[2] - z[2] * x[1], z[2] * x[0] - z[0] * x[2], z[0] * x[1] - z[1] * x[0]};

  Camera c;
  c.width = s.image_width;
  c.height = s.image_height;
  c.fx = c.fy = s.focal;
  c.cx = s.image_width / 2.0;
  c.cy = s.image_height / 2.0;
  c.near = s.near;
  c.far = s.far;
  for (int a = 0; a < 3; ++a) {
    c.c2w[a * 4 + 0] = x[a];
    c.c2w[a * 4 + 1] = y[a];
    c.c2w[a * 4 + 2] = z[a];
    c.c2w[a * 4 + 3] = eye[a];
  }
  c.c2w[15] = 1.0;
  return c;
}
}  // namespace detail

// Ground-truth voxel field (density level inside primitives, exactly zero
// outside) plus camera_count cameras on a ring; deterministic given seed.
inline std::pair<VoxelGridField, std::vector<Camera>> make_synthetic_scene(
    const SyntheticSceneSpec& spec, uint64_t seed) {
  spec.validate();
  const int r = spec.grid_resolution;
  VoxelGridField field(r);
  for (int ix = 0; ix < r; ++ix)
    for (int iy = 0; iy < r; ++iy)
      for (int iz = 0; iz < r; ++iz) {
        std::array<double, 3> q{-1.0 + 2.0 * ix / (r - 1), -1.0 + 2.0 * iy / (r - 1),
                                -1.0 + 2.0 * iz / (r - 1)};
        // -1000 keeps stable softplus at exactly zero density
        double sraw = -1000.0;
        std::array<double, 3> color{0, 0, 0};
        for (const Primitive& p : spec.primitives)
          if (detail::point_in_primitive(p, q)) {
            sraw = detail::inv_softplus(p.density);
            color = p.rgb;
          }
        field.raw(ix, iy, iz, 0) = sraw;
        for (int c = 0; c < 3; ++c) field.raw(ix, iy, iz, c + 1) = detail::logit(color[c]);
      }

  Rng rng = make_rng(seed, /*stream=*/0x736365);
  double phase = rng.uniform(0.0, 2.0 * M_PI);
  std::vector<Camera> cams;
  for (int k = 0; k < spec.camera_count; ++k) {
    double angle = phase + 2.0 * M_PI * k / spec.camera_count;
    cams.push_back(detail::look_at_camera(spec, angle));
  }
  return {std::move(field), std::move(cams)};
}

// Deterministic midpoint-sampled renders of every camera.
inline std::vector<Image> render_dataset(const RadianceField& field,
                                         std::span<const Camera> cams, int n_samples) {
  std::vector<Image> out;
  for (const Camera& cam : cams) {
    std::vector<Ray> rays;
    rays.reserve(static_cast<size_t>(cam.width) * cam.height);
    for (int v = 0; v < cam.height; ++v)
      for (int u = 0; u < cam.width; ++u) rays.push_back(pixel_ray(cam, u, v));
    std::vector<double> colors = render_rays(field, rays, n_samples, SampleMode::Midpoint);
    Image img(cam.width, cam.height);
    img.data = std::move(colors);
    out.push_back(std::move(img));
  }
  return out;
}

}  // namespace nerfpoison
