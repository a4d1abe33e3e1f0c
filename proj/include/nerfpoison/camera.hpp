#pragma once

#include <array>
#include <cmath>
#include <fstream>
#include <string>
#include <vector>

#include <json.hpp>

#include "nerfpoison/errors.hpp"

namespace nerfpoison {

struct Ray {
  std::array<double, 3> origin;
  std::array<double, 3> direction;  // unit norm
  double near, far;
};

// Right-handed, camera looks along -z, image v grows downward.
struct Camera {
  int width = 0, height = 0;
  double fx = 0, fy = 0, cx = 0, cy = 0;
  std::array<double, 16> c2w{};  // row-major world-from-camera
  double near = 0, far = 0;
  std::string file;  // image filename this pose belongs to

  void validate() const {
    if (width < 1 || height < 1) throw DataError("Camera: bad dimensions");
    if (!(fx > 0) || !(fy > 0)) throw DataError("Camera: bad focal length");
    if (!(near > 0) || !(near < far)) throw DataError("Camera: need 0 < near < far");
    // rotation block orthonormal with det +1
    double rtr[3][3] = {};
    for (int i = 0; i < 3; ++i)
      for (int j = 0; j < 3; ++j)
        for (int k = 0; k < 3; ++k) rtr[i][j] += c2w[k * 4 + i] * c2w[k * 4 + j];
    for (int i = 0; i < 3; ++i)
      for (int j = 0; j < 3; ++j)
        if (std::abs(rtr[i][j] - (i == j ? 1.0 : 0.0)) > 1e-9)
          throw DataError("Camera: rotation block not orthonormal");
    double det = c2w[0] * (c2w[5] * c2w[10] - c2w[6] * c2w[9]) -
                 c2w[1] * (c2w[4] * c2w[10] - c2w[6] * c2w[8]) +
                 c2w[2] * (c2w[4] * c2w[9] - c2w[5] * c2w[8]);
    if (std::abs(det - 1.0) > 1e-9) throw DataError("Camera: rotation determinant != +1");
  }
};

inline Ray pixel_ray(const Camera& cam, int u, int v) {
  if (u < 0 || u >= cam.width || v < 0 || v >= cam.height)
    throw std::out_of_range("pixel_ray: pixel out of bounds");
  double dc[3] = {(u + 0.5 - cam.cx) / cam.fx, -(v + 0.5 - cam.cy) / cam.fy, -1.0};
  std::array<double, 3> d{}, o{};
  for (int i = 0; i < 3; ++i) {
    for (int j = 0; j < 3; ++j) d[i] += cam.c2w[i * 4 + j] * dc[j];
    o[i] = cam.c2w[i * 4 + 3];
  }
  double n = std::sqrt(d[0] * d[0] + d[1] * d[1] + d[2] * d[2]);
  for (double& x : d) x /= n;
  return Ray{o, d, cam.near, cam.far};
}

inline std::vector<Camera> load_poses(const std::string& path) {
  std::ifstream f(path);
  if (!f) throw DataError("load_poses: cannot open " + path);
  nlohmann::json j;
  try {
    f >> j;
  } catch (const nlohmann::json::exception& e) {
    throw DataError("load_poses: malformed JSON in " + path + ": " + e.what());
  }
  if (!j.contains("version") || j["version"] != 1)
    throw DataError("load_poses: missing or unsupported \"version\"");
  if (!j.contains("frames") || !j["frames"].is_array())
    throw DataError("load_poses: missing \"frames\" array");

  std::vector<Camera> cams;
  for (const auto& fr : j["frames"]) {
    Camera c;
    auto need = [&](const char* key) -> const nlohmann::json& {
      if (!fr.contains(key))
        throw DataError(std::string("load_poses: frame missing \"") + key + "\"");
      return fr[key];
    };
    c.file = need("file").get<std::string>();
    c.width = need("width").get<int>();
    c.height = need("height").get<int>();
    c.fx = need("fx").get<double>();
    c.fy = need("fy").get<double>();
    c.cx = need("cx").get<double>();
    c.cy = need("cy").get<double>();
    c.near = need("near").get<double>();
    c.far = need("far").get<double>();
    const auto& m = need("c2w");
    if (!m.is_array() || m.size() != 16)
      throw DataError("load_poses: \"c2w\" must have 16 numbers");
    for (int i = 0; i < 16; ++i) c.c2w[i] = m[i].get<double>();
    c.validate();
    cams.push_back(std::move(c));
  }
  return cams;
}

inline void save_poses(const std::vector<Camera>& cams, const std::string& path) {
  nlohmann::json j;
  j["version"] = 1;
  j["frames"] = nlohmann::json::array();
  for (const Camera& c : cams) {
    nlohmann::json fr;
    fr["file"] = c.file;
    fr["width"] = c.width;
    fr["height"] = c.height;
    fr["fx"] = c.fx;
    fr["fy"] = c.fy;
    fr["cx"] = c.cx;
    fr["cy"] = c.cy;
    fr["near"] = c.near;
    fr["far"] = c.far;
    fr["c2w"] = c.c2w;
    j["frames"].push_back(std::move(fr));
  }
  std::ofstream f(path);
  if (!f) throw DataError("save_poses: cannot open " + path);
  f << j.dump(2) << "\n";
}

}  // namespace nerfpoison
