#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <filesystem>
#include <fstream>

#include "nerfpoison/synthetic.hpp"

using namespace nerfpoison;

namespace {
std::filesystem::path tmp_path(const char* name) {
  auto dir = std::filesystem::temp_directory_path() / "nerfpoison_test";
  std::filesystem::create_directories(dir);
  return dir / name;
}

Camera identity_camera(int wh) {
  Camera c;
  c.width = c.height = wh;
  c.fx = c.fy = wh;
  c.cx = c.cy = wh / 2.0;
  c.near = 0.5;
  c.far = 4.0;
  for (int i = 0; i < 4; ++i) c.c2w[i * 4 + i] = 1.0;
  return c;
}
}  // namespace

TEST_CASE("pixel_ray examples") {
  Camera cam = identity_camera(8);
  // u + 0.5 == cx at u = 3 (cx = 4? no: cx = 4.0, u+0.5 = 3.5) -> use cx = 3.5
  cam.cx = 3.5;
  cam.cy = 3.5;
  Ray on_axis = pixel_ray(cam, 3, 3);
  CHECK(on_axis.direction[0] == 0.0);
  CHECK(on_axis.direction[1] == 0.0);
  CHECK(on_axis.direction[2] == -1.0);
  CHECK(on_axis.origin[0] == 0.0);
  CHECK(on_axis.near == 0.5);

  // right edge: fx = W, cx = W/2, u = W-1 -> x-component 0.5 - 1/(2W) before norm
  Camera edge = identity_camera(8);
  Ray r = pixel_ray(edge, 7, 3);
  double dx = (7 + 0.5 - 4.0) / 8.0, dy = -(3 + 0.5 - 4.0) / 8.0;
  double n = std::sqrt(dx * dx + dy * dy + 1.0);
  CHECK(r.direction[0] == doctest::Approx(dx / n).epsilon(1e-15));
  CHECK(r.direction[1] == doctest::Approx(dy / n).epsilon(1e-15));
  CHECK(r.direction[2] == doctest::Approx(-1.0 / n).epsilon(1e-15));

  // 90 degrees about y maps the on-axis ray to (-1, 0, 0)
  Camera rot = identity_camera(8);
  rot.cx = rot.cy = 3.5;
  rot.c2w = {0, 0, 1, 0, 0, 1, 0, 0, -1, 0, 0, 0, 0, 0, 0, 1};
  Ray rr = pixel_ray(rot, 3, 3);
  CHECK(rr.direction[0] == doctest::Approx(-1.0).epsilon(1e-15));
  CHECK(rr.direction[1] == doctest::Approx(0.0).epsilon(1e-15));
  CHECK(rr.direction[2] == doctest::Approx(0.0).epsilon(1e-15));

  CHECK_THROWS_AS(pixel_ray(cam, -1, 0), std::out_of_range);
  CHECK_THROWS_AS(pixel_ray(cam, 0, 8), std::out_of_range);
}

TEST_CASE("ray directions unit norm for all pixels") {
  SyntheticSceneSpec spec;
  spec.camera_count = 4;
  spec.image_width = spec.image_height = 9;
  auto [field, cams] = make_synthetic_scene(spec, 5);
  for (const Camera& cam : cams)
    for (int v = 0; v < cam.height; ++v)
      for (int u = 0; u < cam.width; ++u) {
        Ray r = pixel_ray(cam, u, v);
        double n = r.direction[0] * r.direction[0] + r.direction[1] * r.direction[1] +
                   r.direction[2] * r.direction[2];
        CHECK(std::abs(n - 1.0) <= 1e-12);
      }
}

TEST_CASE("pose json roundtrip") {
  Camera cam = identity_camera(8);
  cam.file = "train_000.png";
  cam.fx = 8.125;
  cam.c2w[3] = 0.1 + 0.2;  // a value without a short decimal form
  auto p = tmp_path("poses.json");
  save_poses({cam}, p.string());
  auto back = load_poses(p.string());
  REQUIRE(back.size() == 1);
  CHECK(back[0].file == cam.file);
  CHECK(back[0].width == cam.width);
  CHECK(back[0].fx == 8.125);
  CHECK(back[0].near == cam.near);
  CHECK(back[0].far == cam.far);
  for (int i = 0; i < 16; ++i) CHECK(back[0].c2w[i] == cam.c2w[i]);
}

TEST_CASE("pose json errors") {
  Camera cam = identity_camera(8);

  Camera scaled = cam;
  for (int i = 0; i < 12; ++i) scaled.c2w[i] *= 2.0;
  auto p1 = tmp_path("scaled.json");
  save_poses({cam}, p1.string());  // write valid, then corrupt in memory path
  CHECK_THROWS_WITH_AS(scaled.validate(), doctest::Contains("orthonormal"), DataError);

  // missing "far" names the field
  nlohmann::json j;
  j["version"] = 1;
  nlohmann::json fr;
  fr["file"] = "a.png";
  fr["width"] = 8;
  fr["height"] = 8;
  fr["fx"] = 8.0;
  fr["fy"] = 8.0;
  fr["cx"] = 4.0;
  fr["cy"] = 4.0;
  fr["near"] = 0.5;
  fr["c2w"] = std::vector<double>{1, 0, 0, 0, 0, 1, 0, 0, 0, 0, 1, 0, 0, 0, 0, 1};
  j["frames"] = {fr};
  auto p2 = tmp_path("missing_far.json");
  std::ofstream(p2) << j.dump();
  CHECK_THROWS_WITH_AS(load_poses(p2.string()), doctest::Contains("far"), DataError);

  auto p3 = tmp_path("garbage.json");
  std::ofstream(p3) << "{not json";
  CHECK_THROWS_AS(load_poses(p3.string()), DataError);

  // reflection (det = -1) rejected even though orthonormal
  Camera mirror = cam;
  mirror.c2w[0] = -1.0;
  CHECK_THROWS_WITH_AS(mirror.validate(), doctest::Contains("determinant"), DataError);
}

TEST_CASE("make_synthetic_scene voxelization") {
  SyntheticSceneSpec spec;
  spec.grid_resolution = 16;

  // empty primitive list: zero density everywhere
  auto [empty, cams0] = make_synthetic_scene(spec, 1);
  const int r = spec.grid_resolution;
  for (int ix = 0; ix < r; ++ix)
    for (int iy = 0; iy < r; ++iy)
      for (int iz = 0; iz < r; ++iz) {
        std::array<double, 3> q{-1.0 + 2.0 * ix / (r - 1), -1.0 + 2.0 * iy / (r - 1),
                                -1.0 + 2.0 * iz / (r - 1)};
        CHECK(empty.eval(q)[0] == 0.0);
      }

  // full-cube box with density d: every node evaluates to d
  spec.primitives = {{"box", {0, 0, 0}, 1.0, 2.5, {0.8, 0.2, 0.1}}};
  auto [cube, cams1] = make_synthetic_scene(spec, 1);
  for (int ix = 0; ix < r; ix += 5)
    for (int iy = 0; iy < r; iy += 5)
      for (int iz = 0; iz < r; iz += 5) {
        std::array<double, 3> q{-1.0 + 2.0 * ix / (r - 1), -1.0 + 2.0 * iy / (r - 1),
                                -1.0 + 2.0 * iz / (r - 1)};
        auto sv = cube.eval(q);
        CHECK(sv[0] == doctest::Approx(2.5).epsilon(1e-12));
        CHECK(sv[1] == doctest::Approx(0.8).epsilon(1e-5));
      }

  // centered sphere: occupied node count matches the brute-force test
  spec.primitives = {{"sphere", {0, 0, 0}, 0.5, 3.0, {1, 0, 0}}};
  auto [sphere, cams2] = make_synthetic_scene(spec, 1);
  int occupied = 0, expected = 0;
  for (int ix = 0; ix < r; ++ix)
    for (int iy = 0; iy < r; ++iy)
      for (int iz = 0; iz < r; ++iz) {
        double x = -1.0 + 2.0 * ix / (r - 1), y = -1.0 + 2.0 * iy / (r - 1),
               z = -1.0 + 2.0 * iz / (r - 1);
        if (x * x + y * y + z * z <= 0.25) ++expected;
        if (sphere.raw(ix, iy, iz, 0) > -999.0) ++occupied;
      }
  CHECK(expected > 0);
  CHECK(occupied == expected);

  // primitives must stay inside the unit cube
  spec.primitives = {{"sphere", {0.8, 0, 0}, 0.5, 1.0, {1, 0, 0}}};
  CHECK_THROWS_AS(make_synthetic_scene(spec, 1), ConfigError);
}

TEST_CASE("scene spec json roundtrip") {
  SyntheticSceneSpec spec;
  spec.grid_resolution = 8;
  spec.camera_count = 3;
  spec.primitives = {{"sphere", {0.1, -0.2, 0.0}, 0.4, 1.5, {0.9, 0.5, 0.125}}};
  nlohmann::json j = scene_spec_to_json(spec);
  SyntheticSceneSpec back = scene_spec_from_json(j);
  CHECK(back.grid_resolution == 8);
  CHECK(back.camera_count == 3);
  REQUIRE(back.primitives.size() == 1);
  CHECK(back.primitives[0].size == 0.4);
  CHECK(back.primitives[0].rgb[2] == 0.125);
  CHECK(back.focal == spec.focal);
}

TEST_CASE("synthetic scene determinism") {
  SyntheticSceneSpec spec;
  spec.grid_resolution = 8;
  spec.camera_count = 3;
  spec.image_width = spec.image_height = 8;
  spec.primitives = {{"sphere", {0, 0, 0}, 0.5, 2.0, {0.9, 0.1, 0.1}}};
  auto [f1, c1] = make_synthetic_scene(spec, 42);
  auto [f2, c2] = make_synthetic_scene(spec, 42);
  CHECK(f1.params() == f2.params());
  REQUIRE(c1.size() == c2.size());
  for (size_t i = 0; i < c1.size(); ++i)
    for (int k = 0; k < 16; ++k) CHECK(c1[i].c2w[k] == c2[i].c2w[k]);

  auto [f3, c3] = make_synthetic_scene(spec, 43);
  bool any_diff = false;
  for (int k = 0; k < 16; ++k) any_diff |= c1[0].c2w[k] != c3[0].c2w[k];
  CHECK(any_diff);

  for (const Camera& cam : c1) CHECK_NOTHROW(cam.validate());
}

TEST_CASE("render_dataset") {
  SyntheticSceneSpec spec;
  spec.grid_resolution = 8;
  spec.camera_count = 2;
  spec.image_width = spec.image_height = 8;
  auto [empty, cams] = make_synthetic_scene(spec, 7);

  auto imgs = render_dataset(empty, cams, 16);
  REQUIRE(imgs.size() == 2);
  for (const Image& img : imgs)
    for (double v : img.data) CHECK(v == 0.0);  // empty scene renders background

  // same camera twice: identical images
  std::vector<Camera> twice{cams[0], cams[0]};
  spec.primitives = {{"sphere", {0, 0, 0}, 0.5, 5.0, {0.9, 0.1, 0.1}}};
  auto [sphere, cams2] = make_synthetic_scene(spec, 7);
  auto pair = render_dataset(sphere, twice, 32);
  CHECK(pair[0].data == pair[1].data);

  // dense full-cube red box: central pixels saturate to the box color
  spec.primitives = {{"box", {0, 0, 0}, 1.0, 50.0, {1.0, 0.0, 0.0}}};
  auto [box, cams3] = make_synthetic_scene(spec, 7);
  auto reds = render_dataset(box, std::span<const Camera>(cams3.data(), 1), 128);
  int cx = spec.image_width / 2, cy = spec.image_height / 2;
  CHECK(reds[0].at(cx, cy, 0) > 0.95);
  CHECK(reds[0].at(cx, cy, 1) < 0.05);
  CHECK(reds[0].at(cx, cy, 2) < 0.05);
}
