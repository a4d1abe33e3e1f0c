#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <limits>

#include "nerfpoison/flo_io.hpp"
#include "nerfpoison/metrics.hpp"
#include "nerfpoison/png_io.hpp"
#include "nerfpoison/rng.hpp"

using namespace nerfpoison;

namespace {
std::filesystem::path tmp_path(const char* name) {
  auto dir = std::filesystem::temp_directory_path() / "nerfpoison_test";
  std::filesystem::create_directories(dir);
  return dir / name;
}
}  // namespace

TEST_CASE("png roundtrip") {
  Rng rng(7);
  Image img(13, 9);
  for (double& v : img.data) v = std::round(rng.uniform() * 255.0) / 255.0;
  img.at(0, 0, 0) = 1.0;          // byte 255
  img.at(1, 0, 1) = 128.0 / 255;  // byte 128
  img.at(2, 0, 2) = 0.0;

  auto p = tmp_path("round.png");
  save_png(img, p.string());
  Image back = load_png(p.string());
  REQUIRE(back.width == img.width);
  REQUIRE(back.height == img.height);
  CHECK(back.at(0, 0, 0) == 1.0);
  CHECK(back.at(1, 0, 1) == 128.0 / 255.0);
  CHECK(back.at(2, 0, 2) == 0.0);
  // input already 8-bit quantized, so load after save is exact
  for (size_t i = 0; i < img.data.size(); ++i) CHECK(back.data[i] == img.data[i]);

  // save(load(img)) is byte-identical for arbitrary values too
  Image noisy(5, 5);
  for (double& v : noisy.data) v = rng.uniform();
  auto p1 = tmp_path("q1.png"), p2 = tmp_path("q2.png");
  save_png(noisy, p1.string());
  save_png(load_png(p1.string()), p2.string());
  std::ifstream f1(p1, std::ios::binary), f2(p2, std::ios::binary);
  std::string b1((std::istreambuf_iterator<char>(f1)), {});
  std::string b2((std::istreambuf_iterator<char>(f2)), {});
  CHECK(b1 == b2);
}

TEST_CASE("png errors") {
  CHECK_THROWS_AS(load_png("/nonexistent/nope.png"), DataError);
  auto p = tmp_path("garbage.png");
  std::ofstream(p, std::ios::binary) << "not a png at all";
  CHECK_THROWS_AS(load_png(p.string()), DataError);
}

TEST_CASE("flo roundtrip 1x1") {
  FlowField f(1, 1);
  f.du(0, 0) = 0.5;
  f.dv(0, 0) = -0.25;
  auto p = tmp_path("one.flo");
  write_flo(f, p.string());
  CHECK(std::filesystem::file_size(p) == 20);
  FlowField back = read_flo(p.string());
  CHECK(back.width == 1);
  CHECK(back.height == 1);
  CHECK(back.du(0, 0) == 0.5);
  CHECK(back.dv(0, 0) == -0.25);
}

TEST_CASE("flo roundtrip 2x2 after f32 cast") {
  Rng rng(3);
  FlowField f(2, 2);
  for (double& v : f.data) v = rng.uniform(-5.0, 5.0);
  auto p = tmp_path("two.flo");
  write_flo(f, p.string());
  FlowField back = read_flo(p.string());
  for (size_t i = 0; i < f.data.size(); ++i)
    CHECK(back.data[i] == static_cast<double>(static_cast<float>(f.data[i])));
  // writing the read-back flow reproduces the file byte for byte
  auto p2 = tmp_path("two2.flo");
  write_flo(back, p2.string());
  std::ifstream f1(p, std::ios::binary), f2(p2, std::ios::binary);
  std::string b1((std::istreambuf_iterator<char>(f1)), {});
  std::string b2((std::istreambuf_iterator<char>(f2)), {});
  CHECK(b1 == b2);
}

TEST_CASE("flo errors") {
  CHECK_THROWS_AS(read_flo("/nonexistent/nope.flo"), DataError);

  auto bad = tmp_path("badmagic.flo");
  {
    std::ofstream f(bad, std::ios::binary);
    float magic = 1.0f;
    int32_t w = 1, h = 1;
    float z[2] = {0, 0};
    f.write(reinterpret_cast<char*>(&magic), 4);
    f.write(reinterpret_cast<char*>(&w), 4);
    f.write(reinterpret_cast<char*>(&h), 4);
    f.write(reinterpret_cast<char*>(z), 8);
  }
  CHECK_THROWS_WITH_AS(read_flo(bad.string()), doctest::Contains("bad magic"), DataError);

  auto trunc = tmp_path("trunc.flo");
  {
    std::ofstream f(trunc, std::ios::binary);
    float magic = kFloMagic;
    int32_t w = 2, h = 2;
    float z = 0;
    f.write(reinterpret_cast<char*>(&magic), 4);
    f.write(reinterpret_cast<char*>(&w), 4);
    f.write(reinterpret_cast<char*>(&h), 4);
    f.write(reinterpret_cast<char*>(&z), 4);  // 1 of 8 floats
  }
  CHECK_THROWS_WITH_AS(read_flo(trunc.string()), doctest::Contains("truncated"), DataError);
}

TEST_CASE("psnr examples") {
  Image a(4, 4, 0.5), b(4, 4, 0.5);
  CHECK(psnr(a, b) == std::numeric_limits<double>::infinity());
  CHECK(psnr_capped(a, b) == 99.0);

  for (double& v : b.data) v = 0.6;  // constant difference 0.1 -> MSE 0.01
  CHECK(psnr(a, b) == doctest::Approx(20.0).epsilon(1e-12));

  // half differ by 0.2, half by 0 -> MSE 0.02
  Image c = a;
  for (size_t i = 0; i < c.data.size(); i += 2) c.data[i] = 0.7;
  CHECK(psnr(a, c) == doctest::Approx(10.0 * std::log10(1.0 / 0.02)).epsilon(1e-12));
  CHECK(psnr(a, c) == doctest::Approx(16.9897).epsilon(1e-4));

  Image d(3, 4);
  CHECK_THROWS_AS(psnr(a, d), std::invalid_argument);
}

TEST_CASE("psnr properties") {
  Rng rng(11);
  Image a(6, 5), b(6, 5);
  for (double& v : a.data) v = rng.uniform();
  for (double& v : b.data) v = rng.uniform();
  CHECK(psnr(a, b) == psnr(b, a));

  // strictly decreases as a single pixel error grows
  double prev = psnr(a, b);
  Image worse = b;
  for (int step = 0; step < 4; ++step) {
    double e = worse.at(2, 2, 1) - a.at(2, 2, 1);
    worse.at(2, 2, 1) = a.at(2, 2, 1) + (std::abs(e) + 0.05) * (e < 0 ? -1 : 1);
    double now = psnr(a, worse);
    CHECK(now < prev);
    prev = now;
  }
}

TEST_CASE("ssim examples") {
  Rng rng(5);
  Image a(16, 12);
  for (double& v : a.data) v = rng.uniform();
  CHECK(ssim(a, a) == doctest::Approx(1.0).epsilon(1e-12));

  Image zero(16, 12, 0.0), one(16, 12, 1.0);
  constexpr double kC1 = 1e-4;
  CHECK(ssim(zero, one) == doctest::Approx(kC1 / (1.0 + kC1)).epsilon(1e-12));
  CHECK(ssim(zero, one) == doctest::Approx(9.999e-5).epsilon(1e-4));

  Image small(8, 8);
  CHECK_THROWS_AS(ssim(small, small), std::invalid_argument);
  Image other(12, 16);
  CHECK_THROWS_AS(ssim(a, other), std::invalid_argument);
}

TEST_CASE("ssim properties") {
  Rng rng(9);
  Image a(14, 14), b(14, 14);
  for (double& v : a.data) v = rng.uniform();
  for (double& v : b.data) v = rng.uniform();
  CHECK(ssim(a, b) == ssim(b, a));
  CHECK(ssim(a, b) < 1.0);
  CHECK(ssim(a, b) >= -1.0 - 1e-12);

  // identical channel permutation in both images leaves the value unchanged
  auto permute = [](const Image& img) {
    Image out(img.width, img.height);
    for (int y = 0; y < img.height; ++y)
      for (int x = 0; x < img.width; ++x)
        for (int c = 0; c < 3; ++c) out.at(x, y, c) = img.at(x, y, (c + 1) % 3);
    return out;
  };
  CHECK(ssim(permute(a), permute(b)) == doctest::Approx(ssim(a, b)).epsilon(1e-12));
}
