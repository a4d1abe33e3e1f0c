#pragma once

#include <cmath>
#include <limits>
#include <stdexcept>
#include <vector>

#include "nerfpoison/image.hpp"

namespace nerfpoison {

// 10*log10(1/MSE) with peak 1, MSE over all pixels and channels.
// Identical images return +infinity (capped to 99 dB in CSV reports).
inline double psnr(const Image& a, const Image& b) {
  if (a.width != b.width || a.height != b.height)
    throw std::invalid_argument("psnr: dimension mismatch");
  double mse = 0.0;
  for (size_t i = 0; i < a.data.size(); ++i) {
    double d = a.data[i] - b.data[i];
    mse += d * d;
  }
  mse /= static_cast<double>(a.data.size());
  if (mse == 0.0) return std::numeric_limits<double>::infinity();
  return 10.0 * std::log10(1.0 / mse);
}

inline constexpr double kPsnrCsvCap = 99.0;

inline double psnr_capped(const Image& a, const Image& b) {
  return std::min(psnr(a, b), kPsnrCsvCap);
}

namespace detail {
inline std::vector<double> ssim_gaussian_window() {
  // 11x11, sigma = 1.5, normalized.
  constexpr int kHalf = 5;
  std::vector<double> w(11 * 11);
  double sum = 0.0;
  for (int y = -kHalf; y <= kHalf; ++y)
    for (int x = -kHalf; x <= kHalf; ++x) {
      double g = std::exp(-(x * x + y * y) / (2.0 * 1.5 * 1.5));
      w[(y + kHalf) * 11 + (x + kHalf)] = g;
      sum += g;
    }
  for (double& v : w) v /= sum;
  return w;
}
}  // namespace detail

// Mean SSIM over sliding 11x11 Gaussian windows fully inside the image
// (no padding), per channel then averaged. C1 = 0.01^2, C2 = 0.03^2.
inline double ssim(const Image& a, const Image& b) {
  if (a.width != b.width || a.height != b.height)
    throw std::invalid_argument("ssim: dimension mismatch");
  constexpr int kWin = 11;
  if (a.width < kWin || a.height < kWin)
    throw std::invalid_argument("ssim: image smaller than 11x11 window");
  static const std::vector<double> win = detail::ssim_gaussian_window();
  constexpr double kC1 = 0.01 * 0.01;
  constexpr double kC2 = 0.03 * 0.03;

  double total = 0.0;
  for (int c = 0; c < 3; ++c) {
    double acc = 0.0;
    long count = 0;
    for (int y0 = 0; y0 + kWin <= a.height; ++y0)
      for (int x0 = 0; x0 + kWin <= a.width; ++x0) {
        double mx = 0, my = 0, mxx = 0, myy = 0, mxy = 0;
        for (int wy = 0; wy < kWin; ++wy)
          for (int wx = 0; wx < kWin; ++wx) {
            double w = win[wy * kWin + wx];
            double x = a.at(x0 + wx, y0 + wy, c);
            double y = b.at(x0 + wx, y0 + wy, c);
            mx += w * x;
            my += w * y;
            // grouping keeps ssim(a,b) == ssim(b,a) and ssim(a,a) == 1 bit-exactly
            mxx += w * (x * x);
            myy += w * (y * y);
            mxy += w * (x * y);
          }
        double vx = mxx - mx * mx;
        double vy = myy - my * my;
        double cov = mxy - mx * my;
        double s = ((2 * mx * my + kC1) * (2 * cov + kC2)) /
                   ((mx * mx + my * my + kC1) * (vx + vy + kC2));
        acc += s;
        ++count;
      }
    total += acc / static_cast<double>(count);
  }
  return total / 3.0;
}

}  // namespace nerfpoison
