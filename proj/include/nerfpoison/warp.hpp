#pragma once

#include <array>
#include <cmath>
#include <span>
#include <stdexcept>
#include <utility>
#include <vector>

#include "nerfpoison/errors.hpp"
#include "nerfpoison/image.hpp"
#include "nerfpoison/tape.hpp"

namespace nerfpoison {

enum class PerturbKind { SpatialFlow, PerPixelAdditive };

// Attack mode: spatial flow budget in pixels, additive budget in color units.
struct PerturbMode {
  PerturbKind kind = PerturbKind::SpatialFlow;
  double rho = 0.0;

  void validate() const {
    if (!(rho > 0.0)) throw ConfigError("PerturbMode: rho must be > 0");
  }
};

namespace detail {
// Shared bilinear footprint: clamped coordinates, top-left corner, fractions,
// and whether the coordinate still moves with the input (for gradients).
struct BilinearCell {
  int x0, x1, y0, y1;
  double fx, fy;
  bool du_pass, dv_pass;
};

inline BilinearCell bilinear_cell(const Image& img, double u, double v) {
  const int w = img.width, h = img.height;
  double uc = std::min(std::max(u, 0.0), static_cast<double>(w - 1));
  double vc = std::min(std::max(v, 0.0), static_cast<double>(h - 1));
  BilinearCell c{};
  c.x0 = w > 1 ? std::min(static_cast<int>(std::floor(uc)), w - 2) : 0;
  c.y0 = h > 1 ? std::min(static_cast<int>(std::floor(vc)), h - 2) : 0;
  c.x1 = std::min(c.x0 + 1, w - 1);
  c.y1 = std::min(c.y0 + 1, h - 1);
  c.fx = uc - c.x0;
  c.fy = vc - c.y0;
  // Ties at the image border keep the inside gradient (clamp convention).
  c.du_pass = w > 1 && u >= 0.0 && u <= w - 1;
  c.dv_pass = h > 1 && v >= 0.0 && v <= h - 1;
  return c;
}
}  // namespace detail

// Bilinear interpolation with pixel centers at integer coordinates;
// out-of-range coordinates are clamped (border replication).
inline std::array<double, 3> bilinear_sample(const Image& img, double u, double v) {
  if (!std::isfinite(u) || !std::isfinite(v))
    throw std::invalid_argument("bilinear_sample: non-finite coordinates");
  auto c = detail::bilinear_cell(img, u, v);
  std::array<double, 3> out{};
  for (int ch = 0; ch < 3; ++ch) {
    out[ch] = (1.0 - c.fx) * (1.0 - c.fy) * img.at(c.x0, c.y0, ch) +
              c.fx * (1.0 - c.fy) * img.at(c.x1, c.y0, ch) +
              (1.0 - c.fx) * c.fy * img.at(c.x0, c.y1, ch) +
              c.fx * c.fy * img.at(c.x1, c.y1, ch);
  }
  return out;
}

// Output pixel i samples the input at (u_i + du_i, v_i + dv_i).
inline Image apply_flow(const Image& img, const FlowField& flow) {
  if (img.width != flow.width || img.height != flow.height)
    throw std::invalid_argument("apply_flow: dimension mismatch");
  Image out(img.width, img.height);
  for (int y = 0; y < img.height; ++y)
    for (int x = 0; x < img.width; ++x) {
      double du = flow.du(x, y), dv = flow.dv(x, y);
      if (du == 0.0 && dv == 0.0) {
        // Identity warp must be bit-exact.
        for (int c = 0; c < 3; ++c) out.at(x, y, c) = img.at(x, y, c);
        continue;
      }
      auto rgb = bilinear_sample(img, x + du, y + dv);
      for (int c = 0; c < 3; ++c) out.at(x, y, c) = rgb[c];
    }
  return out;
}

// Exact adjoints of apply_flow with respect to the flow and the image.
inline std::pair<FlowField, Image> flow_backward(const Image& img, const FlowField& flow,
                                                 const Image& out_adjoint) {
  if (img.width != flow.width || img.height != flow.height ||
      img.width != out_adjoint.width || img.height != out_adjoint.height)
    throw std::invalid_argument("flow_backward: shape mismatch");
  FlowField flow_adj(flow.width, flow.height);
  Image img_adj(img.width, img.height);
  for (int y = 0; y < img.height; ++y)
    for (int x = 0; x < img.width; ++x) {
      double u = x + flow.du(x, y), v = y + flow.dv(x, y);
      auto c = detail::bilinear_cell(img, u, v);
      double gu = 0.0, gv = 0.0;
      for (int ch = 0; ch < 3; ++ch) {
        double g = out_adjoint.at(x, y, ch);
        double c00 = img.at(c.x0, c.y0, ch), c10 = img.at(c.x1, c.y0, ch);
        double c01 = img.at(c.x0, c.y1, ch), c11 = img.at(c.x1, c.y1, ch);
        gu += g * ((c10 - c00) * (1.0 - c.fy) + (c11 - c01) * c.fy);
        gv += g * ((c01 - c00) * (1.0 - c.fx) + (c11 - c10) * c.fx);
        img_adj.at(c.x0, c.y0, ch) += g * (1.0 - c.fx) * (1.0 - c.fy);
        img_adj.at(c.x1, c.y0, ch) += g * c.fx * (1.0 - c.fy);
        img_adj.at(c.x0, c.y1, ch) += g * (1.0 - c.fx) * c.fy;
        img_adj.at(c.x1, c.y1, ch) += g * c.fx * c.fy;
      }
      flow_adj.du(x, y) = c.du_pass ? gu : 0.0;
      flow_adj.dv(x, y) = c.dv_pass ? gv : 0.0;
    }
  return {std::move(flow_adj), std::move(img_adj)};
}

// Clamp every component to [-rho, rho]; interior components are untouched.
inline FlowField project_linf(const FlowField& flow, double rho) {
  if (!(rho > 0.0)) throw std::invalid_argument("project_linf: rho must be > 0");
  FlowField out = flow;
  for (double& v : out.data) v = std::min(std::max(v, -rho), rho);
  return out;
}

// clamp(img + clamp(eps, -rho, rho), 0, 1); eps is H x W x 3 color offsets.
inline Image apply_additive(const Image& img, std::span<const double> eps, double rho) {
  if (eps.size() != img.data.size())
    throw std::invalid_argument("apply_additive: shape mismatch");
  Image out(img.width, img.height);
  for (size_t i = 0; i < img.data.size(); ++i) {
    double e = std::min(std::max(eps[i], -rho), rho);
    out.data[i] = std::min(std::max(img.data[i] + e, 0.0), 1.0);
  }
  return out;
}

// ---- tape-recorded variants (used inside the poisoning loop) --------------

// Colors of `img` sampled at pixel + flow for a batch of pixels, recorded so
// the flow leaf receives gradients. Flow components for pixel (x, y) live at
// flow_base + ((y*W + x)*2 + {0,1}) inside `flow`. The bilinear footprint is
// fixed from the flow values at record time (exact almost everywhere).
inline std::array<Var, 3> warp_targets_recorded(Tape& t, const Image& img, Var flow,
                                                int flow_base,
                                                std::span<const std::pair<int, int>> pixels) {
  const int w = img.width, h = img.height;
  const size_t n = pixels.size();
  const std::vector<double>& fval = t.value(flow);

  std::vector<int32_t> idx_u(n), idx_v(n);
  std::vector<double> base_u(n), base_v(n);
  std::vector<double> x0v(n), y0v(n);
  std::array<std::array<std::vector<double>, 3>, 4> corner;  // [corner][ch]
  for (auto& cc : corner)
    for (auto& ch : cc) ch.resize(n);

  for (size_t i = 0; i < n; ++i) {
    auto [px, py] = pixels[i];
    size_t fo = static_cast<size_t>(flow_base) + (static_cast<size_t>(py) * w + px) * 2;
    idx_u[i] = static_cast<int32_t>(fo);
    idx_v[i] = static_cast<int32_t>(fo + 1);
    base_u[i] = px;
    base_v[i] = py;
    double u = px + fval[fo], v = py + fval[fo + 1];
    if (!std::isfinite(u) || !std::isfinite(v))
      throw NumericError("warp_targets_recorded: non-finite flow");
    auto c = detail::bilinear_cell(img, u, v);
    x0v[i] = c.x0;
    y0v[i] = c.y0;
    for (int ch = 0; ch < 3; ++ch) {
      corner[0][ch][i] = img.at(c.x0, c.y0, ch);
      corner[1][ch][i] = img.at(c.x1, c.y0, ch);
      corner[2][ch][i] = img.at(c.x0, c.y1, ch);
      corner[3][ch][i] = img.at(c.x1, c.y1, ch);
    }
  }

  Var u = t.clamp(t.add(t.constant(base_u), t.gather(flow, std::move(idx_u))), 0.0, w - 1);
  Var v = t.clamp(t.add(t.constant(base_v), t.gather(flow, std::move(idx_v))), 0.0, h - 1);
  Var fx = t.sub(u, t.constant(x0v));
  Var fy = t.sub(v, t.constant(y0v));
  Var one = t.scalar(1.0);
  Var gx = t.sub(one, fx), gy = t.sub(one, fy);
  std::array<Var, 4> wgt{t.mul(gx, gy), t.mul(fx, gy), t.mul(gx, fy), t.mul(fx, fy)};

  std::array<Var, 3> out;
  for (int ch = 0; ch < 3; ++ch) {
    Var acc{};
    for (int q = 0; q < 4; ++q) {
      Var term = t.mul(wgt[q], t.constant(corner[q][ch]));
      acc = acc.valid() ? t.add(acc, term) : term;
    }
    out[ch] = acc;
  }
  return out;
}

// Recorded per-pixel-additive targets for a batch of pixels; eps components
// for pixel (x, y) live at eps_base + ((y*W + x)*3 + ch).
inline std::array<Var, 3> additive_targets_recorded(Tape& t, const Image& img, Var eps,
                                                    int eps_base, double rho,
                                                    std::span<const std::pair<int, int>> pixels) {
  const int w = img.width;
  const size_t n = pixels.size();
  std::array<Var, 3> out;
  for (int ch = 0; ch < 3; ++ch) {
    std::vector<int32_t> idx(n);
    std::vector<double> base(n);
    for (size_t i = 0; i < n; ++i) {
      auto [px, py] = pixels[i];
      idx[i] = static_cast<int32_t>(eps_base + (static_cast<size_t>(py) * w + px) * 3 + ch);
      base[i] = img.at(px, py, ch);
    }
    Var e = t.clamp(t.gather(eps, std::move(idx)), -rho, rho);
    out[ch] = t.clamp(t.add(t.constant(base), e), 0.0, 1.0);
  }
  return out;
}

}  // namespace nerfpoison
