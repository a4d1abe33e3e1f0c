#pragma once

#include <array>
#include <cmath>
#include <cstdint>
#include <fstream>
#include <memory>
#include <span>
#include <string>
#include <vector>

#include <json.hpp>

#include "nerfpoison/errors.hpp"
#include "nerfpoison/rng.hpp"
#include "nerfpoison/tape.hpp"

namespace nerfpoison {

// (sigma, rgb) for a batch of points, each Var of length n.
struct FieldEval {
  Var sigma;
  std::array<Var, 3> rgb;
};

// Backend-agnostic radiance field over the unit cube [-1,1]^3.
// Points outside the cube evaluate to (0, black) with zero gradient.
class RadianceField {
 public:
  virtual ~RadianceField() = default;
  virtual std::string backend() const = 0;
  virtual int param_count() const = 0;
  virtual std::vector<double> params() const = 0;
  virtual void set_params(std::span<const double> p) = 0;
  // Record activated (sigma, rgb) for n points (xyz interleaved, length 3n)
  // against the parameter leaf `theta` (length param_count()).
  virtual FieldEval eval_batch(Tape& t, Var theta, std::span<const double> pts) const = 0;

  // Convenience single-point evaluation on a scratch tape.
  std::array<double, 4> eval(std::span<const double, 3> p) const {
    Tape t;
    Var theta = t.leaf(params());
    FieldEval e = eval_batch(t, theta, std::span<const double>(p.data(), 3));
    return {t.value(e.sigma)[0], t.value(e.rgb[0])[0], t.value(e.rgb[1])[0],
            t.value(e.rgb[2])[0]};
  }
};

// Dense voxel grid: R^3 nodes over [-1,1]^3 holding raw (sigma, r, g, b);
// trilinear interpolation of raw values, then softplus / sigmoid.
class VoxelGridField : public RadianceField {
 public:
  explicit VoxelGridField(int resolution)
      : res_(resolution),
        raw_(static_cast<size_t>(resolution) * resolution * resolution * 4) {
    if (resolution < 2) throw ConfigError("VoxelGridField: resolution must be >= 2");
    for (size_t i = 0; i < raw_.size(); ++i) raw_[i] = (i % 4 == 0) ? -1.0 : 0.0;
  }

  int resolution() const { return res_; }
  size_t node_index(int ix, int iy, int iz) const {
    return (static_cast<size_t>(ix) * res_ + iy) * res_ + iz;
  }
  double& raw(int ix, int iy, int iz, int ch) { return raw_[node_index(ix, iy, iz) * 4 + ch]; }
  double raw(int ix, int iy, int iz, int ch) const {
    return raw_[node_index(ix, iy, iz) * 4 + ch];
  }

  std::string backend() const override { return "grid"; }
  int param_count() const override { return static_cast<int>(raw_.size()); }
  std::vector<double> params() const override { return raw_; }
  void set_params(std::span<const double> p) override {
    if (p.size() != raw_.size()) throw ConfigError("VoxelGridField: parameter length mismatch");
    raw_.assign(p.begin(), p.end());
  }

  FieldEval eval_batch(Tape& t, Var theta, std::span<const double> pts) const override {
    const size_t n = pts.size() / 3;
    if (pts.size() != n * 3) throw std::invalid_argument("eval_batch: points length not 3n");

    // one gather + weight vector per corner; weights are constants, gradient
    // flows only through the gathered parameters
    std::array<std::vector<int32_t>, 8> node;
    std::array<std::vector<double>, 8> wgt;
    for (auto& v : node) v.resize(n);
    for (auto& v : wgt) v.resize(n);
    std::vector<double> mask(n);

    for (size_t i = 0; i < n; ++i) {
      double p[3] = {pts[3 * i], pts[3 * i + 1], pts[3 * i + 2]};
      bool inside = true;
      int i0[3];
      double f[3];
      for (int a = 0; a < 3; ++a) {
        if (!std::isfinite(p[a])) throw std::invalid_argument("eval_batch: non-finite point");
        if (p[a] < -1.0 || p[a] > 1.0) inside = false;
        double g = std::min(std::max((p[a] + 1.0) * 0.5, 0.0), 1.0) * (res_ - 1);
        i0[a] = std::min(static_cast<int>(std::floor(g)), res_ - 2);
        f[a] = g - i0[a];
      }
      mask[i] = inside ? 1.0 : 0.0;
      for (int q = 0; q < 8; ++q) {
        int dx = q >> 2 & 1, dy = q >> 1 & 1, dz = q & 1;
        node[q][i] = static_cast<int32_t>(node_index(i0[0] + dx, i0[1] + dy, i0[2] + dz));
        wgt[q][i] = (dx ? f[0] : 1 - f[0]) * (dy ? f[1] : 1 - f[1]) * (dz ? f[2] : 1 - f[2]) *
                    mask[i];
      }
    }

    std::array<Var, 4> rawv{};
    for (int ch = 0; ch < 4; ++ch) {
      Var acc{};
      for (int q = 0; q < 8; ++q) {
        std::vector<int32_t> idx(n);
        for (size_t i = 0; i < n; ++i) idx[i] = node[q][i] * 4 + ch;
        Var term = t.mul(t.constant(wgt[q]), t.gather(theta, std::move(idx)));
        acc = acc.valid() ? t.add(acc, term) : term;
      }
      rawv[ch] = acc;
    }
    Var maskv = t.constant(mask);
    FieldEval e;
    e.sigma = t.mul(t.softplus(rawv[0]), maskv);
    for (int c = 0; c < 3; ++c) e.rgb[c] = t.mul(t.sigmoid(rawv[c + 1]), maskv);
    return e;
  }

 private:
  int res_;
  std::vector<double> raw_;
};

// gamma(p): p followed by (sin(2^l pi p), cos(2^l pi p)) for l = 0..L-1, per axis.
inline std::vector<double> positional_encoding(std::span<const double, 3> p, int levels) {
  if (levels < 0) throw std::invalid_argument("positional_encoding: L must be >= 0");
  std::vector<double> out;
  out.reserve(3 + 6 * levels);
  for (int a = 0; a < 3; ++a) out.push_back(p[a]);
  for (int l = 0; l < levels; ++l) {
    double s = std::ldexp(M_PI, l);  // 2^l * pi
    for (int a = 0; a < 3; ++a) {
      out.push_back(std::sin(s * p[a]));
      out.push_back(std::cos(s * p[a]));
    }
  }
  return out;
}

// 2 hidden layers of width 64 with relu, input 3+6L, output (sigma_raw, rgb_raw).
class TinyMlpField : public RadianceField {
 public:
  static constexpr int kHidden = 64;

  explicit TinyMlpField(int levels, uint64_t seed = 0) : levels_(levels) {
    if (levels < 0) throw ConfigError("TinyMlpField: L must be >= 0");
    const int d = input_dim();
    params_.resize(static_cast<size_t>(kHidden) * d + kHidden + kHidden * kHidden + kHidden +
                   4 * kHidden + 4);
    Rng rng = make_rng(seed, /*stream=*/0x6d6c70);
    size_t off = 0;
    auto init_layer = [&](int rows, int cols) {
      double s = 1.0 / std::sqrt(static_cast<double>(cols));
      for (int i = 0; i < rows * cols; ++i) params_[off++] = rng.uniform(-s, s);
      off += rows;  // biases stay 0
    };
    init_layer(kHidden, d);
    init_layer(kHidden, kHidden);
    init_layer(4, kHidden);
  }

  int levels() const { return levels_; }
  int input_dim() const { return 3 + 6 * levels_; }

  std::string backend() const override { return "mlp"; }
  int param_count() const override { return static_cast<int>(params_.size()); }
  std::vector<double> params() const override { return params_; }
  void set_params(std::span<const double> p) override {
    if (p.size() != params_.size()) throw ConfigError("TinyMlpField: parameter length mismatch");
    params_.assign(p.begin(), p.end());
  }

  FieldEval eval_batch(Tape& t, Var theta, std::span<const double> pts) const override {
    const size_t n = pts.size() / 3;
    if (pts.size() != n * 3) throw std::invalid_argument("eval_batch: points length not 3n");
    const int d = input_dim();

    std::vector<double> feats(n * d);
    std::vector<double> mask(n);
    for (size_t i = 0; i < n; ++i) {
      std::array<double, 3> p{pts[3 * i], pts[3 * i + 1], pts[3 * i + 2]};
      for (double v : p)
        if (!std::isfinite(v)) throw std::invalid_argument("eval_batch: non-finite point");
      bool inside = p[0] >= -1 && p[0] <= 1 && p[1] >= -1 && p[1] <= 1 && p[2] >= -1 && p[2] <= 1;
      mask[i] = inside ? 1.0 : 0.0;
      auto enc = positional_encoding(std::span<const double, 3>(p), levels_);
      for (int j = 0; j < d; ++j) feats[i * d + j] = enc[j];
    }

    // parameter slices as gathers; weight (rows x cols) row-major
    size_t off = 0;
    auto slice = [&](int count) {
      std::vector<int32_t> idx(count);
      for (int i = 0; i < count; ++i) idx[i] = static_cast<int32_t>(off + i);
      off += count;
      return t.gather(theta, std::move(idx));
    };
    Var w1 = slice(kHidden * d), b1 = slice(kHidden);
    Var w2 = slice(kHidden * kHidden), b2 = slice(kHidden);
    Var w3 = slice(4 * kHidden), b3 = slice(4);

    const int nn = static_cast<int>(n);
    auto add_bias = [&](Var x, Var b, int width) {
      // broadcast b over the batch via gather
      std::vector<int32_t> idx(static_cast<size_t>(nn) * width);
      for (int i = 0; i < nn; ++i)
        for (int j = 0; j < width; ++j) idx[static_cast<size_t>(i) * width + j] = j;
      return t.add(x, t.gather(b, std::move(idx)));
    };

    Var x = t.constant(feats);                                       // n x d
    Var h1 = t.relu(add_bias(t.matmul(x, false, w1, true, nn, d, kHidden), b1, kHidden));
    Var h2 = t.relu(add_bias(t.matmul(h1, false, w2, true, nn, kHidden, kHidden), b2, kHidden));
    Var out = add_bias(t.matmul(h2, false, w3, true, nn, kHidden, 4), b3, 4);  // n x 4

    auto column = [&](int ch) {
      std::vector<int32_t> idx(n);
      for (size_t i = 0; i < n; ++i) idx[i] = static_cast<int32_t>(i * 4 + ch);
      return t.gather(out, std::move(idx));
    };
    Var maskv = t.constant(mask);
    FieldEval e;
    e.sigma = t.mul(t.softplus(column(0)), maskv);
    for (int c = 0; c < 3; ++c) e.rgb[c] = t.mul(t.sigmoid(column(c + 1)), maskv);
    return e;
  }

 private:
  int levels_;
  std::vector<double> params_;
};

// Checkpoint: one JSON header line {backend, resolution or levels, count},
// then the parameters as a little-endian f64 blob.
inline void save_checkpoint(const RadianceField& f, const std::string& path) {
  nlohmann::json hdr;
  hdr["backend"] = f.backend();
  if (auto* g = dynamic_cast<const VoxelGridField*>(&f)) hdr["resolution"] = g->resolution();
  if (auto* m = dynamic_cast<const TinyMlpField*>(&f)) hdr["levels"] = m->levels();
  hdr["count"] = f.param_count();
  std::ofstream out(path, std::ios::binary);
  if (!out) throw DataError("save_checkpoint: cannot open " + path);
  out << hdr.dump() << "\n";
  std::vector<double> p = f.params();
  out.write(reinterpret_cast<const char*>(p.data()),
            static_cast<std::streamsize>(p.size() * sizeof(double)));
  if (!out) throw DataError("save_checkpoint: write failed for " + path);
}

inline std::unique_ptr<RadianceField> load_checkpoint(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw DataError("load_checkpoint: cannot open " + path);
  std::string line;
  if (!std::getline(in, line)) throw DataError("load_checkpoint: missing header in " + path);
  nlohmann::json hdr;
  try {
    hdr = nlohmann::json::parse(line);
  } catch (const nlohmann::json::exception& e) {
    throw DataError("load_checkpoint: bad header in " + path + ": " + e.what());
  }
  std::unique_ptr<RadianceField> f;
  std::string backend = hdr.value("backend", "");
  if (backend == "grid")
    f = std::make_unique<VoxelGridField>(hdr.at("resolution").get<int>());
  else if (backend == "mlp")
    f = std::make_unique<TinyMlpField>(hdr.at("levels").get<int>());
  else
    throw DataError("load_checkpoint: unknown backend \"" + backend + "\"");
  int count = hdr.at("count").get<int>();
  if (count != f->param_count()) throw DataError("load_checkpoint: parameter count mismatch");
  std::vector<double> p(static_cast<size_t>(count));
  in.read(reinterpret_cast<char*>(p.data()),
          static_cast<std::streamsize>(p.size() * sizeof(double)));
  if (!in) throw DataError("load_checkpoint: truncated blob in " + path);
  f->set_params(p);
  return f;
}

}  // namespace nerfpoison
