#pragma once

#include <cstdint>
#include <cstring>
#include <fstream>
#include <string>
#include <vector>

#include "nerfpoison/errors.hpp"
#include "nerfpoison/image.hpp"

namespace nerfpoison {

// Middlebury .flo: the float 202021.25 ("PIEH") little-endian, int32 width,
// int32 height, then row-major interleaved (u,v) as little-endian float32.
inline constexpr float kFloMagic = 202021.25f;

inline FlowField read_flo(const std::string& path) {
  std::ifstream f(path, std::ios::binary);
  if (!f) throw DataError("read_flo: cannot open " + path);
  float magic = 0.0f;
  int32_t w = 0, h = 0;
  f.read(reinterpret_cast<char*>(&magic), 4);
  if (!f || magic != kFloMagic) throw DataError("read_flo: bad magic in " + path);
  f.read(reinterpret_cast<char*>(&w), 4);
  f.read(reinterpret_cast<char*>(&h), 4);
  if (!f || w < 1 || h < 1) throw DataError("read_flo: bad header in " + path);
  std::vector<float> raw(static_cast<size_t>(w) * h * 2);
  f.read(reinterpret_cast<char*>(raw.data()), static_cast<std::streamsize>(raw.size() * 4));
  if (!f) throw DataError("read_flo: truncated payload in " + path);
  FlowField flow(w, h);
  for (size_t i = 0; i < raw.size(); ++i) flow.data[i] = raw[i];
  return flow;
}

inline void write_flo(const FlowField& flow, const std::string& path) {
  std::ofstream f(path, std::ios::binary);
  if (!f) throw DataError("write_flo: cannot open " + path);
  float magic = kFloMagic;
  int32_t w = flow.width, h = flow.height;
  f.write(reinterpret_cast<const char*>(&magic), 4);
  f.write(reinterpret_cast<const char*>(&w), 4);
  f.write(reinterpret_cast<const char*>(&h), 4);
  std::vector<float> raw(flow.data.size());
  for (size_t i = 0; i < raw.size(); ++i) raw[i] = static_cast<float>(flow.data[i]);
  f.write(reinterpret_cast<const char*>(raw.data()), static_cast<std::streamsize>(raw.size() * 4));
  if (!f) throw DataError("write_flo: write failed for " + path);
}

}  // namespace nerfpoison
