#pragma once

#include <cstdint>
#include <fstream>
#include <stdexcept>
#include <string>
#include <vector>

#include "augarena/rng.hpp"

namespace augarena {

// 3-channel 8-bit raster. Storage is planar: all R rows, then G, then B,
// each plane row-major. Matches the CIFAR-10 binary layout.
struct Image {
  int height = 0;
  int width = 0;
  std::vector<std::uint8_t> pixels;  // size = 3 * height * width

  static constexpr int kChannels = 3;

  Image() = default;
  Image(int h, int w, std::uint8_t fill = 0)
      : height(h), width(w), pixels(static_cast<size_t>(3) * h * w, fill) {
    check_shape();
  }

  void check_shape() const {
    if (height < 8 || width < 8)
      throw std::invalid_argument("Image must be at least 8x8");
    if (pixels.size() != static_cast<size_t>(3) * height * width)
      throw std::invalid_argument("Image pixel buffer size mismatch");
  }

  std::uint8_t& at(int c, int y, int x) {
    return pixels[(static_cast<size_t>(c) * height + y) * width + x];
  }
  std::uint8_t at(int c, int y, int x) const {
    return pixels[(static_cast<size_t>(c) * height + y) * width + x];
  }

  bool operator==(const Image&) const = default;
};

// Per-application random draw for operations with internal randomness.
// sign feeds the signed-magnitude kernels (shear, translate, rotate,
// enhancement factor); cx/cy place the Cutout patch center. Given the same
// StochasticParams every kernel is a pure function.
struct StochasticParams {
  int sign = +1;      // +1 or -1
  double cx = 0.5;    // cutout center, fraction of width in [0,1)
  double cy = 0.5;    // fraction of height in [0,1)
};

inline StochasticParams draw_stochastic_params(Rng& rng) {
  StochasticParams sp;
  sp.sign = (rng() & 1) ? +1 : -1;
  sp.cx = uniform_unit(rng);
  sp.cy = uniform_unit(rng);
  return sp;
}

// --- binary PPM (P6), maxval 255 ---

inline void write_ppm(const Image& img, const std::string& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("cannot open for write: " + path);
  out << "P6\n" << img.width << " " << img.height << "\n255\n";
  for (int y = 0; y < img.height; ++y)
    for (int x = 0; x < img.width; ++x)
      for (int c = 0; c < 3; ++c)
        out.put(static_cast<char>(img.at(c, y, x)));
  if (!out) throw std::runtime_error("write failed: " + path);
}

inline Image read_ppm(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("cannot open: " + path);
  std::string magic;
  in >> magic;
  if (magic != "P6") throw std::runtime_error("not a binary PPM (P6): " + path);
  auto next_token = [&in, &path]() {
    // skips whitespace and '#' comment lines
    std::string tok;
    while (in >> tok) {
      if (tok[0] == '#') {
        std::string rest;
        std::getline(in, rest);
        continue;
      }
      return tok;
    }
    throw std::runtime_error("truncated PPM header: " + path);
  };
  int w = std::stoi(next_token());
  int h = std::stoi(next_token());
  int maxval = std::stoi(next_token());
  if (maxval != 255) throw std::runtime_error("PPM maxval must be 255: " + path);
  in.get();  // single whitespace after maxval
  Image img(h, w);
  for (int y = 0; y < h; ++y)
    for (int x = 0; x < w; ++x)
      for (int c = 0; c < 3; ++c) {
        int v = in.get();
        if (v == EOF) throw std::runtime_error("truncated PPM data: " + path);
        img.at(c, y, x) = static_cast<std::uint8_t>(v);
      }
  return img;
}

}  // namespace augarena
