#pragma once

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdint>
#include <numeric>
#include <optional>

#include "augarena/image.hpp"
#include "augarena/policy.hpp"

// Deterministic kernels for the 15 operations.
//
// Fixed conventions (golden files depend on these, do not change):
//  - quantization: round-half-up, q(v) = floor(v + 0.5), then clamp [0,255]
//  - geometric ops use inverse mapping about center ((w-1)/2, (h-1)/2),
//    bilinear sampling, out-of-frame fill 128
//  - translation is integer-pixel: shift = round-half-up(fraction * axis)
//  - signed parameters (shear, rotate, translate, enhancement deviation)
//    take their sign from StochasticParams
//  - magnitude level 0 is an exact identity for every parameterized op

namespace augarena {

inline int round_half_up(double v) {
  return static_cast<int>(std::floor(v + 0.5));
}

inline std::uint8_t quantize(double v) {
  int q = round_half_up(v);
  return static_cast<std::uint8_t>(std::clamp(q, 0, 255));
}

constexpr std::uint8_t kFillValue = 128;

// Magnitude tables, linear over levels 0..4.
//   Shear      factor      0 -> 0.3
//   Translate  fraction    0 -> 0.33 of axis length
//   Rotate     degrees     0 -> 30
//   Solarize   threshold 256 -> 0    (decreasing; 256 = identity)
//   Posterize  bits kept   8 -> 4    (decreasing; 8 = identity)
//   Enhance    deviation   0 -> 0.9  (blend factor = 1 +/- dev)
//   Cutout     side frac   0 -> 0.5  of min(height, width)
// AutoContrast, Invert, Equalize take no parameter (nullopt).
inline std::optional<double> magnitude_value(OpKind kind, MagLevel level) {
  double t = level.level;  // 0..4
  switch (kind) {
    case OpKind::ShearX:
    case OpKind::ShearY:
      return t * (0.3 / 4.0);
    case OpKind::TranslateX:
    case OpKind::TranslateY:
      return t * (0.33 / 4.0);
    case OpKind::Rotate:
      return t * (30.0 / 4.0);
    case OpKind::Solarize:
      return 256.0 - t * 64.0;
    case OpKind::Posterize:
      return 8.0 - t;
    case OpKind::Contrast:
    case OpKind::Color:
    case OpKind::Brightness:
    case OpKind::Sharpness:
      return t * (0.9 / 4.0);
    case OpKind::Cutout:
      return t * (0.5 / 4.0);
    case OpKind::AutoContrast:
    case OpKind::Invert:
    case OpKind::Equalize:
      return std::nullopt;
  }
  return std::nullopt;
}

namespace detail {

// Bilinear sample of one channel at (sx, sy); fill outside [0,w-1]x[0,h-1].
inline double sample_bilinear(const Image& img, int c, double sx, double sy) {
  if (sx < 0.0 || sx > img.width - 1 || sy < 0.0 || sy > img.height - 1)
    return kFillValue;
  int x0 = static_cast<int>(std::floor(sx));
  int y0 = static_cast<int>(std::floor(sy));
  int x1 = std::min(x0 + 1, img.width - 1);
  int y1 = std::min(y0 + 1, img.height - 1);
  double fx = sx - x0, fy = sy - y0;
  double v00 = img.at(c, y0, x0), v01 = img.at(c, y0, x1);
  double v10 = img.at(c, y1, x0), v11 = img.at(c, y1, x1);
  return (1 - fy) * ((1 - fx) * v00 + fx * v01) +
         fy * ((1 - fx) * v10 + fx * v11);
}

// Applies the inverse affine map (x,y) -> source coords, bilinear + quantize.
template <typename InverseMap>
Image warp(const Image& img, InverseMap inv) {
  Image out(img.height, img.width);
  for (int c = 0; c < 3; ++c)
    for (int y = 0; y < img.height; ++y)
      for (int x = 0; x < img.width; ++x) {
        auto [sx, sy] = inv(x, y);
        out.at(c, y, x) = quantize(sample_bilinear(img, c, sx, sy));
      }
  return out;
}

inline Image shear_x(const Image& img, double factor) {
  double cy = (img.height - 1) / 2.0;
  return warp(img, [&](int x, int y) {
    return std::pair{x + factor * (y - cy), static_cast<double>(y)};
  });
}

inline Image shear_y(const Image& img, double factor) {
  double cx = (img.width - 1) / 2.0;
  return warp(img, [&](int x, int y) {
    return std::pair{static_cast<double>(x), y + factor * (x - cx)};
  });
}

inline Image translate(const Image& img, int dx, int dy) {
  Image out(img.height, img.width, kFillValue);
  for (int c = 0; c < 3; ++c)
    for (int y = 0; y < img.height; ++y) {
      int sy = y - dy;
      if (sy < 0 || sy >= img.height) continue;
      for (int x = 0; x < img.width; ++x) {
        int sx = x - dx;
        if (sx < 0 || sx >= img.width) continue;
        out.at(c, y, x) = img.at(c, sy, sx);
      }
    }
  return out;
}

inline Image rotate(const Image& img, double degrees) {
  double rad = degrees * std::acos(-1.0) / 180.0;
  double cs = std::cos(rad), sn = std::sin(rad);
  double cx = (img.width - 1) / 2.0, cy = (img.height - 1) / 2.0;
  return warp(img, [&](int x, int y) {
    double dx = x - cx, dy = y - cy;
    return std::pair{cx + cs * dx + sn * dy, cy - sn * dx + cs * dy};
  });
}

inline Image apply_lut_per_channel(
    const Image& img, const std::array<std::array<std::uint8_t, 256>, 3>& luts) {
  Image out(img.height, img.width);
  for (int c = 0; c < 3; ++c)
    for (int y = 0; y < img.height; ++y)
      for (int x = 0; x < img.width; ++x)
        out.at(c, y, x) = luts[c][img.at(c, y, x)];
  return out;
}

inline Image autocontrast(const Image& img) {
  std::array<std::array<std::uint8_t, 256>, 3> luts;
  for (int c = 0; c < 3; ++c) {
    int lo = 255, hi = 0;
    for (int y = 0; y < img.height; ++y)
      for (int x = 0; x < img.width; ++x) {
        int v = img.at(c, y, x);
        lo = std::min(lo, v);
        hi = std::max(hi, v);
      }
    for (int v = 0; v < 256; ++v)
      luts[c][v] = (lo == hi)
                       ? static_cast<std::uint8_t>(v)
                       : quantize((v - lo) * 255.0 / (hi - lo));
  }
  return apply_lut_per_channel(img, luts);
}

// Classic cumulative-histogram remap:
//   lut[v] = round(255 * (cdf[v] - cdf_min) / (N - cdf_min))
// where cdf_min is the cdf at the first occupied bin; constant channels map
// to themselves.
inline Image equalize(const Image& img) {
  std::array<std::array<std::uint8_t, 256>, 3> luts;
  const int n = img.height * img.width;
  for (int c = 0; c < 3; ++c) {
    std::array<int, 256> hist{};
    for (int y = 0; y < img.height; ++y)
      for (int x = 0; x < img.width; ++x) hist[img.at(c, y, x)]++;
    std::array<int, 256> cdf{};
    std::partial_sum(hist.begin(), hist.end(), cdf.begin());
    int cdf_min = 0;
    for (int v = 0; v < 256; ++v)
      if (hist[v] > 0) {
        cdf_min = cdf[v];
        break;
      }
    for (int v = 0; v < 256; ++v) {
      if (n == cdf_min)
        luts[c][v] = static_cast<std::uint8_t>(v);
      else
        luts[c][v] = quantize(255.0 * (cdf[v] - cdf_min) / (n - cdf_min));
    }
  }
  return apply_lut_per_channel(img, luts);
}

inline Image solarize(const Image& img, int threshold) {
  Image out = img;
  for (auto& v : out.pixels)
    if (v >= threshold) v = static_cast<std::uint8_t>(255 - v);
  return out;
}

inline Image posterize(const Image& img, int bits) {
  std::uint8_t mask = static_cast<std::uint8_t>(0xFF << (8 - bits));
  Image out = img;
  for (auto& v : out.pixels) v &= mask;
  return out;
}

inline Image invert(const Image& img) {
  Image out = img;
  for (auto& v : out.pixels) v = static_cast<std::uint8_t>(255 - v);
  return out;
}

// Blend out = degenerate + factor * (original - degenerate), in doubles.
inline Image blend(const Image& orig, const Image& degenerate, double factor) {
  Image out(orig.height, orig.width);
  for (size_t i = 0; i < orig.pixels.size(); ++i) {
    double d = degenerate.pixels[i];
    out.pixels[i] = quantize(d + factor * (orig.pixels[i] - d));
  }
  return out;
}

// Grayscale via integer-free luma: L = q(0.299 R + 0.587 G + 0.114 B).
inline Image grayscale(const Image& img) {
  Image out(img.height, img.width);
  for (int y = 0; y < img.height; ++y)
    for (int x = 0; x < img.width; ++x) {
      std::uint8_t l = quantize(0.299 * img.at(0, y, x) +
                                0.587 * img.at(1, y, x) +
                                0.114 * img.at(2, y, x));
      for (int c = 0; c < 3; ++c) out.at(c, y, x) = l;
    }
  return out;
}

// Contrast degenerate: constant image at the mean of the grayscale.
inline Image mean_gray(const Image& img) {
  Image gray = grayscale(img);
  double sum = 0;
  for (int y = 0; y < img.height; ++y)
    for (int x = 0; x < img.width; ++x) sum += gray.at(0, y, x);
  std::uint8_t m = quantize(sum / (img.height * img.width));
  return Image(img.height, img.width, m);
}

// Sharpness degenerate: 3x3 box mean on the interior, border rows/columns
// copied unchanged.
inline Image box_smooth(const Image& img) {
  Image out = img;
  for (int c = 0; c < 3; ++c)
    for (int y = 1; y < img.height - 1; ++y)
      for (int x = 1; x < img.width - 1; ++x) {
        int s = 0;
        for (int dy = -1; dy <= 1; ++dy)
          for (int dx = -1; dx <= 1; ++dx) s += img.at(c, y + dy, x + dx);
        out.at(c, y, x) = quantize(s / 9.0);
      }
  return out;
}

inline Image cutout(const Image& img, double side_frac, double cx_frac,
                    double cy_frac) {
  int side = round_half_up(side_frac * std::min(img.height, img.width));
  if (side <= 0) return img;
  Image out = img;
  int cx = static_cast<int>(std::floor(cx_frac * img.width));
  int cy = static_cast<int>(std::floor(cy_frac * img.height));
  int x0 = cx - side / 2, y0 = cy - side / 2;
  for (int c = 0; c < 3; ++c)
    for (int y = std::max(0, y0); y < std::min(img.height, y0 + side); ++y)
      for (int x = std::max(0, x0); x < std::min(img.width, x0 + side); ++x)
        out.at(c, y, x) = kFillValue;
  return out;
}

}  // namespace detail

inline Image apply_op(const Image& img, OpKind kind, MagLevel level,
                      const StochasticParams& sp) {
  img.check_shape();
  double mag = magnitude_value(kind, level).value_or(0.0);
  double signed_mag = sp.sign * mag;
  switch (kind) {
    case OpKind::ShearX:
      return mag == 0.0 ? img : detail::shear_x(img, signed_mag);
    case OpKind::ShearY:
      return mag == 0.0 ? img : detail::shear_y(img, signed_mag);
    case OpKind::TranslateX:
      return detail::translate(img, sp.sign * round_half_up(mag * img.width), 0);
    case OpKind::TranslateY:
      return detail::translate(img, 0, sp.sign * round_half_up(mag * img.height));
    case OpKind::Rotate:
      return mag == 0.0 ? img : detail::rotate(img, signed_mag);
    case OpKind::AutoContrast:
      return detail::autocontrast(img);
    case OpKind::Invert:
      return detail::invert(img);
    case OpKind::Equalize:
      return detail::equalize(img);
    case OpKind::Solarize:
      return detail::solarize(img, static_cast<int>(mag));
    case OpKind::Posterize:
      return detail::posterize(img, static_cast<int>(mag));
    case OpKind::Contrast:
      return detail::blend(img, detail::mean_gray(img), 1.0 + signed_mag);
    case OpKind::Color:
      return detail::blend(img, detail::grayscale(img), 1.0 + signed_mag);
    case OpKind::Brightness:
      return detail::blend(img, Image(img.height, img.width, 0),
                           1.0 + signed_mag);
    case OpKind::Sharpness:
      return detail::blend(img, detail::box_smooth(img), 1.0 + signed_mag);
    case OpKind::Cutout:
      return detail::cutout(img, mag, sp.cx, sp.cy);
  }
  throw std::invalid_argument("unknown OpKind");
}

inline Image apply_op(const Image& img, const AugOp& op,
                      const StochasticParams& sp) {
  return apply_op(img, op.kind, op.level, sp);
}

inline Image apply_policy(const Image& img, const Policy& p,
                          const StochasticParams& sp) {
  return apply_op(apply_op(img, p.first, sp), p.second, sp);
}

}  // namespace augarena
