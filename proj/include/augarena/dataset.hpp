#pragma once

#include <array>
#include <cmath>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <string>
#include <vector>

#include "augarena/image.hpp"
#include "augarena/kernels.hpp"
#include "augarena/model.hpp"
#include "augarena/rng.hpp"

namespace augarena {

struct Dataset {
  std::vector<Image> train_images;
  std::vector<int> train_labels;
  std::vector<Image> test_images;
  std::vector<int> test_labels;
  int num_classes = 0;
  std::string provenance;  // "cifar10" or "synthetic(<params>)"
};

// --- CIFAR-10 binary version ---
// Each record is 3073 bytes: 1 label byte then 1024 R + 1024 G + 1024 B
// plane bytes of a 32x32 image. Train files data_batch_1..5.bin, test file
// test_batch.bin.

namespace detail {

inline void read_cifar_file(const std::string& path, std::vector<Image>& images,
                            std::vector<int>& labels) {
  constexpr int kRecord = 3073;
  std::error_code ec;
  auto size = std::filesystem::file_size(path, ec);
  if (ec) throw std::runtime_error("missing CIFAR file: " + path);
  if (size == 0 || size % kRecord != 0)
    throw std::runtime_error("corrupted CIFAR file " + path + ": length " +
                             std::to_string(size) +
                             " is not a multiple of the 3073-byte record");
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("cannot open CIFAR file: " + path);
  std::vector<char> record(kRecord);
  auto n = size / kRecord;
  for (std::uintmax_t r = 0; r < n; ++r) {
    in.read(record.data(), kRecord);
    if (!in) throw std::runtime_error("short read in CIFAR file: " + path);
    int label = static_cast<std::uint8_t>(record[0]);
    if (label >= 10)
      throw std::runtime_error("bad label byte " + std::to_string(label) +
                               " in " + path);
    Image img(32, 32);
    std::copy(record.begin() + 1, record.end(),
              reinterpret_cast<char*>(img.pixels.data()));
    images.push_back(std::move(img));
    labels.push_back(label);
  }
}

// Keeps the first per_class samples of each class, preserving order.
inline void subset_per_class(std::vector<Image>& images, std::vector<int>& labels,
                             int num_classes, int per_class) {
  std::vector<int> taken(num_classes, 0);
  std::vector<Image> si;
  std::vector<int> sl;
  for (size_t i = 0; i < images.size(); ++i)
    if (taken[labels[i]] < per_class) {
      taken[labels[i]]++;
      si.push_back(std::move(images[i]));
      sl.push_back(labels[i]);
    }
  images = std::move(si);
  labels = std::move(sl);
}

}  // namespace detail

// subset_per_class = 0 loads everything; otherwise both splits keep the
// first n images of each class.
inline Dataset load_cifar10(const std::string& dir, int subset = 0) {
  Dataset ds;
  ds.num_classes = 10;
  ds.provenance = "cifar10";
  for (int i = 1; i <= 5; ++i)
    detail::read_cifar_file(dir + "/data_batch_" + std::to_string(i) + ".bin",
                            ds.train_images, ds.train_labels);
  detail::read_cifar_file(dir + "/test_batch.bin", ds.test_images,
                          ds.test_labels);
  if (subset > 0) {
    detail::subset_per_class(ds.train_images, ds.train_labels, 10, subset);
    detail::subset_per_class(ds.test_images, ds.test_labels, 10, subset);
  }
  return ds;
}

// --- synthetic desk-scale dataset ---
// Classes are built from cues that no single operation can coherently map
// onto another class: stripe orientation (0 or 90 degrees — beyond the reach
// of any one bounded rotation or shear) and stripe period (no operation in
// the set rescales space). Photometric robustness comes from two choices:
// stripes are symmetric about a per-image global brightness offset drawn
// from a wide range, so mean-shifting operations (brightness/contrast at
// moderate levels), inversion, equalization, and autocontrast all map clean
// images onto other plausible clean images instead of off-distribution; and
// the period ratio between tiers is 3, so the frequency doubling a solarize
// fold produces cannot land one tier on another tier's frequency. Only
// stacked high-magnitude geometric pairs can rotate one orientation class
// onto the other, so adversarial selection has something targeted to find
// while typical random policies stay benign. Images vary by stripe phase,
// brightness offset, orientation jitter, period jitter, amplitude jitter,
// and pixel noise.

struct SyntheticSpec {
  int side = 16;
  int num_classes = 4;
  int train_per_class = 256;
  int test_per_class = 128;
  std::uint64_t seed = 0;
  double noise_level = 0.05;      // gaussian std as a fraction of 255
  double stripe_period = 3.0;     // pixels, shortest period tier
  double period_ratio = 3.0;      // period step between tiers
  double stripe_amplitude = 105.0;
  double angle_jitter = 0.15;     // radians, uniform per image
  double period_jitter = 0.15;    // relative, uniform per image
  double amp_jitter = 0.2;        // relative, uniform per image
  double brightness_jitter = 20.0;  // raw pixel units, uniform per image
  double color_strength = 0.0;    // tier-tint deviation from mid gray

  std::string text() const {
    return "synthetic(side=" + std::to_string(side) +
           ",classes=" + std::to_string(num_classes) +
           ",train=" + std::to_string(train_per_class) +
           ",test=" + std::to_string(test_per_class) +
           ",seed=" + std::to_string(seed) + ")";
  }
};

namespace detail {

inline Image synth_image(const SyntheticSpec& spec, int cls, Rng& rng) {
  // Per-tier tint, dark-only like the stripes so inversion maps it out of
  // the palette instead of onto another class. The tint identifies only the
  // period tier (cls / 2): it gives training an easy early cue without
  // disambiguating orientation, which must come from the stripes.
  static constexpr std::array<std::array<int, 3>, 4> kBase = {{
      {68, 108, 128},
      {128, 88, 68},
      {88, 128, 108},
      {108, 68, 88},
  }};
  const auto& base = kBase[(cls / 2) % kBase.size()];
  const double pi = std::acos(-1.0);
  double phase = uniform_unit(rng);
  // class bit 0 -> orientation, remaining bits -> period tier
  double angle = (cls % 2) * pi / 2.0 +
                 spec.angle_jitter * (2.0 * uniform_unit(rng) - 1.0);
  double period = spec.stripe_period * std::pow(spec.period_ratio, cls / 2) *
                  (1.0 + spec.period_jitter * (2.0 * uniform_unit(rng) - 1.0));
  double amp = spec.stripe_amplitude *
               (1.0 + spec.amp_jitter * (2.0 * uniform_unit(rng) - 1.0));
  double bright = spec.brightness_jitter * (2.0 * uniform_unit(rng) - 1.0);
  double ux = std::cos(angle), uy = std::sin(angle);
  std::normal_distribution<double> noise(0.0, spec.noise_level * 255.0);
  Image img(spec.side, spec.side);
  for (int y = 0; y < spec.side; ++y)
    for (int x = 0; x < spec.side; ++x) {
      double proj = ux * x + uy * y;
      double stripe = amp * std::sin(2.0 * pi * (proj / period + phase));
      for (int c = 0; c < 3; ++c) {
        double v = 128.0 + bright + spec.color_strength * (base[c] - 128.0) +
                   stripe;
        if (spec.noise_level > 0.0) v += noise(rng);
        img.at(c, y, x) = quantize(v);
      }
    }
  return img;
}

}  // namespace detail

inline Dataset gen_synthetic(const SyntheticSpec& spec) {
  if (spec.num_classes < 2 || spec.num_classes > 8)
    throw std::invalid_argument("synthetic classes must be in [2, 8]");
  Dataset ds;
  ds.num_classes = spec.num_classes;
  ds.provenance = spec.text();
  auto gen_split = [&](std::string_view split, int per_class,
                       std::vector<Image>& images, std::vector<int>& labels) {
    for (int cls = 0; cls < spec.num_classes; ++cls)
      for (int i = 0; i < per_class; ++i) {
        Rng rng = substream(spec.seed, split, cls, i);
        images.push_back(detail::synth_image(spec, cls, rng));
        labels.push_back(cls);
      }
  };
  gen_split("synth-train", spec.train_per_class, ds.train_images,
            ds.train_labels);
  gen_split("synth-test", spec.test_per_class, ds.test_images, ds.test_labels);
  return ds;
}

// Per-channel mean/std of the training split, in [0,1] units.
inline ChannelStats compute_channel_stats(const Dataset& ds) {
  ChannelStats stats;
  for (int c = 0; c < 3; ++c) {
    double sum = 0.0, sumsq = 0.0;
    std::uint64_t n = 0;
    for (const Image& img : ds.train_images) {
      int plane = img.height * img.width;
      for (int i = 0; i < plane; ++i) {
        double v = img.pixels[c * plane + i] / 255.0;
        sum += v;
        sumsq += v * v;
        ++n;
      }
    }
    double mean = sum / n;
    double var = std::max(sumsq / n - mean * mean, 1e-12);
    stats.mean[c] = mean;
    stats.stddev[c] = std::sqrt(var);
  }
  return stats;
}

}  // namespace augarena
