#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cstdio>
#include <filesystem>
#include <fstream>

#include "augarena/dataset.hpp"

using namespace augarena;

namespace {

// Writes a valid CIFAR-10 binary file with n records, labels cycling 0..9,
// pixel bytes derived from the record index.
void write_cifar_fixture(const std::string& path, int n, int truncate_bytes = 0) {
  std::ofstream out(path, std::ios::binary);
  for (int r = 0; r < n; ++r) {
    out.put(static_cast<char>(r % 10));
    for (int i = 0; i < 3072; ++i)
      out.put(static_cast<char>((r * 31 + i) % 256));
  }
  out.close();
  if (truncate_bytes > 0)
    std::filesystem::resize_file(
        path, std::filesystem::file_size(path) - truncate_bytes);
}

struct CifarDir {
  std::string dir;
  explicit CifarDir(const std::string& name, int train_per_file = 20,
                    int test_records = 20) {
    dir = std::string("/tmp/augarena_cifar_") + name;
    std::filesystem::create_directories(dir);
    for (int i = 1; i <= 5; ++i)
      write_cifar_fixture(dir + "/data_batch_" + std::to_string(i) + ".bin",
                          train_per_file);
    write_cifar_fixture(dir + "/test_batch.bin", test_records);
  }
  ~CifarDir() { std::filesystem::remove_all(dir); }
};

}  // namespace

TEST_CASE("cifar10 loader parses valid batch files") {
  CifarDir fix("valid", 20, 10);
  Dataset ds = load_cifar10(fix.dir);
  CHECK(ds.train_images.size() == 100);
  CHECK(ds.test_images.size() == 10);
  CHECK(ds.num_classes == 10);
  CHECK(ds.train_images[0].height == 32);
  CHECK(ds.train_images[0].width == 32);
  // first record of batch 1: label 0, first pixel byte 0
  CHECK(ds.train_labels[0] == 0);
  CHECK(ds.train_images[0].pixels[0] == 0);
  CHECK(ds.train_labels[7] == 7);
}

TEST_CASE("cifar10 loader rejects truncated files by name") {
  CifarDir fix("trunc");
  write_cifar_fixture(fix.dir + "/data_batch_3.bin", 20, 100);
  CHECK_THROWS_WITH_AS(load_cifar10(fix.dir),
                       doctest::Contains("data_batch_3.bin"),
                       std::runtime_error);
}

TEST_CASE("cifar10 loader rejects missing files") {
  CifarDir fix("missing");
  std::filesystem::remove(fix.dir + "/test_batch.bin");
  CHECK_THROWS_WITH_AS(load_cifar10(fix.dir), doctest::Contains("test_batch"),
                       std::runtime_error);
}

TEST_CASE("cifar10 loader rejects bad label bytes") {
  CifarDir fix("badlabel");
  {
    std::fstream f(fix.dir + "/data_batch_1.bin",
                   std::ios::in | std::ios::out | std::ios::binary);
    f.put(static_cast<char>(250));
  }
  CHECK_THROWS_WITH_AS(load_cifar10(fix.dir), doctest::Contains("label"),
                       std::runtime_error);
}

TEST_CASE("cifar10 subset keeps the first n per class") {
  CifarDir fix("subset", 20, 40);  // 100 train (10 per class), 40 test
  Dataset ds = load_cifar10(fix.dir, 3);
  CHECK(ds.train_images.size() == 30);
  std::array<int, 10> counts{};
  for (int l : ds.train_labels) counts[l]++;
  for (int c = 0; c < 10; ++c) CHECK(counts[c] == 3);
  CHECK(ds.test_images.size() == 30);
}

TEST_CASE("synthetic generation is deterministic") {
  SyntheticSpec spec;
  spec.seed = 42;
  Dataset a = gen_synthetic(spec);
  Dataset b = gen_synthetic(spec);
  CHECK(a.train_images == b.train_images);
  CHECK(a.test_images == b.test_images);
  CHECK(a.train_labels == b.train_labels);
  CHECK(a.train_images.size() == 4 * 256);
  CHECK(a.test_images.size() == 4 * 128);
}

TEST_CASE("synthetic classes are separable by stripe-energy matched filters") {
  // Class identity lives in the stripe orientation and period, not in the
  // pixel mean (stripe phase is random per image). A matched filter per
  // class — Fourier energy at that class's nominal (angle, period) — must
  // therefore classify the test split nearly perfectly.
  SyntheticSpec spec;
  spec.seed = 7;
  Dataset ds = gen_synthetic(spec);

  const double pi = std::acos(-1.0);
  auto energy_at = [&](const Image& img, double angle, double period) {
    double ux = std::cos(angle), uy = std::sin(angle);
    double sc = 0.0, ss = 0.0;
    for (int y = 0; y < img.height; ++y)
      for (int x = 0; x < img.width; ++x) {
        double v = (img.at(0, y, x) + img.at(1, y, x) + img.at(2, y, x)) / 3.0;
        double t = 2.0 * pi * (ux * x + uy * y) / period;
        sc += v * std::cos(t);
        ss += v * std::sin(t);
      }
    return sc * sc + ss * ss;
  };
  // small bank per class covering the per-image angle and period jitter
  auto energy = [&](const Image& img, int cls) {
    double angle0 = (cls % 2) * pi / 2.0;
    double period0 = spec.stripe_period * std::pow(spec.period_ratio, cls / 2);
    double best = 0.0;
    for (int a = -2; a <= 2; ++a)
      for (int p = -2; p <= 2; ++p) {
        double angle = angle0 + spec.angle_jitter * a / 2.0;
        double period = period0 * (1.0 + spec.period_jitter * p / 2.0);
        best = std::max(best, energy_at(img, angle, period));
      }
    return best;
  };

  int correct = 0;
  for (size_t i = 0; i < ds.test_images.size(); ++i) {
    int best = 0;
    double best_e = -1.0;
    for (int c = 0; c < spec.num_classes; ++c) {
      double e = energy(ds.test_images[i], c);
      if (e > best_e) {
        best_e = e;
        best = c;
      }
    }
    if (best == ds.test_labels[i]) correct++;
  }
  double acc = static_cast<double>(correct) / ds.test_images.size();
  INFO("matched-filter accuracy ", acc);
  CHECK(acc > 0.9);
}

TEST_CASE("zero noise leaves only the stripe phase varying") {
  SyntheticSpec spec;
  spec.seed = 3;
  spec.noise_level = 0.0;
  spec.train_per_class = 4;
  spec.test_per_class = 2;
  Dataset ds = gen_synthetic(spec);
  // Same class, same phase would be identical; here just verify determinism
  // and that a regenerated image with the same (split, class, index) matches.
  Dataset ds2 = gen_synthetic(spec);
  CHECK(ds.train_images == ds2.train_images);
}

TEST_CASE("channel stats standardize the training split") {
  SyntheticSpec spec;
  spec.seed = 11;
  spec.train_per_class = 16;
  spec.test_per_class = 4;
  Dataset ds = gen_synthetic(spec);
  ChannelStats stats = compute_channel_stats(ds);
  for (int c = 0; c < 3; ++c) {
    CHECK(stats.mean[c] > 0.0);
    CHECK(stats.mean[c] < 1.0);
    CHECK(stats.stddev[c] > 0.0);
  }
  // normalized mean should be ~0 over the train split
  double sum = 0;
  std::uint64_t n = 0;
  for (const Image& img : ds.train_images) {
    auto v = normalize_image(img, stats);
    for (double x : v) sum += x;
    n += v.size();
  }
  CHECK(std::abs(sum / n) < 1e-9);
}
