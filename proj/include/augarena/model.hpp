#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <fstream>
#include <numeric>
#include <stdexcept>
#include <string>
#include <vector>

#include "augarena/image.hpp"
#include "augarena/rng.hpp"

// Reference classifier: conv 3x3x16 (pad 1) + ReLU + 2x2 max-pool +
// conv 3x3x32 (pad 1) + ReLU + 2x2 max-pool + fully-connected -> C logits.
// No batch normalization. All math in 64-bit floats.

namespace augarena {

struct ArchConfig {
  int in_height = 16;
  int in_width = 16;
  int num_classes = 4;

  static constexpr int kConv1Filters = 16;
  static constexpr int kConv2Filters = 32;
  static constexpr int kKernel = 3;

  int pool1_h() const { return in_height / 2; }
  int pool1_w() const { return in_width / 2; }
  int pool2_h() const { return in_height / 4; }
  int pool2_w() const { return in_width / 4; }
  int fc_features() const { return kConv2Filters * pool2_h() * pool2_w(); }

  void validate() const {
    if (in_height % 4 != 0 || in_width % 4 != 0)
      throw std::invalid_argument("input sides must be divisible by 4");
    if (num_classes < 2) throw std::invalid_argument("need >= 2 classes");
  }

  // Flat parameter layout: conv1 W, conv1 b, conv2 W, conv2 b, fc W, fc b.
  int conv1_w_size() const { return kConv1Filters * 3 * kKernel * kKernel; }
  int conv2_w_size() const {
    return kConv2Filters * kConv1Filters * kKernel * kKernel;
  }
  int fc_w_size() const { return num_classes * fc_features(); }

  int conv1_w_off() const { return 0; }
  int conv1_b_off() const { return conv1_w_size(); }
  int conv2_w_off() const { return conv1_b_off() + kConv1Filters; }
  int conv2_b_off() const { return conv2_w_off() + conv2_w_size(); }
  int fc_w_off() const { return conv2_b_off() + kConv2Filters; }
  int fc_b_off() const { return fc_w_off() + fc_w_size(); }
  int total_params() const { return fc_b_off() + num_classes; }

  bool operator==(const ArchConfig&) const = default;
};

struct ModelParams {
  ArchConfig arch;
  std::vector<double> weights;
  std::vector<double> velocity;  // Nesterov momentum buffers

  explicit ModelParams(const ArchConfig& a)
      : arch(a),
        weights(a.total_params(), 0.0),
        velocity(a.total_params(), 0.0) {
    a.validate();
  }

  bool all_finite() const {
    return std::all_of(weights.begin(), weights.end(),
                       [](double v) { return std::isfinite(v); });
  }
};

// Uniform He-style fan-in initialization: U(-sqrt(3/fan_in), +sqrt(3/fan_in))
// per layer, biases zero.
inline ModelParams init_params(const ArchConfig& arch, Rng& rng) {
  ModelParams p(arch);
  auto fill = [&](int off, int count, int fan_in) {
    double bound = std::sqrt(3.0 / fan_in);
    std::uniform_real_distribution<double> d(-bound, bound);
    for (int i = 0; i < count; ++i) p.weights[off + i] = d(rng);
  };
  fill(arch.conv1_w_off(), arch.conv1_w_size(), 3 * 9);
  fill(arch.conv2_w_off(), arch.conv2_w_size(), ArchConfig::kConv1Filters * 9);
  fill(arch.fc_w_off(), arch.fc_w_size(), arch.fc_features());
  return p;
}

// A normalized sample: 3*h*w doubles, planar layout as in Image.
struct Batch {
  int height = 0;
  int width = 0;
  std::vector<std::vector<double>> images;
  std::vector<int> labels;

  size_t size() const { return images.size(); }
};

struct ChannelStats {
  std::array<double, 3> mean{};
  std::array<double, 3> stddev{1.0, 1.0, 1.0};
};

// [0,255] -> [0,1] -> per-channel standardization.
inline std::vector<double> normalize_image(const Image& img,
                                           const ChannelStats& stats) {
  std::vector<double> out(img.pixels.size());
  int plane = img.height * img.width;
  for (int c = 0; c < 3; ++c)
    for (int i = 0; i < plane; ++i)
      out[c * plane + i] =
          (img.pixels[c * plane + i] / 255.0 - stats.mean[c]) / stats.stddev[c];
  return out;
}

struct LossStats {
  std::vector<double> per_sample_losses;
  double mean_loss = 0.0;
  int correct_count = 0;
};

namespace detail {

struct Activations {
  std::vector<double> conv1, pool1, conv2, pool2, logits, probs;
  std::vector<int> pool1_arg, pool2_arg;
};

// im2col layout: one row of h*w entries per tap k = (c, ky, kx), ascending,
// zero-filled where the tap falls outside the frame. Each output element then
// accumulates bias plus taps in the same ascending order as the naive triple
// loop; out-of-frame taps add w*0.0, which is exact here (no signed zeros
// reach the convolutions), so results are bit-identical while the hot loop
// runs branch-free over the whole plane.
inline void im2col3x3(const double* input, int in_c, int h, int w,
                      std::vector<double>& col) {
  const int plane = h * w;
  col.assign(static_cast<size_t>(in_c) * 9 * plane, 0.0);
  for (int c = 0; c < in_c; ++c) {
    const double* in = input + static_cast<size_t>(c) * plane;
    for (int ky = -1; ky <= 1; ++ky)
      for (int kx = -1; kx <= 1; ++kx) {
        double* dst =
            col.data() +
            (static_cast<size_t>(c) * 9 + (ky + 1) * 3 + (kx + 1)) * plane;
        const int y0 = std::max(0, -ky), y1 = std::min(h, h - ky);
        const int x0 = std::max(0, -kx), x1 = std::min(w, w - kx);
        for (int y = y0; y < y1; ++y) {
          const double* src = in + static_cast<size_t>(y + ky) * w + kx;
          std::copy(src + x0, src + x1, dst + static_cast<size_t>(y) * w + x0);
        }
      }
  }
}

inline void conv3x3_forward(const double* input, int in_c, int h, int w,
                            const double* weight, const double* bias,
                            int out_c, double* output) {
  const int plane = h * w;
  const int taps = in_c * 9;
  thread_local std::vector<double> col;
  im2col3x3(input, in_c, h, w, col);
  // plane is divisible by 16 (input sides divisible by 4), so fixed-width
  // accumulator blocks cover it exactly and stay in registers across taps.
  constexpr int B = 16;
  for (int f = 0; f < out_c; ++f) {
    double* __restrict out = output + static_cast<size_t>(f) * plane;
    const double* wf = weight + static_cast<size_t>(f) * taps;
    for (int i0 = 0; i0 < plane; i0 += B) {
      double acc[B];
      for (int j = 0; j < B; ++j) acc[j] = bias[f];
      const double* __restrict src = col.data() + i0;
      for (int k = 0; k < taps; ++k, src += plane) {
        const double wv = wf[k];
        for (int j = 0; j < B; ++j) acc[j] += wv * src[j];
      }
      std::copy(acc, acc + B, out + i0);
    }
  }
}

inline void relu_inplace(std::vector<double>& v) {
  for (double& x : v) x = std::max(0.0, x);
}

inline void maxpool2x2(const double* input, int ch, int h, int w,
                       double* output, int* argmax) {
  int oh = h / 2, ow = w / 2;
  for (int c = 0; c < ch; ++c)
    for (int y = 0; y < oh; ++y)
      for (int x = 0; x < ow; ++x) {
        int best = (c * h + 2 * y) * w + 2 * x;
        for (int dy = 0; dy < 2; ++dy)
          for (int dx = 0; dx < 2; ++dx) {
            int idx = (c * h + 2 * y + dy) * w + 2 * x + dx;
            if (input[idx] > input[best]) best = idx;
          }
        output[(c * oh + y) * ow + x] = input[best];
        argmax[(c * oh + y) * ow + x] = best;
      }
}

inline void forward_sample(const ModelParams& p, const double* input,
                           Activations& a) {
  const ArchConfig& arch = p.arch;
  int h = arch.in_height, w = arch.in_width;
  int p1h = arch.pool1_h(), p1w = arch.pool1_w();
  int p2h = arch.pool2_h(), p2w = arch.pool2_w();
  constexpr int F1 = ArchConfig::kConv1Filters;
  constexpr int F2 = ArchConfig::kConv2Filters;

  a.conv1.assign(static_cast<size_t>(F1) * h * w, 0.0);
  conv3x3_forward(input, 3, h, w, p.weights.data() + arch.conv1_w_off(),
                  p.weights.data() + arch.conv1_b_off(), F1, a.conv1.data());
  relu_inplace(a.conv1);

  a.pool1.assign(static_cast<size_t>(F1) * p1h * p1w, 0.0);
  a.pool1_arg.assign(a.pool1.size(), 0);
  maxpool2x2(a.conv1.data(), F1, h, w, a.pool1.data(), a.pool1_arg.data());

  a.conv2.assign(static_cast<size_t>(F2) * p1h * p1w, 0.0);
  conv3x3_forward(a.pool1.data(), F1, p1h, p1w,
                  p.weights.data() + arch.conv2_w_off(),
                  p.weights.data() + arch.conv2_b_off(), F2, a.conv2.data());
  relu_inplace(a.conv2);

  a.pool2.assign(static_cast<size_t>(F2) * p2h * p2w, 0.0);
  a.pool2_arg.assign(a.pool2.size(), 0);
  maxpool2x2(a.conv2.data(), F2, p1h, p1w, a.pool2.data(), a.pool2_arg.data());

  int C = arch.num_classes, feat = arch.fc_features();
  a.logits.assign(C, 0.0);
  const double* fcw = p.weights.data() + arch.fc_w_off();
  const double* fcb = p.weights.data() + arch.fc_b_off();
  for (int k = 0; k < C; ++k) {
    double acc = fcb[k];
    for (int j = 0; j < feat; ++j) acc += fcw[k * feat + j] * a.pool2[j];
    a.logits[k] = acc;
  }

  // numerically safe softmax
  a.probs.assign(C, 0.0);
  double mx = *std::max_element(a.logits.begin(), a.logits.end());
  double z = 0.0;
  for (int k = 0; k < C; ++k) z += (a.probs[k] = std::exp(a.logits[k] - mx));
  for (int k = 0; k < C; ++k) a.probs[k] /= z;
}

}  // namespace detail

// Softmax cross-entropy (natural log) per sample; pure in params.
inline LossStats forward_loss(const ModelParams& params, const Batch& batch) {
  if (batch.images.empty()) throw std::invalid_argument("empty batch");
  if (batch.images.size() != batch.labels.size())
    throw std::invalid_argument("images/labels size mismatch");
  const ArchConfig& arch = params.arch;
  if (batch.height != arch.in_height || batch.width != arch.in_width)
    throw std::invalid_argument("batch shape does not match architecture");

  LossStats stats;
  stats.per_sample_losses.reserve(batch.size());
  detail::Activations a;
  for (size_t i = 0; i < batch.size(); ++i) {
    int y = batch.labels[i];
    if (y < 0 || y >= arch.num_classes)
      throw std::invalid_argument("label out of range");
    detail::forward_sample(params, batch.images[i].data(), a);
    double loss = -std::log(std::max(a.probs[y], 1e-300));
    stats.per_sample_losses.push_back(loss);
    int pred = static_cast<int>(std::max_element(a.probs.begin(), a.probs.end()) -
                                a.probs.begin());
    if (pred == y) stats.correct_count++;
  }
  stats.mean_loss =
      std::accumulate(stats.per_sample_losses.begin(),
                      stats.per_sample_losses.end(), 0.0) /
      static_cast<double>(batch.size());
  return stats;
}

// Exact gradient of mean cross-entropy + (weight_decay/2)*||w||^2.
inline std::vector<double> backward(const ModelParams& params,
                                    const Batch& batch, double weight_decay) {
  const ArchConfig& arch = params.arch;
  if (batch.images.empty()) throw std::invalid_argument("empty batch");
  int h = arch.in_height, w = arch.in_width;
  int p1h = arch.pool1_h(), p1w = arch.pool1_w();
  int p2h = arch.pool2_h(), p2w = arch.pool2_w();
  constexpr int F1 = ArchConfig::kConv1Filters;
  constexpr int F2 = ArchConfig::kConv2Filters;
  int C = arch.num_classes, feat = arch.fc_features();
  double inv_n = 1.0 / static_cast<double>(batch.size());

  std::vector<double> grad(arch.total_params(), 0.0);
  detail::Activations a;
  std::vector<double> d_pool2(feat), d_conv2(static_cast<size_t>(F2) * p1h * p1w),
      d_pool1(static_cast<size_t>(F1) * p1h * p1w),
      d_conv1(static_cast<size_t>(F1) * h * w);

  const double* fcw = params.weights.data() + arch.fc_w_off();

  for (size_t i = 0; i < batch.size(); ++i) {
    const double* input = batch.images[i].data();
    detail::forward_sample(params, input, a);

    // d logits = (softmax - onehot) / n
    std::vector<double> d_logits(a.probs);
    d_logits[batch.labels[i]] -= 1.0;
    for (double& v : d_logits) v *= inv_n;

    // fc layer
    std::fill(d_pool2.begin(), d_pool2.end(), 0.0);
    for (int k = 0; k < C; ++k) {
      grad[arch.fc_b_off() + k] += d_logits[k];
      double dk = d_logits[k];
      double* gw = grad.data() + arch.fc_w_off() + static_cast<size_t>(k) * feat;
      const double* wk = fcw + static_cast<size_t>(k) * feat;
      for (int j = 0; j < feat; ++j) {
        gw[j] += dk * a.pool2[j];
        d_pool2[j] += dk * wk[j];
      }
    }

    // pool2 -> conv2 (route through argmax), then ReLU mask
    std::fill(d_conv2.begin(), d_conv2.end(), 0.0);
    for (int j = 0; j < feat; ++j) d_conv2[a.pool2_arg[j]] += d_pool2[j];
    for (size_t j = 0; j < d_conv2.size(); ++j)
      if (a.conv2[j] <= 0.0) d_conv2[j] = 0.0;

    // conv2 backward: weights, bias, and input (pool1) gradient
    std::fill(d_pool1.begin(), d_pool1.end(), 0.0);
    for (int f = 0; f < F2; ++f)
      for (int y = 0; y < p1h; ++y)
        for (int x = 0; x < p1w; ++x) {
          double dv = d_conv2[(f * p1h + y) * p1w + x];
          if (dv == 0.0) continue;
          grad[arch.conv2_b_off() + f] += dv;
          for (int c = 0; c < F1; ++c)
            for (int ky = -1; ky <= 1; ++ky) {
              int sy = y + ky;
              if (sy < 0 || sy >= p1h) continue;
              for (int kx = -1; kx <= 1; ++kx) {
                int sx = x + kx;
                if (sx < 0 || sx >= p1w) continue;
                int widx = arch.conv2_w_off() +
                           ((f * F1 + c) * 3 + (ky + 1)) * 3 + (kx + 1);
                int iidx = (c * p1h + sy) * p1w + sx;
                grad[widx] += dv * a.pool1[iidx];
                d_pool1[iidx] += dv * params.weights[widx];
              }
            }
        }

    // pool1 -> conv1, ReLU mask
    std::fill(d_conv1.begin(), d_conv1.end(), 0.0);
    for (size_t j = 0; j < d_pool1.size(); ++j)
      d_conv1[a.pool1_arg[j]] += d_pool1[j];
    for (size_t j = 0; j < d_conv1.size(); ++j)
      if (a.conv1[j] <= 0.0) d_conv1[j] = 0.0;

    // conv1 backward: weights and bias only (input gradient not needed)
    for (int f = 0; f < F1; ++f)
      for (int y = 0; y < h; ++y)
        for (int x = 0; x < w; ++x) {
          double dv = d_conv1[(f * h + y) * w + x];
          if (dv == 0.0) continue;
          grad[arch.conv1_b_off() + f] += dv;
          for (int c = 0; c < 3; ++c)
            for (int ky = -1; ky <= 1; ++ky) {
              int sy = y + ky;
              if (sy < 0 || sy >= h) continue;
              for (int kx = -1; kx <= 1; ++kx) {
                int sx = x + kx;
                if (sx < 0 || sx >= w) continue;
                grad[arch.conv1_w_off() +
                     ((f * 3 + c) * 3 + (ky + 1)) * 3 + (kx + 1)] +=
                    dv * input[(c * h + sy) * w + sx];
              }
            }
        }
  }

  if (weight_decay != 0.0)
    for (int j = 0; j < arch.total_params(); ++j)
      grad[j] += weight_decay * params.weights[j];
  return grad;
}

// Nesterov momentum, exactly this variant:
//   v <- mu*v - lr*g;  w <- w + mu*v - lr*g   (v already updated)
inline void sgd_step(ModelParams& params, const std::vector<double>& grad,
                     double lr, double momentum) {
  if (grad.size() != params.weights.size())
    throw std::invalid_argument("gradient size mismatch");
  for (size_t j = 0; j < params.weights.size(); ++j) {
    double v = momentum * params.velocity[j] - lr * grad[j];
    params.velocity[j] = v;
    params.weights[j] += momentum * v - lr * grad[j];
  }
  if (!params.all_finite())
    throw std::runtime_error("non-finite parameters after update (diverged)");
}

struct Hyperparams {
  double base_lr = 0.1;
  double decay_factor = 0.2;
  std::vector<double> decay_milestones = {0.25, 0.5, 0.7};  // epoch fractions
  double nesterov_momentum = 0.9;
  double weight_decay = 5e-4;
  double warmup_fraction = 0.05;  // augmentation-free epochs
  int total_epochs = 16;
  int batch_size = 128;
};

// Epoch-fraction rounding rule used everywhere: boundary = ceil(frac * total).
inline int fraction_to_epoch(double fraction, int total_epochs) {
  return static_cast<int>(std::ceil(fraction * total_epochs - 1e-9));
}

inline double lr_at(const Hyperparams& hp, int epoch) {
  if (epoch < 0 || epoch >= hp.total_epochs)
    throw std::out_of_range("epoch out of range");
  double lr = hp.base_lr;
  for (double m : hp.decay_milestones)
    if (epoch >= fraction_to_epoch(m, hp.total_epochs)) lr *= hp.decay_factor;
  return lr;
}

struct GradCheckReport {
  double max_rel_error = 0.0;
  int worst_index = -1;
  bool passed = false;
};

// Central-difference check of backward(). Checks every coordinate by
// default; pass max_coords > 0 with an rng to spot-check a random subset.
inline GradCheckReport grad_check(ModelParams params, const Batch& batch,
                                  double weight_decay, double h, double tol,
                                  int max_coords = 0, Rng* rng = nullptr) {
  std::vector<double> analytic = backward(params, batch, weight_decay);
  std::vector<size_t> coords(params.weights.size());
  std::iota(coords.begin(), coords.end(), size_t{0});
  if (max_coords > 0 && rng != nullptr &&
      static_cast<size_t>(max_coords) < coords.size()) {
    for (int i = 0; i < max_coords; ++i) {
      size_t j = i + uniform_index(*rng, coords.size() - i);
      std::swap(coords[i], coords[j]);
    }
    coords.resize(max_coords);
  }
  GradCheckReport rep;
  for (size_t j : coords) {
    double orig = params.weights[j];
    auto loss_at = [&](double wj) {
      params.weights[j] = wj;
      double l = forward_loss(params, batch).mean_loss;
      double reg = 0.0;
      for (double v : params.weights) reg += v * v;
      return l + 0.5 * weight_decay * reg;
    };
    double numeric = (loss_at(orig + h) - loss_at(orig - h)) / (2.0 * h);
    params.weights[j] = orig;
    // Floor the denominator at 1e-4: below that the comparison is absolute
    // at 1e-10 scale, above the ~5e-12 cancellation noise of the central
    // difference itself.
    double denom = std::max({std::abs(numeric), std::abs(analytic[j]), 1e-4});
    double rel = std::abs(numeric - analytic[j]) / denom;
    if (rel > rep.max_rel_error) {
      rep.max_rel_error = rel;
      rep.worst_index = static_cast<int>(j);
    }
  }
  rep.passed = rep.max_rel_error < tol;
  return rep;
}

// --- checkpoint format (versioned, little-endian) ---
// magic "AUGM", u32 version=1, u32 byte-order tag 0x01020304,
// i32 in_height, i32 in_width, i32 num_classes, then total_params f64.

inline void save_checkpoint(const ModelParams& p, const std::string& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("cannot open for write: " + path);
  out.write("AUGM", 4);
  std::uint32_t version = 1, order = 0x01020304;
  std::int32_t dims[3] = {p.arch.in_height, p.arch.in_width,
                          p.arch.num_classes};
  out.write(reinterpret_cast<const char*>(&version), 4);
  out.write(reinterpret_cast<const char*>(&order), 4);
  out.write(reinterpret_cast<const char*>(dims), sizeof(dims));
  out.write(reinterpret_cast<const char*>(p.weights.data()),
            static_cast<std::streamsize>(p.weights.size() * sizeof(double)));
  if (!out) throw std::runtime_error("checkpoint write failed: " + path);
}

inline ModelParams load_checkpoint(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("cannot open: " + path);
  char magic[4];
  in.read(magic, 4);
  if (!in || std::string(magic, 4) != "AUGM")
    throw std::runtime_error("bad checkpoint magic: " + path);
  std::uint32_t version = 0, order = 0;
  std::int32_t dims[3];
  in.read(reinterpret_cast<char*>(&version), 4);
  in.read(reinterpret_cast<char*>(&order), 4);
  in.read(reinterpret_cast<char*>(dims), sizeof(dims));
  if (version != 1) throw std::runtime_error("unsupported checkpoint version");
  if (order != 0x01020304)
    throw std::runtime_error("checkpoint byte order mismatch");
  ArchConfig arch{dims[0], dims[1], dims[2]};
  ModelParams p(arch);
  in.read(reinterpret_cast<char*>(p.weights.data()),
          static_cast<std::streamsize>(p.weights.size() * sizeof(double)));
  if (!in) throw std::runtime_error("truncated checkpoint: " + path);
  return p;
}

}  // namespace augarena
