#pragma once

#include <algorithm>
#include <array>
#include <cstdint>
#include <numeric>
#include <stdexcept>
#include <string>
#include <vector>

#include "augarena/rng.hpp"

namespace augarena {

// The 15 augmentation operations. Encoding 0..14 is part of the on-disk and
// CSV contracts; do not reorder.
enum class OpKind : int {
  ShearX = 0,
  ShearY,
  TranslateX,
  TranslateY,
  Rotate,
  AutoContrast,
  Invert,
  Equalize,
  Solarize,
  Posterize,
  Contrast,
  Color,
  Brightness,
  Sharpness,
  Cutout,
};

inline constexpr int kNumOpKinds = 15;
inline constexpr int kNumMagLevels = 5;
inline constexpr int kNumAugOps = kNumOpKinds * kNumMagLevels;  // 75
inline constexpr int kNumPolicies = kNumAugOps * kNumAugOps;    // 5625

inline constexpr std::array<const char*, kNumOpKinds> kOpKindNames = {
    "ShearX",   "ShearY",   "TranslateX", "TranslateY", "Rotate",
    "AutoContrast", "Invert", "Equalize", "Solarize",   "Posterize",
    "Contrast", "Color",    "Brightness", "Sharpness",  "Cutout",
};

inline const char* op_kind_name(OpKind k) {
  return kOpKindNames[static_cast<int>(k)];
}

// Discrete magnitude strength, 0 (mildest) .. 4 (strongest).
struct MagLevel {
  int level = 0;

  explicit MagLevel(int l) : level(l) {
    if (l < 0 || l >= kNumMagLevels)
      throw std::out_of_range("MagLevel out of range: " + std::to_string(l));
  }
  MagLevel() = default;
  bool operator==(const MagLevel&) const = default;
};

struct AugOp {
  OpKind kind = OpKind::ShearX;
  MagLevel level;

  bool operator==(const AugOp&) const = default;
};

// An augmentation policy: an ordered pair of operations, applied first then
// second. Order matters; the kernels do not commute.
struct Policy {
  AugOp first;
  AugOp second;

  bool operator==(const Policy&) const = default;
};

using PolicyId = int;  // [0, 5625)

inline int encode_augop(const AugOp& op) {
  return static_cast<int>(op.kind) * kNumMagLevels + op.level.level;
}

inline AugOp decode_augop(int code) {
  return AugOp{static_cast<OpKind>(code / kNumMagLevels),
               MagLevel(code % kNumMagLevels)};
}

// Canonical id: ((k1*5+m1)*75) + (k2*5+m2).
inline PolicyId encode(const Policy& p) {
  return encode_augop(p.first) * kNumAugOps + encode_augop(p.second);
}

inline Policy decode(PolicyId id) {
  if (id < 0 || id >= kNumPolicies)
    throw std::out_of_range("PolicyId out of range: " + std::to_string(id));
  return Policy{decode_augop(id / kNumAugOps), decode_augop(id % kNumAugOps)};
}

// Text form used in logs and CSV: Kind1@L<level>+Kind2@L<level>.
inline std::string augop_text(const AugOp& op) {
  return std::string(op_kind_name(op.kind)) + "@L" +
         std::to_string(op.level.level);
}

inline std::string policy_text(const Policy& p) {
  return augop_text(p.first) + "+" + augop_text(p.second);
}

inline AugOp parse_augop(const std::string& text) {
  auto at = text.find("@L");
  if (at == std::string::npos)
    throw std::invalid_argument("bad op text: " + text);
  std::string name = text.substr(0, at);
  int kind = -1;
  for (int k = 0; k < kNumOpKinds; ++k)
    if (name == kOpKindNames[k]) kind = k;
  if (kind < 0) throw std::invalid_argument("unknown op kind: " + name);
  int level = std::stoi(text.substr(at + 2));
  return AugOp{static_cast<OpKind>(kind), MagLevel(level)};
}

inline Policy parse_policy(const std::string& text) {
  auto plus = text.find('+');
  if (plus == std::string::npos)
    throw std::invalid_argument("bad policy text: " + text);
  return Policy{parse_augop(text.substr(0, plus)),
                parse_augop(text.substr(plus + 1))};
}

// Ordered list of distinct policy ids.
using PolicySet = std::vector<PolicyId>;

inline PolicySet enumerate_all() {
  PolicySet all(kNumPolicies);
  std::iota(all.begin(), all.end(), 0);
  return all;
}

inline Policy sample_uniform(Rng& rng) {
  // Both components independent and uniform over the 75 (kind, level) pairs.
  int a = static_cast<int>(uniform_index(rng, kNumAugOps));
  int b = static_cast<int>(uniform_index(rng, kNumAugOps));
  return Policy{decode_augop(a), decode_augop(b)};
}

// k distinct ids, uniform without replacement. Scheme: Fisher-Yates prefix
// shuffle of the full id range, then sort the prefix so the result order is
// canonical regardless of how the rng was consumed.
inline PolicySet sample_subset(Rng& rng, int k) {
  if (k < 1 || k > kNumPolicies)
    throw std::out_of_range("subset size out of range: " + std::to_string(k));
  PolicySet ids = enumerate_all();
  for (int i = 0; i < k; ++i) {
    auto j = i + static_cast<int>(uniform_index(rng, kNumPolicies - i));
    std::swap(ids[i], ids[j]);
  }
  ids.resize(k);
  std::sort(ids.begin(), ids.end());
  return ids;
}

}  // namespace augarena
