#pragma once

#include <cmath>
#include <cstdint>
#include <vector>

namespace schelling {

/// Minimal arbitrary-precision unsigned integer: just what exact binomial
/// tail sums need (small-word multiply/divide, add, log2). Limbs are base
/// 2^32, least significant first.
class BigNat {
 public:
  BigNat() : limbs_{0} {}
  explicit BigNat(std::uint64_t v) {
    limbs_.push_back(static_cast<std::uint32_t>(v));
    if (v >> 32) limbs_.push_back(static_cast<std::uint32_t>(v >> 32));
  }

  bool is_zero() const { return limbs_.size() == 1 && limbs_[0] == 0; }

  BigNat& operator+=(const BigNat& o) {
    if (o.limbs_.size() > limbs_.size()) limbs_.resize(o.limbs_.size(), 0);
    std::uint64_t carry = 0;
    for (std::size_t i = 0; i < limbs_.size(); ++i) {
      std::uint64_t s = carry + limbs_[i] + (i < o.limbs_.size() ? o.limbs_[i] : 0u);
      limbs_[i] = static_cast<std::uint32_t>(s);
      carry = s >> 32;
    }
    if (carry) limbs_.push_back(static_cast<std::uint32_t>(carry));
    return *this;
  }

  BigNat& mul_u32(std::uint32_t m) {
    std::uint64_t carry = 0;
    for (auto& limb : limbs_) {
      std::uint64_t p = std::uint64_t(limb) * m + carry;
      limb = static_cast<std::uint32_t>(p);
      carry = p >> 32;
    }
    while (carry) {
      limbs_.push_back(static_cast<std::uint32_t>(carry));
      carry >>= 32;
    }
    return *this;
  }

  /// Floor division; exact whenever the caller knows d divides *this.
  BigNat& div_u32(std::uint32_t d) {
    std::uint64_t rem = 0;
    for (std::size_t i = limbs_.size(); i-- > 0;) {
      std::uint64_t cur = (rem << 32) | limbs_[i];
      limbs_[i] = static_cast<std::uint32_t>(cur / d);
      rem = cur % d;
    }
    trim();
    return *this;
  }

  int bit_length() const {
    const std::uint32_t top = limbs_.back();
    if (top == 0) return 0;  // canonical zero
    int bits = 32 * static_cast<int>(limbs_.size() - 1);
    return bits + (32 - __builtin_clz(top));
  }

  /// log2 of the value; exact to double precision (top 64 bits kept).
  double log2() const {
    int bl = bit_length();
    if (bl == 0) return -HUGE_VAL;
    if (bl <= 64) return std::log2(static_cast<double>(to_u64()));
    std::uint64_t top = top_bits(64);
    return std::log2(static_cast<double>(top)) + (bl - 64);
  }

  bool operator==(const BigNat& o) const { return limbs_ == o.limbs_; }

  std::uint64_t to_u64() const {  // low 64 bits
    std::uint64_t v = limbs_[0];
    if (limbs_.size() > 1) v |= std::uint64_t(limbs_[1]) << 32;
    return v;
  }

 private:
  std::uint64_t top_bits(int n) const {
    int bl = bit_length();
    std::uint64_t acc = 0;
    for (int b = bl - 1; b >= bl - n; --b) {
      acc <<= 1;
      if (b >= 0) acc |= (limbs_[b / 32] >> (b % 32)) & 1u;
    }
    return acc;
  }

  void trim() {
    while (limbs_.size() > 1 && limbs_.back() == 0) limbs_.pop_back();
  }

  std::vector<std::uint32_t> limbs_;
};

/// Sum_{k=0}^{kmax} C(n,k), exactly. Multiplicative recurrence; every
/// division is exact because each partial C(n,k) is an integer.
inline BigNat binomial_partial_sum(int n, int kmax) {
  BigNat sum(0);
  if (kmax < 0) return sum;
  if (kmax > n) kmax = n;
  BigNat c(1);
  sum += c;
  for (int k = 0; k < kmax; ++k) {
    c.mul_u32(static_cast<std::uint32_t>(n - k));
    c.div_u32(static_cast<std::uint32_t>(k + 1));
    sum += c;
  }
  return sum;
}

}  // namespace schelling
