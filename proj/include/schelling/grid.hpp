#pragma once

#include <cstdint>
#include <numeric>
#include <stdexcept>
#include <string>
#include <vector>

#include "schelling/rng.hpp"

namespace schelling {

using Spin = std::int8_t;  // +1 or -1

/// Torus coordinate in [-h, h) x [-h, h).
struct Node {
  int x = 0;
  int y = 0;
  friend bool operator==(const Node&, const Node&) = default;
};

/// Intolerance threshold bound to a neighborhood size N = (2w+1)^2.
///
/// tau_tilde is kept as an exact rational and the stability threshold is the
/// exact integer ceil(tau_tilde * N); every stability comparison in the
/// library is integer-only. tau = threshold / N.
class Intolerance {
 public:
  static Intolerance from_fraction(long long num, long long den, int horizon) {
    if (den <= 0 || num < 0 || num > den)
      throw std::invalid_argument("intolerance: tau_tilde must be in [0,1]");
    long long g = std::gcd(num, den);
    if (g > 1) {
      num /= g;
      den /= g;
    }
    Intolerance t;
    t.num_ = num;
    t.den_ = den;
    t.n_ = neighborhood_size_for(horizon);
    t.threshold_ = static_cast<int>((num * t.n_ + den - 1) / den);  // ceil
    return t;
  }

  /// Accepts "num/den" or a plain decimal such as "0.45" (parsed exactly).
  static Intolerance parse(const std::string& text, int horizon) {
    auto slash = text.find('/');
    if (slash != std::string::npos) {
      long long num = std::stoll(text.substr(0, slash));
      long long den = std::stoll(text.substr(slash + 1));
      return from_fraction(num, den, horizon);
    }
    auto dot = text.find('.');
    if (dot == std::string::npos) return from_fraction(std::stoll(text), 1, horizon);
    std::string digits = text.substr(0, dot) + text.substr(dot + 1);
    long long den = 1;
    for (std::size_t i = dot + 1; i < text.size(); ++i) {
      if (text[i] < '0' || text[i] > '9')
        throw std::invalid_argument("intolerance: bad decimal '" + text + "'");
      den *= 10;
      if (den > 1'000'000'000'000'000'000ll / 10)
        throw std::invalid_argument("intolerance: decimal too long");
    }
    return from_fraction(std::stoll(digits), den, horizon);
  }

  int threshold() const { return threshold_; }          // integer tau*N
  int neighborhood_size() const { return n_; }          // N
  double value() const { return double(threshold_) / n_; }  // tau
  long long tilde_num() const { return num_; }
  long long tilde_den() const { return den_; }

  static int neighborhood_size_for(int horizon) {
    return (2 * horizon + 1) * (2 * horizon + 1);
  }

 private:
  long long num_ = 1, den_ = 2;
  int n_ = 9;
  int threshold_ = 5;
};

/// Dense torus of +-1 spins with an incrementally maintained count, per node,
/// of +1 particles in its radius-w l-infinity window (the node included).
class SpinGrid {
 public:
  SpinGrid(int h, int w, Spin fill) : SpinGrid(h, w) {
    Spin s = fill >= 0 ? Spin(+1) : Spin(-1);
    for (auto& v : spin_) v = s;
    int full = s > 0 ? window_size_ : 0;
    for (auto& c : count_) c = full;
  }

  static SpinGrid random(int h, int w, double p, std::uint64_t seed) {
    if (p < 0.0 || p > 1.0) throw std::invalid_argument("p must lie in [0,1]");
    SpinGrid g(h, w);
    SplitMix64 rng(seed);
    for (auto& v : g.spin_) v = rng.next_bernoulli(p) ? Spin(+1) : Spin(-1);
    g.rebuild_counts();
    return g;
  }

  static SpinGrid from_spins(int h, int w, const std::vector<Spin>& spins) {
    SpinGrid g(h, w);
    if (spins.size() != g.spin_.size())
      throw std::invalid_argument("from_spins: wrong spin array length");
    for (std::size_t i = 0; i < spins.size(); ++i)
      g.spin_[i] = spins[i] >= 0 ? Spin(+1) : Spin(-1);
    g.rebuild_counts();
    return g;
  }

  int horizon() const { return w_; }
  int half_side() const { return h_; }
  int side() const { return side_; }
  int node_count() const { return n_; }
  int window_size() const { return window_size_; }  // N = (2w+1)^2

  /// Accepts any integer coordinates; the torus wraps them.
  int index_of(Node u) const {
    return torus_wrap(u.y + h_) * side_ + torus_wrap(u.x + h_);
  }
  Node node_at(int idx) const { return {idx % side_ - h_, idx / side_ - h_}; }

  Spin spin(int idx) const { return spin_[idx]; }
  Spin spin(Node u) const { return spin_[index_of(u)]; }
  int plus_count(int idx) const { return count_[idx]; }
  int plus_count(Node u) const { return count_[index_of(u)]; }

  /// Number of particles in u's window sharing u's state (u itself included).
  int same_state_count(int idx) const {
    return spin_[idx] > 0 ? count_[idx] : window_size_ - count_[idx];
  }
  int same_state_count(Node u) const { return same_state_count(index_of(u)); }

  void flip(int idx) { change_spin(idx, Spin(-spin_[idx])); }
  void flip(Node u) { flip(index_of(u)); }

  void set_spin(int idx, Spin s) {
    s = s >= 0 ? Spin(+1) : Spin(-1);
    if (spin_[idx] != s) change_spin(idx, s);
  }
  void set_spin(Node u, Spin s) { set_spin(index_of(u), s); }

  /// Direct O(h^2 w^2) recount; the oracle the incremental counts are held to.
  std::vector<int> recount_bruteforce() const {
    std::vector<int> out(n_, 0);
    for (int y = 0; y < side_; ++y)
      for (int x = 0; x < side_; ++x) {
        int acc = 0;
        for (int dy = -w_; dy <= w_; ++dy) {
          int yy = wrap(y + dy);
          for (int dx = -w_; dx <= w_; ++dx)
            acc += spin_[yy * side_ + wrap(x + dx)] > 0;
        }
        out[y * side_ + x] = acc;
      }
    return out;
  }

  const std::vector<Spin>& spins() const { return spin_; }
  const std::vector<int>& counts() const { return count_; }

  int wrap(int v) const {
    if (v < 0) return v + side_;
    if (v >= side_) return v - side_;
    return v;
  }

  /// Visits every index in the radius-`r` window centered at `idx`.
  template <typename Fn>
  void for_each_in_window(int idx, int r, Fn&& fn) const {
    int cx = idx % side_, cy = idx / side_;
    for (int dy = -r; dy <= r; ++dy) {
      int row = torus_wrap(cy + dy) * side_;
      for (int dx = -r; dx <= r; ++dx) fn(row + torus_wrap(cx + dx));
    }
  }

 private:
  SpinGrid(int h, int w) : h_(h), w_(w) {
    if (h <= 0 || w <= 0) throw std::invalid_argument("h and w must be positive");
    if (2 * h <= 2 * (2 * w + 1))
      throw std::invalid_argument("torus too small: need 2h > 2(2w+1)");
    side_ = 2 * h;
    n_ = side_ * side_;
    window_size_ = (2 * w + 1) * (2 * w + 1);
    spin_.assign(n_, Spin(-1));
    count_.assign(n_, 0);
  }

  int torus_wrap(int v) const {  // valid for any v, not just one step out
    v %= side_;
    return v < 0 ? v + side_ : v;
  }

  void change_spin(int idx, Spin s) {
    spin_[idx] = s;
    int delta = s > 0 ? +1 : -1;
    int cx = idx % side_, cy = idx / side_;
    for (int dy = -w_; dy <= w_; ++dy) {
      int row = wrap(cy + dy) * side_;
      for (int dx = -w_; dx <= w_; ++dx) count_[row + wrap(cx + dx)] += delta;
    }
  }

  void rebuild_counts() {
    // Separable sliding sums: horizontal window counts, then vertical.
    std::vector<int> rowsum(n_, 0);
    for (int y = 0; y < side_; ++y) {
      int base = y * side_;
      int acc = 0;
      for (int dx = -w_; dx <= w_; ++dx) acc += spin_[base + wrap(dx)] > 0;
      rowsum[base] = acc;
      for (int x = 1; x < side_; ++x) {
        acc += spin_[base + wrap(x + w_)] > 0;
        acc -= spin_[base + wrap(x - 1 - w_)] > 0;
        rowsum[base + x] = acc;
      }
    }
    for (int x = 0; x < side_; ++x) {
      int acc = 0;
      for (int dy = -w_; dy <= w_; ++dy) acc += rowsum[wrap(dy) * side_ + x];
      count_[x] = acc;
      for (int y = 1; y < side_; ++y) {
        acc += rowsum[wrap(y + w_) * side_ + x];
        acc -= rowsum[wrap(y - 1 - w_) * side_ + x];
        count_[y * side_ + x] = acc;
      }
    }
  }

  int h_, w_, side_, n_, window_size_;
  std::vector<Spin> spin_;
  std::vector<int> count_;
};

/// s(u) < tau, i.e. same-state count below the integer threshold.
inline bool is_unstable(const SpinGrid& g, int idx, const Intolerance& tol) {
  return g.same_state_count(idx) < tol.threshold();
}
inline bool is_unstable(const SpinGrid& g, Node u, const Intolerance& tol) {
  return is_unstable(g, g.index_of(u), tol);
}

/// Would flipping u alone leave it stable? After the flip the same-state
/// count is N - c + 1 where c is the count before; this equals the
/// flip-copy-recheck oracle exactly.
inline bool is_flip_stabilizable(const SpinGrid& g, int idx,
                                 const Intolerance& tol) {
  return g.window_size() - g.same_state_count(idx) + 1 >= tol.threshold();
}
inline bool is_flip_stabilizable(const SpinGrid& g, Node u,
                                 const Intolerance& tol) {
  return is_flip_stabilizable(g, g.index_of(u), tol);
}

/// Unstable and made stable by its own flip. For tau <= 1/2 this is just
/// instability; for tau > 1/2 it is the strictly smaller "super-unstable"
/// predicate that drives the mirrored dynamics.
inline bool is_super_unstable(const SpinGrid& g, int idx,
                              const Intolerance& tol) {
  return is_unstable(g, idx, tol) && is_flip_stabilizable(g, idx, tol);
}

/// Count of `state` particles in the radius-`r` window centered at `c`.
inline int window_state_count(const SpinGrid& g, Node c, int r, Spin state) {
  int acc = 0;
  g.for_each_in_window(g.index_of(c), r,
                       [&](int idx) { acc += g.spin(idx) == state; });
  return acc;
}

}  // namespace schelling
