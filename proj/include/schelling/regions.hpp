#pragma once

#include <algorithm>
#include <cassert>
#include <cstdint>
#include <cstdlib>
#include <deque>
#include <stdexcept>
#include <vector>

#include "schelling/bounds.hpp"
#include "schelling/grid.hpp"

namespace schelling {

// ---------------------------------------------------------------------------
// Affected nodes
// ---------------------------------------------------------------------------

enum class Affected : std::uint8_t { none = 0, plus = 1, minus = 2 };

/// theta-affected: a theta-particle placed at the node would be unstable
/// while a theta-bar-particle would be stable. With k = number of +1 among
/// the N-1 non-center neighbors: plus-affected iff k+1 < tauN and N-k >= tauN.
inline Affected node_affected(const SpinGrid& g, int idx,
                              const Intolerance& tol) {
  int t = tol.threshold();
  int n = g.window_size();
  int k = g.plus_count(idx) - (g.spin(idx) > 0 ? 1 : 0);
  bool plus = (k + 1 < t) && (n - k >= t);
  bool minus = (n - k < t) && (k + 1 >= t);
  assert(!(plus && minus));
  if (plus) return Affected::plus;
  if (minus) return Affected::minus;
  return Affected::none;
}

inline Affected node_affected(const SpinGrid& g, Node u,
                              const Intolerance& tol) {
  return node_affected(g, g.index_of(u), tol);
}

struct AffectedMap {
  std::vector<Affected> label;
  long long plus_count = 0;
  long long minus_count = 0;
};

inline AffectedMap classify_affected(const SpinGrid& g,
                                     const Intolerance& tol) {
  AffectedMap m;
  m.label.resize(g.node_count());
  for (int i = 0; i < g.node_count(); ++i) {
    m.label[i] = node_affected(g, i, tol);
    m.plus_count += m.label[i] == Affected::plus;
    m.minus_count += m.label[i] == Affected::minus;
  }
  return m;
}

inline Affected affected_for(Spin theta) {
  return theta > 0 ? Affected::plus : Affected::minus;
}

// ---------------------------------------------------------------------------
// Affected* markers
// ---------------------------------------------------------------------------

/// No real configuration forces a particle to be unstable regardless of its
/// neighbors (that would need N < tau N), so affected* status is an external
/// marker painted onto seed regions rather than a derived predicate.
class AffectedStarMask {
 public:
  explicit AffectedStarMask(const SpinGrid& g)
      : side_(g.side()), mask_(g.node_count(), 0) {}

  void mark(Node u) { mask_[index(u)] = 1; }

  void mark_block(Node center, int radius) {
    for (int dy = -radius; dy <= radius; ++dy)
      for (int dx = -radius; dx <= radius; ++dx)
        mask_[index({center.x + dx, center.y + dy})] = 1;
  }

  bool test(Node u) const { return mask_[index(u)] != 0; }

 private:
  int index(Node u) const {
    int x = wrap(u.x + side_ / 2), y = wrap(u.y + side_ / 2);
    return y * side_ + x;
  }
  int wrap(int v) const {
    v %= side_;
    return v < 0 ? v + side_ : v;
  }
  int side_;
  std::vector<std::uint8_t> mask_;
};

inline bool is_affected_star(const AffectedStarMask& mask, Node u) {
  return mask.test(u);
}

/// The derived form: true only if even an all-same window is below threshold.
inline bool intrinsically_affected_star(const Intolerance& tol) {
  return tol.neighborhood_size() < tol.threshold();
}

// ---------------------------------------------------------------------------
// Block renormalization
// ---------------------------------------------------------------------------

struct BlockId {
  int bx = 0, by = 0;
  friend bool operator==(const BlockId&, const BlockId&) = default;
};

/// Disjoint tiling of the torus into square blocks plus a good/bad label per
/// block. Labels are filled by classify_blocks (or set directly in tests and
/// synthetic percolation fields).
class BlockMap {
 public:
  BlockMap(int grid_side, int block_side)
      : grid_side_(grid_side), block_side_(block_side) {
    if (block_side <= 0 || grid_side % block_side != 0)
      throw std::invalid_argument("renormalize: block side must divide 2h");
    per_side_ = grid_side / block_side;
    bad_.assign(std::size_t(per_side_) * per_side_, 0);
  }

  int block_side() const { return block_side_; }
  int blocks_per_side() const { return per_side_; }
  int block_count() const { return per_side_ * per_side_; }

  BlockId block_of(Node u) const {
    int x = u.x + grid_side_ / 2, y = u.y + grid_side_ / 2;
    return {x / block_side_, y / block_side_};
  }

  int index(BlockId b) const { return b.by * per_side_ + b.bx; }
  BlockId block_at(int idx) const {
    return {idx % per_side_, idx / per_side_};
  }

  /// Nodes covered by a block, in torus coordinates.
  std::vector<Node> nodes_of(BlockId b) const {
    std::vector<Node> out;
    out.reserve(std::size_t(block_side_) * block_side_);
    int x0 = b.bx * block_side_ - grid_side_ / 2;
    int y0 = b.by * block_side_ - grid_side_ / 2;
    for (int dy = 0; dy < block_side_; ++dy)
      for (int dx = 0; dx < block_side_; ++dx)
        out.push_back({x0 + dx, y0 + dy});
    return out;
  }

  bool bad(BlockId b) const { return bad_[index(b)] != 0; }
  bool bad(int idx) const { return bad_[idx] != 0; }
  void set_bad(BlockId b, bool v) { bad_[index(b)] = v ? 1 : 0; }
  void set_bad(int idx, bool v) { bad_[idx] = v ? 1 : 0; }

 private:
  int grid_side_, block_side_, per_side_;
  std::vector<std::uint8_t> bad_;
};

inline BlockMap renormalize(const SpinGrid& g, int block_side) {
  return BlockMap(g.side(), block_side);
}

/// Good block of type theta: every radius-floor(w/2) window whose center
/// lies in the block holds fewer than N_I/2 + N^{1/2+eps} theta-bar
/// particles. Returns true when the block is good.
inline bool classify_block(const SpinGrid& g, const BlockMap& map, BlockId b,
                           Spin theta, double eps) {
  if (!(eps > 0.0 && eps < 0.5))
    throw std::invalid_argument("classify_block: eps must lie in (0, 1/2)");
  int r = g.horizon() / 2;
  int ni = (2 * r + 1) * (2 * r + 1);
  double cutoff = 2.0 * std::pow(double(g.window_size()), 0.5 + eps);
  Spin bar = Spin(-theta);
  for (Node u : map.nodes_of(b)) {
    int w_i = window_state_count(g, u, r, bar);
    if (double(2 * w_i - ni) >= cutoff) return false;
  }
  return true;
}

inline void classify_blocks(const SpinGrid& g, BlockMap& map, Spin theta,
                            double eps) {
  for (int i = 0; i < map.block_count(); ++i)
    map.set_bad(i, !classify_block(g, map, map.block_at(i), theta, eps));
}

// ---------------------------------------------------------------------------
// Bad-block clusters
// ---------------------------------------------------------------------------

struct BadCluster {
  std::vector<BlockId> members;
  BlockId reference;  // lexicographically smallest (by, bx) member
  int radius = 0;     // sup block l-infinity distance from the reference
};

/// Moore-adjacency connected components of bad blocks (torus wrap), via
/// union-find.
inline std::vector<BadCluster> bad_clusters(const BlockMap& map) {
  int n = map.block_count(), side = map.blocks_per_side();
  std::vector<int> parent(n);
  for (int i = 0; i < n; ++i) parent[i] = i;
  std::vector<int>* pp = &parent;
  auto find = [pp](int v) {
    while ((*pp)[v] != v) {
      (*pp)[v] = (*pp)[(*pp)[v]];
      v = (*pp)[v];
    }
    return v;
  };
  auto unite = [&](int a, int b) {
    a = find(a);
    b = find(b);
    if (a != b) parent[std::max(a, b)] = std::min(a, b);
  };
  auto wrap = [side](int v) { return (v % side + side) % side; };
  for (int i = 0; i < n; ++i) {
    if (!map.bad(i)) continue;
    BlockId b = map.block_at(i);
    for (int dy = -1; dy <= 1; ++dy)
      for (int dx = -1; dx <= 1; ++dx) {
        if (dx == 0 && dy == 0) continue;
        int j = wrap(b.by + dy) * side + wrap(b.bx + dx);
        if (map.bad(j)) unite(i, j);
      }
  }
  std::vector<int> root_to_cluster(n, -1);
  std::vector<BadCluster> out;
  for (int i = 0; i < n; ++i) {
    if (!map.bad(i)) continue;
    int r = find(i);
    if (root_to_cluster[r] < 0) {
      root_to_cluster[r] = static_cast<int>(out.size());
      out.emplace_back();
    }
    out[root_to_cluster[r]].members.push_back(map.block_at(i));
  }
  auto torus_linf = [side](BlockId a, BlockId b) {
    int dx = std::abs(a.bx - b.bx);
    int dy = std::abs(a.by - b.by);
    dx = std::min(dx, side - dx);
    dy = std::min(dy, side - dy);
    return std::max(dx, dy);
  };
  for (auto& c : out) {
    c.reference = c.members.front();  // union-find roots are minimal indices
    c.radius = 0;
    for (const auto& m : c.members)
      c.radius = std::max(c.radius, torus_linf(c.reference, m));
  }
  return out;
}

/// Block l-infinity distance from `from` to the farthest member of the
/// cluster containing `from`; -1 when `from` is not bad. This is the
/// origin-anchored radius used by the tail statistics.
inline int cluster_reach_from(const BlockMap& map, BlockId from) {
  if (!map.bad(from)) return -1;
  int side = map.blocks_per_side();
  std::vector<std::uint8_t> seen(map.block_count(), 0);
  std::deque<BlockId> frontier{from};
  seen[map.index(from)] = 1;
  auto wrap = [side](int v) { return (v % side + side) % side; };
  auto torus_d = [side](int a, int b) {
    int d = std::abs(a - b);
    return std::min(d, side - d);
  };
  int reach = 0;
  while (!frontier.empty()) {
    BlockId b = frontier.front();
    frontier.pop_front();
    reach = std::max(reach, std::max(torus_d(b.bx, from.bx),
                                     torus_d(b.by, from.by)));
    for (int dy = -1; dy <= 1; ++dy)
      for (int dx = -1; dx <= 1; ++dx) {
        BlockId nb{wrap(b.bx + dx), wrap(b.by + dy)};
        int j = map.index(nb);
        if (!seen[j] && map.bad(j)) {
          seen[j] = 1;
          frontier.push_back(nb);
        }
      }
  }
  return reach;
}

// ---------------------------------------------------------------------------
// Radical and unstable regions
// ---------------------------------------------------------------------------

/// Small parameters of the radical-region construction. The 0.265 shell
/// factor is the fixed intermediate radius of the trigger cascade.
struct RadicalParams {
  double epsilon = 0.1;        // in (0, 1/2)
  double epsilon_prime = 0.3;  // > g(tau) for the trigger to engage
};

inline constexpr double kTriggerShellFactor = 0.265;

/// Type-theta radical region: the radius-floor((1+eps')w) window around
/// `center` holds fewer theta-particles than the (super-)radical cutoff.
inline bool is_radical_region(const SpinGrid& g, Node center,
                              const Intolerance& tol,
                              const RadicalParams& params, Spin theta) {
  int rs = radical_window_radius(g.horizon(), params.epsilon_prime);
  if (2 * rs + 1 > g.side())
    throw std::invalid_argument("is_radical_region: window exceeds torus");
  int limit = radical_count_limit(tol, params.epsilon, params.epsilon_prime);
  return window_state_count(g, center, rs, theta) <= limit;
}

/// Type-theta unstable region: the radius-floor(eps' w) window holds at
/// least floor(tau eps'^2 N - N^{1/2+eps}) currently-unstable
/// theta-particles. Nonpositive cutoffs (the usual case at small scales)
/// clamp to one: an unstable region always contains at least one unstable
/// particle.
inline bool is_unstable_region(const SpinGrid& g, Node center,
                               const Intolerance& tol,
                               const RadicalParams& params, Spin theta) {
  double ew = params.epsilon_prime * g.horizon();
  if (ew < 1.0)
    throw std::invalid_argument("is_unstable_region: need eps' w >= 1");
  int r = static_cast<int>(std::floor(ew));
  if (2 * r + 1 > g.side())
    throw std::invalid_argument("is_unstable_region: window exceeds torus");
  int n = g.window_size();
  long long cutoff = static_cast<long long>(
      std::floor(tol.value() * params.epsilon_prime * params.epsilon_prime * n -
                 std::pow(double(n), 0.5 + params.epsilon)));
  if (cutoff < 1) cutoff = 1;
  long long found = 0;
  g.for_each_in_window(g.index_of(center), r, [&](int idx) {
    if (g.spin(idx) == theta && is_unstable(g, idx, tol)) ++found;
  });
  return found >= cutoff;
}

// ---------------------------------------------------------------------------
// Cascade closure
// ---------------------------------------------------------------------------

struct CascadeResult {
  std::vector<int> flipped;  // indices, in execution order
  int flips = 0;
};

/// Monotone closure: repeatedly flip every theta-particle inside the allowed
/// set that is unstable and stabilizable, until none remains. For tau < 1/2
/// each theta -> theta-bar flip only destabilizes the remaining
/// theta-particles, so the result is order-independent and maximal over all
/// legal flip sequences; "does some flip sequence reach X" reduces to
/// testing X on this fixpoint. Mutates `g` (callers pass a working copy).
inline CascadeResult cascade_closure(SpinGrid& g, const Intolerance& tol,
                                     const std::vector<int>& allowed_indices,
                                     Spin theta) {
  std::vector<std::uint8_t> allowed(g.node_count(), 0);
  for (int idx : allowed_indices) allowed[idx] = 1;
  std::vector<std::uint8_t> queued(g.node_count(), 0);
  std::deque<int> work;
  for (int idx : allowed_indices)
    if (g.spin(idx) == theta && !queued[idx]) {
      queued[idx] = 1;
      work.push_back(idx);
    }
  CascadeResult res;
  while (!work.empty()) {
    int u = work.front();
    work.pop_front();
    queued[u] = 0;
    if (g.spin(u) != theta || !is_super_unstable(g, u, tol)) continue;
    g.flip(u);
    res.flipped.push_back(u);
    ++res.flips;
    g.for_each_in_window(u, g.horizon(), [&](int v) {
      if (allowed[v] && !queued[v] && g.spin(v) == theta) {
        queued[v] = 1;
        work.push_back(v);
      }
    });
  }
  return res;
}

// ---------------------------------------------------------------------------
// Expandable regions
// ---------------------------------------------------------------------------

struct ExpandableShells {
  std::vector<int> x1;  // cluster nodes dilated by floor(N/4)
  std::vector<int> x2;  // the next floor(N/4) shell
};

/// l-infinity dilation of the cluster's node set by BFS over Moore layers
/// (Moore graph distance equals l-infinity distance on the lattice).
inline ExpandableShells expandable_shells(const SpinGrid& g,
                                          const BlockMap& map,
                                          const BadCluster& cluster) {
  int d = g.window_size() / 4;
  std::vector<int> dist(g.node_count(), -1);
  std::deque<int> frontier;
  for (const auto& b : cluster.members)
    for (Node u : map.nodes_of(b)) {
      int idx = g.index_of(u);
      if (dist[idx] < 0) {
        dist[idx] = 0;
        frontier.push_back(idx);
      }
    }
  ExpandableShells shells;
  int side = g.side();
  while (!frontier.empty()) {
    int u = frontier.front();
    frontier.pop_front();
    (dist[u] <= d ? shells.x1 : shells.x2).push_back(u);
    if (dist[u] >= 2 * d) continue;
    int cx = u % side, cy = u / side;
    for (int dy = -1; dy <= 1; ++dy) {
      int row = g.wrap(cy + dy) * side;
      for (int dx = -1; dx <= 1; ++dx) {
        int v = row + g.wrap(cx + dx);
        if (dist[v] < 0) {
          dist[v] = dist[u] + 1;
          frontier.push_back(v);
        }
      }
    }
  }
  return shells;
}

/// theta-expandable: some sequence of theta-flips inside X1 yields a
/// theta-affected node in X2. Decided by running the cascade closure on X1
/// and checking X2 afterwards.
inline bool is_expandable(const SpinGrid& g, const Intolerance& tol,
                          const BlockMap& map, const BadCluster& cluster,
                          Spin theta) {
  ExpandableShells shells = expandable_shells(g, map, cluster);
  SpinGrid work = g;
  cascade_closure(work, tol, shells.x1, theta);
  Affected want = affected_for(theta);
  for (int idx : shells.x2)
    if (node_affected(work, idx, tol) == want) return true;
  return false;
}

// ---------------------------------------------------------------------------
// Firewalls
// ---------------------------------------------------------------------------

/// Annulus of outer Euclidean radius r and width sqrt(2) w around `center`.
/// Membership is decided in exact integer arithmetic: with A = r^2 + 2w^2 -
/// d^2, the inner condition r - sqrt(2) w <= d is A <= 0 or A^2 <= 8 w^2 r^2.
struct FirewallSpec {
  Node center;
  long long r = 0;  // outer radius
  int w = 0;

  void validate() const {
    if (r < 3ll * w) throw std::invalid_argument("firewall: need r >= 3w");
  }

  bool member_offset(long long dx, long long dy) const {
    long long d2 = dx * dx + dy * dy;
    if (d2 > r * r) return false;
    long long a = r * r + 2ll * w * w - d2;
    if (a <= 0) return true;
    return a * a <= 8ll * w * w * r * r;
  }
};

inline std::vector<Node> annulus_members(const FirewallSpec& spec) {
  spec.validate();
  std::vector<Node> out;
  for (long long dy = -spec.r; dy <= spec.r; ++dy)
    for (long long dx = -spec.r; dx <= spec.r; ++dx)
      if (spec.member_offset(dx, dy))
        out.push_back({spec.center.x + int(dx), spec.center.y + int(dy)});
  return out;
}

inline bool is_firewall(const SpinGrid& g, const FirewallSpec& spec) {
  spec.validate();
  Spin state = 0;
  bool first = true;
  for (long long dy = -spec.r; dy <= spec.r; ++dy)
    for (long long dx = -spec.r; dx <= spec.r; ++dx) {
      if (!spec.member_offset(dx, dy)) continue;
      Spin s = g.spin({spec.center.x + int(dx), spec.center.y + int(dy)});
      if (first) {
        state = s;
        first = false;
      } else if (s != state) {
        return false;
      }
    }
  return true;
}

/// Worst-case stability of the annulus: assume everything inside the closed
/// radius-r disk shares the wall's state and everything outside opposes it;
/// true iff every member then meets the stability threshold. Sufficient for
/// the wall to survive arbitrary exterior dynamics. Pure geometry; `tol`
/// must be built for the same horizon w.
inline bool static_firewall_stable(const FirewallSpec& spec,
                                   const Intolerance& tol) {
  spec.validate();
  long long r2 = spec.r * spec.r;
  for (long long dy = -spec.r; dy <= spec.r; ++dy)
    for (long long dx = -spec.r; dx <= spec.r; ++dx) {
      if (!spec.member_offset(dx, dy)) continue;
      int count = 0;
      for (int vy = -spec.w; vy <= spec.w; ++vy)
        for (int vx = -spec.w; vx <= spec.w; ++vx) {
          long long px = dx + vx, py = dy + vy;
          count += px * px + py * py <= r2;
        }
      if (count < tol.threshold()) return false;
    }
  return true;
}

// ---------------------------------------------------------------------------
// Monochromatic regions
// ---------------------------------------------------------------------------

struct MonoRegion {
  int radius = 0;      // rho_m, capped at h-1 (largest non-self-wrapping)
  long long size = 1;  // (2 rho_m + 1)^2
};

/// Largest radius rho such that some radius-rho window is monochromatic and
/// contains u. Largest-all-ones-square dynamic program over a 3x-tiled copy
/// of u's color class, maximized over odd-side squares covering u.
inline MonoRegion monochromatic_region(const SpinGrid& g, Node u) {
  const int side = g.side();
  const int ts = 3 * side;
  const int cap = side - 1;  // largest odd window side without self-wrap
  const Spin color = g.spin(u);
  std::vector<int> dp(std::size_t(ts) * ts, 0);
  for (int i = 0; i < ts; ++i) {
    int gy = i % side;
    for (int j = 0; j < ts; ++j) {
      std::size_t at = std::size_t(i) * ts + j;
      if (g.spin(gy * side + (j % side)) != color) {
        dp[at] = 0;
        continue;
      }
      if (i == 0 || j == 0) {
        dp[at] = 1;
        continue;
      }
      int m = std::min({dp[at - 1], dp[at - ts], dp[at - ts - 1]});
      dp[at] = m + 1;
    }
  }
  const int ux = (u.x + g.half_side()) + side;
  const int uy = (u.y + g.half_side()) + side;
  int best = 1;
  for (int i = uy; i <= uy + side - 2; ++i)
    for (int j = ux; j <= ux + side - 2; ++j) {
      int smax = std::min(dp[std::size_t(i) * ts + j], cap);
      int smin = std::max(i - uy, j - ux) + 1;
      if (smax < smin) continue;
      int s = (smax % 2 == 1) ? smax : smax - 1;
      if (s >= smin && s > best) best = s;
    }
  MonoRegion res;
  res.radius = (best - 1) / 2;
  res.size = 1ll * best * best;
  return res;
}

}  // namespace schelling
