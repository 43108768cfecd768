#pragma once

#include <cmath>
#include <cstdint>
#include <queue>
#include <span>
#include <stdexcept>
#include <unordered_map>
#include <unordered_set>
#include <vector>

#include "schelling/dynamics.hpp"
#include "schelling/rng.hpp"

namespace schelling::fpp {

/// Unbounded lattice coordinate (growth must not wrap).
struct Cell {
  std::int32_t x = 0;
  std::int32_t y = 0;
  friend bool operator==(const Cell&, const Cell&) = default;
};

inline std::uint64_t pack(Cell c) {
  return (std::uint64_t(std::uint32_t(c.x)) << 32) | std::uint32_t(c.y);
}
inline Cell unpack(std::uint64_t k) {
  return {std::int32_t(k >> 32), std::int32_t(k & 0xFFFFFFFFull)};
}

struct PassageRecord {
  Cell target;
  std::uint64_t seed = 0;
  double passage_time = 0.0;
};

/// Idealized growth under the region-of-expansion rule, decoupled from spin
/// configurations: the seed w-block (radius floor(w/2), an affected* block
/// at the origin) is flipped at time zero; whenever a w-block becomes fully
/// flipped, every cell of its outside boundary (the co-centered (w+2)-block
/// minus the w-block) becomes eligible and draws a fresh waiting time; a
/// cell flips when its waiting time elapses. Cells flip at most once.
class GrowthSim {
 public:
  GrowthSim(int w, WaitingTimeDistribution dist, std::uint64_t seed)
      : w_(w), rb_(w / 2), dist_(std::move(dist)), rng_(seed) {
    if (w <= 0) throw std::invalid_argument("growth: w must be positive");
    block_full_ = (2 * rb_ + 1) * (2 * rb_ + 1);
    for (int dy = -rb_; dy <= rb_; ++dy)
      for (int dx = -rb_; dx <= rb_; ++dx) flip_cell({dx, dy});
  }

  bool flipped(Cell c) const { return flipped_.count(pack(c)) != 0; }
  bool is_seed(Cell c) const {
    return std::abs(c.x) <= rb_ && std::abs(c.y) <= rb_;
  }
  double time() const { return time_; }
  std::size_t flipped_count() const { return flipped_.size(); }

  /// Time at which the next flip would occur; never empty (growth is
  /// unbounded).
  double next_event_time() const { return queue_.top().time; }

  /// Executes the next flip; returns the cell and its flip time.
  std::pair<Cell, double> advance() {
    Event e = queue_.top();
    queue_.pop();
    time_ = e.time;
    Cell c = unpack(e.cell);
    flip_cell(c);
    return {c, e.time};
  }

  template <typename Fn>
  void for_each_flipped(Fn&& fn) const {
    for (auto key : flipped_) fn(unpack(key));
  }

 private:
  struct Event {
    double time;
    std::uint64_t cell;
    bool operator>(const Event& o) const {
      if (time != o.time) return time > o.time;
      return cell > o.cell;
    }
  };

  void flip_cell(Cell c) {
    flipped_.insert(pack(c));
    // Only blocks containing c can newly complete.
    for (int dy = -rb_; dy <= rb_; ++dy)
      for (int dx = -rb_; dx <= rb_; ++dx) {
        Cell b{c.x + dx, c.y + dy};
        int filled = ++block_fill_[pack(b)];
        if (filled == block_full_) complete_block(b);
      }
  }

  void complete_block(Cell b) {
    int shell = rb_ + 1;
    for (int dy = -shell; dy <= shell; ++dy)
      for (int dx = -shell; dx <= shell; ++dx) {
        if (std::max(std::abs(dx), std::abs(dy)) != shell) continue;
        Cell s{b.x + dx, b.y + dy};
        std::uint64_t key = pack(s);
        if (flipped_.count(key) || scheduled_.count(key)) continue;
        scheduled_.insert(key);
        queue_.push({time_ + dist_.sample(rng_), key});
      }
  }

  int w_, rb_, block_full_;
  WaitingTimeDistribution dist_;
  SplitMix64 rng_;
  double time_ = 0.0;
  std::unordered_set<std::uint64_t> flipped_;
  std::unordered_set<std::uint64_t> scheduled_;
  std::unordered_map<std::uint64_t, int> block_fill_;
  std::priority_queue<Event, std::vector<Event>, std::greater<Event>> queue_;
};

/// Passage times from the origin seed block to each target. A target inside
/// the seed block has passage time zero.
inline std::vector<PassageRecord> simulate_growth(
    int w, std::span<const Cell> targets, const WaitingTimeDistribution& dist,
    std::uint64_t seed) {
  GrowthSim sim(w, dist, seed);
  std::vector<PassageRecord> out(targets.size());
  std::size_t remaining = 0;
  for (std::size_t i = 0; i < targets.size(); ++i) {
    out[i] = {targets[i], seed, 0.0};
    if (!sim.flipped(targets[i])) ++remaining;
  }
  while (remaining > 0) {
    auto [cell, t] = sim.advance();
    for (std::size_t i = 0; i < targets.size(); ++i)
      if (out[i].passage_time == 0.0 && !sim.is_seed(out[i].target) &&
          out[i].target == cell) {
        out[i].passage_time = t;
        --remaining;
      }
  }
  return out;
}

/// The flipped set once the next flip would exceed the budget.
inline std::vector<Cell> empirical_ball(int w, double budget,
                                        const WaitingTimeDistribution& dist,
                                        std::uint64_t seed) {
  GrowthSim sim(w, dist, seed);
  while (sim.next_event_time() <= budget) sim.advance();
  std::vector<Cell> out;
  out.reserve(sim.flipped_count());
  sim.for_each_flipped([&](Cell c) { out.push_back(c); });
  return out;
}

struct Stats {
  double mean = 0.0;
  double stddev = 0.0;  // sample standard deviation
  double cov = 0.0;
};

inline Stats passage_stats(std::span<const double> samples) {
  if (samples.size() < 2)
    throw std::invalid_argument("passage_stats: need at least 2 samples");
  double sum = 0.0;
  for (double v : samples) sum += v;
  double mean = sum / samples.size();
  double ss = 0.0;
  for (double v : samples) ss += (v - mean) * (v - mean);
  double sd = std::sqrt(ss / (samples.size() - 1));
  return {mean, sd, mean != 0.0 ? sd / mean : 0.0};
}

}  // namespace schelling::fpp
