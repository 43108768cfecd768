#pragma once

#include <cassert>
#include <cstdint>
#include <functional>
#include <queue>
#include <stdexcept>
#include <vector>

#include "schelling/grid.hpp"
#include "schelling/rng.hpp"

namespace schelling {

/// Lyapunov function: sum over all particles of their same-state window
/// count. Strictly increases on every executed flip, which is what forces
/// termination on a finite torus.
inline long long lyapunov(const SpinGrid& g) {
  long long acc = 0;
  for (int i = 0; i < g.node_count(); ++i) acc += g.same_state_count(i);
  return acc;
}

/// Steady iff no particle is simultaneously unstable and flip-stabilizable.
inline bool is_steady(const SpinGrid& g, const Intolerance& tol) {
  for (int i = 0; i < g.node_count(); ++i)
    if (is_super_unstable(g, i, tol)) return false;
  return true;
}

/// Waiting-time law for the continuous-clock process. Exponential(1) is the
/// Glauber case; any sampler with F(x)=0 for x<=0, F not a point mass, and a
/// finite exponential moment (bound recorded in `mgf_bound`) is admissible.
struct WaitingTimeDistribution {
  static WaitingTimeDistribution exponential(double rate = 1.0) {
    WaitingTimeDistribution d;
    d.sampler = [rate](SplitMix64& rng) { return rng.next_exponential(rate); };
    d.mgf_bound = rate / 2;
    return d;
  }

  static WaitingTimeDistribution custom(std::function<double(SplitMix64&)> fn,
                                        double mgf_bound) {
    WaitingTimeDistribution d;
    d.sampler = std::move(fn);
    d.mgf_bound = mgf_bound;
    return d;
  }

  double sample(SplitMix64& rng) const { return sampler(rng); }

  std::function<double(SplitMix64&)> sampler;
  double mgf_bound = 0.5;
};

struct StepResult {
  enum class Kind { Flipped, NullEvent, NoUnstable };
  Kind kind = Kind::NoUnstable;
  int node = -1;
  double time = 0.0;  // event time (continuous scheduler only)
};

struct SteadyStateReport {
  std::uint64_t steps_taken = 0;
  std::uint64_t flips_executed = 0;
  std::uint64_t null_events = 0;
  long long final_lyapunov = 0;
  bool reached_steady = false;
};

namespace detail {

/// Order-statistics set over node indices: O(log n) insert/erase/select.
/// Selection by rank makes the uniform pick canonical (independent of update
/// history), which is what checkpoint replay relies on.
class IndexedSet {
 public:
  explicit IndexedSet(int n) : n_(n), tree_(n + 1, 0), member_(n, 0) {}

  bool contains(int i) const { return member_[i]; }
  int size() const { return size_; }

  void insert(int i) {
    if (member_[i]) return;
    member_[i] = 1;
    ++size_;
    add(i, +1);
  }

  void erase(int i) {
    if (!member_[i]) return;
    member_[i] = 0;
    --size_;
    add(i, -1);
  }

  /// k-th smallest member, 0-based.
  int select(int k) const {
    assert(k >= 0 && k < size_);
    int pos = 0, rem = k + 1;
    int log = 1;
    while ((1 << log) <= n_) ++log;
    for (int step = 1 << (log - 1); step > 0; step >>= 1) {
      int next = pos + step;
      if (next <= n_ && tree_[next] < rem) {
        pos = next;
        rem -= tree_[next];
      }
    }
    return pos;  // tree is 1-based; pos is the 0-based index
  }

 private:
  void add(int i, int d) {
    for (int v = i + 1; v <= n_; v += v & -v) tree_[v] += d;
  }

  int n_, size_ = 0;
  std::vector<int> tree_;
  std::vector<std::uint8_t> member_;
};

inline std::uint8_t node_status(const SpinGrid& g, int idx,
                                const Intolerance& tol) {
  std::uint8_t s = 0;
  if (is_unstable(g, idx, tol)) {
    s = 1;
    if (is_flip_stabilizable(g, idx, tol)) s = 3;  // unstable + stabilizable
  }
  return s;
}

}  // namespace detail

/// Discrete-time chain: each step picks one unstable particle uniformly at
/// random and flips it iff the flip makes it stable.
class DiscreteScheduler {
 public:
  struct State {
    std::uint64_t rng_state = 0;
    std::uint64_t events = 0, flips = 0, nulls = 0;
  };

  DiscreteScheduler(SpinGrid& grid, Intolerance tol, std::uint64_t seed)
      : grid_(grid), tol_(tol), rng_(seed), unstable_(grid.node_count()),
        status_(grid.node_count(), 0) {
    rebuild();
  }

  DiscreteScheduler(SpinGrid& grid, Intolerance tol, const State& st)
      : DiscreteScheduler(grid, tol, 0) {
    rng_.set_state(st.rng_state);
    events_ = st.events;
    flips_ = st.flips;
    nulls_ = st.nulls;
  }

  StepResult step() {
    if (unstable_.size() == 0) return {StepResult::Kind::NoUnstable, -1, 0.0};
    ++events_;
    int k = static_cast<int>(rng_.next_below(unstable_.size()));
    int u = unstable_.select(k);
    if (status_[u] == 3) {
      execute_flip(u);
      return {StepResult::Kind::Flipped, u, 0.0};
    }
    ++nulls_;
    return {StepResult::Kind::NullEvent, u, 0.0};
  }

  bool is_steady() const { return active_ == 0; }
  int unstable_count() const { return unstable_.size(); }
  std::uint64_t events() const { return events_; }
  std::uint64_t flips() const { return flips_; }
  std::uint64_t nulls() const { return nulls_; }
  const SpinGrid& grid() const { return grid_; }
  const Intolerance& intolerance() const { return tol_; }

  State save_state() const { return {rng_.state(), events_, flips_, nulls_}; }

 private:
  void rebuild() {
    active_ = 0;
    for (int i = 0; i < grid_.node_count(); ++i) refresh(i);
  }

  void refresh(int idx) {
    std::uint8_t s = detail::node_status(grid_, idx, tol_);
    std::uint8_t old = status_[idx];
    if (s == old) return;
    if ((s & 1) != (old & 1)) {
      if (s & 1)
        unstable_.insert(idx);
      else
        unstable_.erase(idx);
    }
    active_ += (s == 3) - (old == 3);
    status_[idx] = s;
  }

  void execute_flip(int u) {
    grid_.flip(u);
    ++flips_;
    grid_.for_each_in_window(u, grid_.horizon(), [&](int v) { refresh(v); });
  }

  SpinGrid& grid_;
  Intolerance tol_;
  SplitMix64 rng_;
  detail::IndexedSet unstable_;
  std::vector<std::uint8_t> status_;
  long active_ = 0;
  std::uint64_t events_ = 0, flips_ = 0, nulls_ = 0;
};

/// Continuous-time next-event process: every particle draws a waiting time
/// when it (re)becomes unstable, the earliest pending clock fires, and the
/// flip rule is applied. A particle that turns stable discards its clock and
/// draws a fresh one if it later becomes unstable again; a null event (fired
/// while not stabilizable, tau > 1/2 only) also resamples that clock.
class ContinuousScheduler {
 public:
  struct ClockEntry {
    double time;
    int node;
    std::uint32_t stamp;
    bool operator>(const ClockEntry& o) const {
      if (time != o.time) return time > o.time;
      if (node != o.node) return node > o.node;
      return stamp > o.stamp;
    }
  };

  struct State {
    std::uint64_t rng_state = 0;
    std::uint64_t events = 0, flips = 0, nulls = 0;
    double time = 0.0;
    std::vector<ClockEntry> clocks;  // valid entries, sorted
  };

  ContinuousScheduler(SpinGrid& grid, Intolerance tol,
                      WaitingTimeDistribution dist, std::uint64_t seed)
      : grid_(grid), tol_(tol), dist_(std::move(dist)), rng_(seed),
        status_(grid.node_count(), 0), stamp_(grid.node_count(), 0) {
    for (int i = 0; i < grid_.node_count(); ++i) refresh(i);
  }

  ContinuousScheduler(SpinGrid& grid, Intolerance tol,
                      WaitingTimeDistribution dist, const State& st)
      : grid_(grid), tol_(tol), dist_(std::move(dist)), rng_(0),
        status_(grid.node_count(), 0), stamp_(grid.node_count(), 0) {
    rng_.set_state(st.rng_state);
    events_ = st.events;
    flips_ = st.flips;
    nulls_ = st.nulls;
    time_ = st.time;
    for (int i = 0; i < grid_.node_count(); ++i) {
      std::uint8_t s = detail::node_status(grid_, i, tol_);
      status_[i] = s;
      active_ += s == 3;
    }
    for (const auto& e : st.clocks) {
      stamp_[e.node] = e.stamp;
      queue_.push(e);
    }
  }

  StepResult step() {
    while (!queue_.empty()) {
      ClockEntry e = queue_.top();
      if (e.stamp != stamp_[e.node] || !(status_[e.node] & 1)) {
        queue_.pop();  // stale clock
        continue;
      }
      queue_.pop();
      ++events_;
      time_ = e.time;
      if (status_[e.node] == 3) {
        execute_flip(e.node);
        return {StepResult::Kind::Flipped, e.node, time_};
      }
      ++nulls_;
      arm_clock(e.node);  // still unstable, not stabilizable: fresh clock
      return {StepResult::Kind::NullEvent, e.node, time_};
    }
    return {StepResult::Kind::NoUnstable, -1, time_};
  }

  bool is_steady() const { return active_ == 0; }
  double time() const { return time_; }
  std::uint64_t events() const { return events_; }
  std::uint64_t flips() const { return flips_; }
  std::uint64_t nulls() const { return nulls_; }

  State save_state() const {
    State st{rng_.state(), events_, flips_, nulls_, time_, {}};
    auto copy = queue_;
    while (!copy.empty()) {
      ClockEntry e = copy.top();
      copy.pop();
      if (e.stamp == stamp_[e.node] && (status_[e.node] & 1))
        st.clocks.push_back(e);
    }
    return st;  // heap pops in (time, node, stamp) order: canonical
  }

 private:
  void arm_clock(int idx) {
    ++stamp_[idx];
    queue_.push({time_ + dist_.sample(rng_), idx, stamp_[idx]});
  }

  void refresh(int idx) {
    std::uint8_t s = detail::node_status(grid_, idx, tol_);
    std::uint8_t old = status_[idx];
    if (s == old) return;
    if ((s & 1) && !(old & 1)) {
      arm_clock(idx);
    } else if (!(s & 1) && (old & 1)) {
      ++stamp_[idx];  // invalidate pending clock
    }
    active_ += (s == 3) - (old == 3);
    status_[idx] = s;
  }

  void execute_flip(int u) {
    grid_.flip(u);
    ++flips_;
    grid_.for_each_in_window(u, grid_.horizon(), [&](int v) { refresh(v); });
  }

  SpinGrid& grid_;
  Intolerance tol_;
  WaitingTimeDistribution dist_;
  SplitMix64 rng_;
  std::priority_queue<ClockEntry, std::vector<ClockEntry>,
                      std::greater<ClockEntry>>
      queue_;
  std::vector<std::uint8_t> status_;
  std::vector<std::uint32_t> stamp_;
  long active_ = 0;
  std::uint64_t events_ = 0, flips_ = 0, nulls_ = 0;
  double time_ = 0.0;
};

/// Runs until no unstable particle can become stable by flipping, or until
/// `max_events` scheduler events have been consumed. Budget exhaustion is a
/// reported outcome, not an error.
template <typename Scheduler>
SteadyStateReport run_to_steady_state(Scheduler& sched, const SpinGrid& grid,
                                      std::uint64_t max_events) {
  std::uint64_t start = sched.events();
  SteadyStateReport rep;
  while (true) {
    if (sched.is_steady()) {
      rep.reached_steady = true;
      break;
    }
    if (sched.events() - start >= max_events) break;
    sched.step();
  }
  rep.steps_taken = sched.events() - start;
  rep.flips_executed = sched.flips();
  rep.null_events = sched.nulls();
  rep.final_lyapunov = lyapunov(grid);
  return rep;
}

}  // namespace schelling
