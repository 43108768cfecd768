#pragma once

#include <cinttypes>
#include <cstdint>
#include <cstdio>
#include <fstream>
#include <sstream>
#include <string>

#include "schelling/config.hpp"
#include "schelling/dynamics.hpp"
#include "schelling/grid.hpp"

namespace schelling {

/// Snapshot format, bit-exact:
///   line 1: SCHELLING v1
///   line 2: h=<int> w=<int> tau=<num>/<den> step=<int>
///   then 2h rows of 2h characters from {+,-}, row y=-h first, '\n'-ended.
struct Snapshot {
  SpinGrid grid;
  Intolerance tol;
  std::uint64_t step = 0;
};

inline std::string snapshot_text(const SpinGrid& g, const Intolerance& tol,
                                 std::uint64_t step) {
  std::ostringstream os;
  os << "SCHELLING v1\n";
  os << "h=" << g.half_side() << " w=" << g.horizon() << " tau="
     << tol.tilde_num() << "/" << tol.tilde_den() << " step=" << step << "\n";
  for (int y = 0; y < g.side(); ++y) {
    for (int x = 0; x < g.side(); ++x)
      os << (g.spin(y * g.side() + x) > 0 ? '+' : '-');
    os << '\n';
  }
  return os.str();
}

inline void write_snapshot(const SpinGrid& g, const Intolerance& tol,
                           std::uint64_t step, const std::string& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw IoError("cannot write snapshot: " + path);
  out << snapshot_text(g, tol, step);
  if (!out) throw IoError("short write on snapshot: " + path);
}

inline Snapshot read_snapshot_stream(std::istream& in,
                                     const std::string& where) {
  auto fail = [&](int line, const std::string& what) {
    throw IoError("snapshot " + where + ": line " + std::to_string(line) +
                  ": " + what);
  };
  std::string line;
  if (!std::getline(in, line)) fail(1, "missing header");
  if (line != "SCHELLING v1") fail(1, "bad magic or version: '" + line + "'");
  if (!std::getline(in, line)) fail(2, "missing parameter line");
  int h = 0, w = 0;
  long long num = 0, den = 1;
  std::uint64_t step = 0;
  if (std::sscanf(line.c_str(), "h=%d w=%d tau=%lld/%lld step=%" SCNu64, &h,
                  &w, &num, &den, &step) != 5)
    fail(2, "bad parameter line: '" + line + "'");
  std::vector<Spin> spins;
  spins.reserve(std::size_t(2 * h) * (2 * h));
  for (int y = 0; y < 2 * h; ++y) {
    if (!std::getline(in, line)) fail(3 + y, "truncated: missing row");
    if (static_cast<int>(line.size()) != 2 * h)
      fail(3 + y, "wrong row length " + std::to_string(line.size()) +
                      ", expected " + std::to_string(2 * h));
    for (char c : line) {
      if (c != '+' && c != '-') fail(3 + y, std::string("illegal character '") + c + "'");
      spins.push_back(c == '+' ? Spin(+1) : Spin(-1));
    }
  }
  return {SpinGrid::from_spins(h, w, spins), Intolerance::from_fraction(num, den, w),
          step};
}

inline Snapshot read_snapshot(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open snapshot: " + path);
  return read_snapshot_stream(in, path);
}

/// Checkpoints carry the snapshot plus scheduler state, so a resumed
/// discrete run continues bit-identically to an uninterrupted one (the
/// unstable set is rebuilt canonically from the grid; the uniform pick is
/// rank-based, so rebuild order does not matter). Continuous checkpoints
/// additionally serialize pending clocks as hex-exact doubles.
struct DiscreteCheckpoint {
  Snapshot snap;
  DiscreteScheduler::State state;
};

struct ContinuousCheckpoint {
  Snapshot snap;
  ContinuousScheduler::State state;
};

inline void write_checkpoint(const SpinGrid& g, const Intolerance& tol,
                             const DiscreteScheduler& sched,
                             const std::string& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw IoError("cannot write checkpoint: " + path);
  auto st = sched.save_state();
  out << "SCHELLING-CKPT v1 discrete\n";
  char buf[160];
  std::snprintf(buf, sizeof buf,
                "rng=%016" PRIX64 " events=%" PRIu64 " flips=%" PRIu64
                " nulls=%" PRIu64 "\n",
                st.rng_state, st.events, st.flips, st.nulls);
  out << buf;
  out << snapshot_text(g, tol, st.events);
  if (!out) throw IoError("short write on checkpoint: " + path);
}

inline void write_checkpoint(const SpinGrid& g, const Intolerance& tol,
                             const ContinuousScheduler& sched,
                             const std::string& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw IoError("cannot write checkpoint: " + path);
  auto st = sched.save_state();
  out << "SCHELLING-CKPT v1 continuous\n";
  char buf[200];
  std::snprintf(buf, sizeof buf,
                "rng=%016" PRIX64 " events=%" PRIu64 " flips=%" PRIu64
                " nulls=%" PRIu64 " time=%a clocks=%zu\n",
                st.rng_state, st.events, st.flips, st.nulls, st.time,
                st.clocks.size());
  out << buf;
  for (const auto& c : st.clocks) {
    std::snprintf(buf, sizeof buf, "clock %d %u %a\n", c.node, c.stamp, c.time);
    out << buf;
  }
  out << snapshot_text(g, tol, st.events);
  if (!out) throw IoError("short write on checkpoint: " + path);
}

inline std::string read_checkpoint_kind(std::istream& in,
                                        const std::string& where) {
  std::string line;
  if (!std::getline(in, line))
    throw IoError("checkpoint " + where + ": line 1: empty file");
  std::istringstream hdr(line);
  std::string magic, version, kind;
  hdr >> magic >> version >> kind;
  if (magic != "SCHELLING-CKPT")
    throw IoError("checkpoint " + where + ": line 1: bad magic");
  if (version != "v1")
    throw IoError("checkpoint " + where + ": unsupported version '" + version + "'");
  if (kind != "discrete" && kind != "continuous")
    throw IoError("checkpoint " + where + ": unknown scheduler kind '" + kind + "'");
  return kind;
}

inline DiscreteCheckpoint read_discrete_checkpoint(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open checkpoint: " + path);
  if (read_checkpoint_kind(in, path) != "discrete")
    throw IoError("checkpoint " + path + ": not a discrete checkpoint");
  std::string line;
  if (!std::getline(in, line)) throw IoError("checkpoint " + path + ": truncated");
  DiscreteScheduler::State st;
  if (std::sscanf(line.c_str(),
                  "rng=%" SCNx64 " events=%" SCNu64 " flips=%" SCNu64
                  " nulls=%" SCNu64,
                  &st.rng_state, &st.events, &st.flips, &st.nulls) != 4)
    throw IoError("checkpoint " + path + ": bad state line");
  return {read_snapshot_stream(in, path), st};
}

inline ContinuousCheckpoint read_continuous_checkpoint(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open checkpoint: " + path);
  if (read_checkpoint_kind(in, path) != "continuous")
    throw IoError("checkpoint " + path + ": not a continuous checkpoint");
  std::string line;
  if (!std::getline(in, line)) throw IoError("checkpoint " + path + ": truncated");
  ContinuousScheduler::State st;
  std::size_t nclocks = 0;
  if (std::sscanf(line.c_str(),
                  "rng=%" SCNx64 " events=%" SCNu64 " flips=%" SCNu64
                  " nulls=%" SCNu64 " time=%la clocks=%zu",
                  &st.rng_state, &st.events, &st.flips, &st.nulls, &st.time,
                  &nclocks) != 6)
    throw IoError("checkpoint " + path + ": bad state line");
  st.clocks.resize(nclocks);
  for (std::size_t i = 0; i < nclocks; ++i) {
    if (!std::getline(in, line))
      throw IoError("checkpoint " + path + ": truncated clock list");
    if (std::sscanf(line.c_str(), "clock %d %u %la", &st.clocks[i].node,
                    &st.clocks[i].stamp, &st.clocks[i].time) != 3)
      throw IoError("checkpoint " + path + ": bad clock entry " +
                    std::to_string(i));
  }
  return {read_snapshot_stream(in, path), st};
}

}  // namespace schelling
