#pragma once

#include <algorithm>
#include <atomic>
#include <cinttypes>
#include <cstdint>
#include <cstdio>
#include <exception>
#include <filesystem>
#include <fstream>
#include <mutex>
#include <sstream>
#include <string>
#include <thread>
#include <vector>

#include "schelling/bounds.hpp"
#include "schelling/config.hpp"
#include "schelling/dynamics.hpp"
#include "schelling/fpp.hpp"
#include "schelling/grid.hpp"
#include "schelling/regions.hpp"
#include "schelling/rng.hpp"
#include "schelling/snapshot.hpp"

namespace schelling {

struct MetricsRow {
  int replica = 0;
  std::uint64_t seed = 0;
  std::uint64_t step = 0;
  std::uint64_t flips = 0;
  std::uint64_t null_events = 0;
  long long lyapunov = 0;
  int unstable_count = 0;
  int mono_radius_origin = 0;
  long long mono_size_origin = 1;
  bool steady = false;
};

inline const char* kMetricsHeader =
    "replica,seed,step,flips,null_events,lyapunov,unstable_count,"
    "mono_radius_origin,mono_size_origin,steady";

inline std::string metrics_row_text(const MetricsRow& r) {
  char buf[256];
  std::snprintf(buf, sizeof buf,
                "%d,%" PRIu64 ",%" PRIu64 ",%" PRIu64 ",%" PRIu64
                ",%lld,%d,%d,%lld,%d",
                r.replica, r.seed, r.step, r.flips, r.null_events, r.lyapunov,
                r.unstable_count, r.mono_radius_origin, r.mono_size_origin,
                r.steady ? 1 : 0);
  return buf;
}

namespace detail {

template <typename Fn>
void parallel_for(int n, int threads, Fn&& fn) {
  if (threads == 0) threads = static_cast<int>(std::thread::hardware_concurrency());
  if (threads < 1) threads = 1;
  if (threads > n) threads = n;
  if (threads <= 1) {
    for (int i = 0; i < n; ++i) fn(i);
    return;
  }
  std::atomic<int> next{0};
  std::exception_ptr error;
  std::mutex error_mu;
  std::vector<std::thread> pool;
  pool.reserve(threads);
  for (int t = 0; t < threads; ++t)
    pool.emplace_back([&] {
      for (int i; (i = next.fetch_add(1)) < n;) {
        try {
          fn(i);
        } catch (...) {
          std::lock_guard<std::mutex> lk(error_mu);
          if (!error) error = std::current_exception();
        }
      }
    });
  for (auto& th : pool) th.join();
  if (error) std::rethrow_exception(error);
}

inline int count_unstable(const SpinGrid& g, const Intolerance& tol) {
  int c = 0;
  for (int i = 0; i < g.node_count(); ++i) c += is_unstable(g, i, tol);
  return c;
}

inline std::vector<int> parse_int_list(const std::string& text,
                                       const std::string& what) {
  std::vector<int> out;
  std::stringstream ss(text);
  std::string item;
  while (std::getline(ss, item, ',')) {
    item = trim(item);
    if (item.empty()) continue;
    out.push_back(parse_num<int>(what, item));
  }
  if (out.empty()) throw ConfigError("config: empty list for " + what);
  return out;
}

inline void write_text_file(const std::string& path, const std::string& body) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw IoError("cannot write: " + path);
  out << body;
  if (!out) throw IoError("short write: " + path);
}

}  // namespace detail

/// One simulate replica: grid stream seeded with the derived replica seed,
/// scheduler stream with splitmix64 of it.
struct ReplicaResult {
  std::vector<MetricsRow> rows;
  std::string final_snapshot;
};

template <typename Scheduler>
ReplicaResult run_replica_loop(SpinGrid& grid, const Intolerance& tol,
                               Scheduler& sched, const ExperimentConfig& cfg,
                               int replica, std::uint64_t seed) {
  ReplicaResult res;
  Node origin{0, 0};
  auto make_row = [&] {
    MetricsRow row;
    row.replica = replica;
    row.seed = seed;
    row.step = sched.events();
    row.flips = sched.flips();
    row.null_events = sched.nulls();
    row.lyapunov = lyapunov(grid);
    row.unstable_count = detail::count_unstable(grid, tol);
    MonoRegion mono = monochromatic_region(grid, origin);
    row.mono_radius_origin = mono.radius;
    row.mono_size_origin = mono.size;
    row.steady = sched.is_steady();
    return row;
  };
  std::uint64_t next_row =
      cfg.snapshot_every > 0 ? (sched.events() / cfg.snapshot_every) * cfg.snapshot_every
                             : 0;
  while (true) {
    if (cfg.snapshot_every > 0 && sched.events() == next_row) {
      res.rows.push_back(make_row());
      next_row += cfg.snapshot_every;
    }
    if (cfg.checkpoint_at > 0 && sched.events() == cfg.checkpoint_at) {
      std::string path = cfg.output_dir + "/checkpoint_r" +
                         std::to_string(replica) + ".txt";
      write_checkpoint(grid, tol, sched, path);
    }
    if (sched.is_steady() || sched.events() >= cfg.max_events) break;
    sched.step();
  }
  if (res.rows.empty() || res.rows.back().step != sched.events())
    res.rows.push_back(make_row());
  res.final_snapshot = snapshot_text(grid, tol, sched.events());
  return res;
}

inline ReplicaResult run_simulate_replica(const ExperimentConfig& cfg,
                                          int replica) {
  std::uint64_t seed = derive_replica_seed(cfg.seed, replica);
  std::uint64_t sched_seed = splitmix64_at(seed);
  if (!cfg.resume_from.empty()) {
    std::string kind;
    {
      std::ifstream probe(cfg.resume_from, std::ios::binary);
      if (!probe) throw IoError("cannot open checkpoint: " + cfg.resume_from);
      kind = read_checkpoint_kind(probe, cfg.resume_from);
    }
    if (kind != cfg.scheduler)
      throw ConfigError("checkpoint scheduler kind '" + kind +
                        "' does not match config scheduler '" + cfg.scheduler + "'");
    auto check_geometry = [&](const Snapshot& snap) {
      if (snap.grid.half_side() != cfg.h || snap.grid.horizon() != cfg.w)
        throw ConfigError("checkpoint geometry (h=" +
                          std::to_string(snap.grid.half_side()) + ", w=" +
                          std::to_string(snap.grid.horizon()) +
                          ") does not match the config");
    };
    if (cfg.scheduler == "discrete") {
      DiscreteCheckpoint ck = read_discrete_checkpoint(cfg.resume_from);
      check_geometry(ck.snap);
      SpinGrid grid = std::move(ck.snap.grid);
      DiscreteScheduler sched(grid, ck.snap.tol, ck.state);
      return run_replica_loop(grid, ck.snap.tol, sched, cfg, replica, seed);
    }
    ContinuousCheckpoint ck = read_continuous_checkpoint(cfg.resume_from);
    check_geometry(ck.snap);
    SpinGrid grid = std::move(ck.snap.grid);
    ContinuousScheduler sched(grid, ck.snap.tol,
                              WaitingTimeDistribution::exponential(), ck.state);
    return run_replica_loop(grid, ck.snap.tol, sched, cfg, replica, seed);
  }
  SpinGrid grid = SpinGrid::random(cfg.h, cfg.w, cfg.p_init, seed);
  Intolerance tol = Intolerance::parse(cfg.tau_tilde, cfg.w);
  if (cfg.scheduler == "discrete") {
    DiscreteScheduler sched(grid, tol, sched_seed);
    return run_replica_loop(grid, tol, sched, cfg, replica, seed);
  }
  ContinuousScheduler sched(grid, tol, WaitingTimeDistribution::exponential(),
                            sched_seed);
  return run_replica_loop(grid, tol, sched, cfg, replica, seed);
}

inline void run_simulate(const ExperimentConfig& cfg) {
  std::vector<ReplicaResult> results(cfg.replicas);
  detail::parallel_for(cfg.replicas, cfg.threads, [&](int i) {
    results[i] = run_simulate_replica(cfg, i);
  });
  std::ostringstream metrics;
  metrics << kMetricsHeader << "\n";
  for (const auto& r : results)
    for (const auto& row : r.rows) metrics << metrics_row_text(row) << "\n";
  detail::write_text_file(cfg.output_dir + "/metrics.csv", metrics.str());
  for (int i = 0; i < cfg.replicas; ++i)
    detail::write_text_file(
        cfg.output_dir + "/snapshot_r" + std::to_string(i) + ".txt",
        results[i].final_snapshot);
}

inline void run_sweep(const ExperimentConfig& cfg) {
  std::vector<int> ws = detail::parse_int_list(cfg.w_list, "w_list");
  for (int w : ws)
    if (2 * cfg.h <= 2 * (2 * w + 1))
      throw ConfigError("config: torus too small for w_list entry " +
                        std::to_string(w));
  const int jobs = static_cast<int>(ws.size()) * cfg.replicas;
  std::vector<MetricsRow> rows(jobs);
  std::vector<int> job_w(jobs);
  detail::parallel_for(jobs, cfg.threads, [&](int j) {
    int w = ws[j / cfg.replicas];
    int replica = j % cfg.replicas;
    std::uint64_t seed = derive_replica_seed(cfg.seed, j);
    SpinGrid grid = SpinGrid::random(cfg.h, w, cfg.p_init, seed);
    Intolerance tol = Intolerance::parse(cfg.tau_tilde, w);
    DiscreteScheduler sched(grid, tol, splitmix64_at(seed));
    run_to_steady_state(sched, grid, cfg.max_events);
    MetricsRow row;
    row.replica = replica;
    row.seed = seed;
    row.step = sched.events();
    row.flips = sched.flips();
    row.null_events = sched.nulls();
    row.lyapunov = lyapunov(grid);
    row.unstable_count = detail::count_unstable(grid, tol);
    MonoRegion mono = monochromatic_region(grid, {0, 0});
    row.mono_radius_origin = mono.radius;
    row.mono_size_origin = mono.size;
    row.steady = sched.is_steady();
    rows[j] = row;
    job_w[j] = w;
  });
  std::ostringstream os;
  os << "w," << kMetricsHeader << "\n";
  for (int j = 0; j < jobs; ++j)
    os << job_w[j] << "," << metrics_row_text(rows[j]) << "\n";
  detail::write_text_file(cfg.output_dir + "/sweep.csv", os.str());
}

inline void run_bounds(const ExperimentConfig& cfg, std::ostream& log) {
  std::vector<double> taus;
  for (double t = cfg.tau_min; t <= cfg.tau_max + 1e-12; t += cfg.tau_step) {
    if (std::abs(t - 0.5) < 1e-12) continue;
    taus.push_back(t);
  }
  std::vector<CurveRow> rows;
  try {
    rows = make_curve_rows(taus, cfg.epsilon, cfg.curve_N, cfg.epsilon_prime);
  } catch (const std::exception& e) {
    throw ConfigError(std::string("bounds grid: ") + e.what());
  }
  std::ofstream out(cfg.output_dir + "/bounds.csv", std::ios::binary);
  if (!out) throw IoError("cannot write: " + cfg.output_dir + "/bounds.csv");
  emit_curves(rows, out);
  if (!out) throw IoError("short write: " + cfg.output_dir + "/bounds.csv");
  double ts = tau_star(1e-9);
  char buf[160];
  std::snprintf(buf, sizeof buf,
                "tau_star(eps->0) = %.6f  mirror = %.6f  rows = %zu\n", ts,
                1.0 - ts, rows.size());
  log << buf;
}

inline void run_fpp(const ExperimentConfig& cfg) {
  std::vector<int> dists = detail::parse_int_list(cfg.fpp_distances, "fpp_distances");
  std::vector<fpp::Cell> targets;
  targets.reserve(dists.size());
  for (int d : dists) targets.push_back({d, 0});
  auto dist = WaitingTimeDistribution::exponential();
  std::vector<std::vector<fpp::PassageRecord>> recs(cfg.replicas);
  detail::parallel_for(cfg.replicas, cfg.threads, [&](int i) {
    std::uint64_t seed = derive_replica_seed(cfg.seed, i);
    recs[i] = fpp::simulate_growth(cfg.w, targets, dist, seed);
  });
  std::ostringstream os;
  os << "target_x,target_y,seed,passage_time\n";
  char buf[128];
  for (const auto& rset : recs)
    for (const auto& r : rset) {
      std::snprintf(buf, sizeof buf, "%d,%d,%" PRIu64 ",%.17g\n", r.target.x,
                    r.target.y, r.seed, r.passage_time);
      os << buf;
    }
  detail::write_text_file(cfg.output_dir + "/passages.csv", os.str());
  if (cfg.fpp_budget > 0.0) {
    auto ball = fpp::empirical_ball(cfg.w, cfg.fpp_budget, dist,
                                    derive_replica_seed(cfg.seed, 0));
    std::sort(ball.begin(), ball.end(), [](const fpp::Cell& a, const fpp::Cell& b) {
      return a.y != b.y ? a.y < b.y : a.x < b.x;
    });
    std::ostringstream bs;
    bs << "x,y\n";
    for (const auto& c : ball) bs << c.x << "," << c.y << "\n";
    detail::write_text_file(cfg.output_dir + "/ball.csv", bs.str());
  }
}

/// Origin-anchored bad-cluster tail over synthetic renormalized fields:
/// every block is bad independently with probability p, and hits[k] counts
/// fields whose origin cluster reaches block distance k.
inline std::vector<std::uint64_t> bad_cluster_tail(int blocks_per_side,
                                                   int block_side, double p,
                                                   std::uint64_t samples,
                                                   std::uint64_t seed,
                                                   int k_max) {
  std::vector<std::uint64_t> hits(k_max + 1, 0);
  SplitMix64 rng(seed);
  BlockMap map(blocks_per_side * block_side, block_side);
  BlockId origin{blocks_per_side / 2, blocks_per_side / 2};
  for (std::uint64_t s = 0; s < samples; ++s) {
    for (int i = 0; i < map.block_count(); ++i)
      map.set_bad(i, rng.next_bernoulli(p));
    int reach = cluster_reach_from(map, origin);
    if (reach < 0) continue;
    for (int k = 0; k <= k_max && k <= reach; ++k) ++hits[k];
  }
  return hits;
}

inline void run_percolation(const ExperimentConfig& cfg) {
  const int k_max = 4;
  auto hits = bad_cluster_tail(cfg.perc_blocks, cfg.perc_block_side,
                               cfg.perc_p_bad, cfg.perc_samples, cfg.seed,
                               k_max);
  std::ostringstream os;
  os << "k,hits,samples,phat\n";
  char buf[128];
  for (int k = 0; k <= k_max; ++k) {
    std::snprintf(buf, sizeof buf, "%d,%" PRIu64 ",%" PRIu64 ",%.12g\n", k,
                  hits[k], cfg.perc_samples,
                  double(hits[k]) / double(cfg.perc_samples));
    os << buf;
  }
  detail::write_text_file(cfg.output_dir + "/cluster_tail.csv", os.str());
}

/// Executes the configured mode; artifacts land in cfg.output_dir.
inline void run_config(const ExperimentConfig& cfg, std::ostream& log) {
  cfg.validate();
  std::error_code ec;
  std::filesystem::create_directories(cfg.output_dir, ec);
  if (ec) throw IoError("cannot create output dir: " + cfg.output_dir);
  if (cfg.mode == "simulate") run_simulate(cfg);
  else if (cfg.mode == "sweep") run_sweep(cfg);
  else if (cfg.mode == "bounds") run_bounds(cfg, log);
  else if (cfg.mode == "fpp") run_fpp(cfg);
  else if (cfg.mode == "percolation") run_percolation(cfg);
  else throw ConfigError("config: unknown mode '" + cfg.mode + "'");
}

}  // namespace schelling
