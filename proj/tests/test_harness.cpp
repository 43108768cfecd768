#include <catch2/catch_amalgamated.hpp>

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <sstream>

#include "schelling/config.hpp"
#include "schelling/harness.hpp"
#include "schelling/rng.hpp"
#include "schelling/snapshot.hpp"

using namespace schelling;
namespace fs = std::filesystem;

namespace {

std::string slurp(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  REQUIRE(in);
  std::ostringstream os;
  os << in.rdbuf();
  return os.str();
}

struct TempDir {
  fs::path path;
  TempDir(const std::string& tag) {
    path = fs::temp_directory_path() / ("schelling_test_" + tag);
    fs::remove_all(path);
    fs::create_directories(path);
  }
  ~TempDir() { fs::remove_all(path); }
  std::string str() const { return path.string(); }
};

}  // namespace

TEST_CASE("splitmix64 matches the reference stream") {
  SplitMix64 r0(0);
  CHECK(r0.next_u64() == 0xE220A8397B1DCDAFull);
  CHECK(r0.next_u64() == 0x6E789E6AA1B965F4ull);
  CHECK(r0.next_u64() == 0x06C45D188009454Full);
  SplitMix64 r42(42);
  CHECK(r42.next_u64() == 0xBDD732262FEB6E95ull);
  CHECK(splitmix64_at(1) == 0x910A2DEC89025CC1ull);
  CHECK(derive_replica_seed(7, 1) == (7ull ^ 0x910A2DEC89025CC1ull));
}

TEST_CASE("config parsing, overrides, and rejection of unknown keys") {
  std::istringstream in(
      "# experiment\n"
      "mode = simulate\n"
      "h = 16\n"
      "w = 2\n"
      "tau_tilde = 9/20\n"
      "seed = 7   # trailing comment\n");
  ExperimentConfig cfg = parse_config_stream(in);
  CHECK(cfg.h == 16);
  CHECK(cfg.w == 2);
  CHECK(cfg.tau_tilde == "9/20");
  CHECK(cfg.seed == 7);
  cfg.validate();

  apply_override(cfg, "replicas=3");
  CHECK(cfg.replicas == 3);
  CHECK_THROWS_AS(apply_override(cfg, "no_such_key=1"), ConfigError);
  CHECK_THROWS_AS(apply_override(cfg, "h=abc"), ConfigError);
  CHECK_THROWS_AS(apply_override(cfg, "nonsense"), ConfigError);

  std::istringstream bad("h 16\n");
  CHECK_THROWS_AS(parse_config_stream(bad), ConfigError);
}

TEST_CASE("config validation names the offending constraint") {
  ExperimentConfig cfg;
  cfg.w = 8;  // torus too small for h=16? 2h=32 > 2(2w+1)=34 fails
  CHECK_THROWS_WITH(cfg.validate(), Catch::Matchers::ContainsSubstring("torus"));
  cfg = ExperimentConfig{};
  cfg.p_init = 1.5;
  CHECK_THROWS_WITH(cfg.validate(), Catch::Matchers::ContainsSubstring("p_init"));
  cfg = ExperimentConfig{};
  cfg.scheduler = "quantum";
  CHECK_THROWS_WITH(cfg.validate(), Catch::Matchers::ContainsSubstring("scheduler"));
  cfg = ExperimentConfig{};
  cfg.mode = "dance";
  CHECK_THROWS_WITH(cfg.validate(), Catch::Matchers::ContainsSubstring("mode"));
  cfg = ExperimentConfig{};
  cfg.tau_tilde = "3/2";
  CHECK_THROWS_WITH(cfg.validate(), Catch::Matchers::ContainsSubstring("tau_tilde"));
}

TEST_CASE("resume rejects a checkpoint with mismatched geometry") {
  TempDir dir("geo");
  SpinGrid g = SpinGrid::random(16, 1, 0.5, 4);
  Intolerance tol = Intolerance::parse("0.45", 1);
  DiscreteScheduler sched(g, tol, 5);
  for (int k = 0; k < 10; ++k) sched.step();
  std::string path = dir.str() + "/c.txt";
  write_checkpoint(g, tol, sched, path);

  ExperimentConfig cfg;
  cfg.mode = "simulate";
  cfg.h = 32;  // checkpoint was taken at h = 16
  cfg.w = 1;
  cfg.resume_from = path;
  cfg.output_dir = dir.str() + "/out";
  std::ostringstream log;
  CHECK_THROWS_WITH(run_config(cfg, log),
                    Catch::Matchers::ContainsSubstring("geometry"));
}

TEST_CASE("snapshot round trip is exact") {
  TempDir dir("snap");
  SpinGrid g = SpinGrid::random(8, 1, 0.5, 404);
  Intolerance tol = Intolerance::parse("0.45", 1);
  std::string path = dir.str() + "/s.txt";
  write_snapshot(g, tol, 123, path);
  Snapshot snap = read_snapshot(path);
  CHECK(snap.grid.spins() == g.spins());
  CHECK(snap.grid.counts() == g.counts());
  CHECK(snap.tol.threshold() == tol.threshold());
  CHECK(snap.tol.tilde_num() == 9);
  CHECK(snap.tol.tilde_den() == 20);
  CHECK(snap.step == 123);

  // Re-serialization reproduces the bytes.
  write_snapshot(snap.grid, snap.tol, snap.step, dir.str() + "/s2.txt");
  CHECK(slurp(path) == slurp(dir.str() + "/s2.txt"));
}

TEST_CASE("snapshot of a uniform grid is rows of plus signs") {
  SpinGrid g(4, 1, Spin(+1));
  std::string text = snapshot_text(g, Intolerance::parse("0.5", 1), 0);
  std::istringstream in(text);
  std::string line;
  std::getline(in, line);
  CHECK(line == "SCHELLING v1");
  std::getline(in, line);
  CHECK(line == "h=4 w=1 tau=1/2 step=0");
  int rows = 0;
  while (std::getline(in, line)) {
    CHECK(line == std::string(8, '+'));
    ++rows;
  }
  CHECK(rows == 8);
}

TEST_CASE("malformed snapshots fail with the offending line") {
  TempDir dir("badsnap");
  SpinGrid g = SpinGrid::random(4, 1, 0.5, 1);
  Intolerance tol = Intolerance::parse("0.45", 1);
  std::string good = snapshot_text(g, tol, 9);

  auto expect_failure = [&](const std::string& text, const std::string& what) {
    std::string path = dir.str() + "/bad.txt";
    std::ofstream(path, std::ios::binary) << text;
    CHECK_THROWS_WITH(read_snapshot(path), Catch::Matchers::ContainsSubstring(what));
  };
  expect_failure(good.substr(0, good.size() - 10), "line 10");  // truncated row
  expect_failure("SCHELLING v2\nh=4 w=1 tau=1/2 step=0\n", "bad magic");
  std::string illegal = good;
  illegal[illegal.find('\n', illegal.find("step")) + 3] = 'x';
  expect_failure(illegal, "illegal character");
  std::string shortrow = good;
  shortrow.erase(shortrow.find('\n', shortrow.find("step")) + 1, 2);
  expect_failure(shortrow, "wrong row length");
}

TEST_CASE("simulate mode is deterministic and byte-identical on rerun") {
  TempDir d1("sim1"), d2("sim2");
  ExperimentConfig cfg;
  cfg.mode = "simulate";
  cfg.h = 16;
  cfg.w = 1;
  cfg.tau_tilde = "0.45";
  cfg.seed = 1;
  cfg.snapshot_every = 200;
  cfg.max_events = 100000;
  std::ostringstream log;
  cfg.output_dir = d1.str();
  run_config(cfg, log);
  cfg.output_dir = d2.str();
  run_config(cfg, log);
  CHECK(slurp(d1.str() + "/metrics.csv") == slurp(d2.str() + "/metrics.csv"));
  CHECK(slurp(d1.str() + "/snapshot_r0.txt") == slurp(d2.str() + "/snapshot_r0.txt"));

  std::string metrics = slurp(d1.str() + "/metrics.csv");
  CHECK(metrics.rfind("replica,seed,step,flips,null_events,lyapunov,"
                      "unstable_count,mono_radius_origin,mono_size_origin,"
                      "steady\n", 0) == 0);
}

TEST_CASE("parallel replicas produce the same bytes as sequential") {
  TempDir seq("seq"), par("par");
  ExperimentConfig cfg;
  cfg.mode = "simulate";
  cfg.h = 16;
  cfg.w = 1;
  cfg.tau_tilde = "0.45";
  cfg.seed = 99;
  cfg.replicas = 8;
  cfg.max_events = 100000;
  std::ostringstream log;
  cfg.threads = 1;
  cfg.output_dir = seq.str();
  run_config(cfg, log);
  cfg.threads = 8;
  cfg.output_dir = par.str();
  run_config(cfg, log);
  CHECK(slurp(seq.str() + "/metrics.csv") == slurp(par.str() + "/metrics.csv"));
  for (int i = 0; i < 8; ++i)
    CHECK(slurp(seq.str() + "/snapshot_r" + std::to_string(i) + ".txt") ==
          slurp(par.str() + "/snapshot_r" + std::to_string(i) + ".txt"));
}

TEST_CASE("checkpoint and resume replay the discrete run bit-identically") {
  // Library-level: checkpoint mid-run, resume, and compare the full
  // remaining flip sequence against the uninterrupted run.
  SpinGrid g1 = SpinGrid::random(16, 1, 0.5, 5150);
  Intolerance tol = Intolerance::parse("0.45", 1);
  DiscreteScheduler s1(g1, tol, 777);
  for (int k = 0; k < 300; ++k) s1.step();

  TempDir dir("ckpt");
  std::string path = dir.str() + "/c.txt";
  write_checkpoint(g1, tol, s1, path);

  DiscreteCheckpoint ck = read_discrete_checkpoint(path);
  SpinGrid g2 = std::move(ck.snap.grid);
  DiscreteScheduler s2(g2, ck.snap.tol, ck.state);
  CHECK(ck.state.events == 300);

  for (int k = 0; k < 500; ++k) {
    StepResult a = s1.step();
    StepResult b = s2.step();
    REQUIRE(a.kind == b.kind);
    REQUIRE(a.node == b.node);
  }
  CHECK(g1.spins() == g2.spins());

  // checkpoint-resume-checkpoint idempotence
  std::string path2 = dir.str() + "/c2.txt";
  DiscreteCheckpoint ck2 = read_discrete_checkpoint(path);
  SpinGrid g3 = std::move(ck2.snap.grid);
  DiscreteScheduler s3(g3, ck2.snap.tol, ck2.state);
  write_checkpoint(g3, ck2.snap.tol, s3, path2);
  CHECK(slurp(path) == slurp(path2));
}

TEST_CASE("continuous checkpoints replay exactly too") {
  SpinGrid g1 = SpinGrid::random(12, 1, 0.5, 808);
  Intolerance tol = Intolerance::parse("0.45", 1);
  ContinuousScheduler s1(g1, tol, WaitingTimeDistribution::exponential(), 3);
  for (int k = 0; k < 100; ++k) s1.step();

  TempDir dir("cckpt");
  std::string path = dir.str() + "/c.txt";
  write_checkpoint(g1, tol, s1, path);
  ContinuousCheckpoint ck = read_continuous_checkpoint(path);
  SpinGrid g2 = std::move(ck.snap.grid);
  ContinuousScheduler s2(g2, ck.snap.tol, WaitingTimeDistribution::exponential(),
                         ck.state);
  for (int k = 0; k < 200; ++k) {
    StepResult a = s1.step();
    StepResult b = s2.step();
    REQUIRE(a.kind == b.kind);
    REQUIRE(a.node == b.node);
    REQUIRE(a.time == b.time);
    if (a.kind == StepResult::Kind::NoUnstable) break;
  }
  CHECK(g1.spins() == g2.spins());
}

TEST_CASE("harness-level resume matches the uninterrupted run") {
  TempDir full("full"), cut("cut"), res("res");
  ExperimentConfig cfg;
  cfg.mode = "simulate";
  cfg.h = 64;
  cfg.w = 1;
  cfg.tau_tilde = "0.45";
  cfg.seed = 11;
  cfg.max_events = 10000;
  std::ostringstream log;

  cfg.output_dir = full.str();
  run_config(cfg, log);

  cfg.output_dir = cut.str();
  cfg.checkpoint_at = 1000;
  run_config(cfg, log);

  ExperimentConfig rcfg = cfg;
  rcfg.checkpoint_at = 0;
  rcfg.resume_from = cut.str() + "/checkpoint_r0.txt";
  rcfg.output_dir = res.str();
  run_config(rcfg, log);

  CHECK(slurp(full.str() + "/snapshot_r0.txt") ==
        slurp(res.str() + "/snapshot_r0.txt"));
}

TEST_CASE("corrupted or mismatched checkpoints are rejected") {
  TempDir dir("badckpt");
  std::string path = dir.str() + "/c.txt";
  std::ofstream(path, std::ios::binary) << "SCHELLING-CKPT v2 discrete\n";
  CHECK_THROWS_WITH(read_discrete_checkpoint(path),
                    Catch::Matchers::ContainsSubstring("version"));
  std::ofstream(path, std::ios::binary) << "SCHELLING-CKPT v1 discrete\ngarbage\n";
  CHECK_THROWS_WITH(read_discrete_checkpoint(path),
                    Catch::Matchers::ContainsSubstring("state"));
  std::ofstream(path, std::ios::binary)
      << "SCHELLING-CKPT v1 continuous\n"
         "rng=0000000000000001 events=1 flips=1 nulls=0 time=0x1p+0 clocks=1\n";
  CHECK_THROWS_WITH(read_continuous_checkpoint(path),
                    Catch::Matchers::ContainsSubstring("truncated"));
}

TEST_CASE("bounds mode emits the exact CSV header and tau_star line") {
  TempDir dir("bounds");
  ExperimentConfig cfg;
  cfg.mode = "bounds";
  cfg.tau_min = 0.44;
  cfg.tau_max = 0.46;
  cfg.tau_step = 0.005;
  cfg.output_dir = dir.str();
  std::ostringstream log;
  run_config(cfg, log);
  std::string csv = slurp(dir.str() + "/bounds.csv");
  CHECK(csv.rfind("tau,H,g,a,b,log2rho_per_N,log2rhop_per_N,log2rhopp_per_N\n",
                  0) == 0);
  CHECK(log.str().find("tau_star") != std::string::npos);
  CHECK(log.str().find("0.4325") != std::string::npos);
}

TEST_CASE("fpp mode emits passage records with the spec header") {
  TempDir dir("fpp");
  ExperimentConfig cfg;
  cfg.mode = "fpp";
  cfg.w = 1;
  cfg.fpp_distances = "4,8";
  cfg.replicas = 3;
  cfg.output_dir = dir.str();
  std::ostringstream log;
  run_config(cfg, log);
  std::string csv = slurp(dir.str() + "/passages.csv");
  CHECK(csv.rfind("target_x,target_y,seed,passage_time\n", 0) == 0);
  int lines = 0;
  for (char c : csv) lines += c == '\n';
  CHECK(lines == 1 + 2 * 3);
}

TEST_CASE("percolation mode reports a decreasing origin-cluster tail") {
  TempDir dir("perc");
  ExperimentConfig cfg;
  cfg.mode = "percolation";
  cfg.perc_samples = 4000;
  cfg.perc_blocks = 11;
  cfg.perc_block_side = 5;
  cfg.perc_p_bad = 0.3;
  cfg.output_dir = dir.str();
  std::ostringstream log;
  run_config(cfg, log);
  std::string csv = slurp(dir.str() + "/cluster_tail.csv");
  CHECK(csv.rfind("k,hits,samples,phat\n", 0) == 0);
  std::istringstream in(csv);
  std::string line;
  std::getline(in, line);
  std::uint64_t prev = ~0ull;
  int rows = 0;
  while (std::getline(in, line)) {
    int k;
    std::uint64_t hits, samples;
    double phat;
    REQUIRE(std::sscanf(line.c_str(), "%d,%llu,%llu,%lf", &k,
                        (unsigned long long*)&hits,
                        (unsigned long long*)&samples, &phat) == 4);
    CHECK(hits <= prev);
    prev = hits;
    ++rows;
  }
  CHECK(rows == 5);
}
