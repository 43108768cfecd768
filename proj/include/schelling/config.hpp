#pragma once

#include <cstdint>
#include <fstream>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

#include "schelling/grid.hpp"

namespace schelling {

struct ConfigError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

struct IoError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

/// Flat key=value experiment description ('#' starts a comment). Unknown
/// keys are rejected; every numeric range is validated before a run starts.
struct ExperimentConfig {
  std::string mode = "simulate";  // simulate | sweep | bounds | fpp | percolation
  int h = 16;
  int w = 1;
  std::string tau_tilde = "0.45";  // "num/den" or decimal, parsed exactly
  double p_init = 0.5;
  std::string scheduler = "discrete";  // discrete | continuous
  std::uint64_t seed = 1;
  int replicas = 1;
  std::uint64_t max_events = 1'000'000'000ull;
  double epsilon = 0.01;
  double epsilon_prime = -1.0;  // < 0 means g(tau) + 1e-6
  std::uint64_t snapshot_every = 0;  // 0 = final metrics row only
  std::string output_dir = ".";
  int threads = 1;  // 0 = hardware concurrency
  std::uint64_t checkpoint_at = 0;  // 0 = off (simulate, replica 0)
  std::string resume_from;          // checkpoint path (simulate)

  // sweep
  std::string w_list = "1,2,3,4";

  // bounds
  double tau_min = 0.434;
  double tau_max = 0.566;
  double tau_step = 0.001;
  double curve_N = 10000.0;

  // fpp
  std::string fpp_distances = "10,20,30,40,50,60,70,80";
  double fpp_budget = 0.0;  // > 0 adds an empirical-ball snapshot

  // percolation
  int perc_blocks = 15;
  int perc_block_side = 9;
  std::uint64_t perc_samples = 50000;
  double perc_p_bad = 0.3;

  void set(const std::string& key, const std::string& value);
  void validate() const;
};

namespace detail {

inline std::string trim(const std::string& s) {
  auto b = s.find_first_not_of(" \t\r\n");
  if (b == std::string::npos) return "";
  auto e = s.find_last_not_of(" \t\r\n");
  return s.substr(b, e - b + 1);
}

template <typename T>
T parse_num(const std::string& key, const std::string& v) {
  std::istringstream in(v);
  T out;
  in >> out;
  if (in.fail() || !in.eof())
    throw ConfigError("config: bad value for '" + key + "': " + v);
  return out;
}

}  // namespace detail

inline void ExperimentConfig::set(const std::string& key,
                                  const std::string& value) {
  using detail::parse_num;
  if (key == "mode") mode = value;
  else if (key == "h") h = parse_num<int>(key, value);
  else if (key == "w") w = parse_num<int>(key, value);
  else if (key == "tau_tilde") tau_tilde = value;
  else if (key == "p_init") p_init = parse_num<double>(key, value);
  else if (key == "scheduler") scheduler = value;
  else if (key == "seed") seed = parse_num<std::uint64_t>(key, value);
  else if (key == "replicas") replicas = parse_num<int>(key, value);
  else if (key == "max_events") max_events = parse_num<std::uint64_t>(key, value);
  else if (key == "epsilon") epsilon = parse_num<double>(key, value);
  else if (key == "epsilon_prime") epsilon_prime = parse_num<double>(key, value);
  else if (key == "snapshot_every") snapshot_every = parse_num<std::uint64_t>(key, value);
  else if (key == "output_dir") output_dir = value;
  else if (key == "threads") threads = parse_num<int>(key, value);
  else if (key == "checkpoint_at") checkpoint_at = parse_num<std::uint64_t>(key, value);
  else if (key == "resume_from") resume_from = value;
  else if (key == "w_list") w_list = value;
  else if (key == "tau_min") tau_min = parse_num<double>(key, value);
  else if (key == "tau_max") tau_max = parse_num<double>(key, value);
  else if (key == "tau_step") tau_step = parse_num<double>(key, value);
  else if (key == "curve_N") curve_N = parse_num<double>(key, value);
  else if (key == "fpp_distances") fpp_distances = value;
  else if (key == "fpp_budget") fpp_budget = parse_num<double>(key, value);
  else if (key == "perc_blocks") perc_blocks = parse_num<int>(key, value);
  else if (key == "perc_block_side") perc_block_side = parse_num<int>(key, value);
  else if (key == "perc_samples") perc_samples = parse_num<std::uint64_t>(key, value);
  else if (key == "perc_p_bad") perc_p_bad = parse_num<double>(key, value);
  else throw ConfigError("config: unknown key '" + key + "'");
}

inline void ExperimentConfig::validate() const {
  auto fail = [](const std::string& m) { throw ConfigError("config: " + m); };
  if (mode != "simulate" && mode != "sweep" && mode != "bounds" &&
      mode != "fpp" && mode != "percolation")
    fail("unknown mode '" + mode + "'");
  if (h <= 0 || w <= 0) fail("h and w must be positive");
  if (2 * h <= 2 * (2 * w + 1)) fail("torus too small: need 2h > 2(2w+1)");
  if (mode == "simulate" || mode == "sweep") {
    try {
      (void)Intolerance::parse(tau_tilde, w);
    } catch (const std::exception& e) {
      fail("bad value for 'tau_tilde': " + std::string(e.what()));
    }
  }
  if (p_init < 0.0 || p_init > 1.0) fail("p_init must lie in [0,1]");
  if (scheduler != "discrete" && scheduler != "continuous")
    fail("unknown scheduler '" + scheduler + "'");
  if (replicas <= 0) fail("replicas must be positive");
  if (threads < 0) fail("threads must be >= 0");
  if (mode == "bounds") {
    if (!(tau_step > 0)) fail("tau_step must be positive");
    if (!(tau_min <= tau_max)) fail("tau_min must not exceed tau_max");
    if (!(curve_N > 0)) fail("curve_N must be positive");
  }
  if (mode == "percolation") {
    if (perc_blocks < 3) fail("perc_blocks must be at least 3");
    if (perc_block_side <= 0) fail("perc_block_side must be positive");
    if (perc_samples == 0) fail("perc_samples must be positive");
    if (perc_p_bad < 0.0 || perc_p_bad > 1.0) fail("perc_p_bad must lie in [0,1]");
  }
  if (!resume_from.empty() && replicas != 1)
    fail("resume_from requires replicas=1");
}

inline ExperimentConfig parse_config_stream(std::istream& in) {
  ExperimentConfig cfg;
  std::string line;
  int lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    auto hash = line.find('#');
    if (hash != std::string::npos) line = line.substr(0, hash);
    line = detail::trim(line);
    if (line.empty()) continue;
    auto eq = line.find('=');
    if (eq == std::string::npos)
      throw ConfigError("config: line " + std::to_string(lineno) +
                        " is not key=value");
    cfg.set(detail::trim(line.substr(0, eq)), detail::trim(line.substr(eq + 1)));
  }
  return cfg;
}

inline ExperimentConfig parse_config_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open config file: " + path);
  return parse_config_stream(in);
}

inline void apply_override(ExperimentConfig& cfg, const std::string& kv) {
  auto eq = kv.find('=');
  if (eq == std::string::npos)
    throw ConfigError("override must be key=value: " + kv);
  cfg.set(detail::trim(kv.substr(0, eq)), detail::trim(kv.substr(eq + 1)));
}

}  // namespace schelling
