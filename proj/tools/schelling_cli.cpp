// Command-line front end: schelling <mode> --config <path> [--seed N]
// [--output-dir P] [--replicas N] [--override key=value]...
//
// Exit codes: 0 success, 2 configuration error, 3 I/O error.

#include <cstdint>
#include <iostream>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "schelling/config.hpp"
#include "schelling/harness.hpp"

int main(int argc, char** argv) {
  CLI::App app{"Schelling-type spin system simulator and analysis toolkit"};
  app.require_subcommand(1);

  std::string config_path;
  std::string output_dir;
  std::uint64_t seed = 0;
  bool seed_set = false;
  int replicas = 0;
  std::vector<std::string> overrides;

  const char* modes[] = {"simulate", "sweep", "bounds", "fpp", "percolation"};
  for (const char* mode : modes) {
    auto* sub = app.add_subcommand(mode);
    sub->add_option("--config", config_path, "experiment config file")
        ->required();
    sub->add_option("--seed", seed, "override base seed")
        ->each([&](const std::string&) { seed_set = true; });
    sub->add_option("--output-dir", output_dir, "override output directory");
    sub->add_option("--replicas", replicas, "override replica count");
    sub->add_option("--override", overrides, "key=value config override")
        ->take_all();
  }

  CLI11_PARSE(app, argc, argv);

  try {
    schelling::ExperimentConfig cfg =
        schelling::parse_config_file(config_path);
    cfg.mode = app.get_subcommands().front()->get_name();
    if (seed_set) cfg.seed = seed;
    if (!output_dir.empty()) cfg.output_dir = output_dir;
    if (replicas > 0) cfg.replicas = replicas;
    for (const auto& kv : overrides) schelling::apply_override(cfg, kv);
    schelling::run_config(cfg, std::cout);
  } catch (const schelling::ConfigError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 2;
  } catch (const schelling::IoError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 3;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 2;
  }
  return 0;
}
