// Command-line driver: one subcommand per pipeline stage, plus "all" for every stage after synth.
#include <exception>
#include <iostream>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "bubble/io.hpp"
#include "bubble/pipeline.hpp"

int main(int argc, char** argv) {
  CLI::App app{"bubbles: citation diffusion and subfield collapse pipeline"};
  std::string stage_name;
  std::string config_path;
  std::string tier;
  std::string workdir;
  std::uint64_t seed = 0;
  bool deterministic = false;
  std::vector<std::string> overrides;

  app.add_option("stage", stage_name,
                 "synth, ingest, train, subfields, diffusion, detect, panel, fit, survival, posthoc, report or all")
      ->required();
  app.add_option("--config", config_path, "flat key = value run configuration");
  auto* tier_opt = app.add_option("--tier", tier, "cutoff tier: 0.5, 0.25 or 0.1");
  auto* seed_opt = app.add_option("--seed", seed, "random seed for synthesis and training");
  auto* wd_opt = app.add_option("--workdir", workdir, "directory for all artifacts");
  app.add_flag("--deterministic", deterministic, "single-worker training for bit-reproducible output");
  app.add_option("--set", overrides, "extra config override, key=value (repeatable)");
  CLI11_PARSE(app, argc, argv);

  try {
    bubble::RunConfig cfg = config_path.empty() ? bubble::RunConfig{} : bubble::load_run_config(config_path);
    for (const auto& kv : overrides) {
      const auto eq = kv.find('=');
      if (eq == std::string::npos) throw bubble::InputError("--set expects key=value, got '" + kv + "'");
      bubble::set_config_value(cfg, kv.substr(0, eq), kv.substr(eq + 1));
    }
    if (*tier_opt) cfg.tier = bubble::tier_from_string(tier);
    if (*seed_opt) cfg.rng_seed = seed;
    if (*wd_opt) cfg.workdir = workdir;
    if (deterministic) cfg.deterministic = true;

    std::vector<bubble::Stage> stages;
    if (stage_name == "all") stages = bubble::analysis_stages();
    else stages.push_back(bubble::stage_from_string(stage_name));
    for (auto s : stages) {
      std::cerr << "[bubbles] " << bubble::to_string(s) << "\n";
      bubble::run_stage(s, cfg);
    }
  } catch (const bubble::InputError& e) {
    std::cerr << "input error: " << e.what() << "\n";
    return 1;
  } catch (const bubble::NumericalError& e) {
    std::cerr << "numerical error: " << e.what() << "\n";
    return 2;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
  return 0;
}
