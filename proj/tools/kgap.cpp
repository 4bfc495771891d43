#include "kgap/runner.hpp"

#include <CLI11.hpp>

#include <iostream>

int main(int argc, char** argv) {
  CLI::App app{"kgap: spectral-gap and decay experiments for linearized kinetic operators"};
  app.require_subcommand(1);
  app.set_version_flag("--version", "0.1.0");

  kgap::RunOptions opts;
  std::string out;
  std::uint64_t seed = 0;
  int threads = 0;
  for (const auto& name : kgap::subcommands()) {
    auto* sub = app.add_subcommand(name);
    auto* cfg = sub->add_option("--config", opts.config, "INI config file")->check(CLI::ExistingFile);
    if (name != "selftest") cfg->required();
    sub->add_option("--out", out, "output directory (overrides run.out_dir)");
    sub->add_option("--seed", seed, "rng seed (overrides run.seed)");
    sub->add_option("--threads", threads, "OpenMP threads; 1 gives bit-identical reruns")
        ->check(CLI::PositiveNumber);
    sub->add_flag("--no-cache", opts.no_cache, "rebuild collision operators instead of reading cache/");
  }
  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int rc = app.exit(e);
    return rc == 0 ? 0 : kgap::kExitConfig;
  }
  auto* sub = app.get_subcommands().front();
  if (sub->count("--out")) opts.out_dir = out;
  if (sub->count("--seed")) opts.seed = seed;
  if (sub->count("--threads")) opts.threads = threads;
  return kgap::run_subcommand(sub->get_name(), opts, std::cout);
}
