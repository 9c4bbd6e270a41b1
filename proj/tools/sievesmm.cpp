#include <CLI11.hpp>

#include "sievesmm/app.hpp"

int main(int argc, char** argv) {
  CLI::App cli{"Sieve simulated method of moments"};
  cli.require_subcommand(1);
  sievesmm::RunOptions opt;
  std::uint64_t seed = 0;
  for (const char* name : {"estimate", "montecarlo", "bootstrap", "counterfactual", "simulate"}) {
    auto* sub = cli.add_subcommand(name);
    sub->add_option("--config", opt.config_path, "TOML or JSON configuration")->required()->check(CLI::ExistingFile);
    sub->add_option("--out", opt.out_dir, "output directory")->capture_default_str();
    sub->add_option("--threads", opt.threads, "worker threads (0: all cores)")->capture_default_str();
    sub->add_option("--seed", seed, "override the command's master seed");
  }
  CLI11_PARSE(cli, argc, argv);
  const auto* sub = cli.get_subcommands().front();
  opt.command = sievesmm::command_from_string(sub->get_name());
  if (sub->count("--seed") > 0) opt.seed = seed;
  return sievesmm::run(opt);
}
