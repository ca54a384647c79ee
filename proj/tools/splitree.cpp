#include <iostream>
#include <string>

#include <CLI11.hpp>

#include "splitree/cli.hpp"

int main(int argc, char** argv) {
  namespace cli = splitree::cli;
  CLI::App app{"Random splitting trees, their contours and verification"};
  app.require_subcommand(1);

  std::string config;
  cli::Overrides overrides;
  std::uint64_t seed = 0;
  std::size_t replicates = 0, workers = 0;
  std::string out;
  for (const auto& name : cli::command_names()) {
    auto* sub = app.add_subcommand(name);
    sub->add_option("--config", config, "JSON config file")->required();
    sub->add_option("--seed", seed, "master seed");
    sub->add_option("--replicates", replicates, "number of replicates");
    sub->add_option("--out", out, "output directory");
    sub->add_option("--workers", workers, "worker threads")->check(CLI::PositiveNumber);
  }

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    if (e.get_exit_code() == 0) return app.exit(e);
    std::cerr << "config error: " << e.what() << '\n';
    return cli::kConfigError;
  }

  const auto* sub = app.get_subcommands().front();
  if (sub->count("--seed")) overrides.seed = seed;
  if (sub->count("--replicates")) overrides.replicates = replicates;
  if (sub->count("--out")) overrides.out = out;
  if (sub->count("--workers")) overrides.workers = workers;
  return cli::run(sub->get_name(), config, overrides, std::cout, std::cerr);
}
