#include <cstdint>
#include <iostream>

#include "CLI11.hpp"
#include "mtg/runner.hpp"

int main(int argc, char** argv) {
  CLI::App app{
      "Two-team multitime game toolkit: solve upper/lower value fields, "
      "verify them against independent checks, synthesize feedback sheets."};
  app.require_subcommand(1);

  mtg::RunOptions opt;
  auto add_common = [&](CLI::App* cmd) {
    cmd->add_option("--config", opt.config_path, "run configuration file")
        ->required();
    cmd->add_option("--out", opt.out_dir,
                    "output directory, overrides [output] dir");
    cmd->add_option("--threads", opt.threads, "worker threads")
        ->check(CLI::PositiveNumber);
    cmd->add_option_function<std::uint64_t>(
        "--seed", [&](std::uint64_t s) { opt.seed = s; },
        "override the [verify] seed");
    cmd->add_option("--refine", opt.refine,
                    "double all grid node counts this many times")
        ->check(CLI::NonNegativeNumber);
  };

  CLI::App* solve = app.add_subcommand(
      "solve", "solve the configured game and write value fields");
  add_common(solve);
  CLI::App* verify = app.add_subcommand(
      "verify", "solve and run the configured verification checks");
  add_common(verify);
  CLI::App* synthesize = app.add_subcommand(
      "synthesize", "solve, extract feedback controls, integrate a sheet");
  add_common(synthesize);
  CLI::App* catalog =
      app.add_subcommand("catalog", "list the built-in game instances");

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return mtg::kExitConfig;
  }

  if (solve->parsed()) return mtg::run_solve(opt, std::cout);
  if (verify->parsed()) return mtg::run_verify(opt, std::cout);
  if (synthesize->parsed()) return mtg::run_synthesize(opt, std::cout);
  if (catalog->parsed()) return mtg::run_catalog(std::cout);
  return mtg::kExitConfig;
}
