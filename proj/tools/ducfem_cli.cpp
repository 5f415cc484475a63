// Command-line driver for the snapshot, POD, validation and optimization steps.
#include <iostream>
#include <string>

#include "CLI11.hpp"
#include "ducfem/errors.hpp"
#include "ducfem/pipeline.hpp"

int main(int argc, char** argv) {
  CLI::App app{"Acoustic liner impedance optimization with reduced-order models"};
  app.require_subcommand(1);

  std::string config_path;
  int workers = 1;
  std::string out_dir;
  app.add_option("--config", config_path, "INI run configuration")
      ->required()
      ->check(CLI::ExistingFile);
  app.add_option("--workers", workers, "worker threads")->check(CLI::PositiveNumber);
  app.add_option("--out", out_dir, "output directory (overrides [output] dir)");

  auto* snapshots = app.add_subcommand("generate-snapshots", "solve the snapshot grid");
  auto* pod = app.add_subcommand("build-pod", "extract the POD basis and reduced operators");
  auto* validate = app.add_subcommand("validate", "reduced-model error over random draws");
  auto* optimize = app.add_subcommand("optimize", "smoothed-CVaR impedance optimization");
  auto* compare = app.add_subcommand("compare-fom-rom", "deterministic full vs reduced optimum");

  CLI11_PARSE(app, argc, argv);

  try {
    ducfem::CommandContext ctx;
    ctx.cfg = ducfem::load_config(config_path);
    ctx.workers = workers;
    ctx.out = out_dir;
    ctx.log = &std::cerr;

    if (*snapshots) ducfem::cmd_generate_snapshots(ctx);
    if (*pod) ducfem::cmd_build_pod(ctx);
    if (*validate) ducfem::cmd_validate(ctx);
    if (*optimize) ducfem::cmd_optimize(ctx);
    if (*compare) ducfem::cmd_compare_fom_rom(ctx);
  } catch (const ducfem::ConfigError& e) {
    std::cerr << "config error: " << e.what() << "\n";
    return 2;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
  return 0;
}
