#include <cstdint>
#include <filesystem>
#include <functional>
#include <optional>
#include <string>

#include <CLI11.hpp>
#include <fmt/format.h>

#include "pvgrid/pipeline.hpp"
#include "pvgrid/table.hpp"

namespace fs = std::filesystem;
using namespace pvgrid;

namespace {

int guarded(const std::function<int()> &body) {
  try {
    return body();
  } catch (const InputError &e) {
    fmt::print(stderr, "error: {}\n", e.what());
    return exit_input;
  } catch (const std::exception &e) {
    fmt::print(stderr, "internal error: {}\n", e.what());
    return exit_internal;
  }
}

} // namespace

int main(int argc, char **argv) {
  CLI::App app{"Multi-region PV expansion planning and frequency response scenarios"};
  app.require_subcommand(1);
  app.fallthrough();

  std::string bundle, out = "run";
  std::optional<std::string> config;
  std::optional<std::uint64_t> seed;
  app.add_option("--bundle", bundle, "Case bundle directory");
  app.add_option("--out", out, "Run directory")->capture_default_str();
  app.add_option("--config", config, "Extra config.toml overriding the bundle's");
  app.add_option("--seed", seed, "Partition seed");

  auto *partition = app.add_subcommand("partition", "Split each year into time blocks");
  std::optional<std::size_t> k;
  partition->add_option("-k,--blocks", k, "Blocks per year")->check(CLI::PositiveNumber);
  auto *plan = app.add_subcommand("plan", "Solve the expansion problem");
  auto *sweep = app.add_subcommand("sweep", "Build and simulate the penetration scenarios");
  std::optional<std::string> solution;
  sweep->add_option("--solution", solution, "Solution file (default <out>/plan/solution.json)");
  auto *report = app.add_subcommand("report", "Summarize a run directory");
  auto *run_all = app.add_subcommand("run-all", "partition, plan, sweep and report");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError &e) {
    int code = app.exit(e);
    return code == 0 ? exit_ok : exit_input;
  }

  if (report->parsed())
    return guarded([&]() -> int {
      int code = cmd_report(out);
      if (code == exit_ok)
        fmt::print("{}\n", (fs::path(out) / "report.md").string());
      return code;
    });

  if (bundle.empty()) {
    fmt::print(stderr, "error: --bundle is required\n");
    return exit_input;
  }
  return guarded([&]() -> int {
    std::optional<fs::path> cfg_path;
    if (config)
      cfg_path = *config;
    auto ctx = open_run(bundle, out, cfg_path, seed);
    if (partition->parsed())
      return cmd_partition(ctx, k);
    if (plan->parsed())
      return cmd_plan(ctx);
    if (sweep->parsed()) {
      std::optional<fs::path> sol;
      if (solution)
        sol = *solution;
      return cmd_sweep(ctx, sol);
    }
    if (run_all->parsed())
      return cmd_run_all(ctx);
    return exit_internal;
  });
}
