#include <cstdio>
#include <iostream>

#include "CLI11.hpp"
#include "wese/errors.hpp"
#include "wese/harness.hpp"
#include "wese/world.hpp"

namespace {

constexpr int kExitOk = 0;
constexpr int kExitTaskFailed = 1;
constexpr int kExitConfigError = 2;

int cmd_run(const std::string& config_path, const std::string& out_override, int workers_override,
            bool resume) {
  wese::harness::RunConfig config = wese::harness::RunConfig::load(config_path);
  if (!out_override.empty()) config.out_dir = out_override;
  if (workers_override > 0) config.workers = workers_override;
  if (resume) config.resume = true;

  wese::harness::RunReport report = wese::harness::run_benchmark(config);
  std::cout << wese::harness::render_report(report, wese::harness::ReportFormat::Table);
  std::cout << "report written to " << config.out_dir << "/report.json\n";

  const auto& row = report.rows.front();
  bool all_succeeded = row.sr.has_value() && *row.sr >= 1.0 - 1e-12;
  return all_succeeded ? kExitOk : kExitTaskFailed;
}

int cmd_report(const std::vector<std::string>& dirs, const std::string& format_name) {
  auto format = wese::harness::report_format_from(format_name);
  if (!format) throw wese::ConfigError("unknown report format: " + format_name);
  wese::harness::RunReport report = wese::harness::report_from_dirs(dirs);
  std::cout << wese::harness::render_report(report, *format);
  return kExitOk;
}

int cmd_gen_tasks(const std::string& kind, uint64_t seed, int count, const std::string& out,
                  bool milestones) {
  wese::env::WorldBundle bundle = wese::env::generate_bundle(kind, seed, count, milestones);
  wese::env::save_bundle(bundle, out);
  std::cout << "wrote " << bundle.tasks().size() << " tasks to " << out << "\n";
  return kExitOk;
}

int cmd_validate_env(const std::string& world_path) {
  wese::env::WorldBundle bundle = wese::env::load_bundle(world_path);
  int failures = 0;
  for (const auto& task : bundle.tasks()) {
    auto report = wese::env::replay_witness(bundle, task.id);
    if (report.ok) {
      std::printf("ok   %-12s (%d steps)\n", task.id.c_str(), report.steps);
    } else {
      std::printf("FAIL %-12s %s\n", task.id.c_str(), report.detail.c_str());
      ++failures;
    }
  }
  std::printf("%zu tasks, %d failures\n", bundle.tasks().size(), failures);
  return failures == 0 ? kExitOk : kExitTaskFailed;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"WESE benchmark harness"};
  app.require_subcommand(1);

  std::string config_path, out_dir;
  int workers = 0;
  bool resume = false;
  auto* run = app.add_subcommand("run", "run a configured benchmark");
  run->add_option("--config", config_path, "run config file")->required();
  run->add_option("--out", out_dir, "output directory override");
  run->add_option("--workers", workers, "parallel episode workers");
  run->add_flag("--resume", resume, "reuse existing per-task result files");

  std::vector<std::string> report_dirs;
  std::string format_name = "table";
  auto* report = app.add_subcommand("report", "aggregate episode files into a report");
  report->add_option("--in", report_dirs, "run output directory (repeatable)")->required();
  report->add_option("--format", format_name, "table | json | csv");

  std::string kind, gen_out;
  uint64_t seed = 0;
  int count = 0;
  bool milestones = false;
  auto* gen = app.add_subcommand("gen-tasks", "generate a deterministic task suite");
  gen->add_option("--kind", kind, "household | wiki-qa")->required();
  gen->add_option("--seed", seed, "generation seed")->required();
  gen->add_option("--count", count, "number of tasks")->required();
  gen->add_option("--out", gen_out, "output world/corpus file")->required();
  gen->add_flag("--milestones", milestones, "household: emit milestone partial rewards");

  std::string world_path;
  auto* validate = app.add_subcommand("validate-env", "replay every stored witness");
  validate->add_option("--world", world_path, "world/corpus file")->required();

  CLI11_PARSE(app, argc, argv);

  try {
    if (run->parsed()) return cmd_run(config_path, out_dir, workers, resume);
    if (report->parsed()) return cmd_report(report_dirs, format_name);
    if (gen->parsed()) return cmd_gen_tasks(kind, seed, count, gen_out, milestones);
    if (validate->parsed()) return cmd_validate_env(world_path);
  } catch (const wese::ConfigError& e) {
    std::cerr << "configuration error: " << e.what() << "\n";
    return kExitConfigError;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitTaskFailed;
  }
  return kExitOk;
}
