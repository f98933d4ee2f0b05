#pragma once

#include <map>
#include <optional>
#include <string>
#include <vector>

#include "json.hpp"
#include "wese/llm.hpp"
#include "wese/orchestrator.hpp"
#include "wese/world.hpp"

namespace wese::harness {

inline constexpr const char* kVersion = "wese 0.1.0";

enum class Method { Act, React, ActWese, ReactWese, ActSese, ReactSese };

std::string method_name(Method m);
std::optional<Method> method_from_name(const std::string& name);
std::optional<Method> base_of(Method m);  // e.g. act-wese -> act
bool is_coupled(Method m);
bool is_sese(Method m);
std::string flavor_of(Method m);  // "act" | "react"

struct BackendSpec {
  std::string kind;        // "replay" | "http" | "rule"
  std::string transcript;  // replay: path, "{task}" expands to the task id
  llm::EndpointConfig endpoint;
};

struct RunConfig {
  std::string world_path;
  std::string prompts_dir;
  Method method = Method::ActWese;
  BackendSpec weak;
  BackendSpec strong;
  orch::OrchestratorConfig orch;
  std::map<std::string, double> prices;  // role name -> dollars per 1k
  int workers = 1;
  std::string out_dir = "wese-out";
  bool resume = false;
  std::optional<double> max_expense_dollars;
  bool count_extraction_in_cost = false;
  std::vector<std::string> task_filter;

  /// Parses the config file; ${NAME} in string values is replaced from the
  /// environment. Throws ConfigError on schema or compatibility problems.
  static RunConfig load(const std::string& path);
  void validate() const;

  llm::CostLedger make_ledger() const;
};

// ── Metrics ─────────────────────────────────────────────────────

double success_rate(const std::vector<orch::EpisodeResult>& results);

enum class AvgStepsMode { SuccessfulOnly, ToFirstReward };

/// Mean steps per the mode; nullopt when no episode qualifies (rendered "—").
std::optional<double> avg_steps(const std::vector<orch::EpisodeResult>& results, AvgStepsMode mode);

enum class Direction { Up, Down };

/// Improvement direction per metric name; sr/tr/ar improve upward, as and
/// expense improve downward.
Direction metric_direction(const std::string& metric);

/// Relative improvement in percent, sign-oriented so positive means better.
/// nullopt when base is zero.
std::optional<double> improvement(double base, double now, Direction direction);

/// Two decimals, sign-prefixed ("+46.51", "-48.77", "0.00"); "N/A" for
/// undefined.
std::string render_improvement(const std::optional<double>& imp);

struct MetricRow {
  std::string method;
  int tasks = 0;
  std::optional<double> sr;
  std::optional<double> tr;
  std::optional<double> ar;
  std::optional<double> steps;  // AS
  std::string steps_mode;       // "successful-only" | "to-first-reward"
  long long prompt_tokens = 0;
  long long completion_tokens = 0;
  double expense = 0.0;  // dollars, full precision (rounded at render time)
  std::map<std::string, std::optional<double>> imp;  // metric -> percent vs base
};

/// Aggregates episodes into one row. Token columns cover the strong roles
/// (plus extraction when count_extraction is set); expense covers every role
/// at its configured price.
MetricRow compute_row(const std::string& method, const std::vector<orch::EpisodeResult>& results,
                      AvgStepsMode mode, bool count_extraction);

/// Fills each row's imp entries against its base method's row when present.
void compute_improvements(std::vector<MetricRow>& rows);

struct RunReport {
  std::vector<MetricRow> rows;
  std::vector<std::string> task_ids;
  nlohmann::ordered_json config_echo;
  std::string version = kVersion;
  long long wall_ms = 0;
};

enum class ReportFormat { Table, Json, Csv };
std::optional<ReportFormat> report_format_from(const std::string& name);

std::string render_report(const RunReport& report, ReportFormat format);
nlohmann::ordered_json report_to_json(const RunReport& report);
RunReport report_from_json(const nlohmann::json& j);

/// Builds a single-method report by reading episode files from a run
/// directory; multiple directories merge into one multi-row report with
/// improvements computed where base rows exist.
RunReport report_from_dirs(const std::vector<std::string>& dirs);

// ── Execution ───────────────────────────────────────────────────

/// Runs every task of the configured world (optionally in parallel),
/// writing one episode JSON per task plus report.json into out_dir.
/// Per-task failures are recorded, never fatal; with `resume`, existing
/// episode files are reused without any backend call.
RunReport run_benchmark(const RunConfig& config);

/// One episode, dispatched on config.method. Exposed for tests and fixture
/// generation; backends are the caller's.
orch::EpisodeResult run_episode(const RunConfig& config, const env::WorldBundle& bundle,
                                const std::string& task_id, llm::CompletionBackend& weak,
                                llm::CompletionBackend& strong, const orch::PromptSet& prompts);

}  // namespace wese::harness
