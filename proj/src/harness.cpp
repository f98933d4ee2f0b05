#include "wese/harness.hpp"

#include <atomic>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <mutex>
#include <sstream>
#include <thread>

#include "wese/errors.hpp"
#include "wese/log.hpp"
#include "wese/rule_agents.hpp"
#include "wese/text.hpp"

namespace wese::harness {

namespace fs = std::filesystem;
using nlohmann::json;
using nlohmann::ordered_json;

// ── Methods ─────────────────────────────────────────────────────

std::string method_name(Method m) {
  switch (m) {
    case Method::Act: return "act";
    case Method::React: return "react";
    case Method::ActWese: return "act-wese";
    case Method::ReactWese: return "react-wese";
    case Method::ActSese: return "act-sese";
    case Method::ReactSese: return "react-sese";
  }
  return "?";
}

std::optional<Method> method_from_name(const std::string& name) {
  for (Method m : {Method::Act, Method::React, Method::ActWese, Method::ReactWese, Method::ActSese,
                   Method::ReactSese}) {
    if (method_name(m) == name) return m;
  }
  return std::nullopt;
}

std::optional<Method> base_of(Method m) {
  switch (m) {
    case Method::ActWese:
    case Method::ActSese:
      return Method::Act;
    case Method::ReactWese:
    case Method::ReactSese:
      return Method::React;
    default:
      return std::nullopt;
  }
}

bool is_coupled(Method m) { return m == Method::Act || m == Method::React; }

bool is_sese(Method m) { return m == Method::ActSese || m == Method::ReactSese; }

std::string flavor_of(Method m) {
  switch (m) {
    case Method::Act:
    case Method::ActWese:
    case Method::ActSese:
      return "act";
    default:
      return "react";
  }
}

// ── Config ──────────────────────────────────────────────────────

namespace {

std::string interpolate_env(const std::string& value) {
  std::string out;
  size_t i = 0;
  while (i < value.size()) {
    size_t open = value.find("${", i);
    if (open == std::string::npos) {
      out.append(value.substr(i));
      break;
    }
    size_t close = value.find('}', open + 2);
    if (close == std::string::npos) {
      out.append(value.substr(i));
      break;
    }
    out.append(value.substr(i, open - i));
    std::string name = value.substr(open + 2, close - open - 2);
    const char* env = std::getenv(name.c_str());
    if (env != nullptr) out.append(env);
    i = close + 1;
  }
  return out;
}

BackendSpec backend_from_json(const json& j, const std::string& which) {
  BackendSpec spec;
  spec.kind = j.value("kind", std::string());
  if (spec.kind != "replay" && spec.kind != "http" && spec.kind != "rule") {
    throw ConfigError("backend '" + which + "' has unknown kind '" + spec.kind + "'");
  }
  if (spec.kind == "replay") {
    spec.transcript = interpolate_env(j.value("transcript", std::string()));
    if (spec.transcript.empty()) {
      throw ConfigError("replay backend '" + which + "' needs a transcript path");
    }
  }
  if (spec.kind == "http") {
    spec.endpoint.base_url = interpolate_env(j.value("base_url", std::string()));
    spec.endpoint.model = interpolate_env(j.value("model", std::string()));
    spec.endpoint.api_key = interpolate_env(j.value("api_key", std::string()));
    if (const char* key = std::getenv("WESE_API_KEY"); key != nullptr && spec.endpoint.api_key.empty()) {
      spec.endpoint.api_key = key;
    }
    if (spec.endpoint.base_url.empty()) {
      throw ConfigError("http backend '" + which + "' needs base_url");
    }
  }
  return spec;
}

}  // namespace

RunConfig RunConfig::load(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open config file: " + path);
  json j = json::parse(in, nullptr, false);
  if (j.is_discarded()) throw ConfigError("invalid JSON in config file: " + path);
  if (j.value("format_version", 0) != 1) {
    throw ConfigError(path + ": unsupported config format_version");
  }

  RunConfig cfg;
  cfg.world_path = interpolate_env(j.value("world", std::string()));
  cfg.prompts_dir = interpolate_env(j.value("prompts_dir", std::string("prompts/household")));
  auto method = method_from_name(j.value("method", std::string()));
  if (!method) throw ConfigError(path + ": unknown method '" + j.value("method", std::string()) + "'");
  cfg.method = *method;

  if (j.contains("budgets")) {
    cfg.orch.budgets.n_explore = j["budgets"].value("explore", 50);
    cfg.orch.budgets.n_exploit = j["budgets"].value("exploit", 50);
  }
  if (j.contains("retrieval")) {
    std::string mode = j["retrieval"].value("mode", std::string("one-hop"));
    if (mode == "one-hop") {
      cfg.orch.retrieval.mode = orch::RetrievalConfig::Mode::OneHop;
    } else if (mode == "pairwise") {
      cfg.orch.retrieval.mode = orch::RetrievalConfig::Mode::Pairwise;
    } else {
      throw ConfigError(path + ": unknown retrieval mode '" + mode + "'");
    }
    if (j["retrieval"].contains("cap") && !j["retrieval"]["cap"].is_null()) {
      cfg.orch.retrieval.cap = j["retrieval"]["cap"].get<int>();
    }
  }
  cfg.orch.thought_mode = flavor_of(cfg.method) == "react";
  cfg.orch.history_window_pairs = j.value("history_window_pairs", 20);
  cfg.orch.prompt_token_window = j.value("prompt_token_window", 3072ll);
  cfg.orch.max_completion_tokens = j.value("max_completion_tokens", 64);

  if (!j.contains("backends") || !j["backends"].contains("strong")) {
    throw ConfigError(path + ": backends.strong is required");
  }
  cfg.strong = backend_from_json(j["backends"]["strong"], "strong");
  if (j["backends"].contains("weak")) {
    cfg.weak = backend_from_json(j["backends"]["weak"], "weak");
  } else {
    cfg.weak = cfg.strong;
  }

  if (j.contains("pricing")) {
    for (const auto& [role, price] : j["pricing"].items()) {
      if (!llm::role_from_name(role)) throw ConfigError(path + ": unknown pricing role '" + role + "'");
      cfg.prices[role] = price.get<double>();
    }
  }
  cfg.workers = j.value("workers", 1);
  cfg.out_dir = interpolate_env(j.value("out_dir", std::string("wese-out")));
  cfg.resume = j.value("resume", false);
  if (j.contains("max_expense_dollars") && !j["max_expense_dollars"].is_null()) {
    cfg.max_expense_dollars = j["max_expense_dollars"].get<double>();
  }
  cfg.count_extraction_in_cost = j.value("count_extraction_in_cost", false);
  cfg.task_filter = j.value("tasks", std::vector<std::string>{});
  cfg.validate();
  return cfg;
}

void RunConfig::validate() const {
  if (world_path.empty()) throw ConfigError("config needs a world path");
  if (workers < 1) throw ConfigError("workers must be >= 1");
  orch.budgets.validate();
  if (!is_coupled(method) && !is_sese(method) && weak.kind.empty()) {
    throw ConfigError("wese methods need both weak and strong backends");
  }
}

llm::CostLedger RunConfig::make_ledger() const {
  llm::CostLedger ledger = llm::make_default_ledger();
  for (const auto& [role, price] : prices) {
    ledger.set_price(*llm::role_from_name(role), price);
  }
  return ledger;
}

// ── Metrics ─────────────────────────────────────────────────────

double success_rate(const std::vector<orch::EpisodeResult>& results) {
  if (results.empty()) throw UsageError("success_rate over empty results");
  size_t wins = 0;
  for (const auto& r : results) wins += r.success ? 1 : 0;
  return static_cast<double>(wins) / static_cast<double>(results.size());
}

std::optional<double> avg_steps(const std::vector<orch::EpisodeResult>& results, AvgStepsMode mode) {
  double sum = 0;
  size_t n = 0;
  for (const auto& r : results) {
    if (mode == AvgStepsMode::SuccessfulOnly) {
      if (!r.success) continue;
      sum += r.steps_for_metrics;
      ++n;
    } else {
      if (!r.first_reward_step) continue;
      sum += *r.first_reward_step;
      ++n;
    }
  }
  if (n == 0) return std::nullopt;
  return sum / static_cast<double>(n);
}

Direction metric_direction(const std::string& metric) {
  static const std::map<std::string, Direction> registry = {
      {"sr", Direction::Up},   {"tr", Direction::Up},      {"ar", Direction::Up},
      {"as", Direction::Down}, {"expense", Direction::Down}};
  auto it = registry.find(metric);
  if (it == registry.end()) throw UsageError("unknown metric: " + metric);
  return it->second;
}

std::optional<double> improvement(double base, double now, Direction direction) {
  if (base == 0.0) return std::nullopt;
  double delta = direction == Direction::Up ? now - base : base - now;
  return delta / base * 100.0;
}

std::string render_improvement(const std::optional<double>& imp) {
  if (!imp) return "N/A";
  std::string fixed = format_fixed(*imp, 2);
  if (fixed == "0.00") return "0.00";
  if (!fixed.empty() && fixed[0] != '-') return "+" + fixed;
  return fixed;
}

MetricRow compute_row(const std::string& method, const std::vector<orch::EpisodeResult>& results,
                      AvgStepsMode mode, bool count_extraction) {
  MetricRow row;
  row.method = method;
  row.tasks = static_cast<int>(results.size());
  row.steps_mode = mode == AvgStepsMode::SuccessfulOnly ? "successful-only" : "to-first-reward";
  if (!results.empty()) row.sr = success_rate(results);
  row.steps = avg_steps(results, mode);
  if (mode == AvgStepsMode::ToFirstReward) {
    double tr = 0;
    for (const auto& r : results) tr += r.total_reward;
    row.tr = tr;
    row.ar = results.empty() ? 0.0 : tr / static_cast<double>(results.size());
  }
  long long expense_cents = 0;
  for (const auto& r : results) {
    for (const auto& role : r.ledger.roles) {
      bool strong_role = role.role == "strong-explore" || role.role == "strong-exploit";
      bool counted = strong_role || (count_extraction && role.role == "extraction");
      if (counted) {
        row.prompt_tokens += role.usage.prompt_tokens;
        row.completion_tokens += role.usage.completion_tokens;
      }
    }
    expense_cents += r.ledger.total_expense_cents;
  }
  row.expense = static_cast<double>(expense_cents) / 100.0;
  return row;
}

void compute_improvements(std::vector<MetricRow>& rows) {
  auto find_row = [&](const std::string& name) -> const MetricRow* {
    for (const auto& r : rows) {
      if (r.method == name) return &r;
    }
    return nullptr;
  };
  for (auto& row : rows) {
    auto method = method_from_name(row.method);
    if (!method) continue;
    auto base_method = base_of(*method);
    const MetricRow* base = base_method ? find_row(method_name(*base_method)) : nullptr;
    if (base == nullptr) {
      if (base_method) continue;            // base missing: no imp columns
      base = &row;                          // base methods compare to themselves (0.00)
    }
    if (row.sr && base->sr) row.imp["sr"] = improvement(*base->sr, *row.sr, metric_direction("sr"));
    if (row.ar && base->ar) row.imp["ar"] = improvement(*base->ar, *row.ar, metric_direction("ar"));
    if (row.steps && base->steps) {
      row.imp["as"] = improvement(*base->steps, *row.steps, metric_direction("as"));
    }
    row.imp["expense"] = improvement(base->expense, row.expense, metric_direction("expense"));
  }
}

// ── Report I/O ──────────────────────────────────────────────────

std::optional<ReportFormat> report_format_from(const std::string& name) {
  if (name == "table") return ReportFormat::Table;
  if (name == "json") return ReportFormat::Json;
  if (name == "csv") return ReportFormat::Csv;
  return std::nullopt;
}

namespace {

ordered_json row_to_json(const MetricRow& row) {
  ordered_json j;
  j["method"] = row.method;
  j["tasks"] = row.tasks;
  auto opt = [](const std::optional<double>& v) {
    return v ? ordered_json(*v) : ordered_json(nullptr);
  };
  j["sr"] = opt(row.sr);
  j["tr"] = opt(row.tr);
  j["ar"] = opt(row.ar);
  j["avg_steps"] = opt(row.steps);
  j["avg_steps_mode"] = row.steps_mode;
  j["prompt_tokens"] = row.prompt_tokens;
  j["completion_tokens"] = row.completion_tokens;
  j["expense"] = row.expense;
  ordered_json imp = ordered_json::object();
  for (const auto& [metric, value] : row.imp) imp[metric] = opt(value);
  j["imp"] = imp;
  return j;
}

MetricRow row_from_json(const json& j) {
  MetricRow row;
  row.method = j.at("method").get<std::string>();
  row.tasks = j.at("tasks").get<int>();
  auto opt = [&](const char* key) -> std::optional<double> {
    if (!j.contains(key) || j[key].is_null()) return std::nullopt;
    return j[key].get<double>();
  };
  row.sr = opt("sr");
  row.tr = opt("tr");
  row.ar = opt("ar");
  row.steps = opt("avg_steps");
  row.steps_mode = j.value("avg_steps_mode", std::string("successful-only"));
  row.prompt_tokens = j.at("prompt_tokens").get<long long>();
  row.completion_tokens = j.at("completion_tokens").get<long long>();
  row.expense = j.at("expense").get<double>();
  if (j.contains("imp")) {
    for (const auto& [metric, value] : j["imp"].items()) {
      row.imp[metric] = value.is_null() ? std::nullopt : std::optional<double>(value.get<double>());
    }
  }
  return row;
}

}  // namespace

ordered_json report_to_json(const RunReport& report) {
  ordered_json j;
  j["format_version"] = 1;
  j["version"] = report.version;
  j["wall_ms"] = report.wall_ms;
  j["config"] = report.config_echo;
  ordered_json rows = ordered_json::array();
  for (const auto& r : report.rows) rows.push_back(row_to_json(r));
  j["rows"] = rows;
  j["tasks"] = report.task_ids;
  return j;
}

RunReport report_from_json(const json& j) {
  RunReport report;
  report.version = j.value("version", std::string());
  report.wall_ms = j.value("wall_ms", 0ll);
  if (j.contains("config")) report.config_echo = j["config"];
  for (const auto& rj : j.at("rows")) report.rows.push_back(row_from_json(rj));
  report.task_ids = j.value("tasks", std::vector<std::string>{});
  return report;
}

namespace {

std::string fmt_opt(const std::optional<double>& v, int decimals) {
  if (!v) return "—";
  return format_fixed(*v, decimals);
}

/// Best / second-best marking within a base-method group: **best**, _second_.
void mark_extremes(std::vector<std::vector<std::string>>& cells, const std::vector<MetricRow>& rows,
                   size_t column, const std::vector<std::optional<double>>& values, Direction dir) {
  // Group rows by base method.
  std::map<std::string, std::vector<size_t>> groups;
  for (size_t i = 0; i < rows.size(); ++i) {
    auto m = method_from_name(rows[i].method);
    std::string group = rows[i].method;
    if (m) {
      auto base = base_of(*m);
      group = base ? method_name(*base) : method_name(*m);
    }
    groups[group].push_back(i);
  }
  for (const auto& [group, members] : groups) {
    if (members.size() < 2) continue;
    std::vector<std::pair<double, size_t>> ranked;
    for (size_t i : members) {
      if (values[i]) ranked.emplace_back(*values[i], i);
    }
    if (ranked.size() < 2) continue;
    std::sort(ranked.begin(), ranked.end(), [&](const auto& a, const auto& b) {
      return dir == Direction::Up ? a.first > b.first : a.first < b.first;
    });
    cells[ranked[0].second][column] = "**" + cells[ranked[0].second][column] + "**";
    cells[ranked[1].second][column] = "_" + cells[ranked[1].second][column] + "_";
  }
}

std::string render_table(const RunReport& report) {
  const auto& rows = report.rows;
  bool reward_mode = false;
  bool any_imp = false;
  for (const auto& r : rows) {
    reward_mode = reward_mode || r.tr.has_value();
    for (const auto& [metric, v] : r.imp) any_imp = any_imp || true;
  }
  // A lone row carries no comparison columns.
  if (rows.size() < 2) any_imp = false;

  std::vector<std::string> header;
  header.push_back("Method");
  if (reward_mode) {
    header.push_back("TR");
    header.push_back("AR");
  } else {
    header.push_back("SR");
  }
  if (any_imp) header.push_back("Imp(%)");
  header.push_back("AS");
  if (any_imp) header.push_back("Imp(%)");
  header.push_back("Prompt");
  header.push_back("Completion");
  header.push_back("Expense($)");
  if (any_imp) header.push_back("Imp(%)");

  std::vector<std::vector<std::string>> cells;
  std::vector<std::optional<double>> eff_values, as_values, cost_values;
  for (const auto& r : rows) {
    std::vector<std::string> line;
    line.push_back(r.method);
    if (reward_mode) {
      line.push_back(fmt_opt(r.tr, 0));
      line.push_back(fmt_opt(r.ar, 2));
      eff_values.push_back(r.ar);
    } else {
      line.push_back(fmt_opt(r.sr, 2));
      eff_values.push_back(r.sr);
    }
    if (any_imp) line.push_back(render_improvement(r.imp.contains(reward_mode ? "ar" : "sr")
                                                       ? r.imp.at(reward_mode ? "ar" : "sr")
                                                       : std::nullopt));
    line.push_back(fmt_opt(r.steps, 2));
    as_values.push_back(r.steps);
    if (any_imp) line.push_back(render_improvement(r.imp.contains("as") ? r.imp.at("as") : std::nullopt));
    line.push_back(std::to_string(r.prompt_tokens));
    line.push_back(std::to_string(r.completion_tokens));
    line.push_back(format_fixed(r.expense, 2));
    cost_values.push_back(r.expense);
    if (any_imp) {
      line.push_back(render_improvement(r.imp.contains("expense") ? r.imp.at("expense") : std::nullopt));
    }
    cells.push_back(std::move(line));
  }

  size_t eff_col = 1 + (reward_mode ? 1 : 0);
  size_t as_col = eff_col + 1 + (any_imp ? 1 : 0);
  size_t expense_col = as_col + (any_imp ? 1 : 0) + 3;
  mark_extremes(cells, rows, eff_col, eff_values, Direction::Up);
  mark_extremes(cells, rows, as_col, as_values, Direction::Down);
  mark_extremes(cells, rows, expense_col, cost_values, Direction::Down);

  std::vector<size_t> widths(header.size());
  for (size_t c = 0; c < header.size(); ++c) widths[c] = header[c].size();
  for (const auto& line : cells) {
    for (size_t c = 0; c < line.size(); ++c) widths[c] = std::max(widths[c], line[c].size());
  }
  std::ostringstream os;
  auto emit_line = [&](const std::vector<std::string>& line) {
    for (size_t c = 0; c < line.size(); ++c) {
      os << (c ? " | " : "");
      os << line[c] << std::string(widths[c] - line[c].size(), ' ');
    }
    os << "\n";
  };
  emit_line(header);
  for (size_t c = 0; c < header.size(); ++c) {
    os << (c ? "-|-" : "") << std::string(widths[c], '-');
  }
  os << "\n";
  for (const auto& line : cells) emit_line(line);
  return os.str();
}

std::string render_csv(const RunReport& report) {
  std::ostringstream os;
  os << "method,tasks,sr,tr,ar,avg_steps,avg_steps_mode,prompt_tokens,completion_tokens,expense,"
        "imp_sr,imp_ar,imp_as,imp_expense\n";
  auto cell = [](const std::optional<double>& v) { return v ? std::to_string(*v) : std::string(); };
  for (const auto& r : report.rows) {
    auto imp = [&](const char* name) -> std::string {
      auto it = r.imp.find(name);
      if (it == r.imp.end() || !it->second) return "";
      return std::to_string(*it->second);
    };
    os << r.method << ',' << r.tasks << ',' << cell(r.sr) << ',' << cell(r.tr) << ',' << cell(r.ar)
       << ',' << cell(r.steps) << ',' << r.steps_mode << ',' << r.prompt_tokens << ','
       << r.completion_tokens << ',' << format_fixed(r.expense, 2) << ',' << imp("sr") << ','
       << imp("ar") << ',' << imp("as") << ',' << imp("expense") << "\n";
  }
  return os.str();
}

}  // namespace

std::string render_report(const RunReport& report, ReportFormat format) {
  switch (format) {
    case ReportFormat::Table: return render_table(report);
    case ReportFormat::Json: return report_to_json(report).dump(2) + "\n";
    case ReportFormat::Csv: return render_csv(report);
  }
  return "";
}

RunReport report_from_dirs(const std::vector<std::string>& dirs) {
  RunReport report;
  std::vector<MetricRow> rows;
  for (const auto& dir : dirs) {
    std::vector<orch::EpisodeResult> results;
    std::vector<fs::path> files;
    for (const auto& entry : fs::directory_iterator(dir)) {
      if (entry.path().extension() == ".json" &&
          entry.path().filename().string().rfind("task_", 0) == 0) {
        files.push_back(entry.path());
      }
    }
    std::sort(files.begin(), files.end());
    std::string method;
    AvgStepsMode mode = AvgStepsMode::SuccessfulOnly;
    for (const auto& file : files) {
      std::ifstream in(file);
      json j = json::parse(in, nullptr, false);
      if (j.is_discarded()) throw ConfigError("invalid episode JSON: " + file.string());
      auto episode = orch::episode_from_json(j);
      if (method.empty()) method = episode.method;
      results.push_back(std::move(episode));
      report.task_ids.push_back(results.back().task_id);
    }
    if (results.empty()) throw ConfigError("no episode files in " + dir);
    // Reward-style metrics kick in when any episode carries partial rewards.
    for (const auto& r : results) {
      if (r.total_reward > 1.0) mode = AvgStepsMode::ToFirstReward;
    }
    rows.push_back(compute_row(method, results, mode, false));
  }
  compute_improvements(rows);
  report.rows = std::move(rows);
  return report;
}

// ── Execution ───────────────────────────────────────────────────

namespace {

std::unique_ptr<llm::CompletionBackend> make_episode_backend(const BackendSpec& spec,
                                                             const std::string& task_id, bool weak_role,
                                                             bool coupled,
                                                             llm::CompletionBackend* shared_http) {
  if (spec.kind == "replay") {
    std::string path = spec.transcript;
    size_t pos = path.find("{task}");
    if (pos != std::string::npos) path.replace(pos, 6, task_id);
    return std::make_unique<llm::ReplayBackend>(llm::load_transcript(path));
  }
  if (spec.kind == "rule") {
    if (coupled) return std::make_unique<rule::HouseholdCoupledAgent>();
    if (weak_role) return std::make_unique<rule::HouseholdWeakAgent>();
    return std::make_unique<rule::HouseholdPlannerAgent>();
  }
  // http backends are shared across episodes; wrap in a forwarding shim.
  struct Forward : llm::CompletionBackend {
    llm::CompletionBackend* inner;
    explicit Forward(llm::CompletionBackend* b) : inner(b) {}
    llm::CompletionResult complete(const llm::CompletionRequest& r) override {
      return inner->complete(r);
    }
    std::string kind() const override { return inner->kind(); }
  };
  return std::make_unique<Forward>(shared_http);
}

void atomic_write(const fs::path& path, const std::string& content) {
  fs::path tmp = path;
  tmp += ".tmp";
  {
    std::ofstream out(tmp, std::ios::binary);
    if (!out) throw ConfigError("cannot write " + path.string());
    out << content;
  }
  fs::rename(tmp, path);
}

}  // namespace

orch::EpisodeResult run_episode(const RunConfig& config, const env::WorldBundle& bundle,
                                const std::string& task_id, llm::CompletionBackend& weak,
                                llm::CompletionBackend& strong, const orch::PromptSet& prompts) {
  auto episode = env::make_episode(bundle, task_id);
  llm::CostLedger ledger = config.make_ledger();
  orch::EpisodeResult result;
  if (is_coupled(config.method)) {
    result = orch::run_coupled_baseline(*episode, strong, prompts, config.orch, std::move(ledger));
  } else {
    orch::AgentMode mode = is_sese(config.method) ? orch::AgentMode::Sese : orch::AgentMode::Wese;
    llm::CompletionBackend& explorer = is_sese(config.method) ? strong : weak;
    result = orch::run_wese(*episode, explorer, strong, prompts, config.orch, mode, std::move(ledger));
  }
  result.method = method_name(config.method);
  return result;
}

RunReport run_benchmark(const RunConfig& config) {
  auto start = std::chrono::steady_clock::now();
  config.validate();
  env::WorldBundle bundle = env::load_bundle(config.world_path);

  std::vector<env::Task> tasks = bundle.tasks();
  if (!config.task_filter.empty()) {
    std::vector<env::Task> filtered;
    for (const auto& t : tasks) {
      for (const auto& want : config.task_filter) {
        if (t.id == want) filtered.push_back(t);
      }
    }
    tasks = std::move(filtered);
  }
  if (tasks.empty()) throw ConfigError("no tasks to run");

  orch::PromptSet prompts = orch::PromptSet::load_dir(config.prompts_dir, flavor_of(config.method));

  fs::create_directories(config.out_dir);

  std::unique_ptr<llm::HttpBackend> shared_weak_http, shared_strong_http;
  if (config.weak.kind == "http") shared_weak_http = std::make_unique<llm::HttpBackend>(config.weak.endpoint);
  if (config.strong.kind == "http") {
    shared_strong_http = std::make_unique<llm::HttpBackend>(config.strong.endpoint);
  }

  std::vector<orch::EpisodeResult> results(tasks.size());
  std::atomic<size_t> next{0};
  std::atomic<long long> spent_cents{0};
  std::mutex log_mu;

  auto worker = [&]() {
    while (true) {
      size_t i = next.fetch_add(1);
      if (i >= tasks.size()) return;
      const std::string& task_id = tasks[i].id;
      fs::path episode_path = fs::path(config.out_dir) / ("task_" + task_id + ".json");

      if (config.resume && fs::exists(episode_path)) {
        std::ifstream in(episode_path);
        json j = json::parse(in, nullptr, false);
        if (!j.is_discarded()) {
          results[i] = orch::episode_from_json(j);
          continue;
        }
      }
      if (config.max_expense_dollars &&
          spent_cents.load() > static_cast<long long>(*config.max_expense_dollars * 100)) {
        orch::EpisodeResult aborted;
        aborted.task_id = task_id;
        aborted.method = method_name(config.method);
        aborted.error = "expense budget exhausted before episode start";
        results[i] = std::move(aborted);
        atomic_write(episode_path, orch::episode_to_json(results[i]).dump(2) + "\n");
        continue;
      }
      try {
        auto weak = make_episode_backend(config.weak, task_id, true, is_coupled(config.method),
                                         shared_weak_http.get());
        auto strong = make_episode_backend(config.strong, task_id, false, is_coupled(config.method),
                                           shared_strong_http.get());
        results[i] = run_episode(config, bundle, task_id, *weak, *strong, prompts);
      } catch (const std::exception& e) {
        orch::EpisodeResult failed;
        failed.task_id = task_id;
        failed.method = method_name(config.method);
        failed.error = e.what();
        results[i] = std::move(failed);
        std::lock_guard<std::mutex> lock(log_mu);
        log::warn("task " + task_id + " failed: " + e.what());
      }
      spent_cents.fetch_add(results[i].ledger.total_expense_cents);
      atomic_write(episode_path, orch::episode_to_json(results[i]).dump(2) + "\n");
    }
  };

  int worker_count = std::min<int>(config.workers, static_cast<int>(tasks.size()));
  if (worker_count <= 1) {
    worker();
  } else {
    std::vector<std::thread> pool;
    for (int i = 0; i < worker_count; ++i) pool.emplace_back(worker);
    for (auto& t : pool) t.join();
  }

  AvgStepsMode mode = AvgStepsMode::SuccessfulOnly;
  if (bundle.kind == "household") {
    for (const auto& t : bundle.world.tasks) {
      if (t.reward_style == env::household::RewardStyle::Milestone) mode = AvgStepsMode::ToFirstReward;
    }
  }

  RunReport report;
  report.rows.push_back(
      compute_row(method_name(config.method), results, mode, config.count_extraction_in_cost));
  compute_improvements(report.rows);
  for (const auto& t : tasks) report.task_ids.push_back(t.id);
  report.config_echo = ordered_json{{"world", config.world_path},
                                    {"method", method_name(config.method)},
                                    {"workers", config.workers},
                                    {"budgets",
                                     {{"explore", config.orch.budgets.n_explore},
                                      {"exploit", config.orch.budgets.n_exploit}}}};
  report.wall_ms = std::chrono::duration_cast<std::chrono::milliseconds>(
                       std::chrono::steady_clock::now() - start)
                       .count();
  atomic_write(fs::path(config.out_dir) / "report.json", report_to_json(report).dump(2) + "\n");
  return report;
}

}  // namespace wese::harness
