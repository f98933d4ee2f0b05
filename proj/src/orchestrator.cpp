#include "wese/orchestrator.hpp"

#include <algorithm>

#include "wese/errors.hpp"
#include "wese/log.hpp"
#include "wese/text.hpp"

namespace wese::orch {

void PhaseBudget::validate() const {
  if (n_explore < 1 || n_exploit < 1) {
    throw ConfigError("phase budgets must be >= 1 (got explore=" + std::to_string(n_explore) +
                      ", exploit=" + std::to_string(n_exploit) + ")");
  }
}

std::string terminated_by_name(TerminatedBy t) {
  switch (t) {
    case TerminatedBy::Budget: return "budget";
    case TerminatedBy::EnvComplete: return "env-complete";
    case TerminatedBy::AgentTerminate: return "agent-terminate";
    case TerminatedBy::Error: return "error";
  }
  return "?";
}

TerminatedBy terminated_by_from(const std::string& name) {
  if (name == "budget") return TerminatedBy::Budget;
  if (name == "env-complete") return TerminatedBy::EnvComplete;
  if (name == "agent-terminate") return TerminatedBy::AgentTerminate;
  if (name == "error") return TerminatedBy::Error;
  throw ConfigError("unknown terminated-by value: " + name);
}

// ── History ─────────────────────────────────────────────────────

History::History(std::string initial_observation) : latest_(std::move(initial_observation)) {}

void History::record(const std::string& action, const std::string& observation) {
  turns_.emplace_back(latest_, action);
  latest_ = observation;
}

std::string History::render(int window_pairs, long long token_window) const {
  auto render_from = [&](size_t begin) {
    std::string out;
    for (size_t i = begin; i < turns_.size(); ++i) {
      out += "Observation: " + turns_[i].first + "\n> " + turns_[i].second + "\n";
    }
    out += "Observation: " + latest_;
    return out;
  };
  std::string full = render_from(0);
  if (llm::estimate_tokens(full) <= token_window || turns_.size() <= static_cast<size_t>(window_pairs)) {
    return full;
  }
  return render_from(turns_.size() - static_cast<size_t>(window_pairs));
}

// ── Completion-line handling ────────────────────────────────────

std::string first_action_line(const std::string& completion) {
  for (const auto& raw : split(completion, '\n')) {
    std::string line = trim(raw);
    if (line.empty()) continue;
    if (line.rfind("> ", 0) == 0) line = trim(line.substr(2));
    else if (line.rfind(">", 0) == 0) line = trim(line.substr(1));
    std::string lower = to_lower(line);
    if (lower.rfind("action:", 0) == 0) line = trim(line.substr(7));
    return line;
  }
  return "";
}

bool is_thought_line(const std::string& line) {
  std::string lower = to_lower(trim(line));
  return lower.rfind("think:", 0) == 0 || lower.rfind("thought:", 0) == 0;
}

bool is_done_exploring(const std::string& line) {
  return to_lower(trim(line)) == to_lower(kDoneExploring);
}

// ── Extraction ──────────────────────────────────────────────────

std::vector<kg::KnowledgeTriplet> extract_triplets(const std::string& feedback,
                                                   llm::CompletionBackend& backend,
                                                   const PromptTemplate& extract_tpl,
                                                   llm::CostLedger& ledger, int max_tokens) {
  if (trim(feedback).empty()) return {};
  RenderInputs inputs;
  inputs.feedback = feedback;
  llm::CompletionRequest req;
  req.prompt = render_prompt(extract_tpl, inputs);
  req.max_tokens = max_tokens;
  auto result = llm::complete(backend, req, ledger, llm::CostRole::Extraction);
  auto parsed = kg::parse_triplets(result.text);
  if (parsed.skipped > 0) {
    log::debug("extraction output had " + std::to_string(parsed.skipped) + " unparseable line(s)");
  }
  return parsed.triplets;
}

std::set<kg::EntityId> extract_task_entities(const std::set<std::string>& graph_entities,
                                             const env::Task& task, llm::CompletionBackend& backend,
                                             const PromptTemplate& entity_tpl, llm::CostLedger& ledger,
                                             int max_tokens) {
  RenderInputs inputs;
  inputs.task = task.description;
  std::string inventory;
  for (const auto& e : graph_entities) {
    if (!inventory.empty()) inventory += ", ";
    inventory += e;
  }
  if (inventory.empty()) inventory = "(none)";
  inputs.entities = inventory;

  llm::CompletionRequest req;
  req.prompt = render_prompt(entity_tpl, inputs);
  req.max_tokens = max_tokens;
  auto result = llm::complete(backend, req, ledger, llm::CostRole::Extraction);

  std::set<kg::EntityId> picked;
  for (const auto& raw_line : split(result.text, '\n')) {
    for (const auto& raw : split(raw_line, ',')) {
      auto entity = kg::EntityId::from_raw(raw);
      if (!entity) continue;
      if (graph_entities.contains(entity->name)) {
        picked.insert(*entity);
      } else {
        log::debug("entity-extraction named '" + entity->name + "' which is not in the graph; dropped");
      }
    }
  }
  return picked;
}

std::vector<kg::KnowledgeTriplet> retrieve(const kg::KnowledgeGraph& graph,
                                           const std::set<kg::EntityId>& task_entities,
                                           const RetrievalConfig& cfg) {
  if (cfg.mode == RetrievalConfig::Mode::Pairwise) {
    auto out = retrieve_pairwise(graph, task_entities);
    if (cfg.cap && out.size() > static_cast<size_t>(*cfg.cap)) out.resize(static_cast<size_t>(*cfg.cap));
    return out;
  }
  return retrieve_one_hop(graph, task_entities, cfg.cap);
}

// ── Phases ──────────────────────────────────────────────────────

namespace {

void append_unique(std::vector<kg::KnowledgeTriplet>& acc, std::set<kg::KnowledgeTriplet>& seen,
                   const std::vector<kg::KnowledgeTriplet>& extracted) {
  for (const auto& t : extracted) {
    if (seen.insert(t).second) acc.push_back(t);
  }
}

}  // namespace

ExploreOutcome explore_phase(env::Episode& episode, const std::string& initial_observation,
                             llm::CompletionBackend& weak, const PromptSet& prompts,
                             const OrchestratorConfig& cfg, llm::CostLedger& ledger,
                             llm::CostRole explore_role) {
  cfg.budgets.validate();
  ExploreOutcome out;
  out.trajectory.phase = "explore";
  out.trajectory.terminated_by = TerminatedBy::Budget;
  std::set<kg::KnowledgeTriplet> seen;
  History history(initial_observation);

  for (int i = 0; i < cfg.budgets.n_explore; ++i) {
    if (episode.done()) {
      out.trajectory.terminated_by = TerminatedBy::EnvComplete;
      break;
    }
    RenderInputs inputs;
    inputs.task = episode.task().description;
    inputs.history = history.render(cfg.history_window_pairs, cfg.prompt_token_window);
    llm::CompletionRequest req;
    req.prompt = render_prompt(prompts.explore, inputs);
    req.max_tokens = cfg.max_completion_tokens;
    auto result = llm::complete(weak, req, ledger, explore_role);
    out.trajectory.backend_calls += 1;

    std::string action = first_action_line(result.text);
    if (is_done_exploring(action)) {
      out.trajectory.terminated_by = TerminatedBy::AgentTerminate;
      break;
    }
    if (!episode.well_formed(action) || !episode.explore_legal(action)) {
      log::info("unparseable exploration action '" + action + "'; substituting fallback");
      action = episode.fallback_explore_action();
    }
    env::Feedback fb = episode.step(action);
    auto extracted = extract_triplets(fb.text, weak, prompts.extract, ledger, cfg.max_completion_tokens);
    append_unique(out.triplets, seen, extracted);

    StepRecord rec;
    rec.index = i;
    rec.action = action;
    rec.feedback = fb.text;
    rec.reward = fb.reward;
    rec.done = fb.done;
    rec.state_fp = episode.state_fingerprint();
    rec.usage = result.usage;
    rec.extracted_triplets = static_cast<int>(extracted.size());
    rec.knowledge_size = static_cast<long long>(out.triplets.size());
    out.trajectory.steps.push_back(std::move(rec));
    history.record(action, fb.text);

    if (fb.done) {
      out.trajectory.terminated_by = TerminatedBy::EnvComplete;
      break;
    }
  }
  return out;
}

ExploitOutcome exploit_phase(env::Episode& episode, const std::string& initial_observation,
                             llm::CompletionBackend& strong, const PromptSet& prompts,
                             const std::vector<kg::KnowledgeTriplet>& retrieved,
                             const OrchestratorConfig& cfg, llm::CostLedger& ledger) {
  cfg.budgets.validate();
  ExploitOutcome out;
  out.trajectory.phase = "exploit";
  out.trajectory.terminated_by = TerminatedBy::Budget;
  History history(initial_observation);
  const long long call_cap =
      static_cast<long long>(cfg.backend_call_factor) * cfg.budgets.n_exploit + 1;

  for (int i = 0; i < cfg.budgets.n_exploit; ++i) {
    if (episode.done()) {
      out.trajectory.terminated_by = TerminatedBy::EnvComplete;
      break;
    }
    std::string action;
    llm::TokenUsage step_usage;
    bool got_action = false;
    int parse_failures = 0;
    while (!got_action) {
      if (out.trajectory.backend_calls >= call_cap) break;
      RenderInputs inputs;
      inputs.task = episode.task().description;
      inputs.knowledge = retrieved;
      inputs.history = history.render(cfg.history_window_pairs, cfg.prompt_token_window);
      llm::CompletionRequest req;
      req.prompt = render_prompt(prompts.exploit, inputs);
      req.max_tokens = cfg.max_completion_tokens;
      auto result = llm::complete(strong, req, ledger, llm::CostRole::StrongExploit);
      out.trajectory.backend_calls += 1;
      step_usage += result.usage;

      std::string line = first_action_line(result.text);
      if (cfg.thought_mode && is_thought_line(line)) {
        out.trajectory.thoughts.push_back(line);
        history.record(line, "OK.");
        continue;
      }
      if (!episode.well_formed(line) || !episode.exploit_legal(line)) {
        ++parse_failures;
        if (parse_failures == 1) continue;  // re-prompt once
        line = episode.fallback_exploit_action();
        log::info("unparseable exploitation action; substituting fallback");
      }
      action = line;
      got_action = true;
    }
    if (!got_action) break;  // call cap exhausted

    env::Feedback fb = episode.step(action);
    out.plan.push_back(action);

    StepRecord rec;
    rec.index = i;
    rec.action = action;
    rec.feedback = fb.text;
    rec.reward = fb.reward;
    rec.done = fb.done;
    rec.state_fp = episode.state_fingerprint();
    rec.usage = step_usage;
    out.trajectory.steps.push_back(std::move(rec));
    history.record(action, fb.text);

    if (fb.done) {
      out.trajectory.terminated_by = TerminatedBy::EnvComplete;
      break;
    }
  }
  return out;
}

// ── Episode drivers ─────────────────────────────────────────────

namespace {

bool full_goal_reward(const env::Episode& episode) {
  return episode.cumulative_reward() >= episode.goal_reward() - 1e-9;
}

void fill_metrics(EpisodeResult& result, const Trajectory& metrics_trajectory) {
  result.steps_for_metrics = static_cast<int>(metrics_trajectory.steps.size());
  for (size_t i = 0; i < metrics_trajectory.steps.size(); ++i) {
    if (metrics_trajectory.steps[i].reward > 0) {
      result.first_reward_step = static_cast<int>(i) + 1;
      break;
    }
  }
}

}  // namespace

EpisodeResult run_wese(env::Episode& episode, llm::CompletionBackend& weak,
                       llm::CompletionBackend& strong, const PromptSet& prompts,
                       const OrchestratorConfig& cfg, AgentMode mode, llm::CostLedger ledger) {
  cfg.budgets.validate();
  EpisodeResult result;
  result.task_id = episode.task().id;
  llm::CostRole explore_role =
      mode == AgentMode::Sese ? llm::CostRole::StrongExplore : llm::CostRole::WeakExplore;

  try {
    env::Feedback initial = episode.reset();
    auto explored = explore_phase(episode, initial.text, weak, prompts, cfg, ledger, explore_role);
    result.explore = explored.trajectory;

    result.graph = kg::construct_graph(explored.triplets);
    result.task_entities = extract_task_entities(result.graph.entities(), episode.task(), weak,
                                                 prompts.entities, ledger, cfg.max_completion_tokens);
    result.retrieved = retrieve(result.graph, result.task_entities, cfg.retrieval);

    env::Feedback initial_again = episode.reset();  // s_0 again for exploitation
    auto exploited =
        exploit_phase(episode, initial_again.text, strong, prompts, result.retrieved, cfg, ledger);
    result.exploit = exploited.trajectory;
    result.plan = exploited.plan;

    result.total_reward = episode.cumulative_reward();
    result.success =
        result.exploit.terminated_by == TerminatedBy::EnvComplete && full_goal_reward(episode);
    fill_metrics(result, result.exploit);
  } catch (const llm::BackendError& e) {
    result.error = std::string("backend error: ") + e.what();
    result.explore.terminated_by =
        result.explore.steps.empty() && result.exploit.steps.empty() ? TerminatedBy::Error
                                                                     : result.explore.terminated_by;
    if (!result.explore.steps.empty() || !result.graph.empty()) {
      result.exploit.terminated_by = TerminatedBy::Error;
    }
    result.success = false;
  }
  result.ledger = snapshot_ledger(ledger);
  return result;
}

EpisodeResult run_coupled_baseline(env::Episode& episode, llm::CompletionBackend& backend,
                                   const PromptSet& prompts, const OrchestratorConfig& cfg,
                                   llm::CostLedger ledger) {
  cfg.budgets.validate();
  EpisodeResult result;
  result.task_id = episode.task().id;
  result.exploit.phase = "coupled";
  result.exploit.terminated_by = TerminatedBy::Budget;
  const long long call_cap =
      static_cast<long long>(cfg.backend_call_factor) * cfg.budgets.n_exploit + 1;

  try {
    env::Feedback initial = episode.reset();
    History history(initial.text);

    for (int i = 0; i < cfg.budgets.n_exploit; ++i) {
      if (episode.done()) {
        result.exploit.terminated_by = TerminatedBy::EnvComplete;
        break;
      }
      std::string action;
      llm::TokenUsage step_usage;
      bool got_action = false;
      int parse_failures = 0;
      while (!got_action) {
        if (result.exploit.backend_calls >= call_cap) break;
        RenderInputs inputs;
        inputs.task = episode.task().description;
        inputs.history = history.render(cfg.history_window_pairs, cfg.prompt_token_window);
        llm::CompletionRequest req;
        req.prompt = render_prompt(prompts.coupled, inputs);
        req.max_tokens = cfg.max_completion_tokens;
        auto completion = llm::complete(backend, req, ledger, llm::CostRole::StrongExploit);
        result.exploit.backend_calls += 1;
        step_usage += completion.usage;

        std::string line = first_action_line(completion.text);
        if (cfg.thought_mode && is_thought_line(line)) {
          result.exploit.thoughts.push_back(line);
          history.record(line, "OK.");
          continue;
        }
        if (!episode.well_formed(line) || !episode.exploit_legal(line)) {
          ++parse_failures;
          if (parse_failures == 1) continue;
          line = episode.fallback_exploit_action();
        }
        action = line;
        got_action = true;
      }
      if (!got_action) break;

      env::Feedback fb = episode.step(action);
      result.plan.push_back(action);
      StepRecord rec;
      rec.index = i;
      rec.action = action;
      rec.feedback = fb.text;
      rec.reward = fb.reward;
      rec.done = fb.done;
      rec.state_fp = episode.state_fingerprint();
      rec.usage = step_usage;
      result.exploit.steps.push_back(std::move(rec));
      history.record(action, fb.text);
      if (fb.done) {
        result.exploit.terminated_by = TerminatedBy::EnvComplete;
        break;
      }
    }
    result.total_reward = episode.cumulative_reward();
    result.success =
        result.exploit.terminated_by == TerminatedBy::EnvComplete && full_goal_reward(episode);
    fill_metrics(result, result.exploit);
  } catch (const llm::BackendError& e) {
    result.error = std::string("backend error: ") + e.what();
    result.exploit.terminated_by = TerminatedBy::Error;
    result.success = false;
  }
  result.ledger = snapshot_ledger(ledger);
  return result;
}

}  // namespace wese::orch
