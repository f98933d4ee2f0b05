#pragma once

#include <optional>
#include <set>
#include <string>
#include <vector>

#include "json.hpp"
#include "wese/env.hpp"
#include "wese/kg.hpp"
#include "wese/llm.hpp"
#include "wese/prompts.hpp"

namespace wese::orch {

/// Reserved completion token that ends exploration early.
inline constexpr const char* kDoneExploring = "DONE_EXPLORING";

struct PhaseBudget {
  int n_explore = 50;
  int n_exploit = 50;
  void validate() const;  // both >= 1
};

enum class TerminatedBy { Budget, EnvComplete, AgentTerminate, Error };
std::string terminated_by_name(TerminatedBy t);
TerminatedBy terminated_by_from(const std::string& name);

struct StepRecord {
  int index = 0;
  std::string action;
  std::string feedback;
  double reward = 0.0;
  bool done = false;
  uint64_t state_fp = 0;
  llm::TokenUsage usage;       // all completion calls behind this step
  int extracted_triplets = 0;  // exploration steps only
  long long knowledge_size = 0;  // |K| after this step's union
};

struct Trajectory {
  std::string phase;  // "explore" | "exploit" | "coupled"
  std::vector<StepRecord> steps;
  TerminatedBy terminated_by = TerminatedBy::Budget;
  long long backend_calls = 0;  // includes thought emissions and re-prompts
  std::vector<std::string> thoughts;
};

struct RetrievalConfig {
  enum class Mode { OneHop, Pairwise };
  Mode mode = Mode::OneHop;
  std::optional<int> cap;  // decision tasks: none; QA default: 10
};

struct OrchestratorConfig {
  PhaseBudget budgets;
  RetrievalConfig retrieval;
  bool thought_mode = false;  // react flavor: "think: ..." lines allowed
  int history_window_pairs = 20;
  long long prompt_token_window = 3072;
  int max_completion_tokens = 64;
  // Thought emissions consume calls, not env steps; this caps runaway loops.
  int backend_call_factor = 3;
};

struct LedgerSnapshot {
  struct RoleLine {
    std::string role;
    llm::TokenUsage usage;
    long long calls = 0;
    double price_per_1k = 0.0;
    long long expense_cents = 0;
  };
  std::vector<RoleLine> roles;
  std::vector<std::pair<long long, std::string>> events;  // (seq, role)
  long long total_expense_cents = 0;
};

LedgerSnapshot snapshot_ledger(const llm::CostLedger& ledger);

struct EpisodeResult {
  std::string task_id;
  std::string method;  // stamped by the harness
  bool success = false;
  double total_reward = 0.0;
  int steps_for_metrics = 0;  // exploitation steps (decoupled) or loop steps
  std::optional<int> first_reward_step;  // 1-based, in the metrics trajectory
  std::optional<std::string> error;
  Trajectory explore;
  Trajectory exploit;
  std::vector<std::string> plan;
  kg::KnowledgeGraph graph;
  std::set<kg::EntityId> task_entities;
  std::vector<kg::KnowledgeTriplet> retrieved;
  LedgerSnapshot ledger;
};

nlohmann::ordered_json episode_to_json(const EpisodeResult& result);
EpisodeResult episode_from_json(const nlohmann::json& j);

/// Rolling (observation, action) dialogue for prompt rendering. When the
/// estimated token count exceeds the window, only the most recent pairs are
/// kept.
class History {
 public:
  explicit History(std::string initial_observation);

  void record(const std::string& action, const std::string& observation);
  const std::string& latest() const { return latest_; }

  std::string render(int window_pairs, long long token_window) const;

 private:
  std::vector<std::pair<std::string, std::string>> turns_;  // (observation, action)
  std::string latest_;
};

/// First non-empty line of a completion, stripped of "> " / "Action:" cues.
std::string first_action_line(const std::string& completion);
bool is_thought_line(const std::string& line);
bool is_done_exploring(const std::string& line);

// ── Phases (Algorithm 3) ────────────────────────────────────────

struct ExploreOutcome {
  std::vector<kg::KnowledgeTriplet> triplets;  // K: union over steps, first-seen order
  Trajectory trajectory;
};

/// Exploration loop: act with the weak model, step the environment, extract
/// triplets from each feedback, union into K. The episode must be freshly
/// reset; `initial_observation` is the reset feedback.
ExploreOutcome explore_phase(env::Episode& episode, const std::string& initial_observation,
                             llm::CompletionBackend& weak, const PromptSet& prompts,
                             const OrchestratorConfig& cfg, llm::CostLedger& ledger,
                             llm::CostRole explore_role);

/// Renders the extraction prompt over the feedback and parses the completion
/// into triplets. Empty feedback short-circuits without a backend call.
std::vector<kg::KnowledgeTriplet> extract_triplets(const std::string& feedback,
                                                   llm::CompletionBackend& backend,
                                                   const PromptTemplate& extract_tpl,
                                                   llm::CostLedger& ledger, int max_tokens);

/// Asks the backend which graph entities the task involves; names outside
/// the graph's entity set are dropped (and logged).
std::set<kg::EntityId> extract_task_entities(const std::set<std::string>& graph_entities,
                                             const env::Task& task, llm::CompletionBackend& backend,
                                             const PromptTemplate& entity_tpl, llm::CostLedger& ledger,
                                             int max_tokens);

std::vector<kg::KnowledgeTriplet> retrieve(const kg::KnowledgeGraph& graph,
                                           const std::set<kg::EntityId>& task_entities,
                                           const RetrievalConfig& cfg);

struct ExploitOutcome {
  std::vector<std::string> plan;
  Trajectory trajectory;
};

/// Exploitation loop: retrieved triplets are injected into every prompt; the
/// loop stops on budget or the first completed feedback. The episode must be
/// reset to the same initial state exploration started from.
ExploitOutcome exploit_phase(env::Episode& episode, const std::string& initial_observation,
                             llm::CompletionBackend& strong, const PromptSet& prompts,
                             const std::vector<kg::KnowledgeTriplet>& retrieved,
                             const OrchestratorConfig& cfg, llm::CostLedger& ledger);

enum class AgentMode { Wese, Sese };

/// The full decoupled pipeline: explore, build the graph, pick task
/// entities, retrieve, exploit. Sese relabels exploration cost as strong.
EpisodeResult run_wese(env::Episode& episode, llm::CompletionBackend& weak,
                       llm::CompletionBackend& strong, const PromptSet& prompts,
                       const OrchestratorConfig& cfg, AgentMode mode, llm::CostLedger ledger);

/// Interleaved baseline: one loop whose prompt accumulates all feedback.
/// With thought_mode, non-acting "think:" lines consume a call but no step.
EpisodeResult run_coupled_baseline(env::Episode& episode, llm::CompletionBackend& backend,
                                   const PromptSet& prompts, const OrchestratorConfig& cfg,
                                   llm::CostLedger ledger);

}  // namespace wese::orch
