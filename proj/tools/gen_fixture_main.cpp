// Regenerates fixtures/e2e: a miniature household world plus recorded
// replay transcripts for a deterministic WESE episode suite. The first task
// is required to solve with a plan of exactly five actions.

#include <filesystem>
#include <fstream>
#include <iostream>

#include "json.hpp"
#include "wese/errors.hpp"
#include "wese/harness.hpp"
#include "wese/orchestrator.hpp"
#include "wese/rule_agents.hpp"
#include "wese/world.hpp"

namespace fs = std::filesystem;
using namespace wese;

namespace {

struct RecordedEpisode {
  orch::EpisodeResult result;
  std::vector<llm::TranscriptEntry> weak;
  std::vector<llm::TranscriptEntry> strong;
};

RecordedEpisode record_wese_episode(const env::WorldBundle& bundle, const std::string& task_id,
                                    const orch::PromptSet& prompts, const orch::OrchestratorConfig& cfg) {
  rule::HouseholdWeakAgent weak_rule;
  rule::HouseholdPlannerAgent strong_rule;
  llm::RecordingBackend weak(weak_rule);
  llm::RecordingBackend strong(strong_rule);
  auto episode = env::make_episode(bundle, task_id);
  RecordedEpisode out;
  out.result = orch::run_wese(*episode, weak, strong, prompts, cfg, orch::AgentMode::Wese,
                              llm::make_default_ledger());
  out.weak = weak.recorded();
  out.strong = strong.recorded();
  return out;
}

}  // namespace

int main(int argc, char** argv) {
  std::string out_dir = argc > 1 ? argv[1] : "fixtures/e2e";
  orch::PromptSet prompts = orch::PromptSet::load_dir("prompts/household", "act");
  orch::OrchestratorConfig cfg;
  cfg.budgets = {50, 50};

  for (uint64_t seed = 1; seed < 400; ++seed) {
    env::WorldBundle bundle;
    try {
      bundle = env::generate_bundle("household", seed, 12);
    } catch (const ConfigError&) {
      continue;
    }
    std::string plan5_task;
    std::vector<std::string> extra_tasks;
    for (const auto& task : bundle.tasks()) {
      auto recorded = record_wese_episode(bundle, task.id, prompts, cfg);
      if (!recorded.result.success) continue;
      if (recorded.result.plan.size() == 5 && plan5_task.empty()) {
        plan5_task = task.id;
      } else if (extra_tasks.size() < 2) {
        extra_tasks.push_back(task.id);
      }
    }
    if (plan5_task.empty() || extra_tasks.size() < 2) continue;

    // Trim the world to the three selected tasks, the plan-5 episode first.
    std::vector<std::string> keep{plan5_task, extra_tasks[0], extra_tasks[1]};
    env::WorldBundle trimmed = bundle;
    trimmed.world.tasks.clear();
    for (const auto& id : keep) {
      trimmed.world.tasks.push_back(*bundle.world.find_task(id));
    }

    fs::create_directories(out_dir);
    env::save_bundle(trimmed, out_dir + "/world.json");
    for (const auto& id : keep) {
      auto recorded = record_wese_episode(trimmed, id, prompts, cfg);
      if (!recorded.result.success) {
        std::cerr << "trimmed world no longer solves " << id << "\n";
        return 1;
      }
      llm::save_transcript(recorded.weak, out_dir + "/" + id + ".weak.jsonl");
      llm::save_transcript(recorded.strong, out_dir + "/" + id + ".strong.jsonl");
    }

    nlohmann::ordered_json config;
    config["format_version"] = 1;
    config["world"] = out_dir + "/world.json";
    config["prompts_dir"] = "prompts/household";
    config["method"] = "act-wese";
    config["budgets"] = {{"explore", 50}, {"exploit", 50}};
    config["retrieval"] = {{"mode", "one-hop"}, {"cap", nullptr}};
    config["backends"] = {
        {"weak", {{"kind", "replay"}, {"transcript", out_dir + "/{task}.weak.jsonl"}}},
        {"strong", {{"kind", "replay"}, {"transcript", out_dir + "/{task}.strong.jsonl"}}}};
    config["pricing"] = {{"weak-explore", 0.0},
                         {"strong-explore", 0.02},
                         {"strong-exploit", 0.02},
                         {"extraction", 0.0}};
    config["workers"] = 1;
    config["out_dir"] = "wese-out/e2e";
    std::ofstream(out_dir + "/config.json") << config.dump(2) << "\n";

    std::cout << "fixture seed " << seed << ", episode " << plan5_task << " (plan length 5), plus "
              << extra_tasks[0] << ", " << extra_tasks[1] << "\n";
    return 0;
  }
  std::cerr << "no suitable world found\n";
  return 1;
}
