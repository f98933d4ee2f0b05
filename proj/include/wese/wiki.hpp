#pragma once

#include <cstdint>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "wese/env.hpp"

namespace wese::env::wiki {

struct QaInstance {
  std::string id;
  std::string question;
  std::vector<std::string> answers;      // any match counts
  std::vector<std::string> supporting;   // article titles
  std::vector<std::string> witness;
};

struct FeverInstance {
  std::string id;
  std::string claim;
  std::string label;  // "True" | "False" | "Not Clear"
  std::vector<std::string> supporting;
  std::vector<std::string> witness;
};

struct Corpus {
  int format_version = 1;
  uint64_t seed = 0;
  // title -> paragraphs -> sentences
  std::map<std::string, std::vector<std::vector<std::string>>> articles;
  std::vector<QaInstance> qa;
  std::vector<FeverInstance> fever;

  const QaInstance* find_qa(const std::string& id) const;
  const FeverInstance* find_fever(const std::string& id) const;
  void validate() const;  // supporting titles exist, answers non-empty
};

/// Deterministic miniature corpus with QA and claim-verification instances;
/// each instance carries a witness action sequence.
Corpus generate_corpus(uint64_t seed, int qa_count, int fever_count);

/// Titles ranked by token-overlap score |shared| / |union| against the
/// query, ties broken lexicographically; used when search finds no title.
std::vector<std::string> similar_titles(const Corpus& corpus, const std::string& query, int k);

/// Answer canonical form: lower case, articles and punctuation stripped,
/// whitespace collapsed.
std::string normalize_answer(std::string_view raw);

struct State {
  const Corpus* corpus = nullptr;
  std::string task_id;
  bool is_fever = false;
  std::optional<std::string> page;  // title opened by the last successful search
  std::string keyword;              // active lookup keyword
  size_t cursor = 0;                // next sentence index to scan for keyword
  double cumulative_reward = 0.0;
  bool done = false;

  uint64_t fingerprint() const;
};

std::pair<State, Feedback> reset(const Corpus& corpus, const std::string& task_id);
std::pair<State, Feedback> step(const State& state, const std::string& action);

struct ParsedAction {
  enum Kind { Search, Lookup, Finish, Invalid } kind = Invalid;
  std::string arg;
};
ParsedAction parse_action(const std::string& action);

bool explore_legal(const std::string& action);  // search / lookup
bool exploit_legal(const std::string& action);  // full grammar

class WikiEpisode : public Episode {
 public:
  WikiEpisode(const Corpus& corpus, Task descriptor);

  Feedback reset() override;
  Feedback step(const std::string& action) override;
  bool done() const override { return state_.done; }
  double cumulative_reward() const override { return state_.cumulative_reward; }
  double goal_reward() const override { return 1.0; }
  uint64_t state_fingerprint() const override { return state_.fingerprint(); }
  bool well_formed(const std::string& action) const override;
  bool explore_legal(const std::string& action) const override;
  bool exploit_legal(const std::string& action) const override;
  std::string fallback_explore_action() const override { return "lookup[the]"; }
  std::string fallback_exploit_action() const override { return "lookup[the]"; }
  const Task& task() const override { return descriptor_; }
  std::string kind() const override { return "wiki-qa"; }

 private:
  const Corpus& corpus_;
  Task descriptor_;
  State state_;
};

}  // namespace wese::env::wiki
