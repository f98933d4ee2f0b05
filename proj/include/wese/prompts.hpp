#pragma once

#include <string>
#include <vector>

#include "wese/kg.hpp"

namespace wese::orch {

enum class PromptRole { Explore, Exploit, Extract, EntityExtract, Coupled };

std::string prompt_role_name(PromptRole role);

/// Plain-text template with named {{slot}} placeholders. Stable layout:
/// few-shots, task, knowledge block, history, action cue.
struct PromptTemplate {
  PromptRole role = PromptRole::Explore;
  std::string text;
  std::vector<std::string> few_shots;  // joined into {{few_shots}} when present

  /// Validates that the role's mandatory slots appear in the text.
  void check_slots() const;  // throws ConfigError
};

PromptTemplate load_template(PromptRole role, const std::string& path);

/// The template files one run needs. `flavor` is "act" or "react": it picks
/// exploit_<flavor>.txt and <flavor>.txt for the coupled baseline.
struct PromptSet {
  PromptTemplate explore;
  PromptTemplate exploit;
  PromptTemplate extract;
  PromptTemplate entities;
  PromptTemplate coupled;

  static PromptSet load_dir(const std::string& dir, const std::string& flavor);
};

struct RenderInputs {
  std::string task;
  std::string history;
  std::vector<kg::KnowledgeTriplet> knowledge;
  std::string feedback;  // extract role
  std::string entities;  // entity-extract role
};

/// One triplet per line under a "Known facts:" header; empty list renders to
/// an empty string so the block vanishes from the prompt.
std::string knowledge_block(const std::vector<kg::KnowledgeTriplet>& knowledge);

/// Deterministic text. Throws ConfigError when a mandatory slot cannot be
/// filled.
std::string render_prompt(const PromptTemplate& tmpl, const RenderInputs& inputs);

}  // namespace wese::orch
