#include "wese/prompts.hpp"

#include <fstream>
#include <sstream>

#include "wese/errors.hpp"
#include "wese/text.hpp"

namespace wese::orch {

std::string prompt_role_name(PromptRole role) {
  switch (role) {
    case PromptRole::Explore: return "explore";
    case PromptRole::Exploit: return "exploit";
    case PromptRole::Extract: return "extract";
    case PromptRole::EntityExtract: return "entity-extract";
    case PromptRole::Coupled: return "coupled";
  }
  return "?";
}

namespace {

std::vector<std::string> required_slots(PromptRole role) {
  switch (role) {
    case PromptRole::Explore: return {"task", "history"};
    case PromptRole::Exploit: return {"task", "knowledge", "history"};
    case PromptRole::Extract: return {"feedback"};
    case PromptRole::EntityExtract: return {"task", "entities"};
    case PromptRole::Coupled: return {"task", "history"};
  }
  return {};
}

}  // namespace

void PromptTemplate::check_slots() const {
  for (const auto& slot : required_slots(role)) {
    if (!contains_slot(text, slot)) {
      throw ConfigError("prompt template for role '" + prompt_role_name(role) +
                        "' is missing mandatory slot {{" + slot + "}}");
    }
  }
}

PromptTemplate load_template(PromptRole role, const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ConfigError("cannot open prompt template: " + path);
  std::ostringstream buf;
  buf << in.rdbuf();
  PromptTemplate tmpl{role, buf.str(), {}};
  tmpl.check_slots();
  return tmpl;
}

PromptSet PromptSet::load_dir(const std::string& dir, const std::string& flavor) {
  if (flavor != "act" && flavor != "react") {
    throw ConfigError("prompt flavor must be 'act' or 'react', got '" + flavor + "'");
  }
  PromptSet set;
  set.explore = load_template(PromptRole::Explore, dir + "/explore.txt");
  set.exploit = load_template(PromptRole::Exploit, dir + "/exploit_" + flavor + ".txt");
  set.extract = load_template(PromptRole::Extract, dir + "/extract.txt");
  set.entities = load_template(PromptRole::EntityExtract, dir + "/entities.txt");
  set.coupled = load_template(PromptRole::Coupled, dir + "/" + flavor + ".txt");
  return set;
}

std::string knowledge_block(const std::vector<kg::KnowledgeTriplet>& knowledge) {
  if (knowledge.empty()) return "";
  std::string out = "Known facts:\n";
  for (const auto& t : knowledge) {
    out += kg::to_line(t);
    out += '\n';
  }
  return out;
}

std::string render_prompt(const PromptTemplate& tmpl, const RenderInputs& inputs) {
  tmpl.check_slots();
  std::string few;
  for (size_t i = 0; i < tmpl.few_shots.size(); ++i) {
    if (i > 0) few += "\n\n";
    few += tmpl.few_shots[i];
  }
  std::vector<std::pair<std::string, std::string>> slots = {
      {"few_shots", few},
      {"task", inputs.task},
      {"history", inputs.history},
      {"knowledge", knowledge_block(inputs.knowledge)},
      {"feedback", inputs.feedback},
      {"entities", inputs.entities},
  };
  std::string out = substitute_slots(tmpl.text, slots);
  // Mandatory content must have landed in the prompt; the knowledge block
  // alone may legitimately render empty.
  for (const auto& slot : required_slots(tmpl.role)) {
    if (slot == "knowledge" && inputs.knowledge.empty()) continue;
    std::string value;
    for (const auto& [k, v] : slots) {
      if (k == slot) value = v;
    }
    if (value.empty()) {
      throw ConfigError("mandatory slot {{" + slot + "}} for role '" + prompt_role_name(tmpl.role) +
                        "' rendered empty");
    }
  }
  if (trim(out).empty()) throw ConfigError("prompt rendered empty");
  return out;
}

}  // namespace wese::orch
