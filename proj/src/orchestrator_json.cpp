#include "wese/errors.hpp"
#include "wese/orchestrator.hpp"
#include "wese/text.hpp"

namespace wese::orch {

using nlohmann::json;
using nlohmann::ordered_json;

LedgerSnapshot snapshot_ledger(const llm::CostLedger& ledger) {
  LedgerSnapshot snap;
  for (int i = 0; i < llm::kCostRoleCount; ++i) {
    auto role = static_cast<llm::CostRole>(i);
    auto totals = ledger.totals(role);
    snap.roles.push_back(LedgerSnapshot::RoleLine{std::string(llm::role_name(role)), totals.usage,
                                                  totals.calls, ledger.price(role),
                                                  ledger.expense_cents(role)});
  }
  for (const auto& event : ledger.events()) {
    snap.events.emplace_back(event.seq, std::string(llm::role_name(event.role)));
  }
  snap.total_expense_cents = ledger.total_expense_cents();
  return snap;
}

namespace {

ordered_json step_to_json(const StepRecord& s) {
  ordered_json j;
  j["index"] = s.index;
  j["action"] = s.action;
  j["feedback"] = s.feedback;
  j["reward"] = s.reward;
  j["done"] = s.done;
  j["state_fp"] = hex64(s.state_fp);
  j["prompt_tokens"] = s.usage.prompt_tokens;
  j["completion_tokens"] = s.usage.completion_tokens;
  j["extracted_triplets"] = s.extracted_triplets;
  j["knowledge_size"] = s.knowledge_size;
  return j;
}

StepRecord step_from_json(const json& j) {
  StepRecord s;
  s.index = j.at("index").get<int>();
  s.action = j.at("action").get<std::string>();
  s.feedback = j.at("feedback").get<std::string>();
  s.reward = j.at("reward").get<double>();
  s.done = j.at("done").get<bool>();
  s.state_fp = std::stoull(j.at("state_fp").get<std::string>(), nullptr, 16);
  s.usage.prompt_tokens = j.at("prompt_tokens").get<long long>();
  s.usage.completion_tokens = j.at("completion_tokens").get<long long>();
  s.extracted_triplets = j.value("extracted_triplets", 0);
  s.knowledge_size = j.value("knowledge_size", 0ll);
  return s;
}

ordered_json trajectory_to_json(const Trajectory& t) {
  ordered_json j;
  j["phase"] = t.phase;
  j["terminated_by"] = terminated_by_name(t.terminated_by);
  j["backend_calls"] = t.backend_calls;
  j["thoughts"] = t.thoughts;
  ordered_json steps = ordered_json::array();
  for (const auto& s : t.steps) steps.push_back(step_to_json(s));
  j["steps"] = steps;
  return j;
}

Trajectory trajectory_from_json(const json& j) {
  Trajectory t;
  t.phase = j.at("phase").get<std::string>();
  t.terminated_by = terminated_by_from(j.at("terminated_by").get<std::string>());
  t.backend_calls = j.value("backend_calls", 0ll);
  t.thoughts = j.value("thoughts", std::vector<std::string>{});
  for (const auto& sj : j.at("steps")) t.steps.push_back(step_from_json(sj));
  return t;
}

ordered_json ledger_to_json(const LedgerSnapshot& snap) {
  ordered_json j;
  ordered_json roles = ordered_json::array();
  for (const auto& r : snap.roles) {
    ordered_json rj;
    rj["role"] = r.role;
    rj["prompt_tokens"] = r.usage.prompt_tokens;
    rj["completion_tokens"] = r.usage.completion_tokens;
    rj["calls"] = r.calls;
    rj["price_per_1k"] = r.price_per_1k;
    rj["expense_cents"] = r.expense_cents;
    roles.push_back(std::move(rj));
  }
  j["roles"] = roles;
  ordered_json events = ordered_json::array();
  for (const auto& [seq, role] : snap.events) events.push_back(ordered_json::array({seq, role}));
  j["events"] = events;
  j["total_expense_cents"] = snap.total_expense_cents;
  return j;
}

LedgerSnapshot ledger_from_json(const json& j) {
  LedgerSnapshot snap;
  for (const auto& rj : j.at("roles")) {
    LedgerSnapshot::RoleLine line;
    line.role = rj.at("role").get<std::string>();
    line.usage.prompt_tokens = rj.at("prompt_tokens").get<long long>();
    line.usage.completion_tokens = rj.at("completion_tokens").get<long long>();
    line.calls = rj.at("calls").get<long long>();
    line.price_per_1k = rj.at("price_per_1k").get<double>();
    line.expense_cents = rj.at("expense_cents").get<long long>();
    snap.roles.push_back(std::move(line));
  }
  for (const auto& ej : j.at("events")) {
    snap.events.emplace_back(ej.at(0).get<long long>(), ej.at(1).get<std::string>());
  }
  snap.total_expense_cents = j.at("total_expense_cents").get<long long>();
  return snap;
}

}  // namespace

ordered_json episode_to_json(const EpisodeResult& r) {
  ordered_json j;
  j["format_version"] = 1;
  j["task_id"] = r.task_id;
  j["method"] = r.method;
  j["success"] = r.success;
  j["total_reward"] = r.total_reward;
  j["steps_for_metrics"] = r.steps_for_metrics;
  if (r.first_reward_step) {
    j["first_reward_step"] = *r.first_reward_step;
  } else {
    j["first_reward_step"] = nullptr;
  }
  if (r.error) {
    j["error"] = *r.error;
  } else {
    j["error"] = nullptr;
  }
  j["explore"] = trajectory_to_json(r.explore);
  j["exploit"] = trajectory_to_json(r.exploit);
  j["plan"] = r.plan;
  j["graph"] = kg::serialize(r.graph);
  ordered_json entities = ordered_json::array();
  for (const auto& e : r.task_entities) entities.push_back(e.name);
  j["task_entities"] = entities;
  ordered_json retrieved = ordered_json::array();
  for (const auto& t : r.retrieved) retrieved.push_back(kg::to_line(t));
  j["retrieved"] = retrieved;
  j["ledger"] = ledger_to_json(r.ledger);
  return j;
}

EpisodeResult episode_from_json(const json& j) {
  EpisodeResult r;
  r.task_id = j.at("task_id").get<std::string>();
  r.method = j.value("method", std::string());
  r.success = j.at("success").get<bool>();
  r.total_reward = j.at("total_reward").get<double>();
  r.steps_for_metrics = j.at("steps_for_metrics").get<int>();
  if (j.contains("first_reward_step") && !j["first_reward_step"].is_null()) {
    r.first_reward_step = j["first_reward_step"].get<int>();
  }
  if (j.contains("error") && !j["error"].is_null()) {
    r.error = j["error"].get<std::string>();
  }
  r.explore = trajectory_from_json(j.at("explore"));
  r.exploit = trajectory_from_json(j.at("exploit"));
  r.plan = j.at("plan").get<std::vector<std::string>>();
  r.graph = kg::deserialize(j.at("graph").get<std::string>());
  for (const auto& e : j.at("task_entities")) {
    auto id = kg::EntityId::from_raw(e.get<std::string>());
    if (id) r.task_entities.insert(*id);
  }
  for (const auto& line : j.at("retrieved")) {
    auto parsed = kg::parse_triplets(line.get<std::string>());
    for (auto& t : parsed.triplets) r.retrieved.push_back(std::move(t));
  }
  r.ledger = ledger_from_json(j.at("ledger"));
  return r;
}

}  // namespace wese::orch
