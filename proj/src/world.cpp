#include "wese/world.hpp"

#include <fstream>

#include "json.hpp"
#include "wese/errors.hpp"

namespace wese::env {

namespace {

using nlohmann::json;
using nlohmann::ordered_json;

constexpr int kFormatVersion = 1;

void check_version(const json& j, const std::string& path) {
  if (!j.contains("format_version") || !j["format_version"].is_number_integer()) {
    throw ConfigError(path + ": missing format_version");
  }
  int v = j["format_version"].get<int>();
  if (v != kFormatVersion) {
    throw ConfigError(path + ": unsupported format_version " + std::to_string(v));
  }
}

ordered_json household_to_json(const household::World& w) {
  ordered_json j;
  j["format_version"] = kFormatVersion;
  j["kind"] = "household";
  j["seed"] = w.seed;
  j["rooms"] = w.rooms;
  ordered_json exits = ordered_json::object();
  for (const auto& room : w.rooms) exits[room] = w.exits.at(room);
  j["exits"] = exits;
  ordered_json receps = ordered_json::array();
  for (const auto& r : w.receptacles) {
    receps.push_back({{"name", r.name}, {"room", r.room}, {"openable", r.openable}, {"surface", r.surface}});
  }
  j["receptacles"] = receps;
  j["objects"] = w.objects;
  ordered_json tasks = ordered_json::array();
  for (const auto& t : w.tasks) {
    ordered_json tj;
    tj["id"] = t.id;
    tj["description"] = t.description;
    tj["template"] = household::template_name(t.tmpl);
    tj["reward_style"] = t.reward_style == household::RewardStyle::Binary ? "binary" : "milestone";
    tj["object"] = t.object;
    tj["target"] = t.target;
    tj["agent_start"] = t.agent_start;
    tj["placement"] = t.placement;
    tj["witness"] = t.witness;
    tasks.push_back(std::move(tj));
  }
  j["tasks"] = tasks;
  return j;
}

household::World household_from_json(const json& j, const std::string& path) {
  household::World w;
  w.seed = j.value("seed", 0ull);
  w.rooms = j.at("rooms").get<std::vector<std::string>>();
  for (const auto& [room, targets] : j.at("exits").items()) {
    w.exits[room] = targets.get<std::vector<std::string>>();
  }
  for (const auto& rj : j.at("receptacles")) {
    w.receptacles.push_back(household::Receptacle{rj.at("name").get<std::string>(),
                                                  rj.at("room").get<std::string>(),
                                                  rj.value("openable", false), rj.value("surface", false)});
  }
  w.objects = j.at("objects").get<std::vector<std::string>>();
  for (const auto& tj : j.at("tasks")) {
    household::HouseholdTask t;
    t.id = tj.at("id").get<std::string>();
    t.description = tj.at("description").get<std::string>();
    auto tmpl = household::template_from(tj.at("template").get<std::string>());
    if (!tmpl) throw ConfigError(path + ": bad task template in " + t.id);
    t.tmpl = *tmpl;
    t.reward_style = tj.value("reward_style", std::string("binary")) == "milestone"
                         ? household::RewardStyle::Milestone
                         : household::RewardStyle::Binary;
    t.object = tj.at("object").get<std::string>();
    t.target = tj.at("target").get<std::string>();
    t.agent_start = tj.at("agent_start").get<std::string>();
    for (const auto& [obj, recep] : tj.at("placement").items()) t.placement[obj] = recep.get<std::string>();
    t.witness = tj.at("witness").get<std::vector<std::string>>();
    w.tasks.push_back(std::move(t));
  }
  return w;
}

ordered_json corpus_to_json(const wiki::Corpus& c) {
  ordered_json j;
  j["format_version"] = kFormatVersion;
  j["kind"] = "wiki-qa";
  j["seed"] = c.seed;
  ordered_json articles = ordered_json::object();
  for (const auto& [title, paras] : c.articles) articles[title] = paras;
  j["articles"] = articles;
  ordered_json qa = ordered_json::array();
  for (const auto& q : c.qa) {
    qa.push_back({{"id", q.id},
                  {"question", q.question},
                  {"answers", q.answers},
                  {"supporting", q.supporting},
                  {"witness", q.witness}});
  }
  j["qa"] = qa;
  ordered_json fever = ordered_json::array();
  for (const auto& f : c.fever) {
    fever.push_back({{"id", f.id},
                     {"claim", f.claim},
                     {"label", f.label},
                     {"supporting", f.supporting},
                     {"witness", f.witness}});
  }
  j["fever"] = fever;
  return j;
}

wiki::Corpus corpus_from_json(const json& j, const std::string& path) {
  wiki::Corpus c;
  c.seed = j.value("seed", 0ull);
  for (const auto& [title, paras] : j.at("articles").items()) {
    c.articles[title] = paras.get<std::vector<std::vector<std::string>>>();
  }
  for (const auto& qj : j.at("qa")) {
    wiki::QaInstance q;
    q.id = qj.at("id").get<std::string>();
    q.question = qj.at("question").get<std::string>();
    q.answers = qj.at("answers").get<std::vector<std::string>>();
    q.supporting = qj.value("supporting", std::vector<std::string>{});
    q.witness = qj.value("witness", std::vector<std::string>{});
    c.qa.push_back(std::move(q));
  }
  for (const auto& fj : j.at("fever")) {
    wiki::FeverInstance f;
    f.id = fj.at("id").get<std::string>();
    f.claim = fj.at("claim").get<std::string>();
    f.label = fj.at("label").get<std::string>();
    f.supporting = fj.value("supporting", std::vector<std::string>{});
    f.witness = fj.value("witness", std::vector<std::string>{});
    c.fever.push_back(std::move(f));
  }
  try {
    c.validate();
  } catch (const ConfigError& e) {
    throw ConfigError(path + ": " + e.what());
  }
  return c;
}

}  // namespace

std::vector<Task> WorldBundle::tasks() const {
  std::vector<Task> out;
  if (kind == "household") {
    for (const auto& t : world.tasks) out.push_back(Task{t.id, t.description, source});
  } else {
    for (const auto& q : corpus.qa) out.push_back(Task{q.id, q.question, source});
    for (const auto& f : corpus.fever) {
      out.push_back(Task{f.id, "Claim: " + f.claim + " Is the claim True, False, or Not Clear?", source});
    }
  }
  return out;
}

Task WorldBundle::task_by_id(const std::string& id) const {
  for (const auto& t : tasks()) {
    if (t.id == id) return t;
  }
  throw ConfigError("unknown task id: " + id);
}

std::vector<std::string> WorldBundle::witness(const std::string& task_id) const {
  if (kind == "household") {
    if (const auto* t = world.find_task(task_id)) return t->witness;
  } else {
    if (const auto* q = corpus.find_qa(task_id)) return q->witness;
    if (const auto* f = corpus.find_fever(task_id)) return f->witness;
  }
  throw ConfigError("no stored witness for task: " + task_id);
}

WorldBundle generate_bundle(const std::string& kind, uint64_t seed, int count, bool milestone_rewards) {
  if (count < 1) throw ConfigError("count must be >= 1");
  WorldBundle bundle;
  bundle.kind = kind;
  bundle.source = kind + ":" + std::to_string(seed);
  if (kind == "household") {
    bundle.world = household::generate_world(seed, count);
    if (milestone_rewards) {
      for (auto& t : bundle.world.tasks) t.reward_style = household::RewardStyle::Milestone;
    }
  } else if (kind == "wiki-qa") {
    int qa = (count + 1) / 2;
    bundle.corpus = wiki::generate_corpus(seed, qa, count - qa);
  } else {
    throw ConfigError("unknown environment kind: " + kind);
  }
  // Solvability is guaranteed by construction; fail loudly here if not.
  for (const auto& t : bundle.tasks()) {
    WitnessReport report = replay_witness(bundle, t.id);
    if (!report.ok) {
      throw ConfigError("generated witness does not solve " + t.id + ": " + report.detail);
    }
  }
  return bundle;
}

WorldBundle load_bundle(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open world file: " + path);
  json j = json::parse(in, nullptr, false);
  if (j.is_discarded()) throw ConfigError("invalid JSON in " + path);
  check_version(j, path);
  WorldBundle bundle;
  bundle.kind = j.value("kind", std::string());
  bundle.source = path;
  if (bundle.kind == "household") {
    bundle.world = household_from_json(j, path);
  } else if (bundle.kind == "wiki-qa") {
    bundle.corpus = corpus_from_json(j, path);
  } else {
    throw ConfigError(path + ": unknown kind '" + bundle.kind + "'");
  }
  return bundle;
}

void save_bundle(const WorldBundle& bundle, const std::string& path) {
  ordered_json j = bundle.kind == "household" ? household_to_json(bundle.world) : corpus_to_json(bundle.corpus);
  std::ofstream out(path, std::ios::binary);
  if (!out) throw ConfigError("cannot write world file: " + path);
  out << j.dump(2) << "\n";
}

std::unique_ptr<Episode> make_episode(const WorldBundle& bundle, const std::string& task_id) {
  Task descriptor = bundle.task_by_id(task_id);
  if (bundle.kind == "household") {
    const auto* task = bundle.world.find_task(task_id);
    return std::make_unique<household::HouseholdEpisode>(bundle.world, *task, std::move(descriptor));
  }
  return std::make_unique<wiki::WikiEpisode>(bundle.corpus, std::move(descriptor));
}

WitnessReport replay_witness(const WorldBundle& bundle, const std::string& task_id) {
  WitnessReport report;
  auto episode = make_episode(bundle, task_id);
  episode->reset();
  for (const auto& action : bundle.witness(task_id)) {
    if (episode->done()) {
      report.detail = "witness continues after completion";
      return report;
    }
    Feedback fb = episode->step(action);
    ++report.steps;
    if (fb.text == kNothingHappens) {
      report.detail = "illegal witness action at step " + std::to_string(report.steps) + ": " + action;
      return report;
    }
  }
  bool full_reward = false;
  if (bundle.kind == "household") {
    const auto* task = bundle.world.find_task(task_id);
    double want = task->reward_style == household::RewardStyle::Milestone ? 100.0 : 1.0;
    full_reward = episode->cumulative_reward() == want;
  } else {
    full_reward = episode->cumulative_reward() == 1.0;
  }
  if (!episode->done()) {
    report.detail = "witness did not reach completion";
  } else if (!full_reward) {
    report.detail = "witness finished without full reward";
  } else {
    report.ok = true;
  }
  return report;
}

}  // namespace wese::env
