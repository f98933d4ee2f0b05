#include <random>

#include "doctest.h"
#include "wese/errors.hpp"
#include "wese/harness.hpp"
#include "wese/orchestrator.hpp"
#include "wese/rule_agents.hpp"
#include "wese/world.hpp"

using namespace wese;
using namespace wese::orch;

namespace {

/// Prompt-agnostic backend that pops a fixed line sequence; repeats the last
/// fallback once exhausted.
class Scripted : public llm::CompletionBackend {
 public:
  explicit Scripted(std::vector<std::string> lines, std::string fallback = "look around")
      : lines_(std::move(lines)), fallback_(std::move(fallback)) {}

  llm::CompletionResult complete(const llm::CompletionRequest& req) override {
    std::string text = next_ < lines_.size() ? lines_[next_++] : fallback_;
    llm::CompletionResult r;
    r.text = text;
    r.usage = {llm::estimate_tokens(req.prompt), llm::estimate_tokens(text)};
    ++calls_;
    return r;
  }
  std::string kind() const override { return "scripted"; }
  long long calls() const { return calls_; }

 private:
  std::vector<std::string> lines_;
  std::string fallback_;
  size_t next_ = 0;
  long long calls_ = 0;
};

env::household::World tiny_world() {
  env::household::World w;
  w.rooms = {"hall", "kitchen"};
  w.exits = {{"hall", {"kitchen"}}, {"kitchen", {"hall"}}};
  w.receptacles = {
      {"drawer 1", "hall", true, false},
      {"countertop 1", "hall", false, true},
      {"sinkbasin 1", "kitchen", false, false},
      {"shelf 1", "kitchen", false, true},
  };
  w.objects = {"apple 1", "knife 1"};
  return w;
}

env::household::HouseholdTask put_task() {
  env::household::HouseholdTask t;
  t.id = "t-put";
  t.tmpl = env::household::TaskTemplate::Put;
  t.object = "apple 1";
  t.target = "shelf 1";
  t.agent_start = "hall";
  t.placement = {{"apple 1", "countertop 1"}, {"knife 1", "drawer 1"}};
  t.description = "put apple 1 on shelf 1";
  return t;
}

env::WorldBundle tiny_bundle() {
  env::WorldBundle bundle;
  bundle.kind = "household";
  bundle.source = "test";
  bundle.world = tiny_world();
  bundle.world.tasks = {put_task()};
  return bundle;
}

PromptSet prompts() { return PromptSet::load_dir("prompts/household", "act"); }

kg::KnowledgeTriplet t3(const std::string& h, const std::string& r, const std::string& k) {
  return {kg::EntityId{h}, r, kg::EntityId{k}};
}

}  // namespace

TEST_CASE("phase budgets must be at least one") {
  PhaseBudget bad{0, 1};
  CHECK_THROWS_AS(bad.validate(), ConfigError);
  PhaseBudget good{1, 1};
  good.validate();
}

TEST_CASE("render_prompt knowledge block") {
  PromptSet set = prompts();
  RenderInputs inputs;
  inputs.task = "put apple 1 on shelf 1";
  inputs.history = "Observation: You are in the hall.";

  SUBCASE("empty knowledge omits the block entirely") {
    std::string text = render_prompt(set.exploit, inputs);
    // the only "Known facts:" left is the template's few-shot example
    size_t first = text.find("Known facts:");
    REQUIRE(first != std::string::npos);
    CHECK(text.find("Known facts:", first + 1) == std::string::npos);
  }

  SUBCASE("two triplets render as two lines in retrieval order") {
    inputs.knowledge = {t3("apple 1", "is in", "drawer 1"), t3("drawer 1", "is in", "hall")};
    std::string text = render_prompt(set.exploit, inputs);
    size_t first = text.rfind("(apple 1 | is in | drawer 1)");
    size_t second = text.rfind("(drawer 1 | is in | hall)");
    REQUIRE(first != std::string::npos);
    REQUIRE(second != std::string::npos);
    CHECK(first < second);
  }

  SUBCASE("byte-identical across 100 repeated renders") {
    inputs.knowledge = {t3("apple 1", "is in", "drawer 1")};
    std::string first = render_prompt(set.exploit, inputs);
    for (int i = 0; i < 100; ++i) CHECK(render_prompt(set.exploit, inputs) == first);
  }

  SUBCASE("missing mandatory slot is a configuration error") {
    PromptTemplate broken{PromptRole::Exploit, "no slots here", {}};
    CHECK_THROWS_AS(render_prompt(broken, inputs), ConfigError);
    RenderInputs empty_task;
    empty_task.history = "h";
    CHECK_THROWS_AS(render_prompt(set.explore, empty_task), ConfigError);
  }
}

TEST_CASE("extract_triplets") {
  llm::CostLedger ledger = llm::make_default_ledger();
  PromptSet set = prompts();

  SUBCASE("empty feedback short-circuits without a backend call") {
    Scripted backend({});
    auto out = extract_triplets("", backend, set.extract, ledger, 64);
    CHECK(out.empty());
    CHECK(backend.calls() == 0);
    CHECK(ledger.call_count() == 0);
  }

  SUBCASE("backend lines parse into the worked-example triplets") {
    Scripted backend({"(Wendy Schaal | voice for | Francine Smith)\n"
                      "(Francine Smith | character in | American Dad!)"});
    auto out = extract_triplets(
        "Since 2005 Wendy Schaal has primarily worked in voice acting, most notably voicing "
        "Francine Smith in the animated comedy television series American Dad!",
        backend, set.extract, ledger, 64);
    REQUIRE(out.size() == 2);
    CHECK(out[0] == t3("wendy schaal", "voice for", "francine smith"));
    CHECK(out[1] == t3("francine smith", "character in", "american dad!"));
    CHECK(ledger.totals(llm::CostRole::Extraction).calls == 1);
  }

  SUBCASE("rule-based extractor handles simulator feedback") {
    rule::HouseholdWeakAgent backend;
    RenderInputs probe;
    probe.feedback = "On the countertop 1, you see a knife 1.";
    llm::CompletionRequest req;
    req.prompt = render_prompt(set.extract, probe);
    auto result = backend.complete(req);
    auto parsed = kg::parse_triplets(result.text);
    REQUIRE(parsed.triplets.size() == 1);
    CHECK(parsed.triplets[0] == t3("knife 1", "is on", "countertop 1"));
  }
}

TEST_CASE("extract_task_entities") {
  llm::CostLedger ledger = llm::make_default_ledger();
  PromptSet set = prompts();
  env::Task task{"t", "clean some apples with soap", "test"};
  std::set<std::string> graph_entities = {"apple", "soap", "sink", "drawer 1"};

  SUBCASE("intersection with the graph") {
    Scripted backend({"apple, soap"});
    auto out = extract_task_entities(graph_entities, task, backend, set.entities, ledger, 64);
    CHECK(out == std::set<kg::EntityId>{{"apple"}, {"soap"}});
  }
  SUBCASE("entities outside the graph are dropped") {
    Scripted backend({"microwave, oven"});
    auto out = extract_task_entities(graph_entities, task, backend, set.entities, ledger, 64);
    CHECK(out.empty());
  }
  SUBCASE("normalization applies to returned names") {
    Scripted backend({"Apple,  SOAP "});
    auto out = extract_task_entities(graph_entities, task, backend, set.entities, ledger, 64);
    CHECK(out == std::set<kg::EntityId>{{"apple"}, {"soap"}});
  }
}

TEST_CASE("explore_phase") {
  env::WorldBundle bundle = tiny_bundle();
  PromptSet set = prompts();
  OrchestratorConfig cfg;

  SUBCASE("single scripted step extracts from the room description") {
    cfg.budgets = {1, 1};
    // one explore action + one extraction reply
    Scripted weak({"look around", "(drawer 1 | is in | hall)\n(countertop 1 | is in | hall)"});
    auto episode = env::make_episode(bundle, "t-put");
    llm::CostLedger ledger = llm::make_default_ledger();
    auto initial = episode->reset();
    auto out = explore_phase(*episode, initial.text, weak, set, cfg, ledger,
                             llm::CostRole::WeakExplore);
    CHECK(out.trajectory.steps.size() == 1);
    CHECK(out.trajectory.terminated_by == TerminatedBy::Budget);
    REQUIRE(out.triplets.size() == 2);
    CHECK(out.triplets[0] == t3("drawer 1", "is in", "hall"));
  }

  SUBCASE("agent-issued terminate stops the phase early") {
    cfg.budgets = {50, 1};
    Scripted weak({"look around", "NONE", "open drawer 1", "NONE", "DONE_EXPLORING"});
    auto episode = env::make_episode(bundle, "t-put");
    llm::CostLedger ledger = llm::make_default_ledger();
    auto initial = episode->reset();
    auto out =
        explore_phase(*episode, initial.text, weak, set, cfg, ledger, llm::CostRole::WeakExplore);
    CHECK(out.trajectory.steps.size() == 2);
    CHECK(out.trajectory.terminated_by == TerminatedBy::AgentTerminate);
  }

  SUBCASE("rule explorer sweeps the world and covers the placement table") {
    cfg.budgets = {50, 1};
    rule::HouseholdWeakAgent weak;
    auto episode = env::make_episode(bundle, "t-put");
    llm::CostLedger ledger = llm::make_default_ledger();
    auto initial = episode->reset();
    auto out =
        explore_phase(*episode, initial.text, weak, set, cfg, ledger, llm::CostRole::WeakExplore);
    CHECK(out.trajectory.terminated_by == TerminatedBy::AgentTerminate);
    // every object's true placement appears as an "is in/on" triplet
    auto graph = kg::construct_graph(out.triplets);
    const auto& task = bundle.world.tasks[0];
    for (const auto& [obj, recep] : task.placement) {
      auto it = graph.adjacency().find({obj, recep});
      REQUIRE_MESSAGE(it != graph.adjacency().end(), "missing placement for ", obj);
      CHECK((it->second == "is in" || it->second == "is on"));
    }
    // knowledge grows monotonically step over step
    long long prev = 0;
    for (const auto& s : out.trajectory.steps) {
      CHECK(s.knowledge_size >= prev);
      prev = s.knowledge_size;
    }
  }

  SUBCASE("unparseable exploration actions fall back to look around") {
    cfg.budgets = {1, 1};
    Scripted weak({"take apple 1 from countertop 1", "NONE"});  // exploit-only action during explore
    auto episode = env::make_episode(bundle, "t-put");
    llm::CostLedger ledger = llm::make_default_ledger();
    auto initial = episode->reset();
    auto out =
        explore_phase(*episode, initial.text, weak, set, cfg, ledger, llm::CostRole::WeakExplore);
    REQUIRE(out.trajectory.steps.size() == 1);
    CHECK(out.trajectory.steps[0].action == "look around");
  }
}

TEST_CASE("exploit_phase") {
  env::WorldBundle bundle = tiny_bundle();
  PromptSet set = prompts();
  OrchestratorConfig cfg;

  SUBCASE("scripted three-action solution ends env-complete") {
    cfg.budgets = {1, 10};
    Scripted strong({"take apple 1 from countertop 1", "go to kitchen", "put apple 1 on shelf 1"});
    auto episode = env::make_episode(bundle, "t-put");
    llm::CostLedger ledger = llm::make_default_ledger();
    auto initial = episode->reset();
    auto out = exploit_phase(*episode, initial.text, strong, set, {}, cfg, ledger);
    CHECK(out.plan ==
          std::vector<std::string>{"take apple 1 from countertop 1", "go to kitchen",
                                   "put apple 1 on shelf 1"});
    CHECK(out.trajectory.terminated_by == TerminatedBy::EnvComplete);
    CHECK(episode->done());
  }

  SUBCASE("budget exhaustion without a solution") {
    cfg.budgets = {1, 2};
    Scripted strong({"look around", "look around", "look around"});
    auto episode = env::make_episode(bundle, "t-put");
    llm::CostLedger ledger = llm::make_default_ledger();
    auto initial = episode->reset();
    auto out = exploit_phase(*episode, initial.text, strong, set, {}, cfg, ledger);
    CHECK(out.trajectory.steps.size() == 2);
    CHECK(out.trajectory.terminated_by == TerminatedBy::Budget);
  }

  SUBCASE("injected knowledge sends the planner straight to the object") {
    cfg.budgets = {1, 10};
    rule::HouseholdPlannerAgent strong;
    std::vector<kg::KnowledgeTriplet> retrieved = {
        t3("apple 1", "is on", "countertop 1"),
        t3("apple 1", "located in", "hall"),
        t3("shelf 1", "is in", "kitchen"),
    };
    auto episode = env::make_episode(bundle, "t-put");
    llm::CostLedger ledger = llm::make_default_ledger();
    auto initial = episode->reset();
    auto out = exploit_phase(*episode, initial.text, strong, set, retrieved, cfg, ledger);
    CHECK(out.trajectory.terminated_by == TerminatedBy::EnvComplete);
    // direct plan: no opening or examining of unrelated receptacles
    for (const auto& action : out.plan) {
      CHECK(action.find("open") == std::string::npos);
      CHECK(action.find("examine") == std::string::npos);
    }
    CHECK(out.plan.size() == 3);  // take, go, put
  }

  SUBCASE("unparseable exploitation action re-prompts once then substitutes") {
    cfg.budgets = {1, 1};
    Scripted strong({"gibberish", "still gibberish"}, "still gibberish");
    auto episode = env::make_episode(bundle, "t-put");
    llm::CostLedger ledger = llm::make_default_ledger();
    auto initial = episode->reset();
    auto out = exploit_phase(*episode, initial.text, strong, set, {}, cfg, ledger);
    REQUIRE(out.trajectory.steps.size() == 1);
    CHECK(out.trajectory.steps[0].action == "look around");
    CHECK(out.trajectory.backend_calls == 2);  // original + one re-prompt
  }
}

TEST_CASE("run_wese end to end with rule agents") {
  env::WorldBundle bundle = tiny_bundle();
  PromptSet set = prompts();
  OrchestratorConfig cfg;
  cfg.budgets = {50, 50};

  rule::HouseholdWeakAgent weak;
  rule::HouseholdPlannerAgent strong;
  auto episode = env::make_episode(bundle, "t-put");
  auto result = run_wese(*episode, weak, strong, set, cfg, AgentMode::Wese,
                         llm::make_default_ledger());
  CHECK(result.success);
  CHECK(result.exploit.terminated_by == TerminatedBy::EnvComplete);
  CHECK(result.total_reward == 1.0);
  CHECK_FALSE(result.graph.empty());
  CHECK_FALSE(result.retrieved.empty());
  CHECK(result.steps_for_metrics == static_cast<int>(result.exploit.steps.size()));

  // phase ordering: all exploration ledger events precede the first
  // exploitation event
  bool saw_exploit = false;
  for (const auto& [seq, role] : result.ledger.events) {
    if (role == "strong-exploit") saw_exploit = true;
    if (role == "weak-explore") CHECK_FALSE(saw_exploit);
  }

  // budget safety
  CHECK(result.explore.steps.size() <= 50);
  CHECK(result.exploit.steps.size() <= 50);
}

TEST_CASE("run_wese with budgets (1,1) and inert backends fails with unit trajectories") {
  env::WorldBundle bundle = tiny_bundle();
  PromptSet set = prompts();
  OrchestratorConfig cfg;
  cfg.budgets = {1, 1};
  Scripted weak({"look around", "NONE", "none"}, "NONE");
  Scripted strong({"look around"}, "look around");
  auto episode = env::make_episode(bundle, "t-put");
  auto result =
      run_wese(*episode, weak, strong, set, cfg, AgentMode::Wese, llm::make_default_ledger());
  CHECK_FALSE(result.success);
  CHECK(result.explore.steps.size() == 1);
  CHECK(result.exploit.steps.size() == 1);
}

TEST_CASE("SESE relabels exploration cost, keeps the plan") {
  env::WorldBundle bundle = tiny_bundle();
  PromptSet set = prompts();
  OrchestratorConfig cfg;
  cfg.budgets = {50, 50};

  // record a WESE run off the rule agents
  rule::HouseholdWeakAgent weak_rule;
  rule::HouseholdPlannerAgent strong_rule;
  llm::RecordingBackend weak_rec(weak_rule);
  llm::RecordingBackend strong_rec(strong_rule);
  auto ep1 = env::make_episode(bundle, "t-put");
  auto wese = run_wese(*ep1, weak_rec, strong_rec, set, cfg, AgentMode::Wese,
                       llm::make_default_ledger());
  REQUIRE(wese.success);

  // replay the same transcripts in SESE mode: one strong backend serves
  // exploration+extraction first, then exploitation
  std::vector<llm::TranscriptEntry> combined = weak_rec.recorded();
  combined.insert(combined.end(), strong_rec.recorded().begin(), strong_rec.recorded().end());
  llm::ReplayBackend strong_replay(combined);
  auto ep2 = env::make_episode(bundle, "t-put");
  auto sese = run_wese(*ep2, strong_replay, strong_replay, set, cfg, AgentMode::Sese,
                       llm::make_default_ledger());
  REQUIRE(sese.success);
  CHECK(sese.plan == wese.plan);

  // ledger differs only in role attribution: weak-explore tokens moved to
  // strong-explore
  auto usage_of = [](const orch::EpisodeResult& r, const std::string& role) {
    for (const auto& line : r.ledger.roles) {
      if (line.role == role) return line.usage;
    }
    return llm::TokenUsage{};
  };
  CHECK(usage_of(wese, "weak-explore") == usage_of(sese, "strong-explore"));
  CHECK(usage_of(sese, "weak-explore") == llm::TokenUsage{});
  CHECK(usage_of(wese, "strong-exploit") == usage_of(sese, "strong-exploit"));
  CHECK(usage_of(wese, "extraction") == usage_of(sese, "extraction"));
}

TEST_CASE("run_coupled_baseline") {
  env::WorldBundle bundle = tiny_bundle();
  PromptSet set = prompts();
  OrchestratorConfig cfg;

  SUBCASE("scripted Act-style solve") {
    cfg.budgets = {1, 10};
    Scripted backend({"take apple 1 from countertop 1", "go to kitchen", "put apple 1 on shelf 1"});
    auto episode = env::make_episode(bundle, "t-put");
    auto result = run_coupled_baseline(*episode, backend, set, cfg, llm::make_default_ledger());
    CHECK(result.success);
    CHECK(result.plan.size() == 3);
    CHECK(result.exploit.steps.size() == 3);
  }

  SUBCASE("one thought plus three actions: 3 env steps, 4 backend calls") {
    cfg.budgets = {1, 10};
    cfg.thought_mode = true;
    Scripted backend({"think: the apple is right here on the countertop",
                      "take apple 1 from countertop 1", "go to kitchen", "put apple 1 on shelf 1"});
    auto episode = env::make_episode(bundle, "t-put");
    auto result = run_coupled_baseline(*episode, backend, set, cfg, llm::make_default_ledger());
    CHECK(result.success);
    CHECK(result.exploit.steps.size() == 3);
    CHECK(result.exploit.backend_calls == 4);
    REQUIRE(result.exploit.thoughts.size() == 1);
  }

  SUBCASE("budget exhaustion accumulates all feedback") {
    cfg.budgets = {1, 3};
    Scripted backend({"look around", "look around", "look around"});
    auto episode = env::make_episode(bundle, "t-put");
    auto result = run_coupled_baseline(*episode, backend, set, cfg, llm::make_default_ledger());
    CHECK_FALSE(result.success);
    CHECK(result.exploit.steps.size() == 3);
    CHECK(result.exploit.terminated_by == TerminatedBy::Budget);
  }
}

TEST_CASE("episode result JSON round trip") {
  env::WorldBundle bundle = tiny_bundle();
  PromptSet set = prompts();
  OrchestratorConfig cfg;
  cfg.budgets = {50, 50};
  rule::HouseholdWeakAgent weak;
  rule::HouseholdPlannerAgent strong;
  auto episode = env::make_episode(bundle, "t-put");
  auto result =
      run_wese(*episode, weak, strong, set, cfg, AgentMode::Wese, llm::make_default_ledger());
  result.method = "act-wese";

  auto j = episode_to_json(result);
  auto restored = episode_from_json(j);
  CHECK(episode_to_json(restored) == j);
  CHECK(restored.success == result.success);
  CHECK(restored.plan == result.plan);
  CHECK(restored.graph == result.graph);
  CHECK(restored.retrieved == result.retrieved);
}

TEST_CASE("history render truncates to the most recent pairs over the token window") {
  History history("start");
  for (int i = 0; i < 40; ++i) {
    history.record("action " + std::to_string(i), "observation " + std::to_string(i));
  }
  std::string full = history.render(20, 1000000);
  CHECK(full.find("action 0") != std::string::npos);
  std::string truncated = history.render(20, 10);
  CHECK(truncated.find("action 0") == std::string::npos);
  CHECK(truncated.find("action 39") != std::string::npos);
  CHECK(truncated.find("Observation: observation 39") != std::string::npos);
}

TEST_CASE("wiki episode through run_wese with handcrafted transcripts") {
  env::WorldBundle bundle;
  bundle.kind = "wiki-qa";
  bundle.source = "test";
  bundle.corpus = env::wiki::generate_corpus(3, 4, 0);
  const auto& qa = bundle.corpus.qa[1];  // two-hop: country of birth city

  PromptSet set = PromptSet::load_dir("prompts/wiki", "act");
  OrchestratorConfig cfg;
  cfg.budgets = {8, 8};
  cfg.retrieval.cap = 10;

  REQUIRE(qa.witness.size() == 3);
  std::string person = qa.witness[0].substr(7, qa.witness[0].size() - 8);
  std::string city = qa.witness[1].substr(7, qa.witness[1].size() - 8);
  std::string answer = qa.answers[0];

  Scripted weak({
      qa.witness[0],                                         // search person
      "(" + person + " | was born in | " + city + ")",       // extraction
      qa.witness[1],                                         // search city
      "(" + city + " | is a city in | " + answer + ")",      // extraction
      "DONE_EXPLORING",
      person + ", " + city,                                  // entity extraction
  });
  Scripted strong({"finish[" + answer + "]"});
  auto episode = env::make_episode(bundle, qa.id);
  auto result =
      run_wese(*episode, weak, strong, set, cfg, AgentMode::Wese, llm::make_default_ledger());
  CHECK(result.success);
  CHECK(result.plan == std::vector<std::string>{"finish[" + answer + "]"});
  CHECK(result.retrieved.size() <= 10);
  CHECK(result.exploit.steps.size() == 1);
}
