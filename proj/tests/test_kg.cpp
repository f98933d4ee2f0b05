#include <algorithm>
#include <random>
#include <regex>
#include <sstream>

#include "doctest.h"
#include "wese/kg.hpp"
#include "wese/log.hpp"
#include "wese/text.hpp"

using namespace wese;
using kg::EntityId;
using kg::KnowledgeGraph;
using kg::KnowledgeTriplet;

namespace {

KnowledgeTriplet t(const std::string& h, const std::string& r, const std::string& k) {
  return KnowledgeTriplet{EntityId{h}, r, EntityId{k}};
}

// ── Independent oracles ─────────────────────────────────────────

/// Reference parser: strict/lenient grammars as regexes, separate from the
/// production scanner.
struct RegexParseOracle {
  std::vector<KnowledgeTriplet> triplets;
  int skipped = 0;

  explicit RegexParseOracle(const std::string& raw) {
    static const std::regex strict(R"(^\s*\(([^|()]*)\|([^|()]*)\|([^|()]*)\)\s*$)");
    static const std::regex lenient(R"(^\s*([^;|]+)[;|]([^;|]+)[;|]([^;|]+?)[.;,\s]*$)");
    std::istringstream in(raw);
    std::string line;
    while (std::getline(in, line)) {
      if (!line.empty() && line.back() == '\r') line.pop_back();
      std::string trimmed = trim(line);
      if (trimmed.empty() || trimmed[0] == '#') continue;
      std::smatch m;
      bool ok = false;
      if (std::regex_match(line, m, strict) || std::regex_match(line, m, lenient)) {
        auto h = EntityId::from_raw(m[1].str());
        std::string r = normalize_text(m[2].str());
        auto tl = EntityId::from_raw(m[3].str());
        if (h && tl && !r.empty()) {
          triplets.push_back(KnowledgeTriplet{*h, r, *tl});
          ok = true;
        }
      }
      if (!ok) ++skipped;
    }
  }
};

/// Naive Algorithm-1 re-derivation over plain vectors.
struct NaiveGraph {
  std::vector<std::string> entities;
  std::vector<std::string> relations;
  std::vector<KnowledgeTriplet> cells;  // one per live (h,t) pair

  explicit NaiveGraph(const std::vector<KnowledgeTriplet>& input) {
    auto add_name = [](std::vector<std::string>& v, const std::string& s) {
      for (const auto& x : v) {
        if (x == s) return;
      }
      v.push_back(s);
    };
    for (const auto& x : input) {
      add_name(entities, x.head.name);
      add_name(entities, x.tail.name);
      add_name(relations, x.relation);
      bool replaced = false;
      for (auto& cell : cells) {
        if (cell.head == x.head && cell.tail == x.tail) {
          cell.relation = x.relation;
          replaced = true;
        }
      }
      if (!replaced) cells.push_back(x);
    }
  }

  bool matches(const KnowledgeGraph& g) const {
    if (g.entities().size() != entities.size() || g.relations().size() != relations.size()) return false;
    for (const auto& e : entities) {
      if (!g.entities().contains(e)) return false;
    }
    for (const auto& r : relations) {
      if (!g.relations().contains(r)) return false;
    }
    if (g.adjacency().size() != cells.size()) return false;
    for (const auto& cell : cells) {
      auto it = g.adjacency().find({cell.head.name, cell.tail.name});
      if (it == g.adjacency().end() || it->second != cell.relation) return false;
    }
    return true;
  }
};

/// O(|E|^2) brute-force scan for pairwise retrieval.
std::vector<KnowledgeTriplet> brute_force_pairwise(const KnowledgeGraph& g,
                                                   const std::set<EntityId>& task) {
  std::set<KnowledgeTriplet> out;
  std::vector<KnowledgeTriplet> edges = g.edges_sorted();
  for (const auto& ei : task) {
    for (const auto& ej : task) {
      if (ei == ej) continue;
      for (const auto& e : edges) {
        if (e.head == ei && e.tail == ej) out.insert(e);
      }
    }
  }
  return {out.begin(), out.end()};
}

std::vector<KnowledgeTriplet> random_triplets(std::mt19937& rng, int max_entities = 8) {
  const std::vector<std::string> names = {"a", "b", "c", "d", "e", "f", "g", "h"};
  const std::vector<std::string> rels = {"r1", "r2", "r3", "likes"};
  size_t count = rng() % 12;
  std::vector<KnowledgeTriplet> out;
  for (size_t i = 0; i < count; ++i) {
    out.push_back(t(names[rng() % max_entities], rels[rng() % rels.size()],
                    names[rng() % max_entities]));
  }
  return out;
}

std::set<EntityId> random_entity_set(std::mt19937& rng) {
  const std::vector<std::string> names = {"a", "b", "c", "d", "e", "f", "g", "h"};
  std::set<EntityId> out;
  size_t count = rng() % 5;
  for (size_t i = 0; i < count; ++i) out.insert(EntityId{names[rng() % names.size()]});
  return out;
}

}  // namespace

TEST_CASE("entity normalization maps case and whitespace variants together") {
  CHECK(EntityId::from_raw("  Wendy   Schaal ")->name == "wendy schaal");
  CHECK(EntityId::from_raw("WENDY SCHAAL")->name == "wendy schaal");
  CHECK(EntityId::from_raw("\"drawer 1\",")->name == "drawer 1");
  CHECK(EntityId::from_raw("American Dad!")->name == "american dad!");
  CHECK_FALSE(EntityId::from_raw("  ,.  ").has_value());
  CHECK_FALSE(EntityId::from_raw("").has_value());
}

TEST_CASE("parse_triplets strict grammar") {
  auto out = kg::parse_triplets(
      "(Wendy Schaal | voice for | Francine Smith)\n(Francine Smith | character in | American Dad!)");
  REQUIRE(out.triplets.size() == 2);
  CHECK(out.skipped == 0);
  CHECK(out.triplets[0] == t("wendy schaal", "voice for", "francine smith"));
  CHECK(out.triplets[1] == t("francine smith", "character in", "american dad!"));
}

TEST_CASE("parse_triplets empty input") {
  auto out = kg::parse_triplets("");
  CHECK(out.triplets.empty());
  CHECK(out.skipped == 0);
}

TEST_CASE("parse_triplets skips garbage, keeps order and duplicates") {
  auto out = kg::parse_triplets("garbage line\n(apple | is in | drawer 1)");
  REQUIRE(out.triplets.size() == 1);
  CHECK(out.skipped == 1);
  CHECK(out.triplets[0] == t("apple", "is in", "drawer 1"));

  auto dup = kg::parse_triplets("(a | r | b)\n(a | r | b)");
  CHECK(dup.triplets.size() == 2);

  auto lenient = kg::parse_triplets("apple ; is in ; drawer 1.\nNONE");
  REQUIRE(lenient.triplets.size() == 1);
  CHECK(lenient.triplets[0] == t("apple", "is in", "drawer 1"));
  CHECK(lenient.skipped == 1);
}

TEST_CASE("parse_triplets agrees with the regex oracle on a fuzz corpus") {
  std::mt19937 rng(2024);
  const std::vector<std::string> pieces = {
      "(apple | is in | drawer 1)",
      "( a | b | c )",
      "apple ; is on ; shelf 2",
      "a | b | c",
      "garbage",
      "",
      "# comment",
      "(missing | field)",
      "(too | many | fields | here)",
      "( | empty | head)",
      "x ; y ; z.",
      "NONE",
  };
  for (int round = 0; round < 50; ++round) {
    std::string corpus;
    int lines = 1 + static_cast<int>(rng() % 8);
    for (int i = 0; i < lines; ++i) {
      corpus += pieces[rng() % pieces.size()];
      corpus += '\n';
    }
    auto got = kg::parse_triplets(corpus);
    RegexParseOracle want(corpus);
    CHECK(got.triplets == want.triplets);
    CHECK(got.skipped == want.skipped);
  }
}

TEST_CASE("construct_graph on the worked example") {
  auto graph = kg::construct_graph({t("wendy schaal", "voice for", "francine smith"),
                                    t("francine smith", "character in", "american dad!")});
  CHECK(graph.entities() == std::set<std::string>{"american dad!", "francine smith", "wendy schaal"});
  CHECK(graph.relations() == std::set<std::string>{"character in", "voice for"});
  CHECK(graph.adjacency().size() == 2);
}

TEST_CASE("construct_graph empty and last-write-wins") {
  CHECK(kg::construct_graph({}).empty());

  auto graph = kg::construct_graph({t("a", "r1", "b"), t("a", "r2", "b")});
  CHECK(graph.adjacency().at({"a", "b"}) == "r2");
  CHECK(graph.relations() == std::set<std::string>{"r1", "r2"});
  NaiveGraph oracle({t("a", "r1", "b"), t("a", "r2", "b")});
  CHECK(oracle.matches(graph));
}

TEST_CASE("merge_into equals batch construction") {
  std::mt19937 rng(7);
  for (int round = 0; round < 200; ++round) {
    auto first = random_triplets(rng);
    auto second = random_triplets(rng);

    KnowledgeGraph incremental = kg::construct_graph(first);
    kg::merge_into(incremental, second);

    std::vector<KnowledgeTriplet> all = first;
    all.insert(all.end(), second.begin(), second.end());
    CHECK(incremental == kg::construct_graph(all));
  }
  // identity cases
  auto some = random_triplets(rng);
  KnowledgeGraph empty_base;
  kg::merge_into(empty_base, some);
  CHECK(empty_base == kg::construct_graph(some));
  KnowledgeGraph unchanged = kg::construct_graph(some);
  KnowledgeGraph before = unchanged;
  kg::merge_into(unchanged, {});
  CHECK(unchanged == before);
}

TEST_CASE("retrieve_pairwise on the worked example and edge cases") {
  auto graph = kg::construct_graph({t("wendy schaal", "voice for", "francine smith"),
                                    t("francine smith", "character in", "american dad!")});
  CHECK(kg::retrieve_pairwise(graph, {}).empty());

  auto got = kg::retrieve_pairwise(graph, {EntityId{"wendy schaal"}, EntityId{"francine smith"}});
  REQUIRE(got.size() == 1);
  CHECK(got[0] == t("wendy schaal", "voice for", "francine smith"));
}

TEST_CASE("retrieve_pairwise matches the brute-force oracle") {
  std::mt19937 rng(99);
  for (int round = 0; round < 300; ++round) {
    auto graph = kg::construct_graph(random_triplets(rng));
    auto task = random_entity_set(rng);
    CHECK(kg::retrieve_pairwise(graph, task) == brute_force_pairwise(graph, task));
  }
}

TEST_CASE("retrieve_one_hop neighbors, determinism, cap") {
  auto graph = kg::construct_graph({t("wendy schaal", "voice for", "francine smith"),
                                    t("francine smith", "character in", "american dad!")});
  auto both = kg::retrieve_one_hop(graph, {EntityId{"francine smith"}}, std::nullopt);
  REQUIRE(both.size() == 2);
  CHECK(both[0] == t("francine smith", "character in", "american dad!"));
  CHECK(both[1] == t("wendy schaal", "voice for", "francine smith"));

  CHECK(kg::retrieve_one_hop(graph, {EntityId{"nobody"}}, std::nullopt).empty());

  auto capped = kg::retrieve_one_hop(graph, {EntityId{"francine smith"}}, 1);
  REQUIRE(capped.size() == 1);
  CHECK(capped[0] == t("francine smith", "character in", "american dad!"));
}

TEST_CASE("pairwise result is a subset of one-hop; pairwise is monotone") {
  std::mt19937 rng(1234);
  for (int round = 0; round < 200; ++round) {
    auto graph = kg::construct_graph(random_triplets(rng));
    auto task = random_entity_set(rng);
    auto pair = kg::retrieve_pairwise(graph, task);
    auto hop = kg::retrieve_one_hop(graph, task, std::nullopt);
    for (const auto& e : pair) {
      CHECK(std::find(hop.begin(), hop.end(), e) != hop.end());
    }
    // monotonicity: add one entity, result may only grow
    auto bigger = task;
    bigger.insert(EntityId{"a"});
    auto pair_bigger = kg::retrieve_pairwise(graph, bigger);
    for (const auto& e : pair) {
      CHECK(std::find(pair_bigger.begin(), pair_bigger.end(), e) != pair_bigger.end());
    }
  }
}

TEST_CASE("graph size bounds") {
  std::mt19937 rng(31);
  for (int round = 0; round < 100; ++round) {
    auto input = random_triplets(rng);
    auto graph = kg::construct_graph(input);
    CHECK(graph.entities().size() <= 2 * std::max<size_t>(input.size(), 1));
    CHECK(graph.adjacency().size() <= std::max<size_t>(input.size(), 1));
    graph.check_invariants();
  }
}

TEST_CASE("serialize round trip") {
  CHECK(kg::deserialize(kg::serialize(KnowledgeGraph{})) == KnowledgeGraph{});

  auto example = kg::construct_graph({t("wendy schaal", "voice for", "francine smith"),
                                      t("francine smith", "character in", "american dad!")});
  auto round = kg::deserialize(kg::serialize(example));
  CHECK(round == example);
  CHECK(round.entities().size() == 3);
  CHECK(round.adjacency().size() == 2);

  std::mt19937 rng(555);
  for (int i = 0; i < 100; ++i) {
    auto graph = kg::construct_graph(random_triplets(rng));
    CHECK(kg::deserialize(kg::serialize(graph)) == graph);
  }
}

TEST_CASE("deserialize names the offending line") {
  CHECK_THROWS_AS(kg::deserialize("(a | r | b)\nnot a triplet"), kg::GraphParseError);
  try {
    kg::deserialize("(a | r | b)\nnot a triplet");
  } catch (const kg::GraphParseError& e) {
    CHECK(e.line_no == 2);
    CHECK(std::string(e.what()).find("not a triplet") != std::string::npos);
  }
}

TEST_CASE("orphaned relations survive serialization") {
  auto graph = kg::construct_graph({t("a", "r1", "b"), t("a", "r2", "b")});
  REQUIRE(graph.orphan_relations() == std::vector<std::string>{"r1"});
  CHECK(kg::deserialize(kg::serialize(graph)) == graph);
}
