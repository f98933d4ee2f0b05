#include "wese/kg.hpp"

#include <algorithm>

#include "wese/log.hpp"
#include "wese/text.hpp"

namespace wese::kg {

std::optional<EntityId> EntityId::from_raw(std::string_view raw) {
  std::string name = normalize_text(raw);
  if (name.empty()) return std::nullopt;
  return EntityId{std::move(name)};
}

std::string to_line(const KnowledgeTriplet& t) {
  return "(" + t.head.name + " | " + t.relation + " | " + t.tail.name + ")";
}

namespace {

std::optional<KnowledgeTriplet> triplet_from_fields(std::string_view head, std::string_view relation,
                                                    std::string_view tail) {
  auto h = EntityId::from_raw(head);
  auto t = EntityId::from_raw(tail);
  std::string r = normalize_text(relation);
  if (!h || !t || r.empty()) return std::nullopt;
  return KnowledgeTriplet{*h, std::move(r), *t};
}

std::optional<KnowledgeTriplet> parse_strict(std::string_view line) {
  std::string s = trim(line);
  if (s.size() < 2 || s.front() != '(' || s.back() != ')') return std::nullopt;
  auto fields = split(std::string_view(s).substr(1, s.size() - 2), '|');
  if (fields.size() != 3) return std::nullopt;
  return triplet_from_fields(fields[0], fields[1], fields[2]);
}

std::optional<KnowledgeTriplet> parse_lenient(std::string_view line) {
  std::string s = trim(line);
  while (!s.empty() && (s.back() == '.' || s.back() == ';' || s.back() == ',')) s.pop_back();
  char sep = s.find(';') != std::string::npos ? ';' : '|';
  auto fields = split(s, sep);
  if (fields.size() != 3) return std::nullopt;
  return triplet_from_fields(fields[0], fields[1], fields[2]);
}

bool is_comment_or_blank(const std::string& line) {
  std::string t = trim(line);
  return t.empty() || t.front() == '#';
}

}  // namespace

ParseOutcome parse_triplets(std::string_view raw) {
  ParseOutcome out;
  for (const auto& line : split_lines(raw)) {
    if (is_comment_or_blank(line)) continue;
    if (auto t = parse_strict(line)) {
      out.triplets.push_back(std::move(*t));
    } else if (auto l = parse_lenient(line)) {
      out.triplets.push_back(std::move(*l));
    } else {
      ++out.skipped;
    }
  }
  return out;
}

void KnowledgeGraph::add(const KnowledgeTriplet& t) {
  if (t.head == t.tail) log::warn("self-loop triplet: " + to_line(t));
  entities_.insert(t.head.name);
  entities_.insert(t.tail.name);
  relations_.insert(t.relation);
  Edge key{t.head.name, t.tail.name};
  auto it = adjacency_.find(key);
  if (it != adjacency_.end() && it->second != t.relation) {
    log::warn("relation overwrite on (" + key.first + ", " + key.second + "): '" + it->second +
              "' -> '" + t.relation + "'");
  }
  adjacency_[key] = t.relation;
}

void KnowledgeGraph::add_relation(const std::string& relation) { relations_.insert(relation); }

std::vector<KnowledgeTriplet> KnowledgeGraph::edges_sorted() const {
  std::vector<KnowledgeTriplet> out;
  out.reserve(adjacency_.size());
  for (const auto& [edge, rel] : adjacency_) {
    out.push_back(KnowledgeTriplet{EntityId{edge.first}, rel, EntityId{edge.second}});
  }
  std::sort(out.begin(), out.end());
  return out;
}

std::vector<std::string> KnowledgeGraph::orphan_relations() const {
  std::set<std::string> used;
  for (const auto& [edge, rel] : adjacency_) used.insert(rel);
  std::vector<std::string> out;
  for (const auto& r : relations_) {
    if (!used.contains(r)) out.push_back(r);
  }
  return out;
}

void KnowledgeGraph::check_invariants() const {
  for (const auto& [edge, rel] : adjacency_) {
    if (!entities_.contains(edge.first) || !entities_.contains(edge.second)) {
      throw std::logic_error("adjacency references entity outside the entity set");
    }
    if (!relations_.contains(rel)) {
      throw std::logic_error("adjacency references relation outside the relation set");
    }
  }
  for (const auto& e : entities_) {
    if (e.empty()) throw std::logic_error("empty entity name");
  }
  for (const auto& r : relations_) {
    if (r.empty()) throw std::logic_error("empty relation name");
  }
}

KnowledgeGraph construct_graph(const std::vector<KnowledgeTriplet>& triplets) {
  KnowledgeGraph g;
  for (const auto& t : triplets) g.add(t);
#ifndef NDEBUG
  g.check_invariants();
#endif
  return g;
}

void merge_into(KnowledgeGraph& graph, const std::vector<KnowledgeTriplet>& triplets) {
  for (const auto& t : triplets) graph.add(t);
#ifndef NDEBUG
  graph.check_invariants();
#endif
}

std::vector<KnowledgeTriplet> retrieve_pairwise(const KnowledgeGraph& graph,
                                                const std::set<EntityId>& task_entities) {
  std::set<KnowledgeTriplet> found;
  const auto& adj = graph.adjacency();
  for (const auto& ei : task_entities) {
    for (const auto& ej : task_entities) {
      if (ei == ej) continue;
      auto it = adj.find({ei.name, ej.name});
      if (it != adj.end()) {
        found.insert(KnowledgeTriplet{ei, it->second, ej});
      }
    }
  }
  return {found.begin(), found.end()};
}

std::vector<KnowledgeTriplet> retrieve_one_hop(const KnowledgeGraph& graph,
                                               const std::set<EntityId>& task_entities,
                                               std::optional<int> cap) {
  std::set<KnowledgeTriplet> found;
  for (const auto& [edge, rel] : graph.adjacency()) {
    if (task_entities.contains(EntityId{edge.first}) || task_entities.contains(EntityId{edge.second})) {
      found.insert(KnowledgeTriplet{EntityId{edge.first}, rel, EntityId{edge.second}});
    }
  }
  std::vector<KnowledgeTriplet> out(found.begin(), found.end());
  if (cap && *cap >= 0 && out.size() > static_cast<size_t>(*cap)) {
    out.resize(static_cast<size_t>(*cap));
  }
  return out;
}

GraphParseError::GraphParseError(int line_no_, const std::string& line_)
    : std::runtime_error("graph parse error at line " + std::to_string(line_no_) + ": '" + line_ + "'"),
      line_no(line_no_),
      line(line_) {}

std::string serialize(const KnowledgeGraph& graph) {
  std::string out = "# wese knowledge graph v1\n";
  for (const auto& t : graph.edges_sorted()) {
    out += to_line(t);
    out += '\n';
  }
  for (const auto& r : graph.orphan_relations()) {
    out += "# relation: " + r + "\n";
  }
  return out;
}

KnowledgeGraph deserialize(std::string_view text) {
  KnowledgeGraph g;
  int line_no = 0;
  for (const auto& line : split_lines(text)) {
    ++line_no;
    std::string t = trim(line);
    if (t.empty()) continue;
    if (t.front() == '#') {
      // "# relation: X" restores relations orphaned by overwrites.
      constexpr std::string_view directive = "# relation:";
      if (t.rfind(directive, 0) == 0) {
        std::string rel = normalize_text(std::string_view(t).substr(directive.size()));
        if (!rel.empty()) g.add_relation(rel);
      }
      continue;
    }
    auto parsed = parse_strict(t);
    if (!parsed) throw GraphParseError(line_no, line);
    g.add(*parsed);
  }
#ifndef NDEBUG
  g.check_invariants();
#endif
  return g;
}

}  // namespace wese::kg
