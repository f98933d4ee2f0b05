#pragma once

#include <map>
#include <optional>
#include <set>
#include <stdexcept>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

namespace wese::kg {

/// Normalized entity name. Two raw mentions that differ only in case or
/// surrounding whitespace/punctuation map to the same EntityId.
struct EntityId {
  std::string name;

  /// Returns nullopt when the raw text is empty after normalization.
  static std::optional<EntityId> from_raw(std::string_view raw);

  auto operator<=>(const EntityId&) const = default;
};

/// Directed ⟨head, relation, tail⟩ fact. Equality is field-wise on the
/// normalized forms. Self-loops are permitted (flagged in logs on insert).
struct KnowledgeTriplet {
  EntityId head;
  std::string relation;  // normalized, non-empty
  EntityId tail;

  auto operator<=>(const KnowledgeTriplet&) const = default;
};

/// Renders "(head | relation | tail)".
std::string to_line(const KnowledgeTriplet& t);

struct ParseOutcome {
  std::vector<KnowledgeTriplet> triplets;  // input order, duplicates preserved
  int skipped = 0;                         // lines that failed both grammars
};

/// Parses extractor output, one triplet per line. Strict grammar is
/// `(head | relation | tail)`; the lenient fallback accepts `head ; relation
/// ; tail` or an unparenthesized pipe form, tolerating trailing punctuation.
/// Blank lines and `#` comments are ignored without counting as skips.
/// Never fails.
ParseOutcome parse_triplets(std::string_view raw);

/// Entity/relation/adjacency store. The adjacency holds at most one relation
/// per ordered (head, tail) pair; inserting over an existing pair replaces
/// the relation (last write wins) and logs a warning.
class KnowledgeGraph {
 public:
  using Edge = std::pair<std::string, std::string>;  // (head, tail)

  const std::set<std::string>& entities() const { return entities_; }
  const std::set<std::string>& relations() const { return relations_; }
  const std::map<Edge, std::string>& adjacency() const { return adjacency_; }

  bool empty() const { return entities_.empty() && relations_.empty() && adjacency_.empty(); }
  void add(const KnowledgeTriplet& t);

  /// Registers a relation without an edge (used when restoring a serialized
  /// graph whose relation was orphaned by an overwrite).
  void add_relation(const std::string& relation);

  /// Current edges as triplets, sorted by (head, relation, tail).
  std::vector<KnowledgeTriplet> edges_sorted() const;

  /// Relations present in the relation set but no longer on any edge
  /// (left behind by overwrites).
  std::vector<std::string> orphan_relations() const;

  void check_invariants() const;  // throws std::logic_error on violation

  bool operator==(const KnowledgeGraph&) const = default;

 private:
  std::set<std::string> entities_;
  std::set<std::string> relations_;
  std::map<Edge, std::string> adjacency_;
};

KnowledgeGraph construct_graph(const std::vector<KnowledgeTriplet>& triplets);

/// Equivalent to constructing from the graph's existing triplets followed by
/// `triplets`. Idempotent for duplicates.
void merge_into(KnowledgeGraph& graph, const std::vector<KnowledgeTriplet>& triplets);

/// Edges between distinct task entities only (both directions scanned).
/// Result is deduplicated and sorted by (head, relation, tail).
std::vector<KnowledgeTriplet> retrieve_pairwise(const KnowledgeGraph& graph,
                                                const std::set<EntityId>& task_entities);

/// Every edge whose head or tail is a task entity, deduplicated, sorted by
/// (head, relation, tail), then truncated to `cap` entries when set.
std::vector<KnowledgeTriplet> retrieve_one_hop(const KnowledgeGraph& graph,
                                               const std::set<EntityId>& task_entities,
                                               std::optional<int> cap);

class GraphParseError : public std::runtime_error {
 public:
  GraphParseError(int line_no, const std::string& line);
  int line_no;
  std::string line;
};

/// Line-oriented text form: one `(head | relation | tail)` per edge (sorted),
/// `#` comment lines, LF endings. Orphaned relations are kept in
/// `# relation: <name>` directive lines so the round trip is exact.
std::string serialize(const KnowledgeGraph& graph);

/// Inverse of serialize. Throws GraphParseError naming the offending line.
KnowledgeGraph deserialize(std::string_view text);

}  // namespace wese::kg
