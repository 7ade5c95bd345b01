#pragma once

#include <map>
#include <optional>
#include <set>
#include <string>
#include <vector>

#include "fmea/extract.hpp"
#include "fmea/ingest.hpp"
#include "fmea/ontology.hpp"

namespace fmea {

// The five forward relations. Inverse channels exist only in the learning
// view, never in serialized graphs.
enum class Relation { ActsOn, Affects, HasCause, HappensAt, Precedes };

inline constexpr int kNumRelations = 5;

const char* relation_tag(Relation rel);  // "acts_on" ... as serialized
Relation relation_from_tag(const std::string& tag);

using NodeId = int;

struct Node {
  NodeId id = 0;
  ConceptClass kind = ConceptClass::Function;
  std::string label;
  std::optional<std::string> line_id;   // instance nodes only
  std::optional<ConceptId> concept_id;     // ontology-concept nodes only
  std::optional<int> order_index;       // Function nodes only
};

struct Edge {
  NodeId src = 0;
  Relation rel = Relation::ActsOn;
  NodeId dst = 0;

  auto operator<=>(const Edge&) const = default;
};

// Typed directed graph unifying FMEA instances and ontology concepts.
// Edge vocabulary and endpoint constraints:
//   has_Cause:  Failure -> Failure   (failure instance to cause node)
//   happens_At: Failure -> Function  (instance to its process function)
//   precedes:   Function -> Function, same line, adjacent in the flow
//   acts_on:    Action concept -> Component concept
//   affects:    failure -> effect (both Failure kind), instance -> concept
//               (the bridge from Function/Failure instances to resolved
//               concepts), Action concept -> State concept, or State
//               concept -> Parameter concept
class KnowledgeGraph {
 public:
  NodeId add_node(Node node);  // id assigned densely
  // Returns false when the edge already exists. Throws on dangling
  // endpoints or an endpoint-type constraint violation.
  bool add_edge(NodeId src, Relation rel, NodeId dst);

  const std::vector<Node>& nodes() const { return nodes_; }
  const std::vector<Edge>& edges() const { return edges_; }
  const Node& node(NodeId id) const;
  std::size_t node_count() const { return nodes_.size(); }
  std::size_t edge_count() const { return edges_.size(); }

  const std::vector<NodeId>& out_neighbors(Relation rel, NodeId src) const;
  const std::vector<NodeId>& in_neighbors(Relation rel, NodeId dst) const;

  std::optional<NodeId> find_function_node(const std::string& line_id,
                                           const std::string& label) const;
  std::optional<NodeId> find_concept_node(const ConceptId& concept_id) const;

  // Distinct targets of has_Cause edges: the candidate cause pool.
  std::vector<NodeId> cause_candidates() const;

  void check_edge_constraints(const Edge& edge) const;  // throws

 private:
  std::vector<Node> nodes_;
  std::vector<Edge> edges_;
  std::set<Edge> edge_set_;
  // adjacency[rel][node] kept sorted for deterministic traversal
  std::map<std::pair<int, NodeId>, std::vector<NodeId>> out_;
  std::map<std::pair<int, NodeId>, std::vector<NodeId>> in_;
  std::map<std::pair<std::string, std::string>, NodeId> function_index_;
  std::map<ConceptId, NodeId> concept_index_;
};

// Relative process-order distance as a tagged value.
enum class OrderKind { Precedes, Overlap, Disjoint, Unknown };

struct OrderDistance {
  OrderKind kind = OrderKind::Unknown;
  int k = 1;  // Overlap only

  static OrderDistance precedes() { return {OrderKind::Precedes, 0}; }
  static OrderDistance overlap(int k) { return {OrderKind::Overlap, k}; }
  static OrderDistance disjoint() { return {OrderKind::Disjoint, 0}; }
  static OrderDistance unknown() { return {OrderKind::Unknown, 0}; }

  bool operator==(const OrderDistance&) const = default;
};

const char* order_kind_name(OrderKind kind);

// Resolves every node to a (line, position) pair where possible: Function
// nodes through their own order index, other instance nodes through their
// happens_At anchor.
class ProcessIndex {
 public:
  explicit ProcessIndex(const KnowledgeGraph& g);

  // d(h, t): Precedes when h sits earlier than t on the same line,
  // Overlap at equal positions, Disjoint when h sits later, Unknown
  // across lines or for unresolvable nodes.
  OrderDistance distance(NodeId h, NodeId t, int k_overlap = 1) const;

  std::optional<std::pair<std::string, int>> position(NodeId id) const;

 private:
  std::vector<std::optional<std::pair<std::string, int>>> positions_;
};

OrderDistance process_distance(const KnowledgeGraph& g, NodeId h, NodeId t,
                               int k_overlap = 1);

// Builds one line's subgraph from extraction rows. Rows must correspond
// one-to-one with the worksheet's non-empty record fields.
KnowledgeGraph instantiate_graph(const Worksheet& ws,
                                 const std::vector<ExtractionRow>& rows,
                                 const ProcessFlow& flow,
                                 const Ontology& ontology);

// Merges line graphs: concept nodes unify by ConceptId, instance nodes
// never merge, ids are reassigned densely, duplicate edges collapse.
KnowledgeGraph merge_graphs(const std::vector<KnowledgeGraph>& graphs);

// Graph file: JSON Lines with a header record, nodes sorted by id, edges
// sorted lexicographically. Saves are byte-stable.
std::string serialize_graph(const KnowledgeGraph& g);
KnowledgeGraph parse_graph(const std::string& content);
void save_graph(const KnowledgeGraph& g, const std::string& path);
KnowledgeGraph load_graph(const std::string& path);

}  // namespace fmea
