#include "fmea/kg.hpp"

#include <algorithm>

#include <json.hpp>

#include "fmea/error.hpp"
#include "fmea/util.hpp"

namespace fmea {

namespace {

using nlohmann::ordered_json;

const std::vector<NodeId> kNoNeighbors;

bool is_concept_node(const Node& n) { return n.concept_id.has_value(); }

bool is_instance_node(const Node& n) { return !n.concept_id.has_value(); }

}  // namespace

const char* relation_tag(Relation rel) {
  switch (rel) {
    case Relation::ActsOn: return "acts_on";
    case Relation::Affects: return "affects";
    case Relation::HasCause: return "has_Cause";
    case Relation::HappensAt: return "happens_At";
    case Relation::Precedes: return "precedes";
  }
  return "?";
}

Relation relation_from_tag(const std::string& tag) {
  for (int i = 0; i < kNumRelations; ++i) {
    Relation rel = static_cast<Relation>(i);
    if (tag == relation_tag(rel)) return rel;
  }
  throw Error(Errc::MalformedGraphFile, "unknown relation tag '" + tag + "'");
}

const char* order_kind_name(OrderKind kind) {
  switch (kind) {
    case OrderKind::Precedes: return "precedes";
    case OrderKind::Overlap: return "overlap";
    case OrderKind::Disjoint: return "disjoint";
    case OrderKind::Unknown: return "unknown";
  }
  return "?";
}

NodeId KnowledgeGraph::add_node(Node node) {
  node.id = static_cast<NodeId>(nodes_.size());
  if (node.kind == ConceptClass::Function && node.line_id) {
    function_index_[{*node.line_id, node.label}] = node.id;
  }
  if (node.concept_id) {
    concept_index_[*node.concept_id] = node.id;
  }
  nodes_.push_back(std::move(node));
  return nodes_.back().id;
}

const Node& KnowledgeGraph::node(NodeId id) const {
  if (id < 0 || id >= static_cast<NodeId>(nodes_.size())) {
    throw Error(Errc::MalformedGraphFile,
                "node id out of range: " + std::to_string(id));
  }
  return nodes_[static_cast<std::size_t>(id)];
}

void KnowledgeGraph::check_edge_constraints(const Edge& edge) const {
  const Node& src = node(edge.src);
  const Node& dst = node(edge.dst);
  auto fail = [&](const char* want) {
    throw Error(Errc::MalformedGraphFile,
                std::string(relation_tag(edge.rel)) + " edge " +
                    std::to_string(edge.src) + "->" +
                    std::to_string(edge.dst) + " violates " + want);
  };
  switch (edge.rel) {
    case Relation::HasCause:
      if (src.kind != ConceptClass::Failure ||
          dst.kind != ConceptClass::Failure) {
        fail("Failure -> Failure");
      }
      break;
    case Relation::HappensAt:
      if (src.kind != ConceptClass::Failure ||
          dst.kind != ConceptClass::Function) {
        fail("Failure -> Function");
      }
      break;
    case Relation::Precedes:
      if (src.kind != ConceptClass::Function ||
          dst.kind != ConceptClass::Function || !src.line_id ||
          src.line_id != dst.line_id) {
        fail("Function -> Function on one line");
      }
      break;
    case Relation::ActsOn:
      if (!(is_concept_node(src) && src.kind == ConceptClass::Action &&
            is_concept_node(dst) && dst.kind == ConceptClass::Component)) {
        fail("Action concept -> Component concept");
      }
      break;
    case Relation::Affects: {
      const bool effect_link = is_instance_node(src) &&
                               src.kind == ConceptClass::Failure &&
                               is_instance_node(dst) &&
                               dst.kind == ConceptClass::Failure;
      const bool bridge = is_instance_node(src) &&
                          (src.kind == ConceptClass::Failure ||
                           src.kind == ConceptClass::Function) &&
                          is_concept_node(dst);
      const bool action_state = is_concept_node(src) &&
                                src.kind == ConceptClass::Action &&
                                is_concept_node(dst) &&
                                dst.kind == ConceptClass::State;
      const bool state_parameter = is_concept_node(src) &&
                                   src.kind == ConceptClass::State &&
                                   is_concept_node(dst) &&
                                   dst.kind == ConceptClass::Parameter;
      if (!effect_link && !bridge && !action_state && !state_parameter) {
        fail("affects endpoint rule");
      }
      break;
    }
  }
}

bool KnowledgeGraph::add_edge(NodeId src, Relation rel, NodeId dst) {
  Edge edge{src, rel, dst};
  check_edge_constraints(edge);
  if (!edge_set_.insert(edge).second) return false;
  edges_.push_back(edge);
  auto& out = out_[{static_cast<int>(rel), src}];
  out.insert(std::lower_bound(out.begin(), out.end(), dst), dst);
  auto& in = in_[{static_cast<int>(rel), dst}];
  in.insert(std::lower_bound(in.begin(), in.end(), src), src);
  return true;
}

const std::vector<NodeId>& KnowledgeGraph::out_neighbors(Relation rel,
                                                         NodeId src) const {
  auto it = out_.find({static_cast<int>(rel), src});
  return it == out_.end() ? kNoNeighbors : it->second;
}

const std::vector<NodeId>& KnowledgeGraph::in_neighbors(Relation rel,
                                                        NodeId dst) const {
  auto it = in_.find({static_cast<int>(rel), dst});
  return it == in_.end() ? kNoNeighbors : it->second;
}

std::optional<NodeId> KnowledgeGraph::find_function_node(
    const std::string& line_id, const std::string& label) const {
  auto it = function_index_.find({line_id, label});
  if (it == function_index_.end()) return std::nullopt;
  return it->second;
}

std::optional<NodeId> KnowledgeGraph::find_concept_node(
    const ConceptId& concept_id) const {
  auto it = concept_index_.find(concept_id);
  if (it == concept_index_.end()) return std::nullopt;
  return it->second;
}

std::vector<NodeId> KnowledgeGraph::cause_candidates() const {
  std::set<NodeId> pool;
  for (const Edge& e : edges_) {
    if (e.rel == Relation::HasCause) pool.insert(e.dst);
  }
  return std::vector<NodeId>(pool.begin(), pool.end());
}

ProcessIndex::ProcessIndex(const KnowledgeGraph& g) {
  positions_.resize(g.node_count());
  for (const Node& n : g.nodes()) {
    if (n.kind == ConceptClass::Function && n.line_id && n.order_index) {
      positions_[static_cast<std::size_t>(n.id)] = {*n.line_id, *n.order_index};
    }
  }
  for (const Node& n : g.nodes()) {
    if (positions_[static_cast<std::size_t>(n.id)]) continue;
    const auto& anchors = g.out_neighbors(Relation::HappensAt, n.id);
    if (anchors.empty()) continue;
    const auto& anchor = positions_[static_cast<std::size_t>(anchors.front())];
    if (anchor) positions_[static_cast<std::size_t>(n.id)] = anchor;
  }
}

std::optional<std::pair<std::string, int>> ProcessIndex::position(
    NodeId id) const {
  if (id < 0 || id >= static_cast<NodeId>(positions_.size()))
    return std::nullopt;
  return positions_[static_cast<std::size_t>(id)];
}

OrderDistance ProcessIndex::distance(NodeId h, NodeId t, int k_overlap) const {
  auto ph = position(h);
  auto pt = position(t);
  if (!ph || !pt || ph->first != pt->first) return OrderDistance::unknown();
  if (ph->second < pt->second) return OrderDistance::precedes();
  if (ph->second == pt->second) return OrderDistance::overlap(k_overlap);
  return OrderDistance::disjoint();
}

OrderDistance process_distance(const KnowledgeGraph& g, NodeId h, NodeId t,
                               int k_overlap) {
  return ProcessIndex(g).distance(h, t, k_overlap);
}

namespace {

struct RowConceptIds {
  std::optional<SlotResolution> action, state, component, parameter;
};

}  // namespace

KnowledgeGraph instantiate_graph(const Worksheet& ws,
                                 const std::vector<ExtractionRow>& rows,
                                 const ProcessFlow& flow,
                                 const Ontology& ontology) {
  // Rows must mirror the worksheet's non-empty fields in order.
  std::vector<std::pair<std::size_t, RecordField>> expected;
  for (std::size_t i = 0; i < ws.records.size(); ++i) {
    const FmeaRecord& rec = ws.records[i];
    expected.emplace_back(i, RecordField::Function);
    expected.emplace_back(i, RecordField::Failure);
    expected.emplace_back(i, RecordField::Cause);
    if (!util::trim(rec.effect_text).empty()) {
      expected.emplace_back(i, RecordField::Effect);
    }
  }
  if (rows.size() != expected.size()) {
    throw Error(Errc::RowMismatch,
                "expected " + std::to_string(expected.size()) +
                    " extraction rows, got " + std::to_string(rows.size()));
  }
  for (std::size_t i = 0; i < rows.size(); ++i) {
    if (rows[i].record_index != expected[i].first ||
        rows[i].field != expected[i].second) {
      throw Error(Errc::RowMismatch, "row " + std::to_string(i) +
                                         " does not match record field order");
    }
  }

  KnowledgeGraph g;

  // Function chain first, in flow order.
  std::map<std::string, NodeId> function_nodes;
  for (std::size_t i = 0; i < flow.functions.size(); ++i) {
    Node n;
    n.kind = ConceptClass::Function;
    n.label = flow.functions[i];
    n.line_id = ws.line_id;
    n.order_index = static_cast<int>(i);
    function_nodes[n.label] = g.add_node(n);
  }
  for (const auto& [earlier, later] : flow.precedes_pairs) {
    g.add_edge(function_nodes.at(earlier), Relation::Precedes,
               function_nodes.at(later));
  }

  // Instance nodes per record: one Failure node per (failure, function),
  // one cause node per distinct cause text, one effect node per distinct
  // effect text. Causes anchor at the function of the record that
  // introduced them.
  std::map<std::pair<std::string, std::string>, NodeId> failure_nodes;
  std::map<std::string, NodeId> cause_nodes;
  std::map<std::string, NodeId> effect_nodes;
  std::vector<NodeId> record_failure(ws.records.size());
  std::vector<NodeId> record_cause(ws.records.size());
  std::vector<std::optional<NodeId>> record_effect(ws.records.size());

  auto instance_node = [&](const std::string& label) {
    Node n;
    n.kind = ConceptClass::Failure;
    n.label = label;
    n.line_id = ws.line_id;
    return g.add_node(n);
  };

  for (std::size_t i = 0; i < ws.records.size(); ++i) {
    const FmeaRecord& rec = ws.records[i];
    NodeId function_node = function_nodes.at(rec.function_text);

    auto fkey = std::make_pair(rec.failure_text, rec.function_text);
    auto fit = failure_nodes.find(fkey);
    if (fit == failure_nodes.end()) {
      NodeId id = instance_node(rec.failure_text);
      fit = failure_nodes.emplace(fkey, id).first;
      g.add_edge(id, Relation::HappensAt, function_node);
    }
    record_failure[i] = fit->second;

    auto cit = cause_nodes.find(rec.cause_text);
    if (cit == cause_nodes.end()) {
      NodeId id = instance_node(rec.cause_text);
      cit = cause_nodes.emplace(rec.cause_text, id).first;
      g.add_edge(id, Relation::HappensAt, function_node);
    }
    record_cause[i] = cit->second;
    g.add_edge(record_failure[i], Relation::HasCause, record_cause[i]);

    if (!util::trim(rec.effect_text).empty()) {
      auto eit = effect_nodes.find(rec.effect_text);
      if (eit == effect_nodes.end()) {
        NodeId id = instance_node(rec.effect_text);
        eit = effect_nodes.emplace(rec.effect_text, id).first;
      }
      record_effect[i] = eit->second;
      g.add_edge(record_failure[i], Relation::Affects, *record_effect[i]);
    }
  }

  // Concept nodes and their edges, in row order.
  auto concept_node = [&](const ConceptId& id) {
    if (auto existing = g.find_concept_node(id)) return *existing;
    const OntologyEntry& entry = ontology.at(id);  // throws UnknownConcept
    Node n;
    n.kind = id.cls;
    n.label = entry.label;
    n.concept_id = id;
    return g.add_node(n);
  };

  for (const ExtractionRow& row : rows) {
    NodeId instance;
    switch (row.field) {
      case RecordField::Function:
        instance =
            function_nodes.at(ws.records[row.record_index].function_text);
        break;
      case RecordField::Failure:
        instance = record_failure[row.record_index];
        break;
      case RecordField::Cause:
        instance = record_cause[row.record_index];
        break;
      case RecordField::Effect:
        instance = *record_effect[row.record_index];
        break;
    }
    std::optional<NodeId> action, state, component, parameter;
    if (row.action) action = concept_node(row.action->concept_id);
    if (row.state) state = concept_node(row.state->concept_id);
    if (row.component) component = concept_node(row.component->concept_id);
    if (row.parameter) parameter = concept_node(row.parameter->concept_id);
    for (const auto& concept_ref : {action, state, component, parameter}) {
      if (concept_ref) g.add_edge(instance, Relation::Affects, *concept_ref);
    }
    if (action && component) g.add_edge(*action, Relation::ActsOn, *component);
    if (action && state) g.add_edge(*action, Relation::Affects, *state);
    if (state && parameter) g.add_edge(*state, Relation::Affects, *parameter);
  }
  return g;
}

KnowledgeGraph merge_graphs(const std::vector<KnowledgeGraph>& graphs) {
  KnowledgeGraph merged;
  std::map<ConceptId, NodeId> concepts;
  for (const KnowledgeGraph& g : graphs) {
    std::vector<NodeId> remap(g.node_count());
    for (const Node& n : g.nodes()) {
      if (n.concept_id) {
        auto it = concepts.find(*n.concept_id);
        if (it != concepts.end()) {
          remap[static_cast<std::size_t>(n.id)] = it->second;
          continue;
        }
        Node copy = n;
        NodeId id = merged.add_node(copy);
        concepts[*n.concept_id] = id;
        remap[static_cast<std::size_t>(n.id)] = id;
      } else {
        Node copy = n;
        remap[static_cast<std::size_t>(n.id)] = merged.add_node(copy);
      }
    }
    for (const Edge& e : g.edges()) {
      merged.add_edge(remap[static_cast<std::size_t>(e.src)], e.rel,
                      remap[static_cast<std::size_t>(e.dst)]);
    }
  }
  return merged;
}

std::string serialize_graph(const KnowledgeGraph& g) {
  std::string out;
  {
    ordered_json header;
    header["format"] = "fmea-kg";
    header["version"] = 1;
    out += header.dump();
    out += '\n';
  }
  for (const Node& n : g.nodes()) {
    ordered_json rec;
    rec["n"] = n.id;
    rec["kind"] = class_name(n.kind);
    rec["label"] = n.label;
    if (n.line_id) rec["line"] = *n.line_id;
    if (n.concept_id) rec["concept"] = n.concept_id->str();
    if (n.order_index) rec["ord"] = *n.order_index;
    out += rec.dump();
    out += '\n';
  }
  std::vector<Edge> edges = g.edges();
  std::sort(edges.begin(), edges.end(), [](const Edge& a, const Edge& b) {
    if (a.src != b.src) return a.src < b.src;
    int tag = std::string(relation_tag(a.rel)).compare(relation_tag(b.rel));
    if (tag != 0) return tag < 0;
    return a.dst < b.dst;
  });
  for (const Edge& e : edges) {
    ordered_json rec;
    rec["s"] = e.src;
    rec["r"] = relation_tag(e.rel);
    rec["d"] = e.dst;
    out += rec.dump();
    out += '\n';
  }
  return out;
}

KnowledgeGraph parse_graph(const std::string& content) {
  std::vector<std::string> lines = util::split(content, '\n');
  std::size_t cursor = 0;
  auto bad = [](std::size_t line, const std::string& why) {
    return Error(Errc::MalformedGraphFile,
                 "line " + std::to_string(line + 1) + ": " + why);
  };
  // Header
  while (cursor < lines.size() && util::trim(lines[cursor]).empty()) ++cursor;
  if (cursor >= lines.size()) throw bad(0, "missing header");
  {
    auto header = nlohmann::json::parse(lines[cursor], nullptr, false);
    if (header.is_discarded() || header.value("format", "") != "fmea-kg" ||
        header.value("version", 0) != 1) {
      throw bad(cursor, "bad header record");
    }
    ++cursor;
  }
  KnowledgeGraph g;
  bool in_edges = false;
  for (; cursor < lines.size(); ++cursor) {
    if (util::trim(lines[cursor]).empty()) continue;
    auto rec = nlohmann::json::parse(lines[cursor], nullptr, false);
    if (rec.is_discarded() || !rec.is_object()) {
      throw bad(cursor, "unparseable record");
    }
    if (rec.contains("n")) {
      if (in_edges) throw bad(cursor, "node record after edges");
      Node n;
      try {
        NodeId declared = rec.at("n").get<NodeId>();
        if (declared != static_cast<NodeId>(g.node_count())) {
          throw bad(cursor, "node ids must be dense and sorted");
        }
        n.kind = class_from_name(rec.at("kind").get<std::string>());
        n.label = rec.at("label").get<std::string>();
        if (rec.contains("line")) n.line_id = rec["line"].get<std::string>();
        if (rec.contains("concept")) {
          n.concept_id = ConceptId::parse(rec["concept"].get<std::string>());
        }
        if (rec.contains("ord")) n.order_index = rec["ord"].get<int>();
      } catch (const Error& e) {
        if (e.code() == Errc::MalformedGraphFile) throw;
        throw bad(cursor, e.what());
      } catch (const nlohmann::json::exception& e) {
        throw bad(cursor, e.what());
      }
      g.add_node(n);
    } else if (rec.contains("s")) {
      in_edges = true;
      try {
        NodeId src = rec.at("s").get<NodeId>();
        Relation rel = relation_from_tag(rec.at("r").get<std::string>());
        NodeId dst = rec.at("d").get<NodeId>();
        if (src < 0 || src >= static_cast<NodeId>(g.node_count()) || dst < 0 ||
            dst >= static_cast<NodeId>(g.node_count())) {
          throw bad(cursor, "dangling edge endpoint");
        }
        if (!g.add_edge(src, rel, dst)) {
          throw bad(cursor, "duplicate edge");
        }
      } catch (const Error& e) {
        if (e.code() == Errc::MalformedGraphFile) throw;
        throw bad(cursor, e.what());
      } catch (const nlohmann::json::exception& e) {
        throw bad(cursor, e.what());
      }
    } else {
      throw bad(cursor, "record is neither node nor edge");
    }
  }
  return g;
}

void save_graph(const KnowledgeGraph& g, const std::string& path) {
  util::write_file(path, serialize_graph(g));
}

KnowledgeGraph load_graph(const std::string& path) {
  return parse_graph(util::read_file(path));
}

}  // namespace fmea
