#include "fmea/infer.hpp"

#include <algorithm>
#include <cctype>

#include <json.hpp>

#include "fmea/error.hpp"
#include "fmea/extract.hpp"
#include "fmea/util.hpp"

namespace fmea {

namespace {

std::optional<NodeId> resolve_function(const Query& query,
                                       const KnowledgeGraph& g) {
  if (auto node = g.find_function_node(query.line_id, query.function)) {
    return node;
  }
  // A bare integer names the order position instead of the label.
  const std::string trimmed = util::trim(query.function);
  if (!trimmed.empty() &&
      std::all_of(trimmed.begin(), trimmed.end(), [](char c) {
        return std::isdigit(static_cast<unsigned char>(c)) != 0;
      })) {
    const int position = std::stoi(trimmed);
    for (const Node& n : g.nodes()) {
      if (n.kind == ConceptClass::Function && n.line_id == query.line_id &&
          n.order_index == position) {
        return n.id;
      }
    }
  }
  return std::nullopt;
}

}  // namespace

QueryMapping map_query_to_nodes(const Query& query, const KnowledgeGraph& g,
                                const Ontology& ontology, LlmClient& llm,
                                int shortlist_k) {
  if (util::trim(query.description).empty()) {
    throw Error(Errc::NoEntitiesExtracted, "empty query description");
  }
  auto function_node = resolve_function(query, g);
  if (!function_node) {
    throw Error(Errc::FunctionNotFound,
                query.line_id + " / " + query.function);
  }

  SlotExtraction slots = extract_slots(query.description, llm);
  struct SlotText {
    ConceptClass cls;
    const std::optional<std::string>* text;
  };
  const SlotText slot_texts[] = {
      {ConceptClass::Action, &slots.action},
      {ConceptClass::State, &slots.state},
      {ConceptClass::Component, &slots.component},
      {ConceptClass::Parameter, &slots.parameter},
  };

  QueryMapping mapping;
  mapping.function_node = *function_node;
  bool any_slot = false;
  for (const auto& [cls, text] : slot_texts) {
    if (!text->has_value()) continue;
    any_slot = true;
    std::vector<OntologyEntry> entries = ontology.subtree(cls);
    if (entries.empty()) {
      mapping.unmatched.push_back(**text);
      continue;
    }
    try {
      std::vector<Candidate> candidates =
          shortlist_by_string_match(**text, entries, shortlist_k);
      ResolvedId resolved = select_id(**text, candidates, llm, false);
      const ConceptId id = std::get<ResolvedId::Existing>(resolved.value).id;
      if (auto node = g.find_concept_node(id)) {
        mapping.concept_nodes.push_back(*node);
      } else {
        mapping.unmatched.push_back(**text);
      }
    } catch (const Error& e) {
      // NEW at inference time or an out-of-contract answer leaves the term
      // unmatched rather than failing the query.
      if (e.code() == Errc::NewForbidden ||
          e.code() == Errc::IdNotInCandidates ||
          e.code() == Errc::SchemaViolation) {
        mapping.unmatched.push_back(**text);
      } else {
        throw;
      }
    }
  }
  if (!any_slot) {
    throw Error(Errc::NoEntitiesExtracted, query.description);
  }
  return mapping;
}

namespace {

OrderDistance order_between(
    const std::optional<std::pair<std::string, int>>& from,
    const std::optional<std::pair<std::string, int>>& to, int k_overlap) {
  if (!from || !to || from->first != to->first) {
    return OrderDistance::unknown();
  }
  if (from->second < to->second) return OrderDistance::precedes();
  if (from->second == to->second) return OrderDistance::overlap(k_overlap);
  return OrderDistance::disjoint();
}

}  // namespace

std::vector<RankedCandidate> score_candidates(const Checkpoint& ckpt,
                                              const KnowledgeGraph& g,
                                              EmbeddingProvider& provider,
                                              const QueryMapping& mapping,
                                              const Query& query, int topk,
                                              const PredictOptions& options) {
  if (topk < 0) throw std::invalid_argument("topk must be >= 0");
  if (ckpt.node_count != static_cast<int>(g.node_count()) ||
      ckpt.graph_digest != graph_digest(g)) {
    throw Error(Errc::AlignmentMismatch,
                "checkpoint was trained on a different graph");
  }
  if (topk == 0) return {};

  const TrainConfig& cfg = ckpt.config;
  const int n = static_cast<int>(g.node_count());
  const NodeId query_node = n;

  // Transient failure anchor: the query joins message passing through its
  // happens_At link and concept bridges without mutating the stored graph.
  std::vector<Triple> edges = graph_triples(g);
  edges.push_back({query_node, Relation::HappensAt, mapping.function_node});
  for (NodeId concept_ref : mapping.concept_nodes) {
    edges.push_back({query_node, Relation::Affects, concept_ref});
  }
  MessageGraph mg = MessageGraph::from_edges(n + 1, edges);

  std::vector<std::string> labels;
  labels.reserve(g.node_count() + 1);
  for (const Node& node : g.nodes()) labels.push_back(node.label);
  labels.push_back(query.description);
  Eigen::MatrixXd text = project(ckpt.pca, embed_texts(provider, labels));

  Eigen::MatrixXd x(text.rows(), text.cols() + ckpt.params.type_table.cols());
  x.leftCols(text.cols()) = text;
  for (const Node& node : g.nodes()) {
    x.row(node.id).tail(ckpt.params.type_table.cols()) =
        ckpt.params.type_table.row(class_index(node.kind));
  }
  x.row(query_node).tail(ckpt.params.type_table.cols()) =
      ckpt.params.type_table.row(class_index(ConceptClass::Failure));

  Eigen::MatrixXd z = rgcn_forward(mg, x, ckpt.params, nullptr);

  ProcessIndex index(g);
  const auto query_pos = index.position(mapping.function_node);

  std::vector<RankedCandidate> out;
  for (NodeId candidate : g.cause_candidates()) {
    const auto candidate_pos = index.position(candidate);
    double logit = complex_score_halves(
        z.row(query_node),
        ckpt.params.rel_embed.row(static_cast<int>(Relation::HasCause)),
        z.row(candidate));
    if (options.order_logit) {
      // combined score over the triple (query, has_Cause, candidate)
      OrderDistance d = order_between(query_pos, candidate_pos, cfg.k_overlap);
      logit += cfg.lambda * order_score(d, cfg.alpha, cfg.beta);
    }
    RankedCandidate rc;
    rc.node_id = candidate;
    rc.label = g.node(candidate).label;
    rc.logit = logit;
    rc.order = order_between(candidate_pos, query_pos, cfg.k_overlap);
    out.push_back(std::move(rc));
  }
  std::sort(out.begin(), out.end(),
            [](const RankedCandidate& a, const RankedCandidate& b) {
              if (a.logit != b.logit) return a.logit > b.logit;
              return a.node_id < b.node_id;
            });
  if (out.size() > static_cast<std::size_t>(topk)) {
    out.resize(static_cast<std::size_t>(topk));
  }
  for (std::size_t i = 0; i < out.size(); ++i) {
    out[i].rank = static_cast<int>(i) + 1;
  }
  return out;
}

std::vector<RankedCandidate> rerank_by_process(
    std::vector<RankedCandidate> candidates) {
  auto bucket = [](const RankedCandidate& c) {
    switch (c.order.kind) {
      case OrderKind::Precedes:
      case OrderKind::Overlap: return 0;
      case OrderKind::Unknown: return 1;
      case OrderKind::Disjoint: return 2;
    }
    return 1;
  };
  std::stable_sort(candidates.begin(), candidates.end(),
                   [&](const RankedCandidate& a, const RankedCandidate& b) {
                     return bucket(a) < bucket(b);
                   });
  for (std::size_t i = 0; i < candidates.size(); ++i) {
    candidates[i].rank = static_cast<int>(i) + 1;
  }
  return candidates;
}

std::vector<RankedCandidate> predict(const Query& query,
                                     const Checkpoint& ckpt,
                                     const KnowledgeGraph& g,
                                     const Ontology& ontology, LlmClient& llm,
                                     EmbeddingProvider& provider, int topk,
                                     const PredictOptions& options) {
  if (topk == 0) return {};
  QueryMapping mapping =
      map_query_to_nodes(query, g, ontology, llm);
  std::vector<RankedCandidate> candidates =
      score_candidates(ckpt, g, provider, mapping, query, topk, options);
  if (options.rerank) candidates = rerank_by_process(candidates);
  return candidates;
}

std::string candidates_table(const std::vector<RankedCandidate>& candidates) {
  std::size_t width = 5;
  for (const auto& c : candidates) width = std::max(width, c.label.size());
  std::string out = "rank  ";
  out += "label";
  out.append(width - 5, ' ');
  out += "  logit      order\n";
  char buffer[64];
  for (const auto& c : candidates) {
    std::snprintf(buffer, sizeof(buffer), "%-4d  ", c.rank);
    out += buffer;
    out += c.label;
    out.append(width - c.label.size(), ' ');
    std::snprintf(buffer, sizeof(buffer), "  %+.4f", c.logit);
    out += buffer;
    out += "  ";
    out += order_kind_name(c.order.kind);
    out += '\n';
  }
  return out;
}

std::string candidates_jsonl(const std::vector<RankedCandidate>& candidates) {
  std::string out;
  for (const auto& c : candidates) {
    nlohmann::ordered_json rec;
    rec["rank"] = c.rank;
    rec["label"] = c.label;
    rec["logit"] = c.logit;
    rec["order"] = order_kind_name(c.order.kind);
    out += rec.dump();
    out += '\n';
  }
  return out;
}

Ontology ontology_from_graph(const KnowledgeGraph& g) {
  Ontology ontology;
  for (const Node& n : g.nodes()) {
    if (!n.concept_id) continue;
    OntologyEntry entry;
    entry.id = *n.concept_id;
    entry.label = n.label;
    ontology.insert(entry);
  }
  return ontology;
}

}  // namespace fmea
