#pragma once

#include <string>
#include <vector>

#include "fmea/features.hpp"
#include "fmea/kg.hpp"
#include "fmea/llm.hpp"
#include "fmea/model.hpp"
#include "fmea/ontology.hpp"

namespace fmea {

struct Query {
  std::string description;
  std::string line_id;
  std::string function;  // label, or a 0-based order position as digits
};

// A candidate cause with its combined-score logit and its process order
// relative to the query's function (Precedes = the candidate's process
// comes earlier).
struct RankedCandidate {
  NodeId node_id = 0;
  std::string label;
  double logit = 0.0;
  OrderDistance order;
  int rank = 0;
};

struct QueryMapping {
  NodeId function_node = 0;
  std::vector<NodeId> concept_nodes;
  // Extracted terms that resolved to nothing in the graph; reported, never
  // silently dropped.
  std::vector<std::string> unmatched;
};

struct PredictOptions {
  bool order_logit = true;  // apply the lambda-weighted order term
  bool rerank = true;       // partition by process order after scoring
};

// Extraction reuse over the query description plus function resolution.
QueryMapping map_query_to_nodes(const Query& query, const KnowledgeGraph& g,
                                const Ontology& ontology, LlmClient& llm,
                                int shortlist_k = 5);

// Scores every eligible cause node against a transient failure anchor
// (one encoder pass over the graph plus the query node), descending logit,
// ties by node id, truncated to topk.
std::vector<RankedCandidate> score_candidates(const Checkpoint& ckpt,
                                              const KnowledgeGraph& g,
                                              EmbeddingProvider& provider,
                                              const QueryMapping& mapping,
                                              const Query& query, int topk,
                                              const PredictOptions& options);

// Stable partition: Precedes/Overlap first, then Unknown, then Disjoint;
// ranks reassigned.
std::vector<RankedCandidate> rerank_by_process(
    std::vector<RankedCandidate> candidates);

std::vector<RankedCandidate> predict(const Query& query,
                                     const Checkpoint& ckpt,
                                     const KnowledgeGraph& g,
                                     const Ontology& ontology, LlmClient& llm,
                                     EmbeddingProvider& provider, int topk,
                                     const PredictOptions& options = {});

std::string candidates_table(const std::vector<RankedCandidate>& candidates);
std::string candidates_jsonl(const std::vector<RankedCandidate>& candidates);

// Skeleton ontology from a graph's concept nodes, for inference when the
// full registry file is not at hand.
Ontology ontology_from_graph(const KnowledgeGraph& g);

}  // namespace fmea
