#include <doctest.h>

#include <set>

#include "fmea/error.hpp"
#include "fmea/eval.hpp"
#include "fmea/infer.hpp"
#include "fmea/pipeline.hpp"
#include "fmea/util.hpp"

using namespace fmea;

namespace {

const std::string kFixtureDir = FMEA_FIXTURE_DIR;

struct Fixture {
  Ontology ontology;
  KnowledgeGraph graph;
  PcaModel pca;
  Checkpoint ckpt;
};

// Fixture line-1 graph with an untrained (epochs=0) checkpoint: enough for
// mapping and ranking mechanics.
Fixture line1_fixture(int epochs = 0) {
  Fixture f;
  f.ontology = load_ontology(kFixtureDir + "/ontology.tsv");
  MockLlm llm;
  Worksheet ws = parse_worksheet(kFixtureDir + "/line-1.csv", "line-1");
  f.graph = build_kg({ws}, f.ontology, llm, {});
  OfflineEmbeddingProvider provider;
  std::vector<std::string> labels;
  for (const Node& n : f.graph.nodes()) labels.push_back(n.label);
  f.pca = fit_pca(embed_texts(provider, labels), 32);
  TrainConfig cfg;
  cfg.text_dim = 32;
  cfg.hidden_dim = 16;
  cfg.type_dim = 4;
  cfg.epochs = epochs;
  cfg.seed = 3;
  f.ckpt = train(f.graph, text_features(f.graph, f.pca, provider), f.pca, cfg);
  return f;
}

}  // namespace

TEST_CASE("query mapping anchors at the function and finds concept nodes") {
  Fixture f = line1_fixture();
  MockLlm llm;
  Query q{"false detection during visual inspection", "line-1",
          "Visual inspection"};
  QueryMapping mapping = map_query_to_nodes(q, f.graph, f.ontology, llm);
  CHECK(mapping.function_node ==
        *f.graph.find_function_node("line-1", "Visual inspection"));
  // the mock reads "inspection" as an Action term; A-017 is in the graph
  REQUIRE(mapping.concept_nodes.size() == 1);
  CHECK(f.graph.node(mapping.concept_nodes[0]).concept_id ==
        ConceptId::parse("A-017"));
  CHECK(mapping.unmatched.empty());
}

TEST_CASE("functions resolve by order position too") {
  Fixture f = line1_fixture();
  MockLlm llm;
  Query q{"conveyor misalignment", "line-1", "4"};
  QueryMapping mapping = map_query_to_nodes(q, f.graph, f.ontology, llm);
  CHECK(f.graph.node(mapping.function_node).label == "Visual inspection");
}

TEST_CASE("unknown functions and empty descriptions fail loudly") {
  Fixture f = line1_fixture();
  MockLlm llm;
  try {
    map_query_to_nodes({"misalignment", "line-1", "No such step"}, f.graph,
                       f.ontology, llm);
    FAIL("expected FunctionNotFound");
  } catch (const Error& e) {
    CHECK(e.code() == Errc::FunctionNotFound);
  }
  try {
    map_query_to_nodes({"", "line-1", "Visual inspection"}, f.graph,
                       f.ontology, llm);
    FAIL("expected NoEntitiesExtracted");
  } catch (const Error& e) {
    CHECK(e.code() == Errc::NoEntitiesExtracted);
  }
  try {
    map_query_to_nodes({"totally unrelated words", "line-1",
                        "Visual inspection"},
                       f.graph, f.ontology, llm);
    FAIL("expected NoEntitiesExtracted");
  } catch (const Error& e) {
    CHECK(e.code() == Errc::NoEntitiesExtracted);
  }
}

TEST_CASE("terms without graph nodes are reported, not dropped") {
  Fixture f = line1_fixture();
  MockLlm llm;
  // "cutting" resolves to A-023 in the registry, but line-1 never uses it
  Query q{"cutting misalignment", "line-1", "Visual inspection"};
  QueryMapping mapping = map_query_to_nodes(q, f.graph, f.ontology, llm);
  REQUIRE(mapping.unmatched.size() == 1);
  CHECK(mapping.unmatched[0] == "cutting");
  REQUIRE(mapping.concept_nodes.size() == 1);  // Misalignment S-001
  CHECK(f.graph.node(mapping.concept_nodes[0]).concept_id ==
        ConceptId::parse("S-001"));
}

TEST_CASE("score_candidates: topk, ties by node id, alignment guard") {
  Fixture f = line1_fixture();
  MockLlm llm;
  OfflineEmbeddingProvider provider;
  Query q{"chip misalignment", "line-1", "Component placement"};
  QueryMapping mapping = map_query_to_nodes(q, f.graph, f.ontology, llm);

  PredictOptions no_order;
  no_order.order_logit = false;
  auto all = score_candidates(f.ckpt, f.graph, provider, mapping, q, 1000,
                              no_order);
  CHECK(all.size() == f.graph.cause_candidates().size());
  auto top3 = score_candidates(f.ckpt, f.graph, provider, mapping, q, 3,
                               no_order);
  REQUIRE(top3.size() == 3);
  for (int i = 0; i < 3; ++i) {
    CHECK(top3[i].rank == i + 1);
    CHECK(top3[i].node_id == all[i].node_id);
  }
  // descending logits with id tie-break
  for (std::size_t i = 0; i + 1 < all.size(); ++i) {
    bool ordered = all[i].logit > all[i + 1].logit ||
                   (all[i].logit == all[i + 1].logit &&
                    all[i].node_id < all[i + 1].node_id);
    CHECK(ordered);
  }
  CHECK(score_candidates(f.ckpt, f.graph, provider, mapping, q, 0, no_order)
            .empty());

  // checkpoint trained on a different graph is rejected
  Checkpoint stale = f.ckpt;
  stale.graph_digest = "0000000000000000";
  try {
    score_candidates(stale, f.graph, provider, mapping, q, 5, no_order);
    FAIL("expected AlignmentMismatch");
  } catch (const Error& e) {
    CHECK(e.code() == Errc::AlignmentMismatch);
  }
}

TEST_CASE("a single candidate lands at rank 1 regardless of logit") {
  // tiny graph with exactly one cause node
  Ontology ontology = load_ontology(kFixtureDir + "/ontology.tsv");
  MockLlm llm;
  Worksheet ws = parse_worksheet_text(
      "function,failure,cause,effect,recommendation\n"
      "Chip conveyance,Misalignment,robot drift,,\n",
      "L");
  KnowledgeGraph g = build_kg({ws}, ontology, llm, {});
  OfflineEmbeddingProvider provider;
  std::vector<std::string> labels;
  for (const Node& n : g.nodes()) labels.push_back(n.label);
  PcaModel pca = fit_pca(embed_texts(provider, labels), 8);
  TrainConfig cfg;
  cfg.text_dim = 8;
  cfg.hidden_dim = 4;
  cfg.type_dim = 2;
  cfg.epochs = 0;
  Checkpoint ckpt = train(g, text_features(g, pca, provider), pca, cfg);
  Query q{"chip misalignment", "L", "Chip conveyance"};
  QueryMapping mapping = map_query_to_nodes(q, g, ontology, llm);
  auto ranked = score_candidates(ckpt, g, provider, mapping, q, 5, {});
  REQUIRE(ranked.size() == 1);
  CHECK(ranked[0].rank == 1);
  CHECK(ranked[0].label == "robot drift");
  CHECK(ranked[0].order.kind == OrderKind::Overlap);
}

namespace {

RankedCandidate make_candidate(int id, double logit, OrderKind kind) {
  RankedCandidate c;
  c.node_id = id;
  c.label = "c" + std::to_string(id);
  c.logit = logit;
  c.order.kind = kind;
  return c;
}

}  // namespace

TEST_CASE("re-rank: the partition rule beats raw logits") {
  std::vector<RankedCandidate> candidates = {
      make_candidate(0, 5.0, OrderKind::Disjoint),
      make_candidate(1, 4.0, OrderKind::Precedes),
  };
  candidates[0].rank = 1;
  candidates[1].rank = 2;
  auto reranked = rerank_by_process(candidates);
  CHECK(reranked[0].node_id == 1);
  CHECK(reranked[0].rank == 1);
  CHECK(reranked[1].node_id == 0);
  CHECK(reranked[1].rank == 2);
}

TEST_CASE("re-rank keeps all-Precedes lists unchanged") {
  std::vector<RankedCandidate> candidates;
  for (int i = 0; i < 5; ++i) {
    candidates.push_back(
        make_candidate(i, 5.0 - i, OrderKind::Precedes));
    candidates.back().rank = i + 1;
  }
  auto reranked = rerank_by_process(candidates);
  for (int i = 0; i < 5; ++i) {
    CHECK(reranked[i].node_id == i);
    CHECK(reranked[i].rank == i + 1);
  }
}

TEST_CASE("re-rank of a mixed six matches the hand-built stable partition") {
  std::vector<RankedCandidate> candidates = {
      make_candidate(0, 9.0, OrderKind::Disjoint),
      make_candidate(1, 8.0, OrderKind::Unknown),
      make_candidate(2, 7.0, OrderKind::Precedes),
      make_candidate(3, 6.0, OrderKind::Overlap),
      make_candidate(4, 5.0, OrderKind::Disjoint),
      make_candidate(5, 4.0, OrderKind::Precedes),
  };
  auto reranked = rerank_by_process(candidates);
  std::vector<int> order;
  for (const auto& c : reranked) order.push_back(c.node_id);
  // brute-force stable partition: [2,3,5][1][0,4]
  CHECK(order == std::vector<int>{2, 3, 5, 1, 0, 4});
  for (std::size_t i = 0; i < reranked.size(); ++i) {
    CHECK(reranked[i].rank == static_cast<int>(i) + 1);
  }
}

TEST_CASE("property: no Disjoint candidate ever outranks Precedes/Overlap") {
  util::Rng rng(404);
  for (int trial = 0; trial < 300; ++trial) {
    std::vector<RankedCandidate> candidates;
    int n = 1 + static_cast<int>(rng.below(12));
    for (int i = 0; i < n; ++i) {
      OrderKind kind = static_cast<OrderKind>(rng.below(4));
      candidates.push_back(make_candidate(i, rng.normal(), kind));
    }
    std::sort(candidates.begin(), candidates.end(),
              [](auto& a, auto& b) { return a.logit > b.logit; });
    auto reranked = rerank_by_process(candidates);
    // partition safety
    bool seen_unknown = false, seen_disjoint = false;
    for (const auto& c : reranked) {
      if (c.order.kind == OrderKind::Unknown) seen_unknown = true;
      if (c.order.kind == OrderKind::Disjoint) seen_disjoint = true;
      if (c.order.kind == OrderKind::Precedes ||
          c.order.kind == OrderKind::Overlap) {
        CHECK_FALSE(seen_unknown);
        CHECK_FALSE(seen_disjoint);
      }
      if (c.order.kind == OrderKind::Unknown) CHECK_FALSE(seen_disjoint);
    }
    // within each class, relative logit order is preserved (stability)
    for (std::size_t i = 0; i + 1 < reranked.size(); ++i) {
      for (std::size_t j = i + 1; j < reranked.size(); ++j) {
        if (reranked[i].order.kind == reranked[j].order.kind) {
          CHECK(reranked[i].logit >= reranked[j].logit);
        }
      }
    }
  }
}

TEST_CASE("predict: topk=0 is empty; replay reproduces output bytes") {
  Fixture f = line1_fixture(4);
  OfflineEmbeddingProvider provider;
  MockLlm mock;
  Query q{"chip misalignment near conveyor", "line-1", "Component placement"};
  CHECK(predict(q, f.ckpt, f.graph, f.ontology, mock, provider, 0).empty());

  RecordingLlm recorder(mock);
  auto live = predict(q, f.ckpt, f.graph, f.ontology, recorder, provider, 10);
  ReplayLlm replay = ReplayLlm::from_text(recorder.transcript_jsonl());
  auto replayed =
      predict(q, f.ckpt, f.graph, f.ontology, replay, provider, 10);
  CHECK(candidates_jsonl(live) == candidates_jsonl(replayed));
  CHECK(replay.hits() > 0);
  // run twice more: byte-identical again
  ReplayLlm replay2 = ReplayLlm::from_text(recorder.transcript_jsonl());
  auto again =
      predict(q, f.ckpt, f.graph, f.ontology, replay2, provider, 10);
  CHECK(candidates_jsonl(again) == candidates_jsonl(live));
}

TEST_CASE("ontology_from_graph rebuilds the instantiated concepts") {
  Fixture f = line1_fixture();
  Ontology skeleton = ontology_from_graph(f.graph);
  for (const Node& n : f.graph.nodes()) {
    if (!n.concept_id) continue;
    CHECK(skeleton.contains(*n.concept_id));
    CHECK(skeleton.at(*n.concept_id).label == n.label);
  }
}
