#include <future>

#include "fmea/eval.hpp"
#include "fmea/pipeline.hpp"

namespace fmea {

namespace {

AblationRun run_one(const SyntheticDataset& dataset,
                    const AblationConfig& config, std::uint64_t seed,
                    const TrainConfig& base_config) {
  std::vector<Worksheet> worksheets;
  if (config.heterogeneous) {
    worksheets = dataset.worksheets;
  } else {
    for (const Worksheet& ws : dataset.worksheets) {
      if (ws.line_id == dataset.target_line) worksheets.push_back(ws);
    }
  }

  Ontology ontology = dataset.ontology;
  MockLlm llm;
  BuildOptions build;
  build.conceptualization = config.conceptualization;
  KnowledgeGraph g = build_kg(worksheets, ontology, llm, build);

  OfflineEmbeddingProvider provider;
  std::vector<std::string> labels;
  for (const Node& n : g.nodes()) labels.push_back(n.label);
  PcaModel pca = fit_pca(embed_texts(provider, labels), base_config.text_dim);

  TrainConfig cfg = base_config;
  cfg.seed = seed;
  if (!config.process_aware) cfg.lambda = 0.0;

  Eigen::MatrixXd text = text_features(g, pca, provider);
  Checkpoint ckpt = train(g, text, pca, cfg);

  EvalContext ctx;
  ctx.ckpt = &ckpt;
  ctx.graph = &g;
  ctx.ontology = &ontology;
  ctx.llm = &llm;
  ctx.provider = &provider;
  ctx.options.order_logit = config.process_aware;
  ctx.options.rerank = config.process_aware;
  ctx.aliases = dataset.aliases;

  MetricsReport report = evaluate(ctx, dataset.scenarios, {1, 10, 20});
  AblationRun run;
  run.seed = seed;
  run.macro = report.macro;
  run.graph_nodes = g.node_count();
  for (const Edge& e : g.edges()) {
    if (e.rel == Relation::HasCause) ++run.train_triples;
  }
  run.lambda = ckpt.config.lambda;
  return run;
}

}  // namespace

std::vector<AblationResult> run_ablation(
    const SyntheticDataset& dataset,
    const std::vector<AblationConfig>& configs,
    const std::vector<std::uint64_t>& seeds, const TrainConfig& base_config) {
  // Runs are independent and pure; spread them over the hardware and
  // gather in a fixed order.
  std::vector<std::future<AblationRun>> futures;
  for (const AblationConfig& config : configs) {
    for (std::uint64_t seed : seeds) {
      futures.push_back(std::async(std::launch::async, run_one,
                                   std::cref(dataset), config, seed,
                                   std::cref(base_config)));
    }
  }
  std::vector<AblationResult> results;
  std::size_t cursor = 0;
  for (const AblationConfig& config : configs) {
    AblationResult result;
    result.config = config;
    for (std::size_t s = 0; s < seeds.size(); ++s) {
      result.runs.push_back(futures[cursor++].get());
    }
    for (int n : {1, 10, 20}) {
      MetricsAtN mean;
      for (const AblationRun& run : result.runs) {
        mean.p += run.macro.at(n).p;
        mean.r += run.macro.at(n).r;
        mean.f1 += run.macro.at(n).f1;
      }
      const auto count = static_cast<double>(result.runs.size());
      mean.p /= count;
      mean.r /= count;
      mean.f1 /= count;
      result.mean[n] = mean;
    }
    results.push_back(std::move(result));
  }
  return results;
}

}  // namespace fmea
