#pragma once

#include <cstdint>
#include <map>
#include <set>
#include <string>
#include <vector>

#include "fmea/infer.hpp"
#include "fmea/model.hpp"

namespace fmea {

// One held-out failure scenario with its expert (or generated) ground
// truth as canonicalized cause labels.
struct Scenario {
  Query query;
  std::vector<std::string> truth;
};

std::string scenarios_jsonl(const std::vector<Scenario>& scenarios);
std::vector<Scenario> parse_scenarios(const std::string& jsonl);

// Alias table: normalized synonym -> canonical label. File format is TSV
// `variant<TAB>canonical`, '#' comments ignored.
using AliasMap = std::map<std::string, std::string>;

std::string serialize_aliases(const AliasMap& aliases);
AliasMap parse_aliases(const std::string& content);

std::string canonical_label(const std::string& label, const AliasMap& aliases);

struct MetricsAtN {
  double p = 0.0;
  double r = 0.0;
  double f1 = 0.0;
};

// Eqs. 5-7 with F1 defined as 0 at P+R=0. `predicted` must be
// deduplicated.
MetricsAtN metrics_at_n(const std::vector<std::string>& predicted,
                        const std::set<std::string>& truth, int n);

struct MetricsReport {
  std::vector<int> ns;
  std::vector<std::map<int, MetricsAtN>> per_scenario;
  std::map<int, MetricsAtN> macro;  // per-scenario means, F1 averaged as F1
};

std::string metrics_csv(const MetricsReport& report);

std::vector<int> default_ns();  // 1..20

struct EvalContext {
  const Checkpoint* ckpt = nullptr;
  const KnowledgeGraph* graph = nullptr;
  const Ontology* ontology = nullptr;
  LlmClient* llm = nullptr;
  EmbeddingProvider* provider = nullptr;
  PredictOptions options;
  AliasMap aliases;
};

// Runs predict per scenario (full candidate ranking), canonicalizes and
// dedups predicted labels, then reduces per-scenario metrics to macro
// means.
MetricsReport evaluate(const EvalContext& ctx,
                       const std::vector<Scenario>& scenarios,
                       const std::vector<int>& ns);

// Precomputed-ranking mode: evaluates externally produced label rankings
// (one per scenario) without touching a model.
MetricsReport evaluate_rankings(
    const std::vector<std::vector<std::string>>& rankings,
    const std::vector<Scenario>& scenarios, const std::vector<int>& ns,
    const AliasMap& aliases);

// ----- synthetic data generator -----

struct GeneratorSpec {
  int lines = 4;  // >= 2; the last line is the inference target
  int functions_per_line = 5;  // >= 3
  int rules = 4;               // latent (failure -> cause) rules
  double noise = 0.3;          // per-line synonym substitution rate
};

struct SyntheticDataset {
  std::vector<Worksheet> worksheets;  // target last
  std::string target_line;
  Ontology ontology;
  std::vector<Scenario> scenarios;
  AliasMap aliases;
};

// Deterministic multi-line FMEA stand-in: shared latent cause rules
// realized per line under line-specific synonyms; the target line holds
// out every rule record, so its scenarios are answerable only through
// transfer from the source lines.
SyntheticDataset generate_synthetic(const GeneratorSpec& spec,
                                    std::uint64_t seed);

// ----- ablation harness -----

struct AblationConfig {
  bool heterogeneous = true;     // train on all lines vs target only
  bool conceptualization = true; // concept nodes/edges vs worksheet-level
  bool process_aware = true;     // lambda as configured + re-rank vs off

  std::string name() const;  // e.g. "H+C+P", "H..", ...
};

// The four rows of the ablation table.
std::vector<AblationConfig> paper_ablation_rows();

struct AblationRun {
  std::uint64_t seed = 0;
  std::map<int, MetricsAtN> macro;  // at 1, 10, 20
  std::size_t graph_nodes = 0;
  std::size_t train_triples = 0;  // has_Cause triples available for training
  double lambda = 0.0;            // as recorded in the run's checkpoint
};

struct AblationResult {
  AblationConfig config;
  std::vector<AblationRun> runs;
  std::map<int, MetricsAtN> mean;  // over seeds
};

std::vector<AblationResult> run_ablation(const SyntheticDataset& dataset,
                                         const std::vector<AblationConfig>& configs,
                                         const std::vector<std::uint64_t>& seeds,
                                         const TrainConfig& base_config);

std::string ablation_table(const std::vector<AblationResult>& results);
std::string ablation_csv(const std::vector<AblationResult>& results);

}  // namespace fmea
