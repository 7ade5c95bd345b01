#pragma once

#include <Eigen/Dense>
#include <complex>
#include <cstdint>
#include <string>
#include <utility>
#include <vector>

#include "fmea/features.hpp"
#include "fmea/kg.hpp"
#include "fmea/util.hpp"

namespace fmea {

struct Triple {
  NodeId h = 0;
  Relation r = Relation::HasCause;
  NodeId t = 0;

  auto operator<=>(const Triple&) const = default;
};

struct TrainConfig {
  int epochs = 1000;
  double learning_rate = 1e-3;
  int negative_ratio = 5;
  double split_train = 0.81;
  double split_val = 0.09;
  double split_test = 0.10;
  double alpha = 0.7;
  double beta = -0.1;
  double lambda = 0.6;
  int k_overlap = 1;
  std::uint64_t seed = 0;
  double weight_decay = 0.01;
  // architecture
  int text_dim = 128;
  int type_dim = 16;
  int hidden_dim = 128;  // encoder width; halves become ComplEx re/im parts
  int eval_every = 50;
  // AdamW
  double adam_beta1 = 0.9;
  double adam_beta2 = 0.999;
  double adam_eps = 1e-8;

  int input_dim() const { return text_dim + type_dim; }
  void validate() const;  // throws std::invalid_argument
};

// Message-passing channels: 5 forward relations, 5 inverses, plus the
// self-loop handled separately. Weight layout per layer:
// [0]=self, [1..5]=forward by Relation order, [6..10]=inverse.
inline constexpr int kMessageChannels = 2 * kNumRelations;
inline constexpr int kWeightChannels = kMessageChannels + 1;

struct ModelParams {
  std::vector<Eigen::MatrixXd> w1;  // kWeightChannels x (input_dim x hidden)
  std::vector<Eigen::MatrixXd> w2;  // kWeightChannels x (hidden x hidden)
  Eigen::MatrixXd rel_embed;        // kNumRelations x hidden (re || im halves)
  Eigen::MatrixXd type_table;       // 6 x type_dim

  bool all_finite() const;
};

ModelParams init_params(const TrainConfig& cfg, util::Rng& rng);

// Per-channel incoming-neighbor lists for mean-normalized message
// passing.
struct MessageGraph {
  int num_nodes = 0;
  std::vector<std::vector<std::vector<NodeId>>> in_lists;  // [channel][node]

  static MessageGraph from_edges(int num_nodes,
                                 const std::vector<Triple>& edges);
};

std::vector<Triple> graph_triples(const KnowledgeGraph& g);  // canonical order

struct LayerCache {
  Eigen::MatrixXd input;
  std::vector<Eigen::MatrixXd> aggregated;  // kMessageChannels, lazily sized
  Eigen::MatrixXd pre;
};

struct ForwardCache {
  LayerCache layer1;
  LayerCache layer2;
};

// Two layers of relation-wise mean aggregation with a self-loop; ReLU
// after layer 1, identity after layer 2.
Eigen::MatrixXd rgcn_forward(const MessageGraph& mg, const Eigen::MatrixXd& x,
                             const ModelParams& params,
                             ForwardCache* cache = nullptr);

// Convenience overload over a whole graph (all edges as messages).
Eigen::MatrixXd rgcn_forward(const KnowledgeGraph& g, const Eigen::MatrixXd& x,
                             const ModelParams& params);

struct ModelGrads {
  std::vector<Eigen::MatrixXd> w1;
  std::vector<Eigen::MatrixXd> w2;
  Eigen::MatrixXd rel_embed;
  Eigen::MatrixXd type_table;
  Eigen::MatrixXd input;  // dL/dX, source of the type-table gradient

  static ModelGrads zeros_like(const ModelParams& params);
  void accumulate_type_grads(const std::vector<int>& kind_rows, int text_dim);
};

void rgcn_backward(const MessageGraph& mg, const ModelParams& params,
                   const ForwardCache& cache, const Eigen::MatrixXd& d_output,
                   ModelGrads* grads);

// ComplEx bilinear score: Re<e_h, e_r, conj(e_t)>.
double complex_score(const std::vector<std::complex<double>>& e_h,
                     const std::vector<std::complex<double>>& e_r,
                     const std::vector<std::complex<double>>& e_t);

// Same score over (re || im) half-split rows.
double complex_score_halves(const Eigen::Ref<const Eigen::RowVectorXd>& z_h,
                            const Eigen::Ref<const Eigen::RowVectorXd>& e_r,
                            const Eigen::Ref<const Eigen::RowVectorXd>& z_t);

// Order-aware score: 1 for Precedes, alpha^k for Overlap, -1 for
// Disjoint, beta for Unknown.
double order_score(const OrderDistance& d, double alpha, double beta);

// Combined logit: ComplEx score plus lambda-weighted order score of
// d(h, t).
double combined_score(const Eigen::MatrixXd& embeddings,
                      const ModelParams& params, const ProcessIndex& order,
                      const Triple& triple, const TrainConfig& cfg,
                      bool with_order_term = true);

// Tail corruption: ratio negatives per positive, sharing (h, r), tail
// uniform over nodes excluding the true tail.
std::vector<Triple> sample_negatives(const std::vector<Triple>& positives,
                                     int ratio, util::Rng& rng, int num_nodes);

double bce_with_logits_loss(const std::vector<double>& logits,
                            const std::vector<double>& labels);

struct TripleSplit {
  std::vector<Triple> train;
  std::vector<Triple> val;
  std::vector<Triple> test;
};

// Only has_Cause triples are eligible for val/test; every other relation
// trains. Sizes follow the largest-remainder rule, train-first on ties.
TripleSplit split_triples(const std::vector<Triple>& triples,
                          const std::array<double, 3>& fractions,
                          util::Rng& rng);

struct Checkpoint {
  int version = 1;
  TrainConfig config;
  PcaModel pca;
  ModelParams params;
  int node_count = 0;
  std::string graph_digest;
  std::string embeddings_provider = "offline";
  std::vector<double> loss_trace;                 // per epoch
  std::vector<std::pair<int, double>> val_trace;  // (epoch, F1@10)
  int best_epoch = 0;
};

std::string graph_digest(const KnowledgeGraph& g);

// Full-batch training with fresh tail-corruption negatives each epoch and
// AdamW updates; returns the parameters at the best validation F1@10.
Checkpoint train(const KnowledgeGraph& g, const Eigen::MatrixXd& text_feats,
                 const PcaModel& pca, const TrainConfig& cfg);

std::string serialize_checkpoint(const Checkpoint& ckpt);
Checkpoint parse_checkpoint(const std::string& content);
void save_checkpoint(const Checkpoint& ckpt, const std::string& path);
Checkpoint load_checkpoint(const std::string& path);

std::string loss_trace_csv(const Checkpoint& ckpt);

struct FdReport {
  double max_rel_error = 0.0;
  int probes = 0;
};

// Compares the analytic gradient of the full training loss against central
// differences on randomly probed parameters. Relative error is
// |a - fd| / max(1, |a|, |fd|). corrupt_scale (tests only) perturbs the
// analytic gradient to prove the detector fires.
FdReport finite_difference_check(const KnowledgeGraph& g,
                                 const Eigen::MatrixXd& text_feats,
                                 const ModelParams& params,
                                 const TrainConfig& cfg, int probes,
                                 double eps, std::uint64_t seed,
                                 double corrupt_scale = 0.0);

}  // namespace fmea
