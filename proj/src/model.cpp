#include "fmea/model.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <map>
#include <set>

#include <json.hpp>

#include "fmea/error.hpp"

namespace fmea {

namespace {

constexpr std::uint64_t kSplitSalt = 0x51u;
constexpr std::uint64_t kInitSalt = 0x52u;
constexpr std::uint64_t kEpochSalt = 0x1000u;

double softplus(double x) {
  return x > 0 ? x + std::log1p(std::exp(-x)) : std::log1p(std::exp(x));
}

double sigmoid(double x) {
  if (x >= 0) return 1.0 / (1.0 + std::exp(-x));
  double e = std::exp(x);
  return e / (1.0 + e);
}

}  // namespace

void TrainConfig::validate() const {
  auto require = [](bool ok, const char* what) {
    if (!ok) throw std::invalid_argument(std::string("TrainConfig: ") + what);
  };
  require(epochs >= 0, "epochs must be >= 0");
  require(learning_rate > 0, "learning rate must be positive");
  require(negative_ratio >= 1, "negative ratio must be >= 1");
  require(std::abs(split_train + split_val + split_test - 1.0) < 1e-9,
          "split fractions must sum to 1");
  require(split_train > 0 && split_val >= 0 && split_test >= 0,
          "split fractions must be non-negative with train > 0");
  require(alpha > 0 && alpha < 1, "alpha must lie in (0, 1)");
  require(k_overlap >= 1, "k_overlap must be >= 1");
  require(text_dim > 0 && type_dim > 0, "feature dims must be positive");
  require(hidden_dim > 0 && hidden_dim % 2 == 0,
          "hidden dim must be positive and even");
  require(eval_every > 0, "eval_every must be positive");
  require(weight_decay >= 0, "weight decay must be non-negative");
}

bool ModelParams::all_finite() const {
  auto finite = [](const Eigen::MatrixXd& m) { return m.allFinite(); };
  for (const auto& w : w1) {
    if (!finite(w)) return false;
  }
  for (const auto& w : w2) {
    if (!finite(w)) return false;
  }
  return finite(rel_embed) && finite(type_table);
}

ModelParams init_params(const TrainConfig& cfg, util::Rng& rng) {
  auto normal_matrix = [&](Eigen::Index rows, Eigen::Index cols,
                           double scale) {
    Eigen::MatrixXd m(rows, cols);
    for (Eigen::Index i = 0; i < rows; ++i) {
      for (Eigen::Index j = 0; j < cols; ++j) {
        m(i, j) = scale * rng.normal();
      }
    }
    return m;
  };
  ModelParams params;
  const int in = cfg.input_dim();
  const int hidden = cfg.hidden_dim;
  const double scale1 = std::sqrt(2.0 / (in + hidden));
  const double scale2 = std::sqrt(2.0 / (hidden + hidden));
  params.w1.reserve(kWeightChannels);
  params.w2.reserve(kWeightChannels);
  for (int c = 0; c < kWeightChannels; ++c) {
    params.w1.push_back(normal_matrix(in, hidden, scale1));
  }
  for (int c = 0; c < kWeightChannels; ++c) {
    params.w2.push_back(normal_matrix(hidden, hidden, scale2));
  }
  params.rel_embed = normal_matrix(kNumRelations, hidden, 0.1);
  params.type_table = normal_matrix(6, cfg.type_dim, 0.1);
  return params;
}

MessageGraph MessageGraph::from_edges(int num_nodes,
                                      const std::vector<Triple>& edges) {
  MessageGraph mg;
  mg.num_nodes = num_nodes;
  mg.in_lists.assign(kMessageChannels,
                     std::vector<std::vector<NodeId>>(
                         static_cast<std::size_t>(num_nodes)));
  for (const Triple& e : edges) {
    const int r = static_cast<int>(e.r);
    mg.in_lists[static_cast<std::size_t>(r)][static_cast<std::size_t>(e.t)]
        .push_back(e.h);
    mg.in_lists[static_cast<std::size_t>(kNumRelations + r)]
               [static_cast<std::size_t>(e.h)]
        .push_back(e.t);
  }
  return mg;
}

std::vector<Triple> graph_triples(const KnowledgeGraph& g) {
  std::vector<Triple> triples;
  triples.reserve(g.edge_count());
  for (const Edge& e : g.edges()) triples.push_back({e.src, e.rel, e.dst});
  std::sort(triples.begin(), triples.end());
  return triples;
}

namespace {

bool channel_has_edges(const MessageGraph& mg, int channel) {
  for (const auto& lst : mg.in_lists[static_cast<std::size_t>(channel)]) {
    if (!lst.empty()) return true;
  }
  return false;
}

Eigen::MatrixXd aggregate_channel(const MessageGraph& mg, int channel,
                                  const Eigen::MatrixXd& h) {
  Eigen::MatrixXd out = Eigen::MatrixXd::Zero(h.rows(), h.cols());
  const auto& lists = mg.in_lists[static_cast<std::size_t>(channel)];
  for (std::size_t i = 0; i < lists.size(); ++i) {
    const auto& sources = lists[i];
    if (sources.empty()) continue;
    auto row = out.row(static_cast<Eigen::Index>(i));
    for (NodeId j : sources) row += h.row(j);
    row /= static_cast<double>(sources.size());
  }
  return out;
}

void layer_forward(const MessageGraph& mg, const Eigen::MatrixXd& h,
                   const std::vector<Eigen::MatrixXd>& weights,
                   LayerCache* cache, Eigen::MatrixXd* pre) {
  pre->noalias() = h * weights[0];
  if (cache) {
    cache->input = h;
    cache->aggregated.assign(kMessageChannels, Eigen::MatrixXd());
  }
  for (int c = 0; c < kMessageChannels; ++c) {
    if (!channel_has_edges(mg, c)) continue;
    Eigen::MatrixXd agg = aggregate_channel(mg, c, h);
    pre->noalias() += agg * weights[static_cast<std::size_t>(c + 1)];
    if (cache) cache->aggregated[static_cast<std::size_t>(c)] = std::move(agg);
  }
}

void layer_backward(const MessageGraph& mg, const LayerCache& cache,
                    const std::vector<Eigen::MatrixXd>& weights,
                    const Eigen::MatrixXd& g_pre,
                    std::vector<Eigen::MatrixXd>* d_weights,
                    Eigen::MatrixXd* d_input) {
  (*d_weights)[0].noalias() += cache.input.transpose() * g_pre;
  d_input->noalias() = g_pre * weights[0].transpose();
  for (int c = 0; c < kMessageChannels; ++c) {
    const Eigen::MatrixXd& agg = cache.aggregated[static_cast<std::size_t>(c)];
    if (agg.size() == 0) continue;
    (*d_weights)[static_cast<std::size_t>(c + 1)].noalias() +=
        agg.transpose() * g_pre;
    Eigen::MatrixXd back =
        g_pre * weights[static_cast<std::size_t>(c + 1)].transpose();
    const auto& lists = mg.in_lists[static_cast<std::size_t>(c)];
    for (std::size_t i = 0; i < lists.size(); ++i) {
      const auto& sources = lists[i];
      if (sources.empty()) continue;
      double inv = 1.0 / static_cast<double>(sources.size());
      for (NodeId j : sources) {
        d_input->row(j) += inv * back.row(static_cast<Eigen::Index>(i));
      }
    }
  }
}

}  // namespace

Eigen::MatrixXd rgcn_forward(const MessageGraph& mg, const Eigen::MatrixXd& x,
                             const ModelParams& params, ForwardCache* cache) {
  if (x.rows() != mg.num_nodes) {
    throw Error(Errc::ShapeMismatch,
                "feature rows " + std::to_string(x.rows()) + " != node count " +
                    std::to_string(mg.num_nodes));
  }
  if (params.w1.empty() || x.cols() != params.w1[0].rows()) {
    throw Error(Errc::ShapeMismatch, "feature width does not match w1");
  }
  LayerCache local1, local2;
  LayerCache* c1 = cache ? &cache->layer1 : &local1;
  LayerCache* c2 = cache ? &cache->layer2 : &local2;

  Eigen::MatrixXd pre1(x.rows(), params.w1[0].cols());
  layer_forward(mg, x, params.w1, c1, &pre1);
  c1->pre = pre1;
  Eigen::MatrixXd h1 = pre1.cwiseMax(0.0);  // ReLU

  Eigen::MatrixXd pre2(x.rows(), params.w2[0].cols());
  layer_forward(mg, h1, params.w2, c2, &pre2);
  c2->pre = pre2;
  return pre2;  // identity after layer 2
}

Eigen::MatrixXd rgcn_forward(const KnowledgeGraph& g, const Eigen::MatrixXd& x,
                             const ModelParams& params) {
  MessageGraph mg = MessageGraph::from_edges(
      static_cast<int>(g.node_count()), graph_triples(g));
  return rgcn_forward(mg, x, params, nullptr);
}

ModelGrads ModelGrads::zeros_like(const ModelParams& params) {
  ModelGrads grads;
  for (const auto& w : params.w1) {
    grads.w1.push_back(Eigen::MatrixXd::Zero(w.rows(), w.cols()));
  }
  for (const auto& w : params.w2) {
    grads.w2.push_back(Eigen::MatrixXd::Zero(w.rows(), w.cols()));
  }
  grads.rel_embed =
      Eigen::MatrixXd::Zero(params.rel_embed.rows(), params.rel_embed.cols());
  grads.type_table =
      Eigen::MatrixXd::Zero(params.type_table.rows(), params.type_table.cols());
  return grads;
}

void ModelGrads::accumulate_type_grads(const std::vector<int>& kind_rows,
                                       int text_dim) {
  for (std::size_t i = 0; i < kind_rows.size(); ++i) {
    type_table.row(kind_rows[i]) +=
        input.row(static_cast<Eigen::Index>(i)).tail(type_table.cols());
  }
  (void)text_dim;
}

void rgcn_backward(const MessageGraph& mg, const ModelParams& params,
                   const ForwardCache& cache, const Eigen::MatrixXd& d_output,
                   ModelGrads* grads) {
  // Layer 2 is linear, so the preactivation gradient is d_output itself.
  Eigen::MatrixXd d_h1;
  layer_backward(mg, cache.layer2, params.w2, d_output, &grads->w2, &d_h1);
  // ReLU mask from layer 1 preactivations.
  Eigen::MatrixXd g_pre1 =
      (cache.layer1.pre.array() > 0.0).cast<double>() * d_h1.array();
  layer_backward(mg, cache.layer1, params.w1, g_pre1, &grads->w1,
                 &grads->input);
}

double complex_score(const std::vector<std::complex<double>>& e_h,
                     const std::vector<std::complex<double>>& e_r,
                     const std::vector<std::complex<double>>& e_t) {
  if (e_h.size() != e_r.size() || e_h.size() != e_t.size()) {
    throw Error(Errc::LengthMismatch, "complex_score operand lengths differ");
  }
  // Re<h, r, conj(t)> grouped as c(au+bv) + d(av-bu); this grouping makes
  // the score bit-exactly symmetric in h and t when imaginary parts are
  // all zero.
  double score = 0.0;
  for (std::size_t i = 0; i < e_h.size(); ++i) {
    const double a = e_h[i].real(), b = e_h[i].imag();
    const double c = e_r[i].real(), d = e_r[i].imag();
    const double u = e_t[i].real(), v = e_t[i].imag();
    score += c * (a * u + b * v) + d * (a * v - b * u);
  }
  return score;
}

double complex_score_halves(const Eigen::Ref<const Eigen::RowVectorXd>& z_h,
                            const Eigen::Ref<const Eigen::RowVectorXd>& e_r,
                            const Eigen::Ref<const Eigen::RowVectorXd>& z_t) {
  if (z_h.size() != e_r.size() || z_h.size() != z_t.size() ||
      z_h.size() % 2 != 0) {
    throw Error(Errc::LengthMismatch, "half-split operand lengths differ");
  }
  const Eigen::Index half = z_h.size() / 2;
  auto a = z_h.head(half).array();
  auto b = z_h.tail(half).array();
  auto c = e_r.head(half).array();
  auto d = e_r.tail(half).array();
  auto u = z_t.head(half).array();
  auto v = z_t.tail(half).array();
  return (c * (a * u + b * v) + d * (a * v - b * u)).sum();
}

double order_score(const OrderDistance& d, double alpha, double beta) {
  if (!(alpha > 0 && alpha < 1)) {
    throw std::invalid_argument("order_score: alpha must lie in (0, 1)");
  }
  switch (d.kind) {
    case OrderKind::Precedes: return 1.0;
    case OrderKind::Overlap: return std::pow(alpha, d.k);
    case OrderKind::Disjoint: return -1.0;
    case OrderKind::Unknown: return beta;
  }
  return beta;
}

double combined_score(const Eigen::MatrixXd& embeddings,
                      const ModelParams& params, const ProcessIndex& order,
                      const Triple& triple, const TrainConfig& cfg,
                      bool with_order_term) {
  double score = complex_score_halves(
      embeddings.row(triple.h),
      params.rel_embed.row(static_cast<int>(triple.r)),
      embeddings.row(triple.t));
  if (with_order_term) {
    OrderDistance d = order.distance(triple.h, triple.t, cfg.k_overlap);
    score += cfg.lambda * order_score(d, cfg.alpha, cfg.beta);
  }
  return score;
}

std::vector<Triple> sample_negatives(const std::vector<Triple>& positives,
                                     int ratio, util::Rng& rng,
                                     int num_nodes) {
  if (ratio < 1) throw std::invalid_argument("negative ratio must be >= 1");
  if (num_nodes < 2) {
    throw std::invalid_argument("tail corruption needs at least 2 nodes");
  }
  std::vector<Triple> negatives;
  negatives.reserve(positives.size() * static_cast<std::size_t>(ratio));
  for (const Triple& pos : positives) {
    for (int k = 0; k < ratio; ++k) {
      // Uniform over all nodes except the true tail.
      auto draw = static_cast<NodeId>(
          rng.below(static_cast<std::uint64_t>(num_nodes - 1)));
      if (draw >= pos.t) ++draw;
      negatives.push_back({pos.h, pos.r, draw});
    }
  }
  return negatives;
}

double bce_with_logits_loss(const std::vector<double>& logits,
                            const std::vector<double>& labels) {
  if (logits.size() != labels.size()) {
    throw Error(Errc::LengthMismatch, "logit and label counts differ");
  }
  if (logits.empty()) return 0.0;
  double total = 0.0;
  for (std::size_t i = 0; i < logits.size(); ++i) {
    total += softplus(logits[i]) - labels[i] * logits[i];
  }
  return total / static_cast<double>(logits.size());
}

TripleSplit split_triples(const std::vector<Triple>& triples,
                          const std::array<double, 3>& fractions,
                          util::Rng& rng) {
  double sum = fractions[0] + fractions[1] + fractions[2];
  if (std::abs(sum - 1.0) > 1e-9) {
    throw std::invalid_argument("split fractions must sum to 1");
  }
  TripleSplit split;
  std::vector<Triple> eligible;
  for (const Triple& t : triples) {
    if (t.r == Relation::HasCause) {
      eligible.push_back(t);
    } else {
      split.train.push_back(t);
    }
  }
  rng.shuffle(eligible);
  const std::size_t n = eligible.size();
  std::array<std::size_t, 3> counts{};
  std::array<double, 3> remainders{};
  std::size_t assigned = 0;
  for (int i = 0; i < 3; ++i) {
    double exact = fractions[static_cast<std::size_t>(i)] *
                   static_cast<double>(n);
    counts[static_cast<std::size_t>(i)] =
        static_cast<std::size_t>(std::floor(exact + 1e-9));
    remainders[static_cast<std::size_t>(i)] =
        exact - std::floor(exact + 1e-9);
    assigned += counts[static_cast<std::size_t>(i)];
  }
  // Largest remainder, ties resolved train-first.
  std::array<int, 3> order{0, 1, 2};
  std::stable_sort(order.begin(), order.end(), [&](int a, int b) {
    return remainders[static_cast<std::size_t>(a)] >
           remainders[static_cast<std::size_t>(b)];
  });
  for (std::size_t leftover = n - assigned, i = 0; leftover > 0;
       --leftover, ++i) {
    ++counts[static_cast<std::size_t>(order[i % 3])];
  }
  std::size_t cursor = 0;
  for (std::size_t i = 0; i < counts[0]; ++i) split.train.push_back(eligible[cursor++]);
  for (std::size_t i = 0; i < counts[1]; ++i) split.val.push_back(eligible[cursor++]);
  for (std::size_t i = 0; i < counts[2]; ++i) split.test.push_back(eligible[cursor++]);
  return split;
}

namespace {

// One full-batch loss evaluation: assembles features from the current type
// table, encodes, scores positives and the fixed negatives, and reduces
// with BCE.
struct LossContext {
  const MessageGraph* mg = nullptr;
  const Eigen::MatrixXd* text = nullptr;
  const std::vector<int>* kinds = nullptr;
  const TrainConfig* cfg = nullptr;
  std::vector<Triple> samples;
  std::vector<double> labels;
  std::vector<double> order_terms;  // lambda * order score, fixed per sample

  void set_samples(const std::vector<Triple>& positives,
                   const std::vector<Triple>& negatives,
                   const ProcessIndex& order) {
    samples.clear();
    labels.clear();
    order_terms.clear();
    samples.reserve(positives.size() + negatives.size());
    for (const Triple& t : positives) {
      samples.push_back(t);
      labels.push_back(1.0);
    }
    for (const Triple& t : negatives) {
      samples.push_back(t);
      labels.push_back(0.0);
    }
    order_terms.reserve(samples.size());
    for (const Triple& t : samples) {
      OrderDistance d = order.distance(t.h, t.t, cfg->k_overlap);
      order_terms.push_back(cfg->lambda *
                            order_score(d, cfg->alpha, cfg->beta));
    }
  }

  Eigen::MatrixXd assemble(const ModelParams& params) const {
    Eigen::MatrixXd x(text->rows(), text->cols() + params.type_table.cols());
    x.leftCols(text->cols()) = *text;
    for (std::size_t i = 0; i < kinds->size(); ++i) {
      x.row(static_cast<Eigen::Index>(i)).tail(params.type_table.cols()) =
          params.type_table.row((*kinds)[i]);
    }
    return x;
  }

  double loss(const ModelParams& params) const {
    Eigen::MatrixXd x = assemble(params);
    Eigen::MatrixXd z = rgcn_forward(*mg, x, params, nullptr);
    std::vector<double> logits(samples.size());
    for (std::size_t i = 0; i < samples.size(); ++i) {
      const Triple& t = samples[i];
      logits[i] = complex_score_halves(
                      z.row(t.h),
                      params.rel_embed.row(static_cast<int>(t.r)),
                      z.row(t.t)) +
                  order_terms[i];
    }
    return bce_with_logits_loss(logits, labels);
  }

  double loss_and_grads(const ModelParams& params, ModelGrads* grads) const {
    Eigen::MatrixXd x = assemble(params);
    ForwardCache cache;
    Eigen::MatrixXd z = rgcn_forward(*mg, x, params, &cache);
    const Eigen::Index half = z.cols() / 2;

    std::vector<double> logits(samples.size());
    for (std::size_t i = 0; i < samples.size(); ++i) {
      const Triple& t = samples[i];
      logits[i] = complex_score_halves(
                      z.row(t.h),
                      params.rel_embed.row(static_cast<int>(t.r)),
                      z.row(t.t)) +
                  order_terms[i];
    }
    double loss = bce_with_logits_loss(logits, labels);

    *grads = ModelGrads::zeros_like(params);
    Eigen::MatrixXd dz = Eigen::MatrixXd::Zero(z.rows(), z.cols());
    const double inv_n = 1.0 / static_cast<double>(samples.size());
    for (std::size_t i = 0; i < samples.size(); ++i) {
      const Triple& t = samples[i];
      const double gs = (sigmoid(logits[i]) - labels[i]) * inv_n;
      auto a = z.row(t.h).head(half).array();
      auto b = z.row(t.h).tail(half).array();
      const int r = static_cast<int>(t.r);
      auto c = params.rel_embed.row(r).head(half).array();
      auto d = params.rel_embed.row(r).tail(half).array();
      auto u = z.row(t.t).head(half).array();
      auto v = z.row(t.t).tail(half).array();
      dz.row(t.h).head(half).array() += gs * (c * u + d * v);
      dz.row(t.h).tail(half).array() += gs * (c * v - d * u);
      dz.row(t.t).head(half).array() += gs * (a * c - b * d);
      dz.row(t.t).tail(half).array() += gs * (a * d + b * c);
      grads->rel_embed.row(r).head(half).array() += gs * (a * u + b * v);
      grads->rel_embed.row(r).tail(half).array() += gs * (a * v - b * u);
    }
    rgcn_backward(*mg, params, cache, dz, grads);
    grads->accumulate_type_grads(*kinds, static_cast<int>(text->cols()));
    return loss;
  }
};

std::vector<int> node_kind_rows(const KnowledgeGraph& g) {
  std::vector<int> kinds;
  kinds.reserve(g.node_count());
  for (const Node& n : g.nodes()) kinds.push_back(class_index(n.kind));
  return kinds;
}

// AdamW with decoupled weight decay over the full parameter set.
struct AdamState {
  std::vector<Eigen::MatrixXd> m, v;
  long step = 0;

  explicit AdamState(const ModelParams& params) {
    auto add = [&](const Eigen::MatrixXd& p) {
      m.push_back(Eigen::MatrixXd::Zero(p.rows(), p.cols()));
      v.push_back(Eigen::MatrixXd::Zero(p.rows(), p.cols()));
    };
    for (const auto& w : params.w1) add(w);
    for (const auto& w : params.w2) add(w);
    add(params.rel_embed);
    add(params.type_table);
  }

  void update(ModelParams* params, const ModelGrads& grads,
              const TrainConfig& cfg) {
    ++step;
    const double bc1 = 1.0 - std::pow(cfg.adam_beta1, step);
    const double bc2 = 1.0 - std::pow(cfg.adam_beta2, step);
    std::size_t slot = 0;
    auto apply = [&](Eigen::MatrixXd* p, const Eigen::MatrixXd& g) {
      Eigen::MatrixXd& mm = m[slot];
      Eigen::MatrixXd& vv = v[slot];
      ++slot;
      mm = cfg.adam_beta1 * mm + (1.0 - cfg.adam_beta1) * g;
      vv = cfg.adam_beta2 * vv + (1.0 - cfg.adam_beta2) * g.cwiseProduct(g);
      Eigen::ArrayXXd m_hat = mm.array() / bc1;
      Eigen::ArrayXXd v_hat = vv.array() / bc2;
      p->array() -= cfg.learning_rate *
                    (m_hat / (v_hat.sqrt() + cfg.adam_eps) +
                     cfg.weight_decay * p->array());
    };
    for (std::size_t i = 0; i < params->w1.size(); ++i) {
      apply(&params->w1[i], grads.w1[i]);
    }
    for (std::size_t i = 0; i < params->w2.size(); ++i) {
      apply(&params->w2[i], grads.w2[i]);
    }
    apply(&params->rel_embed, grads.rel_embed);
    apply(&params->type_table, grads.type_table);
  }
};

// Macro F1@10 over validation heads: candidates are the graph's cause pool
// minus each head's known training tails.
double validation_f1_at_10(const LossContext& ctx, const ModelParams& params,
                           const ProcessIndex& order,
                           const std::vector<Triple>& train_triples,
                           const std::vector<Triple>& val_triples,
                           const std::vector<NodeId>& pool) {
  if (val_triples.empty() || pool.empty()) return 0.0;
  Eigen::MatrixXd x = ctx.assemble(params);
  Eigen::MatrixXd z = rgcn_forward(*ctx.mg, x, params, nullptr);

  std::map<NodeId, std::set<NodeId>> truth;
  for (const Triple& t : val_triples) truth[t.h].insert(t.t);
  std::map<NodeId, std::set<NodeId>> known;
  for (const Triple& t : train_triples) {
    if (t.r == Relation::HasCause) known[t.h].insert(t.t);
  }

  double f1_sum = 0.0;
  for (const auto& [head, tails] : truth) {
    std::vector<std::pair<double, NodeId>> scored;
    const auto& exclude = known.count(head) ? known.at(head)
                                            : std::set<NodeId>{};
    for (NodeId c : pool) {
      if (c == head || exclude.count(c)) continue;
      double logit = complex_score_halves(
                         z.row(head),
                         params.rel_embed.row(
                             static_cast<int>(Relation::HasCause)),
                         z.row(c)) +
                     ctx.cfg->lambda *
                         order_score(order.distance(head, c,
                                                    ctx.cfg->k_overlap),
                                     ctx.cfg->alpha, ctx.cfg->beta);
      scored.emplace_back(logit, c);
    }
    std::sort(scored.begin(), scored.end(), [](const auto& a, const auto& b) {
      if (a.first != b.first) return a.first > b.first;
      return a.second < b.second;
    });
    const std::size_t n = std::min<std::size_t>(10, scored.size());
    std::size_t hits = 0;
    for (std::size_t i = 0; i < n; ++i) {
      if (tails.count(scored[i].second)) ++hits;
    }
    double precision = static_cast<double>(hits) / 10.0;
    double recall =
        static_cast<double>(hits) / static_cast<double>(tails.size());
    double f1 = (precision + recall) > 0
                    ? 2 * precision * recall / (precision + recall)
                    : 0.0;
    f1_sum += f1;
  }
  return f1_sum / static_cast<double>(truth.size());
}

}  // namespace

std::string graph_digest(const KnowledgeGraph& g) {
  return util::fnv1a64_hex(serialize_graph(g));
}

Checkpoint train(const KnowledgeGraph& g, const Eigen::MatrixXd& text_feats,
                 const PcaModel& pca, const TrainConfig& cfg) {
  cfg.validate();
  const int n = static_cast<int>(g.node_count());
  if (n == 0) throw Error(Errc::NoTrainableTriples, "graph is empty");
  if (text_feats.rows() != n || text_feats.cols() != cfg.text_dim) {
    throw Error(Errc::ShapeMismatch, "text feature shape mismatch");
  }
  std::vector<Triple> triples = graph_triples(g);
  const bool any_cause = std::any_of(
      triples.begin(), triples.end(),
      [](const Triple& t) { return t.r == Relation::HasCause; });
  if (!any_cause) {
    throw Error(Errc::NoTrainableTriples, "graph has no has_Cause triples");
  }

  util::Rng split_rng(util::mix(cfg.seed, kSplitSalt));
  TripleSplit split = split_triples(
      triples, {cfg.split_train, cfg.split_val, cfg.split_test}, split_rng);
  if (split.train.empty()) {
    throw Error(Errc::NoTrainableTriples, "empty training split");
  }

  MessageGraph mg = MessageGraph::from_edges(n, split.train);
  ProcessIndex order(g);
  std::vector<int> kinds = node_kind_rows(g);
  std::vector<NodeId> pool = g.cause_candidates();

  util::Rng init_rng(util::mix(cfg.seed, kInitSalt));
  ModelParams params = init_params(cfg, init_rng);
  AdamState adam(params);

  LossContext ctx;
  ctx.mg = &mg;
  ctx.text = &text_feats;
  ctx.kinds = &kinds;
  ctx.cfg = &cfg;

  Checkpoint ckpt;
  ckpt.config = cfg;
  ckpt.pca = pca;
  ckpt.node_count = n;
  ckpt.graph_digest = graph_digest(g);

  ModelParams best = params;
  double best_f1 = -1.0;
  int best_epoch = 0;

  for (int epoch = 1; epoch <= cfg.epochs; ++epoch) {
    util::Rng neg_rng(util::mix(cfg.seed, kEpochSalt + static_cast<std::uint64_t>(epoch)));
    std::vector<Triple> negatives =
        sample_negatives(split.train, cfg.negative_ratio, neg_rng, n);
    ctx.set_samples(split.train, negatives, order);

    ModelGrads grads;
    double loss = ctx.loss_and_grads(params, &grads);
    if (!std::isfinite(loss)) {
      throw Error(Errc::NonFiniteLoss, "epoch " + std::to_string(epoch));
    }
    adam.update(&params, grads, cfg);
    if (!params.all_finite()) {
      throw Error(Errc::NonFiniteLoss,
                  "epoch " + std::to_string(epoch) + " (parameters)");
    }
    ckpt.loss_trace.push_back(loss);

    const bool eval_now =
        !split.val.empty() &&
        (epoch % cfg.eval_every == 0 || epoch == cfg.epochs);
    if (eval_now) {
      double f1 = validation_f1_at_10(ctx, params, order, split.train,
                                      split.val, pool);
      ckpt.val_trace.emplace_back(epoch, f1);
      if (f1 > best_f1) {
        best_f1 = f1;
        best = params;
        best_epoch = epoch;
      }
    }
  }

  if (best_f1 < 0.0) {  // never evaluated: keep the final parameters
    best = params;
    best_epoch = cfg.epochs;
  }
  ckpt.params = std::move(best);
  ckpt.best_epoch = best_epoch;
  return ckpt;
}

namespace {

using nlohmann::ordered_json;

ordered_json matrix_to_json(const Eigen::MatrixXd& m) {
  ordered_json rows = ordered_json::array();
  for (Eigen::Index i = 0; i < m.rows(); ++i) {
    ordered_json row = ordered_json::array();
    for (Eigen::Index j = 0; j < m.cols(); ++j) row.push_back(m(i, j));
    rows.push_back(std::move(row));
  }
  return rows;
}

Eigen::MatrixXd matrix_from_json(const nlohmann::json& rows) {
  if (!rows.is_array()) {
    throw Error(Errc::MalformedGraphFile, "expected matrix rows");
  }
  if (rows.empty()) return Eigen::MatrixXd(0, 0);
  Eigen::MatrixXd m(static_cast<Eigen::Index>(rows.size()),
                    static_cast<Eigen::Index>(rows[0].size()));
  for (std::size_t i = 0; i < rows.size(); ++i) {
    for (std::size_t j = 0; j < rows[i].size(); ++j) {
      m(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)) =
          rows[i][j].get<double>();
    }
  }
  return m;
}

ordered_json vector_to_json(const Eigen::VectorXd& v) {
  ordered_json out = ordered_json::array();
  for (Eigen::Index i = 0; i < v.size(); ++i) out.push_back(v(i));
  return out;
}

Eigen::VectorXd vector_from_json(const nlohmann::json& arr) {
  Eigen::VectorXd v(static_cast<Eigen::Index>(arr.size()));
  for (std::size_t i = 0; i < arr.size(); ++i) {
    v(static_cast<Eigen::Index>(i)) = arr[i].get<double>();
  }
  return v;
}

ordered_json config_to_json(const TrainConfig& cfg) {
  ordered_json j;
  j["epochs"] = cfg.epochs;
  j["learning_rate"] = cfg.learning_rate;
  j["negative_ratio"] = cfg.negative_ratio;
  j["split_train"] = cfg.split_train;
  j["split_val"] = cfg.split_val;
  j["split_test"] = cfg.split_test;
  j["alpha"] = cfg.alpha;
  j["beta"] = cfg.beta;
  j["lambda"] = cfg.lambda;
  j["k_overlap"] = cfg.k_overlap;
  j["seed"] = cfg.seed;
  j["weight_decay"] = cfg.weight_decay;
  j["text_dim"] = cfg.text_dim;
  j["type_dim"] = cfg.type_dim;
  j["hidden_dim"] = cfg.hidden_dim;
  j["eval_every"] = cfg.eval_every;
  j["adam_beta1"] = cfg.adam_beta1;
  j["adam_beta2"] = cfg.adam_beta2;
  j["adam_eps"] = cfg.adam_eps;
  return j;
}

TrainConfig config_from_json(const nlohmann::json& j) {
  TrainConfig cfg;
  cfg.epochs = j.at("epochs").get<int>();
  cfg.learning_rate = j.at("learning_rate").get<double>();
  cfg.negative_ratio = j.at("negative_ratio").get<int>();
  cfg.split_train = j.at("split_train").get<double>();
  cfg.split_val = j.at("split_val").get<double>();
  cfg.split_test = j.at("split_test").get<double>();
  cfg.alpha = j.at("alpha").get<double>();
  cfg.beta = j.at("beta").get<double>();
  cfg.lambda = j.at("lambda").get<double>();
  cfg.k_overlap = j.at("k_overlap").get<int>();
  cfg.seed = j.at("seed").get<std::uint64_t>();
  cfg.weight_decay = j.at("weight_decay").get<double>();
  cfg.text_dim = j.at("text_dim").get<int>();
  cfg.type_dim = j.at("type_dim").get<int>();
  cfg.hidden_dim = j.at("hidden_dim").get<int>();
  cfg.eval_every = j.at("eval_every").get<int>();
  cfg.adam_beta1 = j.at("adam_beta1").get<double>();
  cfg.adam_beta2 = j.at("adam_beta2").get<double>();
  cfg.adam_eps = j.at("adam_eps").get<double>();
  return cfg;
}

}  // namespace

std::string serialize_checkpoint(const Checkpoint& ckpt) {
  ordered_json j;
  j["format"] = "fmea-checkpoint";
  j["version"] = ckpt.version;
  j["config"] = config_to_json(ckpt.config);
  j["embeddings_provider"] = ckpt.embeddings_provider;
  j["node_count"] = ckpt.node_count;
  j["graph_digest"] = ckpt.graph_digest;
  j["best_epoch"] = ckpt.best_epoch;
  ordered_json pca;
  pca["mean"] = vector_to_json(ckpt.pca.mean);
  pca["components"] = matrix_to_json(ckpt.pca.components);
  pca["explained_variance"] = vector_to_json(ckpt.pca.explained_variance);
  j["pca"] = std::move(pca);
  ordered_json params;
  ordered_json w1 = ordered_json::array();
  for (const auto& w : ckpt.params.w1) w1.push_back(matrix_to_json(w));
  ordered_json w2 = ordered_json::array();
  for (const auto& w : ckpt.params.w2) w2.push_back(matrix_to_json(w));
  params["w1"] = std::move(w1);
  params["w2"] = std::move(w2);
  params["rel_embed"] = matrix_to_json(ckpt.params.rel_embed);
  params["type_table"] = matrix_to_json(ckpt.params.type_table);
  j["params"] = std::move(params);
  j["loss_trace"] = ckpt.loss_trace;
  ordered_json val = ordered_json::array();
  for (const auto& [epoch, f1] : ckpt.val_trace) {
    val.push_back(ordered_json::array({epoch, f1}));
  }
  j["val_trace"] = std::move(val);
  return j.dump();
}

Checkpoint parse_checkpoint(const std::string& content) {
  nlohmann::json j = nlohmann::json::parse(content, nullptr, false);
  if (j.is_discarded() || j.value("format", "") != "fmea-checkpoint") {
    throw Error(Errc::MalformedGraphFile, "not a checkpoint file");
  }
  Checkpoint ckpt;
  ckpt.version = j.at("version").get<int>();
  ckpt.config = config_from_json(j.at("config"));
  ckpt.embeddings_provider = j.at("embeddings_provider").get<std::string>();
  ckpt.node_count = j.at("node_count").get<int>();
  ckpt.graph_digest = j.at("graph_digest").get<std::string>();
  ckpt.best_epoch = j.at("best_epoch").get<int>();
  ckpt.pca.mean = vector_from_json(j.at("pca").at("mean"));
  ckpt.pca.components = matrix_from_json(j.at("pca").at("components"));
  ckpt.pca.explained_variance =
      vector_from_json(j.at("pca").at("explained_variance"));
  for (const auto& w : j.at("params").at("w1")) {
    ckpt.params.w1.push_back(matrix_from_json(w));
  }
  for (const auto& w : j.at("params").at("w2")) {
    ckpt.params.w2.push_back(matrix_from_json(w));
  }
  ckpt.params.rel_embed = matrix_from_json(j.at("params").at("rel_embed"));
  ckpt.params.type_table = matrix_from_json(j.at("params").at("type_table"));
  ckpt.loss_trace = j.at("loss_trace").get<std::vector<double>>();
  for (const auto& pair : j.at("val_trace")) {
    ckpt.val_trace.emplace_back(pair[0].get<int>(), pair[1].get<double>());
  }
  return ckpt;
}

void save_checkpoint(const Checkpoint& ckpt, const std::string& path) {
  util::write_file(path, serialize_checkpoint(ckpt));
}

Checkpoint load_checkpoint(const std::string& path) {
  return parse_checkpoint(util::read_file(path));
}

std::string loss_trace_csv(const Checkpoint& ckpt) {
  std::string out = "epoch,train_loss,val_f1_at_10\n";
  std::map<int, double> val(ckpt.val_trace.begin(), ckpt.val_trace.end());
  for (std::size_t i = 0; i < ckpt.loss_trace.size(); ++i) {
    const int epoch = static_cast<int>(i) + 1;
    out += std::to_string(epoch);
    out += ',';
    out += std::to_string(ckpt.loss_trace[i]);
    out += ',';
    auto it = val.find(epoch);
    if (it != val.end()) out += std::to_string(it->second);
    out += '\n';
  }
  return out;
}

FdReport finite_difference_check(const KnowledgeGraph& g,
                                 const Eigen::MatrixXd& text_feats,
                                 const ModelParams& params,
                                 const TrainConfig& cfg, int probes,
                                 double eps, std::uint64_t seed,
                                 double corrupt_scale) {
  if (eps <= 0) throw std::invalid_argument("eps must be positive");
  const int n = static_cast<int>(g.node_count());
  std::vector<Triple> triples = graph_triples(g);
  MessageGraph mg = MessageGraph::from_edges(n, triples);
  ProcessIndex order(g);
  std::vector<int> kinds = node_kind_rows(g);

  LossContext ctx;
  ctx.mg = &mg;
  ctx.text = &text_feats;
  ctx.kinds = &kinds;
  ctx.cfg = &cfg;
  util::Rng neg_rng(util::mix(seed, kEpochSalt));
  std::vector<Triple> negatives =
      n >= 2 ? sample_negatives(triples, cfg.negative_ratio, neg_rng, n)
             : std::vector<Triple>{};
  ctx.set_samples(triples, negatives, order);

  ModelGrads grads;
  ctx.loss_and_grads(params, &grads);

  // Parameter slots in a fixed order so probes are reproducible.
  struct Slot {
    Eigen::MatrixXd* analytic;
    int tensor_kind;  // 0 = w1, 1 = w2, 2 = rel, 3 = type
    std::size_t index;
  };
  std::vector<Slot> slots;
  for (std::size_t i = 0; i < grads.w1.size(); ++i) {
    slots.push_back({&grads.w1[i], 0, i});
  }
  for (std::size_t i = 0; i < grads.w2.size(); ++i) {
    slots.push_back({&grads.w2[i], 1, i});
  }
  slots.push_back({&grads.rel_embed, 2, 0});
  slots.push_back({&grads.type_table, 3, 0});

  std::size_t total = 0;
  for (const Slot& s : slots) {
    total += static_cast<std::size_t>(s.analytic->size());
  }

  util::Rng probe_rng(seed);
  FdReport report;
  report.probes = probes;
  for (int p = 0; p < probes; ++p) {
    std::uint64_t pick = probe_rng.below(total);
    const Slot* chosen = nullptr;
    for (const Slot& s : slots) {
      auto size = static_cast<std::uint64_t>(s.analytic->size());
      if (pick < size) {
        chosen = &s;
        break;
      }
      pick -= size;
    }
    const auto row = static_cast<Eigen::Index>(
        pick / static_cast<std::uint64_t>(chosen->analytic->cols()));
    const auto col = static_cast<Eigen::Index>(
        pick % static_cast<std::uint64_t>(chosen->analytic->cols()));

    auto param_at = [&](ModelParams& theta) -> double& {
      switch (chosen->tensor_kind) {
        case 0: return theta.w1[chosen->index](row, col);
        case 1: return theta.w2[chosen->index](row, col);
        case 2: return theta.rel_embed(row, col);
        default: return theta.type_table(row, col);
      }
    };

    ModelParams plus = params;
    param_at(plus) += eps;
    ModelParams minus = params;
    param_at(minus) -= eps;
    const double fd = (ctx.loss(plus) - ctx.loss(minus)) / (2.0 * eps);
    double analytic = (*chosen->analytic)(row, col);
    if (corrupt_scale != 0.0) {
      analytic += corrupt_scale * (1.0 + std::abs(analytic));
    }
    const double scale =
        std::max({1.0, std::abs(analytic), std::abs(fd)});
    report.max_rel_error =
        std::max(report.max_rel_error, std::abs(analytic - fd) / scale);
  }
  return report;
}

}  // namespace fmea
