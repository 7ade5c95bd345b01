#pragma once

#include <Eigen/Dense>
#include <memory>
#include <string>
#include <vector>

#include "fmea/kg.hpp"

namespace fmea {

// Produces one row vector per input text; deterministic per provider
// configuration.
class EmbeddingProvider {
 public:
  virtual ~EmbeddingProvider() = default;
  virtual int dim() const = 0;
  virtual Eigen::MatrixXd embed(const std::vector<std::string>& texts) = 0;
};

// Hashed character-trigram vectors (D=256, L2-normalized); keeps tests and
// CI fully offline.
class OfflineEmbeddingProvider : public EmbeddingProvider {
 public:
  static constexpr int kDim = 256;
  int dim() const override { return kDim; }
  Eigen::MatrixXd embed(const std::vector<std::string>& texts) override;
};

struct HttpEmbeddingConfig {
  std::string base_url;
  std::string api_key;
  std::string model;
  int dim = 1536;
  int timeout_seconds = 60;
};

// OpenAI-compatible /embeddings endpoint.
class HttpEmbeddingProvider : public EmbeddingProvider {
 public:
  explicit HttpEmbeddingProvider(HttpEmbeddingConfig config)
      : config_(std::move(config)) {}
  int dim() const override { return config_.dim; }
  Eigen::MatrixXd embed(const std::vector<std::string>& texts) override;

 private:
  HttpEmbeddingConfig config_;
};

Eigen::MatrixXd embed_texts(EmbeddingProvider& provider,
                            const std::vector<std::string>& texts);

// Principal directions of the mean-centered data. Rows of `components`
// beyond the data rank are zero and their explained variance is zero.
struct PcaModel {
  Eigen::VectorXd mean;                // D
  Eigen::MatrixXd components;          // out_dim x D
  Eigen::VectorXd explained_variance;  // out_dim, non-increasing
};

PcaModel fit_pca(const Eigen::MatrixXd& vectors, int out_dim = 128);

// (v - mean) * components^T
Eigen::MatrixXd project(const PcaModel& pca, const Eigen::MatrixXd& vectors);

// Node feature rows: PCA-projected label embedding concatenated with the
// node kind's type embedding.
struct FeatureMatrix {
  Eigen::MatrixXd rows;  // |V| x (text_dim + type_dim)
};

int class_index(ConceptClass cls);  // row into the type table

FeatureMatrix assemble_node_features(const KnowledgeGraph& g,
                                     const PcaModel& pca,
                                     EmbeddingProvider& provider,
                                     const Eigen::MatrixXd& type_table);

// The text half only; training re-attaches the learned type columns each
// epoch.
Eigen::MatrixXd text_features(const KnowledgeGraph& g, const PcaModel& pca,
                              EmbeddingProvider& provider);

}  // namespace fmea
