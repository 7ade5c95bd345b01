#include "fmea/features.hpp"

#include <algorithm>
#include <set>

#include "fmea/error.hpp"
#include "fmea/util.hpp"

namespace fmea {

Eigen::MatrixXd OfflineEmbeddingProvider::embed(
    const std::vector<std::string>& texts) {
  Eigen::MatrixXd out =
      Eigen::MatrixXd::Zero(static_cast<Eigen::Index>(texts.size()), kDim);
  for (std::size_t i = 0; i < texts.size(); ++i) {
    const std::string norm = util::normalize(texts[i]);
    if (norm.empty()) {
      throw Error(Errc::EmptyText, "index " + std::to_string(i));
    }
    auto bump = [&](std::string_view gram) {
      auto slot = static_cast<Eigen::Index>(util::fnv1a64(gram) % kDim);
      out(static_cast<Eigen::Index>(i), slot) += 1.0;
    };
    if (norm.size() < 3) {
      bump(norm);
    } else {
      for (std::size_t k = 0; k + 3 <= norm.size(); ++k) {
        bump(std::string_view(norm).substr(k, 3));
      }
    }
    double n = out.row(static_cast<Eigen::Index>(i)).norm();
    if (n > 0) out.row(static_cast<Eigen::Index>(i)) /= n;
  }
  return out;
}

Eigen::MatrixXd embed_texts(EmbeddingProvider& provider,
                            const std::vector<std::string>& texts) {
  for (std::size_t i = 0; i < texts.size(); ++i) {
    if (util::trim(texts[i]).empty()) {
      throw Error(Errc::EmptyText, "index " + std::to_string(i));
    }
  }
  Eigen::MatrixXd out = provider.embed(texts);
  if (out.rows() != static_cast<Eigen::Index>(texts.size()) ||
      out.cols() != provider.dim()) {
    throw Error(Errc::ProviderUnavailable, "provider returned a bad shape");
  }
  return out;
}

PcaModel fit_pca(const Eigen::MatrixXd& vectors, int out_dim) {
  if (vectors.rows() < 2) {
    throw std::invalid_argument("fit_pca: need at least 2 rows");
  }
  const Eigen::Index n = vectors.rows();
  const Eigen::Index d = vectors.cols();
  PcaModel model;
  model.mean = vectors.colwise().mean();
  Eigen::MatrixXd centered = vectors.rowwise() - model.mean.transpose();
  if (centered.lpNorm<Eigen::Infinity>() == 0.0) {
    throw Error(Errc::DegenerateInput, "all rows identical");
  }
  Eigen::MatrixXd cov =
      centered.transpose() * centered / static_cast<double>(n - 1);
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> solver(cov);
  if (solver.info() != Eigen::Success) {
    throw Error(Errc::DegenerateInput, "eigendecomposition failed");
  }
  // Eigen returns ascending eigenvalues; take the top out_dim descending.
  const Eigen::VectorXd& values = solver.eigenvalues();
  const Eigen::MatrixXd& directions = solver.eigenvectors();
  model.components = Eigen::MatrixXd::Zero(out_dim, d);
  model.explained_variance = Eigen::VectorXd::Zero(out_dim);
  const double tolerance = std::max(values.cwiseAbs().maxCoeff(), 0.0) * 1e-12;
  for (int k = 0; k < out_dim; ++k) {
    Eigen::Index source = d - 1 - k;
    if (source < 0) break;
    double value = values(source);
    if (value <= tolerance) break;  // rank exhausted: keep zero rows
    model.components.row(k) = directions.col(source).transpose();
    model.explained_variance(k) = value;
  }
  return model;
}

Eigen::MatrixXd project(const PcaModel& pca, const Eigen::MatrixXd& vectors) {
  if (vectors.cols() != pca.mean.size()) {
    throw Error(Errc::DimensionMismatch,
                "expected width " + std::to_string(pca.mean.size()) +
                    ", got " + std::to_string(vectors.cols()));
  }
  return (vectors.rowwise() - pca.mean.transpose()) *
         pca.components.transpose();
}

int class_index(ConceptClass cls) {
  switch (cls) {
    case ConceptClass::Action: return 0;
    case ConceptClass::State: return 1;
    case ConceptClass::Component: return 2;
    case ConceptClass::Parameter: return 3;
    case ConceptClass::Function: return 4;
    case ConceptClass::Failure: return 5;
  }
  return 0;
}

Eigen::MatrixXd text_features(const KnowledgeGraph& g, const PcaModel& pca,
                              EmbeddingProvider& provider) {
  std::vector<std::string> labels;
  labels.reserve(g.node_count());
  for (const Node& n : g.nodes()) labels.push_back(n.label);
  if (labels.empty()) {
    return Eigen::MatrixXd(0, pca.components.rows());
  }
  return project(pca, embed_texts(provider, labels));
}

FeatureMatrix assemble_node_features(const KnowledgeGraph& g,
                                     const PcaModel& pca,
                                     EmbeddingProvider& provider,
                                     const Eigen::MatrixXd& type_table) {
  if (type_table.rows() != 6) {
    throw std::invalid_argument(
        "assemble_node_features: type table needs one row per class");
  }
  Eigen::MatrixXd text = text_features(g, pca, provider);
  FeatureMatrix features;
  features.rows = Eigen::MatrixXd::Zero(
      text.rows(), text.cols() + type_table.cols());
  for (const Node& n : g.nodes()) {
    auto row = static_cast<Eigen::Index>(n.id);
    features.rows.row(row).head(text.cols()) = text.row(row);
    features.rows.row(row).tail(type_table.cols()) =
        type_table.row(class_index(n.kind));
  }
  return features;
}

}  // namespace fmea
