#pragma once

#include <cstddef>
#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "agr/graph.hpp"

namespace agr {

/// Dense row-major matrix of d-dimensional embeddings, one row per vertex.
class EmbeddingTable {
 public:
  EmbeddingTable() = default;
  EmbeddingTable(std::size_t rows, std::size_t dim) : rows_(rows), dim_(dim), data_(rows * dim, 0.0) {}

  std::size_t rows() const noexcept { return rows_; }
  std::size_t dim() const noexcept { return dim_; }

  std::span<double> row(std::size_t r) { return {data_.data() + r * dim_, dim_}; }
  std::span<const double> row(std::size_t r) const { return {data_.data() + r * dim_, dim_}; }

  std::span<double> data() noexcept { return data_; }
  std::span<const double> data() const noexcept { return data_; }

  void fill(double value);
  void scale(double factor);
  /// this += factor * other
  void add_scaled(const EmbeddingTable& other, double factor);
  bool all_finite() const noexcept;
  double squared_norm() const noexcept;

  friend bool operator==(const EmbeddingTable&, const EmbeddingTable&) = default;

 private:
  std::size_t rows_ = 0;
  std::size_t dim_ = 0;
  std::vector<double> data_;
};

/// The four trainable layer-0 tables.
struct EmbeddingTables {
  EmbeddingTable users;
  EmbeddingTable items;
  EmbeddingTable attributes;
  EmbeddingTable aesthetics;

  /// Zero tables shaped for `graphs`.
  static EmbeddingTables zeros(const GraphBundle& graphs, std::size_t dim);

  /// N(0, init_scale^2) entries drawn in order users, items, attributes, aesthetics.
  static EmbeddingTables random(const GraphBundle& graphs, std::size_t dim, double init_scale,
                                std::uint64_t seed);

  friend bool operator==(const EmbeddingTables&, const EmbeddingTables&) = default;
};

struct ModelConfig {
  std::size_t dim = 64;
  std::size_t layers = 3;
  std::vector<double> layer_weights;  // empty: uniform 1/(K+1)
  double learning_rate = 50.0;  // step on the batch-mean loss; about 0.2 per triple at batch 256
  double l2_weight = 1e-4;
  std::size_t negatives = 1;
  std::size_t price_buckets = 10;
  double init_scale = 0.1;
  std::uint64_t seed = 7;

  /// Resolved layer weights alpha_0..alpha_K.
  std::vector<double> alpha() const;

  /// Throws Config on any violated constraint.
  void validate() const;
};

/// Per-layer embeddings for every vertex class, k = 0..K.
struct LayerStack {
  std::vector<EmbeddingTable> users;
  std::vector<EmbeddingTable> items;
  std::vector<EmbeddingTable> attributes;
  std::vector<EmbeddingTable> aesthetics;

  std::size_t layers() const noexcept { return users.empty() ? 0 : users.size() - 1; }
};

/// out[v] = sum over neighbors n of left vertex v of src[n] / sqrt(deg(v) deg(n)).
/// `src` has one row per right vertex; the result one row per left vertex.
EmbeddingTable propagate_to_left(const EmbeddingTable& src, const BipartiteGraph& graph,
                                 unsigned threads = 1);
/// Mirror of propagate_to_left; it is also its adjoint.
EmbeddingTable propagate_to_right(const EmbeddingTable& src, const BipartiteGraph& graph,
                                  unsigned threads = 1);

// Single propagation steps. Vertices without neighbors receive zero rows.
// `threads` partitions output rows; each row sums neighbors in index order, so
// results do not depend on the thread count.
EmbeddingTable propagate_items(const EmbeddingTable& attributes, const BipartiteGraph& item_attributes,
                               unsigned threads = 1);
EmbeddingTable propagate_item_attributes(const EmbeddingTable& items,
                                         const BipartiteGraph& item_attributes, unsigned threads = 1);
EmbeddingTable propagate_aesthetics(const EmbeddingTable& users, const BipartiteGraph& user_aesthetics,
                                    unsigned threads = 1);
EmbeddingTable propagate_users(const EmbeddingTable& aesthetics, const EmbeddingTable& items,
                               const BipartiteGraph& user_aesthetics, const BipartiteGraph& user_items,
                               unsigned threads = 1);

/// Runs K layers; every class at layer k+1 is computed from layer-k values.
/// Throws Numeric naming the layer and class when a non-finite value appears.
LayerStack forward(const EmbeddingTables& tables, const GraphBundle& graphs, std::size_t layers,
                   unsigned threads = 1);

struct FinalEmbeddings {
  EmbeddingTable users;
  EmbeddingTable items;
};

/// Weighted layer sums; throws Config when alpha.size() != K + 1.
FinalEmbeddings final_embeddings(const LayerStack& stack, std::span<const double> alpha);

/// Inner product.
double score(std::span<const double> user, std::span<const double> item);

/// Embedding for an item unseen in training, attached to its known keywords.
///
/// The new vertex starts from a zero layer-0 row; attribute degrees stay as in
/// the trained graph. Unknown keywords are dropped; duplicates count once.
/// Throws Lookup ("unscorable cold item") when no keyword is known.
std::vector<double> cold_item_embedding(std::span<const std::string> keywords,
                                        const Vocabulary& attributes,
                                        const BipartiteGraph& item_attributes, const LayerStack& stack,
                                        std::span<const double> alpha);

/// A trained model ready for scoring: graphs, tables, and the propagated stack.
class Recommender {
 public:
  Recommender(GraphBundle graphs, EmbeddingTables tables, ModelConfig config, unsigned threads = 1);

  const GraphBundle& graphs() const noexcept { return graphs_; }
  const EmbeddingTables& tables() const noexcept { return tables_; }
  const ModelConfig& config() const noexcept { return config_; }
  const LayerStack& stack() const noexcept { return stack_; }
  const FinalEmbeddings& embeddings() const noexcept { return final_; }

  double score(Index user, Index item) const;

  /// nullopt when none of the keywords is in the trained attribute vocabulary.
  std::optional<std::vector<double>> cold_item(std::span<const std::string> keywords) const;

 private:
  GraphBundle graphs_;
  EmbeddingTables tables_;
  ModelConfig config_;
  LayerStack stack_;
  FinalEmbeddings final_;
};

}  // namespace agr
