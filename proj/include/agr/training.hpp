#pragma once

#include <cstddef>
#include <functional>
#include <optional>
#include <span>
#include <vector>

#include "agr/eval.hpp"
#include "agr/ingest.hpp"
#include "agr/model.hpp"
#include "agr/random.hpp"

namespace agr {

struct TrainTriple {
  Index user = 0;
  Index positive = 0;
  Index negative = 0;
};

/// -ln sigmoid(s_pos - s_neg), evaluated as softplus(s_neg - s_pos).
double bpr_loss(double s_pos, double s_neg) noexcept;

/// `n` uniform draws (with replacement) from items not in `positives` (sorted).
/// Throws Invalid ("no negatives available") when every item is positive.
std::vector<Index> sample_negatives(std::size_t n, std::size_t item_count,
                                    std::span<const Index> positives, Rng& rng);

struct BatchObjective {
  double bpr = 0.0;  // mean over triples
  double reg = 0.0;  // mean over triples of l2 * (|u|^2 + |i+|^2 + |i-|^2), layer 0
  double total() const noexcept { return bpr + reg; }
};

/// Objective of a batch given a fresh forward stack.
BatchObjective batch_objective(std::span<const TrainTriple> batch, const LayerStack& stack,
                               const ModelConfig& config);

/// Exact gradients of batch_objective with respect to the four layer-0 tables.
/// `grads` is resized to match. Throws Numeric on non-finite gradients.
BatchObjective backward(std::span<const TrainTriple> batch, const LayerStack& stack,
                        const GraphBundle& graphs, const ModelConfig& config, EmbeddingTables& grads,
                        unsigned threads = 1);

struct EpochStats {
  std::size_t epoch = 0;
  double loss = 0.0;  // mean BPR
  double reg = 0.0;   // mean regularization term
  std::size_t triples = 0;
  double seconds = 0.0;
  std::optional<double> validation_recall;
};

struct TrainOptions {
  std::size_t epochs = 50;
  std::size_t batch_size = 256;
  std::size_t patience = 5;       // 0 disables early stopping
  std::size_t validation_k = 50;
  bool validate = true;           // evaluate Recall@k on validation after each epoch
  unsigned threads = 1;
};

struct TrainCallbacks {
  std::function<void(const EpochStats&, const EmbeddingTables&)> on_epoch;
  std::function<void(const EpochStats&, const EmbeddingTables&)> on_best;
};

struct TrainResult {
  EmbeddingTables tables;        // best-validation tables, or the last epoch's
  std::vector<EpochStats> history;
  std::size_t best_epoch = 0;
  bool diverged = false;         // tables then hold the last finite state
  bool stopped_early = false;
};

/// Plain SGD on mini-batches of BPR triples. Each epoch shuffles the training
/// interactions, expands each into `negatives` triples, and steps once per batch.
TrainResult train(const SplitDataset& data, const GraphBundle& graphs, const ModelConfig& config,
                  const TrainOptions& options, const TrainCallbacks& callbacks = {},
                  std::optional<EmbeddingTables> initial = std::nullopt);

}  // namespace agr
