#include "agr/training.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <numeric>

#include "agr/error.hpp"

namespace agr {

double bpr_loss(double s_pos, double s_neg) noexcept {
  // softplus(x) = max(x, 0) + log1p(exp(-|x|))
  const double x = s_neg - s_pos;
  return std::max(x, 0.0) + std::log1p(std::exp(-std::abs(x)));
}

namespace {

double sigmoid(double x) noexcept {
  if (x >= 0) return 1.0 / (1.0 + std::exp(-x));
  const double e = std::exp(x);
  return e / (1.0 + e);
}

void check_triple(const TrainTriple& t, const LayerStack& stack) {
  if (t.user >= stack.users[0].rows() || t.positive >= stack.items[0].rows() ||
      t.negative >= stack.items[0].rows()) {
    throw Error(ErrorKind::Invalid, "training triple out of range");
  }
}

double row_squared_norm(std::span<const double> row) {
  double s = 0.0;
  for (double x : row) s += x * x;
  return s;
}

}  // namespace

std::vector<Index> sample_negatives(std::size_t n, std::size_t item_count,
                                    std::span<const Index> positives, Rng& rng) {
  if (positives.size() >= item_count) throw Error(ErrorKind::Invalid, "no negatives available");
  std::vector<Index> out;
  out.reserve(n);
  while (out.size() < n) {
    const auto candidate = static_cast<Index>(rng.uniform_index(item_count));
    if (!std::binary_search(positives.begin(), positives.end(), candidate)) out.push_back(candidate);
  }
  return out;
}

BatchObjective batch_objective(std::span<const TrainTriple> batch, const LayerStack& stack,
                               const ModelConfig& config) {
  if (batch.empty()) return {};
  const auto final = final_embeddings(stack, config.alpha());
  const auto& base_users = stack.users[0];
  const auto& base_items = stack.items[0];
  BatchObjective obj;
  for (const auto& t : batch) {
    check_triple(t, stack);
    const auto u = final.users.row(t.user);
    obj.bpr += bpr_loss(score(u, final.items.row(t.positive)), score(u, final.items.row(t.negative)));
    obj.reg += config.l2_weight * (row_squared_norm(base_users.row(t.user)) +
                                   row_squared_norm(base_items.row(t.positive)) +
                                   row_squared_norm(base_items.row(t.negative)));
  }
  const double n = static_cast<double>(batch.size());
  obj.bpr /= n;
  obj.reg /= n;
  return obj;
}

BatchObjective backward(std::span<const TrainTriple> batch, const LayerStack& stack,
                        const GraphBundle& graphs, const ModelConfig& config, EmbeddingTables& grads,
                        unsigned threads) {
  const auto alpha = config.alpha();
  const std::size_t K = stack.layers();
  const std::size_t dim = stack.users[0].dim();
  grads = EmbeddingTables::zeros(graphs, dim);
  if (batch.empty()) return {};

  const auto final = final_embeddings(stack, alpha);
  const double inv_n = 1.0 / static_cast<double>(batch.size());

  // Gradient with respect to the final user and item embeddings.
  EmbeddingTable grad_users(final.users.rows(), dim);
  EmbeddingTable grad_items(final.items.rows(), dim);
  BatchObjective obj;
  for (const auto& t : batch) {
    check_triple(t, stack);
    const auto u = final.users.row(t.user);
    const auto p = final.items.row(t.positive);
    const auto q = final.items.row(t.negative);
    const double s_pos = score(u, p);
    const double s_neg = score(u, q);
    obj.bpr += bpr_loss(s_pos, s_neg);
    // d/ds_pos of softplus(s_neg - s_pos) = -sigmoid(s_neg - s_pos)
    const double g = sigmoid(s_neg - s_pos) * inv_n;
    auto gu = grad_users.row(t.user);
    auto gp = grad_items.row(t.positive);
    auto gq = grad_items.row(t.negative);
    for (std::size_t d = 0; d < dim; ++d) {
      gu[d] -= g * (p[d] - q[d]);
      gp[d] -= g * u[d];
      gq[d] += g * u[d];
    }
  }

  // Reverse sweep through the layers. Each propagation is linear with a
  // symmetric coefficient, so its adjoint is the opposite-direction propagation.
  EmbeddingTable next_users(graphs.users.size(), dim);
  EmbeddingTable next_items(graphs.items.size(), dim);
  EmbeddingTable next_attributes(graphs.attributes.size(), dim);
  EmbeddingTable next_aesthetics(graphs.aesthetics.size(), dim);
  for (std::size_t k = K + 1; k-- > 0;) {
    EmbeddingTable g_users(graphs.users.size(), dim);
    EmbeddingTable g_items(graphs.items.size(), dim);
    EmbeddingTable g_attributes(graphs.attributes.size(), dim);
    EmbeddingTable g_aesthetics(graphs.aesthetics.size(), dim);
    g_users.add_scaled(grad_users, alpha[k]);
    g_items.add_scaled(grad_items, alpha[k]);
    if (k < K) {
      // aesthetics[k+1] = right(users[k]); users[k+1] = left(aesthetics[k]) + left(items[k], ui)
      g_users.add_scaled(propagate_to_left(next_aesthetics, graphs.user_aesthetics, threads), 1.0);
      g_aesthetics.add_scaled(propagate_to_right(next_users, graphs.user_aesthetics, threads), 1.0);
      // attributes[k+1] = right(items[k]); items[k+1] = left(attributes[k])
      g_items.add_scaled(propagate_to_left(next_attributes, graphs.item_attributes, threads), 1.0);
      g_items.add_scaled(propagate_to_right(next_users, graphs.user_items, threads), 1.0);
      g_attributes.add_scaled(propagate_to_right(next_items, graphs.item_attributes, threads), 1.0);
    }
    next_users = std::move(g_users);
    next_items = std::move(g_items);
    next_attributes = std::move(g_attributes);
    next_aesthetics = std::move(g_aesthetics);
  }
  grads.users = std::move(next_users);
  grads.items = std::move(next_items);
  grads.attributes = std::move(next_attributes);
  grads.aesthetics = std::move(next_aesthetics);

  // Mini-batch L2 on the layer-0 rows each triple touches.
  const double reg_scale = 2.0 * config.l2_weight * inv_n;
  for (const auto& t : batch) {
    const auto u0 = stack.users[0].row(t.user);
    const auto p0 = stack.items[0].row(t.positive);
    const auto q0 = stack.items[0].row(t.negative);
    obj.reg += config.l2_weight * (row_squared_norm(u0) + row_squared_norm(p0) + row_squared_norm(q0));
    auto gu = grads.users.row(t.user);
    auto gp = grads.items.row(t.positive);
    auto gq = grads.items.row(t.negative);
    for (std::size_t d = 0; d < dim; ++d) {
      gu[d] += reg_scale * u0[d];
      gp[d] += reg_scale * p0[d];
      gq[d] += reg_scale * q0[d];
    }
  }
  obj.bpr *= inv_n;
  obj.reg *= inv_n;

  if (!grads.users.all_finite() || !grads.items.all_finite() || !grads.attributes.all_finite() ||
      !grads.aesthetics.all_finite()) {
    throw Error(ErrorKind::Numeric, "non-finite gradient (batch bpr " + std::to_string(obj.bpr) +
                                        ", reg " + std::to_string(obj.reg) + ")");
  }
  return obj;
}

namespace {

bool tables_finite(const EmbeddingTables& t) {
  return t.users.all_finite() && t.items.all_finite() && t.attributes.all_finite() &&
         t.aesthetics.all_finite();
}

void sgd_step(EmbeddingTables& tables, const EmbeddingTables& grads, double lr) {
  if (lr == 0.0) return;
  tables.users.add_scaled(grads.users, -lr);
  tables.items.add_scaled(grads.items, -lr);
  tables.attributes.add_scaled(grads.attributes, -lr);
  tables.aesthetics.add_scaled(grads.aesthetics, -lr);
}

}  // namespace

TrainResult train(const SplitDataset& data, const GraphBundle& graphs, const ModelConfig& config,
                  const TrainOptions& options, const TrainCallbacks& callbacks,
                  std::optional<EmbeddingTables> initial) {
  config.validate();
  graphs.validate();
  if (!(graphs.users == data.users) || !(graphs.items == data.items)) {
    throw Error(ErrorKind::Integrity, "graph vocabularies differ from the dataset");
  }
  if (data.train.empty()) throw Error(ErrorKind::Invalid, "no training interactions");
  if (options.batch_size < 1) throw Error(ErrorKind::Config, "batch size must be >= 1");

  TrainResult result;
  EmbeddingTables tables = initial ? std::move(*initial)
                                   : EmbeddingTables::random(graphs, config.dim, config.init_scale,
                                                             config.seed);
  EmbeddingTables grads;
  EmbeddingTables last_good = tables;
  EmbeddingTables best = tables;
  std::optional<double> best_recall;
  std::size_t since_best = 0;
  const bool validating = options.validate && !data.validation.empty();

  Rng rng(config.seed ^ 0x9e3779b97f4a7c15ULL);
  std::vector<std::size_t> order(data.train.size());
  std::vector<TrainTriple> triples;
  triples.reserve(data.train.size() * config.negatives);

  for (std::size_t epoch = 1; epoch <= options.epochs; ++epoch) {
    const auto started = std::chrono::steady_clock::now();
    std::iota(order.begin(), order.end(), std::size_t{0});
    rng.shuffle(std::span(order));
    triples.clear();
    for (auto k : order) {
      const auto& p = data.train[k];
      for (Index neg : sample_negatives(config.negatives, data.items.size(), data.user_positives[p.user], rng)) {
        triples.push_back({p.user, p.item, neg});
      }
    }

    double bpr_sum = 0.0, reg_sum = 0.0;
    bool diverged = false;
    for (std::size_t begin = 0; begin < triples.size(); begin += options.batch_size) {
      const auto end = std::min(triples.size(), begin + options.batch_size);
      const std::span batch(triples.data() + begin, end - begin);
      try {
        const auto stack = forward(tables, graphs, config.layers, options.threads);
        const auto obj = backward(batch, stack, graphs, config, grads, options.threads);
        if (!std::isfinite(obj.bpr) || !std::isfinite(obj.reg)) {
          diverged = true;
          break;
        }
        bpr_sum += obj.bpr * static_cast<double>(batch.size());
        reg_sum += obj.reg * static_cast<double>(batch.size());
      } catch (const Error& e) {
        if (e.kind() != ErrorKind::Numeric) throw;
        diverged = true;
        break;
      }
      sgd_step(tables, grads, config.learning_rate);
    }
    if (diverged || !tables_finite(tables)) {
      result.diverged = true;
      result.tables = std::move(last_good);
      return result;
    }

    EpochStats stats;
    stats.epoch = epoch;
    stats.triples = triples.size();
    stats.loss = bpr_sum / static_cast<double>(triples.size());
    stats.reg = reg_sum / static_cast<double>(triples.size());
    if (validating) {
      const auto stack = forward(tables, graphs, config.layers, options.threads);
      const auto final = final_embeddings(stack, config.alpha());
      stats.validation_recall =
          evaluate_standard(final, data, data.validation, options.validation_k, options.threads).recall;
    }
    stats.seconds =
        std::chrono::duration<double>(std::chrono::steady_clock::now() - started).count();
    result.history.push_back(stats);
    last_good = tables;
    if (callbacks.on_epoch) callbacks.on_epoch(stats, tables);

    if (validating) {
      if (!best_recall || *stats.validation_recall > *best_recall) {
        best_recall = stats.validation_recall;
        best = tables;
        result.best_epoch = epoch;
        since_best = 0;
        if (callbacks.on_best) callbacks.on_best(stats, tables);
      } else if (options.patience > 0 && ++since_best >= options.patience) {
        result.stopped_early = true;
        break;
      }
    }
  }

  if (validating && best_recall) {
    result.tables = std::move(best);
  } else {
    result.tables = std::move(tables);
    result.best_epoch = result.history.empty() ? 0 : result.history.back().epoch;
  }
  return result;
}

}  // namespace agr
