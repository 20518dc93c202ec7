#include "agr/model.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <set>

#include "agr/error.hpp"
#include "agr/random.hpp"
#include "parallel.hpp"

namespace agr {

void EmbeddingTable::fill(double value) { std::fill(data_.begin(), data_.end(), value); }

void EmbeddingTable::scale(double factor) {
  for (auto& x : data_) x *= factor;
}

void EmbeddingTable::add_scaled(const EmbeddingTable& other, double factor) {
  if (other.rows_ != rows_ || other.dim_ != dim_) {
    throw Error(ErrorKind::Invalid, "embedding table shape mismatch");
  }
  for (std::size_t k = 0; k < data_.size(); ++k) data_[k] += factor * other.data_[k];
}

bool EmbeddingTable::all_finite() const noexcept {
  return std::all_of(data_.begin(), data_.end(), [](double x) { return std::isfinite(x); });
}

double EmbeddingTable::squared_norm() const noexcept {
  double sum = 0.0;
  for (double x : data_) sum += x * x;
  return sum;
}

EmbeddingTables EmbeddingTables::zeros(const GraphBundle& graphs, std::size_t dim) {
  return {EmbeddingTable(graphs.users.size(), dim), EmbeddingTable(graphs.items.size(), dim),
          EmbeddingTable(graphs.attributes.size(), dim),
          EmbeddingTable(graphs.aesthetics.size(), dim)};
}

EmbeddingTables EmbeddingTables::random(const GraphBundle& graphs, std::size_t dim, double init_scale,
                                        std::uint64_t seed) {
  auto tables = zeros(graphs, dim);
  Rng rng(seed);
  for (auto* t : {&tables.users, &tables.items, &tables.attributes, &tables.aesthetics}) {
    for (auto& x : t->data()) x = init_scale * rng.normal();
  }
  return tables;
}

std::vector<double> ModelConfig::alpha() const {
  if (!layer_weights.empty()) return layer_weights;
  return std::vector<double>(layers + 1, 1.0 / static_cast<double>(layers + 1));
}

void ModelConfig::validate() const {
  auto fail = [](const std::string& what) { throw Error(ErrorKind::Config, what); };
  if (dim < 1) fail("dim must be >= 1");
  if (!(learning_rate >= 0) || !std::isfinite(learning_rate)) fail("learning rate must be >= 0");
  if (!(l2_weight >= 0) || !std::isfinite(l2_weight)) fail("l2 weight must be >= 0");
  if (negatives < 1) fail("negatives per positive must be >= 1");
  if (price_buckets < 1) fail("price buckets must be >= 1");
  if (!(init_scale >= 0) || !std::isfinite(init_scale)) fail("init scale must be >= 0");
  const auto a = alpha();
  if (a.size() != layers + 1) fail("need exactly K+1 layer weights");
  double sum = 0.0;
  for (double w : a) {
    if (!(w >= 0)) fail("layer weights must be non-negative");
    sum += w;
  }
  if (std::abs(sum - 1.0) > 1e-9) fail("layer weights must sum to 1");
}

namespace {

enum class Side { Left, Right };

// out[v] = sum over neighbors n of v (on `side`) of src[n] / sqrt(deg(v) deg(n)).
EmbeddingTable aggregate(const EmbeddingTable& src, const BipartiteGraph& g, Side side,
                         unsigned threads) {
  const bool left = side == Side::Left;
  const std::size_t rows = left ? g.left_count() : g.right_count();
  const std::size_t source_rows = left ? g.right_count() : g.left_count();
  if (src.rows() != source_rows) throw Error(ErrorKind::Invalid, "propagation shape mismatch");
  EmbeddingTable out(rows, src.dim());
  detail::parallel_for(rows, threads, [&](std::size_t begin, std::size_t end) {
    for (auto v = static_cast<Index>(begin); v < end; ++v) {
      const auto nbrs = left ? g.left_neighbors(v) : g.right_neighbors(v);
      if (nbrs.empty()) continue;
      auto dst = out.row(v);
      for (Index n : nbrs) {
        const auto deg_n = left ? g.right_degree(n) : g.left_degree(n);
        const double c = norm_coefficient(nbrs.size(), deg_n);
        const auto s = src.row(n);
        for (std::size_t d = 0; d < dst.size(); ++d) dst[d] += c * s[d];
      }
    }
  });
  return out;
}

void require_finite(const EmbeddingTable& t, std::size_t layer, const char* what) {
  if (t.all_finite()) return;
  throw Error(ErrorKind::Numeric,
              std::string("non-finite ") + what + " embedding at layer " + std::to_string(layer));
}

}  // namespace

EmbeddingTable propagate_to_left(const EmbeddingTable& src, const BipartiteGraph& graph, unsigned threads) {
  return aggregate(src, graph, Side::Left, threads);
}

EmbeddingTable propagate_to_right(const EmbeddingTable& src, const BipartiteGraph& graph, unsigned threads) {
  return aggregate(src, graph, Side::Right, threads);
}

EmbeddingTable propagate_items(const EmbeddingTable& attributes, const BipartiteGraph& item_attributes,
                               unsigned threads) {
  return aggregate(attributes, item_attributes, Side::Left, threads);
}

EmbeddingTable propagate_item_attributes(const EmbeddingTable& items,
                                         const BipartiteGraph& item_attributes, unsigned threads) {
  return aggregate(items, item_attributes, Side::Right, threads);
}

EmbeddingTable propagate_aesthetics(const EmbeddingTable& users, const BipartiteGraph& user_aesthetics,
                                    unsigned threads) {
  return aggregate(users, user_aesthetics, Side::Right, threads);
}

EmbeddingTable propagate_users(const EmbeddingTable& aesthetics, const EmbeddingTable& items,
                               const BipartiteGraph& user_aesthetics, const BipartiteGraph& user_items,
                               unsigned threads) {
  auto out = aggregate(aesthetics, user_aesthetics, Side::Left, threads);
  out.add_scaled(aggregate(items, user_items, Side::Left, threads), 1.0);
  return out;
}

LayerStack forward(const EmbeddingTables& tables, const GraphBundle& graphs, std::size_t layers,
                   unsigned threads) {
  graphs.validate();
  LayerStack stack;
  stack.users.reserve(layers + 1);
  stack.items.reserve(layers + 1);
  stack.attributes.reserve(layers + 1);
  stack.aesthetics.reserve(layers + 1);
  stack.users.push_back(tables.users);
  stack.items.push_back(tables.items);
  stack.attributes.push_back(tables.attributes);
  stack.aesthetics.push_back(tables.aesthetics);
  require_finite(tables.users, 0, "user");
  require_finite(tables.items, 0, "item");
  require_finite(tables.attributes, 0, "item-attribute");
  require_finite(tables.aesthetics, 0, "aesthetic");

  for (std::size_t k = 0; k < layers; ++k) {
    auto items = propagate_items(stack.attributes[k], graphs.item_attributes, threads);
    auto attributes = propagate_item_attributes(stack.items[k], graphs.item_attributes, threads);
    auto aesthetics = propagate_aesthetics(stack.users[k], graphs.user_aesthetics, threads);
    auto users = propagate_users(stack.aesthetics[k], stack.items[k], graphs.user_aesthetics,
                                 graphs.user_items, threads);
    require_finite(users, k + 1, "user");
    require_finite(items, k + 1, "item");
    require_finite(attributes, k + 1, "item-attribute");
    require_finite(aesthetics, k + 1, "aesthetic");
    stack.users.push_back(std::move(users));
    stack.items.push_back(std::move(items));
    stack.attributes.push_back(std::move(attributes));
    stack.aesthetics.push_back(std::move(aesthetics));
  }
  return stack;
}

FinalEmbeddings final_embeddings(const LayerStack& stack, std::span<const double> alpha) {
  if (alpha.size() != stack.layers() + 1) {
    throw Error(ErrorKind::Config, "layer weight count " + std::to_string(alpha.size()) +
                                       " does not match K+1 = " + std::to_string(stack.layers() + 1));
  }
  FinalEmbeddings out{EmbeddingTable(stack.users[0].rows(), stack.users[0].dim()),
                      EmbeddingTable(stack.items[0].rows(), stack.items[0].dim())};
  for (std::size_t k = 0; k < alpha.size(); ++k) {
    out.users.add_scaled(stack.users[k], alpha[k]);
    out.items.add_scaled(stack.items[k], alpha[k]);
  }
  return out;
}

double score(std::span<const double> user, std::span<const double> item) {
  if (user.size() != item.size()) throw Error(ErrorKind::Invalid, "score dimension mismatch");
  return std::inner_product(user.begin(), user.end(), item.begin(), 0.0);
}

std::vector<double> cold_item_embedding(std::span<const std::string> keywords,
                                        const Vocabulary& attributes,
                                        const BipartiteGraph& item_attributes, const LayerStack& stack,
                                        std::span<const double> alpha) {
  if (alpha.size() != stack.layers() + 1) throw Error(ErrorKind::Config, "layer weight count mismatch");
  std::set<Index> known;
  for (const auto& kw : keywords) {
    auto a = attributes.find(kw);
    if (a && item_attributes.right_degree(*a) > 0) known.insert(*a);
  }
  if (known.empty()) throw Error(ErrorKind::Lookup, "unscorable cold item");

  const std::size_t dim = stack.items[0].dim();
  std::vector<double> out(dim, 0.0);
  // Layer 0 is the zero vector; layer k >= 1 aggregates attribute layer k-1.
  for (std::size_t k = 1; k <= stack.layers(); ++k) {
    std::vector<double> layer(dim, 0.0);
    for (Index a : known) {
      const double c = norm_coefficient(known.size(), item_attributes.right_degree(a));
      const auto src = stack.attributes[k - 1].row(a);
      for (std::size_t d = 0; d < dim; ++d) layer[d] += c * src[d];
    }
    for (std::size_t d = 0; d < dim; ++d) out[d] += alpha[k] * layer[d];
  }
  return out;
}

Recommender::Recommender(GraphBundle graphs, EmbeddingTables tables, ModelConfig config,
                         unsigned threads)
    : graphs_(std::move(graphs)), tables_(std::move(tables)), config_(std::move(config)) {
  config_.validate();
  stack_ = forward(tables_, graphs_, config_.layers, threads);
  final_ = final_embeddings(stack_, config_.alpha());
}

double Recommender::score(Index user, Index item) const {
  return agr::score(final_.users.row(user), final_.items.row(item));
}

std::optional<std::vector<double>> Recommender::cold_item(std::span<const std::string> keywords) const {
  try {
    return cold_item_embedding(keywords, graphs_.attributes, graphs_.item_attributes, stack_,
                               config_.alpha());
  } catch (const Error& e) {
    if (e.kind() == ErrorKind::Lookup) return std::nullopt;
    throw;
  }
}

}  // namespace agr
