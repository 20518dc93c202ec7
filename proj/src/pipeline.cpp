#include "agr/pipeline.hpp"

#include <algorithm>
#include <fstream>
#include <map>
#include <set>
#include <sstream>

#include "agr/error.hpp"
#include "agr/hash.hpp"
#include "agr/random.hpp"
#include "agr/text.hpp"

namespace agr {

using nlohmann::json;
namespace fs = std::filesystem;

namespace {

std::ifstream open_in(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(ErrorKind::Io, "cannot open " + path.string());
  return in;
}

std::ofstream open_out(const fs::path& path) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw Error(ErrorKind::Io, "cannot write " + path.string());
  return out;
}

std::string slurp(const fs::path& path) {
  auto in = open_in(path);
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

json pairs_to_json(std::span<const Interaction> xs) {
  json arr = json::array();
  for (const auto& x : xs) arr.push_back({x.user_id, x.item_id});
  return arr;
}

std::vector<Interaction> pairs_from_json(const json& arr) {
  std::vector<Interaction> out;
  out.reserve(arr.size());
  for (const auto& p : arr) out.push_back({p.at(0).get<std::string>(), p.at(1).get<std::string>()});
  return out;
}

std::set<std::string, std::less<>> read_stop_words(const fs::path& path) {
  auto in = open_in(path);
  std::set<std::string, std::less<>> words;
  std::string line;
  while (std::getline(in, line)) {
    auto w = text::lower(text::trim(line));
    if (!w.empty()) words.insert(std::move(w));
  }
  return words;
}

}  // namespace

std::vector<Interaction> to_interactions(const SplitDataset& data, std::span<const IndexPair> pairs) {
  std::vector<Interaction> out;
  out.reserve(pairs.size());
  for (const auto& p : pairs) out.push_back({data.users.id(p.user), data.items.id(p.item)});
  return out;
}

json prepare_dataset(const PrepareOptions& o) {
  if (o.holdout_items < 0 || o.holdout_items >= 1) {
    throw Error(ErrorKind::Config, "holdout fraction must be in [0, 1)");
  }
  split_sizes(3, o.ratios);  // validates ratios before touching any file
  if (o.price_buckets < 1) throw Error(ErrorKind::Config, "price buckets must be >= 1");
  if (fs::exists(o.out) && !fs::is_empty(o.out) && !o.force) {
    throw Error(ErrorKind::Config, o.out.string() + " exists and is not empty (use --force)");
  }

  std::vector<Interaction> raw;
  {
    auto in = open_in(o.interactions);
    raw = parse_interactions(in, o.interactions.string());
  }
  auto filtered = filter_min_popularity(raw, o.min_users);

  // Hold out whole items before splitting.
  std::vector<std::string> item_order;
  {
    std::set<std::string_view> seen;
    for (const auto& x : filtered) {
      if (seen.insert(x.item_id).second) item_order.push_back(x.item_id);
    }
  }
  std::set<std::string, std::less<>> cold;
  if (o.holdout_items > 0) {
    auto shuffled = item_order;
    Rng rng(o.seed ^ 0xc01dc01dULL);
    rng.shuffle(std::span(shuffled));
    const auto n = static_cast<std::size_t>(o.holdout_items * static_cast<double>(shuffled.size()));
    cold.insert(shuffled.begin(), shuffled.begin() + static_cast<std::ptrdiff_t>(n));
  }
  std::vector<Interaction> warm, cold_test;
  for (auto& x : filtered) (cold.contains(x.item_id) ? cold_test : warm).push_back(x);

  const auto ds = split_dataset(warm, o.ratios, o.seed);

  std::vector<ItemMetadata> metadata;
  if (!o.items.empty()) {
    auto in = open_in(o.items);
    const std::set<std::string, std::less<>> retained(item_order.begin(), item_order.end());
    for (auto& m : parse_items(in, o.items.string())) {
      if (retained.contains(m.item_id)) metadata.push_back(std::move(m));
    }
  }
  {
    std::set<std::string_view> have;
    for (const auto& m : metadata) have.insert(m.item_id);
    for (const auto& id : item_order) {
      if (have.contains(id)) continue;
      ItemMetadata bare;
      bare.item_id = id;
      metadata.push_back(std::move(bare));
    }
  }

  std::vector<double> prices;
  for (const auto& m : metadata) {
    if (m.price) prices.push_back(*m.price);
  }
  std::optional<PriceBuckets> buckets;
  if (!prices.empty()) buckets = fit_price_buckets(prices, o.price_buckets);
  TokenizerOptions tok;
  tok.include_description = o.include_description;
  if (!o.stop_words.empty()) tok.stop_words = read_stop_words(o.stop_words);

  std::vector<Assignment> text_attributes;
  for (const auto& m : metadata) {
    for (auto& kw : tokenize_text_attributes(m, buckets ? &*buckets : nullptr, tok)) {
      text_attributes.push_back({m.item_id, std::move(kw)});
    }
  }

  json manifest;
  manifest["seed"] = o.seed;
  manifest["ratios"] = {{"train", o.ratios.train}, {"validation", o.ratios.validation}, {"test", o.ratios.test}};
  manifest["rounding"] = "train=round-half-up(n*r_train), validation=floor(n*r_validation), test=remainder";
  manifest["min_users"] = o.min_users;
  manifest["price_boundaries"] = buckets ? buckets->boundaries : std::vector<double>{};
  manifest["counts"] = {{"raw_interactions", raw.size()},
                        {"filtered_interactions", filtered.size()},
                        {"users", ds.users.size()},
                        {"items", ds.items.size()},
                        {"cold_items", cold.size()},
                        {"train", ds.train.size()},
                        {"validation", ds.validation.size()},
                        {"test", ds.test.size()},
                        {"cold_test", cold_test.size()}};
  manifest["config"] = o.resolved_config;
  manifest["train"] = pairs_to_json(to_interactions(ds, ds.train));
  manifest["validation"] = pairs_to_json(to_interactions(ds, ds.validation));
  manifest["test"] = pairs_to_json(to_interactions(ds, ds.test));
  manifest["cold_test"] = pairs_to_json(cold_test);
  manifest["cold_items"] = std::vector<std::string>(cold.begin(), cold.end());

  fs::create_directories(o.out);
  {
    auto out = open_out(o.out / "manifest.json");
    out << manifest.dump() << '\n';
  }
  {
    auto out = open_out(o.out / "users.txt");
    write_vocabulary(out, ds.users);
  }
  {
    auto out = open_out(o.out / "items.txt");
    write_vocabulary(out, ds.items);
  }
  {
    auto out = open_out(o.out / "text_attributes.tsv");
    for (const auto& a : text_attributes) out << a.item_id << '\t' << a.keyword << '\n';
  }
  {
    auto out = open_out(o.out / "items.jsonl");
    for (const auto& m : metadata) out << item_to_json(m) << '\n';
  }
  return manifest;
}

PreparedData load_prepared(const fs::path& dir) {
  PreparedData p;
  const auto manifest_text = slurp(dir / "manifest.json");
  p.dataset_hash = to_hex(fnv1a64(manifest_text));
  try {
    p.manifest = json::parse(manifest_text);
  } catch (const json::parse_error& e) {
    throw Error(ErrorKind::Parse, (dir / "manifest.json").string() + ": " + e.what());
  }
  {
    auto in = open_in(dir / "users.txt");
    p.dataset.users = read_vocabulary(in);
  }
  {
    auto in = open_in(dir / "items.txt");
    p.dataset.items = read_vocabulary(in);
  }
  try {
    p.dataset.split_seed = p.manifest.at("seed").get<std::uint64_t>();
    auto to_pairs = [&](const char* key) {
      std::vector<IndexPair> out;
      for (const auto& x : pairs_from_json(p.manifest.at(key))) {
        out.push_back({p.dataset.users.at(x.user_id, "user"), p.dataset.items.at(x.item_id, "item")});
      }
      return out;
    };
    p.dataset.train = to_pairs("train");
    p.dataset.validation = to_pairs("validation");
    p.dataset.test = to_pairs("test");
    p.cold_test = pairs_from_json(p.manifest.at("cold_test"));
    p.cold_items = p.manifest.at("cold_items").get<std::vector<std::string>>();
  } catch (const json::exception& e) {
    throw Error(ErrorKind::Parse, "invalid manifest: " + std::string(e.what()));
  } catch (const Error& e) {
    throw Error(ErrorKind::Integrity, "manifest does not match vocabularies: " + std::string(e.what()));
  }
  p.dataset.index_positives();

  auto in = open_in(dir / "text_attributes.tsv");
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.empty()) continue;
    const auto cols = text::split(line, '\t');
    if (cols.size() != 2) {
      throw Error(ErrorKind::Parse, "text_attributes.tsv:" + std::to_string(line_no) + ": expected 2 columns");
    }
    p.text_attributes.push_back({std::string(cols[0]), std::string(cols[1])});
  }
  return p;
}

AttributeSets collect_attributes(std::span<const Assignment> text_attributes,
                                 std::span<const ExtractionRecord> records) {
  AttributeSets out;
  out.item.assign(text_attributes.begin(), text_attributes.end());
  std::vector<const ExtractionRecord*> sorted;
  for (const auto& r : records) sorted.push_back(&r);
  std::stable_sort(sorted.begin(), sorted.end(), [](const auto* a, const auto* b) {
    return std::tie(a->item_id, a->kind) < std::tie(b->item_id, b->kind);
  });
  for (const auto* r : sorted) {
    auto& target = r->kind == PromptKind::ItemAttributes ? out.item : out.aesthetic;
    for (const auto& kw : r->keywords) target.push_back({r->item_id, kw});
  }
  return out;
}

GraphBundle assemble_graphs(const SplitDataset& data, const AttributeSets& attributes,
                            const GraphOptions& options) {
  GraphBundle g;
  g.users = data.users;
  g.items = data.items;

  std::vector<Assignment> known;
  if (options.item_attributes) {
    for (const auto& a : attributes.item) {
      if (data.items.find(a.item_id)) known.push_back(a);
    }
  }
  if (known.empty()) {
    g.item_attributes = BipartiteGraph::from_edges(g.items.size(), 0, {});
  } else {
    auto iia = build_item_attribute_graph(known, data.items);
    g.item_attributes = std::move(iia.graph);
    g.attributes = std::move(iia.attributes);
  }

  const auto train = to_interactions(data, data.train);
  const std::span<const Assignment> aesthetic =
      options.aesthetics ? std::span<const Assignment>(attributes.aesthetic) : std::span<const Assignment>();
  auto ug = build_user_graph(train, aesthetic, data.items, data.users);
  if (ug.users.size() != data.users.size()) {
    throw Error(ErrorKind::Integrity, "training interactions reference users outside the dataset");
  }
  g.user_items = std::move(ug.user_items);
  g.user_aesthetics = std::move(ug.user_aesthetics);
  g.aesthetics = std::move(ug.aesthetics);
  g.validate();
  return g;
}

std::vector<ColdItem> cold_candidates(const PreparedData& data, const AttributeSets& attributes) {
  std::map<std::string, std::vector<std::string>, std::less<>> keywords;
  for (const auto& a : attributes.item) keywords[a.item_id].push_back(a.keyword);

  std::vector<bool> trained(data.dataset.items.size(), false);
  for (const auto& p : data.dataset.train) trained[p.item] = true;

  std::vector<ColdItem> out;
  for (Index i = 0; i < data.dataset.items.size(); ++i) {
    if (trained[i]) continue;
    const auto& id = data.dataset.items.id(i);
    out.push_back({id, keywords[id]});
  }
  for (const auto& id : data.cold_items) out.push_back({id, keywords[id]});
  return out;
}

std::vector<Interaction> cold_positives(const PreparedData& data) {
  auto out = to_interactions(data.dataset, data.dataset.test);
  out.insert(out.end(), data.cold_test.begin(), data.cold_test.end());
  return out;
}

json report_to_json(const MetricsReport& r) {
  return json{{"mode", mode_label(r.mode)}, {"k", r.k},          {"users", r.users},
              {"recall", r.recall},         {"ndcg", r.ndcg},    {"precision", r.precision},
              {"averaged_over", "users"},   {"random_recall", r.random_recall}};
}

}  // namespace agr
