#include "agr/commands.hpp"

#include <algorithm>
#include <filesystem>
#include <fstream>
#include <iterator>
#include <map>
#include <memory>
#include <set>
#include <sstream>

#include "agr/checkpoint.hpp"
#include "agr/error.hpp"
#include "agr/eval.hpp"
#include "agr/extractor.hpp"
#include "agr/hash.hpp"
#include "agr/pipeline.hpp"
#include "agr/text.hpp"

namespace agr::commands {

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

std::string read_bytes(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(ErrorKind::Io, "cannot open " + path.string());
  return {std::istreambuf_iterator<char>(in), {}};
}

void write_text(const fs::path& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw Error(ErrorKind::Io, "cannot write " + path.string());
  out << text;
  if (!out) throw Error(ErrorKind::Io, "write failed: " + path.string());
}

void refuse_overwrite(const fs::path& path, bool force) {
  if (!force && fs::exists(path)) {
    throw Error(ErrorKind::Config, path.string() + " already exists (use --force)");
  }
}

AttributeSets load_attributes(const PreparedData& data, const std::string& attrs_path) {
  std::vector<ExtractionRecord> records;
  if (!attrs_path.empty()) records = read_extraction_file(attrs_path);
  return collect_attributes(data.text_attributes, records);
}

}  // namespace

LoadedModel load_model(const std::string& model_path, const std::string& data_dir,
                       const std::string& attrs_override, unsigned threads) {
  LoadedModel m;
  const auto bytes = read_bytes(model_path);
  m.checkpoint_hash = to_hex(fnv1a64(bytes));
  std::istringstream in(bytes);
  auto cp = read_checkpoint(in);
  m.header = cp.header;

  std::string attrs;
  GraphOptions options;
  if (auto it = m.header.find("config"); it != m.header.end()) {
    attrs = it->value("attrs", std::string());
    options.item_attributes = it->value("item_attributes", true);
    options.aesthetics = it->value("aesthetics", true);
  }
  if (!attrs_override.empty()) attrs = attrs_override;

  m.data = load_prepared(data_dir);
  m.attributes = load_attributes(m.data, attrs);
  auto graphs = assemble_graphs(m.data.dataset, m.attributes, options);
  verify_checkpoint_matches(m.header, graphs);
  if (m.header.contains("dataset_hash") && m.header["dataset_hash"] != m.data.dataset_hash) {
    throw Error(ErrorKind::Integrity, "checkpoint was trained on a different prepared dataset");
  }
  m.model = std::make_unique<Recommender>(std::move(graphs), std::move(cp.tables), config_from_header(m.header),
                                          threads);
  return m;
}

SplitRatios parse_split(const std::string& text) {
  const auto parts = text::split(text, ',');
  if (parts.size() != 3) throw Error(ErrorKind::Config, "split needs three comma-separated ratios");
  double r[3];
  for (int k = 0; k < 3; ++k) {
    const std::string s(text::trim(parts[k]));
    std::size_t used = 0;
    try {
      r[k] = std::stod(s, &used);
    } catch (const std::exception&) {
      used = 0;
    }
    if (used == 0 || used != s.size()) throw Error(ErrorKind::Config, "split: invalid ratio '" + s + "'");
  }
  return {r[0], r[1], r[2]};
}

json prepare(const PrepareArgs& a) {
  const json resolved = {{"command", "prepare"},
                         {"interactions", a.interactions},
                         {"items", a.items},
                         {"out", a.out},
                         {"min_users", a.min_users},
                         {"split", a.split},
                         {"seed", a.seed},
                         {"price_buckets", a.price_buckets},
                         {"holdout_items", a.holdout_items},
                         {"description", a.description},
                         {"stop_words", a.stop_words},
                         {"threads", a.common.threads}};
  PrepareOptions o;
  o.interactions = a.interactions;
  o.items = a.items;
  o.out = a.out;
  o.min_users = a.min_users;
  o.ratios = parse_split(a.split);
  o.seed = a.seed;
  o.price_buckets = a.price_buckets;
  o.holdout_items = a.holdout_items;
  o.include_description = a.description;
  o.stop_words = a.stop_words;
  o.force = a.common.force;
  o.resolved_config = resolved;
  const auto manifest = prepare_dataset(o);
  return {{"out", a.out}, {"counts", manifest["counts"]}};
}

json extract(const ExtractArgs& a) {
  // The backend is built first so that missing credentials fail before any output exists.
  std::unique_ptr<VisionBackend> backend;
  if (a.backend == "fixture") {
    if (a.fixture.empty()) throw Error(ErrorKind::Config, "the fixture backend needs a fixture file");
    backend = std::make_unique<FixtureBackend>(FixtureBackend::from_file(a.fixture));
  } else if (a.backend == "http") {
    HttpBackendConfig hc;
    if (!a.backend_config.empty()) hc = HttpBackendConfig::from_file(a.backend_config);
    if (!a.base_url.empty()) hc.base_url = a.base_url;
    if (!a.path.empty()) hc.path = a.path;
    if (hc.token_env.empty()) hc.token_env = a.token_env;
    hc.timeout = std::chrono::seconds(a.timeout_seconds);
    backend = std::make_unique<HttpBackend>(hc);
  } else {
    throw Error(ErrorKind::Config, "unknown backend '" + a.backend + "'");
  }
  if (a.retries < 1) throw Error(ErrorKind::Config, "retries must be >= 1");

  BatchOptions opts;
  opts.kinds.clear();
  for (const auto& k : a.kinds) opts.kinds.push_back(parse_kind_label(k));
  opts.concurrency_limit = std::max(1u, a.common.threads);
  opts.retry.attempts = a.retries;

  std::vector<BatchItem> batch;
  {
    std::ifstream in(a.items);
    if (!in) throw Error(ErrorKind::Io, "cannot open " + a.items);
    for (const auto& m : parse_items(in, a.items)) batch.push_back({m.item_id, m.image_ref.value_or(m.item_id)});
  }

  const json resolved = {{"command", "extract"},   {"items", a.items},
                         {"backend", a.backend},   {"fixture", a.fixture},
                         {"backend_config", a.backend_config}, {"base_url", a.base_url},
                         {"path", a.path},         {"token_env", a.token_env},
                         {"kinds", a.kinds},       {"timeout_seconds", a.timeout_seconds},
                         {"retries", a.retries},   {"out", a.out},
                         {"threads", a.common.threads}};
  if (a.common.force) fs::remove(a.out);
  const auto summary = run_extraction_batch(batch, *backend, a.out, opts);
  write_text(a.out + ".config.json", resolved.dump(2) + "\n");

  json skipped = json::array();
  for (const auto& s : summary.skip_report) {
    skipped.push_back({{"item_id", s.item_id}, {"kind", kind_label(s.kind)}, {"reason", s.reason}});
  }
  return {{"ok", summary.ok}, {"cached", summary.cached}, {"skipped", summary.skipped}, {"skip_report", skipped}};
}

json train(TrainArgs a) {
  a.train.threads = std::max(1u, a.common.threads);
  a.model.validate();
  json notes = json::array();
  if (a.model.layers > kUsualMaxLayers) {
    notes.push_back("layers=" + std::to_string(a.model.layers) + " is above the 0.." +
                    std::to_string(kUsualMaxLayers) + " range usually explored for this model; continuing");
  }
  const std::string log_path = a.log.empty() ? a.out + ".log.jsonl" : a.log;
  refuse_overwrite(a.out, a.common.force);
  refuse_overwrite(log_path, a.common.force);

  const json resolved = {{"command", "train"},
                         {"data", a.data},
                         {"attrs", a.attrs},
                         {"item_attributes", a.item_attributes},
                         {"aesthetics", a.aesthetics},
                         {"dim", a.model.dim},
                         {"layers", a.model.layers},
                         {"alpha", a.model.alpha()},
                         {"lr", a.model.learning_rate},
                         {"l2", a.model.l2_weight},
                         {"neg", a.model.negatives},
                         {"init_scale", a.model.init_scale},
                         {"seed", a.model.seed},
                         {"epochs", a.train.epochs},
                         {"batch_size", a.train.batch_size},
                         {"patience", a.train.patience},
                         {"val_k", a.train.validation_k},
                         {"checkpoint_every", a.checkpoint_every},
                         {"out", a.out},
                         {"log", log_path},
                         {"threads", a.common.threads}};

  const auto data = load_prepared(a.data);
  // Price bucketing happened at prepare time; record what was actually used.
  a.model.price_buckets =
      data.manifest.value("config", json::object()).value("price_buckets", a.model.price_buckets);
  const auto attributes = load_attributes(data, a.attrs);
  const auto graphs = assemble_graphs(data.dataset, attributes, {a.item_attributes, a.aesthetics});

  auto header = make_checkpoint_header(graphs, a.model);
  header["config"] = resolved;
  header["dataset_hash"] = data.dataset_hash;
  auto save = [&](const fs::path& path, const EmbeddingTables& tables) { save_checkpoint(path, {header, tables}); };

  std::ofstream log(log_path, std::ios::trunc);
  if (!log) throw Error(ErrorKind::Io, "cannot write " + log_path);
  log << json{{"config", resolved}}.dump() << '\n';
  const std::string recall_key = "val_recall@" + std::to_string(a.train.validation_k);

  TrainCallbacks cb;
  cb.on_epoch = [&](const EpochStats& s, const EmbeddingTables& tables) {
    json line = {{"epoch", s.epoch}, {"loss", s.loss}, {"reg", s.reg}, {"seconds", s.seconds}};
    line[recall_key] = s.validation_recall ? json(*s.validation_recall) : json(nullptr);
    log << line.dump() << '\n' << std::flush;
    if (a.checkpoint_every > 0 && s.epoch % a.checkpoint_every == 0) {
      save(a.out + ".epoch" + std::to_string(s.epoch), tables);
    }
  };
  cb.on_best = [&](const EpochStats&, const EmbeddingTables& tables) { save(a.out, tables); };

  const auto result = agr::train(data.dataset, graphs, a.model, a.train, cb);
  save(a.out, result.tables);
  if (result.diverged) {
    throw Error(ErrorKind::Numeric, "training diverged after epoch " + std::to_string(result.history.size()) +
                                        "; the last finite tables were saved to " + a.out);
  }
  return {{"out", a.out},
          {"log", log_path},
          {"epochs_run", result.history.size()},
          {"best_epoch", result.best_epoch},
          {"stopped_early", result.stopped_early},
          {"final_loss", result.history.empty() ? json(nullptr) : json(result.history.back().loss)},
          {"notes", notes}};
}

json evaluate(const EvaluateArgs& a) {
  if (a.k < 1) throw Error(ErrorKind::Config, "k must be >= 1");
  const auto m = load_model(a.model, a.data, a.attrs, a.common.threads);
  MetricsReport report;
  if (a.cold_start) {
    const auto candidates = cold_candidates(m.data, m.attributes);
    const auto positives = cold_positives(m.data);
    report = evaluate_cold_start(*m.model, candidates, positives, a.k, a.common.threads);
  } else {
    report = evaluate_standard(*m.model, m.data.dataset, m.data.dataset.test, a.k, a.common.threads);
  }
  const std::string out =
      a.out.empty() ? a.model + (a.cold_start ? ".cold_start" : ".standard") + ".metrics.json" : a.out;
  auto j = report_to_json(report);
  j["checkpoint_hash"] = m.checkpoint_hash;
  j["dataset_hash"] = m.data.dataset_hash;
  j["config"] = {{"command", "evaluate"}, {"model", a.model}, {"data", a.data},
                 {"attrs", a.attrs},       {"k", a.k},         {"cold_start", a.cold_start},
                 {"out", out},             {"threads", a.common.threads}};
  j["model_config"] = m.header.value("config", json::object());
  // Written only after every metric is known, so a failure leaves no partial report.
  write_text(out, j.dump(2) + "\n");
  return j;
}

json recommend(const RecommendArgs& a) {
  if (a.k < 1) throw Error(ErrorKind::Config, "k must be >= 1");
  const auto m = load_model(a.model, a.data, a.attrs, a.common.threads);
  const auto& ds = m.data.dataset;
  const Index user = ds.users.at(a.user, "user");
  const auto& positives = ds.user_positives[user];

  std::vector<Index> candidates;
  for (Index i = 0; i < ds.items.size(); ++i) {
    if (!std::binary_search(positives.begin(), positives.end(), i)) candidates.push_back(i);
  }
  if (candidates.empty()) throw Error(ErrorKind::Lookup, "user " + a.user + " has no unseen items");
  const auto ranking = rank_items(user, candidates, m.model->embeddings(), positives);

  std::map<std::string, std::set<std::string>, std::less<>> keywords;
  if (a.explain) {
    for (const auto* set : {&m.attributes.item, &m.attributes.aesthetic})
      for (const auto& x : *set) keywords[x.item_id].insert(x.keyword);
  }
  std::set<std::string> history;
  for (Index i : positives) {
    if (auto it = keywords.find(ds.items.id(i)); it != keywords.end()) {
      history.insert(it->second.begin(), it->second.end());
    }
  }

  json items = json::array();
  for (std::size_t r = 0; r < std::min(a.k, ranking.ranked.size()); ++r) {
    const Index i = ranking.ranked[r];
    json entry = {{"item_id", ds.items.id(i)}, {"score", m.model->score(user, i)}};
    if (a.explain) {
      std::vector<std::string> shared;
      if (auto it = keywords.find(ds.items.id(i)); it != keywords.end()) {
        std::set_intersection(it->second.begin(), it->second.end(), history.begin(), history.end(),
                              std::back_inserter(shared));
      }
      entry["shared_keywords"] = shared;
    }
    items.push_back(std::move(entry));
  }
  return {{"user", a.user},
          {"k", a.k},
          {"items", items},
          {"checkpoint_hash", m.checkpoint_hash},
          {"dataset_hash", m.data.dataset_hash},
          {"config",
           {{"command", "recommend"}, {"model", a.model}, {"data", a.data}, {"attrs", a.attrs},
            {"user", a.user}, {"k", a.k}, {"explain", a.explain}, {"threads", a.common.threads}}}};
}

}  // namespace agr::commands
