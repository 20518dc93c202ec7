#include <doctest.h>

#include <cstring>
#include <filesystem>
#include <fstream>
#include <sstream>

#include "agr/checkpoint.hpp"
#include "agr/error.hpp"
#include "agr/pipeline.hpp"
#include "agr/planted.hpp"

using namespace agr;
namespace fs = std::filesystem;

namespace {

fs::path fresh_dir(const std::string& name) {
  auto p = fs::temp_directory_path() / ("agr_pipeline_" + std::to_string(::getpid())) / name;
  fs::remove_all(p);
  fs::create_directories(p.parent_path());
  return p;
}

// 30 users, 12 items; items i0..i9 have 30 users each, i10/i11 only 5.
fs::path write_inputs(const fs::path& dir) {
  fs::create_directories(dir);
  std::ofstream inter(dir / "interactions.tsv");
  for (int u = 0; u < 30; ++u) {
    for (int i = 0; i < 10; ++i)
      if ((u + i) % 3 != 0) inter << "u" << u << "\ti" << i << "\n";
    if (u < 5) inter << "u" << u << "\ti10\nu" << u << "\ti11\n";
  }
  std::ofstream items(dir / "items.jsonl");
  for (int i = 0; i < 12; ++i) {
    items << R"({"item_id":"i)" << i << R"(","brand":"Brand)" << (i % 3) << R"(","price":)" << (10 * i + 5)
          << R"(,"category":"skirt","color":")" << (i % 2 ? "navy" : "red")
          << R"(","description":"A light summer piece."})" << "\n";
  }
  return dir;
}

PrepareOptions options_for(const fs::path& in, const fs::path& out) {
  PrepareOptions o;
  o.interactions = in / "interactions.tsv";
  o.items = in / "items.jsonl";
  o.out = out;
  o.min_users = 10;
  o.price_buckets = 4;
  o.seed = 11;
  return o;
}

}  // namespace

TEST_CASE("prepare writes a loadable dataset") {
  const auto in = write_inputs(fresh_dir("in"));
  const auto out = fresh_dir("out");
  auto o = options_for(in, out);
  o.resolved_config = {{"seed", 11}};
  const auto manifest = prepare_dataset(o);

  CHECK(manifest["counts"]["items"] == 10);
  CHECK(manifest["config"]["seed"] == 11);
  CHECK(manifest["rounding"].get<std::string>().find("round-half-up") != std::string::npos);
  for (const char* f : {"manifest.json", "users.txt", "items.txt", "text_attributes.tsv", "items.jsonl"})
    CHECK(fs::exists(out / f));

  const auto loaded = load_prepared(out);
  CHECK(loaded.dataset.items.size() == 10);
  CHECK(loaded.dataset.train.size() == manifest["counts"]["train"].get<std::size_t>());
  CHECK(loaded.dataset.test.size() == manifest["counts"]["test"].get<std::size_t>());
  CHECK_FALSE(loaded.dataset_hash.empty());
  const auto has = [&](const std::string& item, const std::string& kw) {
    return std::find(loaded.text_attributes.begin(), loaded.text_attributes.end(), Assignment{item, kw}) !=
           loaded.text_attributes.end();
  };
  CHECK(has("i1", "color:navy"));
  CHECK(has("i0", "brand:brand0"));
  CHECK(has("i0", "desc:summer"));
  CHECK_FALSE(has("i10", "color:red"));

  // Same inputs and seed give the same bytes.
  const auto again = fresh_dir("again");
  o.out = again;
  prepare_dataset(o);
  std::ifstream a(out / "manifest.json"), b(again / "manifest.json");
  std::stringstream sa, sb;
  sa << a.rdbuf();
  sb << b.rdbuf();
  CHECK(sa.str() == sb.str());
  CHECK(load_prepared(again).dataset_hash == loaded.dataset_hash);
}

TEST_CASE("prepare refuses bad configuration and non-empty output") {
  const auto in = write_inputs(fresh_dir("in2"));
  const auto out = fresh_dir("out2");
  auto o = options_for(in, out);
  o.ratios = {0.8, 0.1, 0.2};
  try {
    prepare_dataset(o);
    FAIL("expected Config error");
  } catch (const Error& e) {
    CHECK(e.kind() == ErrorKind::Config);
  }
  CHECK_FALSE(fs::exists(out));

  o.ratios = {};
  prepare_dataset(o);
  CHECK_THROWS_AS(prepare_dataset(o), Error);
  o.force = true;
  CHECK_NOTHROW(prepare_dataset(o));
}

TEST_CASE("holdout moves whole items out of training") {
  const auto in = write_inputs(fresh_dir("in3"));
  const auto out = fresh_dir("out3");
  auto o = options_for(in, out);
  o.holdout_items = 0.2;
  prepare_dataset(o);
  const auto p = load_prepared(out);
  REQUIRE(p.cold_items.size() == 2);
  for (const auto& id : p.cold_items) CHECK_FALSE(p.dataset.items.find(id).has_value());
  CHECK_FALSE(p.cold_test.empty());

  const auto attrs = collect_attributes(p.text_attributes, {});
  const auto cands = cold_candidates(p, attrs);
  CHECK(cands.size() >= 2);
  CHECK(cands.back().item_id == p.cold_items.back());
  CHECK_FALSE(cands.back().keywords.empty());
}

TEST_CASE("collect_attributes ignores record order") {
  const std::vector<Assignment> text = {{"i1", "color:red"}};
  std::vector<ExtractionRecord> recs = {
      {"i2", PromptKind::ItemAttributes, {"wool"}, "fixture", "t"},
      {"i1", PromptKind::AestheticAttributes, {"calm"}, "fixture", "t"},
      {"i1", PromptKind::ItemAttributes, {"silk", "red"}, "fixture", "t"},
  };
  const auto a = collect_attributes(text, recs);
  std::reverse(recs.begin(), recs.end());
  const auto b = collect_attributes(text, recs);
  CHECK(a.item == b.item);
  CHECK(a.aesthetic == b.aesthetic);
  CHECK(a.item.front() == Assignment{"i1", "color:red"});
  CHECK(a.aesthetic == std::vector<Assignment>{{"i1", "calm"}});
}

TEST_CASE("checkpoint round trip and layout") {
  const auto world = make_planted_world({.users = 20, .items = 40, .item_keywords = 5, .aesthetic_keywords = 3});
  const auto data = split_dataset(world.interactions, {}, 1);
  const auto graphs = assemble_graphs(data, {world.item_attributes, world.aesthetic_attributes});
  ModelConfig c;
  c.dim = 4;
  c.layers = 2;
  auto tables = EmbeddingTables::random(graphs, 4, 0.1, 3);
  // Values exactly representable in float32 survive unchanged.
  for (auto* t : {&tables.users, &tables.items, &tables.attributes, &tables.aesthetics})
    for (auto& v : t->data()) v = static_cast<float>(v);

  std::stringstream io;
  write_checkpoint(io, {make_checkpoint_header(graphs, c), tables});
  const auto bytes = io.str();
  CHECK(bytes.substr(0, 4) == "AGR1");
  std::uint32_t len = 0;
  std::memcpy(&len, bytes.data() + 4, 4);
  const auto header = nlohmann::json::parse(bytes.substr(8, len));
  CHECK(header["dim"] == 4);
  CHECK(header["layers"] == 2);
  CHECK(header["counts"]["users"] == graphs.users.size());
  float first = 0;
  std::memcpy(&first, bytes.data() + 8 + len, 4);
  CHECK(first == static_cast<float>(tables.users.row(0)[0]));
  const auto floats = graphs.users.size() + graphs.items.size() + graphs.attributes.size() + graphs.aesthetics.size();
  CHECK(bytes.size() == 8 + len + 4 * 4 * floats);

  const auto cp = read_checkpoint(io);
  CHECK(cp.tables == tables);
  CHECK_NOTHROW(verify_checkpoint_matches(cp.header, graphs));
  const auto back = config_from_header(cp.header);
  CHECK(back.dim == 4);
  CHECK(back.layers == 2);
  CHECK(back.alpha() == c.alpha());

  std::istringstream truncated(bytes.substr(0, bytes.size() - 3));
  CHECK_THROWS_AS(read_checkpoint(truncated), Error);
  std::istringstream wrong("NOPE....");
  CHECK_THROWS_AS(read_checkpoint(wrong), Error);

  auto other = graphs;
  other.items = Vocabulary([&] {
    auto ids = std::vector<std::string>(graphs.items.entries().begin(), graphs.items.entries().end());
    std::swap(ids.front(), ids.back());
    return ids;
  }());
  try {
    verify_checkpoint_matches(cp.header, other);
    FAIL("expected Integrity error");
  } catch (const Error& e) {
    CHECK(e.kind() == ErrorKind::Integrity);
    CHECK(exit_code(e.kind()) == 3);
  }
}

TEST_CASE("metrics report JSON") {
  MetricsReport r;
  r.k = 10;
  r.recall = 0.5;
  r.users = 3;
  r.mode = EvalMode::ColdStart;
  const auto j = report_to_json(r);
  CHECK(j["mode"] == "cold_start");
  CHECK(j["k"] == 10);
  CHECK(j["users"] == 3);
  CHECK(j["averaged_over"] == "users");
  for (const char* key : {"recall", "ndcg", "precision"}) CHECK(j.contains(key));
}

TEST_CASE("exit codes") {
  CHECK(exit_code(ErrorKind::Config) == 2);
  CHECK(exit_code(ErrorKind::Integrity) == 3);
  CHECK(exit_code(ErrorKind::Lookup) == 4);
  CHECK(exit_code(ErrorKind::Parse) == 1);
  CHECK(exit_code(ErrorKind::Io) == 1);
}
