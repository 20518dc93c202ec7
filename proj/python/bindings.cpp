#include <pybind11/numpy.h>
#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

#include <algorithm>
#include <cstring>

#include "agr/commands.hpp"
#include "agr/error.hpp"
#include "agr/eval.hpp"
#include "agr/extractor.hpp"
#include "agr/ingest.hpp"
#include "agr/planted.hpp"
#include "agr/training.hpp"

namespace py = pybind11;
namespace cmd = agr::commands;
using nlohmann::json;

namespace {

// JSON crosses the boundary as text; the standard json module rebuilds it.
py::object to_python(const json& j) { return py::module_::import("json").attr("loads")(j.dump()); }

template <typename F>
py::object run_released(F&& f) {
  json result;
  {
    py::gil_scoped_release release;
    result = f();
  }
  return to_python(result);
}

agr::PromptKind kind_from(const std::string& label) { return agr::parse_kind_label(label); }

py::array_t<double> to_numpy(const agr::EmbeddingTable& t) {
  py::array_t<double> out({t.rows(), t.dim()});
  std::copy(t.data().begin(), t.data().end(), out.mutable_data());
  return out;
}

std::vector<std::string> ids(const agr::Vocabulary& v) { return {v.entries().begin(), v.entries().end()}; }

}  // namespace

PYBIND11_MODULE(_core, m) {
  m.doc() = "Attribute-graph recommender core";

  // Exception hierarchy mirrors the tool's exit codes.
  static py::exception<agr::Error> base(m, "AgrError");
  static py::object config_error = py::reinterpret_steal<py::object>(
      PyErr_NewException("agr._core.ConfigError", base.ptr(), nullptr));
  static py::object integrity_error = py::reinterpret_steal<py::object>(
      PyErr_NewException("agr._core.IntegrityError", base.ptr(), nullptr));
  static py::object lookup_error = py::reinterpret_steal<py::object>(
      PyErr_NewException("agr._core.LookupFailure", base.ptr(), nullptr));
  m.attr("ConfigError") = config_error;
  m.attr("IntegrityError") = integrity_error;
  m.attr("LookupFailure") = lookup_error;
  py::register_exception_translator([](std::exception_ptr p) {
    try {
      if (p) std::rethrow_exception(p);
    } catch (const agr::Error& e) {
      PyObject* type = base.ptr();
      switch (e.kind()) {
        case agr::ErrorKind::Config:
          type = config_error.ptr();
          break;
        case agr::ErrorKind::Integrity:
          type = integrity_error.ptr();
          break;
        case agr::ErrorKind::Lookup:
          type = lookup_error.ptr();
          break;
        default:
          break;
      }
      PyErr_SetString(type, e.what());
    }
  });

  m.def(
      "split_sizes",
      [](std::size_t n, double train, double validation, double test) {
        const auto s = agr::split_sizes(n, {train, validation, test});
        return py::make_tuple(s.train, s.validation, s.test);
      },
      py::arg("n"), py::arg("train") = 0.8, py::arg("validation") = 0.1, py::arg("test") = 0.1);

  m.def(
      "render_prompt", [](const std::string& kind) { return std::string(agr::render_prompt(kind_from(kind))); },
      py::arg("kind"), "Fixed prompt text for 'item' or 'aesthetic'.");
  m.def(
      "parse_keywords", [](const std::string& raw) { return agr::parse_keyword_response(raw); }, py::arg("raw"));

  m.def("bpr_loss", &agr::bpr_loss, py::arg("s_pos"), py::arg("s_neg"));

  auto metric = [&](const char* name, auto fn) {
    m.def(
        name,
        [fn](std::vector<agr::Index> ranked, std::vector<agr::Index> positives, std::size_t k) {
          std::sort(positives.begin(), positives.end());
          positives.erase(std::unique(positives.begin(), positives.end()), positives.end());
          return fn(ranked, positives, k);
        },
        py::arg("ranked"), py::arg("positives"), py::arg("k"));
  };
  metric("recall_at_k", [](auto& r, auto& p, std::size_t k) { return agr::recall_at_k(r, p, k); });
  metric("precision_at_k", [](auto& r, auto& p, std::size_t k) { return agr::precision_at_k(r, p, k); });
  metric("ndcg_at_k", [](auto& r, auto& p, std::size_t k) { return agr::ndcg_at_k(r, p, k); });

  m.def(
      "planted_world",
      [](std::size_t users, std::size_t items, std::size_t item_keywords, std::size_t aesthetic_keywords,
         std::size_t keywords_per_user, double holdout_fraction, std::uint64_t seed) {
        agr::PlantedOptions o;
        o.users = users;
        o.items = items;
        o.item_keywords = item_keywords;
        o.aesthetic_keywords = aesthetic_keywords;
        o.keywords_per_user = keywords_per_user;
        o.holdout_fraction = holdout_fraction;
        o.seed = seed;
        const auto w = agr::make_planted_world(o);
        auto pairs = [](const auto& xs, auto first, auto second) {
          py::list out;
          for (const auto& x : xs) out.append(py::make_tuple(x.*first, x.*second));
          return out;
        };
        py::dict d;
        d["interactions"] = pairs(w.interactions, &agr::Interaction::user_id, &agr::Interaction::item_id);
        d["cold_interactions"] = pairs(w.cold_interactions, &agr::Interaction::user_id, &agr::Interaction::item_id);
        d["item_attributes"] = pairs(w.item_attributes, &agr::Assignment::item_id, &agr::Assignment::keyword);
        d["aesthetic_attributes"] =
            pairs(w.aesthetic_attributes, &agr::Assignment::item_id, &agr::Assignment::keyword);
        d["cold_items"] = w.cold_items;
        d["user_keywords"] = w.user_keywords;
        return d;
      },
      py::arg("users") = 200, py::arg("items") = 500, py::arg("item_keywords") = 30,
      py::arg("aesthetic_keywords") = 15, py::arg("keywords_per_user") = 3, py::arg("holdout_fraction") = 0.0,
      py::arg("seed") = 2024);

  // Pipeline stages; each mirrors one subcommand of the command-line tool.
  const cmd::PrepareArgs pd;
  m.def(
      "prepare",
      [](std::string interactions, std::string out, std::string items, std::size_t min_users, std::string split,
         std::uint64_t seed, std::size_t price_buckets, double holdout_items, bool description,
         std::string stop_words, unsigned threads, bool force) {
        cmd::PrepareArgs a;
        a.interactions = std::move(interactions);
        a.out = std::move(out);
        a.items = std::move(items);
        a.min_users = min_users;
        a.split = std::move(split);
        a.seed = seed;
        a.price_buckets = price_buckets;
        a.holdout_items = holdout_items;
        a.description = description;
        a.stop_words = std::move(stop_words);
        a.common = {threads, force};
        return run_released([&] { return cmd::prepare(a); });
      },
      py::arg("interactions"), py::arg("out"), py::arg("items") = "", py::arg("min_users") = pd.min_users,
      py::arg("split") = pd.split, py::arg("seed") = pd.seed, py::arg("price_buckets") = pd.price_buckets,
      py::arg("holdout_items") = pd.holdout_items, py::arg("description") = pd.description,
      py::arg("stop_words") = "", py::arg("threads") = 1u, py::arg("force") = false);

  const cmd::ExtractArgs ed;
  m.def(
      "extract",
      [](std::string items, std::string out, std::string backend, std::string fixture, std::string backend_config,
         std::string base_url, std::string token_env, std::vector<std::string> kinds, int retries, unsigned threads,
         bool force) {
        cmd::ExtractArgs a;
        a.items = std::move(items);
        a.out = std::move(out);
        a.backend = std::move(backend);
        a.fixture = std::move(fixture);
        a.backend_config = std::move(backend_config);
        a.base_url = std::move(base_url);
        a.token_env = std::move(token_env);
        a.kinds = std::move(kinds);
        a.retries = retries;
        a.common = {threads, force};
        return run_released([&] { return cmd::extract(a); });
      },
      py::arg("items"), py::arg("out"), py::arg("backend") = ed.backend, py::arg("fixture") = "",
      py::arg("backend_config") = "", py::arg("base_url") = "", py::arg("token_env") = ed.token_env,
      py::arg("kinds") = ed.kinds, py::arg("retries") = ed.retries, py::arg("threads") = 1u,
      py::arg("force") = false);

  const cmd::TrainArgs td;
  m.def(
      "train",
      [](std::string data, std::string out, std::string attrs, std::size_t dim, std::size_t layers,
         std::vector<double> alpha, double lr, double l2, std::size_t neg, double init_scale, std::uint64_t seed,
         std::size_t epochs, std::size_t batch_size, std::size_t patience, std::size_t val_k, bool item_attributes,
         bool aesthetics, std::string log, unsigned threads, bool force) {
        cmd::TrainArgs a;
        a.data = std::move(data);
        a.out = std::move(out);
        a.attrs = std::move(attrs);
        a.log = std::move(log);
        a.model.dim = dim;
        a.model.layers = layers;
        a.model.layer_weights = std::move(alpha);
        a.model.learning_rate = lr;
        a.model.l2_weight = l2;
        a.model.negatives = neg;
        a.model.init_scale = init_scale;
        a.model.seed = seed;
        a.train.epochs = epochs;
        a.train.batch_size = batch_size;
        a.train.patience = patience;
        a.train.validation_k = val_k;
        a.item_attributes = item_attributes;
        a.aesthetics = aesthetics;
        a.common = {threads, force};
        return run_released([&] { return cmd::train(a); });
      },
      py::arg("data"), py::arg("out"), py::arg("attrs") = "", py::arg("dim") = td.model.dim,
      py::arg("layers") = td.model.layers, py::arg("alpha") = std::vector<double>{},
      py::arg("lr") = td.model.learning_rate, py::arg("l2") = td.model.l2_weight, py::arg("neg") = td.model.negatives,
      py::arg("init_scale") = td.model.init_scale, py::arg("seed") = td.model.seed,
      py::arg("epochs") = td.train.epochs, py::arg("batch_size") = td.train.batch_size,
      py::arg("patience") = td.train.patience, py::arg("val_k") = td.train.validation_k,
      py::arg("item_attributes") = true, py::arg("aesthetics") = true, py::arg("log") = "",
      py::arg("threads") = 1u, py::arg("force") = false);

  m.def(
      "evaluate",
      [](std::string model, std::string data, std::size_t k, bool cold_start, std::string attrs, std::string out,
         unsigned threads) {
        cmd::EvaluateArgs a;
        a.model = std::move(model);
        a.data = std::move(data);
        a.k = k;
        a.cold_start = cold_start;
        a.attrs = std::move(attrs);
        a.out = std::move(out);
        a.common.threads = threads;
        return run_released([&] { return cmd::evaluate(a); });
      },
      py::arg("model"), py::arg("data"), py::arg("k") = 50, py::arg("cold_start") = false, py::arg("attrs") = "",
      py::arg("out") = "", py::arg("threads") = 1u);

  m.def(
      "recommend",
      [](std::string model, std::string data, std::string user, std::size_t k, bool explain, std::string attrs,
         unsigned threads) {
        cmd::RecommendArgs a;
        a.model = std::move(model);
        a.data = std::move(data);
        a.user = std::move(user);
        a.k = k;
        a.explain = explain;
        a.attrs = std::move(attrs);
        a.common.threads = threads;
        return run_released([&] { return cmd::recommend(a); });
      },
      py::arg("model"), py::arg("data"), py::arg("user"), py::arg("k") = 10, py::arg("explain") = false,
      py::arg("attrs") = "", py::arg("threads") = 1u);

  py::class_<cmd::LoadedModel>(m, "Model", "A trained checkpoint bound to its prepared dataset.")
      .def(py::init([](const std::string& model, const std::string& data, const std::string& attrs, unsigned threads) {
             return cmd::load_model(model, data, attrs, threads);
           }),
           py::arg("model"), py::arg("data"), py::arg("attrs") = "", py::arg("threads") = 1u)
      .def_property_readonly("users", [](const cmd::LoadedModel& s) { return ids(s.model->graphs().users); })
      .def_property_readonly("items", [](const cmd::LoadedModel& s) { return ids(s.model->graphs().items); })
      .def_property_readonly("checkpoint_hash", [](const cmd::LoadedModel& s) { return s.checkpoint_hash; })
      .def_property_readonly("dataset_hash", [](const cmd::LoadedModel& s) { return s.data.dataset_hash; })
      .def_property_readonly("header", [](const cmd::LoadedModel& s) { return to_python(s.header); })
      .def("user_embeddings", [](const cmd::LoadedModel& s) { return to_numpy(s.model->embeddings().users); },
           "Final user embeddings, one row per entry of `users`.")
      .def("item_embeddings", [](const cmd::LoadedModel& s) { return to_numpy(s.model->embeddings().items); })
      .def(
          "score",
          [](const cmd::LoadedModel& s, const std::string& user, const std::string& item) {
            const auto& g = s.model->graphs();
            return s.model->score(g.users.at(user, "user"), g.items.at(item, "item"));
          },
          py::arg("user"), py::arg("item"));
}
