// agr: prepare data, extract image keywords, train, evaluate, recommend.
//
// Exit codes: 0 ok, 2 configuration, 3 integrity mismatch, 4 lookup failure,
// 1 anything else.

#include <iostream>

#include <CLI11.hpp>

#include "agr/commands.hpp"
#include "agr/error.hpp"

using namespace agr;
namespace cmd = agr::commands;

namespace {

void add_common(CLI::App* sub, cmd::Common& c) {
  sub->add_option("--threads", c.threads, "Worker threads")->check(CLI::PositiveNumber)->capture_default_str();
  sub->add_flag("--force", c.force, "Overwrite existing outputs");
}

void print(const nlohmann::json& j) { std::cout << j.dump(2) << '\n'; }

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Attribute-graph fashion recommender"};
  app.require_subcommand(1);
  app.fallthrough();  // lets --config follow the subcommand name
  app.set_config("--config", "", "key = value file; options go under a [command] section")
      ->check(CLI::ExistingFile);
  app.allow_config_extras(CLI::config_extras_mode::error);

  cmd::PrepareArgs pa;
  bool no_description = false;
  auto* prepare = app.add_subcommand("prepare", "Filter and split interactions, tokenize item metadata");
  prepare->add_option("--interactions", pa.interactions, "user<TAB>item file")->required()->check(CLI::ExistingFile);
  prepare->add_option("--items", pa.items, "Item metadata JSONL")->check(CLI::ExistingFile);
  prepare->add_option("--out", pa.out, "Output directory")->required();
  prepare->add_option("--min-users", pa.min_users, "Keep items with more than this many users")->capture_default_str();
  prepare->add_option("--split", pa.split, "train,validation,test ratios")->capture_default_str();
  prepare->add_option("--seed", pa.seed)->capture_default_str();
  prepare->add_option("--price-buckets", pa.price_buckets)->capture_default_str();
  prepare->add_option("--holdout-items", pa.holdout_items, "Fraction of items kept out of training entirely")
      ->capture_default_str();
  prepare->add_option("--stop-words", pa.stop_words, "Stop-word file replacing the built-in list")
      ->check(CLI::ExistingFile);
  prepare->add_flag("--no-description", no_description, "Do not tokenize descriptions");
  add_common(prepare, pa.common);

  cmd::ExtractArgs ea;
  auto* extract = app.add_subcommand("extract", "Query a vision-language backend for image keywords");
  extract->add_option("--items", ea.items, "Item metadata JSONL (image_ref per item)")
      ->required()
      ->check(CLI::ExistingFile);
  extract->add_option("--backend", ea.backend)->check(CLI::IsMember({"fixture", "http"}))->capture_default_str();
  extract->add_option("--fixture", ea.fixture, "Fixture answers JSON")->check(CLI::ExistingFile);
  extract->add_option("--backend-config", ea.backend_config, "http backend key = value file")
      ->check(CLI::ExistingFile);
  extract->add_option("--base-url", ea.base_url);
  extract->add_option("--path", ea.path, "Request path (default /v1/describe)");
  extract->add_option("--token-env", ea.token_env, "Environment variable holding the bearer token")
      ->capture_default_str();
  extract->add_option("--timeout", ea.timeout_seconds, "Request timeout in seconds")->capture_default_str();
  extract->add_option("--retries", ea.retries)->check(CLI::PositiveNumber)->capture_default_str();
  extract->add_option("--kinds", ea.kinds)->delimiter(',')->check(CLI::IsMember({"item", "aesthetic"}));
  extract->add_option("--out", ea.out, "Output JSONL (appended, resumable)")->required();
  add_common(extract, ea.common);

  cmd::TrainArgs ta;
  std::vector<double> alpha;
  bool no_item_attrs = false, no_aesthetics = false;
  auto* train = app.add_subcommand("train", "Train embeddings with BPR");
  train->add_option("--data", ta.data, "Prepared dataset directory")->required()->check(CLI::ExistingDirectory);
  train->add_option("--attrs", ta.attrs, "Extraction JSONL")->check(CLI::ExistingFile);
  train->add_option("--out", ta.out, "Checkpoint path")->required();
  train->add_option("--log", ta.log, "Training log (default <out>.log.jsonl)");
  train->add_option("--dim", ta.model.dim)->capture_default_str();
  train->add_option("--layers", ta.model.layers)->capture_default_str();
  train->add_option("--alpha", alpha, "Layer weights alpha_0..alpha_K (default uniform)")->delimiter(',');
  train->add_option("--lr", ta.model.learning_rate)->capture_default_str();
  train->add_option("--l2", ta.model.l2_weight)->capture_default_str();
  train->add_option("--neg", ta.model.negatives, "Negatives per interaction")->capture_default_str();
  train->add_option("--init-scale", ta.model.init_scale)->capture_default_str();
  train->add_option("--seed", ta.model.seed)->capture_default_str();
  train->add_option("--epochs", ta.train.epochs)->capture_default_str();
  train->add_option("--batch-size", ta.train.batch_size)->capture_default_str();
  train->add_option("--patience", ta.train.patience, "0 disables early stopping")->capture_default_str();
  train->add_option("--val-k", ta.train.validation_k)->capture_default_str();
  train->add_option("--checkpoint-every", ta.checkpoint_every, "Also write <out>.epochN every N epochs");
  train->add_flag("--no-item-attrs", no_item_attrs, "Drop the item/attribute graph");
  train->add_flag("--no-aesthetics", no_aesthetics, "Drop the user/aesthetic relation");
  add_common(train, ta.common);

  cmd::EvaluateArgs va;
  auto* evaluate = app.add_subcommand("evaluate", "Recall/NDCG/Precision@k on the test split");
  evaluate->add_option("--model", va.model)->required()->check(CLI::ExistingFile);
  evaluate->add_option("--data", va.data)->required()->check(CLI::ExistingDirectory);
  evaluate->add_option("--k", va.k)->check(CLI::PositiveNumber)->capture_default_str();
  evaluate->add_option("--attrs", va.attrs, "Override the extraction file recorded in the checkpoint");
  evaluate->add_option("--out", va.out, "Report path (default <model>.<mode>.metrics.json)");
  evaluate->add_flag("--cold-start", va.cold_start, "Rank only items without training interactions");
  add_common(evaluate, va.common);

  cmd::RecommendArgs ra;
  auto* recommend = app.add_subcommand("recommend", "Top-k items for one user");
  recommend->add_option("--model", ra.model)->required()->check(CLI::ExistingFile);
  recommend->add_option("--data", ra.data)->required()->check(CLI::ExistingDirectory);
  recommend->add_option("--user", ra.user)->required();
  recommend->add_option("--k", ra.k)->check(CLI::PositiveNumber)->capture_default_str();
  recommend->add_option("--attrs", ra.attrs, "Override the extraction file recorded in the checkpoint");
  recommend->add_flag("--explain", ra.explain, "List keywords shared with the user's history");
  add_common(recommend, ra.common);

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::CallForAllHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return exit_code(ErrorKind::Config);
  }

  try {
    if (*prepare) {
      pa.description = !no_description;
      print(cmd::prepare(pa));
    } else if (*extract) {
      print(cmd::extract(ea));
    } else if (*train) {
      ta.model.layer_weights = alpha;
      ta.item_attributes = !no_item_attrs;
      ta.aesthetics = !no_aesthetics;
      // Surface the K note before the run starts, then the summary at the end.
      if (ta.model.layers > cmd::kUsualMaxLayers) {
        std::cerr << "note: --layers " << ta.model.layers << " is above the 0.." << cmd::kUsualMaxLayers
                  << " range usually explored for this model; continuing\n";
      }
      print(cmd::train(ta));
    } else if (*evaluate) {
      print(cmd::evaluate(va));
    } else if (*recommend) {
      print(cmd::recommend(ra));
    }
  } catch (const Error& e) {
    std::cerr << "error: " << e.what() << '\n';
    return exit_code(e.kind());
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 1;
  }
  return 0;
}
