/**
 * Copyright (c) 2026 The parabench authors.
 *
 *  Licensed under the Apache License, Version 2.0 (the "License");
 *  you may not use this file except in compliance with the License.
 *  You may obtain a copy of the License at
 *
 *      http://www.apache.org/licenses/LICENSE-2.0
 *
 *  Unless required by applicable law or agreed to in writing,
 *  software distributed under the License is distributed on an "AS
 *  IS" BASIS, WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either
 *  express or implied.  See the License for the specific language
 *  governing permissions and limitations under the License.
 */

// parabench: dataset generation, dual-encoder training, exact top-k cosine
// retrieval, rank-consistency evaluation and the strategy-comparison
// experiment, behind one binary.
//
// Exit codes: 0 success, 1 runtime error, 2 usage error, 3 validation error.
// Failures print one machine-readable JSON object on stderr.

#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <json.hpp>

#include "parabench/parabench.hpp"

namespace fs = std::filesystem;
using nlohmann::ordered_json;

namespace {

void write_text_file(const fs::path& path, const std::string& text) {
  std::ofstream out(path, std::ios::trunc);
  if (!out) parabench::fail(parabench::ErrorCode::io_error, "cannot write " + path.string());
  out << text;
}

nlohmann::json read_json_file(const fs::path& path) {
  std::ifstream in(path);
  if (!in) parabench::fail(parabench::ErrorCode::io_error, "cannot open " + path.string());
  nlohmann::json j;
  try {
    in >> j;
  } catch (const nlohmann::json::exception& e) {
    parabench::fail(parabench::ErrorCode::invalid_config,
                    path.string() + ": " + e.what());
  }
  return j;
}

struct SynthArgs {
  std::string config_path;
  std::string out_dir;
};

parabench::duotower::SynthConfig load_synth_config(const std::string& config_path) {
  if (config_path.empty()) return {};
  nlohmann::json j = read_json_file(config_path);
  if (j.contains("synth")) j = j.at("synth");
  return parabench::duotower::synth_config_from_json(j);
}

int run_synth(const SynthArgs& args) {
  using namespace parabench::duotower;
  const SynthConfig cfg = load_synth_config(args.config_path);
  const SynthData data = synth_generate(cfg);
  write_synth_dir(data, cfg, args.out_dir);
  ordered_json summary;
  summary["out"] = args.out_dir;
  summary["pretrain_rows"] = data.pretrain_texts.rows();
  summary["contrastive_pairs"] = data.contrastive_texts.rows();
  summary["gallery"] = data.gallery.rows();
  summary["queries"] = data.queries.rows();
  std::cout << summary.dump(2) << '\n';
  return 0;
}

struct TrainArgs {
  std::string data_dir;
  std::string config_path;
  std::string strategy = "frozen_alignment";
  std::string out_dir;
  std::optional<std::uint64_t> seed;
};

parabench::duotower::ExperimentConfig load_experiment_config(const std::string& path) {
  if (path.empty()) return {};
  return parabench::duotower::experiment_config_from_json(read_json_file(path));
}

int run_train(const TrainArgs& args) {
  using namespace parabench;
  using namespace parabench::duotower;

  const fs::path data_dir = args.data_dir;
  const SynthConfig synth_cfg = [&] {
    nlohmann::json echo = read_json_file(data_dir / "synth_config.json");
    if (!echo.contains("synth")) {
      fail(ErrorCode::invalid_config, "synth_config.json lacks a synth section");
    }
    return synth_config_from_json(echo.at("synth"));
  }();

  ExperimentConfig cfg = load_experiment_config(args.config_path);
  const Strategy strategy = strategy_from_string(args.strategy);
  if (args.seed) {
    cfg.train.seed = *args.seed;
    cfg.pretrain.seed = *args.seed;
  } else {
    cfg.pretrain.seed = cfg.train.seed;
  }

  const Mat pretrain_texts = to_mat64(load_embeddings(data_dir / "pretrain_texts.pemb"));
  const Mat pretrain_latents = to_mat64(load_embeddings(data_dir / "pretrain_latents.pemb"));
  const Mat images = to_mat64(load_embeddings(data_dir / "contrastive_images.pemb"));
  const Mat texts = to_mat64(load_embeddings(data_dir / "contrastive_texts.pemb"));

  const PretrainedBase base = pretrain_text_base(pretrain_texts, pretrain_latents,
                                                 cfg.towers.text_hidden_dims, cfg.pretrain);

  const TowerSpec vision_spec = cfg.towers.vision_spec(synth_cfg.image_dim);
  const TowerSpec text_spec = cfg.towers.text_spec(synth_cfg.text_dim, strategy);
  TrainResult trained = train(vision_spec, text_spec, base.trunk, images, texts, cfg.train);

  fs::create_directories(args.out_dir);
  const fs::path out_dir = args.out_dir;
  write_text_file(out_dir / "weights.json",
                  dual_encoder_to_json(trained.model).dump(2) + "\n");
  {
    std::ofstream log(out_dir / "loss_log.csv", std::ios::trunc);
    write_loss_log_csv(log, trained.log);
  }

  // Embed the evaluation benchmark so the metrics module can consume it.
  const EmbeddingMatrix gallery = embed_rows(
      vision_spec, trained.model.vision, to_mat64(load_embeddings(data_dir / "gallery.pemb")));
  const EmbeddingMatrix queries = embed_rows(
      text_spec, trained.model.text, to_mat64(load_embeddings(data_dir / "queries.pemb")));
  const EmbeddingMatrix paraphrases =
      embed_rows(text_spec, trained.model.text,
                 to_mat64(load_embeddings(data_dir / "paraphrases.pemb")));
  save_embeddings(gallery, out_dir / "embedded_gallery.pemb");
  save_embeddings(queries, out_dir / "embedded_queries.pemb");
  save_embeddings(paraphrases, out_dir / "embedded_paraphrases.pemb");

  const BenchmarkManifest source_manifest =
      BenchmarkManifest::from_json_file(data_dir / "retrieval.manifest.json");

  ordered_json para_manifest;
  para_manifest["kind"] = "paraphrase";
  para_manifest["queries"] = "embedded_queries.pemb";
  para_manifest["paraphrases"] = "embedded_paraphrases.pemb";
  para_manifest["gallery"] = "embedded_gallery.pemb";
  para_manifest["normalize"] = true;
  write_text_file(out_dir / "paraphrase.manifest.json", para_manifest.dump(2) + "\n");

  ordered_json retr_manifest;
  retr_manifest["kind"] = "retrieval";
  retr_manifest["queries"] = "embedded_queries.pemb";
  retr_manifest["gallery"] = "embedded_gallery.pemb";
  retr_manifest["relevance"] = source_manifest.relevance;
  retr_manifest["normalize"] = true;
  write_text_file(out_dir / "retrieval.manifest.json", retr_manifest.dump(2) + "\n");

  ordered_json report;
  report["tool_version"] = parabench::kToolVersion;
  report["strategy"] = to_string(strategy);
  report["seed"] = cfg.train.seed;
  report["config"] = experiment_config_to_json(cfg);
  report["pretrain_holdout_mse"] = base.held_out_mse;
  report["final_loss"] = trained.log.empty() ? 0.0 : trained.log.back().loss;
  report["steps"] = trained.log.size();
  write_text_file(out_dir / "train_report.json", report.dump(2) + "\n");

  std::cout << report.dump(2) << '\n';
  return 0;
}

struct RetrieveArgs {
  std::string queries;
  std::string gallery;
  std::size_t k = 10;
  std::string out;
  unsigned threads = 0;
};

int run_retrieve(const RetrieveArgs& args) {
  using namespace parabench;
  const EmbeddingMatrix queries = load_embeddings(args.queries);
  const EmbeddingMatrix gallery = load_embeddings(args.gallery);
  const auto lists = retrieval::cosine_topk(queries, gallery, args.k, args.threads);
  if (args.out.empty()) {
    retrieval::write_rankings_jsonl(std::cout, lists);
  } else {
    std::ofstream out(args.out, std::ios::trunc);
    if (!out) fail(ErrorCode::io_error, "cannot write " + args.out);
    retrieval::write_rankings_jsonl(out, lists);
  }
  return 0;
}

struct ExpandArgs {
  std::string queries;
  std::string expansions;
  std::size_t K = 3;
  std::string out;
};

int run_expand(const ExpandArgs& args) {
  using namespace parabench;
  const EmbeddingMatrix queries = load_embeddings(args.queries);
  const EmbeddingMatrix expansions = load_embeddings(args.expansions);
  const EmbeddingMatrix fused = retrieval::expand_queries(queries, expansions, args.K);
  save_embeddings(fused, args.out);
  ordered_json summary;
  summary["out"] = args.out;
  summary["queries"] = fused.rows();
  summary["expansions_per_query"] = args.K;
  std::cout << summary.dump(2) << '\n';
  return 0;
}

struct EvalArgs {
  std::string manifest_path;
  std::string kind;
  std::vector<std::size_t> ks;
  std::string out;
  std::string csv;
  std::string format = "json";
  unsigned threads = 0;
};

int run_eval(const EvalArgs& args) {
  using namespace parabench;
  const BenchmarkManifest manifest = BenchmarkManifest::from_json_file(args.manifest_path);
  if (!args.kind.empty() && benchmark_kind_from_string(args.kind) != manifest.kind) {
    fail(ErrorCode::bad_manifest, "requested kind " + args.kind + " but manifest says " +
                                      to_string(manifest.kind));
  }
  const std::vector<std::size_t> ks = args.ks.empty() ? std::vector<std::size_t>{10} : args.ks;
  for (std::size_t k : ks) {
    if (k < 1) fail(ErrorCode::invalid_config, "k values must be >= 1");
  }

  ordered_json out;
  out["tool_version"] = kToolVersion;
  out["manifest"] = args.manifest_path;
  out["kind"] = to_string(manifest.kind);
  out["normalize"] = manifest.normalize;

  std::vector<MetricReport> reports;
  std::optional<metrics::StsEval> sts;
  switch (manifest.kind) {
    case BenchmarkKind::paraphrase: {
      for (std::size_t k : ks) {
        auto pair = metrics::eval_paraphrase_benchmark(manifest, k, args.threads);
        reports.push_back(std::move(pair.average_overlap));
        reports.push_back(std::move(pair.jaccard));
      }
      break;
    }
    case BenchmarkKind::retrieval: {
      for (std::size_t k : ks) {
        reports.push_back(metrics::eval_retrieval_benchmark(manifest, k, args.threads));
      }
      break;
    }
    case BenchmarkKind::classification: {
      for (std::size_t k : ks) {
        reports.push_back(metrics::eval_classification_benchmark(manifest, k, args.threads));
      }
      break;
    }
    case BenchmarkKind::sts: {
      sts = metrics::eval_sts_benchmark(manifest);
      break;
    }
  }

  if (sts) {
    out["sts"] = sts->to_json();
  } else {
    ordered_json list = ordered_json::array();
    for (const auto& r : reports) list.push_back(r.to_json());
    out["reports"] = std::move(list);
  }

  std::string rendered;
  if (args.format == "json") {
    rendered = out.dump(2) + "\n";
  } else if (args.format == "table") {
    // Human summary; values scaled by 100 as usually reported.
    std::string table;
    char line[128];
    if (sts) {
      std::snprintf(line, sizeof(line), "%-24s %8.1f\n", "pearson", 100.0 * sts->pearson);
      table += line;
      std::snprintf(line, sizeof(line), "%-24s %8.1f\n", "spearman", 100.0 * sts->spearman);
      table += line;
    } else {
      for (const auto& r : reports) {
        const std::string name = r.metric + "@" + std::to_string(r.k.value_or(0));
        std::snprintf(line, sizeof(line), "%-24s %8.1f\n", name.c_str(),
                      100.0 * r.aggregate);
        table += line;
      }
    }
    rendered = table;
  } else if (args.format == "csv") {
    std::string csv = "metric,k,aggregate,count\n";
    if (sts) {
      csv += "pearson,," + format_double(sts->pearson) + "," + std::to_string(sts->count) + "\n";
      csv += "spearman,," + format_double(sts->spearman) + "," + std::to_string(sts->count) + "\n";
    } else {
      for (const auto& r : reports) {
        csv += r.metric + "," + std::to_string(r.k.value_or(0)) + "," +
               format_double(r.aggregate) + "," + std::to_string(r.count) + "\n";
      }
    }
    rendered = csv;
  } else {
    fail(ErrorCode::invalid_config, "unknown format \"" + args.format + "\"");
  }

  if (args.out.empty()) {
    std::cout << rendered;
  } else {
    write_text_file(args.out, rendered);
  }

  if (!args.csv.empty()) {
    std::ofstream csv(args.csv, std::ios::trunc);
    if (!csv) fail(ErrorCode::io_error, "cannot write " + args.csv);
    if (sts) {
      csv << "pair,prediction,gold\n";
      for (std::size_t i = 0; i < sts->predictions.size(); ++i) {
        csv << i << ',' << format_double(sts->predictions[i]) << ','
            << format_double(manifest.gold[i]) << '\n';
      }
    } else {
      // One column per report, one row per item.
      csv << "item";
      for (const auto& r : reports) csv << ',' << r.metric << '@' << r.k.value_or(0);
      csv << '\n';
      const std::size_t n = reports.empty() ? 0 : reports.front().per_item.size();
      for (std::size_t i = 0; i < n; ++i) {
        csv << i;
        for (const auto& r : reports) csv << ',' << format_double(r.per_item[i]);
        csv << '\n';
      }
    }
  }
  return 0;
}

struct ExperimentArgs {
  std::string config_path;
  std::string out_dir;
  unsigned threads = 0;
};

int run_experiment_cmd(const ExperimentArgs& args) {
  using namespace parabench;
  using namespace parabench::duotower;
  const ExperimentConfig cfg = load_experiment_config(args.config_path);
  const ExperimentReport report = run_experiment(cfg, args.threads);

  fs::create_directories(args.out_dir);
  const fs::path out_dir = args.out_dir;
  write_text_file(out_dir / "report.json", report.to_json().dump(2) + "\n");
  {
    std::ofstream csv(out_dir / "report.csv", std::ios::trunc);
    report.write_csv(csv);
  }
  for (const auto& [name, log] : report.loss_logs) {
    std::ofstream csv(out_dir / ("loss_" + name + ".csv"), std::ios::trunc);
    write_loss_log_csv(csv, log);
  }
  std::cout << report.format_table();
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"paraphrase-consistency retrieval benchmark and dual-encoder lab"};
  app.require_subcommand(1);

  SynthArgs synth_args;
  auto* synth = app.add_subcommand("synth", "generate a synthetic benchmark bundle");
  synth->add_option("--config", synth_args.config_path, "synth config JSON")
      ->check(CLI::ExistingFile);
  synth->add_option("--out", synth_args.out_dir, "output directory")->required();

  TrainArgs train_args;
  auto* train = app.add_subcommand("train", "train one dual encoder on a synth bundle");
  train->add_option("--data", train_args.data_dir, "synth output directory")
      ->required()
      ->check(CLI::ExistingDirectory);
  train->add_option("--config", train_args.config_path, "experiment config JSON")
      ->check(CLI::ExistingFile);
  train->add_option("--strategy", train_args.strategy,
                    "finetune | frozen | frozen_bottleneck | frozen_alignment");
  train->add_option("--seed", train_args.seed, "training seed");
  train->add_option("--out", train_args.out_dir, "output directory")->required();

  RetrieveArgs retrieve_args;
  auto* retrieve = app.add_subcommand("retrieve", "exact top-k cosine retrieval");
  retrieve->add_option("--queries", retrieve_args.queries, "query PEMB file")
      ->required()
      ->check(CLI::ExistingFile);
  retrieve->add_option("--gallery", retrieve_args.gallery, "gallery PEMB file")
      ->required()
      ->check(CLI::ExistingFile);
  retrieve->add_option("--k", retrieve_args.k, "retrieval depth");
  retrieve->add_option("--out", retrieve_args.out, "rankings JSONL file (default stdout)");
  retrieve->add_option("--threads", retrieve_args.threads, "worker threads (0 = auto)");

  ExpandArgs expand_args;
  auto* expand = app.add_subcommand("expand", "average query features with K expansions");
  expand->add_option("--queries", expand_args.queries, "query PEMB file")
      ->required()
      ->check(CLI::ExistingFile);
  expand->add_option("--expansions", expand_args.expansions,
                     "expansion PEMB file, K grouped rows per query")
      ->required()
      ->check(CLI::ExistingFile);
  expand->add_option("--K", expand_args.K, "expansions per query");
  expand->add_option("--out", expand_args.out, "fused PEMB file")->required();

  EvalArgs eval_args;
  auto* eval = app.add_subcommand("eval", "evaluate a benchmark manifest");
  eval->add_option("--manifest", eval_args.manifest_path, "manifest JSON")
      ->required()
      ->check(CLI::ExistingFile);
  eval->add_option("--kind", eval_args.kind,
                   "expected kind; must match the manifest when given");
  eval->add_option("--k", eval_args.ks, "depth(s), repeatable (default 10)");
  eval->add_option("--out", eval_args.out, "report file (default stdout)");
  eval->add_option("--csv", eval_args.csv, "per-item CSV file");
  eval->add_option("--format", eval_args.format, "json | csv | table");
  eval->add_option("--threads", eval_args.threads, "worker threads (0 = auto)");

  ExperimentArgs experiment_args;
  auto* experiment =
      app.add_subcommand("experiment", "train and score every strategy across seeds");
  experiment->add_option("--config", experiment_args.config_path, "experiment config JSON")
      ->check(CLI::ExistingFile);
  experiment->add_option("--out", experiment_args.out_dir, "output directory")->required();
  experiment->add_option("--threads", experiment_args.threads, "worker threads (0 = auto)");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    if (e.get_exit_code() == 0) return app.exit(e);
    ordered_json err;
    err["error"] = "UsageError";
    err["message"] = e.what();
    std::cerr << err.dump() << '\n';
    return 2;
  }

  try {
    if (*synth) return run_synth(synth_args);
    if (*train) return run_train(train_args);
    if (*retrieve) return run_retrieve(retrieve_args);
    if (*expand) return run_expand(expand_args);
    if (*eval) return run_eval(eval_args);
    if (*experiment) return run_experiment_cmd(experiment_args);
  } catch (const parabench::Error& e) {
    ordered_json err;
    err["error"] = parabench::to_string(e.code());
    err["message"] = e.what();
    std::cerr << err.dump() << '\n';
    return parabench::is_validation_error(e.code()) ? 3 : 1;
  } catch (const std::exception& e) {
    ordered_json err;
    err["error"] = "Internal";
    err["message"] = e.what();
    std::cerr << err.dump() << '\n';
    return 1;
  }
  return 0;
}
