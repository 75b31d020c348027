#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <json.hpp>

#include "tell/candidates.hpp"
#include "tell/common.hpp"
#include "tell/disambiguator.hpp"
#include "tell/eval.hpp"
#include "tell/ingest.hpp"
#include "tell/io.hpp"
#include "tell/kb.hpp"

namespace {

using namespace tell;
using nlohmann::json;

struct SynthArgs {
  std::string out_tables;
  std::string out_eval_tables;
  std::string out_kb;
  SynthSpec spec;
  std::uint64_t seed = 42;
};

struct IngestArgs {
  std::string tables;
  std::string kb;
  std::string id_map;
  std::string out;
  std::string report;
  IngestConfig config;
};

struct BuildKbArgs {
  std::string kb;
  std::string out;
  Bm25Params params;
};

struct CandidatesArgs {
  std::string tables;
  std::string kb;
  std::string out;
  std::string report;
  int k = 20;
  bool no_bm25 = false;
  bool no_gazetteer = false;
};

struct TrainArgs {
  std::string tables;
  std::string kb;
  std::string candidates;
  std::string out;
  std::string curve;
  std::string variant = "SingleAttEnc+meta";
  TrainConfig config;
};

struct LinkArgs {
  std::string tables;
  std::string kb;
  std::string candidates;
  std::string model;
  std::string out;
  double nil_threshold = -1.0;  // < 0 disables threshold mode
};

struct EvalArgs {
  std::string tables;
  std::string pred;
  std::string candidates;
  std::string out;
  bool macro = false;
};

struct BenchArgs {
  std::vector<int> sizes = {8, 16, 32, 64, 128, 256};
  std::vector<std::string> variants = {"MaskAttEnc+meta", "AllAttEnc",         "SingleAttEnc+meta",
                                       "SingleAttEnc",    "SingleLinearEnc+meta",
                                       "SingleLSTMEnc+meta"};
  std::string out;
  std::string svg;
  int d = 16;
  int layers = 2;
  int heads = 2;
  std::uint64_t seed = 7;
};

void run_synth(const SynthArgs& args) {
  const SynthCorpus corpus = make_synthetic_corpus(args.spec, args.seed);
  write_tables(args.out_tables, corpus.tables);
  if (!args.out_eval_tables.empty()) write_tables(args.out_eval_tables, corpus.eval_tables);
  write_kb(args.out_kb, corpus.kb);
  const SplitStats stats = split_stats(corpus.tables);
  std::cout << stats.to_json_string() << "\n";
}

void run_ingest(const IngestArgs& args) {
  const auto raw = read_raw_tables(args.tables);
  const KbStore kb = KbStore::load(args.kb);
  std::map<std::string, std::string> id_map;
  const bool has_map = !args.id_map.empty();
  if (has_map) id_map = load_id_map(args.id_map);
  const IngestResult result = run_ingest(raw, kb, has_map ? &id_map : nullptr, args.config);
  write_tables(args.out, result.kept);
  const std::string report = result.report.to_json_string();
  if (!args.report.empty()) write_text_file(args.report, report + "\n");
  std::cout << report << "\n";
  std::cout << split_stats(result.kept).to_json_string() << "\n";
}

void run_build_kb(const BuildKbArgs& args) {
  const KbStore kb = KbStore::load(args.kb);
  const Gazetteer gaz = build_gazetteer(kb);
  const Bm25Index index = Bm25Index::build(kb, args.params);
  save_index_snapshot(args.out, gaz, index);
  std::cout << json{{"entities", kb.size()},
                    {"gazetteer_keys", gaz.surface_to_ids.size()},
                    {"avg_doc_len", index.avg_doc_len()}}
                   .dump(2)
            << "\n";
}

void run_candidates(const CandidatesArgs& args) {
  const auto tables = read_tables(args.tables);
  const KbStore kb = KbStore::load(args.kb);
  const Gazetteer gaz = build_gazetteer(kb);
  const Bm25Index index = Bm25Index::build(kb);
  const CandidateMap candidates =
      generate_all_candidates(tables, args.no_gazetteer ? nullptr : &gaz,
                              args.no_bm25 ? nullptr : &index, args.k);
  write_candidates(args.out, candidates);

  json report{{"mentions", candidates.size()}, {"k", args.k}};
  try {
    const RecallStat recall = recall_at(candidates, tables);
    report["p_e"] = recall.p_e;
    report["hits"] = recall.hits;
    report["linkable"] = recall.linkable;
  } catch (const DataError&) {
    report["p_e"] = nullptr;  // no linkable mentions in this corpus
  }
  if (!args.report.empty()) write_text_file(args.report, report.dump(2) + "\n");
  std::cout << report.dump(2) << "\n";
}

void run_train(const TrainArgs& args) {
  const auto tables = read_tables(args.tables);
  const KbStore kb = KbStore::load(args.kb);
  const CandidateMap candidates = read_candidates(args.candidates);
  TrainConfig config = args.config;
  config.variant = parse_variant(args.variant);
  const TrainResult result = train(tables, kb, candidates, config);
  result.model.save(args.out);
  if (!args.curve.empty()) {
    write_text_file(args.curve, json(result.loss_curve).dump(2) + "\n");
  }
  json summary{{"variant", variant_name(config.variant)},
               {"epochs", config.epochs},
               {"vocab", result.model.vocab.size()}};
  if (!result.loss_curve.empty()) {
    summary["first_loss"] = result.loss_curve.front();
    summary["final_loss"] = result.loss_curve.back();
  }
  std::cout << summary.dump(2) << "\n";
}

void run_link(const LinkArgs& args) {
  const auto tables = read_tables(args.tables);
  const KbStore kb = KbStore::load(args.kb);
  const CandidateMap candidates = read_candidates(args.candidates);
  const EncoderModel model = EncoderModel::load(args.model);
  PredictOptions options;
  if (args.nil_threshold >= 0.0) {
    options.nil_threshold_mode = true;
    options.nil_threshold = args.nil_threshold;
  }
  const PredictResult result = predict(tables, model, kb, candidates, options);
  write_predictions(args.out, result.predictions);
  std::cout << json{{"predictions", result.predictions.size()},
                    {"entity_cache_size", result.entity_cache_size},
                    {"entity_cache_hits", result.entity_cache_hits}}
                   .dump(2)
            << "\n";
}

void run_eval(const EvalArgs& args) {
  const auto tables = read_tables(args.tables);
  const auto predictions = read_predictions(args.pred);
  EvalReport report = evaluate(predictions, tables, args.macro);
  if (!args.candidates.empty()) {
    const CandidateMap candidates = read_candidates(args.candidates);
    report.p_e = recall_at(candidates, tables).p_e;
  }
  const std::string text = report.to_json_string();
  if (!args.out.empty()) write_text_file(args.out, text + "\n");
  std::cout << text << "\n";
}

void run_bench(const BenchArgs& args) {
  const EncoderModel model =
      make_probe_model(args.sizes, args.d, args.layers, args.heads, args.seed);
  std::vector<ScalingReport> reports;
  json out = json::array();
  for (const std::string& name : args.variants) {
    const ScalingReport report = complexity_probe(model, parse_variant(name), args.sizes);
    out.push_back(json::parse(report.to_json_string()));
    std::cout << variant_name(report.variant) << ": slope " << report.slope << "\n";
    reports.push_back(report);
  }
  if (!args.out.empty()) write_text_file(args.out, out.dump(2) + "\n");
  if (!args.svg.empty()) write_text_file(args.svg, scaling_svg(reports));
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"tell: entity linking for tabular data"};
  app.require_subcommand(1);
  app.set_config("--config");

  SynthArgs synth_args;
  auto* synth = app.add_subcommand("synth", "generate a synthetic corpus and KB");
  synth->add_option("--out-tables", synth_args.out_tables, "output tables JSONL")->required();
  synth->add_option("--out-kb", synth_args.out_kb, "output KB JSONL")->required();
  synth->add_option("--out-eval-tables", synth_args.out_eval_tables, "held-out tables JSONL");
  synth->add_option("--tables", synth_args.spec.tables, "training tables");
  synth->add_option("--eval-tables", synth_args.spec.eval_tables, "held-out tables");
  synth->add_option("--rows", synth_args.spec.rows, "rows per table");
  synth->add_option("--cols", synth_args.spec.cols, "columns per table");
  synth->add_option("--ambiguous", synth_args.spec.ambiguous_frac, "ambiguous mention fraction");
  synth->add_option("--misspelled", synth_args.spec.misspelled_frac, "misspelled mention fraction");
  synth->add_option("--nil", synth_args.spec.nil_frac, "NIL mention fraction");
  synth->add_option("--topics", synth_args.spec.topics, "topic count");
  synth->add_option("--seed", synth_args.seed, "random seed");

  IngestArgs ingest_args;
  auto* ingest = app.add_subcommand("ingest", "clean, denoise and filter raw tables");
  ingest->add_option("--tables", ingest_args.tables, "raw tables JSONL")->required();
  ingest->add_option("--kb", ingest_args.kb, "KB JSONL")->required();
  ingest->add_option("--id-map", ingest_args.id_map, "two-column TSV id mapping");
  ingest->add_option("--out", ingest_args.out, "cleaned tables JSONL")->required();
  ingest->add_option("--report", ingest_args.report, "filter report JSON");
  ingest->add_option("--k", ingest_args.config.candidate_k, "candidates per mention");
  ingest->add_option("--max-cells", ingest_args.config.max_cells, "mention cap per table");
  ingest->add_option("--max-candidates", ingest_args.config.max_total_candidates,
                     "candidate cap per table");
  ingest->add_option("--len-diff", ingest_args.config.max_len_diff, "link denoise threshold");

  BuildKbArgs build_kb_args;
  auto* build_kb = app.add_subcommand("build-kb", "build and persist retrieval indexes");
  build_kb->add_option("--kb", build_kb_args.kb, "KB JSONL")->required();
  build_kb->add_option("--out", build_kb_args.out, "index snapshot JSON")->required();
  build_kb->add_option("--k1", build_kb_args.params.k1, "BM25 k1");
  build_kb->add_option("--b", build_kb_args.params.b, "BM25 b");

  CandidatesArgs cand_args;
  auto* cand = app.add_subcommand("candidates", "generate candidate sets and report P_E");
  cand->add_option("--tables", cand_args.tables, "tables JSONL")->required();
  cand->add_option("--kb", cand_args.kb, "KB JSONL")->required();
  cand->add_option("--out", cand_args.out, "candidates JSONL")->required();
  cand->add_option("--report", cand_args.report, "recall report JSON");
  cand->add_option("--k", cand_args.k, "candidates per mention");
  cand->add_flag("--no-bm25", cand_args.no_bm25, "gazetteer only");
  cand->add_flag("--no-gazetteer", cand_args.no_gazetteer, "BM25 only");

  TrainArgs train_args;
  auto* train_cmd = app.add_subcommand("train", "train the shared encoder");
  train_cmd->add_option("--tables", train_args.tables, "training tables JSONL")->required();
  train_cmd->add_option("--kb", train_args.kb, "KB JSONL")->required();
  train_cmd->add_option("--candidates", train_args.candidates, "candidates JSONL")->required();
  train_cmd->add_option("--out", train_args.out, "model checkpoint JSON")->required();
  train_cmd->add_option("--curve", train_args.curve, "loss curve JSON");
  train_cmd->add_option("--variant", train_args.variant, "encoder variant");
  train_cmd->add_option("--epochs", train_args.config.epochs, "training epochs");
  train_cmd->add_option("--batch", train_args.config.batch_size, "batch size");
  train_cmd->add_option("--lr", train_args.config.adam.lr, "Adam learning rate");
  train_cmd->add_option("--seed", train_args.config.seed, "random seed");
  train_cmd->add_option("--k", train_args.config.candidate_k, "candidate k used upstream");
  train_cmd->add_option("--d", train_args.config.hyper.d, "embedding width");
  train_cmd->add_option("--layers", train_args.config.hyper.layers, "transformer layers");
  train_cmd->add_option("--heads", train_args.config.hyper.heads, "attention heads");
  train_cmd->add_option("--ffn-mult", train_args.config.hyper.ffn_mult, "FFN width multiple");
  train_cmd->add_option("--max-seq-len", train_args.config.hyper.max_seq_len,
                        "per-cell sequence budget");
  train_cmd->add_option("--max-table-len", train_args.config.hyper.max_table_len,
                        "table linearization budget");

  LinkArgs link_args;
  auto* link = app.add_subcommand("link", "predict entity links");
  link->add_option("--tables", link_args.tables, "tables JSONL")->required();
  link->add_option("--kb", link_args.kb, "KB JSONL")->required();
  link->add_option("--candidates", link_args.candidates, "candidates JSONL")->required();
  link->add_option("--model", link_args.model, "model checkpoint JSON")->required();
  link->add_option("--out", link_args.out, "predictions JSONL")->required();
  link->add_option("--nil-threshold", link_args.nil_threshold,
                   "score-threshold NIL mode (disables the learned NIL class)");

  EvalArgs eval_args;
  auto* eval_cmd = app.add_subcommand("eval", "score predictions against gold links");
  eval_cmd->add_option("--tables", eval_args.tables, "gold tables JSONL")->required();
  eval_cmd->add_option("--pred", eval_args.pred, "predictions JSONL")->required();
  eval_cmd->add_option("--candidates", eval_args.candidates, "candidates JSONL for P_E");
  eval_cmd->add_option("--out", eval_args.out, "report JSON");
  eval_cmd->add_flag("--macro-f1", eval_args.macro, "also report macro link-F1");

  BenchArgs bench_args;
  auto* bench = app.add_subcommand("bench", "empirical complexity probe");
  bench->add_option("--sizes", bench_args.sizes, "cell counts");
  bench->add_option("--variants", bench_args.variants, "encoder variants");
  bench->add_option("--out", bench_args.out, "scaling report JSON");
  bench->add_option("--svg", bench_args.svg, "log-log plot SVG");
  bench->add_option("--d", bench_args.d, "probe embedding width");
  bench->add_option("--layers", bench_args.layers, "probe layers");
  bench->add_option("--heads", bench_args.heads, "probe heads");
  bench->add_option("--seed", bench_args.seed, "probe seed");

  try {
    app.parse(argc, argv);
    if (synth->parsed()) run_synth(synth_args);
    if (ingest->parsed()) run_ingest(ingest_args);
    if (build_kb->parsed()) run_build_kb(build_kb_args);
    if (cand->parsed()) run_candidates(cand_args);
    if (train_cmd->parsed()) run_train(train_args);
    if (link->parsed()) run_link(link_args);
    if (eval_cmd->parsed()) run_eval(eval_args);
    if (bench->parsed()) run_bench(bench_args);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : 1;
  } catch (const UsageError& e) {
    std::cerr << "usage error: " << e.what() << "\n";
    return 1;
  } catch (const DataError& e) {
    std::cerr << "data error: " << e.what() << "\n";
    return 2;
  } catch (const std::exception& e) {
    std::cerr << "internal error: " << e.what() << "\n";
    return 3;
  }
  return 0;
}
