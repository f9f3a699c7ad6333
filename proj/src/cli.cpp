#include "ggp/cli.hpp"

#include <filesystem>
#include <fstream>
#include <optional>
#include <ostream>
#include <string>

#include <CLI11.hpp>
#include <json.hpp>

#include "ggp/baselines.hpp"
#include "ggp/corpus.hpp"
#include "ggp/error.hpp"
#include "ggp/metrics.hpp"
#include "ggp/synth.hpp"
#include "ggp/training.hpp"
#include "ggp/transition_graph.hpp"

namespace ggp {
namespace {

namespace fs = std::filesystem;
using nlohmann::json;

int exit_code_for(ErrorKind kind) {
  switch (kind) {
    case ErrorKind::kFileNotFound: return kExitFileNotFound;
    case ErrorKind::kFormat: return kExitFormat;
    case ErrorKind::kVersionMismatch: return kExitVersionMismatch;
    case ErrorKind::kConfigInvalid: return kExitConfigInvalid;
    default: return kExitData;
  }
}

void report_error(std::ostream& err, std::string_view kind, const std::string& message, int code) {
  err << json{{"error", true}, {"kind", kind}, {"message", message}, {"exit_code", code}}.dump() << '\n';
}

json read_json_file(const fs::path& path) {
  std::ifstream in(path);
  if (!in) throw Error(ErrorKind::kFileNotFound, "cannot open " + path.string());
  try {
    return json::parse(in);
  } catch (const json::exception& e) {
    throw Error(ErrorKind::kFormat, path.string() + ": " + e.what());
  }
}

template <typename T>
void apply_config_file(const std::string& path, T& config) {
  if (path.empty()) return;
  try {
    from_json(read_json_file(path), config);
  } catch (const json::exception& e) {
    throw Error(ErrorKind::kConfigInvalid, path + ": " + e.what());
  }
}

std::ofstream open_output(const fs::path& path) {
  if (path.has_parent_path()) fs::create_directories(path.parent_path());
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw Error(ErrorKind::kFileNotFound, "cannot write " + path.string());
  return out;
}

std::optional<TransitionGraph> maybe_graph(const std::string& path) {
  if (path.empty()) return std::nullopt;
  return TransitionGraph::load(path);
}

const TransitionGraph& require_graph(const std::optional<TransitionGraph>& graph, const char* why) {
  if (!graph) throw Error(ErrorKind::kConfigInvalid, std::string("--graph is required ") + why);
  return *graph;
}

struct ModelFlags {
  bool no_graph = false;
  bool no_copy = false;
  std::string edge_bias;

  void add(CLI::App* app) {
    app->add_flag("--no-graph", no_graph, "Drop the graph encoder");
    app->add_flag("--no-copy", no_copy, "Replace the copy decoder with a closed-vocabulary softmax");
    app->add_option("--edge-bias", edge_bias, "Bias graph attention by corpus weights")
        ->check(CLI::IsMember({"on", "off"}));
  }

  void apply(ModelConfig& m) const {
    if (no_graph) m.use_graph = false;
    if (no_copy) m.use_copy_decoder = false;
    if (!edge_bias.empty()) m.edge_bias = edge_bias == "on";
  }
};

}  // namespace

int run_cli(int argc, const char* const* argv, std::ostream& out, std::ostream& err) {
  CLI::App app{"Graph-based grouping planner"};
  app.require_subcommand(1);
  app.set_version_flag("--version", "ggp 0.1.0");

  // synth
  SynthConfig synth;
  std::string synth_out = ".", synth_config;
  auto* cmd_synth = app.add_subcommand("synth", "Generate a synthetic train/dev/test corpus");
  cmd_synth->add_option("--out-dir", synth_out, "Directory for train/dev/test.jsonl");
  cmd_synth->add_option("--vocab-size", synth.vocab_size);
  cmd_synth->add_option("--concentration", synth.concentration);
  cmd_synth->add_option("--successors", synth.successors);
  cmd_synth->add_option("--train", synth.train);
  cmd_synth->add_option("--dev", synth.dev);
  cmd_synth->add_option("--test", synth.test);
  cmd_synth->add_option("--min-phrases", synth.min_phrases);
  cmd_synth->add_option("--max-phrases", synth.max_phrases);
  cmd_synth->add_option("--unseen-fraction", synth.unseen_fraction);
  cmd_synth->add_option("--seed", synth.seed);
  cmd_synth->add_option("--config", synth_config, "JSON file; its keys override flags");

  // build-graph
  std::string bg_corpus, bg_out;
  auto* cmd_graph = app.add_subcommand("build-graph", "Count phrase transitions in golden plans");
  cmd_graph->add_option("--corpus", bg_corpus)->required();
  cmd_graph->add_option("--out", bg_out)->required();

  // train
  TrainConfig tc;
  ModelFlags train_flags;
  std::string tr_corpus, tr_dev, tr_graph, tr_out, tr_log, tr_config;
  auto* cmd_train = app.add_subcommand("train", "Train the planner");
  cmd_train->add_option("--corpus", tr_corpus, "Training JSONL")->required();
  cmd_train->add_option("--dev", tr_dev, "Dev JSONL for model selection");
  cmd_train->add_option("--graph", tr_graph);
  cmd_train->add_option("--checkpoint", tr_out, "Output checkpoint")->required();
  cmd_train->add_option("--log", tr_log, "Per-epoch JSONL log");
  cmd_train->add_option("--seed", tc.seed);
  cmd_train->add_option("--epochs", tc.max_epochs);
  cmd_train->add_option("--batch-size", tc.batch_size);
  cmd_train->add_option("--lr", tc.learning_rate);
  cmd_train->add_option("--patience", tc.patience);
  cmd_train->add_option("--token-dropout", tc.token_dropout);
  cmd_train->add_option("--dim", tc.model.d);
  cmd_train->add_option("--layers", tc.model.layers);
  cmd_train->add_option("--heads", tc.model.heads);
  cmd_train->add_option("--gat-layers", tc.model.gat_layers);
  cmd_train->add_option("--gat-heads", tc.model.gat_heads);
  cmd_train->add_option("--config", tr_config, "JSON training config; its keys override flags");
  train_flags.add(cmd_train);

  // plan
  std::string pl_corpus, pl_out, pl_planner = "ggp", pl_ckpt, pl_graph;
  int pl_beam = 1;
  std::uint64_t pl_seed = 1;
  auto* cmd_plan = app.add_subcommand("plan", "Write one plan per corpus line");
  cmd_plan->add_option("--corpus", pl_corpus)->required();
  cmd_plan->add_option("--out", pl_out)->required();
  cmd_plan->add_option("--planner", pl_planner)->check(CLI::IsMember({"ggp", "random", "graph-greedy"}));
  cmd_plan->add_option("--checkpoint", pl_ckpt);
  cmd_plan->add_option("--graph", pl_graph);
  cmd_plan->add_option("--beam", pl_beam)->check(CLI::PositiveNumber);
  cmd_plan->add_option("--seed", pl_seed);

  // eval
  std::string ev_corpus, ev_plans, ev_texts, ev_out;
  auto* cmd_eval = app.add_subcommand("eval", "Score a plan file against golden plans");
  cmd_eval->add_option("--corpus", ev_corpus, "Corpus with golden plans")->required();
  cmd_eval->add_option("--plans", ev_plans)->required();
  cmd_eval->add_option("--texts", ev_texts, "Generated texts, one per line, scored against corpus texts");
  cmd_eval->add_option("--out", ev_out, "Write the JSON report here instead of stdout");

  // dump-attention
  std::string da_corpus, da_ckpt, da_graph, da_out;
  std::size_t da_index = 0;
  auto* cmd_attn = app.add_subcommand("dump-attention", "Export graph attention of one sample");
  cmd_attn->add_option("--corpus", da_corpus)->required();
  cmd_attn->add_option("--checkpoint", da_ckpt)->required();
  cmd_attn->add_option("--graph", da_graph);
  cmd_attn->add_option("--index", da_index, "0-based sample index");
  cmd_attn->add_option("--out", da_out);

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    out << app.help();
    return kExitOk;
  } catch (const CLI::CallForAllHelp& e) {
    out << app.help("", CLI::AppFormatMode::All);
    return kExitOk;
  } catch (const CLI::CallForVersion& e) {
    out << e.what() << '\n';
    return kExitOk;
  } catch (const CLI::ParseError& e) {
    report_error(err, "Usage", e.what(), kExitUsage);
    return kExitUsage;
  }

  try {
    if (cmd_synth->parsed()) {
      apply_config_file(synth_config, synth);
      const auto corpus = generate_synthetic(synth);
      const fs::path dir(synth_out);
      fs::create_directories(dir);
      write_corpus(dir / "train.jsonl", corpus.train);
      write_corpus(dir / "dev.jsonl", corpus.dev);
      write_corpus(dir / "test.jsonl", corpus.test);
      out << json{{"train", corpus.train.size()}, {"dev", corpus.dev.size()}, {"test", corpus.test.size()},
                  {"config", synth}}.dump()
          << '\n';
    } else if (cmd_graph->parsed()) {
      const auto graph = build_transition_graph(read_corpus(fs::path(bg_corpus)));
      graph.save(bg_out);
      out << json{{"phrases", graph.size()}, {"edges", graph.triples().size()}}.dump() << '\n';
    } else if (cmd_train->parsed()) {
      train_flags.apply(tc.model);
      apply_config_file(tr_config, tc);
      tc.validate();
      const auto train_set = read_corpus(fs::path(tr_corpus), static_cast<std::size_t>(tc.model.max_phrases));
      std::vector<Sample> dev;
      if (!tr_dev.empty()) dev = read_corpus(fs::path(tr_dev), static_cast<std::size_t>(tc.model.max_phrases));
      const auto graph = maybe_graph(tr_graph);
      if (tc.model.use_graph) require_graph(graph, "unless --no-graph is set");
      std::ofstream log_file;
      if (!tr_log.empty()) log_file = open_output(tr_log);
      const auto result = train(train_set, dev, graph ? &*graph : nullptr, tc, tr_log.empty() ? nullptr : &log_file);
      save_checkpoint(result.best, tr_out);
      out << json{{"best_epoch", result.best_epoch},
                  {"epochs", result.history.size()},
                  {"best", result.history.at(static_cast<std::size_t>(result.best_epoch - 1)).to_json()}}
                 .dump()
          << '\n';
    } else if (cmd_plan->parsed()) {
      const auto corpus = read_corpus(fs::path(pl_corpus));
      const auto graph = maybe_graph(pl_graph);
      std::vector<Plan> plans;
      std::size_t degenerate = 0;
      if (pl_planner == "random") {
        for (std::size_t i = 0; i < corpus.size(); ++i) {
          plans.push_back(random_planner(corpus[i].collection.size(), pl_seed + i));
        }
      } else if (pl_planner == "graph-greedy") {
        const auto& g = require_graph(graph, "for the graph-greedy planner");
        for (std::size_t i = 0; i < corpus.size(); ++i) {
          plans.push_back(graph_greedy_planner(corpus[i].collection, g, pl_seed + i));
        }
      } else {
        if (pl_ckpt.empty()) throw Error(ErrorKind::kConfigInvalid, "--checkpoint is required for the ggp planner");
        const auto model = model_from_checkpoint(load_checkpoint(pl_ckpt));
        if (model.config().use_graph) require_graph(graph, "by this checkpoint");
        auto result = plan_corpus(model, corpus, graph ? &*graph : nullptr, pl_beam, pl_seed);
        plans = std::move(result.plans);
        degenerate = result.degenerate;
      }
      write_plan_file(pl_out, plans, corpus);
      out << json{{"plans", plans.size()}, {"planner", pl_planner}, {"degenerate", degenerate}}.dump() << '\n';
    } else if (cmd_eval->parsed()) {
      const auto corpus = read_corpus(fs::path(ev_corpus));
      const auto hyps = read_plan_file(ev_plans, corpus);
      std::vector<Plan> refs;
      std::vector<PhraseCollection> collections;
      for (std::size_t i = 0; i < corpus.size(); ++i) {
        if (!corpus[i].plan) {
          throw Error(ErrorKind::kMissingPlan, "corpus line " + std::to_string(i + 1) + " has no golden plan");
        }
        refs.push_back(*corpus[i].plan);
        collections.push_back(corpus[i].collection);
      }
      auto report = evaluate_plans(hyps, refs, collections);
      if (!ev_texts.empty()) {
        std::ifstream in(ev_texts);
        if (!in) throw Error(ErrorKind::kFileNotFound, "cannot open " + ev_texts);
        std::vector<Tokens> gen;
        std::vector<std::vector<Tokens>> gold;
        std::string line;
        while (std::getline(in, line)) gen.push_back(tokenize_text(line));
        if (gen.size() != corpus.size()) {
          throw Error(ErrorKind::kFormat, ev_texts + " has " + std::to_string(gen.size()) + " lines; the corpus has " +
                                              std::to_string(corpus.size()));
        }
        for (std::size_t i = 0; i < corpus.size(); ++i) {
          if (!corpus[i].text) {
            throw Error(ErrorKind::kFormat, "corpus line " + std::to_string(i + 1) + " has no golden text");
          }
          gold.push_back({tokenize_text(*corpus[i].text)});
        }
        report.bleu4 = corpus_bleu4(gen, gold);
      }
      const std::string text = report.to_json().dump(2);
      if (ev_out.empty()) {
        out << text << '\n';
      } else {
        open_output(ev_out) << text << '\n';
        out << report.table();
      }
    } else if (cmd_attn->parsed()) {
      const auto corpus = read_corpus(fs::path(da_corpus));
      if (da_index >= corpus.size()) {
        throw Error(ErrorKind::kConfigInvalid, "--index " + std::to_string(da_index) + " is past the end of the corpus");
      }
      const auto model = model_from_checkpoint(load_checkpoint(da_ckpt));
      const auto graph = maybe_graph(da_graph);
      const auto& sample = corpus[da_index];
      const auto prepared = model.prepare(sample.collection, graph ? &*graph : nullptr);
      json maps = json::array();
      const auto attention = model.attention(prepared);
      for (std::size_t l = 0; l < attention.size(); ++l) {
        for (std::size_t h = 0; h < attention[l].size(); ++h) {
          const Matrix& m = attention[l][h];
          json rows = json::array();
          for (Eigen::Index i = 0; i < m.rows(); ++i) {
            json row = json::array();
            for (Eigen::Index j = 0; j < m.cols(); ++j) row.push_back(m(i, j));
            rows.push_back(std::move(row));
          }
          maps.push_back({{"layer", l}, {"head", h}, {"matrix", std::move(rows)}});
        }
      }
      const json doc{{"index", da_index}, {"phrases", sample.collection.surfaces()}, {"attention", std::move(maps)}};
      if (da_out.empty()) {
        out << doc.dump() << '\n';
      } else {
        open_output(da_out) << doc.dump() << '\n';
      }
    }
  } catch (const Error& e) {
    const int code = exit_code_for(e.kind());
    report_error(err, error_kind_name(e.kind()), e.what(), code);
    return code;
  } catch (const fs::filesystem_error& e) {
    report_error(err, "FileNotFound", e.what(), kExitFileNotFound);
    return kExitFileNotFound;
  } catch (const std::exception& e) {
    report_error(err, "Internal", e.what(), kExitInternal);
    return kExitInternal;
  }
  return kExitOk;
}

}  // namespace ggp
