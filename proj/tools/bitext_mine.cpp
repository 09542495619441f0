// bitext-mine: document and sentence alignment over comparable corpora.

#include <algorithm>
#include <cstdio>
#include <iostream>
#include <string>
#include <thread>

#include "CLI11.hpp"

#include "bitext/pipeline.hpp"

namespace {

using bitext::pipeline::Json;

void add_corpus_inputs(CLI::App* cmd, bitext::pipeline::CorpusInputs& in) {
  cmd->add_option("--src", in.src, "Source document file (JSON lines)")->required();
  cmd->add_option("--tgt", in.tgt, "Target document file (JSON lines)")->required();
  cmd->add_option("--src-emb", in.src_emb, "Source sentence embeddings (raw float32)")->required();
  cmd->add_option("--tgt-emb", in.tgt_emb, "Target sentence embeddings (raw float32)")->required();
  cmd->add_option("--dim", in.dim, "Embedding dimension")->capture_default_str()->check(CLI::PositiveNumber);
  cmd->add_option("--min-chars", in.min_chars, "Drop documents shorter than this many characters")
      ->capture_default_str();
  cmd->add_flag("--normalize", in.normalize, "L2-normalise embeddings after loading");
}

void add_lexicon_inputs(CLI::App* cmd, bitext::pipeline::LexiconInputs& lex) {
  cmd->add_option("--lexicon", lex.lexicons, "Phrase lexicon TSV (repeatable, merged)");
  cmd->add_option("--names", lex.names, "Person-name list TSV matched word by word (repeatable, merged)");
  cmd->add_option("--count-init", lex.count_init, "Initial value of the match counter")
      ->capture_default_str()
      ->check(CLI::IsMember({0, 1}));
  cmd->add_flag("--no-consume-source", [&lex](std::int64_t) { lex.consume_source = false; },
                "Let a source token take part in several phrase matches");
}

void print_summary(const Json& summary, bool pretty) {
  if (!pretty) {
    std::cout << summary.dump() << std::endl;
    return;
  }
  for (const auto& [key, value] : summary.items()) {
    if (value.is_object()) {
      for (const auto& [k2, v2] : value.items()) std::printf("%-24s %s\n", (key + "." + k2).c_str(), v2.dump().c_str());
    } else {
      std::printf("%-24s %s\n", key.c_str(), value.dump().c_str());
    }
  }
}

}  // namespace

int main(int argc, char** argv) {
  namespace pl = bitext::pipeline;
  CLI::App app{"Mine parallel documents and sentences from comparable corpora"};
  app.require_subcommand(1);

  bool pretty = false;
  unsigned workers = 1;
  app.add_flag("--pretty", pretty, "Human-readable summary instead of one JSON line");
  app.add_option("--workers", workers, "Worker threads (0 = hardware concurrency)")->capture_default_str();

  pl::DocCommand doc;
  std::string scheme = "slen";
  auto* doc_cmd = app.add_subcommand("doc", "Align documents with Greedy Mover's Distance");
  add_corpus_inputs(doc_cmd, doc.inputs);
  add_lexicon_inputs(doc_cmd, doc.lex);
  doc_cmd->add_option("--scheme", scheme, "Sentence weighting scheme")
      ->capture_default_str()
      ->check(CLI::IsMember({"relfreq", "slen", "idf", "slidf"}));
  doc_cmd->add_option("--window-days", doc.window_days, "Date window for candidate documents")->capture_default_str();
  doc_cmd->add_option("--gold", doc.gold, "Gold document pairs; adds recall to the summary");
  doc_cmd->add_option("--out", doc.out, "Output TSV")->required();

  pl::SentCommand sent;
  std::string strategy = "forward";
  auto* sent_cmd = app.add_subcommand("sent", "Align sentences by embedding similarity");
  add_corpus_inputs(sent_cmd, sent.inputs);
  add_lexicon_inputs(sent_cmd, sent.lex);
  sent_cmd->add_option("--strategy", strategy, "Candidate generation strategy")
      ->capture_default_str()
      ->check(CLI::IsMember({"forward", "backward", "intersection"}));
  sent_cmd->add_option("--k", sent.k, "Candidates rescored per sentence")->capture_default_str()->check(CLI::PositiveNumber);
  sent_cmd->add_option("--threshold", sent.threshold, "Drop pairs scoring below this value");
  sent_cmd->add_option("--doc-pairs", sent.doc_pairs, "Restrict candidates to aligned document pairs (doc TSV)");
  sent_cmd->add_flag("--emit-text", sent.emit_text, "Append both sentence texts to each output row");
  sent_cmd->add_option("--gold", sent.gold, "Gold sentence pairs; adds recall to the summary");
  sent_cmd->add_option("--out", sent.out, "Output TSV")->required();

  pl::BuildLexiconCommand build;
  auto* build_cmd = app.add_subcommand("build-lexicon", "Extend a word dictionary with glossary residues");
  build_cmd->add_option("--glossary", build.glossary, "Glossary TSV (phrase pairs of any length)")->required();
  build_cmd->add_option("--words", build.words, "Word dictionary TSV")->required();
  build_cmd->add_option("--src-lang", build.src_lang)->capture_default_str();
  build_cmd->add_option("--tgt-lang", build.tgt_lang)->capture_default_str();
  build_cmd->add_option("--out", build.out, "Output lexicon TSV")->required();

  pl::MarginCommand margin;
  auto* margin_cmd = app.add_subcommand("margin-subsample", "Rank pairs by margin score and keep a target-word budget");
  margin_cmd->add_option("--pairs", margin.pairs, "Sentence pair TSV (from `sent`)")->required();
  margin_cmd->add_option("--src-emb", margin.src_emb)->required();
  margin_cmd->add_option("--tgt-emb", margin.tgt_emb)->required();
  margin_cmd->add_option("--dim", margin.dim)->capture_default_str()->check(CLI::PositiveNumber);
  margin_cmd->add_option("--budget", margin.budget, "Target-side word budget")->required()->check(CLI::PositiveNumber);
  margin_cmd->add_option("--k", margin.k, "Neighbourhood size")->capture_default_str()->check(CLI::PositiveNumber);
  margin_cmd->add_option("--src", margin.src, "Source corpus (validates embedding rows)");
  margin_cmd->add_option("--tgt", margin.tgt, "Target corpus (target word counts)");
  margin_cmd->add_option("--min-chars", margin.min_chars)->capture_default_str();
  margin_cmd->add_flag("--normalize", margin.normalize);
  margin_cmd->add_option("--out", margin.out, "Output TSV")->required();

  pl::EvalCommand eval;
  std::string task = "document";
  auto* eval_cmd = app.add_subcommand("eval", "Recall of predicted pairs against a gold alignment");
  eval_cmd->add_option("--task", task)->required()->check(CLI::IsMember({"document", "sentence"}));
  eval_cmd->add_option("--pred", eval.pred)->required();
  eval_cmd->add_option("--gold", eval.gold)->required();

  pl::SynthCommand synth;
  auto* synth_cmd = app.add_subcommand("synth", "Write a synthetic comparable corpus with gold alignments");
  synth_cmd->add_option("--docs", synth.config.docs)->required()->check(CLI::PositiveNumber);
  synth_cmd->add_option("--sents", synth.config.sents_per_doc)->required()->check(CLI::PositiveNumber);
  synth_cmd->add_option("--dim", synth.config.dim)->required()->check(CLI::PositiveNumber);
  synth_cmd->add_option("--sigma", synth.config.noise_sigma)->required()->check(CLI::NonNegativeNumber);
  synth_cmd->add_option("--seed", synth.config.seed)->required();
  synth_cmd->add_option("--out-dir", synth.out_dir)->required();

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int rc = app.exit(e);
    return rc == 0 ? 0 : 1;
  }

  if (workers == 0) workers = std::max(1u, std::thread::hardware_concurrency());

  try {
    Json summary;
    if (*doc_cmd) {
      doc.scheme = bitext::parse_scheme(scheme);
      doc.workers = workers;
      summary = pl::run_doc(doc);
    } else if (*sent_cmd) {
      sent.strategy = bitext::parse_strategy(strategy);
      sent.workers = workers;
      summary = pl::run_sent(sent);
    } else if (*build_cmd) {
      summary = pl::run_build_lexicon(build);
    } else if (*margin_cmd) {
      margin.workers = workers;
      summary = pl::run_margin_subsample(margin);
    } else if (*eval_cmd) {
      eval.task = bitext::parse_task(task);
      summary = pl::run_eval(eval);
    } else if (*synth_cmd) {
      summary = pl::run_synth(synth);
    }
    print_summary(summary, pretty);
    return 0;
  } catch (const bitext::UsageError& e) {
    std::cerr << "usage error: " << e.what() << '\n';
    return 1;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 2;
  }
}
