// umt: unsupervised phrase-based translation toolkit.
//
// Subcommands cover the individual stages (tokenize, learn-bpe, apply-bpe,
// train-embeddings, align, induce-table, train-lm, translate, bleu) and the
// full loops (iterate, ablate, synthbench). Standard output carries only
// data; diagnostics go to standard error. All randomness is controlled by a
// single --seed.

#include <CLI11.hpp>
#include <filesystem>
#include <fstream>
#include <iostream>

#include "umt/alignment.hpp"
#include "umt/bench.hpp"
#include "umt/bleu.hpp"
#include "umt/bpe.hpp"
#include "umt/config.hpp"
#include "umt/corpus.hpp"
#include "umt/decoder.hpp"
#include "umt/embeddings.hpp"
#include "umt/lm.hpp"
#include "umt/phrase_table.hpp"
#include "umt/pipeline.hpp"
#include "umt/rng.hpp"
#include "umt/text.hpp"

namespace {

using umt::PipelineConfig;

std::vector<std::string> read_input_lines(const std::string& path) {
  if (path == "-") {
    std::vector<std::string> lines;
    std::string line;
    while (std::getline(std::cin, line)) {
      if (!line.empty() && line.back() == '\r') line.pop_back();
      lines.push_back(line);
    }
    return lines;
  }
  return umt::read_lines(path);
}

void write_output_lines(const std::string& path, const std::vector<std::string>& lines) {
  if (path == "-") {
    for (const auto& line : lines) std::cout << line << '\n';
    return;
  }
  umt::write_lines(path, lines);
}

std::vector<umt::Sentence> lines_to_sentences(const std::vector<std::string>& lines) {
  std::vector<umt::Sentence> out;
  out.reserve(lines.size());
  for (const auto& line : lines) out.push_back(umt::split_ws(line));
  return out;
}

struct CommonOpts {
  std::string config_path;
  long long seed = -1;       // -1: keep config/default
  long long threads = -1;
  std::string artifact_dir;
};

PipelineConfig resolve_config(const CommonOpts& opts) {
  PipelineConfig cfg;
  if (!opts.config_path.empty()) cfg = umt::parse_config(opts.config_path);
  if (opts.seed >= 0) cfg.seed = opts.seed;
  if (opts.threads >= 0) cfg.threads = opts.threads;
  if (!opts.artifact_dir.empty()) cfg.artifact_dir = opts.artifact_dir;
  return cfg;
}

void print_reports(const std::vector<umt::IterationReport>& reports) {
  std::cout << umt::reports_tsv(reports);
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"unsupervised phrase-based machine translation toolkit"};
  app.require_subcommand(0, 1);
  app.footer("Run 'umt <subcommand> --help' for per-stage flags; defaults taken from the\n"
             "configuration reference (umt iterate --print-config).");

  // ---- tokenize ----
  auto* cmd_tok = app.add_subcommand("tokenize", "rule-based tokenizer, one sentence per line");
  std::string tok_in = "-", tok_out = "-";
  bool tok_lower = false;
  cmd_tok->add_option("--input", tok_in, "input file or - for stdin");
  cmd_tok->add_option("--output", tok_out, "output file or - for stdout");
  cmd_tok->add_flag("--lowercase", tok_lower, "lowercase while tokenizing");

  // ---- learn-bpe ----
  auto* cmd_lbpe = app.add_subcommand("learn-bpe", "learn joint BPE merges");
  std::vector<std::string> lbpe_inputs;
  long long lbpe_merges = PipelineConfig{}.bpe_merges;
  std::string lbpe_out;
  cmd_lbpe->add_option("--input", lbpe_inputs, "tokenized corpora, learned jointly")->required();
  cmd_lbpe->add_option("--merges", lbpe_merges, "merge operations (paper scale: 60000)");
  cmd_lbpe->add_option("--output", lbpe_out, "model file")->required();

  // ---- apply-bpe ----
  auto* cmd_abpe = app.add_subcommand("apply-bpe", "encode tokenized text with a BPE model");
  std::string abpe_model, abpe_in = "-", abpe_out = "-";
  bool abpe_revert = false;
  cmd_abpe->add_option("--model", abpe_model, "BPE model file")->required();
  cmd_abpe->add_option("--input", abpe_in, "input file or -");
  cmd_abpe->add_option("--output", abpe_out, "output file or -");
  cmd_abpe->add_flag("--revert", abpe_revert, "decode subword text back to words");

  // ---- train-embeddings ----
  auto* cmd_emb = app.add_subcommand("train-embeddings", "SGNS phrase embeddings for one corpus");
  std::string emb_in, emb_out, emb_lang = "src";
  PipelineConfig emb_defaults;
  long long emb_dim = emb_defaults.emb_dimension, emb_window = emb_defaults.emb_window;
  long long emb_neg = emb_defaults.emb_negatives, emb_epochs = emb_defaults.emb_epochs;
  long long emb_min_count = emb_defaults.emb_min_count;
  double emb_lr = emb_defaults.emb_learning_rate, emb_sub = emb_defaults.emb_subsample;
  bool emb_no_bigrams = false;
  long long emb_seed = 1;
  cmd_emb->add_option("--input", emb_in, "tokenized corpus")->required();
  cmd_emb->add_option("--output", emb_out, "embedding text file")->required();
  cmd_emb->add_option("--language", emb_lang, "language label");
  cmd_emb->add_option("--dim", emb_dim, "dimension (paper: 512)");
  cmd_emb->add_option("--window", emb_window, "context window (paper: 5)");
  cmd_emb->add_option("--negatives", emb_neg, "negative samples (paper: 10)");
  cmd_emb->add_option("--epochs", emb_epochs, "training epochs");
  cmd_emb->add_option("--learning-rate", emb_lr, "initial learning rate");
  cmd_emb->add_option("--subsample", emb_sub, "subsampling threshold");
  cmd_emb->add_option("--min-count", emb_min_count, "minimum phrase count");
  cmd_emb->add_flag("--no-bigrams", emb_no_bigrams, "skip the bigram-merging pass");
  cmd_emb->add_option("--seed", emb_seed, "random seed");

  // ---- align ----
  auto* cmd_align = app.add_subcommand("align", "orthogonal alignment of two embedding spaces");
  std::string al_src, al_tgt, al_out, al_gold;
  std::string al_src_lang = "src", al_tgt_lang = "tgt";
  PipelineConfig al_defaults;
  long long al_max_seed = al_defaults.align_max_seed;
  long long al_neigh = al_defaults.csls_neighborhood;
  bool al_no_refine = false;
  long long al_seed = 1;
  cmd_align->add_option("--src-emb", al_src, "source embeddings")->required();
  cmd_align->add_option("--tgt-emb", al_tgt, "target embeddings")->required();
  cmd_align->add_option("--output", al_out, "output directory")->required();
  cmd_align->add_option("--source-language", al_src_lang, "source label");
  cmd_align->add_option("--target-language", al_tgt_lang, "target label");
  cmd_align->add_option("--max-seed-pairs", al_max_seed, "identical-string seed cap");
  cmd_align->add_option("--neighborhood", al_neigh, "CSLS neighborhood");
  cmd_align->add_flag("--no-refine", al_no_refine, "skip mutual-CSLS refinement");
  cmd_align->add_option("--gold", al_gold, "gold dictionary TSV; prints P@1");
  cmd_align->add_option("--seed", al_seed, "random seed");

  // ---- induce-table ----
  auto* cmd_ind = app.add_subcommand("induce-table", "unsupervised phrase table from aligned spaces");
  std::string in_src, in_tgt, in_rot, in_out;
  std::string in_src_lang = "src", in_tgt_lang = "tgt";
  PipelineConfig in_defaults;
  double in_temp = in_defaults.induce_temperature;
  long long in_topk = in_defaults.induce_top_k;
  long long in_max = in_defaults.induce_max_src_phrases;
  cmd_ind->add_option("--src-emb", in_src, "source embeddings")->required();
  cmd_ind->add_option("--tgt-emb", in_tgt, "target embeddings")->required();
  cmd_ind->add_option("--rotation", in_rot, "rotation file from align")->required();
  cmd_ind->add_option("--output", in_out, "phrase table file")->required();
  cmd_ind->add_option("--source-language", in_src_lang, "source label");
  cmd_ind->add_option("--target-language", in_tgt_lang, "target label");
  cmd_ind->add_option("--temperature", in_temp, "softmax temperature (paper: 30)");
  cmd_ind->add_option("--top-k", in_topk, "neighbors per source phrase (paper: 200)");
  cmd_ind->add_option("--max-phrases", in_max, "inventory size (paper scale: 300000)");

  // ---- train-lm ----
  auto* cmd_lm = app.add_subcommand("train-lm", "smoothed back-off n-gram language model");
  std::string lm_in, lm_out, lm_discount = "kneser-ney";
  long long lm_order = PipelineConfig{}.lm_order;
  cmd_lm->add_option("--input", lm_in, "tokenized corpus")->required();
  cmd_lm->add_option("--output", lm_out, "ARPA file")->required();
  cmd_lm->add_option("--order", lm_order, "n-gram order");
  cmd_lm->add_option("--discount", lm_discount, "kneser-ney or laplace");

  // ---- translate ----
  auto* cmd_tr = app.add_subcommand("translate", "decode with a saved model");
  std::string tr_model, tr_in = "-", tr_out = "-";
  bool tr_monotone = false;
  long long tr_threads = 1, tr_beam = -1;
  cmd_tr->add_option("--model", tr_model, "model directory")->required();
  cmd_tr->add_option("--input", tr_in, "one sentence per line, or -");
  cmd_tr->add_option("--output", tr_out, "output file or -");
  cmd_tr->add_flag("--monotone", tr_monotone, "disable phrase reordering");
  cmd_tr->add_option("--threads", tr_threads, "worker threads");
  cmd_tr->add_option("--beam", tr_beam, "override stack size");

  // ---- bleu ----
  auto* cmd_bleu = app.add_subcommand("bleu", "corpus BLEU (one-line summary + TSV)");
  std::string bl_hyp, bl_ref;
  long long bl_max_n = 4;
  bool bl_smooth = false;
  cmd_bleu->add_option("--hyp", bl_hyp, "hypothesis file")->required();
  cmd_bleu->add_option("--ref", bl_ref, "reference file")->required();
  cmd_bleu->add_option("--max-n", bl_max_n, "maximum n-gram order");
  cmd_bleu->add_flag("--smooth", bl_smooth, "epsilon-smooth zero counts");

  // ---- iterate / ablate / synthbench ----
  CommonOpts it_opts, ab_opts, sb_opts;
  auto add_common = [](CLI::App* cmd, CommonOpts& opts) {
    cmd->add_option("--config", opts.config_path, "configuration file");
    cmd->add_option("--seed", opts.seed, "global random seed");
    cmd->add_option("--threads", opts.threads, "worker threads");
    cmd->add_option("--artifact-dir", opts.artifact_dir, "artifact directory");
  };

  auto* cmd_it = app.add_subcommand("iterate", "full iterative back-translation run");
  std::string it_src, it_tgt;
  long long it_iterations = -1;
  bool it_print_config = false;
  add_common(cmd_it, it_opts);
  cmd_it->add_option("--source", it_src, "source corpus (overrides config)");
  cmd_it->add_option("--target", it_tgt, "target corpus (overrides config)");
  cmd_it->add_option("--iterations", it_iterations, "back-translation iterations");
  cmd_it->add_flag("--print-config", it_print_config, "print the configuration reference and exit");

  auto* cmd_ab = app.add_subcommand("ablate", "rerun the benchmark varying one axis");
  std::string ab_axis;
  std::vector<double> ab_levels;
  long long ab_iterations = -1;
  add_common(cmd_ab, ab_opts);
  cmd_ab->add_option("--axis", ab_axis, "init_quality, lm_data, or bt_data")->required();
  cmd_ab->add_option("--levels", ab_levels, "levels, e.g. 0.25 1.0")->required();
  cmd_ab->add_option("--iterations", ab_iterations, "iterations per run");

  auto* cmd_sb = app.add_subcommand("synthbench", "synthetic cipher benchmark end-to-end");
  long long sb_iterations = -1;
  add_common(cmd_sb, sb_opts);
  cmd_sb->add_option("--iterations", sb_iterations, "back-translation iterations");

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return 2;  // unknown command or malformed flags: usage error
  }

  if (app.get_subcommands().empty()) {
    std::cerr << app.help() << std::endl;
    return 2;
  }

  try {
    if (cmd_tok->parsed()) {
      std::vector<std::string> out;
      for (const auto& line : read_input_lines(tok_in))
        out.push_back(umt::join(umt::tokenize(line, tok_lower)));
      write_output_lines(tok_out, out);
      return 0;
    }

    if (cmd_lbpe->parsed()) {
      std::vector<umt::Corpus> corpora;
      for (const auto& path : lbpe_inputs) corpora.push_back(umt::load_corpus(path, path));
      std::vector<const umt::Corpus*> ptrs;
      for (const auto& c : corpora) ptrs.push_back(&c);
      const auto model = umt::learn_bpe(ptrs, static_cast<std::size_t>(lbpe_merges));
      umt::save_bpe(model, lbpe_out);
      std::cerr << "learned " << model.merges.size() << " merges\n";
      return 0;
    }

    if (cmd_abpe->parsed()) {
      const auto model = umt::load_bpe(abpe_model);
      std::vector<std::string> out;
      for (const auto& line : read_input_lines(abpe_in)) {
        const auto sent = umt::split_ws(line);
        out.push_back(umt::join(abpe_revert ? umt::revert_bpe(model, sent)
                                            : umt::apply_bpe(model, sent)));
      }
      write_output_lines(abpe_out, out);
      return 0;
    }

    if (cmd_emb->parsed()) {
      PipelineConfig cfg;
      umt::Corpus corpus = umt::load_corpus(emb_in, emb_lang);
      if (!emb_no_bigrams)
        corpus = umt::merge_frequent_bigrams(corpus, cfg.bigram_min_count,
                                             cfg.bigram_threshold);
      umt::SgnsConfig sgns;
      sgns.dimension = static_cast<int>(emb_dim);
      sgns.window = static_cast<int>(emb_window);
      sgns.negatives = static_cast<int>(emb_neg);
      sgns.epochs = static_cast<int>(emb_epochs);
      sgns.learning_rate = emb_lr;
      sgns.subsample_threshold = emb_sub;
      sgns.min_count = static_cast<int>(emb_min_count);
      sgns.seed = umt::derive_seed(static_cast<std::uint64_t>(emb_seed), "sgns:" + emb_lang);
      const auto space = umt::train_sgns(corpus, sgns);
      umt::save_embeddings(space, emb_out);
      std::cerr << "trained " << space.vocabulary.size() << " phrase vectors\n";
      return 0;
    }

    if (cmd_align->parsed()) {
      auto src = umt::centered_normalized(umt::load_embeddings(al_src, al_src_lang));
      auto tgt = umt::centered_normalized(umt::load_embeddings(al_tgt, al_tgt_lang));
      umt::AlignOptions options;
      options.max_seed_pairs = static_cast<std::size_t>(al_max_seed);
      options.refine = !al_no_refine;
      options.neighborhood = static_cast<int>(al_neigh);
      options.seed_rng = umt::derive_seed(static_cast<std::uint64_t>(al_seed), "align");
      const auto result = umt::align_spaces(src, tgt, options);
      std::filesystem::create_directories(al_out);
      umt::save_rotation(result.map, al_out + "/rotation.txt");
      umt::save_dictionary(result.seed, al_out + "/seed.tsv");
      std::cerr << "seed pairs: " << result.seed.pairs.size()
                << ", refinement pairs: " << result.refinement_pairs
                << ", orthogonality error: " << result.map.orthogonality_error() << '\n';
      if (!al_gold.empty()) {
        const auto gold = umt::load_dictionary(al_gold);
        std::cout << umt::format_g9(umt::eval_p_at_1(result.map, src, tgt, gold)) << '\n';
      }
      return 0;
    }

    if (cmd_ind->parsed()) {
      auto src = umt::centered_normalized(umt::load_embeddings(in_src, in_src_lang));
      auto tgt = umt::centered_normalized(umt::load_embeddings(in_tgt, in_tgt_lang));
      const auto map = umt::load_rotation(in_rot, in_src_lang, in_tgt_lang);
      const auto table = umt::induce_unsupervised(src, tgt, map, in_temp,
                                                  static_cast<int>(in_topk),
                                                  static_cast<int>(in_max));
      umt::save_phrase_table(table, in_out);
      std::cerr << "induced " << table.size() << " phrase pairs\n";
      return 0;
    }

    if (cmd_lm->parsed()) {
      const auto corpus = umt::load_corpus(lm_in, "lm");
      const auto mode = lm_discount == "laplace" ? umt::DiscountMode::kLaplace
                                                 : umt::DiscountMode::kKneserNey;
      const auto lm = umt::train_lm(corpus, static_cast<int>(lm_order), mode);
      umt::save_arpa(lm, lm_out);
      if (lm.fell_back_to_laplace())
        std::cerr << "count-of-count statistics degenerate; fell back to add-one\n";
      std::cerr << "perplexity on training data: " << umt::perplexity(lm, corpus) << '\n';
      return 0;
    }

    if (cmd_tr->parsed()) {
      auto model = umt::load_model(tr_model);
      if (tr_monotone) model.reordering_enabled = false;
      if (tr_beam > 0) model.beam_size = static_cast<int>(tr_beam);
      std::vector<std::string> out;
      for (const auto& line : read_input_lines(tr_in)) {
        const auto sent = umt::tokenize(line, model.lowercase);
        if (sent.empty()) {
          out.emplace_back();
          continue;
        }
        out.push_back(umt::join(umt::decode(model, sent).tokens));
      }
      write_output_lines(tr_out, out);
      return 0;
    }

    if (cmd_bleu->parsed()) {
      const auto hyp = lines_to_sentences(read_input_lines(bl_hyp));
      const auto ref = lines_to_sentences(read_input_lines(bl_ref));
      const auto report =
          umt::corpus_bleu(hyp, ref, static_cast<int>(bl_max_n), bl_smooth);
      std::cout << "BLEU = " << umt::format_g9(report.bleu) << '\n';
      std::cout << report.tsv() << '\n';
      return 0;
    }

    if (cmd_it->parsed()) {
      if (it_print_config) {
        std::cout << umt::config_reference();
        return 0;
      }
      PipelineConfig cfg = resolve_config(it_opts);
      if (!it_src.empty()) cfg.source_corpus = it_src;
      if (!it_tgt.empty()) cfg.target_corpus = it_tgt;
      if (it_iterations >= 0) cfg.iterations = it_iterations;
      umt::Pipeline pipeline(cfg);
      const auto reports = pipeline.run(static_cast<int>(cfg.iterations));
      print_reports(reports);
      return 0;
    }

    if (cmd_ab->parsed()) {
      PipelineConfig cfg = resolve_config(ab_opts);
      if (ab_iterations >= 0) cfg.iterations = ab_iterations;
      const auto rows =
          umt::run_ablation(cfg, umt::ablation_axis_from_name(ab_axis), ab_levels);
      const std::string tsv = umt::ablation_tsv(rows);
      std::filesystem::create_directories(std::filesystem::path(cfg.artifact_dir) / "reports");
      umt::write_file((std::filesystem::path(cfg.artifact_dir) / "reports" /
                       "ablation.tsv").string(), tsv);
      std::cout << tsv;
      return 0;
    }

    if (cmd_sb->parsed()) {
      PipelineConfig cfg = resolve_config(sb_opts);
      if (sb_iterations >= 0) cfg.iterations = sb_iterations;
      const auto reports = umt::run_synthbench(cfg);
      print_reports(reports);
      return 0;
    }
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 1;
  }

  std::cerr << app.help() << std::endl;
  return 2;
}
