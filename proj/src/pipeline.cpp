#include "umt/pipeline.hpp"

#include <algorithm>
#include <chrono>
#include <fstream>
#include <sstream>
#include <stdexcept>

#include "umt/bench.hpp"
#include "umt/bpe.hpp"
#include "umt/rng.hpp"
#include "umt/text.hpp"

namespace umt {

namespace {

Corpus retokenize(const Corpus& corpus, bool lowercase) {
  Corpus out;
  out.language = corpus.language;
  out.sentences.reserve(corpus.size());
  for (const auto& sent : corpus.sentences) out.add(tokenize(join(sent), lowercase));
  return out;
}

double elapsed_s(std::chrono::steady_clock::time_point start) {
  return std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
}

SgnsConfig sgns_from(const PipelineConfig& cfg, std::uint64_t seed) {
  SgnsConfig out;
  out.dimension = static_cast<int>(cfg.emb_dimension);
  out.window = static_cast<int>(cfg.emb_window);
  out.negatives = static_cast<int>(cfg.emb_negatives);
  out.epochs = static_cast<int>(cfg.emb_epochs);
  out.learning_rate = cfg.emb_learning_rate;
  out.subsample_threshold = cfg.emb_subsample;
  out.min_count = static_cast<int>(cfg.emb_min_count);
  out.seed = seed;
  return out;
}

LogLinearWeights weights_from(const PipelineConfig& cfg) {
  LogLinearWeights w;
  w.tm_fwd = cfg.w_tm_fwd;
  w.tm_bwd = cfg.w_tm_bwd;
  w.lm = cfg.w_lm;
  w.word_penalty = cfg.w_word_penalty;
  w.phrase_penalty = cfg.w_phrase_penalty;
  w.distortion = cfg.w_distortion;
  return w;
}

void apply_decoder_config(TranslationModel& model, const PipelineConfig& cfg) {
  model.weights = weights_from(cfg);
  model.distortion_limit = static_cast<int>(cfg.distortion_limit);
  model.beam_size = static_cast<int>(cfg.beam_size);
  model.options_per_span = static_cast<int>(cfg.options_per_span);
  model.lowercase = cfg.lowercase;
}

class ScopedLock {
public:
  explicit ScopedLock(const std::filesystem::path& dir) : path_(dir / ".lock") {
    if (std::filesystem::exists(path_))
      throw std::runtime_error("artifact directory is locked by another run (" +
                               path_.string() + "); delete the lock if stale");
    write_file(path_.string(), "locked\n");
  }
  ~ScopedLock() {
    std::error_code ec;
    std::filesystem::remove(path_, ec);
  }

private:
  std::filesystem::path path_;
};

}  // namespace

std::pair<TranslationModel, TranslationModel> build_seed_models(
    const PhraseTable& induced, std::shared_ptr<const NgramLm> lm_src,
    std::shared_ptr<const NgramLm> lm_tgt, const PipelineConfig& config) {
  if (!lm_src || !lm_tgt)
    throw std::invalid_argument("build_seed_models: missing language model");
  if (induced.entries.empty())
    throw std::invalid_argument("build_seed_models: missing induced phrase table");

  TranslationModel st;
  st.table = induced;
  st.target_lm = std::move(lm_tgt);
  apply_decoder_config(st, config);
  st.reordering_enabled = false;  // monotone for the very first generation

  TranslationModel ts;
  ts.table = transpose_table(induced);
  ts.target_lm = std::move(lm_src);
  apply_decoder_config(ts, config);
  ts.reordering_enabled = false;
  return {std::move(st), std::move(ts)};
}

SyntheticBitext back_translate(const TranslationModel& model, const Corpus& corpus,
                               std::size_t n, std::uint64_t seed, int threads,
                               int iteration) {
  const Corpus sample = sample_sentences(corpus, n, seed);
  const CorpusTranslation translated = translate_corpus(model, sample, threads);

  SyntheticBitext bitext;
  bitext.source_language = model.table.target_language;  // machine-generated side
  bitext.target_language = corpus.language;
  bitext.generator_direction =
      model.table.source_language + "->" + model.table.target_language;
  bitext.iteration = iteration;
  bitext.source = translated.sentences;
  bitext.target = sample.sentences;
  return bitext;
}

TranslationModel train_iteration(const SyntheticBitext& bitext,
                                 std::shared_ptr<const NgramLm> target_lm,
                                 const PipelineConfig& config) {
  if (bitext.size() == 0) throw std::invalid_argument("train_iteration: empty bitext");

  const int em_iters = static_cast<int>(config.ibm1_iterations);
  const LexicalTable forward = ibm1_em(bitext, em_iters);

  SyntheticBitext swapped;
  swapped.source = bitext.target;
  swapped.target = bitext.source;
  swapped.source_language = bitext.target_language;
  swapped.target_language = bitext.source_language;
  const LexicalTable backward = ibm1_em(swapped, em_iters);

  const AlignmentResult aligned = align_and_symmetrize(bitext, forward, backward);
  PhraseTable table =
      extract_phrases(bitext, aligned.alignments, static_cast<int>(config.max_phrase_len));
  prune_table(table, static_cast<std::size_t>(config.prune_top));

  TranslationModel model;
  model.table = std::move(table);
  model.target_lm = std::move(target_lm);
  apply_decoder_config(model, config);
  model.reordering_enabled = true;  // only the seed decodes monotone
  return model;
}

double round_trip_bleu(const TranslationModel& model_st, const TranslationModel& model_ts,
                       const Corpus& held_out_src, const Corpus& held_out_tgt,
                       bool smoothing, int threads) {
  if (held_out_src.empty() && held_out_tgt.empty())
    throw std::invalid_argument("round_trip_bleu: empty held-out set");

  double total = 0.0;
  int parts = 0;
  auto one_side = [&](const TranslationModel& out_model, const TranslationModel& back_model,
                      const Corpus& held) {
    Corpus hop;
    hop.language = out_model.table.target_language;
    hop.sentences = translate_corpus(out_model, held, threads).sentences;
    const auto back = translate_corpus(back_model, hop, threads);
    total += corpus_bleu(back.sentences, held.sentences, 4, smoothing).bleu;
    ++parts;
  };
  if (!held_out_src.empty()) one_side(model_st, model_ts, held_out_src);
  if (!held_out_tgt.empty()) one_side(model_ts, model_st, held_out_tgt);
  return total / parts;
}

TuneResult tune_weights(const TranslationModel& model, const Corpus& dev_inputs,
                        const Corpus& dev_references,
                        const std::vector<LogLinearWeights>& candidates, int threads) {
  if (dev_inputs.empty()) throw std::invalid_argument("tune_weights: empty dev set");
  if (candidates.empty()) throw std::invalid_argument("tune_weights: empty grid");

  TuneResult best;
  bool first = true;
  TranslationModel probe = model;
  for (const auto& weights : candidates) {
    probe.weights = weights;
    const auto hyp = translate_corpus(probe, dev_inputs, threads).sentences;
    const double bleu = corpus_bleu(hyp, dev_references.sentences, 4, true).bleu;
    if (first || bleu > best.dev_bleu) {
      best.weights = weights;
      best.dev_bleu = bleu;
      first = false;
    }
  }
  return best;
}

std::vector<LogLinearWeights> weight_grid(const LogLinearWeights& center,
                                          std::size_t size, std::uint64_t seed) {
  std::vector<LogLinearWeights> grid{center};
  Rng rng(seed);
  auto jitter = [&](double w) { return w * std::pow(2.0, rng.uniform() * 2.0 - 1.0); };
  while (grid.size() < size) {
    LogLinearWeights w = center;
    w.tm_fwd = jitter(center.tm_fwd);
    w.tm_bwd = jitter(center.tm_bwd);
    w.lm = jitter(center.lm);
    w.word_penalty = jitter(center.word_penalty);
    w.phrase_penalty = jitter(center.phrase_penalty);
    w.distortion = jitter(center.distortion);
    grid.push_back(w);
  }
  return grid;
}

Pipeline::Pipeline(PipelineConfig config) : cfg_(std::move(config)), dir_(cfg_.artifact_dir) {}

void Pipeline::set_gold(GoldTestSet src2tgt, GoldTestSet tgt2src) {
  gold_st_ = std::move(src2tgt);
  gold_ts_ = std::move(tgt2src);
}

void Pipeline::set_gold_dictionary(SeedDictionary dict) { gold_dict_ = std::move(dict); }

void Pipeline::set_corpora(Corpus src, Corpus tgt) {
  src_ = std::move(src);
  tgt_ = std::move(tgt);
  corpora_injected_ = true;
}

void Pipeline::stage_corpora() {
  if (!corpora_injected_) {
    if (cfg_.source_corpus.empty() || cfg_.target_corpus.empty())
      throw std::runtime_error("missing corpus paths in configuration");
    src_ = load_corpus(cfg_.source_corpus, cfg_.source_language);
    tgt_ = load_corpus(cfg_.target_corpus, cfg_.target_language);
  }
  src_.language = cfg_.source_language;
  tgt_.language = cfg_.target_language;
  src_ = retokenize(src_, cfg_.lowercase);
  tgt_ = retokenize(tgt_, cfg_.lowercase);
  if (src_.empty() || tgt_.empty()) throw std::runtime_error("empty corpus after tokenization");

  if (cfg_.bpe_enabled) {
    const BpeModel bpe = learn_bpe({&src_, &tgt_},
                                   static_cast<std::size_t>(cfg_.bpe_merges));
    std::filesystem::create_directories(dir_ / "bpe");
    save_bpe(bpe, (dir_ / "bpe" / "joint.bpe").string());
    src_ = apply_bpe(bpe, src_);
    tgt_ = apply_bpe(bpe, tgt_);
    auto encode_gold = [&](GoldTestSet& gold) {
      gold.inputs = apply_bpe(bpe, retokenize(gold.inputs, cfg_.lowercase));
      gold.references = apply_bpe(bpe, retokenize(gold.references, cfg_.lowercase));
    };
    if (gold_st_) encode_gold(*gold_st_);
    if (gold_ts_) encode_gold(*gold_ts_);
  }

  std::filesystem::create_directories(dir_ / "corpora");
  save_corpus(src_, (dir_ / "corpora" / (cfg_.source_language + ".txt")).string());
  save_corpus(tgt_, (dir_ / "corpora" / (cfg_.target_language + ".txt")).string());

  holdout_src_ = sample_sentences(src_, static_cast<std::size_t>(cfg_.rt_holdout),
                                  cfg_.stage_seed("rt:src"));
  holdout_tgt_ = sample_sentences(tgt_, static_cast<std::size_t>(cfg_.rt_holdout),
                                  cfg_.stage_seed("rt:tgt"));
}

void Pipeline::stage_embeddings() {
  Corpus src_in = cfg_.merge_bigrams
                      ? merge_frequent_bigrams(src_, cfg_.bigram_min_count,
                                               cfg_.bigram_threshold)
                      : src_;
  Corpus tgt_in = cfg_.merge_bigrams
                      ? merge_frequent_bigrams(tgt_, cfg_.bigram_min_count,
                                               cfg_.bigram_threshold)
                      : tgt_;
  emb_src_ = train_sgns(src_in, sgns_from(cfg_, cfg_.stage_seed("sgns:src")));
  emb_tgt_ = train_sgns(tgt_in, sgns_from(cfg_, cfg_.stage_seed("sgns:tgt")));

  std::filesystem::create_directories(dir_ / "embeddings");
  save_embeddings(emb_src_, (dir_ / "embeddings" / (cfg_.source_language + ".vec")).string());
  save_embeddings(emb_tgt_, (dir_ / "embeddings" / (cfg_.target_language + ".vec")).string());

  emb_src_ = centered_normalized(emb_src_);
  emb_tgt_ = centered_normalized(emb_tgt_);
}

void Pipeline::stage_alignment() {
  AlignOptions options;
  options.max_seed_pairs = static_cast<std::size_t>(cfg_.align_max_seed);
  options.refine = cfg_.align_refine;
  options.refine_rounds = static_cast<int>(cfg_.align_refine_rounds);
  options.refine_vocab = static_cast<int>(cfg_.align_refine_vocab);
  options.neighborhood = static_cast<int>(cfg_.csls_neighborhood);
  options.seed_keep_fraction = cfg_.seed_keep_fraction;
  options.seed_rng = cfg_.stage_seed("align:degrade");

  AlignResult result = align_spaces(emb_src_, emb_tgt_, options);
  map_ = std::move(result.map);
  seed_dict_ = std::move(result.seed);

  std::filesystem::create_directories(dir_ / "alignment");
  save_rotation(map_, (dir_ / "alignment" / "rotation.txt").string());
  save_dictionary(seed_dict_, (dir_ / "alignment" / "seed.tsv").string());

  if (gold_dict_) {
    seed_p_at_1_ = eval_p_at_1(map_, emb_src_, emb_tgt_, *gold_dict_);
    write_file((dir_ / "alignment" / "p_at_1.txt").string(),
               format_g9(seed_p_at_1_) + "\n");
  }
}

void Pipeline::stage_language_models() {
  const DiscountMode mode = cfg_.lm_discount == "laplace" ? DiscountMode::kLaplace
                                                          : DiscountMode::kKneserNey;
  auto train_side = [&](const Corpus& corpus, const char* label) {
    Corpus data = corpus;
    if (cfg_.lm_data_fraction < 1.0) {
      const auto n = static_cast<std::size_t>(
          std::max(1.0, cfg_.lm_data_fraction * static_cast<double>(corpus.size())));
      data = sample_sentences(corpus, n, cfg_.stage_seed(std::string("lm:") + label));
    }
    return std::make_shared<NgramLm>(
        train_lm(data, static_cast<int>(cfg_.lm_order), mode));
  };
  lm_src_ = train_side(src_, "src");
  lm_tgt_ = train_side(tgt_, "tgt");

  std::filesystem::create_directories(dir_ / "lm");
  save_arpa(*lm_src_, (dir_ / "lm" / (cfg_.source_language + ".arpa")).string());
  save_arpa(*lm_tgt_, (dir_ / "lm" / (cfg_.target_language + ".arpa")).string());
}

void Pipeline::stage_seed_models() {
  PhraseTable induced = induce_unsupervised(
      emb_src_, emb_tgt_, map_, cfg_.induce_temperature,
      static_cast<int>(cfg_.induce_top_k), static_cast<int>(cfg_.induce_max_src_phrases));
  std::filesystem::create_directories(dir_ / "tables" / "iter_0");
  save_phrase_table(induced, (dir_ / "tables" / "iter_0" / "src2tgt.txt").string());

  auto models = build_seed_models(induced, lm_src_, lm_tgt_, cfg_);
  model_st_ = std::move(models.first);
  model_ts_ = std::move(models.second);
  persist_model(model_st_, 0, true);
  persist_model(model_ts_, 0, false);
}

void Pipeline::persist_model(const TranslationModel& model, int iteration, bool src2tgt) {
  const std::string leaf = src2tgt ? "src2tgt" : "tgt2src";
  const auto dir = dir_ / "models" / ("iter_" + std::to_string(iteration)) / leaf;
  const std::string lm_rel =
      "../../../lm/" + model.table.target_language + ".arpa";
  save_model(model, dir.string(), lm_rel);
}

IterationReport Pipeline::report_for(const TranslationModel& model, int iteration,
                                     bool src2tgt, std::size_t sample_size,
                                     double wall_s) {
  IterationReport report;
  report.iteration = iteration;
  report.direction = model.table.source_language + "->" + model.table.target_language;
  report.table_size = model.table.size();
  report.sample_size = sample_size;
  report.wall_time_s = wall_s;
  report.round_trip_bleu =
      round_trip_bleu(model_st_, model_ts_, holdout_src_, holdout_tgt_,
                      cfg_.smooth_round_trip, static_cast<int>(cfg_.threads));
  const auto& gold = src2tgt ? gold_st_ : gold_ts_;
  if (gold) {
    const auto hyp =
        translate_corpus(model, gold->inputs, static_cast<int>(cfg_.threads)).sentences;
    report.test_bleu = corpus_bleu(hyp, gold->references.sentences, 4, false).bleu;
  }
  return report;
}

std::vector<IterationReport> Pipeline::run(int iterations) {
  std::filesystem::create_directories(dir_);
  ScopedLock lock(dir_);
  write_file((dir_ / "config.cfg").string(), config_snapshot(cfg_));

  auto stage = [&](const char* name, auto&& fn) {
    try {
      fn();
    } catch (const std::exception& e) {
      throw std::runtime_error("pipeline stage '" + std::string(name) +
                               "' failed: " + e.what());
    }
  };

  stage("corpora", [&] { stage_corpora(); });
  stage("embeddings", [&] { stage_embeddings(); });
  stage("alignment", [&] { stage_alignment(); });
  stage("language-models", [&] { stage_language_models(); });
  stage("seed-models", [&] { stage_seed_models(); });

  std::vector<IterationReport> reports;
  const std::size_t sample_n = static_cast<std::size_t>(cfg_.bt_sample_size);
  const int threads = static_cast<int>(cfg_.threads);

  auto t0 = std::chrono::steady_clock::now();
  reports.push_back(report_for(model_st_, 0, true, 0, elapsed_s(t0)));
  reports.push_back(report_for(model_ts_, 0, false, 0, elapsed_s(t0)));

  if (iterations > 0) {
    SyntheticBitext d_tgt;  // D_t: (synthetic target text, genuine source text)
    stage("back-translate seed", [&] {
      d_tgt = back_translate(model_st_, src_, sample_n, cfg_.stage_seed("bt:0:src"),
                             threads, 0);
    });

    for (int i = 1; i <= iterations; ++i) {
      const std::string tag = "iteration " + std::to_string(i);
      stage((tag + " train tgt2src").c_str(), [&] {
        auto start = std::chrono::steady_clock::now();
        model_ts_ = train_iteration(d_tgt, lm_src_, cfg_);
        persist_model(model_ts_, i, false);
        std::filesystem::create_directories(dir_ / "tables" / ("iter_" + std::to_string(i)));
        save_phrase_table(model_ts_.table,
                          (dir_ / "tables" / ("iter_" + std::to_string(i)) / "tgt2src.txt").string());
        reports.push_back(report_for(model_ts_, i, false, d_tgt.size(), elapsed_s(start)));
      });

      SyntheticBitext d_src;
      stage((tag + " back-translate tgt2src").c_str(), [&] {
        d_src = back_translate(model_ts_, tgt_, sample_n,
                               cfg_.stage_seed("bt:" + std::to_string(i) + ":tgt"),
                               threads, i);
      });

      stage((tag + " train src2tgt").c_str(), [&] {
        auto start = std::chrono::steady_clock::now();
        model_st_ = train_iteration(d_src, lm_tgt_, cfg_);
        persist_model(model_st_, i, true);
        save_phrase_table(model_st_.table,
                          (dir_ / "tables" / ("iter_" + std::to_string(i)) / "src2tgt.txt").string());
        reports.push_back(report_for(model_st_, i, true, d_src.size(), elapsed_s(start)));
      });

      if (i < iterations) {
        stage((tag + " back-translate src2tgt").c_str(), [&] {
          d_tgt = back_translate(model_st_, src_, sample_n,
                                 cfg_.stage_seed("bt:" + std::to_string(i) + ":src"),
                                 threads, i);
        });
      }
    }
  }

  write_reports(reports);
  write_manifest();
  return reports;
}

std::string reports_tsv(const std::vector<IterationReport>& reports) {
  std::ostringstream ss;
  ss << "iteration\tdirection\tround_trip_bleu\ttest_bleu\ttable_size\n";
  for (const auto& r : reports) {
    ss << r.iteration << '\t' << r.direction << '\t' << format_g9(r.round_trip_bleu)
       << '\t' << (r.test_bleu < 0 ? std::string("-") : format_g9(r.test_bleu)) << '\t'
       << r.table_size << '\n';
  }
  return ss.str();
}

void Pipeline::write_reports(const std::vector<IterationReport>& reports) const {
  std::filesystem::create_directories(dir_ / "reports");
  write_file((dir_ / "reports" / "report.tsv").string(), reports_tsv(reports));
}

void write_manifest_file(const std::filesystem::path& dir,
                         const std::string& config_snapshot) {
  std::vector<std::string> files;
  for (const auto& entry : std::filesystem::recursive_directory_iterator(dir)) {
    if (!entry.is_regular_file()) continue;
    const auto rel = std::filesystem::relative(entry.path(), dir).generic_string();
    if (rel == "manifest.txt" || rel == ".lock") continue;
    files.push_back(rel);
  }
  std::sort(files.begin(), files.end());

  std::ostringstream ss;
  char hex[17];
  for (const auto& rel : files) {
    const std::string content = read_file((dir / rel).string());
    std::snprintf(hex, sizeof(hex), "%016llx",
                  static_cast<unsigned long long>(fnv1a(content)));
    ss << hex << "  " << rel << '\n';
  }
  std::snprintf(hex, sizeof(hex), "%016llx",
                static_cast<unsigned long long>(fnv1a(config_snapshot)));
  ss << hex << "  <config-snapshot>\n";
  write_file((dir / "manifest.txt").string(), ss.str());
}

void Pipeline::write_manifest() const { write_manifest_file(dir_, config_snapshot(cfg_)); }

AblationAxis ablation_axis_from_name(const std::string& name) {
  if (name == "init_quality") return AblationAxis::kInitQuality;
  if (name == "lm_data") return AblationAxis::kLmData;
  if (name == "bt_data") return AblationAxis::kBtData;
  throw std::invalid_argument("unknown ablation axis: " + name +
                              " (expected init_quality, lm_data, or bt_data)");
}

std::vector<AblationRow> run_ablation(const PipelineConfig& config, AblationAxis axis,
                                      const std::vector<double>& levels) {
  std::vector<AblationRow> rows;
  for (double level : levels) {
    PipelineConfig cfg = config;
    switch (axis) {
      case AblationAxis::kInitQuality:
        cfg.seed_keep_fraction = level;
        break;
      case AblationAxis::kLmData:
        cfg.lm_data_fraction = level;
        break;
      case AblationAxis::kBtData:
        cfg.bt_sample_size = std::max<long long>(
            1, static_cast<long long>(level * static_cast<double>(config.bt_sample_size)));
        break;
    }
    std::ostringstream leaf;
    leaf << "ablation_" << static_cast<int>(axis) << '_' << format_g9(level);
    cfg.artifact_dir = (std::filesystem::path(config.artifact_dir) / leaf.str()).string();

    const auto reports = run_synthbench(cfg);
    for (const auto& r : reports) {
      // The paper's ablation reports the into-source direction (fr->en).
      if (r.direction == cfg.target_language + "->" + cfg.source_language)
        rows.push_back({level, r.iteration, r.test_bleu});
    }
  }
  return rows;
}

std::string ablation_tsv(const std::vector<AblationRow>& rows) {
  std::ostringstream ss;
  ss << "level\titeration\tbleu\n";
  for (const auto& r : rows)
    ss << format_g9(r.level) << '\t' << r.iteration << '\t' << format_g9(r.bleu) << '\n';
  return ss.str();
}

}  // namespace umt
