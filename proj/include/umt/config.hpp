#pragma once

#include <cstdint>
#include <string>
#include <vector>

namespace umt {

// Every stage parameter with its default. Parsing is strict: unknown keys and
// type mismatches are errors naming the key and line. A resolved snapshot is
// persisted with every pipeline run.
struct PipelineConfig {
  // [data]
  std::string source_corpus;
  std::string target_corpus;
  std::string source_language = "src";
  std::string target_language = "tgt";
  bool lowercase = false;

  // [bpe] paper scale uses 60000 merges; desk default is smaller.
  bool bpe_enabled = false;
  long long bpe_merges = 4000;

  // [noise] defaults are configuration, not paper ground truth.
  double noise_drop_probability = 0.1;
  long long noise_swap_window = 3;

  // [embeddings] paper scale: dimension 512, window 5, 10 negatives.
  long long emb_dimension = 64;
  long long emb_window = 5;
  long long emb_negatives = 10;
  long long emb_epochs = 5;
  double emb_learning_rate = 0.025;
  double emb_subsample = 1e-4;
  long long emb_min_count = 5;
  bool merge_bigrams = true;
  long long bigram_min_count = 5;
  double bigram_threshold = 10.0;

  // [align]
  long long align_max_seed = 20000;
  bool align_refine = true;
  long long align_refine_rounds = 1;
  long long align_refine_vocab = 10000;
  long long csls_neighborhood = 10;
  double seed_keep_fraction = 1.0;

  // [induce] temperature and top_k are the paper settings; max_src_phrases
  // is 300000 at paper scale.
  double induce_temperature = 30.0;
  long long induce_top_k = 200;
  long long induce_max_src_phrases = 50000;

  // [lm]
  long long lm_order = 4;
  std::string lm_discount = "kneser-ney";
  double lm_data_fraction = 1.0;

  // [decoder]
  double w_tm_fwd = 0.2;
  double w_tm_bwd = 0.2;
  double w_lm = 0.5;
  double w_word_penalty = 1.0;
  double w_phrase_penalty = 0.2;
  double w_distortion = 0.3;
  long long distortion_limit = 6;
  long long beam_size = 10;
  long long options_per_span = 20;

  // [pipeline] bt_sample_size is 5000000 at paper scale.
  long long iterations = 3;
  long long bt_sample_size = 50000;
  long long rt_holdout = 500;
  long long prune_top = 50;
  long long max_phrase_len = 4;
  long long ibm1_iterations = 5;
  std::string artifact_dir = "artifacts";
  long long threads = 1;
  long long seed = 1;
  bool smooth_round_trip = true;

  // [bench] synthetic cipher benchmark
  long long bench_sentences = 50000;
  long long bench_test_size = 2000;
  double bench_preserve_fraction = 0.05;
  double bench_swap_probability = 0.5;
  long long bench_vocab = 3000;

  // [tune]
  long long tune_grid = 32;

  std::uint64_t stage_seed(const std::string& label) const;
};

// Parses "[section]" headers and "key = value" lines ('#' starts a comment).
PipelineConfig parse_config(const std::string& path);
PipelineConfig parse_config_text(const std::string& text, const std::string& origin);

// Canonical resolved form: every key in section order. parse(snapshot(c)) == c.
std::string config_snapshot(const PipelineConfig& config);

// One "section.key = default  (help)" line per parameter, paper-sourced
// defaults annotated.
std::string config_reference();

}  // namespace umt
