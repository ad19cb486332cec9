#pragma once

#include <memory>
#include <string>
#include <vector>

#include "umt/lm.hpp"
#include "umt/phrase_table.hpp"

namespace umt {

// Log-linear feature weights. Features follow Moses sign conventions: the
// translation-model and LM features are log10 probabilities, word and phrase
// counts are positive, and the distortion feature is the negated total jump
// cost, so the positive default weight penalizes reordering. The word default
// is the effective +1-per-word value Moses reaches with its -1 weight on a
// -1-per-word feature.
struct LogLinearWeights {
  double tm_fwd = 0.2;
  double tm_bwd = 0.2;
  double lm = 0.5;
  double word_penalty = 1.0;
  double phrase_penalty = 0.2;
  double distortion = 0.3;
};

struct ScoreBreakdown {
  double tm_fwd = 0.0;      // sum of log10 p(t|s), -10 per OOV copy
  double tm_bwd = 0.0;      // sum of log10 p(s|t)
  double lm = 0.0;          // log10 P_lm(y) including the </s> term
  double word_count = 0.0;  // |y|
  double phrase_count = 0.0;
  double distortion = 0.0;  // -(sum of |start - previous end|)

  double weighted(const LogLinearWeights& w) const {
    return w.tm_fwd * tm_fwd + w.tm_bwd * tm_bwd + w.lm * lm +
           w.word_penalty * word_count + w.phrase_penalty * phrase_count +
           w.distortion * distortion;
  }
};

inline constexpr double kOovLog10 = -10.0;

struct TranslationModel {
  PhraseTable table;
  std::shared_ptr<const NgramLm> target_lm;
  LogLinearWeights weights;
  bool reordering_enabled = true;
  int distortion_limit = 6;
  int beam_size = 10;
  int options_per_span = 20;
  bool lowercase = false;  // tokenization convention the model was trained with
};

struct DecodeResult {
  Sentence tokens;
  double score = 0.0;
  ScoreBreakdown features;
  int oov_count = 0;
  bool monotone_fallback = false;  // reordering search dead-ended
};

// Stack decoding organized by covered source count, histogram-pruned at
// beam_size, with hypothesis recombination on (coverage, last phrase end,
// LM context). When reordering is disabled spans are consumed strictly left
// to right. OOV tokens copy through with a fixed penalty on the forward TM
// feature. Ties break lexicographically on the output.
DecodeResult decode(const TranslationModel& model, const Sentence& sentence);

struct CorpusTranslation {
  std::vector<Sentence> sentences;
  int fallback_count = 0;
};

// Per-sentence decode with input order preserved; thread-safe fan-out with
// deterministic output ordering by input index.
CorpusTranslation translate_corpus(const TranslationModel& model, const Corpus& corpus,
                                   int threads = 1);

// Model directory: model.cfg plus phrase-table.txt; the ARPA file is
// referenced by path (relative paths resolve against the directory).
void save_model(const TranslationModel& model, const std::string& dir,
                const std::string& lm_path);
TranslationModel load_model(const std::string& dir);

}  // namespace umt
