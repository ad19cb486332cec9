#pragma once

#include <cstdint>
#include <map>
#include <set>
#include <string>
#include <unordered_map>
#include <vector>

#include "umt/alignment.hpp"
#include "umt/embeddings.hpp"

namespace umt {

// Scored source -> target phrase mapping with conditional probabilities in
// both directions. Phrases are space-joined surface token strings.
struct PhraseEntry {
  std::string target;
  double p_tgt_given_src = 0.0;
  double p_src_given_tgt = 0.0;
};

struct PhraseTable {
  std::string source_language;
  std::string target_language;
  int max_phrase_len = 1;
  std::unordered_map<std::string, std::vector<PhraseEntry>> entries;

  std::size_t size() const;
  const std::vector<PhraseEntry>* lookup(const std::string& source) const;
  void sort_entries();  // per source: p_tgt_given_src desc, then target asc
};

// Machine-generated parallel data: (synthetic source, genuine target).
struct SyntheticBitext {
  std::vector<Sentence> source;  // machine-generated side
  std::vector<Sentence> target;  // genuine monolingual side
  std::string source_language;
  std::string target_language;
  std::string generator_direction;  // e.g. "src2tgt", tags provenance
  int iteration = 0;

  std::size_t size() const { return source.size(); }
};

struct AlignmentMatrix {
  std::set<std::pair<int, int>> links;  // (source index, target index)
};

// Paper-scale induction knobs (the desk defaults live in PipelineConfig).
inline constexpr double kPaperTemperature = 30.0;
inline constexpr int kPaperTopK = 200;
inline constexpr int kPaperMaxSrcPhrases = 300000;
inline constexpr int kPaperMaxPhraseLen = 4;

// Builds a phrase table from aligned embedding spaces:
//   p(t_j|s_i) = exp(cos(e(t_j), W e(s_i)) / T) / sum_k exp(cos(e(t_k), W e(s_i)) / T)
// with the normalizer over the max_src_phrases most frequent target phrases,
// candidates restricted to the top_k CSLS neighbors after normalization, and
// the reverse direction scored with W^T over the cosine transpose. Entries
// with forward probability below 1e-6 are dropped.
PhraseTable induce_unsupervised(const EmbeddingSpace& src, const EmbeddingSpace& tgt,
                                const RotationMap& map, double temperature,
                                int top_k, int max_src_phrases);

// Swaps direction: entry (s -> t, p_f, p_b) becomes (t -> s, p_b, p_f).
PhraseTable transpose_table(const PhraseTable& table);

// IBM Model 1 lexical probabilities t(target word | source word) with a NULL
// source token, trained by EM from uniform initialization over the target
// vocabulary. log_likelihoods records the data log-likelihood before each
// update; EM guarantees it is non-decreasing.
struct LexicalTable {
  std::unordered_map<std::string, std::unordered_map<std::string, double>> t;
  std::vector<double> log_likelihoods;
  static const std::string kNull;

  double prob(const std::string& src, const std::string& tgt) const;
};

LexicalTable ibm1_em(const SyntheticBitext& bitext, int iterations);

// Viterbi alignments in both directions symmetrized by intersection grown
// with adjacent links (grow-diag). Pairs with an empty side are skipped and
// counted.
struct AlignmentResult {
  std::vector<AlignmentMatrix> alignments;  // parallel to the bitext
  int skipped = 0;
};

AlignmentResult align_and_symmetrize(const SyntheticBitext& bitext,
                                     const LexicalTable& forward,
                                     const LexicalTable& backward);

// All phrase pairs consistent with the alignments (no link crossing the
// boundary, at least one internal link) up to max_len per side, scored by
// relative frequency in both directions.
PhraseTable extract_phrases(const SyntheticBitext& bitext,
                            const std::vector<AlignmentMatrix>& alignments,
                            int max_len);

// Keeps the top_n targets per source by p(t|s); applied between iterations.
void prune_table(PhraseTable& table, std::size_t top_n);

// Moses-style text format:
//   src phrase ||| tgt phrase ||| p_tgt_given_src p_src_given_tgt
void save_phrase_table(const PhraseTable& table, const std::string& path);
PhraseTable load_phrase_table(const std::string& path, std::string source_language,
                              std::string target_language);

}  // namespace umt
