#pragma once

#include <string>
#include <vector>

#include "umt/corpus.hpp"

namespace umt {

// Corpus-level BLEU with clipped modified n-gram precision and the standard
// brevity penalty (1 whenever the hypothesis side is at least as long as the
// reference side). Single reference per sentence.
struct BleuReport {
  double bleu = 0.0;                 // in [0, 100]
  std::vector<double> precisions;    // clipped precision per order
  double brevity_penalty = 1.0;      // in (0, 1]
  std::size_t hypothesis_length = 0;
  std::size_t reference_length = 0;
  int max_n = 4;
  bool smoothed = false;

  std::string tsv() const;
};

// smoothing substitutes epsilon/total for zero match counts so early-iteration
// round-trip scores stay comparable; identity corpora still score 100.
BleuReport corpus_bleu(const std::vector<Sentence>& hypotheses,
                       const std::vector<Sentence>& references, int max_n = 4,
                       bool smoothing = false);

}  // namespace umt
