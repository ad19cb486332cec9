#pragma once

#include "umt/pipeline.hpp"

namespace umt {

// Desk-scale stand-in for a real language pair: language B is language A
// under a bijective word substitution plus bounded adjacent swaps. The two
// "monolingual" halves are disjoint; digits, punctuation and a small fraction
// of word types survive the cipher unchanged, anchoring the identical-string
// seed. A gold test slice is held aside (cipher only, no swaps).
struct CipherBenchmark {
  Corpus src_half;
  Corpus tgt_half;
  GoldTestSet gold_src2tgt;
  GoldTestSet gold_tgt2src;
  SeedDictionary gold_dictionary;  // every type pair (w, cipher(w))
  std::size_t preserved_types = 0;
};

CipherBenchmark make_cipher_benchmark(const PipelineConfig& config);

// Generates the benchmark, runs the full pipeline on it, and writes reports
// plus benchmark corpora into the artifact directory.
std::vector<IterationReport> run_synthbench(const PipelineConfig& config);

}  // namespace umt
