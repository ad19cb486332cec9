#pragma once

#include <cstdint>
#include <string>
#include <vector>

namespace umt {

using Sentence = std::vector<std::string>;

// A monolingual corpus: ordered token sequences. Empty sentences are never
// stored; sentence order is stable across reloads of the same file.
struct Corpus {
  std::string language;
  std::vector<Sentence> sentences;

  std::size_t size() const { return sentences.size(); }
  bool empty() const { return sentences.empty(); }
  std::size_t token_count() const;

  void add(Sentence s);  // drops empty sentences
};

// Rule-based tokenizer: splits on Unicode whitespace, detaches leading and
// trailing punctuation, keeps the trailing period of acronym-shaped tokens
// (single-letter/period alternation like "U.K."). Idempotent on its own
// output rejoined with single spaces.
Sentence tokenize(std::string_view text, bool lowercase = false);

bool is_acronym_shaped(std::string_view token);

// Uniform sample without replacement of min(n, |corpus|) sentences.
Corpus sample_sentences(const Corpus& corpus, std::size_t n, std::uint64_t seed);

// One sentence per line, tokens separated by single spaces. Blank lines are
// skipped on load.
Corpus load_corpus(const std::string& path, std::string language);
void save_corpus(const Corpus& corpus, const std::string& path);

}  // namespace umt
