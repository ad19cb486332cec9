#pragma once

#include <string>
#include <unordered_map>
#include <unordered_set>
#include <utility>
#include <vector>

#include "umt/corpus.hpp"

namespace umt {

// Byte-pair encoding over whitespace-tokenized text. Words are split into
// codepoints with the end-of-word marker appended to the final one, then the
// learned merges are replayed in order. Applying and reverting is the
// identity on any tokenized sentence.
struct BpeModel {
  std::vector<std::pair<std::string, std::string>> merges;
  std::unordered_set<std::string> vocab;
  std::string end_of_word_marker = "</w>";

  std::size_t num_merges() const { return merges.size(); }
};

// Learns merges from the joint concatenation of the given corpora. Merges are
// ordered by descending pair frequency at the time of the merge; ties break
// lexicographically. Throws if the corpora contain no symbols.
BpeModel learn_bpe(const std::vector<const Corpus*>& corpora, std::size_t num_merges);
BpeModel learn_bpe(const Corpus& corpus, std::size_t num_merges);

// Encodes one tokenized sentence into subword units. Unseen characters pass
// through as singleton units.
Sentence apply_bpe(const BpeModel& model, const Sentence& sentence);
Sentence revert_bpe(const BpeModel& model, const Sentence& subwords);

Corpus apply_bpe(const BpeModel& model, const Corpus& corpus);

// Line 1 is "#bpe v1 <num_merges>", then one merge per line, order
// significant. Reload is bit-exact.
void save_bpe(const BpeModel& model, const std::string& path);
BpeModel load_bpe(const std::string& path);

// Stateful encoder caching per-word segmentations; apply_bpe delegates here.
class BpeEncoder {
public:
  explicit BpeEncoder(const BpeModel& model);
  const std::vector<std::string>& encode_word(const std::string& word) const;

private:
  const BpeModel& model_;
  std::unordered_map<std::string, std::size_t> rank_;
  mutable std::unordered_map<std::string, std::vector<std::string>> cache_;
};

}  // namespace umt
