#pragma once

#include <cstdint>
#include <string>
#include <unordered_map>
#include <vector>

#include "umt/corpus.hpp"

namespace umt {

inline constexpr const char* kBos = "<s>";
inline constexpr const char* kEos = "</s>";
inline constexpr const char* kUnk = "<unk>";

enum class DiscountMode { kKneserNey, kLaplace };

// Back-off n-gram language model over a closed vocabulary (observed types
// plus </s> and <unk>). Conditional distributions sum to one exactly for
// every history; scoring is total on arbitrary token sequences.
class NgramLm {
public:
  struct Entry {
    double log10_prob = 0.0;
    double log10_bow = 0.0;  // log10 1 for grams that are not contexts
  };
  using Gram = std::vector<std::uint32_t>;

  int order() const { return order_; }
  DiscountMode mode() const { return mode_; }
  bool fell_back_to_laplace() const { return fell_back_; }

  const std::vector<std::string>& vocab() const { return vocab_; }
  std::size_t gram_count(int k) const { return grams_[k - 1].size(); }

  // Token id, mapping unknown tokens to <unk>.
  std::uint32_t token_id(const std::string& token) const;
  std::uint32_t bos_id() const { return bos_id_; }
  std::uint32_t eos_id() const { return eos_id_; }
  std::uint32_t unk_id() const { return unk_id_; }

  // log10 p(word | context) with standard back-off. context holds the most
  // recent token last and may be any length (only the last order-1 are used).
  double log10_prob(const std::uint32_t* context, std::size_t len,
                    std::uint32_t word) const;
  double log10_prob(const std::vector<std::string>& context,
                    const std::string& word) const;

  // Sum of conditional log10 probabilities including the </s> term; OOV
  // tokens are mapped to <unk> both as predictions and as context.
  double score_sentence(const Sentence& sentence) const;

  const std::vector<std::pair<Gram, Entry>>& grams(int k) const {
    return grams_[k - 1];
  }

private:
  friend NgramLm train_lm(const Corpus&, int, DiscountMode);
  friend NgramLm load_arpa(const std::string&);

  void build_index();
  std::uint32_t intern(const std::string& token);

  int order_ = 0;
  DiscountMode mode_ = DiscountMode::kKneserNey;
  bool fell_back_ = false;
  std::vector<std::string> vocab_;  // id -> token, lexicographic
  std::unordered_map<std::string, std::uint32_t> token_ids_;
  std::uint32_t bos_id_ = 0, eos_id_ = 0, unk_id_ = 0;
  std::vector<std::vector<std::pair<Gram, Entry>>> grams_;  // per order, sorted
  std::unordered_map<std::uint64_t, Entry> index_;
};

// Interpolated modified Kneser-Ney with three discount levels; falls back to
// add-one estimation when the count-of-count statistics are degenerate.
NgramLm train_lm(const Corpus& corpus, int order,
                 DiscountMode mode = DiscountMode::kKneserNey);

// 10^(-total log10 prob / predicted tokens), </s> included per sentence.
double perplexity(const NgramLm& lm, const Corpus& corpus);

// Standard ARPA text format, log base 10. Save -> load -> save is
// byte-identical.
void save_arpa(const NgramLm& lm, const std::string& path);
NgramLm load_arpa(const std::string& path);

}  // namespace umt
