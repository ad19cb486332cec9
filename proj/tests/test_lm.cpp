#include <doctest.h>

#include <cmath>
#include <filesystem>

#include "oracles.hpp"
#include "umt/lm.hpp"
#include "umt/rng.hpp"
#include "umt/text.hpp"

using namespace umt;

namespace {

// Deterministic Zipf-ish toy corpus; rich enough for non-degenerate
// count-of-count statistics at orders up to 3.
Corpus toy_corpus(std::uint64_t seed, int sentences, int vocab) {
  Rng rng(seed);
  Corpus c;
  c.language = "toy";
  for (int s = 0; s < sentences; ++s) {
    Sentence sent;
    const int len = 3 + int(rng.below(8));
    for (int i = 0; i < len; ++i) {
      // Cubed uniform gives a heavy-tailed type distribution.
      const double u = rng.uniform();
      const int id = int(u * u * u * vocab);
      sent.push_back("w" + std::to_string(id < vocab ? id : vocab - 1));
    }
    c.add(sent);
  }
  // Rare types with exactly 1..4 distinct left contexts keep the
  // count-of-count buckets populated at every order.
  for (int k = 1; k <= 4; ++k)
    for (int v = 0; v < k; ++v)
      c.add({"w" + std::to_string(v), "r" + std::to_string(k)});
  return c;
}

std::vector<std::string> gram_tokens(const NgramLm& lm, const NgramLm::Gram& gram) {
  std::vector<std::string> out;
  for (auto id : gram) out.push_back(lm.vocab()[id]);
  return out;
}

// Exhaustive sum-to-one over every history of every length below the order,
// built from the closed vocabulary plus <s>.
void check_sum_to_one(const NgramLm& lm) {
  std::vector<std::uint32_t> predicted, context_ids;
  for (std::uint32_t id = 0; id < lm.vocab().size(); ++id) {
    context_ids.push_back(id);
    if (lm.vocab()[id] != kBos) predicted.push_back(id);
  }

  std::vector<std::vector<std::uint32_t>> histories{{}};
  for (int len = 1; len < lm.order(); ++len) {
    std::vector<std::vector<std::uint32_t>> next;
    for (const auto& h : histories)
      if (static_cast<int>(h.size()) == len - 1)
        for (auto id : context_ids) {
          auto h2 = h;
          h2.push_back(id);
          next.push_back(h2);
        }
    histories.insert(histories.end(), next.begin(), next.end());
  }

  for (const auto& h : histories) {
    double sum = 0.0;
    for (auto w : predicted) sum += std::pow(10.0, lm.log10_prob(h.data(), h.size(), w));
    CHECK(sum == doctest::Approx(1.0).epsilon(1e-6));
  }
}

}  // namespace

TEST_CASE("laplace unigram matches the closed-form add-one value") {
  Corpus c;
  c.add({"a", "a", "a", "b"});
  const NgramLm lm = train_lm(c, 1, DiscountMode::kLaplace);
  // V = {a, b, </s>, <unk>}: p(a) = (3+1)/(4+4) = 0.5.
  REQUIRE(lm.vocab().size() == 5);  // + <s> as context-only type
  bool found = false;
  for (const auto& [gram, entry] : lm.grams(1)) {
    if (lm.vocab()[gram[0]] == "a") {
      CHECK(std::pow(10.0, entry.log10_prob) == doctest::Approx(0.5).epsilon(1e-12));
      found = true;
    }
  }
  CHECK(found);
  check_sum_to_one(lm);
}

TEST_CASE("order-1 model on tiny corpus normalizes") {
  Corpus c;
  c.add({"a", "b"});
  const NgramLm lm = train_lm(c, 1, DiscountMode::kKneserNey);
  // Degenerate count-of-counts on this corpus: falls back to add-one.
  CHECK(lm.fell_back_to_laplace());
  check_sum_to_one(lm);
}

TEST_CASE("kneser-ney matches the brute-force oracle on every stored probability") {
  const Corpus c = toy_corpus(5, 120, 18);
  for (int order = 1; order <= 3; ++order) {
    const NgramLm lm = train_lm(c, order, DiscountMode::kKneserNey);
    REQUIRE_MESSAGE(!lm.fell_back_to_laplace(), "toy corpus must be non-degenerate");
    const oracle::KneserNey ref(c.sentences, order);
    REQUIRE(!ref.degenerate());

    std::size_t checked = 0;
    for (int k = 1; k <= order; ++k) {
      for (const auto& [gram, entry] : lm.grams(k)) {
        const auto tokens = gram_tokens(lm, gram);
        if (tokens.back() == kBos) continue;  // placeholder entry
        const std::vector<std::string> history(tokens.begin(), tokens.end() - 1);
        const double expected = ref.prob(history, tokens.back());
        const double actual = std::pow(10.0, entry.log10_prob);
        CHECK(std::abs(actual - expected) < 1e-9);
        ++checked;
      }
    }
    CHECK(checked > 0);
  }
}

TEST_CASE("sum-to-one holds exhaustively on three corpora, all orders up to 3") {
  const Corpus corpora[] = {toy_corpus(5, 120, 18), toy_corpus(17, 120, 12),
                            toy_corpus(99, 60, 8)};
  for (const auto& c : corpora) {
    for (int order = 1; order <= 3; ++order) {
      check_sum_to_one(train_lm(c, order, DiscountMode::kKneserNey));
      check_sum_to_one(train_lm(c, order, DiscountMode::kLaplace));
    }
  }
}

TEST_CASE("stored log probabilities are finite and non-positive") {
  const Corpus c = toy_corpus(5, 100, 18);
  const NgramLm lm = train_lm(c, 3, DiscountMode::kKneserNey);
  for (int k = 1; k <= 3; ++k)
    for (const auto& [gram, entry] : lm.grams(k)) {
      CHECK(std::isfinite(entry.log10_prob));
      CHECK(entry.log10_prob <= 0.0);
      CHECK(std::isfinite(entry.log10_bow));
    }
}

TEST_CASE("score_sentence boundary and ordering behavior") {
  Corpus c;
  c.add({"a", "b"});
  const NgramLm lm = train_lm(c, 2, DiscountMode::kKneserNey);

  // Empty sentence scores exactly log p(</s> | <s>).
  const std::vector<std::string> bos_ctx{kBos};
  CHECK(lm.score_sentence({}) ==
        doctest::Approx(lm.log10_prob(bos_ctx, kEos)).epsilon(1e-12));

  // The training order outscores its permutation for order >= 2.
  CHECK(lm.score_sentence({"a", "b"}) > lm.score_sentence({"b", "a"}));

  // Order-1 scores are permutation-invariant.
  const NgramLm uni = train_lm(c, 1, DiscountMode::kKneserNey);
  CHECK(uni.score_sentence({"a", "b"}) ==
        doctest::Approx(uni.score_sentence({"b", "a"})).epsilon(1e-12));
}

TEST_CASE("scoring is total on arbitrary tokens") {
  const Corpus c = toy_corpus(5, 50, 10);
  const NgramLm lm = train_lm(c, 3, DiscountMode::kKneserNey);
  CHECK(std::isfinite(lm.score_sentence({"never-seen", "tokens", "<s>", "</s>", "w1"})));
  CHECK(lm.score_sentence({"zzz"}) < 0.0);
}

TEST_CASE("uniform unigram model has perplexity |V|") {
  // Hand-written ARPA: uniform over {a, b, </s>, <unk>}.
  const double lp = std::log10(0.25);
  std::string arpa = "\\data\\\nngram 1=5\n\n\\1-grams:\n";
  arpa += format_g9(lp) + "\t</s>\n";
  arpa += "-99\t<s>\n";
  arpa += format_g9(lp) + "\t<unk>\n";
  arpa += format_g9(lp) + "\ta\n";
  arpa += format_g9(lp) + "\tb\n";
  arpa += "\n\\end\\\n";
  const auto path = std::filesystem::temp_directory_path() / "umt_uniform.arpa";
  write_file(path.string(), arpa);
  const NgramLm lm = load_arpa(path.string());

  Corpus c;
  c.add({"a", "b", "a"});
  c.add({"b"});
  CHECK(perplexity(lm, c) == doctest::Approx(4.0).epsilon(1e-9));
  std::filesystem::remove(path);
}

TEST_CASE("perplexity of the sharper model is lower on training data") {
  const Corpus c = toy_corpus(5, 120, 18);
  const NgramLm kn = train_lm(c, 3, DiscountMode::kKneserNey);
  const NgramLm laplace = train_lm(c, 3, DiscountMode::kLaplace);
  const double p_kn = perplexity(kn, c);
  const double p_laplace = perplexity(laplace, c);
  CHECK(p_kn >= 1.0);
  CHECK(p_laplace >= 1.0);
  CHECK(p_kn <= p_laplace);
}

TEST_CASE("arpa roundtrip is byte-identical") {
  const Corpus c = toy_corpus(5, 150, 12);
  for (const auto mode : {DiscountMode::kKneserNey, DiscountMode::kLaplace}) {
    const NgramLm lm = train_lm(c, 3, mode);
    const auto p1 = std::filesystem::temp_directory_path() / "umt_rt1.arpa";
    const auto p2 = std::filesystem::temp_directory_path() / "umt_rt2.arpa";
    save_arpa(lm, p1.string());
    const NgramLm re = load_arpa(p1.string());
    save_arpa(re, p2.string());
    CHECK(read_file(p1.string()) == read_file(p2.string()));

    // Reload scores identically on a probe.
    CHECK(re.score_sentence({"w1", "w2", "w0"}) ==
          doctest::Approx(lm.score_sentence({"w1", "w2", "w0"})).epsilon(1e-7));
    std::filesystem::remove(p1);
    std::filesystem::remove(p2);
  }
}

TEST_CASE("train_lm rejects bad input") {
  Corpus empty;
  CHECK_THROWS(train_lm(empty, 2));
  Corpus c;
  c.add({"a"});
  CHECK_THROWS(train_lm(c, 0));
}
