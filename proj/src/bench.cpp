#include "umt/bench.hpp"

#include <algorithm>
#include <set>
#include <stdexcept>

#include "umt/rng.hpp"
#include "umt/text.hpp"

namespace umt {

namespace {

const char* kFunctionWords[] = {
    "the", "of",  "and", "a",    "to",   "in",   "is",   "was",  "it",   "for",
    "on",  "with", "as",  "at",   "by",   "he",   "she",  "they", "we",   "be",
    "are", "this", "that", "from", "or",   "an",   "but",  "not",  "had",  "has",
    "have", "his", "her",  "its",  "were", "been", "will", "would", "there", "their"};
constexpr int kFunctionCount = 40;

std::string make_word(Rng& rng, bool target_side) {
  static const char* a_onsets[] = {"b", "d", "f", "g", "k", "l", "m", "n", "p", "r", "s", "t", "v"};
  static const char* a_vowels[] = {"a", "e", "i", "o", "u"};
  static const char* a_codas[] = {"", "n", "r", "s", "l"};
  static const char* b_onsets[] = {"zh", "ch", "sh", "kh", "th", "gr", "pl", "str", "z", "dr"};
  static const char* b_vowels[] = {"aa", "ee", "ii", "oo", "uu", "ai", "ou"};
  static const char* b_codas[] = {"", "k", "m", "t"};

  std::string word;
  const int syllables = 2 + static_cast<int>(rng.below(2));
  for (int s = 0; s < syllables; ++s) {
    if (target_side) {
      word += b_onsets[rng.below(10)];
      word += b_vowels[rng.below(7)];
      word += b_codas[rng.below(4)];
    } else {
      word += a_onsets[rng.below(13)];
      word += a_vowels[rng.below(5)];
      word += a_codas[rng.below(5)];
    }
  }
  return word;
}

std::vector<std::string> make_vocab(std::uint64_t seed, std::size_t size, bool target_side) {
  Rng rng(seed);
  std::set<std::string> used;
  std::vector<std::string> words;
  words.reserve(size);
  while (words.size() < size) {
    std::string w = make_word(rng, target_side);
    if (used.insert(w).second) words.push_back(std::move(w));
  }
  return words;
}

// Cumulative Zipf-like weights for index sampling.
std::vector<double> zipf_cdf(std::size_t n, double exponent, double shift) {
  std::vector<double> cdf(n);
  double acc = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    acc += 1.0 / std::pow(static_cast<double>(i) + shift, exponent);
    cdf[i] = acc;
  }
  for (auto& x : cdf) x /= acc;
  return cdf;
}

std::size_t sample_cdf(const std::vector<double>& cdf, Rng& rng) {
  const double u = rng.uniform();
  return static_cast<std::size_t>(
      std::lower_bound(cdf.begin(), cdf.end(), u) - cdf.begin());
}

}  // namespace

CipherBenchmark make_cipher_benchmark(const PipelineConfig& config) {
  const std::size_t n_sentences = static_cast<std::size_t>(config.bench_sentences);
  const std::size_t test_size = static_cast<std::size_t>(config.bench_test_size);
  if (n_sentences < 2 * test_size + 100)
    throw std::invalid_argument("make_cipher_benchmark: corpus too small for the test split");
  const std::size_t vocab_size = static_cast<std::size_t>(config.bench_vocab);

  const std::uint64_t base = static_cast<std::uint64_t>(config.seed);
  auto content = make_vocab(derive_seed(base, "bench:vocab"), vocab_size, false);

  const auto reseed_cdf = zipf_cdf(content.size(), 1.05, 2.0);
  const auto function_cdf = zipf_cdf(kFunctionCount, 1.0, 1.0);

  // Content words follow a walk over four fixed successors per word, giving
  // every type a concentrated context signature that survives resampling
  // into disjoint halves; function words and year tokens interleave as
  // low-information background.
  auto collocate = [&](int w, std::uint64_t pick) {
    static const std::uint64_t mul[4] = {7, 13, 29, 101};
    static const std::uint64_t add[4] = {1, 5, 11, 3};
    return static_cast<int>((static_cast<std::uint64_t>(w) * mul[pick] + add[pick]) %
                            content.size());
  };

  Rng rng(derive_seed(base, "bench:sentences"));
  std::vector<Sentence> base_sentences;
  base_sentences.reserve(n_sentences);
  while (base_sentences.size() < n_sentences) {
    Sentence sent;
    const int length = 6 + static_cast<int>(rng.below(9));
    int walk = static_cast<int>(sample_cdf(reseed_cdf, rng));
    for (int pos = 0; pos < length; ++pos) {
      const double r = rng.uniform();
      if (r < 0.22) {
        // Function words lean on the current content word so each one has a
        // distinctive support set instead of a uniform background.
        if (rng.uniform() < 0.75) {
          const std::uint64_t w = static_cast<std::uint64_t>(walk);
          sent.push_back(kFunctionWords[rng.below(2) == 0
                                            ? (w * 11 + 3) % kFunctionCount
                                            : (w * 17 + 9) % kFunctionCount]);
        } else {
          sent.push_back(kFunctionWords[sample_cdf(function_cdf, rng)]);
        }
      } else if (r < 0.26) {
        // Wide-range numerals: most numeral types are rare, so they fall
        // under the embedding min-count and copy through the decoder.
        sent.push_back(std::to_string(rng.below(100000)));
      } else {
        sent.push_back(content[walk]);
        walk = rng.uniform() < 0.85
                   ? collocate(walk, rng.below(4))
                   : static_cast<int>(sample_cdf(reseed_cdf, rng));
      }
    }
    sent.push_back(".");
    base_sentences.push_back(std::move(sent));
  }

  // Bijective cipher over every type; digits, punctuation, and a fraction of
  // word types are preserved. Preservation is stratified by frequency rank
  // (every k-th type), mirroring how shared strings between related
  // languages span the frequency range rather than only the tail.
  std::map<std::string, long long> type_counts;
  for (const auto& sent : base_sentences)
    for (const auto& tok : sent) ++type_counts[tok];
  std::vector<std::string> types;
  types.reserve(type_counts.size());
  for (const auto& [t, c] : type_counts) types.push_back(t);

  std::set<std::string> preserved;
  for (const auto& t : types)
    if (is_digit_string(t) || t == "." || t == "?" || t == "!" || t == ",")
      preserved.insert(t);
  if (config.bench_preserve_fraction > 0) {
    std::vector<const std::string*> by_rank;
    for (const auto& t : types)
      if (!preserved.count(t)) by_rank.push_back(&t);
    std::sort(by_rank.begin(), by_rank.end(),
              [&](const std::string* a, const std::string* b) {
                const long long ca = type_counts.at(*a), cb = type_counts.at(*b);
                if (ca != cb) return ca > cb;
                return *a < *b;
              });
    const auto stride =
        static_cast<std::size_t>(std::max(1.0, 1.0 / config.bench_preserve_fraction));
    for (std::size_t r = 0; r < by_rank.size(); r += stride)
      preserved.insert(*by_rank[r]);
  }

  std::size_t cipher_count = 0;
  for (const auto& t : types)
    if (!preserved.count(t)) ++cipher_count;
  auto cipher_words = make_vocab(derive_seed(base, "bench:cipher"), cipher_count, true);

  std::unordered_map<std::string, std::string> cipher;
  CipherBenchmark bench;
  std::size_t next = 0;
  for (const auto& t : types) {
    const std::string mapped = preserved.count(t) ? t : cipher_words[next++];
    cipher.emplace(t, mapped);
    bench.gold_dictionary.pairs.emplace_back(t, mapped);
  }
  bench.preserved_types = preserved.size();

  // Language B = cipher plus a lexicalized order transform: the adjacent
  // pair at each even offset swaps iff a hash of the two source tokens falls
  // under swap_probability. The transform is a deterministic function of the
  // sentence, so gold references are well defined, monotone word-by-word
  // translation loses order systematically, and iterations can recover the
  // swaps through two-word phrase pairs.
  const auto swap_limit =
      static_cast<std::uint64_t>(config.bench_swap_probability * 10000.0);
  auto to_target = [&](const Sentence& sent) {
    Sentence out;
    out.reserve(sent.size());
    for (const auto& tok : sent) out.push_back(cipher.at(tok));
    for (std::size_t i = 0; i + 1 < out.size(); i += 2) {
      if (fnv1a(sent[i] + '\x1f' + sent[i + 1]) % 10000 < swap_limit)
        std::swap(out[i], out[i + 1]);
    }
    return out;
  };

  const std::size_t train_total = n_sentences - test_size;
  const std::size_t half = train_total / 2;

  bench.src_half.language = config.source_language;
  for (std::size_t i = 0; i < half; ++i)
    bench.src_half.add(base_sentences[i]);

  bench.tgt_half.language = config.target_language;
  for (std::size_t i = half; i < train_total; ++i)
    bench.tgt_half.add(to_target(base_sentences[i]));

  bench.gold_src2tgt.inputs.language = config.source_language;
  bench.gold_src2tgt.references.language = config.target_language;
  bench.gold_tgt2src.inputs.language = config.target_language;
  bench.gold_tgt2src.references.language = config.source_language;
  for (std::size_t i = train_total; i < n_sentences; ++i) {
    const Sentence& a = base_sentences[i];
    Sentence b = to_target(a);
    bench.gold_src2tgt.inputs.add(a);
    bench.gold_src2tgt.references.add(b);
    bench.gold_tgt2src.inputs.add(b);
    bench.gold_tgt2src.references.add(a);
  }
  return bench;
}

std::vector<IterationReport> run_synthbench(const PipelineConfig& config) {
  CipherBenchmark bench = make_cipher_benchmark(config);

  Pipeline pipeline(config);
  pipeline.set_corpora(bench.src_half, bench.tgt_half);
  pipeline.set_gold(bench.gold_src2tgt, bench.gold_tgt2src);
  pipeline.set_gold_dictionary(bench.gold_dictionary);

  const auto dir = std::filesystem::path(config.artifact_dir);
  std::filesystem::create_directories(dir / "corpora");
  save_corpus(bench.gold_src2tgt.inputs, (dir / "corpora" / "test.src.txt").string());
  save_corpus(bench.gold_src2tgt.references, (dir / "corpora" / "test.tgt.txt").string());
  save_dictionary(bench.gold_dictionary, (dir / "corpora" / "gold_dictionary.tsv").string());

  return pipeline.run(static_cast<int>(config.iterations));
}

}  // namespace umt
