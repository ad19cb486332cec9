#include "umt/noise.hpp"

#include <algorithm>
#include <numeric>
#include <stdexcept>

#include "umt/rng.hpp"

namespace umt {

namespace {

Sentence apply_noise_seeded(const NoiseModel& model, const Sentence& sentence,
                            std::uint64_t seed) {
  if (sentence.empty()) throw std::invalid_argument("apply_noise: empty sentence");
  if (model.drop_probability < 0.0 || model.drop_probability > 1.0)
    throw std::invalid_argument("apply_noise: drop_probability outside [0,1]");

  Rng rng(seed);
  std::vector<std::size_t> kept;
  kept.reserve(sentence.size());
  for (std::size_t i = 0; i < sentence.size(); ++i)
    if (rng.uniform() >= model.drop_probability) kept.push_back(i);
  if (kept.empty()) kept.push_back(0);

  // Jitter in [0, k+1) and a stable sort bound displacement by k.
  std::vector<double> key(kept.size());
  for (std::size_t i = 0; i < kept.size(); ++i)
    key[i] = static_cast<double>(i) + rng.uniform() * (model.swap_window + 1);
  std::vector<std::size_t> order(kept.size());
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(),
                   [&](std::size_t a, std::size_t b) { return key[a] < key[b]; });

  Sentence out;
  out.reserve(kept.size());
  for (auto pos : order) out.push_back(sentence[kept[pos]]);
  return out;
}

}  // namespace

Sentence apply_noise(const NoiseModel& model, const Sentence& sentence) {
  return apply_noise_seeded(model, sentence, model.rng_seed);
}

Corpus apply_noise(const NoiseModel& model, const Corpus& corpus) {
  Corpus out;
  out.language = corpus.language;
  out.sentences.reserve(corpus.size());
  for (std::size_t i = 0; i < corpus.size(); ++i) {
    std::uint64_t x = model.rng_seed + 0x9e3779b97f4a7c15ULL * (i + 1);
    out.add(apply_noise_seeded(model, corpus.sentences[i], Rng::splitmix64(x)));
  }
  return out;
}

}  // namespace umt
