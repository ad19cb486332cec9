#pragma once

#include <cstdint>

#include "umt/corpus.hpp"

namespace umt {

// Word-level corruption: independent drops followed by a bounded local
// shuffle. The output is never empty and no surviving token moves more than
// swap_window positions.
struct NoiseModel {
  double drop_probability = 0.1;
  int swap_window = 3;
  std::uint64_t rng_seed = 1;
};

Sentence apply_noise(const NoiseModel& model, const Sentence& sentence);

// Per-sentence seeds are derived from model.rng_seed and the sentence index.
Corpus apply_noise(const NoiseModel& model, const Corpus& corpus);

}  // namespace umt
