#pragma once

#include <Eigen/Core>
#include <cstdint>
#include <string>
#include <unordered_map>
#include <vector>

#include "umt/corpus.hpp"

namespace umt {

using MatrixRX = Eigen::Matrix<float, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;

// Reserved joiner between the two halves of a merged bigram phrase.
inline constexpr const char* kPhraseJoiner = "␣";

// Distributional phrase embeddings for one language: one row per phrase,
// vocabulary ordered by descending corpus frequency then lexicographically.
struct EmbeddingSpace {
  std::string language;
  int dimension = 0;
  std::vector<std::string> vocabulary;
  std::vector<long long> frequency;
  MatrixRX vectors;  // |vocab| x dimension

  std::unordered_map<std::string, int> index;

  int row_of(const std::string& phrase) const {
    auto it = index.find(phrase);
    return it == index.end() ? -1 : it->second;
  }
  void rebuild_index();
};

struct SgnsConfig {
  int dimension = 64;
  int window = 5;
  int negatives = 10;
  int epochs = 5;
  double learning_rate = 0.025;
  double subsample_threshold = 1e-4;
  int min_count = 5;
  std::uint64_t seed = 1;
};

// Paper-scale embedding settings; desk defaults above are smaller.
inline constexpr int kPaperEmbeddingDim = 512;
inline constexpr int kPaperWindow = 5;
inline constexpr int kPaperNegatives = 10;

// Joins adjacent token pairs whose association score
//   (count(ab) - min_count) * N / (count(a) * count(b))
// exceeds score_threshold, left to right without overlap, never across
// sentence boundaries.
Corpus merge_frequent_bigrams(const Corpus& corpus, long long min_count,
                              double score_threshold);

// Skip-gram with negative sampling, single-threaded and seed-deterministic.
EmbeddingSpace train_sgns(const Corpus& corpus, const SgnsConfig& config);

double cosine(Eigen::Ref<const Eigen::VectorXf> u, Eigen::Ref<const Eigen::VectorXf> v);
double cosine(Eigen::Ref<const Eigen::VectorXd> u, Eigen::Ref<const Eigen::VectorXd> v);

// Text format: "<vocab> <dim>" header then one "<phrase> <v1> ... <vd>" line
// per phrase at 9 significant digits; reload is bit-exact. A "<path>.counts"
// sidecar persists phrase frequencies.
void save_embeddings(const EmbeddingSpace& space, const std::string& path);
EmbeddingSpace load_embeddings(const std::string& path, std::string language);

// Splits a vocabulary entry on the phrase joiner into surface tokens.
std::vector<std::string> phrase_tokens(const std::string& phrase);
std::string phrase_surface(const std::string& phrase);  // joiner -> space

}  // namespace umt
