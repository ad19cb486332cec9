#pragma once

#include <Eigen/Core>
#include <string>
#include <vector>

#include "umt/embeddings.hpp"

namespace umt {

// Orthogonal map taking source-space vectors into the target space.
struct RotationMap {
  Eigen::MatrixXd w;
  std::string source_language;
  std::string target_language;

  RotationMap inverse() const { return {w.transpose(), target_language, source_language}; }
  double orthogonality_error() const;  // ||W^T W - I||_F
};

struct SeedDictionary {
  std::vector<std::pair<std::string, std::string>> pairs;
};

// Mean-centers then length-normalizes every vector; applied once before
// alignment so retrieval and induction see the same geometry.
EmbeddingSpace centered_normalized(const EmbeddingSpace& space);

// Identical strings present in both vocabularies (digit strings included),
// ordered by combined frequency then lexicographically, truncated to
// max_pairs. Throws "insufficient seed" below dimension+1 pairs.
SeedDictionary build_seed_dictionary(const EmbeddingSpace& src,
                                     const EmbeddingSpace& tgt,
                                     std::size_t max_pairs);

// W = U V^T from the SVD of TgtSeed^T * SrcSeed. Throws "degenerate seed" on
// a rank-deficient cross-covariance.
RotationMap procrustes(const EmbeddingSpace& src, const EmbeddingSpace& tgt,
                       const SeedDictionary& seed);

struct ScoredNeighbor {
  int row = -1;
  std::string phrase;
  double csls = 0.0;
  double cosine = 0.0;
};

// Dense CSLS retrieval state over (a frequency prefix of) two spaces:
//   csls(s, t) = 2 cos(W e(s), e(t)) - r_tgt(W e(s)) - r_src(e(t))
// with r the mean cosine to the `neighborhood` nearest neighbors on the
// other side. Rows are used in vocabulary order, most frequent first.
class CslsRetriever {
public:
  CslsRetriever(const RotationMap& map, const EmbeddingSpace& src,
                const EmbeddingSpace& tgt, int src_limit = -1,
                int tgt_limit = -1, int neighborhood = 10, bool plain_cosine = false);

  int source_count() const { return static_cast<int>(mapped_src_.rows()); }
  int target_count() const { return static_cast<int>(tgt_.rows()); }

  // Cosines of source row i against the whole target inventory.
  Eigen::VectorXd cosines(int src_row) const;
  // Top-k by CSLS; ties break by target frequency then lexicographically.
  std::vector<ScoredNeighbor> top_k(int src_row, int k) const;

  const Eigen::MatrixXd& mapped_source() const { return mapped_src_; }
  const Eigen::MatrixXd& target() const { return tgt_; }

private:
  const EmbeddingSpace& tgt_space_;
  Eigen::MatrixXd mapped_src_;  // normalized, rows in source vocab order
  Eigen::MatrixXd tgt_;         // normalized
  Eigen::VectorXd r_src_;       // penalty for each source row
  Eigen::VectorXd r_tgt_;       // penalty for each target row
  bool plain_cosine_ = false;
};

// Ranked CSLS neighbors of one source phrase. Throws on OOV queries.
std::vector<ScoredNeighbor> csls_neighbors(const RotationMap& map,
                                           const EmbeddingSpace& src,
                                           const EmbeddingSpace& tgt,
                                           const std::string& query, int k);

// Fraction of gold source entries whose CSLS top-1 equals the gold target.
double eval_p_at_1(const RotationMap& map, const EmbeddingSpace& src,
                   const EmbeddingSpace& tgt, const SeedDictionary& gold);

struct AlignOptions {
  std::size_t max_seed_pairs = 20000;
  bool refine = true;          // mutual-CSLS Procrustes refinement
  int refine_rounds = 1;
  int refine_vocab = 10000;    // most frequent rows considered per side
  int neighborhood = 10;
  double seed_keep_fraction = 1.0;  // ablation hook: degrade the seed
  std::uint64_t seed_rng = 1;
};

struct AlignResult {
  RotationMap map;
  SeedDictionary seed;
  std::size_t refinement_pairs = 0;
};

AlignResult align_spaces(const EmbeddingSpace& src, const EmbeddingSpace& tgt,
                         const AlignOptions& options);

// Dictionary file: "source<TAB>target" per line.
void save_dictionary(const SeedDictionary& dict, const std::string& path);
SeedDictionary load_dictionary(const std::string& path);

// Rotation file: first line the dimension, then one row per line, 9
// significant digits.
void save_rotation(const RotationMap& map, const std::string& path);
RotationMap load_rotation(const std::string& path, std::string source_language,
                          std::string target_language);

}  // namespace umt
