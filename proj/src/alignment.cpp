#include "umt/alignment.hpp"

#include <Eigen/Dense>
#include <Eigen/SVD>
#include <algorithm>
#include <map>
#include <numeric>
#include <sstream>
#include <stdexcept>

#include "umt/rng.hpp"
#include "umt/text.hpp"

namespace umt {

double RotationMap::orthogonality_error() const {
  const Eigen::MatrixXd gram = w.transpose() * w;
  return (gram - Eigen::MatrixXd::Identity(w.cols(), w.cols())).norm();
}

EmbeddingSpace centered_normalized(const EmbeddingSpace& space) {
  EmbeddingSpace out = space;
  Eigen::MatrixXd m = space.vectors.cast<double>();
  const Eigen::RowVectorXd mean = m.colwise().mean();
  m.rowwise() -= mean;
  for (Eigen::Index i = 0; i < m.rows(); ++i) {
    const double n = m.row(i).norm();
    if (n > 0) m.row(i) /= n;
  }
  out.vectors = m.cast<float>();
  return out;
}

SeedDictionary build_seed_dictionary(const EmbeddingSpace& src,
                                     const EmbeddingSpace& tgt,
                                     std::size_t max_pairs) {
  struct Hit {
    long long combined;
    const std::string* phrase;
  };
  std::vector<Hit> hits;
  for (std::size_t i = 0; i < src.vocabulary.size(); ++i) {
    const int j = tgt.row_of(src.vocabulary[i]);
    if (j < 0) continue;
    hits.push_back({src.frequency[i] + tgt.frequency[j], &src.vocabulary[i]});
  }
  std::sort(hits.begin(), hits.end(), [](const Hit& a, const Hit& b) {
    if (a.combined != b.combined) return a.combined > b.combined;
    return *a.phrase < *b.phrase;
  });
  if (hits.size() > max_pairs) hits.resize(max_pairs);

  SeedDictionary dict;
  dict.pairs.reserve(hits.size());
  for (const auto& h : hits) dict.pairs.emplace_back(*h.phrase, *h.phrase);
  if (dict.pairs.size() < static_cast<std::size_t>(src.dimension) + 1)
    throw std::runtime_error("build_seed_dictionary: insufficient seed (" +
                             std::to_string(dict.pairs.size()) + " pairs)");
  return dict;
}

RotationMap procrustes(const EmbeddingSpace& src, const EmbeddingSpace& tgt,
                       const SeedDictionary& seed) {
  if (seed.pairs.empty()) throw std::invalid_argument("procrustes: empty seed");
  const int dim = src.dimension;
  if (dim != tgt.dimension) throw std::invalid_argument("procrustes: dimension mismatch");

  Eigen::MatrixXd x(seed.pairs.size(), dim), y(seed.pairs.size(), dim);
  Eigen::Index n = 0;
  for (const auto& [s, t] : seed.pairs) {
    const int i = src.row_of(s);
    const int j = tgt.row_of(t);
    if (i < 0 || j < 0) continue;
    x.row(n) = src.vectors.row(i).cast<double>();
    y.row(n) = tgt.vectors.row(j).cast<double>();
    ++n;
  }
  if (n == 0) throw std::invalid_argument("procrustes: no seed pair is in vocabulary");
  const Eigen::MatrixXd m = y.topRows(n).transpose() * x.topRows(n);

  Eigen::JacobiSVD<Eigen::MatrixXd> svd(m, Eigen::ComputeFullU | Eigen::ComputeFullV);
  const auto& sv = svd.singularValues();
  if (sv(0) <= 0 || sv(sv.size() - 1) < 1e-12 * sv(0))
    throw std::runtime_error("procrustes: degenerate seed");

  RotationMap map;
  map.w = svd.matrixU() * svd.matrixV().transpose();
  map.source_language = src.language;
  map.target_language = tgt.language;
  return map;
}

namespace {

Eigen::MatrixXd normalized_rows(const MatrixRX& m, int limit) {
  const int rows = limit < 0 ? static_cast<int>(m.rows())
                             : std::min<int>(limit, static_cast<int>(m.rows()));
  Eigen::MatrixXd out = m.topRows(rows).cast<double>();
  for (Eigen::Index i = 0; i < out.rows(); ++i) {
    const double n = out.row(i).norm();
    if (n > 0) out.row(i) /= n;
  }
  return out;
}

// Mean of the `nb` largest values, accumulated via a bounded insertion list.
class TopMean {
public:
  explicit TopMean(int nb) : cap_(nb) {}
  void offer(double v) {
    if (static_cast<int>(vals_.size()) < cap_) {
      vals_.push_back(v);
      std::push_heap(vals_.begin(), vals_.end(), std::greater<>());
    } else if (v > vals_.front()) {
      std::pop_heap(vals_.begin(), vals_.end(), std::greater<>());
      vals_.back() = v;
      std::push_heap(vals_.begin(), vals_.end(), std::greater<>());
    }
  }
  double mean() const {
    if (vals_.empty()) return 0.0;
    return std::accumulate(vals_.begin(), vals_.end(), 0.0) /
           static_cast<double>(vals_.size());
  }

private:
  int cap_;
  std::vector<double> vals_;  // min-heap
};

}  // namespace

CslsRetriever::CslsRetriever(const RotationMap& map, const EmbeddingSpace& src,
                             const EmbeddingSpace& tgt, int src_limit,
                             int tgt_limit, int neighborhood, bool plain_cosine)
    : tgt_space_(tgt), plain_cosine_(plain_cosine) {
  Eigen::MatrixXd src_n = normalized_rows(src.vectors, src_limit);
  mapped_src_ = src_n * map.w.transpose();
  // W is orthogonal, but renormalize so cosines are exact dot products even
  // for slightly off-orthogonal maps loaded from text.
  for (Eigen::Index i = 0; i < mapped_src_.rows(); ++i) {
    const double n = mapped_src_.row(i).norm();
    if (n > 0) mapped_src_.row(i) /= n;
  }
  tgt_ = normalized_rows(tgt.vectors, tgt_limit);

  r_src_ = Eigen::VectorXd::Zero(mapped_src_.rows());
  r_tgt_ = Eigen::VectorXd::Zero(tgt_.rows());
  if (plain_cosine_) return;

  std::vector<TopMean> tgt_top(tgt_.rows(), TopMean(neighborhood));
  const Eigen::Index block = 512;
  std::vector<double> row_copy(tgt_.rows());
  for (Eigen::Index lo = 0; lo < mapped_src_.rows(); lo += block) {
    const Eigen::Index hi = std::min(mapped_src_.rows(), lo + block);
    const Eigen::MatrixXd sims = mapped_src_.middleRows(lo, hi - lo) * tgt_.transpose();
    for (Eigen::Index r = 0; r < sims.rows(); ++r) {
      TopMean src_top(neighborhood);
      for (Eigen::Index j = 0; j < sims.cols(); ++j) {
        const double v = sims(r, j);
        src_top.offer(v);
        tgt_top[j].offer(v);
      }
      r_src_(lo + r) = src_top.mean();
    }
  }
  for (Eigen::Index j = 0; j < tgt_.rows(); ++j) r_tgt_(j) = tgt_top[j].mean();
}

Eigen::VectorXd CslsRetriever::cosines(int src_row) const {
  return tgt_ * mapped_src_.row(src_row).transpose();
}

std::vector<ScoredNeighbor> CslsRetriever::top_k(int src_row, int k) const {
  const Eigen::VectorXd cos = cosines(src_row);
  Eigen::VectorXd score;
  if (plain_cosine_)
    score = cos;
  else
    score = 2.0 * cos - Eigen::VectorXd::Constant(cos.size(), r_src_(src_row)) - r_tgt_;

  std::vector<int> idx(cos.size());
  std::iota(idx.begin(), idx.end(), 0);
  auto better = [&](int a, int b) {
    if (score(a) != score(b)) return score(a) > score(b);
    if (tgt_space_.frequency[a] != tgt_space_.frequency[b])
      return tgt_space_.frequency[a] > tgt_space_.frequency[b];
    return tgt_space_.vocabulary[a] < tgt_space_.vocabulary[b];
  };
  const int take = std::min<int>(k, static_cast<int>(idx.size()));
  std::nth_element(idx.begin(), idx.begin() + take, idx.end(), better);
  idx.resize(take);
  std::sort(idx.begin(), idx.end(), better);

  std::vector<ScoredNeighbor> out;
  out.reserve(take);
  for (int j : idx)
    out.push_back({j, tgt_space_.vocabulary[j], score(j), cos(j)});
  return out;
}

std::vector<ScoredNeighbor> csls_neighbors(const RotationMap& map,
                                           const EmbeddingSpace& src,
                                           const EmbeddingSpace& tgt,
                                           const std::string& query, int k) {
  if (k < 1) throw std::invalid_argument("csls_neighbors: k < 1");
  const int row = src.row_of(query);
  if (row < 0) throw std::invalid_argument("csls_neighbors: query not in vocabulary: " + query);
  CslsRetriever retriever(map, src, tgt);
  return retriever.top_k(row, k);
}

double eval_p_at_1(const RotationMap& map, const EmbeddingSpace& src,
                   const EmbeddingSpace& tgt, const SeedDictionary& gold) {
  if (gold.pairs.empty()) throw std::invalid_argument("eval_p_at_1: empty gold");
  CslsRetriever retriever(map, src, tgt);
  std::size_t hits = 0;
  for (const auto& [s, t] : gold.pairs) {
    const int row = src.row_of(s);
    if (row < 0) continue;
    auto top = retriever.top_k(row, 1);
    if (!top.empty() && top[0].phrase == t) ++hits;
  }
  return static_cast<double>(hits) / static_cast<double>(gold.pairs.size());
}

AlignResult align_spaces(const EmbeddingSpace& src, const EmbeddingSpace& tgt,
                         const AlignOptions& options) {
  AlignResult result;
  result.seed = build_seed_dictionary(src, tgt, options.max_seed_pairs);

  if (options.seed_keep_fraction < 1.0) {
    // Keep a random fraction; used by the initialization-quality ablation.
    Rng rng(options.seed_rng);
    std::vector<std::pair<std::string, std::string>> kept;
    for (const auto& pair : result.seed.pairs)
      if (rng.uniform() < options.seed_keep_fraction) kept.push_back(pair);
    const std::size_t min_pairs = static_cast<std::size_t>(src.dimension) + 1;
    for (std::size_t i = 0; kept.size() < min_pairs && i < result.seed.pairs.size(); ++i)
      kept.push_back(result.seed.pairs[i]);
    result.seed.pairs = std::move(kept);
  }

  result.map = procrustes(src, tgt, result.seed);

  if (options.refine) {
    for (int round = 0; round < options.refine_rounds; ++round) {
      // Mutual CSLS top-1 matches over the frequent vocabulary re-estimate W.
      CslsRetriever forward(result.map, src, tgt, options.refine_vocab,
                            options.refine_vocab, options.neighborhood);
      RotationMap inv = result.map.inverse();
      CslsRetriever backward(inv, tgt, src, options.refine_vocab,
                             options.refine_vocab, options.neighborhood);
      std::vector<int> fwd(forward.source_count(), -1);
      for (int i = 0; i < forward.source_count(); ++i) {
        auto top = forward.top_k(i, 1);
        if (!top.empty()) fwd[i] = top[0].row;
      }
      SeedDictionary mutual;
      for (int j = 0; j < backward.source_count(); ++j) {
        auto top = backward.top_k(j, 1);
        if (top.empty()) continue;
        const int i = top[0].row;
        if (i >= 0 && i < static_cast<int>(fwd.size()) && fwd[i] == j)
          mutual.pairs.emplace_back(src.vocabulary[i], tgt.vocabulary[j]);
      }
      if (mutual.pairs.size() <= static_cast<std::size_t>(src.dimension)) break;
      result.map = procrustes(src, tgt, mutual);
      result.refinement_pairs = mutual.pairs.size();
    }
  }
  return result;
}

void save_dictionary(const SeedDictionary& dict, const std::string& path) {
  std::ostringstream ss;
  for (const auto& [s, t] : dict.pairs) ss << s << '\t' << t << '\n';
  write_file(path, ss.str());
}

SeedDictionary load_dictionary(const std::string& path) {
  SeedDictionary dict;
  for (const auto& line : read_lines(path)) {
    if (line.empty()) continue;
    const auto tab = line.find('\t');
    if (tab == std::string::npos)
      throw std::runtime_error("load_dictionary: missing tab: " + line);
    dict.pairs.emplace_back(line.substr(0, tab), line.substr(tab + 1));
  }
  return dict;
}

void save_rotation(const RotationMap& map, const std::string& path) {
  std::ostringstream ss;
  ss << map.w.rows() << '\n';
  for (Eigen::Index i = 0; i < map.w.rows(); ++i) {
    for (Eigen::Index j = 0; j < map.w.cols(); ++j) {
      if (j) ss << ' ';
      ss << format_g9(map.w(i, j));
    }
    ss << '\n';
  }
  write_file(path, ss.str());
}

RotationMap load_rotation(const std::string& path, std::string source_language,
                          std::string target_language) {
  auto lines = read_lines(path);
  if (lines.empty()) throw std::runtime_error("load_rotation: empty file");
  const int dim = std::stoi(lines[0]);
  RotationMap map;
  map.w.resize(dim, dim);
  for (int i = 0; i < dim; ++i) {
    auto parts = split_ws(lines.at(i + 1));
    if (static_cast<int>(parts.size()) != dim)
      throw std::runtime_error("load_rotation: bad row " + std::to_string(i));
    for (int j = 0; j < dim; ++j) map.w(i, j) = std::stod(parts[j]);
  }
  map.source_language = std::move(source_language);
  map.target_language = std::move(target_language);
  return map;
}

}  // namespace umt
