#include "umt/phrase_table.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>
#include <stdexcept>

#include "umt/text.hpp"

namespace umt {

const std::string LexicalTable::kNull = "<null>";

std::size_t PhraseTable::size() const {
  std::size_t n = 0;
  for (const auto& [src, targets] : entries) n += targets.size();
  return n;
}

const std::vector<PhraseEntry>* PhraseTable::lookup(const std::string& source) const {
  auto it = entries.find(source);
  return it == entries.end() ? nullptr : &it->second;
}

void PhraseTable::sort_entries() {
  for (auto& [src, targets] : entries)
    std::sort(targets.begin(), targets.end(), [](const PhraseEntry& a, const PhraseEntry& b) {
      if (a.p_tgt_given_src != b.p_tgt_given_src)
        return a.p_tgt_given_src > b.p_tgt_given_src;
      return a.target < b.target;
    });
}

PhraseTable induce_unsupervised(const EmbeddingSpace& src, const EmbeddingSpace& tgt,
                                const RotationMap& map, double temperature,
                                int top_k, int max_src_phrases) {
  if (temperature <= 0) throw std::invalid_argument("induce_unsupervised: T <= 0");
  if (top_k < 1 || max_src_phrases < 1)
    throw std::invalid_argument("induce_unsupervised: bad limits");
  if (src.vocabulary.empty() || tgt.vocabulary.empty())
    throw std::invalid_argument("induce_unsupervised: untrained embedding space");
  if (src.dimension != static_cast<int>(map.w.cols()))
    throw std::invalid_argument("induce_unsupervised: map/space dimension mismatch");

  constexpr double kProbFloor = 1e-6;

  CslsRetriever retriever(map, src, tgt, max_src_phrases, max_src_phrases);
  const int n_src = retriever.source_count();
  const int n_tgt = retriever.target_count();

  // Softmax normalizers over the full candidate inventories, both directions.
  Eigen::VectorXd z_fwd = Eigen::VectorXd::Zero(n_src);
  Eigen::VectorXd z_rev = Eigen::VectorXd::Zero(n_tgt);
  for (int i = 0; i < n_src; ++i) {
    const Eigen::VectorXd cos = retriever.cosines(i);
    const Eigen::VectorXd ex = (cos / temperature).array().exp();
    z_fwd(i) = ex.sum();
    z_rev += ex;
  }

  PhraseTable table;
  table.source_language = src.language;
  table.target_language = tgt.language;
  table.max_phrase_len = 2;  // unigrams plus merged bigrams

  for (int i = 0; i < n_src; ++i) {
    auto neighbors = retriever.top_k(i, top_k);
    std::vector<PhraseEntry> targets;
    targets.reserve(neighbors.size());
    for (const auto& nb : neighbors) {
      const double ex = std::exp(nb.cosine / temperature);
      const double p_fwd = ex / z_fwd(i);
      if (p_fwd < kProbFloor) continue;
      PhraseEntry entry;
      entry.target = phrase_surface(tgt.vocabulary[nb.row]);
      entry.p_tgt_given_src = p_fwd;
      entry.p_src_given_tgt = ex / z_rev(nb.row);
      targets.push_back(std::move(entry));
    }
    if (!targets.empty())
      table.entries.emplace(phrase_surface(src.vocabulary[i]), std::move(targets));
  }
  table.sort_entries();
  return table;
}

PhraseTable transpose_table(const PhraseTable& table) {
  PhraseTable out;
  out.source_language = table.target_language;
  out.target_language = table.source_language;
  out.max_phrase_len = table.max_phrase_len;
  for (const auto& [src, targets] : table.entries)
    for (const auto& entry : targets) {
      PhraseEntry rev;
      rev.target = src;
      rev.p_tgt_given_src = entry.p_src_given_tgt;
      rev.p_src_given_tgt = entry.p_tgt_given_src;
      out.entries[entry.target].push_back(std::move(rev));
    }
  out.sort_entries();
  return out;
}

double LexicalTable::prob(const std::string& src, const std::string& tgt) const {
  auto it = t.find(src);
  if (it == t.end()) return 0.0;
  auto jt = it->second.find(tgt);
  return jt == it->second.end() ? 0.0 : jt->second;
}

LexicalTable ibm1_em(const SyntheticBitext& bitext, int iterations) {
  if (bitext.size() == 0) throw std::invalid_argument("ibm1_em: empty bitext");
  if (iterations < 1) throw std::invalid_argument("ibm1_em: iterations < 1");

  // Distinct target vocabulary size fixes the uniform initialization.
  std::set<std::string> tgt_vocab;
  for (const auto& sent : bitext.target)
    for (const auto& tok : sent) tgt_vocab.insert(tok);
  const double uniform = 1.0 / static_cast<double>(tgt_vocab.size());

  LexicalTable table;
  for (std::size_t p = 0; p < bitext.size(); ++p) {
    for (const auto& tgt : bitext.target[p]) {
      table.t[LexicalTable::kNull].emplace(tgt, uniform);
      for (const auto& src : bitext.source[p]) table.t[src].emplace(tgt, uniform);
    }
  }

  for (int iter = 0; iter < iterations; ++iter) {
    std::unordered_map<std::string, std::unordered_map<std::string, double>> counts;
    std::unordered_map<std::string, double> totals;
    double log_likelihood = 0.0;

    for (std::size_t p = 0; p < bitext.size(); ++p) {
      const Sentence& src = bitext.source[p];
      const Sentence& tgt = bitext.target[p];
      if (src.empty() || tgt.empty()) continue;
      const double len_norm = 1.0 / static_cast<double>(src.size() + 1);
      for (const auto& tw : tgt) {
        double z = table.prob(LexicalTable::kNull, tw);
        for (const auto& sw : src) z += table.prob(sw, tw);
        log_likelihood += std::log(z * len_norm);
        if (z <= 0) continue;
        const double null_share = table.prob(LexicalTable::kNull, tw) / z;
        counts[LexicalTable::kNull][tw] += null_share;
        totals[LexicalTable::kNull] += null_share;
        for (const auto& sw : src) {
          const double share = table.prob(sw, tw) / z;
          counts[sw][tw] += share;
          totals[sw] += share;
        }
      }
    }
    table.log_likelihoods.push_back(log_likelihood);

    for (auto& [sw, row] : table.t) {
      const double total = totals[sw];
      auto& count_row = counts[sw];
      for (auto& [tw, prob] : row) {
        auto it = count_row.find(tw);
        prob = (total > 0 && it != count_row.end()) ? it->second / total : 0.0;
      }
    }
  }
  return table;
}

namespace {

// Viterbi links under a lexical table: for each target position, the best
// source position or none when NULL wins. Ties go to the leftmost source.
void viterbi_links(const Sentence& src, const Sentence& tgt,
                   const LexicalTable& table, bool swap_roles,
                   std::set<std::pair<int, int>>* out) {
  for (std::size_t j = 0; j < tgt.size(); ++j) {
    double best = table.prob(LexicalTable::kNull, tgt[j]);
    int best_i = -1;
    for (std::size_t i = 0; i < src.size(); ++i) {
      const double p = table.prob(src[i], tgt[j]);
      if (p > best) {
        best = p;
        best_i = static_cast<int>(i);
      }
    }
    if (best_i >= 0) {
      if (swap_roles)
        out->insert({static_cast<int>(j), best_i});
      else
        out->insert({best_i, static_cast<int>(j)});
    }
  }
}

}  // namespace

AlignmentResult align_and_symmetrize(const SyntheticBitext& bitext,
                                     const LexicalTable& forward,
                                     const LexicalTable& backward) {
  AlignmentResult result;
  result.alignments.resize(bitext.size());
  for (std::size_t p = 0; p < bitext.size(); ++p) {
    const Sentence& src = bitext.source[p];
    const Sentence& tgt = bitext.target[p];
    if (src.empty() || tgt.empty()) {
      ++result.skipped;
      continue;
    }
    std::set<std::pair<int, int>> fwd, bwd;
    viterbi_links(src, tgt, forward, false, &fwd);
    viterbi_links(tgt, src, backward, true, &bwd);

    std::set<std::pair<int, int>> aligned;
    std::vector<std::pair<int, int>> union_links;
    for (const auto& link : fwd) {
      if (bwd.count(link)) aligned.insert(link);
      union_links.push_back(link);
    }
    for (const auto& link : bwd)
      if (!fwd.count(link)) union_links.push_back(link);
    std::sort(union_links.begin(), union_links.end());

    std::vector<bool> src_covered(src.size(), false), tgt_covered(tgt.size(), false);
    for (const auto& [i, j] : aligned) {
      src_covered[i] = true;
      tgt_covered[j] = true;
    }

    // grow-diag: add union links adjacent (incl. diagonals) to the current
    // alignment while one of their endpoints is still uncovered.
    bool changed = true;
    while (changed) {
      changed = false;
      for (const auto& [i, j] : union_links) {
        if (aligned.count({i, j})) continue;
        if (src_covered[i] && tgt_covered[j]) continue;
        bool adjacent = false;
        for (int di = -1; di <= 1 && !adjacent; ++di)
          for (int dj = -1; dj <= 1 && !adjacent; ++dj) {
            if (di == 0 && dj == 0) continue;
            if (aligned.count({i + di, j + dj})) adjacent = true;
          }
        if (adjacent) {
          aligned.insert({i, j});
          src_covered[i] = true;
          tgt_covered[j] = true;
          changed = true;
        }
      }
    }
    result.alignments[p].links = std::move(aligned);
  }
  return result;
}

PhraseTable extract_phrases(const SyntheticBitext& bitext,
                            const std::vector<AlignmentMatrix>& alignments,
                            int max_len) {
  if (alignments.size() != bitext.size())
    throw std::invalid_argument("extract_phrases: alignment/bitext size mismatch");
  if (max_len < 1) throw std::invalid_argument("extract_phrases: max_len < 1");

  std::map<std::pair<std::string, std::string>, long long> pair_counts;
  std::map<std::string, long long> src_counts, tgt_counts;

  for (std::size_t p = 0; p < bitext.size(); ++p) {
    const Sentence& src = bitext.source[p];
    const Sentence& tgt = bitext.target[p];
    const auto& links = alignments[p].links;
    if (links.empty()) continue;

    std::vector<bool> tgt_aligned(tgt.size(), false);
    for (const auto& [i, j] : links) tgt_aligned[j] = true;

    const int slen = static_cast<int>(src.size());
    for (int i1 = 0; i1 < slen; ++i1) {
      for (int i2 = i1; i2 < std::min(slen, i1 + max_len); ++i2) {
        // Bounding target span of links inside [i1, i2].
        int j1 = static_cast<int>(tgt.size()), j2 = -1;
        bool outside = false;
        for (const auto& [i, j] : links) {
          if (i >= i1 && i <= i2) {
            j1 = std::min(j1, j);
            j2 = std::max(j2, j);
          }
        }
        if (j2 < 0) continue;  // no internal link
        // Consistency: no link from the target span back outside the source span.
        for (const auto& [i, j] : links)
          if (j >= j1 && j <= j2 && (i < i1 || i > i2)) {
            outside = true;
            break;
          }
        if (outside) continue;
        if (j2 - j1 + 1 > max_len) continue;

        const std::string src_phrase =
            join(Sentence(src.begin() + i1, src.begin() + i2 + 1));
        // The bounded span plus its extensions over unaligned boundary
        // words enumerate every consistent target span.
        for (int lo = j1; lo >= 0 && (lo == j1 || !tgt_aligned[lo]); --lo) {
          for (int hi = j2; hi < static_cast<int>(tgt.size()) && (hi == j2 || !tgt_aligned[hi]);
               ++hi) {
            if (hi - lo + 1 > max_len) continue;
            const std::string tgt_phrase =
                join(Sentence(tgt.begin() + lo, tgt.begin() + hi + 1));
            ++pair_counts[{src_phrase, tgt_phrase}];
            ++src_counts[src_phrase];
            ++tgt_counts[tgt_phrase];
          }
        }
      }
    }
  }

  PhraseTable table;
  table.source_language = bitext.source_language;
  table.target_language = bitext.target_language;
  table.max_phrase_len = max_len;
  for (const auto& [pair, count] : pair_counts) {
    PhraseEntry entry;
    entry.target = pair.second;
    entry.p_tgt_given_src =
        static_cast<double>(count) / static_cast<double>(src_counts[pair.first]);
    entry.p_src_given_tgt =
        static_cast<double>(count) / static_cast<double>(tgt_counts[pair.second]);
    table.entries[pair.first].push_back(std::move(entry));
  }
  table.sort_entries();
  return table;
}

void prune_table(PhraseTable& table, std::size_t top_n) {
  for (auto& [src, targets] : table.entries)
    if (targets.size() > top_n) targets.resize(top_n);  // entries are sorted
}

void save_phrase_table(const PhraseTable& table, const std::string& path) {
  std::vector<const std::string*> sources;
  sources.reserve(table.entries.size());
  for (const auto& [src, targets] : table.entries) sources.push_back(&src);
  std::sort(sources.begin(), sources.end(),
            [](const std::string* a, const std::string* b) { return *a < *b; });

  std::ostringstream ss;
  for (const auto* src : sources)
    for (const auto& entry : table.entries.at(*src))
      ss << *src << " ||| " << entry.target << " ||| "
         << format_g9(entry.p_tgt_given_src) << ' '
         << format_g9(entry.p_src_given_tgt) << '\n';
  write_file(path, ss.str());
}

PhraseTable load_phrase_table(const std::string& path, std::string source_language,
                              std::string target_language) {
  PhraseTable table;
  table.source_language = std::move(source_language);
  table.target_language = std::move(target_language);
  for (const auto& line : read_lines(path)) {
    if (line.empty()) continue;
    const auto d1 = line.find("|||");
    const auto d2 = line.find("|||", d1 == std::string::npos ? 0 : d1 + 3);
    if (d1 == std::string::npos || d2 == std::string::npos)
      throw std::runtime_error("load_phrase_table: bad line: " + line);
    const std::string src = join(split_ws(line.substr(0, d1)));
    const std::string tgt = join(split_ws(line.substr(d1 + 3, d2 - d1 - 3)));
    auto probs = split_ws(line.substr(d2 + 3));
    if (probs.size() != 2)
      throw std::runtime_error("load_phrase_table: expected two scores: " + line);
    PhraseEntry entry;
    entry.target = tgt;
    entry.p_tgt_given_src = std::stod(probs[0]);
    entry.p_src_given_tgt = std::stod(probs[1]);
    const int len = static_cast<int>(std::max(split_ws(src).size(), split_ws(tgt).size()));
    table.max_phrase_len = std::max(table.max_phrase_len, len);
    table.entries[src].push_back(std::move(entry));
  }
  table.sort_entries();
  return table;
}

}  // namespace umt
