#include "umt/embeddings.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <sstream>
#include <stdexcept>

#include "umt/rng.hpp"
#include "umt/text.hpp"

namespace umt {

void EmbeddingSpace::rebuild_index() {
  index.clear();
  index.reserve(vocabulary.size() * 2);
  for (std::size_t i = 0; i < vocabulary.size(); ++i)
    index.emplace(vocabulary[i], static_cast<int>(i));
}

Corpus merge_frequent_bigrams(const Corpus& corpus, long long min_count,
                              double score_threshold) {
  if (min_count <= 0 || score_threshold <= 0)
    throw std::invalid_argument("merge_frequent_bigrams: thresholds must be positive");

  std::unordered_map<std::string, long long> uni;
  std::unordered_map<std::string, long long> bi;
  long long total = 0;
  for (const auto& sent : corpus.sentences) {
    total += static_cast<long long>(sent.size());
    for (std::size_t i = 0; i < sent.size(); ++i) {
      ++uni[sent[i]];
      if (i + 1 < sent.size()) ++bi[sent[i] + '\x1f' + sent[i + 1]];
    }
  }

  auto score = [&](const std::string& a, const std::string& b) {
    auto it = bi.find(a + '\x1f' + b);
    if (it == bi.end()) return 0.0;
    const double cab = static_cast<double>(it->second) - static_cast<double>(min_count);
    if (cab <= 0) return 0.0;
    return cab * static_cast<double>(total) /
           (static_cast<double>(uni.at(a)) * static_cast<double>(uni.at(b)));
  };

  Corpus out;
  out.language = corpus.language;
  out.sentences.reserve(corpus.size());
  for (const auto& sent : corpus.sentences) {
    Sentence merged;
    std::size_t i = 0;
    while (i < sent.size()) {
      if (i + 1 < sent.size() && score(sent[i], sent[i + 1]) > score_threshold) {
        merged.push_back(sent[i] + kPhraseJoiner + sent[i + 1]);
        i += 2;
      } else {
        merged.push_back(sent[i]);
        i += 1;
      }
    }
    out.add(std::move(merged));
  }
  return out;
}

std::vector<std::string> phrase_tokens(const std::string& phrase) {
  std::vector<std::string> out;
  const std::string joiner = kPhraseJoiner;
  std::size_t start = 0;
  for (;;) {
    const std::size_t pos = phrase.find(joiner, start);
    if (pos == std::string::npos) break;
    out.push_back(phrase.substr(start, pos - start));
    start = pos + joiner.size();
  }
  out.push_back(phrase.substr(start));
  return out;
}

std::string phrase_surface(const std::string& phrase) {
  return join(phrase_tokens(phrase));
}

double cosine(Eigen::Ref<const Eigen::VectorXd> u, Eigen::Ref<const Eigen::VectorXd> v) {
  if (u.size() != v.size()) throw std::invalid_argument("cosine: dimension mismatch");
  const double nu = u.norm(), nv = v.norm();
  if (nu == 0.0 || nv == 0.0) throw std::invalid_argument("cosine: zero vector");
  return u.dot(v) / (nu * nv);
}

double cosine(Eigen::Ref<const Eigen::VectorXf> u, Eigen::Ref<const Eigen::VectorXf> v) {
  return cosine(Eigen::VectorXd(u.cast<double>()), Eigen::VectorXd(v.cast<double>()));
}

EmbeddingSpace train_sgns(const Corpus& corpus, const SgnsConfig& config) {
  if (config.dimension < 1 || config.window < 1 || config.negatives < 1)
    throw std::invalid_argument("train_sgns: bad config");
  if (corpus.empty()) throw std::invalid_argument("train_sgns: empty corpus");

  // Vocabulary: frequency-descending, lexicographic within ties.
  std::map<std::string, long long> counts;
  for (const auto& sent : corpus.sentences)
    for (const auto& tok : sent) ++counts[tok];

  EmbeddingSpace space;
  space.language = corpus.language;
  space.dimension = config.dimension;
  for (const auto& [tok, c] : counts)
    if (c >= config.min_count) {
      space.vocabulary.push_back(tok);
      space.frequency.push_back(c);
    }
  if (space.vocabulary.empty())
    throw std::runtime_error("train_sgns: empty vocabulary after min_count");

  std::vector<std::size_t> order(space.vocabulary.size());
  for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;
  std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
    if (space.frequency[a] != space.frequency[b])
      return space.frequency[a] > space.frequency[b];
    return space.vocabulary[a] < space.vocabulary[b];
  });
  {
    std::vector<std::string> vocab(order.size());
    std::vector<long long> freq(order.size());
    for (std::size_t i = 0; i < order.size(); ++i) {
      vocab[i] = std::move(space.vocabulary[order[i]]);
      freq[i] = space.frequency[order[i]];
    }
    space.vocabulary = std::move(vocab);
    space.frequency = std::move(freq);
  }
  space.rebuild_index();

  const int vocab_size = static_cast<int>(space.vocabulary.size());
  long long train_tokens = 0;
  for (long long f : space.frequency) train_tokens += f;

  // Cumulative unigram^0.75 table for negative sampling.
  std::vector<double> neg_cdf(vocab_size);
  {
    double acc = 0.0;
    for (int i = 0; i < vocab_size; ++i) {
      acc += std::pow(static_cast<double>(space.frequency[i]), 0.75);
      neg_cdf[i] = acc;
    }
    for (auto& x : neg_cdf) x /= acc;
  }
  auto sample_negative = [&](Rng& rng) {
    const double u = rng.uniform();
    return static_cast<int>(std::lower_bound(neg_cdf.begin(), neg_cdf.end(), u) -
                            neg_cdf.begin());
  };

  // Map sentences to retained ids once.
  std::vector<std::vector<int>> ids;
  ids.reserve(corpus.size());
  for (const auto& sent : corpus.sentences) {
    std::vector<int> s;
    s.reserve(sent.size());
    for (const auto& tok : sent) {
      const int r = space.row_of(tok);
      if (r >= 0) s.push_back(r);
    }
    if (!s.empty()) ids.push_back(std::move(s));
  }

  Rng rng(config.seed);
  MatrixRX input(vocab_size, config.dimension);
  MatrixRX output = MatrixRX::Zero(vocab_size, config.dimension);
  for (int i = 0; i < vocab_size; ++i)
    for (int d = 0; d < config.dimension; ++d)
      input(i, d) = static_cast<float>((rng.uniform() - 0.5) / config.dimension);

  const double t = config.subsample_threshold;
  auto keep_probability = [&](int word) {
    if (t <= 0) return 1.0;
    const double f = static_cast<double>(space.frequency[word]) /
                     static_cast<double>(train_tokens);
    const double p = std::sqrt(t / f) + t / f;
    return p < 1.0 ? p : 1.0;
  };

  const long long total_positions = train_tokens * config.epochs;
  long long processed = 0;
  Eigen::RowVectorXf grad(config.dimension);
  std::vector<int> kept;

  for (int epoch = 0; epoch < config.epochs; ++epoch) {
    for (const auto& sent : ids) {
      processed += static_cast<long long>(sent.size());
      const double lr_scale =
          std::max(1e-4, 1.0 - static_cast<double>(processed) /
                                   static_cast<double>(total_positions + 1));
      const float lr = static_cast<float>(config.learning_rate * lr_scale);

      kept.clear();
      for (int w : sent)
        if (rng.uniform() < keep_probability(w)) kept.push_back(w);

      for (std::size_t pos = 0; pos < kept.size(); ++pos) {
        const int center = kept[pos];
        const int reduced = 1 + static_cast<int>(rng.below(config.window));
        const std::size_t lo = pos >= static_cast<std::size_t>(reduced) ? pos - reduced : 0;
        const std::size_t hi = std::min(kept.size(), pos + reduced + 1);
        for (std::size_t c = lo; c < hi; ++c) {
          if (c == pos) continue;
          const int context = kept[c];
          auto v_in = input.row(context);
          grad.setZero();
          for (int n = 0; n <= config.negatives; ++n) {
            int target;
            float label;
            if (n == 0) {
              target = center;
              label = 1.0f;
            } else {
              target = sample_negative(rng);
              if (target == center) continue;
              label = 0.0f;
            }
            auto v_out = output.row(target);
            const float dot = v_in.dot(v_out);
            const float sigma = 1.0f / (1.0f + std::exp(-dot));
            const float g = (label - sigma) * lr;
            grad += g * v_out;
            v_out += g * v_in;
          }
          v_in += grad;
        }
      }
    }
  }

  space.vectors = std::move(input);
  return space;
}

void save_embeddings(const EmbeddingSpace& space, const std::string& path) {
  std::ostringstream ss;
  ss << space.vocabulary.size() << ' ' << space.dimension << '\n';
  for (std::size_t i = 0; i < space.vocabulary.size(); ++i) {
    ss << space.vocabulary[i];
    for (int d = 0; d < space.dimension; ++d)
      ss << ' ' << format_g9(space.vectors(static_cast<int>(i), d));
    ss << '\n';
  }
  write_file(path, ss.str());

  std::ostringstream cs;
  for (std::size_t i = 0; i < space.vocabulary.size(); ++i)
    cs << space.vocabulary[i] << ' ' << space.frequency[i] << '\n';
  write_file(path + ".counts", cs.str());
}

EmbeddingSpace load_embeddings(const std::string& path, std::string language) {
  auto lines = read_lines(path);
  if (lines.empty()) throw std::runtime_error("load_embeddings: empty file " + path);
  auto header = split_ws(lines[0]);
  if (header.size() != 2) throw std::runtime_error("load_embeddings: bad header");
  const std::size_t vocab_size = std::stoull(header[0]);
  const int dim = std::stoi(header[1]);

  EmbeddingSpace space;
  space.language = std::move(language);
  space.dimension = dim;
  space.vocabulary.reserve(vocab_size);
  space.vectors.resize(static_cast<int>(vocab_size), dim);
  for (std::size_t i = 0; i < vocab_size; ++i) {
    auto parts = split_ws(lines.at(i + 1));
    if (parts.size() != static_cast<std::size_t>(dim) + 1)
      throw std::runtime_error("load_embeddings: bad row " + std::to_string(i));
    space.vocabulary.push_back(parts[0]);
    for (int d = 0; d < dim; ++d)
      space.vectors(static_cast<int>(i), d) = std::stof(parts[d + 1]);
  }
  space.frequency.assign(vocab_size, 0);
  // Frequencies live in the sidecar; fall back to rank-derived pseudo-counts.
  try {
    auto counts = read_lines(path + ".counts");
    std::unordered_map<std::string, long long> by_phrase;
    for (const auto& line : counts) {
      auto parts = split_ws(line);
      if (parts.size() == 2) by_phrase[parts[0]] = std::stoll(parts[1]);
    }
    for (std::size_t i = 0; i < vocab_size; ++i) {
      auto it = by_phrase.find(space.vocabulary[i]);
      space.frequency[i] = it == by_phrase.end() ? 0 : it->second;
    }
  } catch (const std::exception&) {
    for (std::size_t i = 0; i < vocab_size; ++i)
      space.frequency[i] = static_cast<long long>(vocab_size - i);
  }
  space.rebuild_index();
  return space;
}

}  // namespace umt
