#include "umt/lm.hpp"

#include <algorithm>
#include <cmath>
#include <cstring>
#include <map>
#include <sstream>
#include <stdexcept>

#include "umt/rng.hpp"
#include "umt/text.hpp"

namespace umt {

namespace {

using Gram = NgramLm::Gram;

struct GramHash {
  std::size_t operator()(const Gram& g) const {
    return fnv1a(std::string_view(reinterpret_cast<const char*>(g.data()),
                                  g.size() * sizeof(std::uint32_t)));
  }
};

template <typename V>
using GramMap = std::unordered_map<Gram, V, GramHash>;

std::uint64_t gram_key(const std::uint32_t* ids, std::size_t len) {
  return fnv1a(std::string_view(reinterpret_cast<const char*>(ids),
                                len * sizeof(std::uint32_t)));
}

struct Discounts {
  double d1 = 0, d2 = 0, d3 = 0;
  double of(long long c) const { return c == 1 ? d1 : c == 2 ? d2 : c >= 3 ? d3 : 0.0; }
};

// Kneser-Ney discounts from count-of-counts. Returns false when degenerate
// (missing count-of-count buckets or non-positive discounts).
bool kn_discounts(const GramMap<long long>& counts, std::uint32_t bos_id,
                  Discounts* out) {
  long long n[5] = {0, 0, 0, 0, 0};
  for (const auto& [gram, c] : counts) {
    if (gram.back() == bos_id) continue;
    if (c >= 1 && c <= 4) ++n[c];
  }
  if (n[1] == 0 || n[2] == 0 || n[3] == 0 || n[4] == 0) return false;
  const double y = static_cast<double>(n[1]) / (n[1] + 2.0 * n[2]);
  out->d1 = 1.0 - 2.0 * y * n[2] / n[1];
  out->d2 = 2.0 - 3.0 * y * n[3] / n[2];
  out->d3 = 3.0 - 4.0 * y * n[4] / n[3];
  return out->d1 > 0 && out->d2 > 0 && out->d3 > 0;
}

}  // namespace

std::uint32_t NgramLm::intern(const std::string& token) {
  auto it = token_ids_.find(token);
  if (it != token_ids_.end()) return it->second;
  const auto id = static_cast<std::uint32_t>(vocab_.size());
  vocab_.push_back(token);
  token_ids_.emplace(token, id);
  return id;
}

std::uint32_t NgramLm::token_id(const std::string& token) const {
  auto it = token_ids_.find(token);
  return it == token_ids_.end() ? unk_id_ : it->second;
}

void NgramLm::build_index() {
  index_.clear();
  std::size_t total = 0;
  for (const auto& level : grams_) total += level.size();
  index_.reserve(total * 2);
  for (const auto& level : grams_)
    for (const auto& [gram, entry] : level)
      index_[gram_key(gram.data(), gram.size())] = entry;
}

double NgramLm::log10_prob(const std::uint32_t* context, std::size_t len,
                           std::uint32_t word) const {
  if (len > static_cast<std::size_t>(order_ - 1)) {
    context += len - (order_ - 1);
    len = order_ - 1;
  }
  std::uint32_t probe[16];
  for (std::size_t i = 0; i < len; ++i) probe[i] = context[i];
  probe[len] = word;

  double bow_acc = 0.0;
  std::size_t off = 0;
  for (;;) {
    auto hit = index_.find(gram_key(probe + off, len - off + 1));
    if (hit != index_.end()) return bow_acc + hit->second.log10_prob;
    if (off == len) {
      // Unigrams cover the whole closed vocabulary, so this is unreachable
      // for valid ids; map anything else to <unk>.
      auto unk = index_.find(gram_key(&unk_id_, 1));
      return bow_acc + unk->second.log10_prob;
    }
    auto ctx = index_.find(gram_key(probe + off, len - off));
    if (ctx != index_.end()) bow_acc += ctx->second.log10_bow;
    ++off;
  }
}

double NgramLm::log10_prob(const std::vector<std::string>& context,
                           const std::string& word) const {
  Gram ctx;
  ctx.reserve(context.size());
  for (const auto& tok : context) ctx.push_back(token_id(tok));
  return log10_prob(ctx.data(), ctx.size(), token_id(word));
}

double NgramLm::score_sentence(const Sentence& sentence) const {
  Gram ctx{bos_id_};
  double total = 0.0;
  auto feed = [&](std::uint32_t wid) {
    total += log10_prob(ctx.data(), ctx.size(), wid);
    ctx.push_back(wid);
    if (ctx.size() > static_cast<std::size_t>(order_ - 1) && !ctx.empty())
      ctx.erase(ctx.begin());
  };
  for (const auto& tok : sentence) feed(token_id(tok));
  feed(eos_id_);
  return total;
}

double perplexity(const NgramLm& lm, const Corpus& corpus) {
  if (corpus.empty()) throw std::invalid_argument("perplexity: empty corpus");
  double total = 0.0;
  std::size_t events = 0;
  for (const auto& sent : corpus.sentences) {
    total += lm.score_sentence(sent);
    events += sent.size() + 1;
  }
  return std::pow(10.0, -total / static_cast<double>(events));
}

NgramLm train_lm(const Corpus& corpus, int order, DiscountMode mode) {
  if (order < 1) throw std::invalid_argument("train_lm: order < 1");
  if (order > 15) throw std::invalid_argument("train_lm: order > 15");
  if (corpus.empty()) throw std::invalid_argument("train_lm: empty corpus");

  NgramLm lm;
  lm.order_ = order;

  // Lexicographic ids make every downstream artifact order canonical.
  {
    std::map<std::string, long long> types;
    for (const auto& sent : corpus.sentences)
      for (const auto& tok : sent) ++types[tok];
    types[kBos];
    types[kEos];
    types[kUnk];
    for (const auto& [tok, cnt] : types) lm.intern(tok);
  }
  lm.bos_id_ = lm.token_ids_.at(kBos);
  lm.eos_id_ = lm.token_ids_.at(kEos);
  lm.unk_id_ = lm.token_ids_.at(kUnk);

  const std::uint32_t bos = lm.bos_id_;

  // Raw window counts over padded sentences. Kneser-Ney counts the </s>
  // event; the add-one estimator counts only real-word events, leaving </s>
  // as a zero-count vocabulary type.
  auto count_raw = [&](bool with_eos) {
    std::vector<GramMap<long long>> raw(order);
    Gram seq;
    for (const auto& sent : corpus.sentences) {
      seq.clear();
      seq.push_back(bos);
      for (const auto& tok : sent) seq.push_back(lm.token_ids_.at(tok));
      if (with_eos) seq.push_back(lm.eos_id_);
      for (int k = 1; k <= order; ++k)
        for (std::size_t i = 0; i + k <= seq.size(); ++i)
          ++raw[k - 1][Gram(seq.begin() + i, seq.begin() + i + k)];
    }
    return raw;
  };

  // Predicted vocabulary: everything but <s>.
  std::vector<std::uint32_t> v_pred;
  for (std::uint32_t id = 0; id < lm.vocab_.size(); ++id)
    if (id != bos) v_pred.push_back(id);
  const double v_size = static_cast<double>(v_pred.size());

  bool use_kn = mode == DiscountMode::kKneserNey;
  std::vector<GramMap<long long>> counts;
  std::vector<Discounts> discounts(order);

  if (use_kn) {
    auto raw = count_raw(/*with_eos=*/true);
    // Lower-order counts become continuation counts (distinct left
    // extensions in the raw data), except that grams starting with <s>
    // cannot be extended left and keep their raw counts.
    counts.resize(order);
    for (int k = order - 1; k >= 1; --k) {
      GramMap<long long> adj;
      for (const auto& [gram, c] : raw[k - 1])
        if (gram.front() == bos) adj[gram] = c;
      for (const auto& [gram, c] : raw[k]) {
        Gram suffix(gram.begin() + 1, gram.end());
        if (suffix.front() != bos) ++adj[suffix];
      }
      counts[k - 1] = std::move(adj);
    }
    counts[order - 1] = std::move(raw[order - 1]);
    for (int k = 1; k <= order && use_kn; ++k)
      use_kn = kn_discounts(counts[k - 1], bos, &discounts[k - 1]);
    if (!use_kn) lm.fell_back_ = true;
  }

  if (!use_kn) counts = count_raw(/*with_eos=*/false);

  // Estimation works in the linear domain, bottom-up; conversion to log10
  // happens only at storage time.
  std::vector<GramMap<double>> probs(order);
  std::vector<GramMap<double>> bows(order);  // keyed by context gram

  // Unigram level.
  {
    long long total = 0;
    for (const auto& [gram, c] : counts[0])
      if (gram.front() != bos) total += c;
    if (total <= 0) throw std::runtime_error("train_lm: no counted events");
    const double t = static_cast<double>(total);
    if (use_kn) {
      const Discounts& d = discounts[0];
      double gamma_num = 0.0;
      for (const auto& [gram, c] : counts[0])
        if (gram.front() != bos) gamma_num += d.of(c);
      const double gamma = gamma_num / t;
      for (auto id : v_pred) {
        auto it = counts[0].find(Gram{id});
        const long long c = it == counts[0].end() ? 0 : it->second;
        probs[0][Gram{id}] =
            std::max(static_cast<double>(c) - d.of(c), 0.0) / t + gamma / v_size;
      }
    } else {
      for (auto id : v_pred) {
        auto it = counts[0].find(Gram{id});
        const long long c = it == counts[0].end() ? 0 : it->second;
        probs[0][Gram{id}] = (static_cast<double>(c) + 1.0) / (t + v_size);
      }
    }
  }

  // Higher orders, grouped by context.
  for (int k = 2; k <= order; ++k) {
    // Sort grams so each context's successors are contiguous.
    std::vector<const std::pair<const Gram, long long>*> items;
    items.reserve(counts[k - 1].size());
    for (const auto& kv : counts[k - 1])
      if (kv.first.back() != bos) items.push_back(&kv);
    std::sort(items.begin(), items.end(),
              [](auto* a, auto* b) { return a->first < b->first; });

    std::size_t i = 0;
    while (i < items.size()) {
      std::size_t j = i;
      const Gram ctx(items[i]->first.begin(), items[i]->first.end() - 1);
      long long total = 0;
      long long level_types[4] = {0, 0, 0, 0};  // [1], [2], [3+]
      while (j < items.size() &&
             std::equal(ctx.begin(), ctx.end(), items[j]->first.begin()) &&
             items[j]->first.size() - 1 == ctx.size()) {
        const long long c = items[j]->second;
        total += c;
        ++level_types[c == 1 ? 1 : c == 2 ? 2 : 3];
        ++j;
      }
      const double t = static_cast<double>(total);
      if (use_kn) {
        const Discounts& d = discounts[k - 1];
        const double gamma =
            (d.d1 * level_types[1] + d.d2 * level_types[2] + d.d3 * level_types[3]) / t;
        for (std::size_t q = i; q < j; ++q) {
          const Gram& gram = items[q]->first;
          const long long c = items[q]->second;
          Gram lower(gram.begin() + 1, gram.end());
          probs[k - 1][gram] = std::max(static_cast<double>(c) - d.of(c), 0.0) / t +
                               gamma * probs[k - 2].at(lower);
        }
        bows[k - 2][ctx] = gamma;
      } else {
        for (std::size_t q = i; q < j; ++q) {
          const Gram& gram = items[q]->first;
          probs[k - 1][gram] = (static_cast<double>(items[q]->second) + 1.0) / (t + v_size);
        }
      }
      i = j;
    }
  }

  // Add-one back-off weights renormalize the leftover mass against the mass
  // the lower level assigns to unseen continuations. Computed bottom-up so a
  // level's bows are available before the level above queries them.
  lm.grams_.assign(order, {});
  auto store_level = [&](int k) {
    auto& out = lm.grams_[k - 1];
    out.reserve(probs[k - 1].size() + (k == 1 ? 1 : 0));
    for (const auto& [gram, p] : probs[k - 1]) {
      NgramLm::Entry e;
      e.log10_prob = std::log10(p);
      auto b = bows[k - 1].find(gram);
      e.log10_bow = b == bows[k - 1].end() ? 0.0 : std::log10(b->second);
      out.emplace_back(gram, e);
    }
    if (k == 1) {
      NgramLm::Entry e;
      e.log10_prob = -99.0;  // <s> is context-only
      auto b = bows[0].find(Gram{bos});
      e.log10_bow = b == bows[0].end() ? 0.0 : std::log10(b->second);
      out.emplace_back(Gram{bos}, e);
    }
    std::sort(out.begin(), out.end(),
              [](const auto& a, const auto& b) { return a.first < b.first; });
  };

  if (use_kn) {
    for (int k = 1; k <= order; ++k) store_level(k);
    lm.mode_ = DiscountMode::kKneserNey;
  } else {
    lm.mode_ = DiscountMode::kLaplace;
    store_level(1);
    lm.build_index();  // partial index over unigrams for the bow lookups
    for (int k = 2; k <= order; ++k) {
      // Group successors by context again to compute bows of level k-1.
      std::vector<const std::pair<const Gram, double>*> items;
      items.reserve(probs[k - 1].size());
      for (const auto& kv : probs[k - 1]) items.push_back(&kv);
      std::sort(items.begin(), items.end(),
                [](auto* a, auto* b) { return a->first < b->first; });
      std::size_t i = 0;
      while (i < items.size()) {
        std::size_t j = i;
        const Gram ctx(items[i]->first.begin(), items[i]->first.end() - 1);
        double covered = 0.0, lower = 0.0;
        while (j < items.size() &&
               std::equal(ctx.begin(), ctx.end(), items[j]->first.begin()) &&
               items[j]->first.size() - 1 == ctx.size()) {
          covered += items[j]->second;
          lower += std::pow(10.0, lm.log10_prob(ctx.data() + 1, ctx.size() - 1,
                                                items[j]->first.back()));
          ++j;
        }
        bows[k - 2][ctx] = (1.0 - covered) / (1.0 - lower);
        i = j;
      }
      // Rebuild level k-1 entries with bows, then store level k.
      lm.grams_[k - 2].clear();
      store_level(k - 1);
      store_level(k);
      lm.build_index();
    }
  }

  lm.build_index();
  return lm;
}

void save_arpa(const NgramLm& lm, const std::string& path) {
  std::ostringstream ss;
  ss << "\\data\\\n";
  for (int k = 1; k <= lm.order(); ++k)
    ss << "ngram " << k << '=' << lm.gram_count(k) << '\n';
  for (int k = 1; k <= lm.order(); ++k) {
    ss << "\n\\" << k << "-grams:\n";
    for (const auto& [gram, entry] : lm.grams(k)) {
      ss << format_g9(entry.log10_prob) << '\t';
      for (std::size_t i = 0; i < gram.size(); ++i) {
        if (i) ss << ' ';
        ss << lm.vocab()[gram[i]];
      }
      if (k < lm.order()) ss << '\t' << format_g9(entry.log10_bow);
      ss << '\n';
    }
  }
  ss << "\n\\end\\\n";
  write_file(path, ss.str());
}

NgramLm load_arpa(const std::string& path) {
  auto lines = read_lines(path);
  std::size_t i = 0;
  while (i < lines.size() && lines[i] != "\\data\\") ++i;
  if (i == lines.size()) throw std::runtime_error("load_arpa: missing \\data\\ in " + path);
  ++i;

  std::vector<std::size_t> declared;
  for (; i < lines.size() && lines[i].rfind("ngram ", 0) == 0; ++i) {
    const auto eq = lines[i].find('=');
    if (eq == std::string::npos) throw std::runtime_error("load_arpa: bad ngram line");
    declared.push_back(std::stoull(lines[i].substr(eq + 1)));
  }
  if (declared.empty()) throw std::runtime_error("load_arpa: no ngram counts");

  NgramLm lm;
  lm.order_ = static_cast<int>(declared.size());
  if (lm.order_ > 15) throw std::runtime_error("load_arpa: order > 15");

  struct Raw {
    double prob;
    std::vector<std::string> tokens;
    double bow;
  };
  std::vector<std::vector<Raw>> raw(lm.order_);
  std::map<std::string, std::uint32_t> types;

  int current = 0;
  for (; i < lines.size(); ++i) {
    const std::string& line = lines[i];
    if (line.empty()) continue;
    if (line == "\\end\\") break;
    if (line.front() == '\\') {
      current = std::stoi(line.substr(1));
      if (current < 1 || current > lm.order_)
        throw std::runtime_error("load_arpa: unexpected section " + line);
      continue;
    }
    if (current == 0) continue;
    std::size_t t1 = line.find('\t');
    if (t1 == std::string::npos) throw std::runtime_error("load_arpa: bad gram line");
    std::size_t t2 = line.find('\t', t1 + 1);
    Raw r;
    r.prob = std::stod(line.substr(0, t1));
    std::string grams = t2 == std::string::npos ? line.substr(t1 + 1)
                                                : line.substr(t1 + 1, t2 - t1 - 1);
    r.tokens = split_ws(grams);
    r.bow = t2 == std::string::npos ? 0.0 : std::stod(line.substr(t2 + 1));
    if (static_cast<int>(r.tokens.size()) != current)
      throw std::runtime_error("load_arpa: gram length mismatch: " + line);
    for (const auto& tok : r.tokens) types.emplace(tok, 0);
    raw[current - 1].push_back(std::move(r));
  }

  for (const auto& [tok, unused] : types) lm.intern(tok);
  lm.intern(kBos);
  lm.intern(kEos);
  lm.intern(kUnk);
  lm.bos_id_ = lm.token_ids_.at(kBos);
  lm.eos_id_ = lm.token_ids_.at(kEos);
  lm.unk_id_ = lm.token_ids_.at(kUnk);

  lm.grams_.assign(lm.order_, {});
  for (int k = 1; k <= lm.order_; ++k) {
    if (raw[k - 1].size() != declared[k - 1])
      throw std::runtime_error("load_arpa: declared count mismatch at order " +
                               std::to_string(k));
    auto& out = lm.grams_[k - 1];
    out.reserve(raw[k - 1].size());
    for (const auto& r : raw[k - 1]) {
      NgramLm::Gram gram;
      gram.reserve(r.tokens.size());
      for (const auto& tok : r.tokens) gram.push_back(lm.token_ids_.at(tok));
      out.emplace_back(gram, NgramLm::Entry{r.prob, r.bow});
    }
    std::sort(out.begin(), out.end(),
              [](const auto& a, const auto& b) { return a.first < b.first; });
  }
  lm.build_index();
  return lm;
}

}  // namespace umt
