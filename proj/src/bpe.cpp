#include "umt/bpe.hpp"

#include <algorithm>
#include <map>
#include <sstream>
#include <stdexcept>

#include "umt/text.hpp"

namespace umt {

namespace {

using SymbolSeq = std::vector<std::string>;
using Pair = std::pair<std::string, std::string>;

SymbolSeq word_to_symbols(const std::string& word, const std::string& eow) {
  SymbolSeq syms = utf8_chars(word);
  if (!syms.empty()) syms.back() += eow;
  return syms;
}

void merge_in_place(SymbolSeq& syms, const Pair& pair) {
  std::size_t w = 0;
  for (std::size_t r = 0; r < syms.size();) {
    if (r + 1 < syms.size() && syms[r] == pair.first && syms[r + 1] == pair.second) {
      syms[w++] = pair.first + pair.second;
      r += 2;
    } else {
      if (w != r) syms[w] = std::move(syms[r]);
      ++w;
      ++r;
    }
  }
  syms.resize(w);
}

}  // namespace

BpeModel learn_bpe(const std::vector<const Corpus*>& corpora, std::size_t num_merges) {
  // Joint word-frequency table over all corpora.
  std::map<std::string, long long> word_freq;
  for (const Corpus* c : corpora)
    for (const auto& sent : c->sentences)
      for (const auto& tok : sent) ++word_freq[tok];
  if (word_freq.empty()) throw std::runtime_error("learn_bpe: no symbols to merge");

  BpeModel model;
  std::vector<SymbolSeq> words;
  std::vector<long long> freqs;
  words.reserve(word_freq.size());
  for (const auto& [word, freq] : word_freq) {
    words.push_back(word_to_symbols(word, model.end_of_word_marker));
    freqs.push_back(freq);
  }

  for (std::size_t step = 0; step < num_merges; ++step) {
    std::map<Pair, long long> pair_count;
    for (std::size_t w = 0; w < words.size(); ++w)
      for (std::size_t i = 0; i + 1 < words[w].size(); ++i)
        pair_count[{words[w][i], words[w][i + 1]}] += freqs[w];
    if (pair_count.empty()) break;

    // Highest count wins; the map's lexicographic order breaks ties.
    auto best = pair_count.begin();
    for (auto it = pair_count.begin(); it != pair_count.end(); ++it)
      if (it->second > best->second) best = it;

    model.merges.push_back(best->first);
    for (auto& syms : words) merge_in_place(syms, best->first);
  }

  for (const auto& syms : words)
    for (const auto& s : syms) model.vocab.insert(s);
  return model;
}

BpeModel learn_bpe(const Corpus& corpus, std::size_t num_merges) {
  return learn_bpe(std::vector<const Corpus*>{&corpus}, num_merges);
}

BpeEncoder::BpeEncoder(const BpeModel& model) : model_(model) {
  for (std::size_t i = 0; i < model.merges.size(); ++i) {
    const auto& [l, r] = model.merges[i];
    rank_.emplace(l + "\x1f" + r, i);
  }
}

const std::vector<std::string>& BpeEncoder::encode_word(const std::string& word) const {
  auto hit = cache_.find(word);
  if (hit != cache_.end()) return hit->second;

  // Repeatedly applying the lowest-ranked pair present reproduces the
  // learn-time replay of the full merge list in order.
  SymbolSeq syms = word_to_symbols(word, model_.end_of_word_marker);
  while (syms.size() > 1) {
    std::size_t best_rank = rank_.size();
    for (std::size_t i = 0; i + 1 < syms.size(); ++i) {
      auto it = rank_.find(syms[i] + "\x1f" + syms[i + 1]);
      if (it != rank_.end() && it->second < best_rank) best_rank = it->second;
    }
    if (best_rank == rank_.size()) break;
    merge_in_place(syms, model_.merges[best_rank]);
  }
  return cache_.emplace(word, std::move(syms)).first->second;
}

Sentence apply_bpe(const BpeModel& model, const Sentence& sentence) {
  BpeEncoder enc(model);
  Sentence out;
  for (const auto& tok : sentence) {
    const auto& units = enc.encode_word(tok);
    out.insert(out.end(), units.begin(), units.end());
  }
  return out;
}

Sentence revert_bpe(const BpeModel& model, const Sentence& subwords) {
  const std::string& eow = model.end_of_word_marker;
  Sentence out;
  std::string cur;
  for (const auto& unit : subwords) {
    if (unit.size() >= eow.size() &&
        unit.compare(unit.size() - eow.size(), eow.size(), eow) == 0) {
      cur += unit.substr(0, unit.size() - eow.size());
      if (!cur.empty()) out.push_back(std::move(cur));
      cur.clear();
    } else {
      cur += unit;
    }
  }
  if (!cur.empty()) out.push_back(std::move(cur));
  return out;
}

Corpus apply_bpe(const BpeModel& model, const Corpus& corpus) {
  BpeEncoder enc(model);
  Corpus out;
  out.language = corpus.language;
  out.sentences.reserve(corpus.size());
  for (const auto& sent : corpus.sentences) {
    Sentence enc_sent;
    for (const auto& tok : sent) {
      const auto& units = enc.encode_word(tok);
      enc_sent.insert(enc_sent.end(), units.begin(), units.end());
    }
    out.add(std::move(enc_sent));
  }
  return out;
}

void save_bpe(const BpeModel& model, const std::string& path) {
  std::ostringstream ss;
  ss << "#bpe v1 " << model.merges.size() << '\n';
  for (const auto& [l, r] : model.merges) ss << l << ' ' << r << '\n';
  write_file(path, ss.str());
}

BpeModel load_bpe(const std::string& path) {
  auto lines = read_lines(path);
  if (lines.empty() || lines[0].rfind("#bpe v1 ", 0) != 0)
    throw std::runtime_error("load_bpe: bad header in " + path);
  BpeModel model;
  const std::size_t declared = std::stoull(lines[0].substr(8));
  for (std::size_t i = 1; i < lines.size(); ++i) {
    if (lines[i].empty()) continue;
    auto parts = split_ws(lines[i]);
    if (parts.size() != 2) throw std::runtime_error("load_bpe: bad merge line " + lines[i]);
    model.merges.emplace_back(parts[0], parts[1]);
  }
  if (model.merges.size() != declared)
    throw std::runtime_error("load_bpe: merge count mismatch in " + path);
  // Rebuild the reachable vocab: all merge outputs plus their parts.
  for (const auto& [l, r] : model.merges) {
    model.vocab.insert(l);
    model.vocab.insert(r);
    model.vocab.insert(l + r);
  }
  return model;
}

}  // namespace umt
