#include "umt/corpus.hpp"

#include <numeric>

#include "umt/rng.hpp"
#include "umt/text.hpp"

namespace umt {

std::size_t Corpus::token_count() const {
  std::size_t n = 0;
  for (const auto& s : sentences) n += s.size();
  return n;
}

void Corpus::add(Sentence s) {
  if (!s.empty()) sentences.push_back(std::move(s));
}

bool is_acronym_shaped(std::string_view token) {
  auto cps = utf8_decode(token);
  if (cps.size() < 2 || cps.size() % 2 != 0) return false;
  for (std::size_t i = 0; i < cps.size(); i += 2) {
    if (is_punct_cp(cps[i]) || is_space_cp(cps[i]) || is_digit_cp(cps[i])) return false;
    if (cps[i + 1] != '.') return false;
  }
  return true;
}

namespace {

void emit_cp(Sentence& out, std::uint32_t cp) {
  std::string s;
  utf8_append(s, cp);
  out.push_back(std::move(s));
}

void tokenize_chunk(const std::vector<std::uint32_t>& cps, Sentence& out) {
  std::size_t lo = 0, hi = cps.size();
  while (lo < hi && is_punct_cp(cps[lo])) emit_cp(out, cps[lo++]);

  std::vector<std::uint32_t> trailing;
  while (hi > lo) {
    const std::uint32_t cp = cps[hi - 1];
    if (!is_punct_cp(cp)) break;
    if (cp == '.') {
      std::string core;
      for (std::size_t i = lo; i < hi; ++i) utf8_append(core, cps[i]);
      if (is_acronym_shaped(core)) break;
    }
    trailing.push_back(cp);
    --hi;
  }

  if (lo < hi) {
    std::string core;
    for (std::size_t i = lo; i < hi; ++i) utf8_append(core, cps[i]);
    out.push_back(std::move(core));
  }
  for (auto it = trailing.rbegin(); it != trailing.rend(); ++it) emit_cp(out, *it);
}

}  // namespace

Sentence tokenize(std::string_view text, bool lowercase) {
  Sentence out;
  std::vector<std::uint32_t> chunk;
  auto flush = [&] {
    if (!chunk.empty()) {
      tokenize_chunk(chunk, out);
      chunk.clear();
    }
  };
  for (auto cp : utf8_decode(text)) {
    if (is_space_cp(cp)) {
      flush();
    } else {
      chunk.push_back(lowercase ? lower_cp(cp) : cp);
    }
  }
  flush();
  return out;
}

Corpus sample_sentences(const Corpus& corpus, std::size_t n, std::uint64_t seed) {
  Corpus out;
  out.language = corpus.language;
  const std::size_t total = corpus.size();
  const std::size_t take = n < total ? n : total;
  if (take == 0) return out;

  std::vector<std::size_t> idx(total);
  std::iota(idx.begin(), idx.end(), 0);
  Rng rng(seed);
  // Partial Fisher-Yates: the first `take` slots are a uniform sample.
  for (std::size_t i = 0; i < take; ++i) {
    const std::size_t j = i + static_cast<std::size_t>(rng.below(total - i));
    std::swap(idx[i], idx[j]);
  }
  out.sentences.reserve(take);
  for (std::size_t i = 0; i < take; ++i) out.sentences.push_back(corpus.sentences[idx[i]]);
  return out;
}

Corpus load_corpus(const std::string& path, std::string language) {
  Corpus corpus;
  corpus.language = std::move(language);
  for (const auto& line : read_lines(path)) corpus.add(split_ws(line));
  return corpus;
}

void save_corpus(const Corpus& corpus, const std::string& path) {
  std::vector<std::string> lines;
  lines.reserve(corpus.size());
  for (const auto& s : corpus.sentences) lines.push_back(join(s));
  write_lines(path, lines);
}

}  // namespace umt
