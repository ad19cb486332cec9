#include "umt/decoder.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <filesystem>
#include <map>
#include <sstream>
#include <stdexcept>
#include <thread>
#include <unordered_map>

#include "umt/rng.hpp"
#include "umt/text.hpp"

namespace umt {

namespace {

struct Option {
  int start = 0;
  int end = 0;  // exclusive
  std::vector<std::string> target;
  std::vector<std::uint32_t> target_ids;
  double log10_fwd = 0.0;
  double log10_bwd = 0.0;
  bool oov = false;
};

struct Hyp {
  std::vector<std::uint64_t> coverage;
  int covered = 0;
  int last_end = 0;
  std::vector<std::uint32_t> lm_ctx;
  ScoreBreakdown features;
  double score = 0.0;
  std::string output;  // space-joined target so far
  int oov_count = 0;
};

bool bit(const std::vector<std::uint64_t>& cov, int i) {
  return (cov[i >> 6] >> (i & 63)) & 1;
}

void set_bits(std::vector<std::uint64_t>& cov, int start, int end) {
  for (int i = start; i < end; ++i) cov[i >> 6] |= 1ULL << (i & 63);
}

bool span_free(const std::vector<std::uint64_t>& cov, int start, int end) {
  for (int i = start; i < end; ++i)
    if (bit(cov, i)) return false;
  return true;
}

int first_uncovered(const std::vector<std::uint64_t>& cov, int len) {
  for (int w = 0; w * 64 < len; ++w) {
    const std::uint64_t inv = ~cov[w];
    if (inv) {
      const int i = w * 64 + __builtin_ctzll(inv);
      return i < len ? i : len;
    }
  }
  return len;
}

std::string state_key(const Hyp& h) {
  std::string key(reinterpret_cast<const char*>(h.coverage.data()),
                  h.coverage.size() * sizeof(std::uint64_t));
  key.append(reinterpret_cast<const char*>(&h.last_end), sizeof(h.last_end));
  key.append(reinterpret_cast<const char*>(h.lm_ctx.data()),
             h.lm_ctx.size() * sizeof(std::uint32_t));
  return key;
}

// score desc, then lexicographic output, then coverage bytes for determinism.
bool hyp_better(const Hyp& a, const Hyp& b) {
  if (a.score != b.score) return a.score > b.score;
  if (a.output != b.output) return a.output < b.output;
  return a.coverage < b.coverage;
}

std::vector<std::vector<Option>> collect_options(const TranslationModel& model,
                                                 const Sentence& sentence) {
  const int len = static_cast<int>(sentence.size());
  const NgramLm& lm = *model.target_lm;
  std::vector<std::vector<Option>> options(len);

  for (int i = 0; i < len; ++i) {
    bool has_single = false;
    std::string key;
    for (int l = 1; l <= model.table.max_phrase_len && i + l <= len; ++l) {
      key = l == 1 ? sentence[i] : key + ' ' + sentence[i + l - 1];
      const auto* entries = model.table.lookup(key);
      if (!entries) continue;
      if (l == 1) has_single = true;
      const int take = std::min<int>(model.options_per_span,
                                     static_cast<int>(entries->size()));
      for (int e = 0; e < take; ++e) {
        const auto& pe = (*entries)[e];
        Option opt;
        opt.start = i;
        opt.end = i + l;
        opt.target = split_ws(pe.target);
        for (const auto& t : opt.target) opt.target_ids.push_back(lm.token_id(t));
        opt.log10_fwd = std::log10(pe.p_tgt_given_src);
        opt.log10_bwd = std::log10(pe.p_src_given_tgt);
        options[i].push_back(std::move(opt));
      }
    }
    if (!has_single) {
      Option oov;
      oov.start = i;
      oov.end = i + 1;
      oov.target = {sentence[i]};
      oov.target_ids = {lm.token_id(sentence[i])};
      oov.log10_fwd = kOovLog10;
      oov.log10_bwd = 0.0;
      oov.oov = true;
      options[i].push_back(std::move(oov));
    }
  }
  return options;
}

DecodeResult run_stacks(const TranslationModel& model, const Sentence& sentence,
                        const std::vector<std::vector<Option>>& options,
                        bool monotone) {
  const int len = static_cast<int>(sentence.size());
  const NgramLm& lm = *model.target_lm;
  const int ctx_len = std::max(0, lm.order() - 1);
  const int beam = std::max(1, model.beam_size);

  std::vector<std::vector<Hyp>> stacks(len + 1);
  std::vector<std::unordered_map<std::string, std::size_t>> states(len + 1);

  Hyp init;
  init.coverage.assign((len + 63) / 64, 0);
  init.lm_ctx = {lm.bos_id()};
  stacks[0].push_back(std::move(init));

  auto push = [&](int dest, Hyp&& h) {
    auto& stack = stacks[dest];
    auto& index = states[dest];
    auto key = state_key(h);
    auto it = index.find(key);
    if (it == index.end()) {
      index.emplace(std::move(key), stack.size());
      stack.push_back(std::move(h));
    } else if (hyp_better(h, stack[it->second])) {
      stack[it->second] = std::move(h);
    }
  };

  for (int c = 0; c < len; ++c) {
    auto& stack = stacks[c];
    if (stack.empty()) continue;
    if (static_cast<int>(stack.size()) > beam) {
      std::sort(stack.begin(), stack.end(), hyp_better);
      stack.resize(beam);
    }
    for (const auto& hyp : stack) {
      const int next = first_uncovered(hyp.coverage, len);
      for (int start = monotone ? next : 0; start < len; ++start) {
        if (monotone && start != next) break;
        if (!monotone) {
          if (bit(hyp.coverage, start)) continue;
          if (std::abs(start - hyp.last_end) > model.distortion_limit) continue;
        }
        for (const auto& opt : options[start]) {
          if (!span_free(hyp.coverage, opt.start, opt.end)) continue;
          Hyp ext;
          ext.coverage = hyp.coverage;
          set_bits(ext.coverage, opt.start, opt.end);
          ext.covered = hyp.covered + (opt.end - opt.start);
          ext.last_end = opt.end;
          ext.features = hyp.features;
          ext.features.tm_fwd += opt.log10_fwd;
          ext.features.tm_bwd += opt.log10_bwd;
          ext.features.word_count += static_cast<double>(opt.target.size());
          ext.features.phrase_count += 1.0;
          ext.features.distortion -= std::abs(opt.start - hyp.last_end);
          ext.oov_count = hyp.oov_count + (opt.oov ? 1 : 0);
          ext.lm_ctx = hyp.lm_ctx;
          for (auto wid : opt.target_ids) {
            ext.features.lm += lm.log10_prob(ext.lm_ctx.data(), ext.lm_ctx.size(), wid);
            ext.lm_ctx.push_back(wid);
            if (static_cast<int>(ext.lm_ctx.size()) > ctx_len)
              ext.lm_ctx.erase(ext.lm_ctx.begin());
          }
          ext.output = hyp.output;
          for (const auto& t : opt.target) {
            if (!ext.output.empty()) ext.output += ' ';
            ext.output += t;
          }
          ext.score = ext.features.weighted(model.weights);
          push(ext.covered, std::move(ext));
        }
      }
    }
  }

  DecodeResult result;
  if (stacks[len].empty()) {
    result.monotone_fallback = true;  // caller retries monotone
    return result;
  }

  // Completion adds the </s> term before ranking final hypotheses.
  auto& final_stack = stacks[len];
  for (auto& hyp : final_stack) {
    hyp.features.lm += lm.log10_prob(hyp.lm_ctx.data(), hyp.lm_ctx.size(), lm.eos_id());
    hyp.score = hyp.features.weighted(model.weights);
  }
  const Hyp* best = &final_stack[0];
  for (const auto& hyp : final_stack)
    if (hyp_better(hyp, *best)) best = &hyp;

  result.tokens = split_ws(best->output);
  result.score = best->score;
  result.features = best->features;
  result.oov_count = best->oov_count;
  return result;
}

}  // namespace

DecodeResult decode(const TranslationModel& model, const Sentence& sentence) {
  if (sentence.empty()) throw std::invalid_argument("decode: empty sentence");
  if (!model.target_lm) throw std::invalid_argument("decode: model has no language model");

  const auto options = collect_options(model, sentence);
  DecodeResult result = run_stacks(model, sentence, options, /*monotone=*/true);
  if (model.reordering_enabled) {
    // Monotone derivations are a subset of the reordering space; taking the
    // better of the two searches bounds the search error of pruning without
    // future-cost estimates, and covers reordering dead ends.
    DecodeResult reordered = run_stacks(model, sentence, options, /*monotone=*/false);
    if (!reordered.monotone_fallback &&
        (reordered.score > result.score ||
         (reordered.score == result.score && join(reordered.tokens) < join(result.tokens))))
      return reordered;
    result.monotone_fallback = reordered.monotone_fallback;
  }
  return result;
}

CorpusTranslation translate_corpus(const TranslationModel& model, const Corpus& corpus,
                                   int threads) {
  CorpusTranslation out;
  out.sentences.resize(corpus.size());
  if (corpus.empty()) return out;

  std::atomic<int> fallbacks{0};
  const int n_threads = std::max(1, threads);
  auto worker = [&](std::size_t begin, std::size_t step) {
    for (std::size_t i = begin; i < corpus.size(); i += step) {
      DecodeResult r = decode(model, corpus.sentences[i]);
      if (r.monotone_fallback) ++fallbacks;
      out.sentences[i] = std::move(r.tokens);
    }
  };
  if (n_threads == 1) {
    worker(0, 1);
  } else {
    std::vector<std::thread> pool;
    for (int t = 0; t < n_threads; ++t)
      pool.emplace_back(worker, static_cast<std::size_t>(t), static_cast<std::size_t>(n_threads));
    for (auto& th : pool) th.join();
  }
  out.fallback_count = fallbacks.load();
  return out;
}

void save_model(const TranslationModel& model, const std::string& dir,
                const std::string& lm_path) {
  std::filesystem::create_directories(dir);
  save_phrase_table(model.table, dir + "/phrase-table.txt");
  std::ostringstream ss;
  ss << "source_language = " << model.table.source_language << '\n'
     << "target_language = " << model.table.target_language << '\n'
     << "lm = " << lm_path << '\n'
     << "reordering = " << (model.reordering_enabled ? "true" : "false") << '\n'
     << "distortion_limit = " << model.distortion_limit << '\n'
     << "beam_size = " << model.beam_size << '\n'
     << "options_per_span = " << model.options_per_span << '\n'
     << "lowercase = " << (model.lowercase ? "true" : "false") << '\n'
     << "w_tm_fwd = " << format_g9(model.weights.tm_fwd) << '\n'
     << "w_tm_bwd = " << format_g9(model.weights.tm_bwd) << '\n'
     << "w_lm = " << format_g9(model.weights.lm) << '\n'
     << "w_word_penalty = " << format_g9(model.weights.word_penalty) << '\n'
     << "w_phrase_penalty = " << format_g9(model.weights.phrase_penalty) << '\n'
     << "w_distortion = " << format_g9(model.weights.distortion) << '\n';
  write_file(dir + "/model.cfg", ss.str());
}

TranslationModel load_model(const std::string& dir) {
  std::map<std::string, std::string> kv;
  for (const auto& line : read_lines(dir + "/model.cfg")) {
    const auto eq = line.find('=');
    if (eq == std::string::npos) continue;
    auto key = join(split_ws(line.substr(0, eq)));
    auto value = join(split_ws(line.substr(eq + 1)));
    kv[key] = value;
  }
  auto get = [&](const std::string& key) -> const std::string& {
    auto it = kv.find(key);
    if (it == kv.end()) throw std::runtime_error("load_model: missing key " + key);
    return it->second;
  };

  TranslationModel model;
  model.table = load_phrase_table(dir + "/phrase-table.txt", get("source_language"),
                                  get("target_language"));
  std::filesystem::path lm_path(get("lm"));
  if (lm_path.is_relative()) lm_path = std::filesystem::path(dir) / lm_path;
  model.target_lm = std::make_shared<NgramLm>(load_arpa(lm_path.string()));
  model.reordering_enabled = get("reordering") == "true";
  model.distortion_limit = std::stoi(get("distortion_limit"));
  model.beam_size = std::stoi(get("beam_size"));
  model.options_per_span = std::stoi(get("options_per_span"));
  model.lowercase = get("lowercase") == "true";
  model.weights.tm_fwd = std::stod(get("w_tm_fwd"));
  model.weights.tm_bwd = std::stod(get("w_tm_bwd"));
  model.weights.lm = std::stod(get("w_lm"));
  model.weights.word_penalty = std::stod(get("w_word_penalty"));
  model.weights.phrase_penalty = std::stod(get("w_phrase_penalty"));
  model.weights.distortion = std::stod(get("w_distortion"));
  return model;
}

}  // namespace umt
