#include "umt/config.hpp"

#include <charconv>
#include <cstdio>
#include <sstream>
#include <stdexcept>
#include <variant>

#include "umt/rng.hpp"
#include "umt/text.hpp"

namespace umt {

namespace {

using StringField = std::string PipelineConfig::*;
using DoubleField = double PipelineConfig::*;
using IntField = long long PipelineConfig::*;
using BoolField = bool PipelineConfig::*;
using Field = std::variant<StringField, DoubleField, IntField, BoolField>;

struct FieldDef {
  const char* section;
  const char* key;
  Field field;
  const char* help;
};

const FieldDef kFields[] = {
    {"data", "source_corpus", &PipelineConfig::source_corpus, "path to the source monolingual corpus"},
    {"data", "target_corpus", &PipelineConfig::target_corpus, "path to the target monolingual corpus"},
    {"data", "source_language", &PipelineConfig::source_language, "source language label"},
    {"data", "target_language", &PipelineConfig::target_language, "target language label"},
    {"data", "lowercase", &PipelineConfig::lowercase, "lowercase while tokenizing"},
    {"bpe", "enabled", &PipelineConfig::bpe_enabled, "apply joint BPE before the pipeline"},
    {"bpe", "merges", &PipelineConfig::bpe_merges, "BPE merge operations (paper scale: 60000)"},
    {"noise", "drop_probability", &PipelineConfig::noise_drop_probability, "word drop probability"},
    {"noise", "swap_window", &PipelineConfig::noise_swap_window, "max word displacement"},
    {"embeddings", "dimension", &PipelineConfig::emb_dimension, "embedding dimension (paper: 512)"},
    {"embeddings", "window", &PipelineConfig::emb_window, "context window (paper: 5)"},
    {"embeddings", "negatives", &PipelineConfig::emb_negatives, "negative samples (paper: 10)"},
    {"embeddings", "epochs", &PipelineConfig::emb_epochs, "training epochs"},
    {"embeddings", "learning_rate", &PipelineConfig::emb_learning_rate, "initial learning rate"},
    {"embeddings", "subsample_threshold", &PipelineConfig::emb_subsample, "frequent-word subsampling"},
    {"embeddings", "min_count", &PipelineConfig::emb_min_count, "minimum phrase count"},
    {"embeddings", "merge_bigrams", &PipelineConfig::merge_bigrams, "add merged-bigram phrases"},
    {"embeddings", "bigram_min_count", &PipelineConfig::bigram_min_count, "bigram merge min count"},
    {"embeddings", "bigram_threshold", &PipelineConfig::bigram_threshold, "bigram association threshold"},
    {"align", "max_seed_pairs", &PipelineConfig::align_max_seed, "identical-string seed cap"},
    {"align", "refine", &PipelineConfig::align_refine, "mutual-CSLS refinement"},
    {"align", "refine_rounds", &PipelineConfig::align_refine_rounds, "refinement rounds"},
    {"align", "refine_vocab", &PipelineConfig::align_refine_vocab, "vocabulary considered in refinement"},
    {"align", "neighborhood", &PipelineConfig::csls_neighborhood, "CSLS neighborhood size"},
    {"align", "seed_keep_fraction", &PipelineConfig::seed_keep_fraction, "seed degradation for ablation"},
    {"induce", "temperature", &PipelineConfig::induce_temperature, "softmax temperature (paper: 30)"},
    {"induce", "top_k", &PipelineConfig::induce_top_k, "neighbors per source phrase (paper: 200)"},
    {"induce", "max_src_phrases", &PipelineConfig::induce_max_src_phrases, "phrase inventory size (paper scale: 300000)"},
    {"lm", "order", &PipelineConfig::lm_order, "n-gram order"},
    {"lm", "discount", &PipelineConfig::lm_discount, "kneser-ney or laplace"},
    {"lm", "data_fraction", &PipelineConfig::lm_data_fraction, "LM training data fraction (ablation)"},
    {"decoder", "w_tm_fwd", &PipelineConfig::w_tm_fwd, "forward phrase-table weight"},
    {"decoder", "w_tm_bwd", &PipelineConfig::w_tm_bwd, "backward phrase-table weight"},
    {"decoder", "w_lm", &PipelineConfig::w_lm, "language-model weight"},
    {"decoder", "w_word_penalty", &PipelineConfig::w_word_penalty, "per-word weight"},
    {"decoder", "w_phrase_penalty", &PipelineConfig::w_phrase_penalty, "per-phrase weight"},
    {"decoder", "w_distortion", &PipelineConfig::w_distortion, "distortion weight"},
    {"decoder", "distortion_limit", &PipelineConfig::distortion_limit, "max reordering jump"},
    {"decoder", "beam_size", &PipelineConfig::beam_size, "stack size"},
    {"decoder", "options_per_span", &PipelineConfig::options_per_span, "translation options per span"},
    {"pipeline", "iterations", &PipelineConfig::iterations, "back-translation iterations"},
    {"pipeline", "bt_sample_size", &PipelineConfig::bt_sample_size, "sentences sampled per round (paper scale: 5000000)"},
    {"pipeline", "rt_holdout", &PipelineConfig::rt_holdout, "round-trip holdout size"},
    {"pipeline", "prune_top", &PipelineConfig::prune_top, "targets kept per source between iterations"},
    {"pipeline", "max_phrase_len", &PipelineConfig::max_phrase_len, "phrase length for iterations (paper: 4)"},
    {"pipeline", "ibm1_iterations", &PipelineConfig::ibm1_iterations, "EM iterations for word alignment"},
    {"pipeline", "artifact_dir", &PipelineConfig::artifact_dir, "artifact directory"},
    {"pipeline", "threads", &PipelineConfig::threads, "worker threads for decoding"},
    {"pipeline", "seed", &PipelineConfig::seed, "global random seed"},
    {"pipeline", "smooth_round_trip", &PipelineConfig::smooth_round_trip, "epsilon-smooth round-trip BLEU"},
    {"bench", "sentences", &PipelineConfig::bench_sentences, "benchmark corpus size"},
    {"bench", "test_size", &PipelineConfig::bench_test_size, "held-out gold pairs"},
    {"bench", "preserve_fraction", &PipelineConfig::bench_preserve_fraction, "word types the cipher preserves"},
    {"bench", "swap_probability", &PipelineConfig::bench_swap_probability, "lexicalized adjacent-pair swap rate"},
    {"bench", "vocab_size", &PipelineConfig::bench_vocab, "content vocabulary size"},
    {"tune", "grid_size", &PipelineConfig::tune_grid, "weight candidates for tuning"},
};

std::string render(const PipelineConfig& config, const FieldDef& def) {
  return std::visit(
      [&](auto member) -> std::string {
        const auto& value = config.*member;
        using T = std::decay_t<decltype(value)>;
        if constexpr (std::is_same_v<T, std::string>) return value;
        else if constexpr (std::is_same_v<T, bool>) return value ? "true" : "false";
        else if constexpr (std::is_same_v<T, long long>) return std::to_string(value);
        else return format_g9(value);
      },
      def.field);
}

void assign(PipelineConfig& config, const FieldDef& def, const std::string& value,
            const std::string& origin, std::size_t line_no) {
  auto fail = [&](const char* expected) {
    throw std::runtime_error(origin + " line " + std::to_string(line_no) +
                             ": value for " + std::string(def.section) + "." +
                             def.key + " must be " + expected + ", got '" + value + "'");
  };
  std::visit(
      [&](auto member) {
        using T = std::decay_t<decltype(config.*member)>;
        if constexpr (std::is_same_v<T, std::string>) {
          config.*member = value;
        } else if constexpr (std::is_same_v<T, bool>) {
          if (value == "true" || value == "1") config.*member = true;
          else if (value == "false" || value == "0") config.*member = false;
          else fail("a boolean (true/false)");
        } else if constexpr (std::is_same_v<T, long long>) {
          long long v = 0;
          auto [p, ec] = std::from_chars(value.data(), value.data() + value.size(), v);
          if (ec != std::errc() || p != value.data() + value.size()) fail("an integer");
          config.*member = v;
        } else {
          try {
            std::size_t used = 0;
            config.*member = std::stod(value, &used);
            if (used != value.size()) fail("a real number");
          } catch (const std::logic_error&) {
            fail("a real number");
          }
        }
      },
      def.field);
}

}  // namespace

std::uint64_t PipelineConfig::stage_seed(const std::string& label) const {
  return derive_seed(static_cast<std::uint64_t>(seed), label);
}

PipelineConfig parse_config_text(const std::string& text, const std::string& origin) {
  PipelineConfig config;
  std::istringstream in(text);
  std::string line;
  std::string section;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    const auto hash = line.find('#');
    if (hash != std::string::npos) line = line.substr(0, hash);
    auto tokens = split_ws(line);
    if (tokens.empty()) continue;
    std::string stripped = join(tokens);
    if (stripped.front() == '[') {
      if (stripped.back() != ']')
        throw std::runtime_error(origin + " line " + std::to_string(line_no) +
                                 ": malformed section header '" + stripped + "'");
      section = stripped.substr(1, stripped.size() - 2);
      bool known = false;
      for (const auto& def : kFields)
        if (section == def.section) known = true;
      if (!known)
        throw std::runtime_error(origin + " line " + std::to_string(line_no) +
                                 ": unknown section [" + section + "]");
      continue;
    }
    const auto eq = line.find('=');
    if (eq == std::string::npos)
      throw std::runtime_error(origin + " line " + std::to_string(line_no) +
                               ": expected 'key = value'");
    const std::string key = join(split_ws(line.substr(0, eq)));
    const std::string value = join(split_ws(line.substr(eq + 1)));
    const FieldDef* found = nullptr;
    for (const auto& def : kFields)
      if (section == def.section && key == def.key) {
        found = &def;
        break;
      }
    if (!found)
      throw std::runtime_error(origin + " line " + std::to_string(line_no) +
                               ": unknown key '" + key + "' in [" + section + "]");
    assign(config, *found, value, origin, line_no);
  }
  return config;
}

PipelineConfig parse_config(const std::string& path) {
  return parse_config_text(read_file(path), path);
}

std::string config_snapshot(const PipelineConfig& config) {
  std::ostringstream ss;
  std::string section;
  for (const auto& def : kFields) {
    if (section != def.section) {
      if (!section.empty()) ss << '\n';
      section = def.section;
      ss << '[' << section << "]\n";
    }
    ss << def.key << " = " << render(config, def) << '\n';
  }
  return ss.str();
}

std::string config_reference() {
  const PipelineConfig defaults;
  std::ostringstream ss;
  for (const auto& def : kFields)
    ss << def.section << '.' << def.key << " = " << render(defaults, def) << "  # "
       << def.help << '\n';
  return ss.str();
}

}  // namespace umt
