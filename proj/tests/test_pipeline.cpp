#include <doctest.h>

#include <filesystem>
#include <set>

#include "umt/bench.hpp"
#include "umt/pipeline.hpp"
#include "umt/rng.hpp"
#include "umt/text.hpp"

using namespace umt;

namespace {

// Identity one-word tables over a tiny shared vocabulary.
TranslationModel identity_model(const std::vector<std::string>& vocab,
                                std::shared_ptr<const NgramLm> lm, const char* src,
                                const char* tgt) {
  TranslationModel model;
  model.table.source_language = src;
  model.table.target_language = tgt;
  model.table.max_phrase_len = 1;
  for (const auto& w : vocab) model.table.entries[w] = {{w, 1.0, 1.0}};
  model.target_lm = std::move(lm);
  model.reordering_enabled = false;
  model.beam_size = 4;
  return model;
}

Corpus tiny_corpus(const std::vector<std::string>& vocab, int sentences,
                   std::uint64_t seed) {
  Rng rng(seed);
  Corpus c;
  for (int s = 0; s < sentences; ++s) {
    Sentence sent;
    const int len = 3 + int(rng.below(4));
    for (int i = 0; i < len; ++i) sent.push_back(vocab[rng.below(vocab.size())]);
    c.add(sent);
  }
  return c;
}

PipelineConfig mini_bench_config(const std::filesystem::path& dir) {
  PipelineConfig cfg;
  cfg.artifact_dir = dir.string();
  cfg.bench_sentences = 2000;
  cfg.bench_test_size = 200;
  cfg.bench_vocab = 300;
  cfg.bt_sample_size = 600;
  cfg.rt_holdout = 60;
  cfg.emb_dimension = 16;
  cfg.emb_epochs = 2;
  cfg.emb_window = 3;
  cfg.emb_min_count = 2;
  cfg.emb_subsample = 1e-2;
  cfg.align_max_seed = 4000;
  cfg.induce_top_k = 20;
  cfg.induce_max_src_phrases = 2000;
  cfg.lm_order = 3;
  cfg.beam_size = 5;
  cfg.iterations = 1;
  cfg.seed = 11;
  return cfg;
}

}  // namespace

TEST_CASE("build_seed_models wires tables, LMs, and monotone decoding") {
  const std::vector<std::string> vocab{"u", "v", "w"};
  auto lm = std::make_shared<NgramLm>(train_lm(tiny_corpus(vocab, 30, 1), 2));
  PhraseTable induced;
  induced.source_language = "a";
  induced.target_language = "b";
  induced.entries["u"] = {{"v", 0.6, 0.3}};
  induced.entries["w"] = {{"u", 0.4, 0.7}};

  PipelineConfig cfg;
  auto [st, ts] = build_seed_models(induced, lm, lm, cfg);
  CHECK_FALSE(st.reordering_enabled);
  CHECK_FALSE(ts.reordering_enabled);

  // Forward model carries the induced table verbatim.
  REQUIRE(st.table.lookup("u"));
  CHECK((*st.table.lookup("u"))[0].target == "v");
  CHECK((*st.table.lookup("u"))[0].p_tgt_given_src == 0.6);

  // Reverse model is the transpose with swapped fields.
  REQUIRE(ts.table.lookup("v"));
  CHECK((*ts.table.lookup("v"))[0].target == "u");
  CHECK((*ts.table.lookup("v"))[0].p_tgt_given_src == 0.3);

  CHECK_THROWS(build_seed_models(PhraseTable{}, lm, lm, cfg));
}

TEST_CASE("back_translate pairs translations with genuine sentences") {
  const std::vector<std::string> vocab{"p", "q", "r"};
  const Corpus corpus = tiny_corpus(vocab, 40, 2);
  auto lm = std::make_shared<NgramLm>(train_lm(corpus, 2));
  const TranslationModel model = identity_model(vocab, lm, "a", "b");

  const SyntheticBitext empty = back_translate(model, corpus, 0, 5, 1, 0);
  CHECK(empty.size() == 0);

  const SyntheticBitext bitext = back_translate(model, corpus, 25, 5, 1, 0);
  REQUIRE(bitext.size() == 25);
  CHECK(bitext.generator_direction == "a->b");
  CHECK(bitext.source_language == "b");
  CHECK(bitext.target_language == corpus.language);

  std::set<Sentence> originals(corpus.sentences.begin(), corpus.sentences.end());
  for (std::size_t i = 0; i < bitext.size(); ++i) {
    CHECK(originals.count(bitext.target[i]) == 1);  // genuine side verbatim
    CHECK(bitext.source[i] == bitext.target[i]);    // identity model output
  }
}

TEST_CASE("train_iteration on a copy bitext learns the identity with high confidence") {
  // Sentences draw without replacement so copy pairs align diagonally.
  const std::vector<std::string> vocab{"k0", "k1", "k2", "k3", "k4",
                                       "k5", "k6", "k7", "k8", "k9"};
  Rng rng(3);
  Corpus corpus;
  for (int s = 0; s < 500; ++s) {
    std::vector<std::string> pool = vocab;
    Sentence sent;
    const int len = 3 + int(rng.below(4));
    for (int i = 0; i < len; ++i) {
      const std::size_t pick = rng.below(pool.size());
      sent.push_back(pool[pick]);
      pool.erase(pool.begin() + pick);
    }
    corpus.add(sent);
  }
  auto lm = std::make_shared<NgramLm>(train_lm(corpus, 3));

  SyntheticBitext bitext;
  bitext.source_language = "a";
  bitext.target_language = "b";
  for (const auto& sent : corpus.sentences) {
    bitext.source.push_back(sent);
    bitext.target.push_back(sent);
  }

  PipelineConfig cfg;
  const TranslationModel model = train_iteration(bitext, lm, cfg);
  CHECK(model.reordering_enabled);
  CHECK(model.target_lm == lm);  // the LM artifact is fixed, not retrained
  for (const auto& w : vocab) {
    const auto* entries = model.table.lookup(w);
    REQUIRE_MESSAGE(entries, "missing entry for ", w);
    CHECK((*entries)[0].target == w);
    CHECK((*entries)[0].p_tgt_given_src > 0.9);
  }

  CHECK_THROWS(train_iteration(SyntheticBitext{}, lm, cfg));
}

TEST_CASE("round_trip_bleu is 100 for inverse models and near 0 for constant output") {
  const std::vector<std::string> vocab{"m", "n", "o", "p"};
  const Corpus held = tiny_corpus(vocab, 30, 4);
  auto lm = std::make_shared<NgramLm>(train_lm(held, 2));
  const TranslationModel st = identity_model(vocab, lm, "a", "b");
  const TranslationModel ts = identity_model(vocab, lm, "b", "a");
  CHECK(round_trip_bleu(st, ts, held, held, false, 1) == doctest::Approx(100.0));

  TranslationModel constant = st;
  constant.table.entries.clear();
  for (const auto& w : vocab) constant.table.entries[w] = {{"m", 1.0, 1.0}};
  CHECK(round_trip_bleu(constant, ts, held, Corpus{}, true, 1) < 5.0);

  CHECK_THROWS(round_trip_bleu(st, ts, Corpus{}, Corpus{}, false, 1));
}

TEST_CASE("tune_weights maximizes dev BLEU over the grid") {
  const std::vector<std::string> vocab{"x", "y", "z"};
  const Corpus dev = tiny_corpus(vocab, 20, 6);
  auto lm = std::make_shared<NgramLm>(train_lm(dev, 2));
  const TranslationModel model = identity_model(vocab, lm, "a", "b");

  SUBCASE("grid of one returns that point") {
    LogLinearWeights only;
    only.lm = 0.77;
    const TuneResult result = tune_weights(model, dev, dev, {only}, 1);
    CHECK(result.weights.lm == 0.77);
  }

  SUBCASE("result is at least as good as the default") {
    const auto grid = weight_grid(model.weights, 8, 21);
    REQUIRE(grid.size() == 8);
    const TuneResult best = tune_weights(model, dev, dev, grid, 1);
    const TuneResult default_only = tune_weights(model, dev, dev, {model.weights}, 1);
    CHECK(best.dev_bleu >= default_only.dev_bleu);
  }
}

TEST_CASE("cipher benchmark generation contracts") {
  PipelineConfig cfg = mini_bench_config("unused");
  const CipherBenchmark bench = make_cipher_benchmark(cfg);

  // Disjoint halves, each half roughly (sentences - test)/2.
  CHECK(bench.src_half.size() == 900);
  CHECK(bench.tgt_half.size() == 900);
  CHECK(bench.gold_src2tgt.inputs.size() == 200);
  std::set<Sentence> src_set(bench.src_half.sentences.begin(),
                             bench.src_half.sentences.end());
  // The target side deciphers back to the source tokens (the order
  // transform permutes within adjacent pairs only).
  std::unordered_map<std::string, std::string> decipher;
  for (const auto& [a, b] : bench.gold_dictionary.pairs) decipher[b] = a;
  for (std::size_t i = 0; i < bench.gold_tgt2src.inputs.size(); ++i) {
    const Sentence& ref = bench.gold_tgt2src.references.sentences[i];
    Sentence back;
    for (const auto& tok : bench.gold_tgt2src.inputs.sentences[i])
      back.push_back(decipher.at(tok));
    REQUIRE(back.size() == ref.size());
    for (std::size_t j = 0; j + 1 < back.size(); j += 2) {
      const bool straight = back[j] == ref[j] && back[j + 1] == ref[j + 1];
      const bool swapped = back[j] == ref[j + 1] && back[j + 1] == ref[j];
      CHECK((straight || swapped));
    }
    if (back.size() % 2 == 1) CHECK(back.back() == ref.back());
  }
  // The cipher is a bijection over types.
  std::set<std::string> images;
  for (const auto& [a, b] : bench.gold_dictionary.pairs) images.insert(b);
  CHECK(images.size() == bench.gold_dictionary.pairs.size());
  CHECK(bench.preserved_types > 0);

  // Determinism.
  const CipherBenchmark again = make_cipher_benchmark(cfg);
  CHECK(again.src_half.sentences == bench.src_half.sentences);
  CHECK(again.tgt_half.sentences == bench.tgt_half.sentences);
}

TEST_CASE("mini benchmark pipeline end to end") {
  const auto dir = std::filesystem::temp_directory_path() / "umt_mini_bench";
  std::filesystem::remove_all(dir);
  PipelineConfig cfg = mini_bench_config(dir);

  const auto reports = run_synthbench(cfg);

  // Two seed rows plus two rows per iteration.
  REQUIRE(reports.size() == 2 + 2 * std::size_t(cfg.iterations));
  CHECK(reports[0].iteration == 0);
  CHECK(reports[1].iteration == 0);
  for (const auto& r : reports) {
    CHECK(r.round_trip_bleu >= 0.0);
    CHECK(r.round_trip_bleu <= 100.0);
    CHECK(r.test_bleu >= 0.0);
    CHECK(r.test_bleu <= 100.0);
    CHECK(r.table_size > 0);
  }

  // Artifact layout.
  for (const char* sub :
       {"corpora", "embeddings", "alignment", "lm", "tables/iter_0", "models/iter_0",
        "models/iter_1", "reports"})
    CHECK_MESSAGE(std::filesystem::exists(dir / sub), "missing ", sub);
  CHECK(std::filesystem::exists(dir / "manifest.txt"));
  CHECK(std::filesystem::exists(dir / "config.cfg"));
  CHECK_FALSE(std::filesystem::exists(dir / ".lock"));

  // The report TSV matches the returned rows.
  const auto tsv_lines = read_lines((dir / "reports" / "report.tsv").string());
  CHECK(tsv_lines.size() == reports.size() + 1);
  CHECK(tsv_lines[0] == "iteration\tdirection\tround_trip_bleu\ttest_bleu\ttable_size");

  // Both iteration models reference the same fixed LM artifacts.
  const auto read_cfg_value = [&](const std::filesystem::path& p, const std::string& key) {
    for (const auto& line : read_lines(p.string()))
      if (line.rfind(key + " = ", 0) == 0) return line.substr(key.size() + 3);
    return std::string();
  };
  const auto lm_seed = read_cfg_value(dir / "models/iter_0/src2tgt/model.cfg", "lm");
  const auto lm_iter = read_cfg_value(dir / "models/iter_1/src2tgt/model.cfg", "lm");
  CHECK(lm_seed == lm_iter);

  // Persisted models reload to byte-identical translations of a probe set.
  Corpus probe;
  probe.sentences.assign(cfg.bench_sentences ? 20 : 0, Sentence{});
  {
    const CipherBenchmark bench = make_cipher_benchmark(cfg);
    for (int i = 0; i < 20; ++i)
      probe.sentences[i] = bench.gold_src2tgt.inputs.sentences[i];
  }
  const TranslationModel reloaded = load_model((dir / "models/iter_1/src2tgt").string());
  const auto first = translate_corpus(reloaded, probe, 1).sentences;
  const TranslationModel reloaded2 = load_model((dir / "models/iter_1/src2tgt").string());
  const auto second = translate_corpus(reloaded2, probe, 1).sentences;
  CHECK(first == second);

  // Seed-stage diagnostics exist because the benchmark provides a gold dict.
  CHECK(std::filesystem::exists(dir / "alignment" / "p_at_1.txt"));

  std::filesystem::remove_all(dir);
}

TEST_CASE("pipeline artifact lock excludes concurrent runs") {
  const auto dir = std::filesystem::temp_directory_path() / "umt_lock_test";
  std::filesystem::remove_all(dir);
  std::filesystem::create_directories(dir);
  write_file((dir / ".lock").string(), "held\n");
  PipelineConfig cfg = mini_bench_config(dir);
  Pipeline pipeline(cfg);
  CHECK_THROWS_WITH_AS(pipeline.run(0), doctest::Contains("locked"), std::runtime_error);
  std::filesystem::remove_all(dir);
}

TEST_CASE("reports_tsv formats missing test BLEU as a dash") {
  IterationReport r;
  r.iteration = 2;
  r.direction = "a->b";
  r.round_trip_bleu = 12.5;
  r.test_bleu = -1.0;
  r.table_size = 42;
  const std::string tsv = reports_tsv({r});
  CHECK(tsv.find("2\ta->b\t12.5\t-\t42") != std::string::npos);
}
