#pragma once

#include <filesystem>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include "umt/bleu.hpp"
#include "umt/config.hpp"
#include "umt/decoder.hpp"

namespace umt {

struct IterationReport {
  int iteration = 0;         // 0 is the seed model
  std::string direction;     // "<src>-><tgt>"
  double round_trip_bleu = 0.0;
  double test_bleu = -1.0;   // -1 when no gold test set is configured
  std::size_t table_size = 0;
  std::size_t sample_size = 0;
  double wall_time_s = 0.0;
};

// Gold parallel test data for one direction.
struct GoldTestSet {
  Corpus inputs;
  Corpus references;
};

// Seed translation models from the induced phrase table: the reverse
// direction is the transposed table, reordering is disabled for both.
std::pair<TranslationModel, TranslationModel> build_seed_models(
    const PhraseTable& induced, std::shared_ptr<const NgramLm> lm_src,
    std::shared_ptr<const NgramLm> lm_tgt, const PipelineConfig& config);

// Samples n sentences, translates them, and pairs (translation, original):
// the machine-generated side is the source side of the next training round.
SyntheticBitext back_translate(const TranslationModel& model, const Corpus& corpus,
                               std::size_t n, std::uint64_t seed, int threads,
                               int iteration);

// IBM-1 in both directions, grow-diag symmetrization, phrase extraction up to
// max_phrase_len, pruning, and a model with reordering enabled and the fixed
// target-side language model.
TranslationModel train_iteration(const SyntheticBitext& bitext,
                                 std::shared_ptr<const NgramLm> target_lm,
                                 const PipelineConfig& config);

// Corpus BLEU of two-hop reconstructions against the originals, averaged over
// the source-side and target-side round trips (epsilon-smoothed by default so
// early iterations stay comparable).
double round_trip_bleu(const TranslationModel& model_st, const TranslationModel& model_ts,
                       const Corpus& held_out_src, const Corpus& held_out_tgt,
                       bool smoothing, int threads);

struct TuneResult {
  LogLinearWeights weights;
  double dev_bleu = 0.0;
};

// Picks the candidate maximizing dev BLEU; candidate 0 should be the current
// weights so tuning never regresses on the dev set.
TuneResult tune_weights(const TranslationModel& model, const Corpus& dev_inputs,
                        const Corpus& dev_references,
                        const std::vector<LogLinearWeights>& candidates, int threads);

std::vector<LogLinearWeights> weight_grid(const LogLinearWeights& center,
                                          std::size_t size, std::uint64_t seed);

// Full run of the alternating back-translation schedule with persisted
// artifacts. The artifact directory is owned exclusively via a lock file.
class Pipeline {
public:
  explicit Pipeline(PipelineConfig config);

  // Optional gold test sets (synthetic benchmark / ablations).
  void set_gold(GoldTestSet src2tgt, GoldTestSet tgt2src);
  // Optional gold dictionary for P@1 diagnostics.
  void set_gold_dictionary(SeedDictionary dict);
  // Corpora may be injected directly instead of read from config paths.
  void set_corpora(Corpus src, Corpus tgt);

  // Builds every prerequisite (corpora, embeddings, alignment, LMs, seed
  // models) and runs `iterations` rounds; returns one report per direction
  // per iteration plus the two seed rows. Failures carry the stage name.
  std::vector<IterationReport> run(int iterations);

  const TranslationModel& model_src2tgt() const { return model_st_; }
  const TranslationModel& model_tgt2src() const { return model_ts_; }
  double seed_p_at_1() const { return seed_p_at_1_; }
  const std::filesystem::path& artifact_dir() const { return dir_; }

private:
  void stage_corpora();
  void stage_embeddings();
  void stage_alignment();
  void stage_language_models();
  void stage_seed_models();
  IterationReport report_for(const TranslationModel& model, int iteration,
                             bool src2tgt, std::size_t sample_size, double wall_s);
  void persist_model(const TranslationModel& model, int iteration, bool src2tgt);
  void write_reports(const std::vector<IterationReport>& reports) const;
  void write_manifest() const;

  PipelineConfig cfg_;
  std::filesystem::path dir_;
  Corpus src_, tgt_;
  Corpus holdout_src_, holdout_tgt_;
  EmbeddingSpace emb_src_, emb_tgt_;  // centered + normalized
  RotationMap map_;
  SeedDictionary seed_dict_;
  std::shared_ptr<NgramLm> lm_src_, lm_tgt_;
  TranslationModel model_st_, model_ts_;
  std::optional<GoldTestSet> gold_st_, gold_ts_;
  std::optional<SeedDictionary> gold_dict_;
  double seed_p_at_1_ = -1.0;
  bool corpora_injected_ = false;
};

// Report TSV: iteration<TAB>direction<TAB>round_trip_bleu<TAB>test_bleu<TAB>table_size
std::string reports_tsv(const std::vector<IterationReport>& reports);

struct AblationRow {
  double level = 0.0;
  int iteration = 0;
  double bleu = 0.0;
};

enum class AblationAxis { kInitQuality, kLmData, kBtData };
AblationAxis ablation_axis_from_name(const std::string& name);

// Reruns the pipeline varying exactly one axis; BLEU rows use the
// target->source direction (the paper reports fr->en). Requires gold test
// sets, so it runs on the synthetic benchmark.
std::vector<AblationRow> run_ablation(const PipelineConfig& config, AblationAxis axis,
                                      const std::vector<double>& levels);

std::string ablation_tsv(const std::vector<AblationRow>& rows);

// FNV-1a content hashes of every artifact plus the configuration snapshot.
void write_manifest_file(const std::filesystem::path& dir,
                         const std::string& config_snapshot);

}  // namespace umt
