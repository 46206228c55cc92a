#pragma once

#include <filesystem>
#include <memory>
#include <span>
#include <string>
#include <vector>

#include "simulpolicy/ctc.hpp"
#include "simulpolicy/engine.hpp"
#include "simulpolicy/manifest.hpp"
#include "simulpolicy/metrics.hpp"
#include "simulpolicy/synthetic.hpp"

namespace simulpolicy {

enum class EvalMode { kEndToEnd, kCascade };
enum class BackendKind { kSynthetic, kLogits };

// Synthetic backend settings; tokens_per_chunk is derived per run as
// chunk_size_ms / ms_per_token so that sweeps over chunk sizes keep the
// offline output identical.
struct SyntheticOptions {
  int ms_per_token = 125;
  int unstable_suffix_len = 0;
  PerturbationSensitivity sensitivity = PerturbationSensitivity::kFullInput;
  int agreement_window_ms = 0;
};

// Cascade desk-scale settings: stored LogitMatrix files stand in for a live
// ASR encoder; the n-best transcripts form the MT-stage input batch.
struct CascadeOptions {
  int beam = 8;
  int n_best = 4;
  CascadeMode mode = CascadeMode::kCtcPrefixBeamSearch;
  double ctc_weight = 0.5;
  int frame_ms = 40;  // duration of one logits frame
  std::shared_ptr<CandidateScorer> scorer;  // built from scorer_seed when null
  std::uint64_t scorer_seed = 1;
};

struct EvalOptions {
  EvalMode mode = EvalMode::kEndToEnd;
  BackendKind backend = BackendKind::kSynthetic;
  EngineConfig engine;
  SyntheticOptions synthetic;
  CascadeOptions cascade;
  Detokenizer detok = Detokenizer::kSpaceJoined;
  BleuOptions bleu;
  // AL's ideal schedule normalizer: hypothesis length by default, the
  // reference word count when set.
  bool al_reference_normalizer = false;
  bool skip_errors = false;
  int jobs = 1;
};

struct UtteranceEval {
  std::string id;
  bool ok = false;
  std::string error;
  UtteranceResult result;
  MetricReport metrics;
  std::string hypothesis_text;
  std::string reference_text;
};

struct CorpusReport {
  std::vector<UtteranceEval> utterances;
  std::size_t evaluated = 0;
  std::size_t failed = 0;
  double corpus_bleu = 0.0;
  double mean_al_ms = 0.0;
  double mean_ap = 0.0;
  double mean_dal_ms = 0.0;
  bool low_latency = false;
};

struct SweepConfig {
  std::vector<int> chunk_sizes_ms{250, 500, 1000};
  std::vector<PolicySpec> policies;
};

struct SweepRow {
  std::string policy;
  int chunk_ms = 0;
  double bleu = 0.0;
  double al_ms = 0.0;
  double ap = 0.0;
  double dal_ms = 0.0;
};

// Per-utterance backend derivation: the stream seed is hash(seed, id) so
// corpus parallelism cannot reorder randomness.
SyntheticTranslatorSpec make_utterance_backend_spec(const SyntheticOptions& opts,
                                                    int chunk_size_ms,
                                                    std::uint64_t seed,
                                                    const std::string& utterance_id);

// Runs the engine over every utterance and aggregates: corpus BLEU plus
// unweighted means of AL/AP/DAL over evaluated utterances. Per-utterance
// failures abort unless skip_errors is set, in which case they are recorded
// and excluded from the aggregates.
CorpusReport evaluate_corpus(const std::vector<Utterance>& utterances,
                             const EvalOptions& options);

// One evaluate_corpus per (policy, chunk size); rows in policy-major order.
std::vector<SweepRow> sweep(const std::vector<Utterance>& utterances,
                            const EvalOptions& options, const SweepConfig& config);

// Serialization used by the CLI; all of it is deterministic given the report.
std::string utterance_jsonl_line(const UtteranceEval& eval);
std::string summary_json(const CorpusReport& report, const EvalOptions& options);
std::string sweep_csv(std::span<const SweepRow> rows);

void write_eval_outputs(const CorpusReport& report, const EvalOptions& options,
                        const std::filesystem::path& out_dir);
void write_sweep_csv(std::span<const SweepRow> rows,
                     const std::filesystem::path& path);

}  // namespace simulpolicy
