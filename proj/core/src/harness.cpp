#include "simulpolicy/harness.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <exception>
#include <fstream>
#include <mutex>
#include <sstream>
#include <thread>

#include "json.hpp"
#include "simulpolicy/errors.hpp"
#include "simulpolicy/rng.hpp"
#include "simulpolicy/wav.hpp"

namespace simulpolicy {

namespace {

using nlohmann::json;

// Streams a stored LogitMatrix by frames: each chunk decodes the growing
// frame prefix into n-best transcripts, which form the MT-stage input batch
// (single best for hold/la, the whole batch for r-bi).
class LogitsChunkSource final : public ChunkSource {
 public:
  LogitsChunkSource(LogitMatrix logits, int chunk_size_ms, const CascadeOptions& opts,
                    bool batch_mode)
      : logits_(std::move(logits)), opts_(opts), batch_mode_(batch_mode) {
    if (opts.frame_ms < 1) throw InvalidParam("cascade: frame_ms must be >= 1");
    logits_.validate();
    const std::size_t total = logits_.frames();
    if (total == 0) throw EmptyInput("cascade: logits file has no frames");
    std::size_t frames_per_chunk =
        static_cast<std::size_t>(std::max(1, chunk_size_ms / opts.frame_ms));
    for (std::size_t end = frames_per_chunk; end < total; end += frames_per_chunk) {
      boundaries_.push_back(end);
    }
    boundaries_.push_back(total);
    if (opts_.mode == CascadeMode::kAttentionRescoring && !opts_.scorer) {
      scorer_ = std::make_shared<SyntheticScorer>(opts_.scorer_seed);
    } else {
      scorer_ = opts_.scorer;
    }
  }

  std::size_t chunk_count() const override { return boundaries_.size(); }

  double consumed_ms(std::size_t chunk) const override {
    return static_cast<double>(boundaries_.at(chunk - 1)) * opts_.frame_ms;
  }

  double total_duration_ms() const override {
    return static_cast<double>(logits_.frames()) * opts_.frame_ms;
  }

  ChunkInputs chunk_inputs(std::size_t chunk) override {
    const LogitMatrix prefix = logits_.prefix(boundaries_.at(chunk - 1));
    const int n_best = batch_mode_ ? opts_.n_best : 1;
    const auto transcripts =
        cascade_batch(prefix, opts_.mode, opts_.beam, std::min(n_best, opts_.beam),
                      scorer_.get(), opts_.ctc_weight);
    ChunkInputs inputs;
    inputs.pre_batched = batch_mode_;
    for (const auto& t : transcripts) {
      ModelInput input;
      input.payload = t;
      input.chunk_count = chunk;
      inputs.candidates.push_back(std::move(input));
    }
    return inputs;
  }

 private:
  LogitMatrix logits_;
  CascadeOptions opts_;
  bool batch_mode_;
  std::shared_ptr<CandidateScorer> scorer_;
  std::vector<std::size_t> boundaries_;
};

int derive_tokens_per_chunk(const SyntheticOptions& opts, int chunk_size_ms) {
  if (opts.ms_per_token < 1) throw InvalidParam("synthetic: ms_per_token must be >= 1");
  if (chunk_size_ms % opts.ms_per_token != 0) {
    throw InvalidParam("synthetic: chunk_size_ms (" + std::to_string(chunk_size_ms) +
                       ") must be a multiple of ms_per_token (" +
                       std::to_string(opts.ms_per_token) + ")");
  }
  return chunk_size_ms / opts.ms_per_token;
}

std::size_t whitespace_word_count(const std::string& text) {
  std::size_t count = 0;
  bool in_word = false;
  for (char c : text) {
    const bool space = c == ' ' || c == '\t' || c == '\n' || c == '\r';
    if (!space && !in_word) ++count;
    in_word = !space;
  }
  return count;
}

MetricReport compute_metrics(const UtteranceResult& result, const std::string& hyp_text,
                             const std::string& ref_text, const EvalOptions& options) {
  const DelaySchedule sched =
      word_delays(result.records, options.detok, result.src_duration_ms);
  MetricReport report;
  const std::size_t normalizer =
      options.al_reference_normalizer ? whitespace_word_count(ref_text) : 0;
  report.al_ms = average_lagging(sched, normalizer);
  report.ap = average_proportion(sched);
  report.dal_ms = dal(sched);
  report.low_latency = classify_latency(report.al_ms);
  const std::string hyp[] = {hyp_text};
  const std::string ref[] = {ref_text};
  report.bleu = bleu_text(hyp, ref, options.bleu);
  return report;
}

UtteranceEval evaluate_one(const Utterance& utt, const EvalOptions& options) {
  UtteranceEval eval;
  eval.id = utt.id;
  eval.reference_text = utt.reference;

  EngineConfig config = options.engine;
  config.seed = derive_seed(options.engine.seed, utt.id);

  const auto policy = make_policy(config.policy);
  SyntheticTranslator backend(make_utterance_backend_spec(
      options.synthetic, config.chunk_size_ms, options.engine.seed, utt.id));

  UtteranceResult result;
  if (options.mode == EvalMode::kEndToEnd) {
    if (options.backend != BackendKind::kSynthetic) {
      throw InvalidParam("end-to-end mode requires the synthetic backend");
    }
    if (!utt.has_audio()) {
      throw ManifestError("utterance '" + utt.id + "' has no audio path");
    }
    const AudioBuffer audio = read_wav(utt.audio_path);
    result = run_incremental(backend, audio, *policy, config);
  } else {
    if (options.backend != BackendKind::kLogits) {
      throw InvalidParam("cascade mode requires the logits backend");
    }
    if (!utt.has_logits()) {
      throw ManifestError("utterance '" + utt.id + "' has no logits path");
    }
    LogitsChunkSource source(load_logits(utt.logits_path), config.chunk_size_ms,
                             options.cascade,
                             config.policy.kind == PolicySpec::Kind::kRBi);
    result = run_incremental(backend, source, *policy, config);
  }

  eval.hypothesis_text = detokenize(result.tokens(), options.detok);
  eval.metrics = compute_metrics(result, eval.hypothesis_text, utt.reference, options);
  eval.result = std::move(result);
  eval.ok = true;
  return eval;
}

double round6(double v) { return std::round(v * 1e6) / 1e6; }

json metrics_json(const MetricReport& m) {
  return json{{"bleu", round6(m.bleu)},
              {"AL_ms", round6(m.al_ms)},
              {"AP", round6(m.ap)},
              {"DAL_ms", round6(m.dal_ms)},
              {"low_latency", m.low_latency}};
}

}  // namespace

SyntheticTranslatorSpec make_utterance_backend_spec(const SyntheticOptions& opts,
                                                    int chunk_size_ms,
                                                    std::uint64_t seed,
                                                    const std::string& utterance_id) {
  SyntheticTranslatorSpec spec;
  spec.tokens_per_chunk = derive_tokens_per_chunk(opts, chunk_size_ms);
  spec.unstable_suffix_len = opts.unstable_suffix_len;
  spec.sensitivity = opts.sensitivity;
  spec.seed = derive_seed(mix64(seed, 0xBACCE17DULL), utterance_id);
  spec.chunk_size_ms = chunk_size_ms;
  spec.agreement_window_ms = opts.agreement_window_ms;
  return spec;
}

CorpusReport evaluate_corpus(const std::vector<Utterance>& utterances,
                             const EvalOptions& options) {
  if (utterances.empty()) throw EmptyCorpus("evaluate_corpus: no utterances");
  options.engine.validate();
  if (options.mode == EvalMode::kEndToEnd &&
      options.engine.policy.kind == PolicySpec::Kind::kRBi) {
    options.engine.policy.validate(/*require_regularizers=*/true);
  }

  CorpusReport report;
  report.utterances.resize(utterances.size());

  const int jobs = std::max(1, options.jobs);
  std::atomic<std::size_t> next{0};
  std::mutex fail_mutex;
  std::exception_ptr failure;

  auto worker = [&] {
    while (true) {
      const std::size_t i = next.fetch_add(1);
      if (i >= utterances.size()) return;
      {
        std::scoped_lock lock(fail_mutex);
        if (failure) return;
      }
      UtteranceEval eval;
      try {
        eval = evaluate_one(utterances[i], options);
      } catch (const std::exception& e) {
        if (!options.skip_errors) {
          std::scoped_lock lock(fail_mutex);
          if (!failure) failure = std::current_exception();
          return;
        }
        eval.id = utterances[i].id;
        eval.ok = false;
        eval.error = e.what();
      }
      report.utterances[i] = std::move(eval);
    }
  };

  if (jobs == 1) {
    worker();
  } else {
    std::vector<std::thread> pool;
    pool.reserve(static_cast<std::size_t>(jobs));
    for (int t = 0; t < jobs; ++t) pool.emplace_back(worker);
    for (auto& th : pool) th.join();
  }
  if (failure) std::rethrow_exception(failure);

  std::vector<std::string> hyp_texts, ref_texts;
  for (const auto& eval : report.utterances) {
    if (!eval.ok) {
      report.failed += 1;
      continue;
    }
    report.evaluated += 1;
    hyp_texts.push_back(eval.hypothesis_text);
    ref_texts.push_back(eval.reference_text);
    report.mean_al_ms += eval.metrics.al_ms;
    report.mean_ap += eval.metrics.ap;
    report.mean_dal_ms += eval.metrics.dal_ms;
  }
  if (report.evaluated == 0) throw EmptyCorpus("evaluate_corpus: every utterance failed");
  report.corpus_bleu = bleu_text(hyp_texts, ref_texts, options.bleu);
  report.mean_al_ms /= static_cast<double>(report.evaluated);
  report.mean_ap /= static_cast<double>(report.evaluated);
  report.mean_dal_ms /= static_cast<double>(report.evaluated);
  report.low_latency = classify_latency(report.mean_al_ms);
  return report;
}

std::vector<SweepRow> sweep(const std::vector<Utterance>& utterances,
                            const EvalOptions& options, const SweepConfig& config) {
  if (config.chunk_sizes_ms.empty() || config.policies.empty()) {
    throw InvalidParam("sweep: need at least one chunk size and one policy");
  }
  std::vector<SweepRow> rows;
  for (const auto& policy : config.policies) {
    for (int chunk_ms : config.chunk_sizes_ms) {
      EvalOptions run = options;
      run.engine.policy = policy;
      run.engine.chunk_size_ms = chunk_ms;
      const CorpusReport report = evaluate_corpus(utterances, run);
      rows.push_back(SweepRow{policy.label(), chunk_ms, report.corpus_bleu,
                              report.mean_al_ms, report.mean_ap, report.mean_dal_ms});
    }
  }
  return rows;
}

std::string utterance_jsonl_line(const UtteranceEval& eval) {
  json line;
  line["id"] = eval.id;
  if (!eval.ok) {
    line["error"] = eval.error;
    return line.dump();
  }
  json tokens = json::array();
  json consumed = json::array();
  json chunks = json::array();
  for (const auto& r : eval.result.records) {
    tokens.push_back(r.token);
    consumed.push_back(round6(r.consumed_ms));
    chunks.push_back(r.chunk_index);
  }
  line["tokens"] = std::move(tokens);
  line["consumed_ms"] = std::move(consumed);
  line["chunk_index"] = std::move(chunks);
  line["policy_committed"] = eval.result.policy_committed;
  line["src_duration_ms"] = round6(eval.result.src_duration_ms);
  line["hypothesis"] = eval.hypothesis_text;
  line["reference"] = eval.reference_text;
  line["metrics"] = metrics_json(eval.metrics);
  return line.dump();
}

std::string summary_json(const CorpusReport& report, const EvalOptions& options) {
  json summary;
  summary["utterances"] = report.evaluated + report.failed;
  summary["evaluated"] = report.evaluated;
  summary["failed"] = report.failed;
  summary["corpus_bleu"] = round6(report.corpus_bleu);
  summary["mean_AL_ms"] = round6(report.mean_al_ms);
  summary["mean_AP"] = round6(report.mean_ap);
  summary["mean_DAL_ms"] = round6(report.mean_dal_ms);
  summary["low_latency"] = report.low_latency;
  summary["config"] = {
      {"mode", options.mode == EvalMode::kEndToEnd ? "e2e" : "cascade"},
      {"policy", options.engine.policy.label()},
      {"chunk_ms", options.engine.chunk_size_ms},
      {"seed", options.engine.seed},
  };
  return summary.dump(2) + "\n";
}

std::string sweep_csv(std::span<const SweepRow> rows) {
  std::ostringstream out;
  out << "policy,chunk_ms,bleu,al_ms,ap,dal_ms\n";
  out.setf(std::ios::fixed);
  out.precision(6);
  for (const auto& r : rows) {
    out << r.policy << ',' << r.chunk_ms << ',' << r.bleu << ',' << r.al_ms << ','
        << r.ap << ',' << r.dal_ms << '\n';
  }
  return out.str();
}

void write_eval_outputs(const CorpusReport& report, const EvalOptions& options,
                        const std::filesystem::path& out_dir) {
  std::filesystem::create_directories(out_dir);
  {
    std::ofstream jsonl(out_dir / "utterances.jsonl");
    if (!jsonl) throw IoError("cannot write " + (out_dir / "utterances.jsonl").string());
    for (const auto& eval : report.utterances) {
      jsonl << utterance_jsonl_line(eval) << '\n';
    }
  }
  std::ofstream summary(out_dir / "summary.json");
  if (!summary) throw IoError("cannot write " + (out_dir / "summary.json").string());
  summary << summary_json(report, options);
}

void write_sweep_csv(std::span<const SweepRow> rows,
                     const std::filesystem::path& path) {
  if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
  std::ofstream out(path);
  if (!out) throw IoError("cannot write " + path.string());
  out << sweep_csv(rows);
}

}  // namespace simulpolicy
