#pragma once

#include <filesystem>
#include <string>
#include <vector>

#include "simulpolicy/ctc.hpp"
#include "simulpolicy/harness.hpp"
#include "simulpolicy/rng.hpp"
#include "simulpolicy/translator.hpp"

namespace simulpolicy::testing {

// Band-limited pseudo-random waveform, deterministic in the seed.
AudioBuffer make_test_audio(std::uint64_t seed, int duration_ms,
                            std::uint32_t sample_rate_hz = 16000);

// Random frame posteriors with rows normalized to 1.
LogitMatrix make_random_logits(RandomStream& rng, std::size_t frames,
                               std::size_t vocab_size);

// Fresh directory under the system temp root; removed on destruction.
class TempDir {
 public:
  explicit TempDir(const std::string& tag);
  ~TempDir();
  TempDir(const TempDir&) = delete;
  TempDir& operator=(const TempDir&) = delete;
  const std::filesystem::path& path() const { return path_; }

 private:
  std::filesystem::path path_;
};

// Writes WAV files plus a JSONL manifest whose references are the synthetic
// backend's offline output, so a commit-error-free run scores BLEU 100.
struct SyntheticCorpus {
  std::filesystem::path manifest;
  std::vector<std::string> ids;
  std::vector<TokenSeq> references;
};

SyntheticCorpus write_synthetic_corpus(const std::filesystem::path& dir,
                                       const SyntheticOptions& synthetic,
                                       int chunk_size_ms, std::uint64_t seed,
                                       const std::vector<int>& durations_ms,
                                       std::uint32_t sample_rate_hz = 16000);

// Scripted backend for contract tests: returns a fixed hypothesis keyed by
// the input's chunk count, regardless of content.
class ScriptedTranslator : public IncrementalTranslator {
 public:
  explicit ScriptedTranslator(std::vector<TokenSeq> outputs_per_chunk,
                              bool honor_forced_prefix = true)
      : outputs_(std::move(outputs_per_chunk)), honor_forced_(honor_forced_prefix) {}

  Hypothesis translate(const ModelInput& input,
                       std::span<const std::string> forced_prefix) override;

  bool concurrency_safe() const override { return true; }

 private:
  std::vector<TokenSeq> outputs_;
  bool honor_forced_;
};

}  // namespace simulpolicy::testing
