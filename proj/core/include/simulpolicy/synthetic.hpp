#pragma once

#include <atomic>
#include <cstdint>
#include <string_view>

#include "simulpolicy/ctc.hpp"
#include "simulpolicy/translator.hpp"

namespace simulpolicy {

enum class PerturbationSensitivity {
  kNone,        // output depends only on the prefix's chunk count
  kLengthOnly,  // unstable tail also depends on the payload length
  kFullInput,   // unstable tail also depends on a digest of the raw bytes
};

// Deterministic translator used as a test oracle. For an m-chunk prefix it
// emits m * tokens_per_chunk tokens. The leading tokens are a pure function
// of (seed, position) and therefore survive any input perturbation; the
// trailing `unstable_suffix_len` tokens additionally depend on the input
// digest selected by `sensitivity`, so regularized copies of a prefix
// disagree exactly on that suffix. Unstable tokens are printed with a "u"
// prefix, stable ones never are, which lets tests tell the two apart.
//
// agreement_window_ms > 0 models a decoder whose belief only refreshes
// every window of source audio: the digest is taken over the prefix rounded
// down to whole windows, and tokens settle to their stable value only once
// the windowed time has passed them. Consecutive chunks inside one window
// then agree on their (wrong) unstable guesses, which is the regime where
// local agreement over consecutive chunks breaks down while batched input
// diversity still exposes the instability.
struct SyntheticTranslatorSpec {
  int tokens_per_chunk = 2;
  int unstable_suffix_len = 0;
  PerturbationSensitivity sensitivity = PerturbationSensitivity::kFullInput;
  std::uint64_t seed = 0;
  int chunk_size_ms = 500;      // the engine chunk size; sets the token clock
  int agreement_window_ms = 0;  // 0: the digest refreshes every decode

  void validate() const;
};

Hypothesis synthetic_translate(const SyntheticTranslatorSpec& spec,
                               const ModelInput& input,
                               std::span<const std::string> forced_prefix);

class SyntheticTranslator : public IncrementalTranslator {
 public:
  explicit SyntheticTranslator(SyntheticTranslatorSpec spec);

  Hypothesis translate(const ModelInput& input,
                       std::span<const std::string> forced_prefix) override {
    calls_.fetch_add(1, std::memory_order_relaxed);
    return synthetic_translate(spec_, input, forced_prefix);
  }

  bool concurrency_safe() const override { return true; }

  // Invocation counter for the chunk-count exactness checks.
  std::uint64_t calls() const { return calls_.load(std::memory_order_relaxed); }

  // The offline decode of a complete input; serves as the reference text.
  TokenSeq offline_tokens(const ModelInput& full_input) const {
    return synthetic_translate(spec_, full_input, {}).tokens;
  }

  const SyntheticTranslatorSpec& spec() const { return spec_; }

  static bool is_unstable_token(std::string_view token) {
    return !token.empty() && token.front() == 'u';
  }

 private:
  SyntheticTranslatorSpec spec_;
  std::atomic<std::uint64_t> calls_{0};
};

// Deterministic seeded stand-in for an attention-decoder scorer.
class SyntheticScorer : public CandidateScorer {
 public:
  explicit SyntheticScorer(std::uint64_t seed) : seed_(seed) {}
  double score(const TokenSeq& transcript) override;

 private:
  std::uint64_t seed_;
};

}  // namespace simulpolicy
