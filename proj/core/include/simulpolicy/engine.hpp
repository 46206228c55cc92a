#pragma once

#include <cstdint>
#include <functional>
#include <span>
#include <vector>

#include "simulpolicy/audio.hpp"
#include "simulpolicy/policy.hpp"
#include "simulpolicy/translator.hpp"
#include "simulpolicy/types.hpp"

namespace simulpolicy {

struct EngineConfig {
  int chunk_size_ms = 500;  // must lie in [50, 10000]
  PolicySpec policy;
  std::uint64_t seed = 0;
  bool finalize_on_last_chunk = true;

  void validate() const;
};

// Commit log for one utterance in flight. Committed records only grow;
// `finished` flips false -> true exactly once. Per-policy memory lives in
// the Policy instance driving the stream.
struct StreamState {
  std::vector<CommitRecord> committed;
  std::size_t chunk_index = 0;
  bool finished = false;
};

struct UtteranceResult {
  std::vector<CommitRecord> records;
  std::size_t chunk_count = 0;
  double src_duration_ms = 0.0;
  std::size_t decode_calls = 0;
  // Records before this index were committed by the policy; the rest by
  // end-of-stream finalization.
  std::size_t policy_committed = 0;

  TokenSeq tokens() const {
    TokenSeq out;
    out.reserve(records.size());
    for (const auto& r : records) out.push_back(r.token);
    return out;
  }
};

// Strictly increasing prefix end-indices p_1 < ... < p_K with p_K = len;
// p_i = min(i * chunk_samples, len), chunk_samples = floor(ms * rate / 1000).
// The final chunk absorbs the remainder.
std::vector<std::size_t> chunk_boundaries(const AudioBuffer& audio, int chunk_size_ms);

// Streaming view of one utterance: chunk boundaries plus the candidate
// model inputs for every prefix. Chunk indices are 1-based.
class ChunkSource {
 public:
  virtual ~ChunkSource() = default;
  virtual std::size_t chunk_count() const = 0;
  virtual double consumed_ms(std::size_t chunk) const = 0;
  virtual double total_duration_ms() const = 0;
  virtual ChunkInputs chunk_inputs(std::size_t chunk) = 0;
};

// End-to-end source: each chunk yields the growing audio prefix.
class AudioChunkSource : public ChunkSource {
 public:
  AudioChunkSource(AudioBuffer audio, int chunk_size_ms);

  std::size_t chunk_count() const override { return boundaries_.size(); }
  double consumed_ms(std::size_t chunk) const override;
  double total_duration_ms() const override { return audio_.duration_ms(); }
  ChunkInputs chunk_inputs(std::size_t chunk) override;

 private:
  AudioBuffer audio_;
  std::vector<std::size_t> boundaries_;
};

// Observer hook for tests and tracing; called once per chunk after the
// policy has spoken.
struct ChunkTrace {
  std::size_t chunk_index;
  std::size_t committed_before;
  const Hypothesis& best;
  const TokenSeq& newly_committed;
};
using ChunkObserver = std::function<void(const ChunkTrace&)>;

// The incremental decoding loop: for every chunk prefix, re-decode with the
// committed tokens forced, let the policy commit zero or more new tokens,
// and record the source duration consumed at each emission. After the final
// chunk the full best hypothesis is committed when
// config.finalize_on_last_chunk is set. No extra decode happens at
// finalization; the last chunk's best hypothesis is reused.
UtteranceResult run_incremental(IncrementalTranslator& translator, ChunkSource& source,
                                Policy& policy, const EngineConfig& config,
                                const ChunkObserver& observer = {});

UtteranceResult run_incremental(IncrementalTranslator& translator,
                                const AudioBuffer& audio, Policy& policy,
                                const EngineConfig& config,
                                const ChunkObserver& observer = {});

}  // namespace simulpolicy
