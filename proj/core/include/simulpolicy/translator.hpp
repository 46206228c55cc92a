#pragma once

#include <cstddef>
#include <functional>
#include <span>
#include <string>
#include <variant>
#include <vector>

#include "simulpolicy/audio.hpp"
#include "simulpolicy/types.hpp"

namespace simulpolicy {

// What one decode call sees: either an audio prefix (end-to-end) or one
// candidate transcript (cascaded MT stage). `chunk_count` is how many
// engine chunks the prefix spans; regularized copies of a prefix keep the
// chunk count of the original.
struct ModelInput {
  std::variant<AudioBuffer, TokenSeq> payload;
  std::size_t chunk_count = 0;

  bool is_audio() const { return std::holds_alternative<AudioBuffer>(payload); }
  const AudioBuffer& audio() const { return std::get<AudioBuffer>(payload); }
  const TokenSeq& transcript() const { return std::get<TokenSeq>(payload); }
};

// Forced-prefix decoding backend. The returned hypothesis must begin with
// `forced_prefix` exactly; the engine treats any violation as a hard error.
class IncrementalTranslator {
 public:
  virtual ~IncrementalTranslator() = default;

  virtual Hypothesis translate(const ModelInput& input,
                               std::span<const std::string> forced_prefix) = 0;

  // Backends that are free of shared mutable state may declare themselves
  // safe for concurrent invocation; unsafe backends force sequential mode.
  virtual bool concurrency_safe() const { return false; }
};

// Decodes and enforces the forced-prefix contract. Throws PrefixViolation
// rather than repairing the output; silent repair would mask backend bugs.
Hypothesis forced_decode(IncrementalTranslator& translator, const ModelInput& input,
                         std::span<const std::string> forced_prefix);

// Candidate model inputs for one chunk. `pre_batched` marks a batch built
// upstream (cascade n-best); R-BI then uses it as-is instead of applying
// audio regularizers.
struct ChunkInputs {
  std::vector<ModelInput> candidates;
  bool pre_batched = false;
};

// Decode with the committed prefix already bound; supplied by the engine.
using DecodeFn = std::function<Hypothesis(const ModelInput&)>;

}  // namespace simulpolicy
