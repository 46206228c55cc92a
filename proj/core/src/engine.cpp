#include "simulpolicy/engine.hpp"

#include <algorithm>
#include <utility>

#include "simulpolicy/errors.hpp"

namespace simulpolicy {

void EngineConfig::validate() const {
  if (chunk_size_ms < 50 || chunk_size_ms > 10000) {
    throw InvalidParam("chunk_size_ms must lie in [50, 10000], got " +
                       std::to_string(chunk_size_ms));
  }
  policy.validate(/*require_regularizers=*/false);
}

std::vector<std::size_t> chunk_boundaries(const AudioBuffer& audio, int chunk_size_ms) {
  if (chunk_size_ms <= 0) throw InvalidParam("chunk_size_ms must be > 0");
  const std::size_t n = audio.samples.size();
  if (n == 0) throw EmptyInput("chunk_boundaries: empty audio");
  std::size_t chunk_samples = static_cast<std::size_t>(
      static_cast<unsigned long long>(chunk_size_ms) * audio.sample_rate_hz / 1000);
  if (chunk_samples == 0) chunk_samples = 1;

  std::vector<std::size_t> prefixes;
  for (std::size_t end = chunk_samples; end < n; end += chunk_samples) {
    prefixes.push_back(end);
  }
  prefixes.push_back(n);  // the final chunk absorbs the remainder
  return prefixes;
}

AudioChunkSource::AudioChunkSource(AudioBuffer audio, int chunk_size_ms)
    : audio_(std::move(audio)) {
  audio_.validate();
  boundaries_ = chunk_boundaries(audio_, chunk_size_ms);
}

double AudioChunkSource::consumed_ms(std::size_t chunk) const {
  return 1000.0 * static_cast<double>(boundaries_.at(chunk - 1)) /
         audio_.sample_rate_hz;
}

ChunkInputs AudioChunkSource::chunk_inputs(std::size_t chunk) {
  const std::size_t end = boundaries_.at(chunk - 1);
  ModelInput input;
  AudioBuffer prefix;
  prefix.sample_rate_hz = audio_.sample_rate_hz;
  prefix.samples.assign(audio_.samples.begin(),
                        audio_.samples.begin() + static_cast<std::ptrdiff_t>(end));
  input.payload = std::move(prefix);
  input.chunk_count = chunk;
  ChunkInputs inputs;
  inputs.candidates.push_back(std::move(input));
  inputs.pre_batched = false;
  return inputs;
}

UtteranceResult run_incremental(IncrementalTranslator& translator, ChunkSource& source,
                                Policy& policy, const EngineConfig& config,
                                const ChunkObserver& observer) {
  config.validate();
  const std::size_t chunks = source.chunk_count();
  if (chunks == 0) throw EmptyInput("run_incremental: no chunks");

  StreamState state;
  RandomStream rng(config.seed);
  policy.reset();

  UtteranceResult result;
  result.chunk_count = chunks;
  result.src_duration_ms = source.total_duration_ms();

  TokenSeq committed_tokens;
  Hypothesis last_best;

  for (std::size_t chunk = 1; chunk <= chunks; ++chunk) {
    state.chunk_index = chunk;
    const ChunkInputs inputs = source.chunk_inputs(chunk);
    if (inputs.candidates.empty()) {
      throw BackendFailure("chunk source produced no candidates");
    }

    DecodeFn decode = [&](const ModelInput& input) {
      ++result.decode_calls;
      return forced_decode(translator, input, committed_tokens);
    };

    PolicyStep step = policy.on_chunk(inputs, decode, committed_tokens, rng);

    const double consumed = source.consumed_ms(chunk);
    if (observer) {
      observer(ChunkTrace{chunk, committed_tokens.size(), step.best, step.commit});
    }
    for (auto& tok : step.commit) {
      state.committed.push_back(CommitRecord{tok, consumed, chunk});
      committed_tokens.push_back(std::move(tok));
    }
    if (chunk == chunks) last_best = std::move(step.best);
  }

  result.policy_committed = state.committed.size();

  if (config.finalize_on_last_chunk) {
    // End of stream: everything beyond the committed prefix in the final
    // best hypothesis is committed unconditionally, with no extra decode.
    if (committed_tokens.size() > last_best.tokens.size() ||
        !std::equal(committed_tokens.begin(), committed_tokens.end(),
                    last_best.tokens.begin())) {
      throw PrefixViolation("policy commitments diverged from the final hypothesis");
    }
    const double total = source.total_duration_ms();
    for (std::size_t i = committed_tokens.size(); i < last_best.tokens.size(); ++i) {
      state.committed.push_back(CommitRecord{last_best.tokens[i], total, chunks});
    }
  }
  state.finished = true;

  result.records = std::move(state.committed);
  return result;
}

UtteranceResult run_incremental(IncrementalTranslator& translator,
                                const AudioBuffer& audio, Policy& policy,
                                const EngineConfig& config,
                                const ChunkObserver& observer) {
  AudioChunkSource source(audio, config.chunk_size_ms);
  return run_incremental(translator, source, policy, config, observer);
}

}  // namespace simulpolicy
