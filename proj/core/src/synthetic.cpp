#include "simulpolicy/synthetic.hpp"

#include <cstdio>

#include "simulpolicy/errors.hpp"
#include "simulpolicy/rng.hpp"

namespace simulpolicy {

namespace {

// Pseudo-words for the stable positions. None begins with 'u'; unstable
// tokens are printed with a 'u' prefix so tests can label every committed
// token as stable or unstable by looking at it.
constexpr const char* kLexicon[] = {
    "alba",  "brant", "cedar", "dove",  "elm",    "fern",  "gale",  "hazel",
    "iris",  "jasper", "kite",  "larch", "moss",   "newt",  "otter", "pine",
    "quill", "reed",  "sage",  "teal",  "vale",   "wren",  "yarrow", "zephyr",
    "aspen", "birch", "cliff", "dale",  "ember",  "frost", "glen",  "heath",
    "inlet", "juniper", "knoll", "lark", "meadow", "north", "oak",   "prairie",
    "ridge", "stone", "thorn", "vista", "willow", "xeric", "yew",   "zenith",
};
constexpr std::size_t kLexiconSize = sizeof(kLexicon) / sizeof(kLexicon[0]);

std::string stable_token(std::uint64_t seed, std::size_t position) {
  return kLexicon[mix64(seed, position) % kLexiconSize];
}

std::string unstable_token(std::uint64_t seed, std::size_t position,
                           std::uint64_t digest) {
  char buf[24];
  std::snprintf(buf, sizeof(buf), "u%06llx",
                static_cast<unsigned long long>(
                    mix64(mix64(seed, position), digest) & 0xFFFFFFULL));
  return buf;
}

std::uint64_t transcript_digest(const TokenSeq& tokens, std::uint64_t seed) {
  std::uint64_t h = mix64(seed, 0x7472616e73ULL);
  for (const auto& tok : tokens) {
    h = hash_bytes(tok.data(), tok.size(), h);
  }
  return h;
}

}  // namespace

void SyntheticTranslatorSpec::validate() const {
  if (tokens_per_chunk < 1) throw InvalidParam("synthetic: tokens_per_chunk must be >= 1");
  if (unstable_suffix_len < 0) throw InvalidParam("synthetic: unstable_suffix_len must be >= 0");
  if (chunk_size_ms < 1) throw InvalidParam("synthetic: chunk_size_ms must be >= 1");
  if (agreement_window_ms < 0) throw InvalidParam("synthetic: agreement_window_ms must be >= 0");
}

Hypothesis synthetic_translate(const SyntheticTranslatorSpec& spec,
                               const ModelInput& input,
                               std::span<const std::string> forced_prefix) {
  spec.validate();
  if (input.chunk_count == 0) {
    throw InvalidParam("synthetic: model input is missing its chunk count");
  }

  const std::size_t m = input.chunk_count;
  const auto tpc = static_cast<std::uint64_t>(spec.tokens_per_chunk);
  const auto chunk_ms = static_cast<std::uint64_t>(spec.chunk_size_ms);
  const std::size_t count = m * tpc;
  const std::uint64_t consumed_ms = m * chunk_ms;

  // The decoder's belief refreshes once per agreement window; without a
  // window every decode sees fresh information. Integer arithmetic keeps
  // the stable/unstable boundary exact for every (chunk, tokens) pair.
  std::uint64_t info_ms = consumed_ms;
  std::uint64_t window_index = 0;
  if (spec.agreement_window_ms > 0) {
    const auto window = static_cast<std::uint64_t>(spec.agreement_window_ms);
    window_index = consumed_ms / window;
    info_ms = window_index * window;
  }

  std::uint64_t digest = 0;
  switch (spec.sensitivity) {
    case PerturbationSensitivity::kNone:
      break;
    case PerturbationSensitivity::kLengthOnly: {
      std::size_t len = 0;
      if (input.is_audio()) {
        len = input.audio().samples.size();
      } else {
        for (const auto& tok : input.transcript()) len += tok.size() + 1;
      }
      digest = mix64(spec.seed, len);
      break;
    }
    case PerturbationSensitivity::kFullInput:
      if (input.is_audio()) {
        const auto& samples = input.audio().samples;
        std::size_t digest_len = samples.size();
        if (spec.agreement_window_ms > 0) {
          const auto window_samples = static_cast<std::size_t>(
              window_index * static_cast<std::uint64_t>(spec.agreement_window_ms) *
              input.audio().sample_rate_hz / 1000);
          // Early prefixes (before the first full window) keep the full
          // digest so perturbed copies stay distinguishable from the start.
          if (window_samples > 0 && window_samples < digest_len) {
            digest_len = window_samples;
          }
        }
        digest = hash_bytes(samples.data(), digest_len * sizeof(float), spec.seed);
      } else {
        digest = transcript_digest(input.transcript(), spec.seed);
      }
      break;
  }

  // Token j is revealed after (j+1) token-times and settles a further
  // unstable_suffix_len token-times later. With one token-time equal to
  // chunk_ms / tokens_per_chunk, "info_ms >= (j + 1 + k) * token_time"
  // becomes the exact integer comparison below.
  const auto k = static_cast<std::uint64_t>(spec.unstable_suffix_len);
  TokenSeq natural;
  natural.reserve(count);
  for (std::size_t j = 0; j < count; ++j) {
    const bool settled = info_ms * tpc >= (j + 1 + k) * chunk_ms;
    natural.push_back(settled ? stable_token(spec.seed, j)
                              : unstable_token(spec.seed, j, digest));
  }

  // Forced decoding: the committed prefix is reproduced verbatim and the
  // continuation follows the natural output.
  Hypothesis hyp;
  hyp.tokens.assign(forced_prefix.begin(), forced_prefix.end());
  for (std::size_t j = forced_prefix.size(); j < natural.size(); ++j) {
    hyp.tokens.push_back(std::move(natural[j]));
  }
  return hyp;
}

SyntheticTranslator::SyntheticTranslator(SyntheticTranslatorSpec spec)
    : spec_(spec) {
  spec_.validate();
}

double SyntheticScorer::score(const TokenSeq& transcript) {
  const std::uint64_t h = transcript_digest(transcript, seed_);
  return -static_cast<double>(h % 10000) / 1000.0;
}

}  // namespace simulpolicy
