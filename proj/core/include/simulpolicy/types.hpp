#pragma once

#include <cstddef>
#include <optional>
#include <string>
#include <vector>

namespace simulpolicy {

using TokenSeq = std::vector<std::string>;

// How emitted tokens join into displayable words.
enum class Detokenizer {
  kSpaceJoined,    // every token is a word
  kSentencePiece,  // "\xE2\x96\x81"-prefixed tokens start a new word
};

// A scored token sequence produced by one decode call. `score` is on a
// log-probability scale but may be unnormalized; absent means unscored.
struct Hypothesis {
  TokenSeq tokens;
  std::optional<double> score;
};

// One committed target token together with how much source audio had been
// read when it was emitted. Feeds the latency metrics.
struct CommitRecord {
  std::string token;
  double consumed_ms = 0.0;
  std::size_t chunk_index = 0;
};

}  // namespace simulpolicy
