#pragma once

#include <deque>
#include <memory>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "simulpolicy/regularize.hpp"
#include "simulpolicy/rng.hpp"
#include "simulpolicy/translator.hpp"
#include "simulpolicy/types.hpp"

namespace simulpolicy {

// Commitment policy selection. `n` is the Hold-n deletion count or the
// LA-n agreement window; `regularizers` is the R-BI batch for end-to-end
// inputs (in cascade mode the batch arrives pre-built from the ASR n-best,
// so the list may be empty there).
struct PolicySpec {
  enum class Kind { kHoldN, kLaN, kRBi };

  Kind kind = Kind::kHoldN;
  int n = 0;
  std::vector<RegularizerSpec> regularizers;
  // Compare agreeing prefixes word-by-word instead of token-by-token; with
  // space-joined tokens the two coincide.
  bool word_level_lcp = false;
  Detokenizer lcp_detok = Detokenizer::kSpaceJoined;

  void validate(bool require_regularizers = true) const;
  std::string label() const;  // "hold-0", "la-2", "r-bi"

  // Parses "hold-0" / "la-2" / "rbi" (also "r-bi").
  static PolicySpec parse(std::string_view text);
};

// Ring of the best hypotheses from the last n chunks.
struct LaMemory {
  explicit LaMemory(int n) : n(n) {}
  int n;
  std::deque<TokenSeq> history;
  std::size_t seen = 0;
};

// Maximal P such that every sequence begins with P; exact string equality.
TokenSeq longest_common_prefix(std::span<const TokenSeq> seqs);

// Tokens hyp[committed_len .. max(committed_len, len - n)]: everything new
// except the last n tokens of the chunk-level hypothesis.
TokenSeq hold_n_commit(const Hypothesis& hyp, std::size_t committed_len, int n);

// Pushes the new hypothesis, then commits the agreeing prefix of the last
// n hypotheses (nothing during the first n-1 chunks).
TokenSeq la_n_commit(LaMemory& memory, const Hypothesis& new_hyp,
                     std::size_t committed_len);

// One R-BI step over an end-to-end input: decode the batch
// [x, R_1(x), ..., R_B(x)] with the committed prefix forced, then commit
// the longest common prefix of all B+1 outputs beyond `committed`.
TokenSeq r_bi_commit(IncrementalTranslator& translator,
                     std::span<const Regularizer> regularizers,
                     const ModelInput& input,
                     std::span<const std::string> committed, RandomStream& rng);

// Builds [x, R_1(x), ..., R_B(x)]; the original input is always member 0.
std::vector<ModelInput> build_regularized_batch(const ModelInput& input,
                                                std::span<const Regularizer> regularizers,
                                                RandomStream& rng);

// LCP over the batch hypotheses minus the committed prefix. With
// word_level set, the agreement is truncated to whole words under `detok`.
TokenSeq select_stable_commit(std::span<const Hypothesis> batch,
                              std::size_t committed_len, bool word_level = false,
                              Detokenizer detok = Detokenizer::kSpaceJoined);

struct PolicyStep {
  TokenSeq commit;  // newly committed tokens
  Hypothesis best;  // this chunk's best hypothesis (used for finalization)
};

class Policy {
 public:
  virtual ~Policy() = default;

  virtual PolicyStep on_chunk(const ChunkInputs& inputs, const DecodeFn& decode,
                              std::span<const std::string> committed,
                              RandomStream& rng) = 0;

  // Clears per-utterance state (e.g. the LA-n history).
  virtual void reset() {}
};

std::unique_ptr<Policy> make_policy(const PolicySpec& spec);

}  // namespace simulpolicy
