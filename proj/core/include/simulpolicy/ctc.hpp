#pragma once

#include <cstddef>
#include <filesystem>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "simulpolicy/errors.hpp"
#include "simulpolicy/types.hpp"

namespace simulpolicy {

// Frame posteriors over vocabulary-plus-blank. Row-major T x (V+1) with the
// blank in the last column; every row sums to 1 within 1e-6.
struct LogitMatrix {
  std::vector<double> probs;
  std::vector<std::string> vocab;

  std::size_t vocab_size() const { return vocab.size(); }
  std::size_t blank_index() const { return vocab.size(); }
  std::size_t frames() const {
    return vocab.empty() ? 0 : probs.size() / (vocab.size() + 1);
  }

  double at(std::size_t t, std::size_t s) const {
    return probs[t * (vocab.size() + 1) + s];
  }

  // First `frames` rows; the streaming prefix for cascade decoding.
  LogitMatrix prefix(std::size_t frames) const;

  void validate() const;
};

struct Candidate {
  TokenSeq transcript;
  double ctc_log_prob = 0.0;
  std::optional<double> rescored_log_prob;
};

// N-best transcripts, sorted by the active score descending; transcripts
// are pairwise distinct. Ties break lexicographically on the transcript.
struct CandidateSet {
  std::vector<Candidate> candidates;
};

enum class CascadeMode { kCtcPrefixBeamSearch, kAttentionRescoring };

// Pluggable stand-in for the attention-decoder scoring pass: returns a
// finite log-probability for a transcript given the current utterance.
class CandidateScorer {
 public:
  virtual ~CandidateScorer() = default;
  virtual double score(const TokenSeq& transcript) = 0;
};

// Standard CTC collapse: merge adjacent duplicates, then drop blanks.
// Labels are indices into `vocab`; index vocab.size() is the blank.
TokenSeq collapse(std::span<const int> path, const std::vector<std::string>& vocab);

// Per-frame argmax path, collapsed; score is the sum of log per-frame maxima.
Hypothesis ctc_greedy(const LogitMatrix& logits);

// Prefix beam search keeping separate blank-ending / non-blank-ending mass
// per collapsed prefix. With a beam wide enough to be exhaustive the
// returned probabilities are exact marginals over all alignment paths.
CandidateSet ctc_prefix_beam_search(const LogitMatrix& logits, int beam, int n_best);

// rescored = ctc_weight * ctc_log_prob + (1 - ctc_weight) * scorer(transcript),
// candidates re-sorted by the rescored score.
CandidateSet attention_rescore(const CandidateSet& cands, CandidateScorer& scorer,
                               double ctc_weight);

// The n-best transcripts that serve as the regularized input batch for the
// downstream MT stage.
std::vector<TokenSeq> cascade_batch(const LogitMatrix& logits, CascadeMode mode,
                                    int beam, int n_best,
                                    CandidateScorer* scorer = nullptr,
                                    double ctc_weight = 0.5);

// Text format: line 1 "T V", line 2 the V vocabulary tokens, then T rows of
// V+1 probabilities (blank last), whitespace-separated decimal.
LogitMatrix load_logits(const std::filesystem::path& path);
void save_logits(const std::filesystem::path& path, const LogitMatrix& logits);

}  // namespace simulpolicy
