#pragma once

#include <cstddef>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "simulpolicy/types.hpp"

namespace simulpolicy {

std::string detokenize(std::span<const std::string> tokens, Detokenizer detok);

// Source audio consumed (ms) when each target word was emitted, plus the
// total source duration.
struct DelaySchedule {
  std::vector<double> delays_ms;
  double src_duration_ms = 0.0;

  void validate() const;
};

struct MetricReport {
  double bleu = 0.0;
  double al_ms = 0.0;
  double ap = 0.0;
  double dal_ms = 0.0;
  bool low_latency = false;
};

// Groups committed tokens into words; a word's delay is the consumed_ms of
// its last constituent token (the word is not displayable earlier).
DelaySchedule word_delays(std::span<const CommitRecord> records, Detokenizer detok,
                          double src_duration_ms);

// Word-level Average Lagging with the hypothesis-length normalizer and the
// cutoff at full source consumption:
//   AL = (1/tau) * sum_{i<=tau} [d_i - (i-1) * T_src / |Y|],
//   tau = min{ i : d_i >= T_src } (|Y| when no such i).
// `normalizer_len` overrides |Y| in the ideal schedule (reference-length
// variant); 0 selects the hypothesis length.
double average_lagging(const DelaySchedule& sched, std::size_t normalizer_len = 0);

// AP = sum(d_i) / (T_src * |Y|).
double average_proportion(const DelaySchedule& sched);

// DAL with g = T_src/|Y|: d'_1 = d_1, d'_i = max(d_i, d'_{i-1} + g),
// DAL = (1/|Y|) * sum(d'_i - (i-1) * g).
double dal(const DelaySchedule& sched);

// True iff al_ms < 2000 (strict).
bool classify_latency(double al_ms);

struct BleuOptions {
  bool add_one_smoothing = false;  // for short synthetic corpora
};

// Splits on whitespace after separating punctuation into standalone tokens;
// CJK codepoints become one token per character.
std::vector<std::string> bleu_tokenize(std::string_view text);

// Corpus-level case-sensitive BLEU-4 in [0, 100]: geometric mean of clipped
// modified n-gram precisions times the brevity penalty. Without smoothing a
// zero precision yields 0.
double bleu(std::span<const std::vector<std::string>> hypotheses,
            std::span<const std::vector<std::string>> references,
            const BleuOptions& opts = {});

// Convenience: tokenizes both sides with bleu_tokenize.
double bleu_text(std::span<const std::string> hypothesis_texts,
                 std::span<const std::string> reference_texts,
                 const BleuOptions& opts = {});

}  // namespace simulpolicy
