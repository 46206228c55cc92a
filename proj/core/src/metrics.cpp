#include "simulpolicy/metrics.hpp"

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <map>

#include "simulpolicy/errors.hpp"

namespace simulpolicy {

namespace {

constexpr std::string_view kSpMarker = "\xE2\x96\x81";  // U+2581

bool sp_starts_word(const std::string& token) {
  return token.rfind(kSpMarker, 0) == 0;
}

// Decodes one UTF-8 codepoint; advances i. Malformed bytes decode as
// themselves so tokenization never fails on binary garbage.
char32_t next_codepoint(std::string_view s, std::size_t& i) {
  const auto b0 = static_cast<unsigned char>(s[i]);
  std::size_t extra = 0;
  char32_t cp = b0;
  if (b0 >= 0xF0) {
    extra = 3;
    cp = b0 & 0x07u;
  } else if (b0 >= 0xE0) {
    extra = 2;
    cp = b0 & 0x0Fu;
  } else if (b0 >= 0xC0) {
    extra = 1;
    cp = b0 & 0x1Fu;
  }
  if (extra > 0 && i + extra >= s.size()) {  // truncated sequence
    ++i;
    return b0;
  }
  for (std::size_t k = 1; k <= extra; ++k) {
    const auto b = static_cast<unsigned char>(s[i + k]);
    if ((b & 0xC0u) != 0x80u) {
      ++i;
      return b0;
    }
    cp = (cp << 6) | (b & 0x3Fu);
  }
  i += extra + 1;
  return cp;
}

bool is_cjk(char32_t cp) {
  return (cp >= 0x4E00 && cp <= 0x9FFF) ||    // CJK Unified Ideographs
         (cp >= 0x3400 && cp <= 0x4DBF) ||    // Extension A
         (cp >= 0xF900 && cp <= 0xFAFF) ||    // Compatibility Ideographs
         (cp >= 0x3040 && cp <= 0x309F) ||    // Hiragana
         (cp >= 0x30A0 && cp <= 0x30FF) ||    // Katakana
         (cp >= 0xAC00 && cp <= 0xD7AF);      // Hangul Syllables
}

bool is_cjk_punct(char32_t cp) {
  return (cp >= 0x3000 && cp <= 0x303F) || (cp >= 0xFF00 && cp <= 0xFFEF);
}

bool is_ascii_space(char32_t cp) {
  return cp == ' ' || cp == '\t' || cp == '\n' || cp == '\r' || cp == '\f' ||
         cp == '\v';
}

bool is_ascii_punct(char32_t cp) {
  return cp < 0x80 && std::ispunct(static_cast<int>(cp)) != 0;
}

void append_utf8(std::string& out, char32_t cp) {
  if (cp < 0x80) {
    out.push_back(static_cast<char>(cp));
  } else if (cp < 0x800) {
    out.push_back(static_cast<char>(0xC0 | (cp >> 6)));
    out.push_back(static_cast<char>(0x80 | (cp & 0x3F)));
  } else if (cp < 0x10000) {
    out.push_back(static_cast<char>(0xE0 | (cp >> 12)));
    out.push_back(static_cast<char>(0x80 | ((cp >> 6) & 0x3F)));
    out.push_back(static_cast<char>(0x80 | (cp & 0x3F)));
  } else {
    out.push_back(static_cast<char>(0xF0 | (cp >> 18)));
    out.push_back(static_cast<char>(0x80 | ((cp >> 12) & 0x3F)));
    out.push_back(static_cast<char>(0x80 | ((cp >> 6) & 0x3F)));
    out.push_back(static_cast<char>(0x80 | (cp & 0x3F)));
  }
}

using Ngram = std::vector<std::string>;

}  // namespace

std::string detokenize(std::span<const std::string> tokens, Detokenizer detok) {
  std::string out;
  for (std::size_t i = 0; i < tokens.size(); ++i) {
    switch (detok) {
      case Detokenizer::kSpaceJoined:
        if (i > 0) out.push_back(' ');
        out += tokens[i];
        break;
      case Detokenizer::kSentencePiece: {
        const bool boundary = sp_starts_word(tokens[i]);
        if (boundary && i > 0) out.push_back(' ');
        out += boundary ? tokens[i].substr(kSpMarker.size()) : tokens[i];
        break;
      }
    }
  }
  return out;
}

void DelaySchedule::validate() const {
  if (delays_ms.empty()) throw EmptyOutput("delay schedule has no words");
  if (!(src_duration_ms > 0.0)) throw InvalidParam("src_duration_ms must be > 0");
  double prev = 0.0;
  for (double d : delays_ms) {
    if (d < prev) throw InvalidParam("delays must be non-decreasing");
    prev = d;
  }
}

DelaySchedule word_delays(std::span<const CommitRecord> records, Detokenizer detok,
                          double src_duration_ms) {
  if (records.empty()) throw EmptyOutput("word_delays: no committed tokens");
  DelaySchedule sched;
  sched.src_duration_ms = src_duration_ms;
  for (std::size_t i = 0; i < records.size(); ++i) {
    const bool starts = detok == Detokenizer::kSpaceJoined
                            ? true
                            : (i == 0 || sp_starts_word(records[i].token));
    if (starts) {
      sched.delays_ms.push_back(records[i].consumed_ms);
    } else {
      // continuation: the word is only displayable at its last token
      sched.delays_ms.back() = records[i].consumed_ms;
    }
  }
  return sched;
}

double average_lagging(const DelaySchedule& sched, std::size_t normalizer_len) {
  sched.validate();
  const std::size_t count = sched.delays_ms.size();
  const double denom =
      static_cast<double>(normalizer_len == 0 ? count : normalizer_len);
  const double ideal_step = sched.src_duration_ms / denom;

  std::size_t tau = count;
  for (std::size_t i = 0; i < count; ++i) {
    if (sched.delays_ms[i] >= sched.src_duration_ms) {
      tau = i + 1;
      break;
    }
  }
  double sum = 0.0;
  for (std::size_t i = 0; i < tau; ++i) {
    sum += sched.delays_ms[i] - static_cast<double>(i) * ideal_step;
  }
  return sum / static_cast<double>(tau);
}

double average_proportion(const DelaySchedule& sched) {
  sched.validate();
  double sum = 0.0;
  for (double d : sched.delays_ms) sum += d;
  return sum / (sched.src_duration_ms * static_cast<double>(sched.delays_ms.size()));
}

double dal(const DelaySchedule& sched) {
  sched.validate();
  const std::size_t count = sched.delays_ms.size();
  const double g = sched.src_duration_ms / static_cast<double>(count);
  double sum = 0.0;
  double prev = -g;  // so that d'_1 = max(d_1, 0 + anything) = d_1
  for (std::size_t i = 0; i < count; ++i) {
    const double adjusted = std::max(sched.delays_ms[i], prev + g);
    sum += adjusted - static_cast<double>(i) * g;
    prev = adjusted;
  }
  return sum / static_cast<double>(count);
}

bool classify_latency(double al_ms) { return al_ms < 2000.0; }

std::vector<std::string> bleu_tokenize(std::string_view text) {
  std::vector<std::string> tokens;
  std::string current;
  auto flush = [&] {
    if (!current.empty()) {
      tokens.push_back(current);
      current.clear();
    }
  };
  std::size_t i = 0;
  while (i < text.size()) {
    const char32_t cp = next_codepoint(text, i);
    if (is_ascii_space(cp) || cp == 0x3000) {
      flush();
    } else if (is_ascii_punct(cp) || is_cjk_punct(cp) || is_cjk(cp)) {
      flush();
      std::string one;
      append_utf8(one, cp);
      tokens.push_back(std::move(one));
    } else {
      append_utf8(current, cp);
    }
  }
  flush();
  return tokens;
}

double bleu(std::span<const std::vector<std::string>> hypotheses,
            std::span<const std::vector<std::string>> references,
            const BleuOptions& opts) {
  if (hypotheses.empty()) throw EmptyCorpus("bleu: empty corpus");
  if (hypotheses.size() != references.size()) {
    throw InvalidParam("bleu: hypothesis/reference count mismatch");
  }

  constexpr int kMaxOrder = 4;
  double matched[kMaxOrder] = {0, 0, 0, 0};
  double total[kMaxOrder] = {0, 0, 0, 0};
  std::uint64_t hyp_len = 0, ref_len = 0;

  for (std::size_t pair = 0; pair < hypotheses.size(); ++pair) {
    const auto& hyp = hypotheses[pair];
    const auto& ref = references[pair];
    hyp_len += hyp.size();
    ref_len += ref.size();
    for (int order = 1; order <= kMaxOrder; ++order) {
      if (hyp.size() < static_cast<std::size_t>(order)) break;
      std::map<Ngram, std::int64_t> ref_counts;
      if (ref.size() >= static_cast<std::size_t>(order)) {
        for (std::size_t k = 0; k + order <= ref.size(); ++k) {
          ref_counts[Ngram(ref.begin() + k, ref.begin() + k + order)] += 1;
        }
      }
      for (std::size_t k = 0; k + order <= hyp.size(); ++k) {
        total[order - 1] += 1;
        const Ngram gram(hyp.begin() + k, hyp.begin() + k + order);
        auto it = ref_counts.find(gram);
        if (it != ref_counts.end() && it->second > 0) {
          it->second -= 1;  // clipped: each reference n-gram matches once
          matched[order - 1] += 1;
        }
      }
    }
  }

  if (hyp_len == 0) return 0.0;
  double log_precision_sum = 0.0;
  for (int order = 0; order < kMaxOrder; ++order) {
    double m = matched[order];
    double t = total[order];
    if (opts.add_one_smoothing && order > 0) {
      m += 1.0;
      t += 1.0;
    }
    if (m <= 0.0 || t <= 0.0) return 0.0;  // zero precision, no smoothing
    log_precision_sum += std::log(m / t);
  }
  const double brevity =
      hyp_len >= ref_len
          ? 1.0
          : std::exp(1.0 - static_cast<double>(ref_len) / static_cast<double>(hyp_len));
  return 100.0 * brevity * std::exp(log_precision_sum / kMaxOrder);
}

double bleu_text(std::span<const std::string> hypothesis_texts,
                 std::span<const std::string> reference_texts,
                 const BleuOptions& opts) {
  std::vector<std::vector<std::string>> hyps, refs;
  hyps.reserve(hypothesis_texts.size());
  refs.reserve(reference_texts.size());
  for (const auto& h : hypothesis_texts) hyps.push_back(bleu_tokenize(h));
  for (const auto& r : reference_texts) refs.push_back(bleu_tokenize(r));
  return bleu(hyps, refs, opts);
}

}  // namespace simulpolicy
