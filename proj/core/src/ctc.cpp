#include "simulpolicy/ctc.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <limits>
#include <map>
#include <sstream>

namespace simulpolicy {

namespace {

constexpr double kNegInf = -std::numeric_limits<double>::infinity();

double log_add(double a, double b) {
  if (a == kNegInf) return b;
  if (b == kNegInf) return a;
  const double hi = std::max(a, b);
  return hi + std::log1p(std::exp(std::min(a, b) - hi));
}

// Blank-ending and non-blank-ending alignment mass per collapsed prefix.
struct PrefixMass {
  double blank = kNegInf;
  double non_blank = kNegInf;
  double total() const { return log_add(blank, non_blank); }
};

using LabelSeq = std::vector<int>;

TokenSeq to_tokens(const LabelSeq& labels, const std::vector<std::string>& vocab) {
  TokenSeq out;
  out.reserve(labels.size());
  for (int id : labels) out.push_back(vocab[static_cast<std::size_t>(id)]);
  return out;
}

// Deterministic tie-break: higher score first, then lexicographic on the
// transcript.
bool ranks_before(double score_a, const TokenSeq& tok_a, double score_b,
                  const TokenSeq& tok_b) {
  if (score_a != score_b) return score_a > score_b;
  return tok_a < tok_b;
}

}  // namespace

LogitMatrix LogitMatrix::prefix(std::size_t frame_count) const {
  LogitMatrix out;
  out.vocab = vocab;
  const std::size_t width = vocab.size() + 1;
  const std::size_t rows = std::min(frame_count, frames());
  out.probs.assign(probs.begin(),
                   probs.begin() + static_cast<std::ptrdiff_t>(rows * width));
  return out;
}

void LogitMatrix::validate() const {
  if (vocab.empty()) throw InvalidParam("logits: empty vocabulary");
  const std::size_t width = vocab.size() + 1;
  if (probs.size() % width != 0) {
    throw InvalidParam("logits: row size does not match vocab size + blank");
  }
  for (std::size_t t = 0; t < frames(); ++t) {
    double row_sum = 0.0;
    for (std::size_t s = 0; s < width; ++s) {
      const double p = at(t, s);
      if (!(p >= 0.0 && p <= 1.0)) {
        throw InvalidParam("logits: probability outside [0, 1] at frame " +
                           std::to_string(t));
      }
      row_sum += p;
    }
    if (std::abs(row_sum - 1.0) > 1e-6) {
      throw InvalidParam("logits: frame " + std::to_string(t) +
                         " does not sum to 1 (got " + std::to_string(row_sum) + ")");
    }
  }
}

TokenSeq collapse(std::span<const int> path, const std::vector<std::string>& vocab) {
  const int blank = static_cast<int>(vocab.size());
  TokenSeq out;
  int prev = -1;
  for (int id : path) {
    if (id < 0 || id > blank) {
      throw InvalidLabel("collapse: label " + std::to_string(id) + " out of range");
    }
    if (id != prev && id != blank) out.push_back(vocab[static_cast<std::size_t>(id)]);
    prev = id;
  }
  return out;
}

Hypothesis ctc_greedy(const LogitMatrix& logits) {
  logits.validate();
  const std::size_t width = logits.vocab_size() + 1;
  std::vector<int> path;
  path.reserve(logits.frames());
  double score = 0.0;
  for (std::size_t t = 0; t < logits.frames(); ++t) {
    std::size_t best = 0;
    for (std::size_t s = 1; s < width; ++s) {
      if (logits.at(t, s) > logits.at(t, best)) best = s;
    }
    path.push_back(static_cast<int>(best));
    score += std::log(logits.at(t, best));
  }
  return Hypothesis{collapse(path, logits.vocab), score};
}

CandidateSet ctc_prefix_beam_search(const LogitMatrix& logits, int beam, int n_best) {
  if (beam < 1) throw InvalidParam("ctc_prefix_beam_search: beam must be >= 1");
  if (n_best < 1 || n_best > beam) {
    throw InvalidParam("ctc_prefix_beam_search: need 1 <= n_best <= beam");
  }
  logits.validate();

  const int blank = static_cast<int>(logits.vocab_size());
  std::map<LabelSeq, PrefixMass> beams;
  beams[{}] = PrefixMass{0.0, kNegInf};  // empty output, all mass blank-ending

  for (std::size_t t = 0; t < logits.frames(); ++t) {
    std::map<LabelSeq, PrefixMass> next;
    for (const auto& [prefix, mass] : beams) {
      const int last = prefix.empty() ? -1 : prefix.back();
      for (int s = 0; s <= blank; ++s) {
        const double p = logits.at(t, static_cast<std::size_t>(s));
        if (p == 0.0) continue;
        const double lp = std::log(p);
        if (s == blank) {
          // *b + b -> *b and *nb + b -> *b: the prefix is unchanged.
          auto& m = next[prefix];
          m.blank = log_add(m.blank, mass.total() + lp);
        } else if (s == last) {
          // Repeated label: continuation keeps the prefix; only the
          // blank-separated path spawns the extended prefix.
          auto& same = next[prefix];
          same.non_blank = log_add(same.non_blank, mass.non_blank + lp);
          LabelSeq extended = prefix;
          extended.push_back(s);
          auto& ext = next[extended];
          ext.non_blank = log_add(ext.non_blank, mass.blank + lp);
        } else {
          LabelSeq extended = prefix;
          extended.push_back(s);
          auto& ext = next[extended];
          ext.non_blank = log_add(ext.non_blank, mass.total() + lp);
        }
      }
    }

    // Keys whose only inflow this frame was zero-probability carry no mass
    // and must not surface as candidates.
    for (auto it = next.begin(); it != next.end();) {
      it = it->second.total() == kNegInf ? next.erase(it) : std::next(it);
    }

    if (next.size() > static_cast<std::size_t>(beam)) {
      std::vector<std::pair<LabelSeq, PrefixMass>> sorted(next.begin(), next.end());
      std::sort(sorted.begin(), sorted.end(), [&](const auto& a, const auto& b) {
        return ranks_before(a.second.total(), to_tokens(a.first, logits.vocab),
                            b.second.total(), to_tokens(b.first, logits.vocab));
      });
      sorted.resize(static_cast<std::size_t>(beam));
      next = std::map<LabelSeq, PrefixMass>(sorted.begin(), sorted.end());
    }
    beams = std::move(next);
  }

  std::vector<std::pair<LabelSeq, PrefixMass>> ranked(beams.begin(), beams.end());
  std::sort(ranked.begin(), ranked.end(), [&](const auto& a, const auto& b) {
    return ranks_before(a.second.total(), to_tokens(a.first, logits.vocab),
                        b.second.total(), to_tokens(b.first, logits.vocab));
  });

  CandidateSet out;
  for (const auto& [prefix, mass] : ranked) {
    if (out.candidates.size() >= static_cast<std::size_t>(n_best)) break;
    out.candidates.push_back(Candidate{to_tokens(prefix, logits.vocab), mass.total(), {}});
  }
  return out;
}

CandidateSet attention_rescore(const CandidateSet& cands, CandidateScorer& scorer,
                               double ctc_weight) {
  if (!(ctc_weight >= 0.0 && ctc_weight <= 1.0)) {
    throw InvalidParam("attention_rescore: ctc_weight must lie in [0, 1]");
  }
  CandidateSet out = cands;
  for (auto& c : out.candidates) {
    double aed = 0.0;
    try {
      aed = scorer.score(c.transcript);
    } catch (const Error&) {
      throw;
    } catch (const std::exception& e) {
      throw BackendFailure(std::string("scorer failed: ") + e.what());
    }
    if (!std::isfinite(aed)) throw BackendFailure("scorer returned a non-finite score");
    c.rescored_log_prob = ctc_weight * c.ctc_log_prob + (1.0 - ctc_weight) * aed;
  }
  std::stable_sort(out.candidates.begin(), out.candidates.end(),
                   [](const Candidate& a, const Candidate& b) {
                     return ranks_before(*a.rescored_log_prob, a.transcript,
                                         *b.rescored_log_prob, b.transcript);
                   });
  return out;
}

std::vector<TokenSeq> cascade_batch(const LogitMatrix& logits, CascadeMode mode,
                                    int beam, int n_best, CandidateScorer* scorer,
                                    double ctc_weight) {
  CandidateSet cands = ctc_prefix_beam_search(logits, beam, n_best);
  if (mode == CascadeMode::kAttentionRescoring) {
    if (scorer == nullptr) {
      throw InvalidParam("attention_rescoring requires a candidate scorer");
    }
    cands = attention_rescore(cands, *scorer, ctc_weight);
  }
  std::vector<TokenSeq> out;
  out.reserve(cands.candidates.size());
  for (auto& c : cands.candidates) out.push_back(std::move(c.transcript));
  return out;
}

LogitMatrix load_logits(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open logits file " + path.string());

  std::size_t frames = 0, vocab_size = 0;
  if (!(in >> frames >> vocab_size) || vocab_size == 0) {
    throw IoError("logits " + path.string() + ": bad header, expected 'T V'");
  }
  LogitMatrix m;
  m.vocab.resize(vocab_size);
  for (auto& tok : m.vocab) {
    if (!(in >> tok)) throw IoError("logits " + path.string() + ": truncated vocabulary");
  }
  const std::size_t width = vocab_size + 1;
  m.probs.resize(frames * width);
  for (auto& p : m.probs) {
    if (!(in >> p)) throw IoError("logits " + path.string() + ": truncated matrix");
  }
  try {
    m.validate();
  } catch (const Error& e) {
    throw IoError("logits " + path.string() + ": " + e.what());
  }
  return m;
}

void save_logits(const std::filesystem::path& path, const LogitMatrix& logits) {
  std::ofstream out(path);
  if (!out) throw IoError("cannot write logits file " + path.string());
  out.precision(17);
  out << logits.frames() << ' ' << logits.vocab_size() << '\n';
  for (std::size_t v = 0; v < logits.vocab_size(); ++v) {
    out << logits.vocab[v] << (v + 1 == logits.vocab_size() ? '\n' : ' ');
  }
  const std::size_t width = logits.vocab_size() + 1;
  for (std::size_t t = 0; t < logits.frames(); ++t) {
    for (std::size_t s = 0; s < width; ++s) {
      out << logits.at(t, s) << (s + 1 == width ? '\n' : ' ');
    }
  }
  if (!out) throw IoError("failed writing logits file " + path.string());
}

}  // namespace simulpolicy
