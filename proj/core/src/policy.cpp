#include "simulpolicy/policy.hpp"

#include <algorithm>
#include <cmath>

#include "simulpolicy/errors.hpp"

namespace simulpolicy {

Hypothesis forced_decode(IncrementalTranslator& translator, const ModelInput& input,
                         std::span<const std::string> forced_prefix) {
  Hypothesis hyp;
  try {
    hyp = translator.translate(input, forced_prefix);
  } catch (const Error&) {
    throw;
  } catch (const std::exception& e) {
    throw BackendFailure(std::string("translator failed: ") + e.what());
  }
  if (hyp.tokens.size() < forced_prefix.size() ||
      !std::equal(forced_prefix.begin(), forced_prefix.end(), hyp.tokens.begin())) {
    throw PrefixViolation("backend output does not begin with the forced prefix");
  }
  for (const auto& tok : hyp.tokens) {
    if (tok.empty()) throw BackendFailure("backend emitted an empty token");
  }
  if (hyp.score && !std::isfinite(*hyp.score)) {
    throw BackendFailure("backend returned a non-finite score");
  }
  return hyp;
}

void PolicySpec::validate(bool require_regularizers) const {
  if (kind == Kind::kLaN && n < 1) throw InvalidParam("la-n requires n >= 1");
  if (kind == Kind::kHoldN && n < 0) throw InvalidParam("hold-n requires n >= 0");
  if (kind == Kind::kRBi && require_regularizers && regularizers.empty()) {
    throw InvalidParam("r-bi requires at least one regularizer (B >= 1)");
  }
  for (const auto& r : regularizers) r.validate();
}

std::string PolicySpec::label() const {
  switch (kind) {
    case Kind::kHoldN:
      return "hold-" + std::to_string(n);
    case Kind::kLaN:
      return "la-" + std::to_string(n);
    case Kind::kRBi:
      return "r-bi";
  }
  return "?";
}

PolicySpec PolicySpec::parse(std::string_view text) {
  PolicySpec spec;
  auto parse_n = [&](std::string_view rest) {
    int value = 0;
    for (char c : rest) {
      if (c < '0' || c > '9') throw InvalidParam("bad policy '" + std::string(text) + "'");
      value = value * 10 + (c - '0');
    }
    if (rest.empty()) throw InvalidParam("policy '" + std::string(text) + "' needs n");
    return value;
  };
  if (text.rfind("hold-", 0) == 0) {
    spec.kind = Kind::kHoldN;
    spec.n = parse_n(text.substr(5));
  } else if (text == "hold") {
    spec.kind = Kind::kHoldN;
  } else if (text.rfind("la-", 0) == 0) {
    spec.kind = Kind::kLaN;
    spec.n = parse_n(text.substr(3));
  } else if (text == "rbi" || text == "r-bi") {
    spec.kind = Kind::kRBi;
  } else {
    throw InvalidParam("unknown policy '" + std::string(text) + "'");
  }
  return spec;
}

TokenSeq longest_common_prefix(std::span<const TokenSeq> seqs) {
  if (seqs.empty()) throw EmptyBatch("longest_common_prefix over zero sequences");
  // Fold pairwise: truncate the running prefix at the first disagreement.
  TokenSeq prefix = seqs.front();
  for (std::size_t i = 1; i < seqs.size() && !prefix.empty(); ++i) {
    const TokenSeq& s = seqs[i];
    std::size_t k = 0;
    const std::size_t limit = std::min(prefix.size(), s.size());
    while (k < limit && prefix[k] == s[k]) ++k;
    prefix.resize(k);
  }
  return prefix;
}

namespace {

TokenSeq beyond_committed(const TokenSeq& seq, std::size_t committed_len) {
  if (seq.size() <= committed_len) return {};
  return TokenSeq(seq.begin() + static_cast<std::ptrdiff_t>(committed_len), seq.end());
}

bool starts_word(const std::string& tok, Detokenizer detok) {
  if (detok == Detokenizer::kSpaceJoined) return true;
  return tok.rfind("\xE2\x96\x81", 0) == 0;  // U+2581
}

// Word-level agreement: truncate the token-level LCP back to the last
// complete word boundary. A word is incomplete when some sequence still
// continues it past the agreement point.
TokenSeq lcp_words(std::span<const TokenSeq> seqs, Detokenizer detok) {
  TokenSeq prefix = longest_common_prefix(seqs);
  bool incomplete = false;
  for (const auto& s : seqs) {
    if (s.size() > prefix.size() && !starts_word(s[prefix.size()], detok)) {
      incomplete = true;
      break;
    }
  }
  if (incomplete) {
    while (!prefix.empty() && !starts_word(prefix.back(), detok)) prefix.pop_back();
    if (!prefix.empty()) prefix.pop_back();  // the word's opening token
  }
  return prefix;
}

}  // namespace

TokenSeq hold_n_commit(const Hypothesis& hyp, std::size_t committed_len, int n) {
  if (n < 0) throw InvalidParam("hold_n_commit: n must be >= 0");
  const std::size_t len = hyp.tokens.size();
  const std::size_t keep = len >= static_cast<std::size_t>(n)
                               ? len - static_cast<std::size_t>(n)
                               : 0;
  const std::size_t end = std::max(committed_len, keep);
  TokenSeq out;
  for (std::size_t i = committed_len; i < end && i < len; ++i) out.push_back(hyp.tokens[i]);
  return out;
}

TokenSeq la_n_commit(LaMemory& memory, const Hypothesis& new_hyp,
                     std::size_t committed_len) {
  if (memory.n < 1) throw InvalidParam("la_n_commit: n must be >= 1");
  memory.history.push_back(new_hyp.tokens);
  memory.seen += 1;
  while (memory.history.size() > static_cast<std::size_t>(memory.n)) {
    memory.history.pop_front();
  }
  if (memory.seen < static_cast<std::size_t>(memory.n)) return {};
  const std::vector<TokenSeq> window(memory.history.begin(), memory.history.end());
  return beyond_committed(longest_common_prefix(window), committed_len);
}

std::vector<ModelInput> build_regularized_batch(const ModelInput& input,
                                                std::span<const Regularizer> regularizers,
                                                RandomStream& rng) {
  if (!input.is_audio()) {
    throw InvalidParam("regularized batch needs an audio input; cascade batches arrive pre-built");
  }
  std::vector<ModelInput> batch;
  batch.reserve(regularizers.size() + 1);
  batch.push_back(input);  // the original input is always included
  for (const auto& reg : regularizers) {
    ModelInput variant;
    variant.payload = reg(input.audio(), rng);
    variant.chunk_count = input.chunk_count;
    batch.push_back(std::move(variant));
  }
  return batch;
}

TokenSeq select_stable_commit(std::span<const Hypothesis> batch,
                              std::size_t committed_len, bool word_level,
                              Detokenizer detok) {
  if (batch.empty()) throw EmptyBatch("select_stable_commit over zero hypotheses");
  std::vector<TokenSeq> seqs;
  seqs.reserve(batch.size());
  for (const auto& h : batch) seqs.push_back(h.tokens);
  const TokenSeq stable =
      word_level ? lcp_words(seqs, detok) : longest_common_prefix(seqs);
  return beyond_committed(stable, committed_len);
}

TokenSeq r_bi_commit(IncrementalTranslator& translator,
                     std::span<const Regularizer> regularizers,
                     const ModelInput& input,
                     std::span<const std::string> committed, RandomStream& rng) {
  if (regularizers.empty()) throw InvalidParam("r_bi_commit: needs B >= 1 regularizers");
  const auto batch = build_regularized_batch(input, regularizers, rng);
  std::vector<Hypothesis> hyps;
  hyps.reserve(batch.size());
  for (const auto& member : batch) {
    hyps.push_back(forced_decode(translator, member, committed));
  }
  return select_stable_commit(hyps, committed.size());
}

namespace {

class HoldPolicy final : public Policy {
 public:
  explicit HoldPolicy(int n) : n_(n) {}

  PolicyStep on_chunk(const ChunkInputs& inputs, const DecodeFn& decode,
                      std::span<const std::string> committed, RandomStream&) override {
    Hypothesis hyp = decode(inputs.candidates.front());
    TokenSeq commit = hold_n_commit(hyp, committed.size(), n_);
    return {std::move(commit), std::move(hyp)};
  }

 private:
  int n_;
};

class LaPolicy final : public Policy {
 public:
  LaPolicy(int n, bool word_level, Detokenizer detok)
      : memory_(n), word_level_(word_level), detok_(detok) {}

  PolicyStep on_chunk(const ChunkInputs& inputs, const DecodeFn& decode,
                      std::span<const std::string> committed, RandomStream&) override {
    Hypothesis hyp = decode(inputs.candidates.front());
    TokenSeq commit;
    if (!word_level_) {
      commit = la_n_commit(memory_, hyp, committed.size());
    } else {
      memory_.history.push_back(hyp.tokens);
      memory_.seen += 1;
      while (memory_.history.size() > static_cast<std::size_t>(memory_.n)) {
        memory_.history.pop_front();
      }
      if (memory_.seen >= static_cast<std::size_t>(memory_.n)) {
        std::vector<Hypothesis> window;
        for (const auto& seq : memory_.history) window.push_back({seq, {}});
        commit = select_stable_commit(window, committed.size(), true, detok_);
      }
    }
    return {std::move(commit), std::move(hyp)};
  }

  void reset() override {
    memory_.history.clear();
    memory_.seen = 0;
  }

 private:
  LaMemory memory_;
  bool word_level_;
  Detokenizer detok_;
};

class RbiPolicy final : public Policy {
 public:
  RbiPolicy(std::vector<Regularizer> regularizers, bool word_level, Detokenizer detok)
      : regularizers_(std::move(regularizers)),
        word_level_(word_level),
        detok_(detok) {}

  PolicyStep on_chunk(const ChunkInputs& inputs, const DecodeFn& decode,
                      std::span<const std::string> committed, RandomStream& rng) override {
    std::vector<Hypothesis> hyps;
    if (inputs.pre_batched) {
      hyps.reserve(inputs.candidates.size());
      for (const auto& member : inputs.candidates) hyps.push_back(decode(member));
    } else {
      if (regularizers_.empty()) {
        throw InvalidParam("r-bi over end-to-end input needs B >= 1 regularizers");
      }
      const auto batch =
          build_regularized_batch(inputs.candidates.front(), regularizers_, rng);
      hyps.reserve(batch.size());
      for (const auto& member : batch) hyps.push_back(decode(member));
    }
    TokenSeq commit = select_stable_commit(hyps, committed.size(), word_level_, detok_);
    return {std::move(commit), std::move(hyps.front())};
  }

 private:
  std::vector<Regularizer> regularizers_;
  bool word_level_;
  Detokenizer detok_;
};

}  // namespace

std::unique_ptr<Policy> make_policy(const PolicySpec& spec) {
  spec.validate(/*require_regularizers=*/false);
  switch (spec.kind) {
    case PolicySpec::Kind::kHoldN:
      return std::make_unique<HoldPolicy>(spec.n);
    case PolicySpec::Kind::kLaN:
      return std::make_unique<LaPolicy>(spec.n, spec.word_level_lcp, spec.lcp_detok);
    case PolicySpec::Kind::kRBi:
      return std::make_unique<RbiPolicy>(make_regularizers(spec.regularizers),
                                         spec.word_level_lcp, spec.lcp_detok);
  }
  throw InvalidParam("unknown policy kind");
}

}  // namespace simulpolicy
