#include <cmath>

#include "doctest.h"
#include "simulpolicy/ctc.hpp"
#include "simulpolicy/rng.hpp"
#include "support/fixtures.hpp"
#include "support/oracles.hpp"

using namespace simulpolicy;
using namespace simulpolicy::testing;

namespace {

// The worked two-frame example: frame 1 p = (a: 0.6, b: 0.1, blank: 0.3),
// frame 2 p = (a: 0.4, b: 0.3, blank: 0.3).
LogitMatrix two_frame_example() {
  LogitMatrix m;
  m.vocab = {"a", "b"};
  m.probs = {0.6, 0.1, 0.3, 0.4, 0.3, 0.3};
  return m;
}

class PreferSecondScorer : public CandidateScorer {
 public:
  explicit PreferSecondScorer(TokenSeq favourite) : favourite_(std::move(favourite)) {}
  double score(const TokenSeq& transcript) override {
    return transcript == favourite_ ? -0.1 : -5.0;
  }

 private:
  TokenSeq favourite_;
};

class UniformScorer : public CandidateScorer {
 public:
  double score(const TokenSeq&) override { return -1.0; }
};

class ThrowingScorer : public CandidateScorer {
 public:
  double score(const TokenSeq&) override { throw std::runtime_error("backend down"); }
};

}  // namespace

TEST_CASE("collapse merges repeats then drops blanks") {
  const std::vector<std::string> vocab = {"a", "b"};
  const int blank = 2;
  CHECK(collapse(std::vector<int>{0, 0, blank, 0, 1, blank}, vocab) ==
        TokenSeq{"a", "a", "b"});
  CHECK(collapse(std::vector<int>{blank, blank}, vocab).empty());
  CHECK(collapse(std::vector<int>{0, 1, 1}, vocab) == TokenSeq{"a", "b"});
  CHECK_THROWS_AS(collapse(std::vector<int>{3}, vocab), InvalidLabel);
  CHECK_THROWS_AS(collapse(std::vector<int>{-1}, vocab), InvalidLabel);
}

TEST_CASE("ctc_greedy takes the argmax path") {
  LogitMatrix single;
  single.vocab = {"a", "b"};
  single.probs = {0.7, 0.1, 0.2};
  const Hypothesis hyp = ctc_greedy(single);
  CHECK(hyp.tokens == TokenSeq{"a"});
  CHECK(*hyp.score == doctest::Approx(std::log(0.7)));

  LogitMatrix blanks;
  blanks.vocab = {"a"};
  blanks.probs = {0.2, 0.8, 0.3, 0.7};
  CHECK(ctc_greedy(blanks).tokens.empty());

  LogitMatrix repeat;
  repeat.vocab = {"a", "b"};
  repeat.probs = {0.7, 0.1, 0.2, 0.6, 0.2, 0.2};
  CHECK(ctc_greedy(repeat).tokens == TokenSeq{"a"});
}

TEST_CASE("prefix beam search reproduces the worked example") {
  const auto cands = ctc_prefix_beam_search(two_frame_example(), 16, 2);
  REQUIRE(cands.candidates.size() == 2);
  CHECK(cands.candidates[0].transcript == TokenSeq{"a"});
  CHECK(std::exp(cands.candidates[0].ctc_log_prob) == doctest::Approx(0.54).epsilon(1e-9));
  CHECK(cands.candidates[1].transcript == TokenSeq{"a", "b"});
  CHECK(std::exp(cands.candidates[1].ctc_log_prob) == doctest::Approx(0.18).epsilon(1e-9));

  // Oracle self-check: the brute-force marginals sum to 1.
  const auto marginals = ctc_marginals_bruteforce(two_frame_example());
  double total = 0.0;
  for (const auto& [seq, p] : marginals) total += p;
  CHECK(total == doctest::Approx(1.0).epsilon(1e-9));
}

TEST_CASE("single-frame tie ranks the empty transcript first") {
  LogitMatrix m;
  m.vocab = {"a"};
  m.probs = {0.5, 0.5};
  const auto cands = ctc_prefix_beam_search(m, 4, 2);
  REQUIRE(cands.candidates.size() == 2);
  // Equal scores break lexicographically: "" before "a".
  CHECK(cands.candidates[0].transcript.empty());
  CHECK(std::exp(cands.candidates[0].ctc_log_prob) == doctest::Approx(0.5));
  CHECK(cands.candidates[1].transcript == TokenSeq{"a"});
  CHECK(std::exp(cands.candidates[1].ctc_log_prob) == doctest::Approx(0.5));
}

TEST_CASE("beam width 1 degenerates to the dominant prefix") {
  const auto one = ctc_prefix_beam_search(two_frame_example(), 1, 1);
  REQUIRE(one.candidates.size() == 1);
  CHECK(one.candidates[0].transcript == TokenSeq{"a"});
  CHECK_THROWS_AS(ctc_prefix_beam_search(two_frame_example(), 0, 1), InvalidParam);
  CHECK_THROWS_AS(ctc_prefix_beam_search(two_frame_example(), 2, 3), InvalidParam);
}

TEST_CASE("exhaustive beam matches brute-force marginals on random instances") {
  RandomStream rng(314159);
  for (int iter = 0; iter < 100; ++iter) {
    const auto frames = static_cast<std::size_t>(rng.uniform_int(1, 4));
    const auto vocab_size = static_cast<std::size_t>(rng.uniform_int(1, 3));
    const LogitMatrix logits = make_random_logits(rng, frames, vocab_size);

    const int exhaustive = 1 << 10;
    const auto cands =
        ctc_prefix_beam_search(logits, exhaustive, std::min(exhaustive, 16));
    const auto oracle = ctc_marginals_bruteforce(logits);

    for (const auto& c : cands.candidates) {
      const auto it = oracle.find(join_tokens(c.transcript));
      REQUIRE(it != oracle.end());
      CHECK(std::exp(c.ctc_log_prob) == doctest::Approx(it->second).epsilon(1e-9));
    }
    // Ranking agrees with the oracle's best sequence.
    double best_p = -1.0;
    std::string best_seq;
    for (const auto& [seq, p] : oracle) {
      if (p > best_p + 1e-15) {
        best_p = p;
        best_seq = seq;
      }
    }
    CHECK(std::exp(cands.candidates[0].ctc_log_prob) ==
          doctest::Approx(best_p).epsilon(1e-9));
  }
}

TEST_CASE("pruned beams never exceed the exact marginal; exhaustive attains it") {
  // A pruned run only sums a subset of the alignment paths, so its mass is
  // bounded above by the exact marginal; an exhaustive beam reaches it.
  RandomStream rng(2718);
  for (int iter = 0; iter < 50; ++iter) {
    const LogitMatrix logits = make_random_logits(rng, 4, 3);
    const auto oracle = ctc_marginals_bruteforce(logits);
    for (int beam : {1, 2, 4, 8, 64, 1024}) {
      const auto cands = ctc_prefix_beam_search(logits, beam, beam);
      for (const auto& c : cands.candidates) {
        const auto it = oracle.find(join_tokens(c.transcript));
        REQUIRE(it != oracle.end());
        const double p = std::exp(c.ctc_log_prob);
        CHECK(p <= it->second + 1e-12);
        if (beam >= 1024) CHECK(p == doctest::Approx(it->second).epsilon(1e-9));
      }
    }
  }
}

TEST_CASE("greedy output equals collapse of the argmax path") {
  RandomStream rng(5151);
  for (int iter = 0; iter < 100; ++iter) {
    const LogitMatrix logits =
        make_random_logits(rng, static_cast<std::size_t>(rng.uniform_int(1, 6)),
                           static_cast<std::size_t>(rng.uniform_int(1, 4)));
    std::vector<int> argmax_path;
    for (std::size_t t = 0; t < logits.frames(); ++t) {
      std::size_t best = 0;
      for (std::size_t s = 1; s <= logits.vocab_size(); ++s) {
        if (logits.at(t, s) > logits.at(t, best)) best = s;
      }
      argmax_path.push_back(static_cast<int>(best));
    }
    CHECK(ctc_greedy(logits).tokens == collapse(argmax_path, logits.vocab));
  }
}

TEST_CASE("attention rescoring") {
  const auto cands = ctc_prefix_beam_search(two_frame_example(), 16, 3);

  SUBCASE("ctc_weight 1 preserves the CTC order for any scorer") {
    UniformScorer uniform;
    const auto rescored = attention_rescore(cands, uniform, 1.0);
    REQUIRE(rescored.candidates.size() == cands.candidates.size());
    for (std::size_t i = 0; i < cands.candidates.size(); ++i) {
      CHECK(rescored.candidates[i].transcript == cands.candidates[i].transcript);
    }
  }

  SUBCASE("a scorer preference flips equal CTC scores") {
    CandidateSet tied;
    tied.candidates = {{TokenSeq{"a"}, std::log(0.3), {}},
                       {TokenSeq{"b"}, std::log(0.3), {}}};
    PreferSecondScorer scorer(TokenSeq{"b"});
    const auto rescored = attention_rescore(tied, scorer, 0.5);
    CHECK(rescored.candidates[0].transcript == TokenSeq{"b"});
  }

  SUBCASE("a uniform scorer at weight 0.5 keeps the order") {
    UniformScorer uniform;
    const auto rescored = attention_rescore(cands, uniform, 0.5);
    for (std::size_t i = 0; i < cands.candidates.size(); ++i) {
      CHECK(rescored.candidates[i].transcript == cands.candidates[i].transcript);
    }
  }

  SUBCASE("scorer failure becomes BackendFailure") {
    ThrowingScorer bad;
    CHECK_THROWS_AS(attention_rescore(cands, bad, 0.5), BackendFailure);
  }
}

TEST_CASE("cascade_batch returns transcripts in decode order") {
  const auto transcripts = cascade_batch(two_frame_example(),
                                         CascadeMode::kCtcPrefixBeamSearch, 16, 2);
  REQUIRE(transcripts.size() == 2);
  CHECK(transcripts[0] == TokenSeq{"a"});
  CHECK(transcripts[1] == TokenSeq{"a", "b"});

  const auto single = cascade_batch(two_frame_example(),
                                    CascadeMode::kCtcPrefixBeamSearch, 16, 1);
  CHECK(single.size() == 1);

  UniformScorer uniform;
  const auto rescored = cascade_batch(two_frame_example(),
                                      CascadeMode::kAttentionRescoring, 16, 2,
                                      &uniform, 1.0);
  CHECK(rescored == transcripts);

  CHECK_THROWS_AS(cascade_batch(two_frame_example(),
                                CascadeMode::kAttentionRescoring, 16, 2),
                  InvalidParam);
}

TEST_CASE("logits file round trip and validation") {
  TempDir dir("logits");
  const auto path = dir.path() / "example.logits";
  save_logits(path, two_frame_example());
  const LogitMatrix loaded = load_logits(path);
  CHECK(loaded.vocab == two_frame_example().vocab);
  REQUIRE(loaded.probs.size() == 6);
  for (std::size_t i = 0; i < 6; ++i) {
    CHECK(loaded.probs[i] == doctest::Approx(two_frame_example().probs[i]));
  }
  CHECK_THROWS_AS(load_logits(dir.path() / "missing.logits"), IoError);

  LogitMatrix bad = two_frame_example();
  bad.probs[0] = 0.9;  // row no longer sums to 1
  CHECK_THROWS_AS(bad.validate(), InvalidParam);
}
