#include <algorithm>

#include "doctest.h"
#include "simulpolicy/engine.hpp"
#include "simulpolicy/synthetic.hpp"
#include "support/fixtures.hpp"

using namespace simulpolicy;
using namespace simulpolicy::testing;

namespace {

AudioBuffer silence(std::size_t samples, std::uint32_t rate = 16000) {
  AudioBuffer audio;
  audio.sample_rate_hz = rate;
  audio.samples.assign(samples, 0.0f);
  return audio;
}

EngineConfig hold_config(int n, int chunk_ms = 500) {
  EngineConfig config;
  config.chunk_size_ms = chunk_ms;
  config.policy.kind = PolicySpec::Kind::kHoldN;
  config.policy.n = n;
  return config;
}

}  // namespace

TEST_CASE("chunk_boundaries splits at fixed sample counts") {
  CHECK(chunk_boundaries(silence(16000), 250) ==
        std::vector<std::size_t>{4000, 8000, 12000, 16000});
  CHECK(chunk_boundaries(silence(10000), 250) ==
        std::vector<std::size_t>{4000, 8000, 10000});
  CHECK(chunk_boundaries(silence(100), 1000) == std::vector<std::size_t>{100});
}

TEST_CASE("chunk_boundaries rejects empty audio") {
  CHECK_THROWS_AS(chunk_boundaries(silence(0), 250), EmptyInput);
  CHECK_THROWS_AS(chunk_boundaries(silence(100), 0), InvalidParam);
}

TEST_CASE("hold-0 with a fixed-output translator commits everything at chunk 1") {
  // The backend ignores the input and always produces the same sequence.
  ScriptedTranslator backend({{"a", "b", "c"}, {"a", "b", "c"}});
  const AudioBuffer audio = silence(16000);  // 2 chunks at 500 ms
  auto policy = make_policy(hold_config(0).policy);
  const auto result = run_incremental(backend, audio, *policy, hold_config(0));

  REQUIRE(result.records.size() == 3);
  for (const auto& r : result.records) {
    CHECK(r.chunk_index == 1);
    CHECK(r.consumed_ms == doctest::Approx(500.0));
  }
  CHECK(result.tokens() == TokenSeq{"a", "b", "c"});
}

TEST_CASE("la-2 on a growing stable hypothesis commits the first token at chunk 2") {
  ScriptedTranslator backend({{"t1"}, {"t1", "t2"}, {"t1", "t2", "t3"}});
  const AudioBuffer audio = silence(24000);  // 3 chunks at 500 ms
  EngineConfig config = hold_config(0);
  config.policy.kind = PolicySpec::Kind::kLaN;
  config.policy.n = 2;
  auto policy = make_policy(config.policy);

  const auto result = run_incremental(backend, audio, *policy, config);
  REQUIRE(!result.records.empty());
  CHECK(result.records[0].token == "t1");
  CHECK(result.records[0].chunk_index == 2);
  // Finalization completes the utterance.
  CHECK(result.tokens() == TokenSeq{"t1", "t2", "t3"});
}

TEST_CASE("finalization commits the full final hypothesis") {
  SyntheticTranslatorSpec spec;
  spec.tokens_per_chunk = 3;
  spec.unstable_suffix_len = 2;
  spec.seed = 7;
  spec.chunk_size_ms = 500;
  SyntheticTranslator backend(spec);
  const AudioBuffer audio = make_test_audio(1, 2000);

  EngineConfig config = hold_config(2);
  auto policy = make_policy(config.policy);
  const auto result = run_incremental(backend, audio, *policy, config);

  ModelInput full;
  full.payload = audio;
  full.chunk_count = 4;
  CHECK(result.tokens() == backend.offline_tokens(full));

  EngineConfig no_final = config;
  no_final.finalize_on_last_chunk = false;
  auto policy2 = make_policy(no_final.policy);
  const auto partial = run_incremental(backend, audio, *policy2, no_final);
  CHECK(partial.records.size() < result.records.size());
  CHECK(partial.policy_committed == partial.records.size());
}

TEST_CASE("prefix violation is a hard error") {
  // Backend ignores the forced prefix entirely; after one commit the next
  // decode breaks the contract.
  ScriptedTranslator backend({{"x", "y"}, {"q", "r", "s"}}, /*honor_forced=*/false);
  const AudioBuffer audio = silence(16000);
  auto policy = make_policy(hold_config(0).policy);
  CHECK_THROWS_AS(run_incremental(backend, audio, *policy, hold_config(0)),
                  PrefixViolation);
}

TEST_CASE("prefix stability and delay monotonicity over a synthetic stream") {
  SyntheticTranslatorSpec spec;
  spec.tokens_per_chunk = 2;
  spec.unstable_suffix_len = 1;
  spec.seed = 99;
  spec.chunk_size_ms = 250;
  SyntheticTranslator backend(spec);
  const AudioBuffer audio = make_test_audio(3, 2000);

  EngineConfig config = hold_config(1, 250);
  auto policy = make_policy(config.policy);

  TokenSeq committed_so_far;
  std::size_t chunks_seen = 0;
  auto observer = [&](const ChunkTrace& trace) {
    ++chunks_seen;
    CHECK(trace.committed_before == committed_so_far.size());
    for (const auto& tok : trace.newly_committed) committed_so_far.push_back(tok);
    // committed must be a prefix of the chunk's best hypothesis
    REQUIRE(trace.best.tokens.size() >= committed_so_far.size());
    CHECK(std::equal(committed_so_far.begin(), committed_so_far.end(),
                     trace.best.tokens.begin()));
  };
  const auto result = run_incremental(backend, audio, *policy, config, observer);

  CHECK(chunks_seen == result.chunk_count);
  double prev = 0.0;
  std::size_t prev_chunk = 0;
  for (const auto& r : result.records) {
    CHECK(r.consumed_ms >= prev);
    CHECK(r.chunk_index >= prev_chunk);
    prev = r.consumed_ms;
    prev_chunk = r.chunk_index;
  }
}

TEST_CASE("decode call counts: one per chunk for hold/la, B+1 for r-bi") {
  const AudioBuffer audio = make_test_audio(5, 2000);

  SyntheticTranslatorSpec spec;
  spec.tokens_per_chunk = 2;
  spec.seed = 4;
  spec.chunk_size_ms = 500;

  {
    SyntheticTranslator backend(spec);
    EngineConfig config = hold_config(1);
    auto policy = make_policy(config.policy);
    const auto result = run_incremental(backend, audio, *policy, config);
    CHECK(backend.calls() == 4);
    CHECK(result.decode_calls == 4);
  }
  {
    SyntheticTranslator backend(spec);
    EngineConfig config = hold_config(0);
    config.policy.kind = PolicySpec::Kind::kLaN;
    config.policy.n = 2;
    auto policy = make_policy(config.policy);
    run_incremental(backend, audio, *policy, config);
    CHECK(backend.calls() == 4);
  }
  {
    SyntheticTranslator backend(spec);
    EngineConfig config = hold_config(0);
    config.policy.kind = PolicySpec::Kind::kRBi;
    config.policy.regularizers = {RegularizerSpec::parse("na:uniform:0.01"),
                                  RegularizerSpec::parse("va")};
    auto policy = make_policy(config.policy);
    run_incremental(backend, audio, *policy, config);
    CHECK(backend.calls() == 4 * 3);  // B+1 decodes per chunk, B = 2
  }
}

TEST_CASE("fixed seed and config reproduce bit-identical results") {
  SyntheticTranslatorSpec spec;
  spec.tokens_per_chunk = 2;
  spec.unstable_suffix_len = 2;
  spec.seed = 11;
  spec.chunk_size_ms = 500;
  const AudioBuffer audio = make_test_audio(8, 3000);

  EngineConfig config = hold_config(0);
  config.policy.kind = PolicySpec::Kind::kRBi;
  config.policy.regularizers = {RegularizerSpec::parse("tst:0.95:1.05")};
  config.seed = 42;

  auto run_once = [&] {
    SyntheticTranslator backend(spec);
    auto policy = make_policy(config.policy);
    return run_incremental(backend, audio, *policy, config);
  };
  const auto a = run_once();
  const auto b = run_once();
  REQUIRE(a.records.size() == b.records.size());
  for (std::size_t i = 0; i < a.records.size(); ++i) {
    CHECK(a.records[i].token == b.records[i].token);
    CHECK(a.records[i].consumed_ms == b.records[i].consumed_ms);
    CHECK(a.records[i].chunk_index == b.records[i].chunk_index);
  }
}

TEST_CASE("engine config bounds") {
  EngineConfig config = hold_config(0, 49);
  CHECK_THROWS_AS(config.validate(), InvalidParam);
  config.chunk_size_ms = 10001;
  CHECK_THROWS_AS(config.validate(), InvalidParam);
  config.chunk_size_ms = 50;
  CHECK_NOTHROW(config.validate());
}
