#include "support/fixtures.hpp"

#include <unistd.h>

#include <atomic>
#include <cmath>
#include <fstream>

#include "simulpolicy/engine.hpp"
#include "simulpolicy/synthetic.hpp"
#include "simulpolicy/wav.hpp"

namespace simulpolicy::testing {

AudioBuffer make_test_audio(std::uint64_t seed, int duration_ms,
                            std::uint32_t sample_rate_hz) {
  RandomStream rng(mix64(seed, 0xA0D10));
  AudioBuffer audio;
  audio.sample_rate_hz = sample_rate_hz;
  const auto count = static_cast<std::size_t>(
      static_cast<std::uint64_t>(duration_ms) * sample_rate_hz / 1000);
  audio.samples.resize(count);
  // Two slow sinusoids plus a little noise keeps samples in (-1, 1).
  const double f1 = rng.uniform(80.0, 300.0);
  const double f2 = rng.uniform(300.0, 900.0);
  for (std::size_t i = 0; i < count; ++i) {
    const double t = static_cast<double>(i) / sample_rate_hz;
    const double v = 0.4 * std::sin(2.0 * 3.14159265358979 * f1 * t) +
                     0.3 * std::sin(2.0 * 3.14159265358979 * f2 * t) +
                     0.05 * rng.uniform(-1.0, 1.0);
    audio.samples[i] = static_cast<float>(v);
  }
  return audio;
}

LogitMatrix make_random_logits(RandomStream& rng, std::size_t frames,
                               std::size_t vocab_size) {
  static const std::vector<std::string> kVocab = {"a", "b", "c", "d", "e"};
  LogitMatrix m;
  m.vocab.assign(kVocab.begin(), kVocab.begin() + static_cast<std::ptrdiff_t>(vocab_size));
  const std::size_t width = vocab_size + 1;
  m.probs.resize(frames * width);
  for (std::size_t t = 0; t < frames; ++t) {
    double row_sum = 0.0;
    for (std::size_t s = 0; s < width; ++s) {
      const double v = rng.uniform(0.01, 1.0);
      m.probs[t * width + s] = v;
      row_sum += v;
    }
    for (std::size_t s = 0; s < width; ++s) m.probs[t * width + s] /= row_sum;
  }
  return m;
}

TempDir::TempDir(const std::string& tag) {
  static std::atomic<unsigned> counter{0};
  path_ = std::filesystem::temp_directory_path() /
          ("simulpolicy_" + tag + "_" + std::to_string(::getpid()) + "_" +
           std::to_string(counter.fetch_add(1)));
  std::filesystem::create_directories(path_);
}

TempDir::~TempDir() {
  std::error_code ec;
  std::filesystem::remove_all(path_, ec);
}

SyntheticCorpus write_synthetic_corpus(const std::filesystem::path& dir,
                                       const SyntheticOptions& synthetic,
                                       int chunk_size_ms, std::uint64_t seed,
                                       const std::vector<int>& durations_ms,
                                       std::uint32_t sample_rate_hz) {
  std::filesystem::create_directories(dir);
  SyntheticCorpus corpus;
  corpus.manifest = dir / "manifest.jsonl";
  std::ofstream manifest(corpus.manifest);

  for (std::size_t i = 0; i < durations_ms.size(); ++i) {
    const std::string id = "utt" + std::to_string(i);
    const AudioBuffer audio =
        make_test_audio(mix64(seed, i), durations_ms[i], sample_rate_hz);
    const std::string wav_name = id + ".wav";
    write_wav(dir / wav_name, audio);

    // Reference = the backend's offline decode of the full utterance, read
    // back through the same WAV quantization the harness will see.
    const SyntheticTranslatorSpec spec =
        make_utterance_backend_spec(synthetic, chunk_size_ms, seed, id);
    const AudioBuffer stored = read_wav(dir / wav_name);
    ModelInput full;
    full.payload = stored;
    full.chunk_count = chunk_boundaries(stored, chunk_size_ms).size();
    const SyntheticTranslator backend(spec);
    TokenSeq reference = backend.offline_tokens(full);

    std::string ref_text;
    for (std::size_t k = 0; k < reference.size(); ++k) {
      if (k) ref_text.push_back(' ');
      ref_text += reference[k];
    }
    manifest << "{\"id\": \"" << id << "\", \"audio\": \"" << wav_name
             << "\", \"reference\": \"" << ref_text << "\"}\n";
    corpus.ids.push_back(id);
    corpus.references.push_back(std::move(reference));
  }
  manifest.close();
  return corpus;
}

Hypothesis ScriptedTranslator::translate(const ModelInput& input,
                                         std::span<const std::string> forced_prefix) {
  const std::size_t idx = std::min(outputs_.size() - 1, input.chunk_count - 1);
  TokenSeq natural = outputs_.at(idx);
  Hypothesis hyp;
  if (!honor_forced_) {
    hyp.tokens = std::move(natural);
    return hyp;
  }
  hyp.tokens.assign(forced_prefix.begin(), forced_prefix.end());
  for (std::size_t i = forced_prefix.size(); i < natural.size(); ++i) {
    hyp.tokens.push_back(std::move(natural[i]));
  }
  return hyp;
}

}  // namespace simulpolicy::testing
