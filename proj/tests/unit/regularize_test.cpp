#include <algorithm>
#include <cmath>
#include <cstring>

#include "doctest.h"
#include "simulpolicy/regularize.hpp"
#include "support/fixtures.hpp"

using namespace simulpolicy;
using namespace simulpolicy::testing;

namespace {

AudioBuffer from(std::initializer_list<float> values, std::uint32_t rate = 16000) {
  AudioBuffer audio;
  audio.sample_rate_hz = rate;
  audio.samples = values;
  return audio;
}

bool bit_identical(const AudioBuffer& a, const AudioBuffer& b) {
  if (a.sample_rate_hz != b.sample_rate_hz) return false;
  if (a.samples.size() != b.samples.size()) return false;
  for (std::size_t i = 0; i < a.samples.size(); ++i) {
    if (std::memcmp(&a.samples[i], &b.samples[i], sizeof(float)) != 0) return false;
  }
  return true;
}

}  // namespace

TEST_CASE("time_stretch worked examples") {
  const AudioBuffer audio = from({0.0f, 1.0f, 0.0f, -1.0f});
  const AudioBuffer out = time_stretch(audio, 2.0);
  REQUIRE(out.samples.size() == 2);
  CHECK(out.samples[0] == 0.0f);
  CHECK(out.samples[1] == 0.0f);

  const AudioBuffer doubled = time_stretch(audio, 0.5);
  CHECK(doubled.samples.size() == 8);

  CHECK_THROWS_AS(time_stretch(audio, 0.0), InvalidParam);
  CHECK_THROWS_AS(time_stretch(audio, -1.0), InvalidParam);
}

TEST_CASE("time_stretch length law") {
  RandomStream rng(42);
  const AudioBuffer audio = make_test_audio(5, 500);
  for (int iter = 0; iter < 200; ++iter) {
    const double speed = rng.uniform(0.5, 2.0);
    const AudioBuffer out = time_stretch(audio, speed);
    const double ideal = static_cast<double>(audio.samples.size()) / speed;
    CHECK(std::abs(static_cast<double>(out.samples.size()) - ideal) < 1.0);
    CHECK(out.sample_rate_hz == audio.sample_rate_hz);
  }
}

TEST_CASE("time_shift rolls circularly") {
  const AudioBuffer audio = from({1.0f, 2.0f, 3.0f, 4.0f});
  CHECK(time_shift(audio, 1).samples == std::vector<float>{4.0f, 1.0f, 2.0f, 3.0f});
  CHECK(bit_identical(time_shift(audio, 0), audio));
  CHECK(bit_identical(time_shift(audio, 4), audio));
  CHECK(time_shift(audio, -1).samples == std::vector<float>{2.0f, 3.0f, 4.0f, 1.0f});
}

TEST_CASE("time_shift preserves the sample multiset") {
  RandomStream rng(7);
  const AudioBuffer audio = make_test_audio(6, 200);
  for (int iter = 0; iter < 50; ++iter) {
    const auto shift = rng.uniform_int(-static_cast<std::int64_t>(audio.samples.size()),
                                       static_cast<std::int64_t>(audio.samples.size()));
    AudioBuffer rolled = time_shift(audio, shift);
    auto a = audio.samples;
    auto b = rolled.samples;
    std::sort(a.begin(), a.end());
    std::sort(b.begin(), b.end());
    CHECK(a == b);
  }
}

TEST_CASE("volume_gain scales samples") {
  const AudioBuffer audio = from({0.5f, -0.25f});
  const AudioBuffer out = volume_gain(audio, 2.0);
  CHECK(out.samples == std::vector<float>{1.0f, -0.5f});

  const AudioBuffer zeros = from({0.0f, 0.0f, 0.0f});
  CHECK(volume_gain(zeros, 3.7).samples == zeros.samples);
  CHECK_THROWS_AS(volume_gain(audio, 0.0), InvalidParam);
}

TEST_CASE("add_noise bounds and distribution") {
  RandomStream rng(1234);
  AudioBuffer zeros;
  zeros.sample_rate_hz = 16000;
  zeros.samples.assign(100000, 0.0f);

  SUBCASE("uniform noise stays within [-a, a]") {
    const double a = 0.25;
    const AudioBuffer out = add_noise(zeros, NoiseKind::kUniform, a, rng);
    for (float s : out.samples) {
      CHECK(s >= -a);
      CHECK(s <= a);
    }
  }

  SUBCASE("gaussian noise std is near the amplitude") {
    const double amplitude = 0.01;
    const AudioBuffer out = add_noise(zeros, NoiseKind::kGaussian, amplitude, rng);
    double sum = 0.0, sum_sq = 0.0;
    for (float s : out.samples) {
      sum += s;
      sum_sq += static_cast<double>(s) * s;
    }
    const double n = static_cast<double>(out.samples.size());
    const double var = sum_sq / n - (sum / n) * (sum / n);
    const double std_dev = std::sqrt(var);
    CHECK(std_dev > amplitude * 0.9);
    CHECK(std_dev < amplitude * 1.1);
  }

  SUBCASE("zero amplitude is the identity") {
    const AudioBuffer audio = make_test_audio(9, 100);
    CHECK(bit_identical(add_noise(audio, NoiseKind::kGaussian, 0.0, rng), audio));
  }
}

TEST_CASE("time_mask zeroes exactly the window") {
  const AudioBuffer audio = from({1.0f, 1.0f, 1.0f, 1.0f});
  const AudioBuffer out = time_mask(audio, 1, 2);
  CHECK(out.samples == std::vector<float>{1.0f, 0.0f, 0.0f, 1.0f});
  CHECK(bit_identical(time_mask(audio, 2, 0), audio));
  CHECK_THROWS_AS(time_mask(audio, 3, 2), InvalidParam);
}

TEST_CASE("identity parameters reproduce the input bit for bit") {
  const AudioBuffer audio = make_test_audio(77, 300);
  RandomStream rng(5);
  CHECK(bit_identical(time_stretch(audio, 1.0), audio));
  CHECK(bit_identical(time_shift(audio, 0), audio));
  CHECK(bit_identical(volume_gain(audio, 1.0), audio));
  CHECK(bit_identical(add_noise(audio, NoiseKind::kUniform, 0.0, rng), audio));
  CHECK(bit_identical(time_mask(audio, 0, 0), audio));
}

TEST_CASE("all transforms keep samples finite and the rate unchanged") {
  const AudioBuffer audio = make_test_audio(3, 250);
  RandomStream rng(6);
  const std::vector<RegularizerSpec> specs = {
      RegularizerSpec::parse("tst:0.8:1.25"), RegularizerSpec::parse("tsh:0.1"),
      RegularizerSpec::parse("va:1.0"), RegularizerSpec::parse("na:gaussian:0.02"),
      RegularizerSpec::parse("ma:0.2"), RegularizerSpec::parse("id")};
  for (const auto& spec : specs) {
    const Regularizer reg(spec);
    for (int iter = 0; iter < 20; ++iter) {
      const AudioBuffer out = reg(audio, rng);
      CHECK(out.sample_rate_hz == audio.sample_rate_hz);
      for (float s : out.samples) CHECK(std::isfinite(s));
    }
  }
}

TEST_CASE("sample_params draws from the declared ranges") {
  RandomStream rng(88);

  RegularizerSpec stretch = RegularizerSpec::parse("tst:1.0:1.0");
  CHECK(sample_params(stretch, 16000, rng).speed == 1.0);

  RegularizerSpec shift = RegularizerSpec::parse("tsh:0.05");
  for (int iter = 0; iter < 200; ++iter) {
    const auto p = sample_params(shift, 16000, rng);
    CHECK(p.shift != 0);
    CHECK(p.shift >= -800);
    CHECK(p.shift <= 800);
  }

  RegularizerSpec volume;  // default exponent bound ln 2
  volume.kind = RegularizerKind::kVolume;
  for (int iter = 0; iter < 200; ++iter) {
    const auto p = sample_params(volume, 16000, rng);
    CHECK(p.gain >= 0.5);
    CHECK(p.gain <= 2.0);
  }

  RegularizerSpec mask = RegularizerSpec::parse("ma:0.05");
  for (int iter = 0; iter < 200; ++iter) {
    const auto p = sample_params(mask, 16000, rng);
    CHECK(p.mask_width >= 1);
    CHECK(p.mask_width <= 800);
    CHECK(p.mask_start + p.mask_width <= 16000);
  }
}

TEST_CASE("regularizer spec validation") {
  CHECK_THROWS_AS(RegularizerSpec::parse("tst:0:1"), InvalidParam);
  CHECK_THROWS_AS(RegularizerSpec::parse("tst:1.2:1.1"), InvalidParam);
  CHECK_THROWS_AS(RegularizerSpec::parse("tsh:0.9"), InvalidParam);
  CHECK_THROWS_AS(RegularizerSpec::parse("ma:0.7"), InvalidParam);
  CHECK_THROWS_AS(RegularizerSpec::parse("na:pink:0.1"), InvalidParam);
  CHECK_THROWS_AS(RegularizerSpec::parse("bogus"), InvalidParam);
  CHECK(RegularizerSpec::parse("na:gaussian:0.25").noise_amplitude == 0.25);
}
