#pragma once

#include <cstdint>
#include <string>
#include <string_view>
#include <vector>

#include "simulpolicy/audio.hpp"
#include "simulpolicy/rng.hpp"

namespace simulpolicy {

enum class RegularizerKind {
  kTimeStretch,  // tst
  kTimeShift,    // tsh
  kVolume,       // va
  kNoise,        // na
  kMask,         // ma
  kIdentity,     // id
};

enum class NoiseKind { kUniform, kGaussian };

// Parameter ranges for one input regularizer. Only the fields matching
// `kind` are read; the rest keep their defaults.
struct RegularizerSpec {
  RegularizerKind kind = RegularizerKind::kIdentity;

  double speed_min = 0.9;  // time stretch
  double speed_max = 1.1;

  double shift_fraction_max = 0.05;  // time shift, fraction of signal length

  double gain_exponent_max = 0.6931471805599453;  // volume, gain = exp(u), u in [-g, g]

  NoiseKind noise_kind = NoiseKind::kUniform;  // noise
  double noise_amplitude = 0.005;

  double mask_fraction_max = 0.05;  // mask

  void validate() const;
  std::string label() const;

  // Parses the CLI form: "tst:0.9:1.1", "tsh:0.05", "va:0.69",
  // "na:gaussian:0.005", "ma:0.05", "id". Parameters may be omitted.
  static RegularizerSpec parse(std::string_view text);
};

// Concrete parameters for one application, drawn by sample_params.
struct RegularizerParams {
  RegularizerKind kind = RegularizerKind::kIdentity;
  double speed = 1.0;
  std::int64_t shift = 0;
  double gain = 1.0;
  NoiseKind noise_kind = NoiseKind::kUniform;
  double amplitude = 0.0;
  std::size_t mask_start = 0;
  std::size_t mask_width = 0;
};

// Changes playback speed without changing pitch framing: the output is the
// input resampled by linear interpolation at stride `speed`. Length becomes
// max(1, round(len / speed)); the sample rate is unchanged.
AudioBuffer time_stretch(const AudioBuffer& audio, double speed);

// Circular roll along time: output[(k + shift) mod len] = input[k].
AudioBuffer time_shift(const AudioBuffer& audio, std::int64_t shift_samples);

// Multiplies every sample by `gain`; no clipping.
AudioBuffer volume_gain(const AudioBuffer& audio, double gain);

// output[k] = input[k] + amplitude * z_k, z_k iid uniform on [-1, 1] or
// standard gaussian.
AudioBuffer add_noise(const AudioBuffer& audio, NoiseKind kind, double amplitude,
                      RandomStream& rng);

// Zeroes samples in [start, start + width).
AudioBuffer time_mask(const AudioBuffer& audio, std::size_t start, std::size_t width);

// Draws concrete parameters uniformly from the spec's ranges. Discrete
// draws (shift, mask width) avoid the identity value whenever the range
// allows, so a sampled non-identity regularizer always perturbs the input.
RegularizerParams sample_params(const RegularizerSpec& spec, std::size_t input_len,
                                RandomStream& rng);

AudioBuffer apply_params(const AudioBuffer& audio, const RegularizerParams& params,
                         RandomStream& rng);

// Spec plus one-call application: sample fresh parameters, transform.
class Regularizer {
 public:
  Regularizer() = default;
  explicit Regularizer(RegularizerSpec spec) : spec_(std::move(spec)) {
    spec_.validate();
  }

  AudioBuffer operator()(const AudioBuffer& audio, RandomStream& rng) const {
    return apply_params(audio, sample_params(spec_, audio.samples.size(), rng), rng);
  }

  const RegularizerSpec& spec() const { return spec_; }

 private:
  RegularizerSpec spec_;
};

std::vector<Regularizer> make_regularizers(const std::vector<RegularizerSpec>& specs);

}  // namespace simulpolicy
