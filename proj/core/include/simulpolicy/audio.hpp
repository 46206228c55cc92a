#pragma once

#include <cmath>
#include <cstdint>
#include <vector>

#include "simulpolicy/errors.hpp"

namespace simulpolicy {

// Mono waveform plus sample rate; the unit of streaming input.
// Samples are dimensionless amplitudes, nominally in [-1, 1].
struct AudioBuffer {
  std::vector<float> samples;
  std::uint32_t sample_rate_hz = 16000;

  double duration_ms() const {
    return 1000.0 * static_cast<double>(samples.size()) / sample_rate_hz;
  }

  void validate() const {
    if (sample_rate_hz == 0) throw InvalidParam("audio: sample_rate_hz must be > 0");
    for (float s : samples) {
      if (!std::isfinite(s)) throw InvalidParam("audio: non-finite sample");
    }
  }
};

}  // namespace simulpolicy
