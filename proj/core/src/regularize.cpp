#include "simulpolicy/regularize.hpp"

#include <algorithm>
#include <cmath>
#include <cstdlib>

#include "simulpolicy/errors.hpp"

namespace simulpolicy {

namespace {

std::vector<std::string> split(std::string_view text, char sep) {
  std::vector<std::string> parts;
  std::size_t start = 0;
  while (true) {
    const auto pos = text.find(sep, start);
    if (pos == std::string_view::npos) {
      parts.emplace_back(text.substr(start));
      return parts;
    }
    parts.emplace_back(text.substr(start, pos - start));
    start = pos + 1;
  }
}

double parse_double(const std::string& s, const std::string& what) {
  char* end = nullptr;
  const double v = std::strtod(s.c_str(), &end);
  if (end == s.c_str() || *end != '\0' || !std::isfinite(v)) {
    throw InvalidParam("regularizer: bad " + what + " value '" + s + "'");
  }
  return v;
}

}  // namespace

void RegularizerSpec::validate() const {
  switch (kind) {
    case RegularizerKind::kTimeStretch:
      if (!(speed_min > 0.0) || !(speed_min <= speed_max)) {
        throw InvalidParam("time_stretch: need 0 < speed_min <= speed_max");
      }
      break;
    case RegularizerKind::kTimeShift:
      if (!(shift_fraction_max > 0.0) || shift_fraction_max > 0.5) {
        throw InvalidParam("time_shift: shift_fraction_max must be in (0, 0.5]");
      }
      break;
    case RegularizerKind::kVolume:
      if (!(gain_exponent_max > 0.0)) {
        throw InvalidParam("volume: gain exponent bound must be > 0");
      }
      break;
    case RegularizerKind::kNoise:
      if (noise_amplitude < 0.0) throw InvalidParam("noise: amplitude must be >= 0");
      break;
    case RegularizerKind::kMask:
      if (mask_fraction_max < 0.0 || mask_fraction_max > 0.5) {
        throw InvalidParam("mask: mask_fraction_max must be in [0, 0.5]");
      }
      break;
    case RegularizerKind::kIdentity:
      break;
  }
}

std::string RegularizerSpec::label() const {
  switch (kind) {
    case RegularizerKind::kTimeStretch:
      return "tst:" + std::to_string(speed_min) + ":" + std::to_string(speed_max);
    case RegularizerKind::kTimeShift:
      return "tsh:" + std::to_string(shift_fraction_max);
    case RegularizerKind::kVolume:
      return "va:" + std::to_string(gain_exponent_max);
    case RegularizerKind::kNoise:
      return std::string("na:") +
             (noise_kind == NoiseKind::kGaussian ? "gaussian" : "uniform") + ":" +
             std::to_string(noise_amplitude);
    case RegularizerKind::kMask:
      return "ma:" + std::to_string(mask_fraction_max);
    case RegularizerKind::kIdentity:
      return "id";
  }
  return "?";
}

RegularizerSpec RegularizerSpec::parse(std::string_view text) {
  const auto parts = split(text, ':');
  RegularizerSpec spec;
  const std::string& name = parts[0];
  if (name == "tst" || name == "time_stretch") {
    spec.kind = RegularizerKind::kTimeStretch;
    if (parts.size() >= 3) {
      spec.speed_min = parse_double(parts[1], "speed_min");
      spec.speed_max = parse_double(parts[2], "speed_max");
    } else if (parts.size() == 2) {
      throw InvalidParam("time_stretch: expected tst:<min>:<max>");
    }
  } else if (name == "tsh" || name == "time_shift") {
    spec.kind = RegularizerKind::kTimeShift;
    if (parts.size() >= 2) spec.shift_fraction_max = parse_double(parts[1], "shift fraction");
  } else if (name == "va" || name == "volume") {
    spec.kind = RegularizerKind::kVolume;
    if (parts.size() >= 2) spec.gain_exponent_max = parse_double(parts[1], "gain exponent");
  } else if (name == "na" || name == "noise") {
    spec.kind = RegularizerKind::kNoise;
    if (parts.size() >= 2) {
      if (parts[1] == "uniform") {
        spec.noise_kind = NoiseKind::kUniform;
      } else if (parts[1] == "gaussian") {
        spec.noise_kind = NoiseKind::kGaussian;
      } else {
        throw InvalidParam("noise: kind must be uniform or gaussian, got '" + parts[1] + "'");
      }
    }
    if (parts.size() >= 3) spec.noise_amplitude = parse_double(parts[2], "amplitude");
  } else if (name == "ma" || name == "mask") {
    spec.kind = RegularizerKind::kMask;
    if (parts.size() >= 2) spec.mask_fraction_max = parse_double(parts[1], "mask fraction");
  } else if (name == "id" || name == "identity") {
    spec.kind = RegularizerKind::kIdentity;
  } else {
    throw InvalidParam("unknown regularizer '" + std::string(text) + "'");
  }
  spec.validate();
  return spec;
}

AudioBuffer time_stretch(const AudioBuffer& audio, double speed) {
  if (!(speed > 0.0)) throw InvalidParam("time_stretch: speed must be > 0");
  const std::size_t n = audio.samples.size();
  AudioBuffer out;
  out.sample_rate_hz = audio.sample_rate_hz;
  if (n == 0) return out;

  const auto out_len = static_cast<std::size_t>(
      std::max<long long>(1, std::llround(static_cast<double>(n) / speed)));
  out.samples.resize(out_len);
  for (std::size_t k = 0; k < out_len; ++k) {
    double pos = static_cast<double>(k) * speed;
    const double last = static_cast<double>(n - 1);
    if (pos >= last) {
      out.samples[k] = audio.samples[n - 1];
      continue;
    }
    const auto i0 = static_cast<std::size_t>(pos);
    const double frac = pos - static_cast<double>(i0);
    out.samples[k] = static_cast<float>((1.0 - frac) * audio.samples[i0] +
                                        frac * audio.samples[i0 + 1]);
  }
  return out;
}

AudioBuffer time_shift(const AudioBuffer& audio, std::int64_t shift_samples) {
  AudioBuffer out;
  out.sample_rate_hz = audio.sample_rate_hz;
  const std::size_t n = audio.samples.size();
  out.samples.resize(n);
  if (n == 0) return out;
  const auto len = static_cast<std::int64_t>(n);
  std::int64_t shift = shift_samples % len;
  if (shift < 0) shift += len;
  for (std::size_t k = 0; k < n; ++k) {
    const std::size_t dst = (k + static_cast<std::size_t>(shift)) % n;
    out.samples[dst] = audio.samples[k];
  }
  return out;
}

AudioBuffer volume_gain(const AudioBuffer& audio, double gain) {
  if (!(gain > 0.0)) throw InvalidParam("volume_gain: gain must be > 0");
  AudioBuffer out = audio;
  for (auto& s : out.samples) s = static_cast<float>(s * gain);
  return out;
}

AudioBuffer add_noise(const AudioBuffer& audio, NoiseKind kind, double amplitude,
                      RandomStream& rng) {
  if (amplitude < 0.0) throw InvalidParam("add_noise: amplitude must be >= 0");
  if (amplitude == 0.0) return audio;
  AudioBuffer out = audio;
  for (auto& s : out.samples) {
    const double z = (kind == NoiseKind::kUniform) ? rng.uniform(-1.0, 1.0)
                                                   : rng.gaussian();
    s = static_cast<float>(s + amplitude * z);
  }
  return out;
}

AudioBuffer time_mask(const AudioBuffer& audio, std::size_t start, std::size_t width) {
  if (start + width > audio.samples.size()) {
    throw InvalidParam("time_mask: window exceeds signal length");
  }
  AudioBuffer out = audio;
  std::fill(out.samples.begin() + static_cast<std::ptrdiff_t>(start),
            out.samples.begin() + static_cast<std::ptrdiff_t>(start + width), 0.0f);
  return out;
}

RegularizerParams sample_params(const RegularizerSpec& spec, std::size_t input_len,
                                RandomStream& rng) {
  spec.validate();
  RegularizerParams p;
  p.kind = spec.kind;
  switch (spec.kind) {
    case RegularizerKind::kTimeStretch:
      p.speed = rng.uniform(spec.speed_min, spec.speed_max);
      break;
    case RegularizerKind::kTimeShift: {
      const auto bound = static_cast<std::int64_t>(
          std::llround(spec.shift_fraction_max * static_cast<double>(input_len)));
      if (bound >= 1) {
        // draw from [-bound, bound] \ {0}
        const std::int64_t v = rng.uniform_int(1, 2 * bound);
        p.shift = (v <= bound) ? v : bound - v;
      }
      break;
    }
    case RegularizerKind::kVolume:
      p.gain = std::exp(rng.uniform(-spec.gain_exponent_max, spec.gain_exponent_max));
      break;
    case RegularizerKind::kNoise:
      p.noise_kind = spec.noise_kind;
      p.amplitude = spec.noise_amplitude;
      break;
    case RegularizerKind::kMask: {
      const auto max_width = static_cast<std::int64_t>(
          std::llround(spec.mask_fraction_max * static_cast<double>(input_len)));
      if (max_width >= 1) {
        p.mask_width = static_cast<std::size_t>(rng.uniform_int(1, max_width));
        p.mask_start = static_cast<std::size_t>(
            rng.uniform_int(0, static_cast<std::int64_t>(input_len - p.mask_width)));
      }
      break;
    }
    case RegularizerKind::kIdentity:
      break;
  }
  return p;
}

AudioBuffer apply_params(const AudioBuffer& audio, const RegularizerParams& params,
                         RandomStream& rng) {
  switch (params.kind) {
    case RegularizerKind::kTimeStretch:
      return time_stretch(audio, params.speed);
    case RegularizerKind::kTimeShift:
      return time_shift(audio, params.shift);
    case RegularizerKind::kVolume:
      return volume_gain(audio, params.gain);
    case RegularizerKind::kNoise:
      return add_noise(audio, params.noise_kind, params.amplitude, rng);
    case RegularizerKind::kMask:
      return time_mask(audio, params.mask_start, params.mask_width);
    case RegularizerKind::kIdentity:
      return audio;
  }
  return audio;
}

std::vector<Regularizer> make_regularizers(const std::vector<RegularizerSpec>& specs) {
  std::vector<Regularizer> out;
  out.reserve(specs.size());
  for (const auto& s : specs) out.emplace_back(s);
  return out;
}

}  // namespace simulpolicy
