#pragma once

#include <filesystem>

#include "simulpolicy/audio.hpp"

namespace simulpolicy {

// Reads a RIFF/WAVE file: PCM 16-bit signed little-endian, mono. Samples
// are scaled to [-1, 1] by division by 32768.
AudioBuffer read_wav(const std::filesystem::path& path);

// Writes PCM16 mono; samples are clamped to [-1, 1] and rounded.
void write_wav(const std::filesystem::path& path, const AudioBuffer& audio);

}  // namespace simulpolicy
