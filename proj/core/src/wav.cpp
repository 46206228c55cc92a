#include "simulpolicy/wav.hpp"

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <cstring>
#include <fstream>

#include "simulpolicy/errors.hpp"

namespace simulpolicy {

namespace {

std::uint32_t read_u32(const unsigned char* p) {
  return static_cast<std::uint32_t>(p[0]) | (static_cast<std::uint32_t>(p[1]) << 8) |
         (static_cast<std::uint32_t>(p[2]) << 16) |
         (static_cast<std::uint32_t>(p[3]) << 24);
}

std::uint16_t read_u16(const unsigned char* p) {
  return static_cast<std::uint16_t>(p[0] | (p[1] << 8));
}

void put_u32(std::string& out, std::uint32_t v) {
  out.push_back(static_cast<char>(v & 0xFF));
  out.push_back(static_cast<char>((v >> 8) & 0xFF));
  out.push_back(static_cast<char>((v >> 16) & 0xFF));
  out.push_back(static_cast<char>((v >> 24) & 0xFF));
}

void put_u16(std::string& out, std::uint16_t v) {
  out.push_back(static_cast<char>(v & 0xFF));
  out.push_back(static_cast<char>((v >> 8) & 0xFF));
}

}  // namespace

AudioBuffer read_wav(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw UnsupportedWav("cannot open " + path.string());
  std::string bytes((std::istreambuf_iterator<char>(in)),
                    std::istreambuf_iterator<char>());
  const auto* data = reinterpret_cast<const unsigned char*>(bytes.data());
  const std::size_t size = bytes.size();

  if (size < 12 || std::memcmp(data, "RIFF", 4) != 0 ||
      std::memcmp(data + 8, "WAVE", 4) != 0) {
    throw UnsupportedWav(path.string() + ": not a RIFF/WAVE file");
  }

  bool have_fmt = false;
  std::uint16_t channels = 0, bits = 0, format = 0;
  std::uint32_t rate = 0;
  const unsigned char* pcm = nullptr;
  std::size_t pcm_bytes = 0;

  std::size_t pos = 12;
  while (pos + 8 <= size) {
    const std::uint32_t chunk_size = read_u32(data + pos + 4);
    const unsigned char* body = data + pos + 8;
    if (pos + 8 + chunk_size > size) {
      throw UnsupportedWav(path.string() + ": truncated chunk");
    }
    if (std::memcmp(data + pos, "fmt ", 4) == 0) {
      if (chunk_size < 16) throw UnsupportedWav(path.string() + ": short fmt chunk");
      format = read_u16(body);
      channels = read_u16(body + 2);
      rate = read_u32(body + 4);
      bits = read_u16(body + 14);
      have_fmt = true;
    } else if (std::memcmp(data + pos, "data", 4) == 0) {
      pcm = body;
      pcm_bytes = chunk_size;
    }
    pos += 8 + chunk_size + (chunk_size & 1);  // chunks are word-aligned
  }

  if (!have_fmt || pcm == nullptr) {
    throw UnsupportedWav(path.string() + ": missing fmt or data chunk");
  }
  if (format != 1) {
    throw UnsupportedWav(path.string() + ": only PCM (format 1) is supported");
  }
  if (channels != 1) {
    throw UnsupportedWav(path.string() + ": only mono is supported, got " +
                         std::to_string(channels) + " channels");
  }
  if (bits != 16) {
    throw UnsupportedWav(path.string() + ": only 16-bit samples are supported");
  }
  if (rate == 0) throw UnsupportedWav(path.string() + ": zero sample rate");

  AudioBuffer audio;
  audio.sample_rate_hz = rate;
  const std::size_t count = pcm_bytes / 2;
  audio.samples.resize(count);
  for (std::size_t i = 0; i < count; ++i) {
    const auto s = static_cast<std::int16_t>(read_u16(pcm + 2 * i));
    audio.samples[i] = static_cast<float>(s) / 32768.0f;
  }
  return audio;
}

void write_wav(const std::filesystem::path& path, const AudioBuffer& audio) {
  if (audio.sample_rate_hz == 0) throw InvalidParam("write_wav: zero sample rate");
  const std::uint32_t data_bytes = static_cast<std::uint32_t>(audio.samples.size() * 2);

  std::string out;
  out.reserve(44 + data_bytes);
  out += "RIFF";
  put_u32(out, 36 + data_bytes);
  out += "WAVEfmt ";
  put_u32(out, 16);
  put_u16(out, 1);  // PCM
  put_u16(out, 1);  // mono
  put_u32(out, audio.sample_rate_hz);
  put_u32(out, audio.sample_rate_hz * 2);  // byte rate
  put_u16(out, 2);                         // block align
  put_u16(out, 16);                        // bits
  out += "data";
  put_u32(out, data_bytes);
  for (float s : audio.samples) {
    const float clamped = std::clamp(s, -1.0f, 1.0f);
    const auto v = static_cast<std::int16_t>(std::lrintf(
        std::clamp(clamped * 32768.0f, -32768.0f, 32767.0f)));
    put_u16(out, static_cast<std::uint16_t>(v));
  }

  std::ofstream file(path, std::ios::binary);
  if (!file) throw IoError("cannot write " + path.string());
  file.write(out.data(), static_cast<std::streamsize>(out.size()));
  if (!file) throw IoError("failed writing " + path.string());
}

}  // namespace simulpolicy
