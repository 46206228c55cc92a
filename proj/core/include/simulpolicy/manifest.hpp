#pragma once

#include <filesystem>
#include <string>
#include <vector>

namespace simulpolicy {

struct Utterance {
  std::string id;
  std::filesystem::path audio_path;   // end-to-end input (WAV)
  std::filesystem::path logits_path;  // cascade desk-scale input
  std::string reference;
  std::string source_transcript;  // optional

  bool has_audio() const { return !audio_path.empty(); }
  bool has_logits() const { return !logits_path.empty(); }
};

// JSON-lines manifest, one object per utterance with keys `id`,
// `audio` or `logits`, `reference`, optional `transcript`. Relative paths
// resolve against the manifest's directory; referenced files must exist.
// Errors name the offending line.
std::vector<Utterance> load_manifest(const std::filesystem::path& path);

}  // namespace simulpolicy
