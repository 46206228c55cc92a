#include "simulpolicy/manifest.hpp"

#include <fstream>
#include <unordered_set>

#include "json.hpp"
#include "simulpolicy/errors.hpp"

namespace simulpolicy {

namespace {

std::string text_field(const nlohmann::json& obj, const char* key) {
  const auto& v = obj.at(key);
  if (v.is_string()) return v.get<std::string>();
  if (v.is_array()) {
    std::string joined;
    for (const auto& item : v) {
      if (!item.is_string()) throw ManifestError("non-string in array field");
      if (!joined.empty()) joined.push_back(' ');
      joined += item.get<std::string>();
    }
    return joined;
  }
  throw ManifestError(std::string(key) + " must be a string or string array");
}

}  // namespace

std::vector<Utterance> load_manifest(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw ManifestError("cannot open manifest " + path.string());
  const auto base = path.parent_path();

  std::vector<Utterance> utterances;
  std::unordered_set<std::string> seen_ids;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
    const std::string where = path.filename().string() + ":" + std::to_string(line_no);
    nlohmann::json obj;
    try {
      obj = nlohmann::json::parse(line);
    } catch (const nlohmann::json::exception& e) {
      throw ManifestError(where + ": invalid JSON: " + e.what());
    }
    try {
      Utterance utt;
      utt.id = obj.at("id").get<std::string>();
      if (obj.contains("audio")) {
        utt.audio_path = base / obj.at("audio").get<std::string>();
      }
      if (obj.contains("logits")) {
        utt.logits_path = base / obj.at("logits").get<std::string>();
      }
      utt.reference = text_field(obj, "reference");
      if (obj.contains("transcript")) utt.source_transcript = text_field(obj, "transcript");

      if (utt.id.empty()) throw ManifestError("empty id");
      if (!utt.has_audio() && !utt.has_logits()) {
        throw ManifestError("needs an 'audio' or 'logits' path");
      }
      if (!seen_ids.insert(utt.id).second) {
        throw ManifestError("duplicate id '" + utt.id + "'");
      }
      if (utt.has_audio() && !std::filesystem::exists(utt.audio_path)) {
        throw ManifestError("audio file not found: " + utt.audio_path.string());
      }
      if (utt.has_logits() && !std::filesystem::exists(utt.logits_path)) {
        throw ManifestError("logits file not found: " + utt.logits_path.string());
      }
      utterances.push_back(std::move(utt));
    } catch (const ManifestError& e) {
      throw ManifestError(where + ": " + e.what());
    } catch (const nlohmann::json::exception& e) {
      throw ManifestError(where + ": " + e.what());
    }
  }
  if (utterances.empty()) {
    throw ManifestError(path.string() + ": empty corpus");
  }
  return utterances;
}

}  // namespace simulpolicy
