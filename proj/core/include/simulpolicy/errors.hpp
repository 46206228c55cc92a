#pragma once

#include <stdexcept>
#include <string>

namespace simulpolicy {

// Base class for all library failures.
class Error : public std::runtime_error {
 public:
  explicit Error(const std::string& what) : std::runtime_error(what) {}
};

#define SIMULPOLICY_ERROR_KIND(Name)                        \
  class Name : public Error {                               \
   public:                                                  \
    explicit Name(const std::string& what) : Error(what) {} \
  }

SIMULPOLICY_ERROR_KIND(EmptyInput);       // empty audio / empty stream
SIMULPOLICY_ERROR_KIND(PrefixViolation);  // backend broke the forced-prefix contract
SIMULPOLICY_ERROR_KIND(BackendFailure);   // translator/scorer failed
SIMULPOLICY_ERROR_KIND(EmptyBatch);       // LCP over zero sequences
SIMULPOLICY_ERROR_KIND(InvalidParam);     // out-of-range configuration or argument
SIMULPOLICY_ERROR_KIND(InvalidLabel);     // CTC label index out of range
SIMULPOLICY_ERROR_KIND(UnsupportedWav);   // not RIFF/PCM16/mono
SIMULPOLICY_ERROR_KIND(ManifestError);    // bad JSONL manifest line
SIMULPOLICY_ERROR_KIND(EmptyOutput);      // no committed tokens to score
SIMULPOLICY_ERROR_KIND(EmptyCorpus);      // BLEU over zero pairs
SIMULPOLICY_ERROR_KIND(IoError);          // file read/write failure

#undef SIMULPOLICY_ERROR_KIND

}  // namespace simulpolicy
