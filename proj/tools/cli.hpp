#pragma once

#include <string>
#include <vector>

#include "simulpolicy/harness.hpp"

namespace simulpolicy::cli {

struct CliConfig {
  enum class Command { kNone, kEval, kSweep, kCtcDecode, kMetrics, kLcp };
  Command command = Command::kNone;

  // eval / sweep
  std::string manifest;
  EvalOptions options;
  std::vector<int> chunk_sweep;
  std::vector<std::string> sweep_policies;
  std::string out_dir = "out";

  // ctc-decode
  std::string logits_path;
  std::string ctc_mode = "prefix_beam";
  int beam = 8;
  int n_best = 4;
  double ctc_weight = 0.5;
  std::uint64_t scorer_seed = 1;

  // metrics
  std::string log_path;

  // lcp
  std::vector<std::string> lcp_sequences;
};

// Exit codes: 0 success, 1 runtime failure, 2 usage error.
int run(int argc, const char* const* argv);

}  // namespace simulpolicy::cli
