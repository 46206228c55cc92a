#include "cli.hpp"

#include <fstream>
#include <iostream>
#include <sstream>

#include "CLI11.hpp"
#include "json.hpp"
#include "simulpolicy/errors.hpp"
#include "simulpolicy/policy.hpp"

namespace simulpolicy::cli {

namespace {

using nlohmann::json;

std::vector<std::string> split_list(const std::string& text) {
  std::vector<std::string> out;
  std::stringstream ss(text);
  std::string item;
  while (std::getline(ss, item, ',')) {
    if (!item.empty()) out.push_back(item);
  }
  return out;
}

void usage_error(const std::string& detail) {
  throw CLI::ValidationError(detail);
}

PolicySpec build_policy(const std::string& kind, int n, const std::string& reg_list,
                        bool word_lcp, EvalMode mode) {
  PolicySpec spec;
  if (kind == "hold") {
    spec.kind = PolicySpec::Kind::kHoldN;
    spec.n = n;
  } else if (kind == "la") {
    spec.kind = PolicySpec::Kind::kLaN;
    spec.n = n;
  } else if (kind == "rbi") {
    spec.kind = PolicySpec::Kind::kRBi;
  } else {
    usage_error("--policy must be hold, la or rbi");
  }
  for (const auto& token : split_list(reg_list)) {
    spec.regularizers.push_back(RegularizerSpec::parse(token));
  }
  spec.word_level_lcp = word_lcp;
  spec.validate(/*require_regularizers=*/mode == EvalMode::kEndToEnd);
  return spec;
}

MetricReport report_from_log_line(const json& line, Detokenizer detok,
                                  const BleuOptions& bleu_opts, bool al_ref) {
  UtteranceResult result;
  const auto& tokens = line.at("tokens");
  const auto& consumed = line.at("consumed_ms");
  const auto& chunks = line.at("chunk_index");
  for (std::size_t i = 0; i < tokens.size(); ++i) {
    result.records.push_back(CommitRecord{tokens[i].get<std::string>(),
                                          consumed[i].get<double>(),
                                          chunks[i].get<std::size_t>()});
  }
  result.src_duration_ms = line.at("src_duration_ms").get<double>();

  const std::string hyp_text = line.at("hypothesis").get<std::string>();
  const std::string ref_text = line.at("reference").get<std::string>();

  const DelaySchedule sched = word_delays(result.records, detok, result.src_duration_ms);
  MetricReport report;
  std::size_t normalizer = 0;
  if (al_ref) {
    std::stringstream ss(ref_text);
    std::string word;
    while (ss >> word) ++normalizer;
  }
  report.al_ms = average_lagging(sched, normalizer);
  report.ap = average_proportion(sched);
  report.dal_ms = dal(sched);
  report.low_latency = classify_latency(report.al_ms);
  const std::string hyp[] = {hyp_text};
  const std::string ref[] = {ref_text};
  report.bleu = bleu_text(hyp, ref, bleu_opts);
  return report;
}

int run_eval(const CliConfig& cfg) {
  const auto utterances = load_manifest(cfg.manifest);
  const CorpusReport report = evaluate_corpus(utterances, cfg.options);
  write_eval_outputs(report, cfg.options, cfg.out_dir);
  std::cout << "evaluated " << report.evaluated << " utterance(s), " << report.failed
            << " failed\n"
            << "corpus BLEU " << report.corpus_bleu << ", mean AL " << report.mean_al_ms
            << " ms, mean AP " << report.mean_ap << ", mean DAL " << report.mean_dal_ms
            << " ms\n"
            << (report.low_latency ? "low-latency (AL < 2 s)" : "not low-latency")
            << "\noutputs in " << cfg.out_dir << "\n";
  return 0;
}

int run_sweep(const CliConfig& cfg) {
  const auto utterances = load_manifest(cfg.manifest);
  SweepConfig sweep_cfg;
  if (!cfg.chunk_sweep.empty()) sweep_cfg.chunk_sizes_ms = cfg.chunk_sweep;
  for (const auto& label : cfg.sweep_policies) {
    PolicySpec spec = PolicySpec::parse(label);
    if (spec.kind == PolicySpec::Kind::kRBi) {
      spec.regularizers = cfg.options.engine.policy.regularizers;
      spec.word_level_lcp = cfg.options.engine.policy.word_level_lcp;
      if (cfg.options.mode == EvalMode::kEndToEnd) {
        spec.validate(/*require_regularizers=*/true);
      }
    }
    sweep_cfg.policies.push_back(std::move(spec));
  }
  const auto rows = sweep(utterances, cfg.options, sweep_cfg);
  const auto csv_path = std::filesystem::path(cfg.out_dir) / "sweep.csv";
  write_sweep_csv(rows, csv_path);
  std::cout << sweep_csv(rows) << "wrote " << csv_path.string() << "\n";
  return 0;
}

int run_ctc_decode(const CliConfig& cfg) {
  const LogitMatrix logits = load_logits(cfg.logits_path);
  json out;
  if (cfg.ctc_mode == "greedy") {
    const Hypothesis hyp = ctc_greedy(logits);
    out["mode"] = "ctc_greedy_search";
    out["candidates"] = json::array({json{{"transcript", hyp.tokens},
                                          {"log_prob", hyp.score.value_or(0.0)}}});
  } else {
    CandidateSet cands = ctc_prefix_beam_search(logits, cfg.beam, cfg.n_best);
    out["mode"] = "ctc_prefix_beam_search";
    if (cfg.ctc_mode == "rescoring") {
      SyntheticScorer scorer(cfg.scorer_seed);
      cands = attention_rescore(cands, scorer, cfg.ctc_weight);
      out["mode"] = "attention_rescoring";
    }
    json list = json::array();
    for (const auto& c : cands.candidates) {
      json item{{"transcript", c.transcript}, {"ctc_log_prob", c.ctc_log_prob}};
      if (c.rescored_log_prob) item["rescored_log_prob"] = *c.rescored_log_prob;
      list.push_back(std::move(item));
    }
    out["candidates"] = std::move(list);
  }
  std::cout << out.dump(2) << "\n";
  return 0;
}

int run_metrics(const CliConfig& cfg) {
  std::ifstream in(cfg.log_path);
  if (!in) throw IoError("cannot open log " + cfg.log_path);
  json out = json::array();
  std::string line;
  while (std::getline(in, line)) {
    if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
    json parsed;
    try {
      parsed = json::parse(line);
    } catch (const json::exception& e) {
      throw IoError(std::string("bad log line: ") + e.what());
    }
    if (parsed.contains("error")) continue;
    const MetricReport report = report_from_log_line(
        parsed, cfg.options.detok, cfg.options.bleu, cfg.options.al_reference_normalizer);
    out.push_back(json{{"id", parsed.at("id").get<std::string>()},
                       {"bleu", report.bleu},
                       {"AL_ms", report.al_ms},
                       {"AP", report.ap},
                       {"DAL_ms", report.dal_ms},
                       {"low_latency", report.low_latency}});
  }
  std::cout << out.dump(2) << "\n";
  return 0;
}

int run_lcp(const CliConfig& cfg) {
  std::vector<TokenSeq> seqs;
  for (const auto& text : cfg.lcp_sequences) {
    TokenSeq seq;
    std::stringstream ss(text);
    std::string tok;
    while (ss >> tok) seq.push_back(tok);
    seqs.push_back(std::move(seq));
  }
  const TokenSeq prefix = longest_common_prefix(seqs);
  for (std::size_t i = 0; i < prefix.size(); ++i) {
    std::cout << (i ? " " : "") << prefix[i];
  }
  std::cout << "\n";
  return 0;
}

}  // namespace

int run(int argc, const char* const* argv) {
  CliConfig cfg;
  CLI::App app{"simultaneous speech-translation policy engine"};
  app.require_subcommand(1);

  std::string mode = "e2e", backend_kind, policy_kind = "hold", reg_list, detok = "space";
  int policy_n = 0;
  bool word_lcp = false, no_finalize = false;
  std::uint64_t seed = 0;
  std::string sweep_policies = "la-2,rbi";
  std::string chunk_sweep = "250,500,1000";

  auto add_common_eval_flags = [&](CLI::App* cmd) {
    cmd->add_option("--manifest", cfg.manifest, "JSONL corpus manifest")->required();
    cmd->add_option("--mode", mode, "e2e or cascade")
        ->check(CLI::IsMember({"e2e", "cascade"}));
    cmd->add_option("--backend", backend_kind, "synthetic (e2e) or logits (cascade)")
        ->check(CLI::IsMember({"synthetic", "logits"}));
    cmd->add_option("--n", policy_n, "Hold-n / LA-n parameter");
    cmd->add_option("--reg", reg_list,
                    "comma list of regularizers, e.g. tst:0.9:1.1,na:gaussian:0.005");
    cmd->add_flag("--lcp-words", word_lcp, "commit at word granularity");
    cmd->add_option("--chunk-ms", cfg.options.engine.chunk_size_ms, "chunk size in ms");
    cmd->add_option("--seed", seed, "random seed")->envname("SIMULPOLICY_SEED");
    cmd->add_option("--out", cfg.out_dir, "output directory");
    cmd->add_flag("--skip-errors", cfg.options.skip_errors,
                  "record per-utterance failures instead of aborting");
    cmd->add_option("--jobs", cfg.options.jobs, "parallel utterances");
    cmd->add_flag("--no-finalize", no_finalize,
                  "do not commit the final hypothesis at end of stream");
    cmd->add_option("--detok", detok, "token joining rule: space or spm")
        ->check(CLI::IsMember({"space", "spm"}));
    cmd->add_flag("--bleu-smooth", cfg.options.bleu.add_one_smoothing,
                  "add-one BLEU smoothing for short corpora");
    cmd->add_flag("--al-ref", cfg.options.al_reference_normalizer,
                  "normalize AL by the reference length instead of the hypothesis");
    // synthetic backend shape
    cmd->add_option("--syn-ms-per-token", cfg.options.synthetic.ms_per_token,
                    "synthetic backend: source ms per emitted token");
    cmd->add_option("--syn-unstable", cfg.options.synthetic.unstable_suffix_len,
                    "synthetic backend: unstable suffix length k");
    cmd->add_option("--syn-window-ms", cfg.options.synthetic.agreement_window_ms,
                    "synthetic backend: agreement window in ms (0 = off)");
    cmd->add_option_function<std::string>(
           "--syn-sensitivity",
           [&cfg](const std::string& v) {
             if (v == "none") {
               cfg.options.synthetic.sensitivity = PerturbationSensitivity::kNone;
             } else if (v == "length_only") {
               cfg.options.synthetic.sensitivity = PerturbationSensitivity::kLengthOnly;
             } else {
               cfg.options.synthetic.sensitivity = PerturbationSensitivity::kFullInput;
             }
           },
           "none, length_only or full_input")
        ->check(CLI::IsMember({"none", "length_only", "full_input"}));
    // cascade settings
    cmd->add_option("--nbest", cfg.options.cascade.n_best, "cascade n-best batch size");
    cmd->add_option("--beam", cfg.options.cascade.beam, "CTC beam width");
    cmd->add_option_function<std::string>(
           "--ctc-mode",
           [&cfg](const std::string& v) {
             cfg.options.cascade.mode = v == "rescoring"
                                            ? CascadeMode::kAttentionRescoring
                                            : CascadeMode::kCtcPrefixBeamSearch;
           },
           "prefix_beam or rescoring")
        ->check(CLI::IsMember({"prefix_beam", "rescoring"}));
    cmd->add_option("--ctc-weight", cfg.options.cascade.ctc_weight,
                    "CTC weight for attention rescoring")
        ->check(CLI::Range(0.0, 1.0));
    cmd->add_option("--frame-ms", cfg.options.cascade.frame_ms,
                    "duration of one logits frame in ms");
    cmd->add_option("--scorer-seed", cfg.options.cascade.scorer_seed,
                    "seed for the synthetic rescoring scorer");
  };

  auto* eval = app.add_subcommand("eval", "evaluate a corpus with one policy");
  add_common_eval_flags(eval);
  eval->add_option("--policy", policy_kind, "hold, la or rbi")
      ->check(CLI::IsMember({"hold", "la", "rbi"}));

  auto* sweep_cmd = app.add_subcommand("sweep", "chunk-size x policy trade-off table");
  add_common_eval_flags(sweep_cmd);
  sweep_cmd->add_option("--policies", sweep_policies,
                        "comma list of policies, e.g. hold-0,la-2,rbi");
  sweep_cmd->add_option("--chunk-sweep", chunk_sweep, "comma list of chunk sizes in ms");

  auto* ctc_cmd = app.add_subcommand("ctc-decode", "decode a stored logits file");
  ctc_cmd->add_option("--logits", cfg.logits_path, "logits matrix file")->required();
  ctc_cmd->add_option("--ctc-mode", cfg.ctc_mode, "greedy, prefix_beam or rescoring")
      ->check(CLI::IsMember({"greedy", "prefix_beam", "rescoring"}));
  ctc_cmd->add_option("--beam", cfg.beam, "beam width");
  ctc_cmd->add_option("--nbest", cfg.n_best, "number of candidates");
  ctc_cmd->add_option("--ctc-weight", cfg.ctc_weight, "CTC weight for rescoring")
      ->check(CLI::Range(0.0, 1.0));
  ctc_cmd->add_option("--scorer-seed", cfg.scorer_seed, "synthetic scorer seed");

  auto* metrics_cmd = app.add_subcommand("metrics", "recompute metrics from an eval log");
  metrics_cmd->add_option("--log", cfg.log_path, "utterances.jsonl from eval")->required();
  std::string metrics_detok = "space";
  metrics_cmd->add_option("--detok", metrics_detok, "space or spm")
      ->check(CLI::IsMember({"space", "spm"}));
  metrics_cmd->add_flag("--bleu-smooth", cfg.options.bleu.add_one_smoothing,
                        "add-one BLEU smoothing");
  metrics_cmd->add_flag("--al-ref", cfg.options.al_reference_normalizer,
                        "normalize AL by the reference length");

  auto* lcp_cmd = app.add_subcommand("lcp", "longest common prefix of token sequences");
  lcp_cmd->add_option("sequences", cfg.lcp_sequences,
                      "token sequences, each one quoted argument")
      ->required();

  try {
    app.parse(argc, argv);

    if (eval->parsed() || sweep_cmd->parsed()) {
      cfg.options.mode = mode == "cascade" ? EvalMode::kCascade : EvalMode::kEndToEnd;
      if (backend_kind.empty()) {
        backend_kind = cfg.options.mode == EvalMode::kCascade ? "logits" : "synthetic";
      }
      cfg.options.backend = backend_kind == "logits" ? BackendKind::kLogits
                                                     : BackendKind::kSynthetic;
      cfg.options.detok =
          detok == "spm" ? Detokenizer::kSentencePiece : Detokenizer::kSpaceJoined;
      cfg.options.engine.seed = seed;
      cfg.options.engine.finalize_on_last_chunk = !no_finalize;
      cfg.options.engine.policy =
          build_policy(policy_kind, policy_n, reg_list, word_lcp, cfg.options.mode);
      cfg.options.engine.policy.lcp_detok = cfg.options.detok;
      cfg.options.engine.validate();
      if (sweep_cmd->parsed()) {
        cfg.sweep_policies = split_list(sweep_policies);
        for (const auto& c : split_list(chunk_sweep)) {
          try {
            std::size_t used = 0;
            const int ms = std::stoi(c, &used);
            if (used != c.size()) throw InvalidParam("");
            cfg.chunk_sweep.push_back(ms);
          } catch (const std::exception&) {
            throw InvalidParam("--chunk-sweep: bad chunk size '" + c + "'");
          }
        }
        return run_sweep(cfg);
      }
      return run_eval(cfg);
    }
    if (ctc_cmd->parsed()) return run_ctc_decode(cfg);
    if (metrics_cmd->parsed()) {
      cfg.options.detok = metrics_detok == "spm" ? Detokenizer::kSentencePiece
                                                 : Detokenizer::kSpaceJoined;
      return run_metrics(cfg);
    }
    if (lcp_cmd->parsed()) return run_lcp(cfg);
    std::cerr << app.help();
    return 2;
  } catch (const CLI::CallForHelp& e) {
    std::cout << app.help();
    return 0;
  } catch (const CLI::ParseError& e) {
    std::cerr << json{{"error", "usage"}, {"detail", e.what()}}.dump() << "\n";
    return 2;
  } catch (const InvalidParam& e) {
    std::cerr << json{{"error", "usage"}, {"detail", e.what()}}.dump() << "\n";
    return 2;
  } catch (const Error& e) {
    std::cerr << json{{"error", "runtime"}, {"detail", e.what()}}.dump() << "\n";
    return 1;
  } catch (const std::exception& e) {
    std::cerr << json{{"error", "runtime"}, {"detail", e.what()}}.dump() << "\n";
    return 1;
  }
}

}  // namespace simulpolicy::cli
