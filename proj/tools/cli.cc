// Copyright 2026 The CID Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//      http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#include "cli.h"

#include <cmath>
#include <cstdlib>
#include <fstream>
#include <functional>
#include <iomanip>
#include <memory>
#include <optional>
#include <sstream>

#include "CLI11.hpp"
#include "cid/bias_audit.h"
#include "cid/decode.h"
#include "cid/distribution.h"
#include "cid/error.h"
#include "cid/lambda_star.h"
#include "cid/perturbation.h"
#include "cid/remote_backend.h"
#include "cid/similarity.h"
#include "cid/table_model.h"
#include "cid/text_io.h"

namespace cid::cli {
namespace {

// Flags > config file > defaults.
struct RunConfig {
  std::string backend;
  std::string model;
  std::optional<int> top_n;
  double lambda = 0.0;
  std::string grid;
  std::string lambdas;
  double tau = kDefaultTau;
  int top_k = 50;
  int max_new_tokens = 16;
  bool ignore_eos = false;
  std::uint64_t seed = 0;
  bool json = false;
  int jobs = 1;
  std::string labels;
  std::string out;
  std::string summary;
  std::string curve;
  std::string fractions;
  std::string similarity = "token_overlap";
  std::string embedding_model;
  std::string prefix_mode = "original";
  std::string group_a = "US Male";
  std::string group_b = "Egypt Male";
  std::string groups;
  std::string template_text = kTechInterviewTemplate;
  bool fold = false;
  int fold_threshold = 3;
  std::string tables;
  std::string type;
  std::string tallies;
  std::string pairs;

  DecodeLimits limits() const { return DecodeLimits{max_new_tokens, !ignore_eos}; }
};

// Batch ran but some items failed.
class PartialFailure : public Error {
 public:
  using Error::Error;
};

std::shared_ptr<const Backend> MakeBackend(const RunConfig& config) {
  std::string spec = config.backend;
  if (spec.empty()) {
    if (const char* env = std::getenv("CID_REMOTE_URL"); env != nullptr && *env != '\0') {
      spec = std::string("remote:") + env;
    }
  }
  if (spec.rfind("table:", 0) == 0) {
    return std::make_shared<TableModel>(TableModel::Load(spec.substr(6)));
  }
  if (spec.rfind("remote:", 0) == 0) {
    RemoteOptions options;
    options.base_url = spec.substr(7);
    options.model_id = config.model;
    options.top_n = config.top_n;
    options.max_in_flight = std::max(4, config.jobs);
    return std::make_shared<RemoteBackend>(options);
  }
  if (spec.empty()) {
    throw InvalidInputError("no backend selected: pass --backend table:PATH | remote:URL "
                            "or set CID_REMOTE_URL");
  }
  throw InvalidInputError("unknown backend '" + spec + "'");
}

// Runs `write` against --out when given, otherwise against `out`.
void Emit(const std::string& path, std::ostream& out,
          const std::function<void(std::ostream&)>& write) {
  if (path.empty()) {
    write(out);
    return;
  }
  std::ofstream file(path, std::ios::binary);
  if (!file) throw InvalidInputError("cannot write " + path);
  write(file);
}

std::vector<double> ParseLambdas(const std::string& text, std::vector<double> fallback) {
  if (text.empty()) return fallback;
  return parse_double_list(text);
}

void PrintTrace(std::ostream& out, const Backend& backend, const DecodeResult& result) {
  out << "  step  token                 p          p'         delta      p~\n";
  for (const auto& t : result.trace) {
    const TokenId id = t.chosen;
    std::string piece = backend.detokenize(std::span<const TokenId>(&id, 1));
    if (id == backend.descriptor().eos_token) piece = "<eos>";
    std::ostringstream quoted;
    quoted << std::quoted(piece);
    out << "  " << std::setw(4) << t.step_index << "  " << std::left << std::setw(20)
        << quoted.str() << std::right << std::fixed << std::setprecision(6) << "  "
        << std::setw(9) << t.p_chosen << "  " << std::setw(9) << t.p_contrast_chosen << "  "
        << std::setw(9) << t.delta_chosen << "  " << std::setw(9) << t.p_tilde_chosen << '\n';
    out.unsetf(std::ios::fixed);
  }
}

int CmdGreedy(const RunConfig& config, const std::string& x, std::ostream& out) {
  const auto backend = MakeBackend(config);
  const DecodeResult result = greedy_decode(*backend, x, config.limits(), config.top_k);
  Emit(config.out, out, [&](std::ostream& os) {
    if (config.json) {
      os << nlohmann::json{{"input", x}, {"top_k", config.top_k}, {"result", to_json(result)}}
                .dump(2)
         << '\n';
      return;
    }
    os << "x: " << x << '\n';
    os << "greedy: " << result.generated_text << "  [stop=" << to_string(result.stop_reason)
       << "]\n";
    PrintTrace(os, *backend, result);
  });
  return kExitOk;
}

int CmdContrast(const RunConfig& config, const std::string& x, const std::string& x_contrast,
                std::ostream& out) {
  const auto backend = MakeBackend(config);
  const CidParams params{config.lambda, config.top_k};
  auto [forward, backward] = contrast_pair(backend, x, x_contrast, params, config.limits());
  Emit(config.out, out, [&](std::ostream& os) {
    if (config.json) {
      os << nlohmann::json{{"input", x},
                           {"contrast", x_contrast},
                           {"lambda", config.lambda},
                           {"top_k", config.top_k},
                           {"forward", to_json(forward)},
                           {"backward", to_json(backward)}}
                .dump(2)
         << '\n';
      return;
    }
    os << "x:  " << x << '\n' << "x': " << x_contrast << '\n';
    os << "lambda=" << format_double(config.lambda) << " top_k=" << config.top_k << '\n';
    os << "CID(x; x'): " << forward.generated_text
       << "  [stop=" << to_string(forward.stop_reason) << "]\n";
    PrintTrace(os, *backend, forward);
    os << "CID(x'; x): " << backward.generated_text
       << "  [stop=" << to_string(backward.stop_reason) << "]\n";
    PrintTrace(os, *backend, backward);
  });
  return kExitOk;
}

std::string SiblingPath(const std::string& out, const std::string& suffix) {
  std::filesystem::path p(out);
  return (p.parent_path() / (p.stem().string() + suffix)).string();
}

int CmdLambdaStar(const RunConfig& config, std::ostream& out, std::ostream& err) {
  if (config.pairs.empty()) throw InvalidInputError("lambdastar needs --pairs PATH");
  std::ifstream in(config.pairs);
  if (!in) throw InvalidInputError("cannot open " + config.pairs);
  const auto pairs = read_pairs_jsonl(in);
  if (pairs.empty()) throw InvalidInputError("pairs file " + config.pairs + " has no pairs");

  const auto grid = ParseLambdas(config.grid, default_lambda_grid());
  ValidateGrid(grid);
  SweepOptions options;
  options.top_k = config.top_k;
  options.limits = config.limits();
  if (config.prefix_mode == "original") {
    options.prefix = PrefixMode::kOriginalForBoth;
  } else if (config.prefix_mode == "own") {
    options.prefix = PrefixMode::kOwnInput;
  } else {
    throw InvalidInputError("--prefix-mode must be original or own");
  }

  const auto backend = MakeBackend(config);
  const auto provider = MakeSimilarityProvider(config.similarity, config.embedding_model);
  const auto entries =
      run_lambda_star_batch(pairs, grid, config.tau, backend, *provider, options, config.jobs);

  std::vector<LambdaStarResult> results;
  bool any_backend_failure = false;
  for (std::size_t i = 0; i < entries.size(); ++i) {
    if (entries[i].result) {
      results.push_back(*entries[i].result);
    } else {
      err << "pair " << i << " failed: " << entries[i].error << '\n';
      any_backend_failure = any_backend_failure || entries[i].backend_failure;
    }
  }
  if (results.empty()) {
    if (any_backend_failure) throw BackendError("every pair failed", 0, false);
    throw Error("every pair failed");
  }

  const auto summary = aggregate_by_type(results);
  const auto curve = mean_similarity_curve(results);
  const std::string summary_path =
      !config.summary.empty() || config.out.empty() ? config.summary
                                                    : SiblingPath(config.out, "_summary.csv");
  const std::string curve_path =
      !config.curve.empty() || config.out.empty() ? config.curve
                                                  : SiblingPath(config.out, "_curve.csv");

  Emit(config.out, out, [&](std::ostream& os) { write_results_jsonl(os, results); });
  Emit(summary_path, out, [&](std::ostream& os) { write_summary_csv(os, summary); });
  Emit(curve_path, out, [&](std::ostream& os) { write_curve_csv(os, grid, curve); });

  if (results.size() != entries.size()) {
    throw PartialFailure(std::to_string(entries.size() - results.size()) + " of " +
                         std::to_string(entries.size()) + " pairs failed");
  }
  return kExitOk;
}

int CmdAudit(const RunConfig& config, std::ostream& out, std::ostream& err) {
  std::vector<NameGroup> groups = builtin_name_groups();
  if (!config.groups.empty()) {
    auto custom = load_name_groups(config.groups);
    groups.insert(groups.begin(), custom.begin(), custom.end());
  }
  const NameGroup& a = find_group(groups, config.group_a);
  const NameGroup& b = find_group(groups, config.group_b);
  const Template tmpl(config.template_text);
  const auto lambdas = ParseLambdas(config.lambdas, {0, 10, 50});

  AuditOptions options;
  options.top_k = config.top_k;
  options.limits = config.limits();
  options.jobs = config.jobs;
  const auto backend = MakeBackend(config);
  const auto tallies = run_pairwise_audit(a, b, tmpl, lambdas, backend, options);

  // Check labels before writing anything so a missing label leaves no
  // partial outputs behind.
  std::optional<BiasLabels> labels;
  std::ostringstream fractions;
  if (!config.labels.empty()) {
    labels = BiasLabels::Load(config.labels);
    write_fraction_csv(fractions, tallies, *labels);
  }

  const RenderOptions render{config.fold, config.fold_threshold};
  out << render_tally_table(tallies, render);
  if (!config.out.empty()) {
    Emit(config.out, out, [&](std::ostream& os) { write_tally_csv(os, tallies); });
  }
  if (labels) {
    Emit(config.fractions, out, [&](std::ostream& os) { os << fractions.str(); });
  }

  int skipped = 0;
  for (const auto& t : tallies) {
    skipped += t.skipped;
    for (const auto& reason : t.skip_reasons) err << "skipped: " << reason << '\n';
  }
  if (skipped > 0) throw PartialFailure(std::to_string(skipped) + " pair decodes skipped");
  return kExitOk;
}

int CmdRender(const RunConfig& config, std::ostream& out) {
  if (config.tallies.empty()) throw InvalidInputError("render needs --tallies PATH");
  std::ifstream in(config.tallies);
  if (!in) throw InvalidInputError("cannot open " + config.tallies);
  const auto tallies = read_tally_csv(in);
  const RenderOptions render{config.fold, config.fold_threshold};
  Emit(config.out, out, [&](std::ostream& os) { os << render_tally_table(tallies, render); });
  if (!config.labels.empty()) {
    const auto labels = BiasLabels::Load(config.labels);
    Emit(config.fractions, out, [&](std::ostream& os) { write_fraction_csv(os, tallies, labels); });
  }
  return kExitOk;
}

int CmdAlphaCurve(const RunConfig& config, std::ostream& out) {
  const auto lambdas = ParseLambdas(config.lambdas, {0, 1, 2, 5, 10});
  for (const double l : lambdas) CidParams{l, 1}.Validate();
  Emit(config.out, out, [&](std::ostream& os) {
    write_csv_row(os, {"lambda", "v", "alpha"});
    for (const double l : lambdas) {
      for (int i = 0; i <= 200; ++i) {
        const double v = static_cast<double>(i - 100) / 100.0;
        write_csv_row(os, {format_double(l), format_double(v), format_double(alpha(v, l))});
      }
    }
  });
  return kExitOk;
}

int CmdPerturb(const RunConfig& config, const std::string& text, std::ostream& out) {
  const PerturbationTables tables = config.tables.empty()
                                        ? PerturbationTables::Builtin()
                                        : PerturbationTables::Load(config.tables);
  std::vector<PerturbationType> types;
  if (config.type.empty() || config.type == "all") {
    types.assign(all_perturbation_types().begin(), all_perturbation_types().end());
  } else {
    types.push_back(ParsePerturbationType(config.type));
  }
  Emit(config.out, out, [&](std::ostream& os) {
    for (const auto type : types) {
      try {
        write_pair_jsonl(os, perturb(text, type, tables, config.seed));
      } catch (const NotApplicableError&) {
        if (types.size() == 1) throw;
      }
    }
  });
  return kExitOk;
}

bool CausedByBackend(const std::exception_ptr& error) {
  if (!error) return false;
  try {
    std::rethrow_exception(error);
  } catch (const BackendError&) {
    return true;
  } catch (const DecodeError& e) {
    return CausedByBackend(e.cause());
  } catch (const SweepError& e) {
    return CausedByBackend(e.cause());
  } catch (...) {
    return false;
  }
}

}  // namespace

int Run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  RunConfig config;
  CLI::App app{"Contrastive input decoding: continuations likely under one input and "
               "unlikely under a contrastive one"};
  app.name("cid");
  app.set_config("--config", "", "Key-value config file (command-line flags take precedence)");
  app.require_subcommand(1);

  app.add_option("--backend", config.backend, "table:PATH or remote:URL");
  app.add_option("--model", config.model, "Model id on the remote server");
  app.add_option("--top-n", config.top_n, "Request sparse top-N logprobs from a remote backend");
  app.add_option("--lambda", config.lambda, "Contrast strength")->check(CLI::NonNegativeNumber);
  app.add_option("--grid", config.grid, "Lambda sweep grid, e.g. 0,1,2,5,10,20,50,100");
  app.add_option("--lambdas", config.lambdas, "Lambda list for audit / alpha-curve");
  app.add_option("--tau", config.tau, "Similarity threshold for lambda*");
  app.add_option("--top-k", config.top_k, "Top-K truncation width")->check(CLI::PositiveNumber);
  app.add_option("--max-new-tokens", config.max_new_tokens, "Generation length limit")
      ->check(CLI::PositiveNumber);
  app.add_flag("--ignore-eos", config.ignore_eos, "Keep generating past EOS");
  app.add_option("--seed", config.seed, "Seed for perturbation site selection");
  app.add_flag("--json", config.json, "Machine-readable output");
  app.add_option("--jobs", config.jobs, "Parallel workers")->check(CLI::PositiveNumber);
  app.add_option("--labels", config.labels, "Bias labels JSON");
  app.add_option("--out", config.out, "Primary output file (default stdout)");
  app.add_option("--summary", config.summary, "lambdastar: per-type summary CSV");
  app.add_option("--curve", config.curve, "lambdastar: mean similarity curve CSV");
  app.add_option("--fractions", config.fractions, "audit: biased-fraction CSV");
  app.add_option("--similarity", config.similarity, "token_overlap or embedding:URL");
  app.add_option("--embedding-model", config.embedding_model, "Model id for embedding:URL");
  app.add_option("--prefix-mode", config.prefix_mode,
                 "original: prefix x on both continuations; own: each input's own prefix");
  app.add_option("--group-a", config.group_a, "audit: label of group A");
  app.add_option("--group-b", config.group_b, "audit: label of group B");
  app.add_option("--groups", config.groups, "audit: extra name groups JSON");
  app.add_option("--template", config.template_text, "audit: prompt template with <name>");
  app.add_flag("--fold", config.fold, "Fold rare continuations into 'other'");
  app.add_option("--fold-threshold", config.fold_threshold, "Count below which to fold");
  app.add_option("--tables", config.tables, "perturb: perturbation tables JSON");
  app.add_option("--type", config.type, "perturb: perturbation type or 'all'");
  app.add_option("--tallies", config.tallies, "render: saved tally CSV");
  app.add_option("--pairs", config.pairs, "lambdastar: pairs JSON-lines file");

  std::string x, x_contrast, text;
  auto* greedy = app.add_subcommand("greedy", "Top-K greedy continuation of X");
  greedy->add_option("x", x, "Input text")->required();
  auto* contrast = app.add_subcommand("contrast", "CID(X; X', lambda) and CID(X'; X, lambda)");
  contrast->add_option("x", x, "Input text")->required();
  contrast->add_option("x_contrast", x_contrast, "Contrastive input text")->required();
  auto* lambdastar = app.add_subcommand("lambdastar", "Lambda* for every pair in --pairs");
  auto* audit = app.add_subcommand("audit", "Pairwise name-group bias audit");
  auto* render = app.add_subcommand("render", "Re-render audit tables from a tally CSV");
  auto* alpha_curve = app.add_subcommand("alpha-curve", "Scaling function samples as CSV");
  auto* perturb_cmd = app.add_subcommand("perturb", "Perturb TEXT, emit pairs as JSON lines");
  perturb_cmd->add_option("text", text, "Text to perturb")->required();
  for (auto* sub : app.get_subcommands({})) sub->fallthrough();

  try {
    std::vector<std::string> reversed(args.rbegin(), args.rend());
    app.parse(reversed);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e, out, err);
    return code == 0 ? kExitOk : kExitUsage;
  }

  try {
    if (greedy->parsed()) return CmdGreedy(config, x, out);
    if (contrast->parsed()) return CmdContrast(config, x, x_contrast, out);
    if (lambdastar->parsed()) return CmdLambdaStar(config, out, err);
    if (audit->parsed()) return CmdAudit(config, out, err);
    if (render->parsed()) return CmdRender(config, out);
    if (alpha_curve->parsed()) return CmdAlphaCurve(config, out);
    if (perturb_cmd->parsed()) return CmdPerturb(config, text, out);
  } catch (const PartialFailure& e) {
    err << "cid: " << e.what() << '\n';
    return kExitPartial;
  } catch (const std::exception& e) {
    err << "cid: " << e.what() << '\n';
    return CausedByBackend(std::current_exception()) ? kExitBackend : kExitUsage;
  }
  return kExitUsage;
}

}  // namespace cid::cli
