#pragma once

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <json.hpp>

#include "prosim/prosim.hpp"

namespace prosim::cli {

namespace fs = std::filesystem;

enum ExitCode : int { kOk = 0, kUsage = 1, kBackend = 2, kData = 3 };

inline int exit_code_for(const Error& e) {
  if (e.is_backend_failure()) return kBackend;
  switch (e.kind()) {
    case ErrorKind::InvalidSpec:
    case ErrorKind::InvalidParameters:
    case ErrorKind::GridMismatch:
      return kUsage;
    default:
      return kData;
  }
}

/// Flags shared by every command. Unset optionals leave the config untouched.
struct CommonOptions {
  std::string config_path;
  std::optional<Seed> seed;
  std::optional<std::string> backend;
  std::string out_dir = "out";
  std::optional<std::size_t> jobs;
  bool verbose = false;
  std::optional<std::string> inequity;
  std::optional<std::string> scenarios_file;
  std::optional<std::string> policies_file;
};

struct Context {
  AppConfig config;
  fs::path out;
  std::ostream& out_stream;
  std::ostream& err_stream;
};

/// Config file (if any) plus flag overrides, fully validated. Throws an
/// Error with kind InvalidSpec for anything wrong with the configuration.
inline AppConfig resolve_config(const CommonOptions& opts) {
  try {
    AppConfig c = opts.config_path.empty() ? AppConfig{} : load_config(opts.config_path);
    if (opts.seed) c.seed = *opts.seed;
    if (opts.backend) c.backend = parse_enum<BackendKind>(*opts.backend, "backend");
    if (opts.jobs) c.jobs = *opts.jobs;
    if (opts.verbose) c.llm.verbose = true;
    if (opts.inequity) {
      c.inequity.kind = *opts.inequity == "none"
                            ? std::nullopt
                            : std::optional(parse_enum<InequityKind>(*opts.inequity, "inequity"));
    }
    if (opts.scenarios_file) c.scenarios_file = *opts.scenarios_file;
    if (opts.policies_file) c.policies_file = *opts.policies_file;
    c.validate();
    return c;
  } catch (const Error& e) {
    throw Error(ErrorKind::InvalidSpec, "configuration: " + e.message());
  } catch (const nlohmann::json::exception& e) {
    throw Error(ErrorKind::InvalidSpec, std::string("configuration: ") + e.what());
  }
}

inline ScenarioCatalog load_scenarios(const AppConfig& c) {
  if (!c.scenarios_file) return scenario_catalog();
  return scenario_catalog_from_json(parse_json_text(read_text_file(*c.scenarios_file), *c.scenarios_file));
}

inline PolicyCatalog load_policies(const AppConfig& c) {
  if (!c.policies_file) return policy_catalog();
  return policy_catalog_from_json(parse_json_text(read_text_file(*c.policies_file), *c.policies_file));
}

inline HumanReference load_human_reference(const AppConfig& c) {
  if (!c.human_reference_file) return HumanReference{};
  return human_reference_from_json(
      parse_json_text(read_text_file(*c.human_reference_file), *c.human_reference_file));
}

inline std::unique_ptr<DecisionBackend> make_backend(const AppConfig& c) {
  if (c.backend == BackendKind::Synthetic) return std::make_unique<SyntheticBackend>(c.synthetic_params());
  const char* key = std::getenv(c.llm.api_key_env.c_str());
  require(key != nullptr && *key != '\0', ErrorKind::MissingCredential,
          "environment variable " + c.llm.api_key_env + " is not set");
  return std::make_unique<LlmBackend>(c.llm);
}

inline void write_manifest(const Context& ctx, const std::string& command) {
  auto name = command;
  for (auto& ch : name) ch = ch == ' ' ? '-' : ch;
  write_file_atomic(ctx.out / ("manifest." + name + ".json"),
                    run_manifest(ctx.config, command, false).dump(2) + "\n");
}

template <class Fn>
void write_output(const fs::path& path, Fn&& fn) {
  std::ostringstream os;
  fn(os);
  write_file_atomic(path, os.str());
}

inline std::vector<AgentProfile> obtain_population(const Context& ctx,
                                                   const std::optional<std::string>& path) {
  auto population = path ? load_population(*path) : sample_population(ctx.config.population_spec());
  write_output(ctx.out / "population.jsonl", [&](std::ostream& os) { write_population(os, population); });
  return population;
}

inline void require_file(const fs::path& path) {
  require(fs::exists(path), ErrorKind::DataError, "missing input file " + path.string());
}

// Commands --------------------------------------------------------------------

inline void cmd_populate(const Context& ctx) {
  const auto population = sample_population(ctx.config.population_spec());
  write_output(ctx.out / "population.jsonl", [&](std::ostream& os) { write_population(os, population); });
  write_manifest(ctx, "populate");
  ctx.out_stream << "wrote " << population.size() << " agents to "
                 << (ctx.out / "population.jsonl").string() << "\n";
}

inline void cmd_baseline(const Context& ctx, const std::optional<std::string>& population_path) {
  const auto scenarios = load_scenarios(ctx.config);
  const auto backend = make_backend(ctx.config);
  const auto population = obtain_population(ctx, population_path);
  const auto table = run_baseline(population, scenarios, *backend, {ctx.config.jobs, {}});
  write_output(ctx.out / "baseline.csv", [&](std::ostream& os) { write_baseline_csv(os, table); });
  write_manifest(ctx, "simulate baseline");
  ctx.out_stream << "wrote " << table.size() * kScenarioCount << " baseline responses\n";
}

inline void cmd_policy(const Context& ctx, const std::optional<std::string>& population_path) {
  const auto scenarios = load_scenarios(ctx.config);
  const auto policies = load_policies(ctx.config);
  const auto backend = make_backend(ctx.config);
  const auto population = obtain_population(ctx, population_path);
  const RunOptions options{ctx.config.jobs, {}};
  const auto baseline = run_baseline(population, scenarios, *backend, options);
  const auto table = run_policy_study(population, scenarios, policies, *backend, options);
  write_output(ctx.out / "baseline.csv", [&](std::ostream& os) { write_baseline_csv(os, baseline); });
  write_output(ctx.out / "policy.csv", [&](std::ostream& os) { write_policy_csv(os, table); });
  write_manifest(ctx, "simulate policy");
  ctx.out_stream << "wrote " << table.policies.size() << " policy tables\n";
}

inline void cmd_dynamics(const Context& ctx, const std::optional<std::string>& population_path,
                         const std::optional<std::string>& resume) {
  const auto& config = ctx.config;
  const auto sim = config.simulation();
  const auto scenarios = load_scenarios(config);
  const auto backend = make_backend(config);
  const RunOptions options{config.jobs, {}};
  const auto resume_hint = [&](const fs::path& trace) {
    return "; resume with: prosim simulate dynamics --resume " + trace.string() +
           " (same --config/--seed/--backend flags)";
  };

  if (resume) {
    auto loaded = load_trace(*resume);
    const Json expected = trace_manifest(config);
    require(loaded.header.at("manifest") == expected, ErrorKind::InvalidSpec,
            "trace " + *resume + " was produced by a different configuration");
    const auto population = population_path ? load_population(*population_path)
                                            : sample_population(config.population_spec());
    require(population.size() == loaded.trace.graph.node_count(), ErrorKind::DataError,
            "population size does not match the trace");
    // Rewrite header and complete records, dropping any torn tail.
    {
      std::ostringstream os;
      os << loaded.header.dump() << '\n';
      for (const auto& rec : loaded.trace.records) os << to_json(rec).dump() << '\n';
      write_file_atomic(*resume, os.str());
    }
    const int done = static_cast<int>(loaded.trace.records.size());
    std::ofstream trace_out(*resume, std::ios::app);
    const DynamicsWorld world{population,       scenarios,      loaded.trace.graph,
                              loaded.trace.inequity, sim.unfairness, sim.activation_fraction,
                              sim.seeds().activation, *backend};
    try {
      run_steps(world, final_states(loaded.trace), done + 1, sim.iterations, options,
                [&](const IterationRecord& rec) { trace_out << to_json(rec).dump() << '\n' << std::flush; });
    } catch (const Error& e) {
      throw Error(e.kind(), e.message() + resume_hint(*resume));
    }
    ctx.out_stream << "resumed " << *resume << " from t=" << done + 1 << " to t=" << sim.iterations
                   << "\n";
    return;
  }

  const auto population = obtain_population(ctx, population_path);
  const fs::path trace_path = ctx.out / "dynamics_trace.jsonl";
  std::ofstream trace_out(trace_path, std::ios::binary | std::ios::trunc);
  require(static_cast<bool>(trace_out), ErrorKind::DataError, "cannot write " + trace_path.string());
  DynamicsTrace trace;
  try {
    trace = run_dynamics(
        sim, population, scenarios, *backend, options,
        [&](const DynamicsTrace& t) {
          trace_out << trace_header(t, config).dump() << '\n' << std::flush;
          write_output(ctx.out / "graph.edgelist",
                       [&](std::ostream& os) { os << to_edge_list(t.graph); });
        },
        [&](const IterationRecord& rec) { trace_out << to_json(rec).dump() << '\n' << std::flush; });
  } catch (const Error& e) {
    throw Error(e.kind(), e.message() + resume_hint(trace_path));
  }
  write_manifest(ctx, "simulate dynamics");
  ctx.out_stream << "wrote " << trace.records.size() << " iterations to " << trace_path.string()
                 << "\n";
}

inline void cmd_tpp(const Context& ctx, const std::optional<std::string>& population_path) {
  const auto& config = ctx.config;
  const auto backend = make_backend(config);
  const auto population = obtain_population(ctx, population_path);
  std::vector<std::vector<TrialOutcome>> sessions(population.size());
  // Agents run concurrently; trials within a session run in order.
  parallel_for(population.size(), config.jobs, [&](std::size_t i) {
    const auto trials =
        generate_trials(config.tpp, derive_seed(config.seeds().shuffle, static_cast<std::uint64_t>(i)));
    sessions[i] = run_tpp_session(*backend, population[i], trials, 1);
  });
  std::vector<TrialOutcome> outcomes;
  for (auto& s : sessions) outcomes.insert(outcomes.end(), s.begin(), s.end());
  write_output(ctx.out / "tpp_outcomes.csv",
               [&](std::ostream& os) { write_tpp_outcomes_csv(os, outcomes); });
  write_output(ctx.out / "tpp_rates.csv",
               [&](std::ostream& os) { write_tpp_rates_csv(os, punishment_rate_matrix(outcomes)); });
  write_manifest(ctx, "tpp");
  ctx.out_stream << "wrote " << outcomes.size() << " trial outcomes\n";
}

inline void cmd_analyze(const Context& ctx, const fs::path& in_dir) {
  Json summary = {{"manifest", run_manifest(ctx.config, "analyze", true)}};
  bool any = false;
  std::optional<std::vector<IntentionRow>> baseline;

  if (fs::exists(in_dir / "baseline.csv")) {
    any = true;
    std::ifstream in(in_dir / "baseline.csv");
    baseline = read_baseline_csv(in);
    const auto means = mean_intentions(*baseline);
    const auto human = load_human_reference(ctx.config);
    write_output(ctx.out / "scenario_means.csv", [&](std::ostream& os) {
      CsvWriter csv(os, {"scenario", "model_mean", "human_mean"});
      for (std::size_t s = 0; s < kScenarioCount; ++s)
        csv.row(enum_name(enum_at<ScenarioKind>(s)), means.per_scenario[s], human.per_scenario[s]);
    });
    Json alignment = {{"model_overall", means.overall}, {"human_overall", human.overall}};
    try {
      const auto c = scenario_alignment(means, human);
      alignment["r"] = c.r;
      alignment["p"] = c.p;
      alignment["n"] = c.n;
    } catch (const Error& e) {
      alignment["error"] = e.message();
    }
    summary["baseline"] = alignment;
  }

  if (fs::exists(in_dir / "policy.csv")) {
    any = true;
    require(baseline.has_value(), ErrorKind::DataError,
            "policy.csv needs baseline.csv in " + in_dir.string());
    std::ifstream in(in_dir / "policy.csv");
    const auto shifts = policy_shifts(*baseline, read_policy_csv(in));
    Json arr = Json::array();
    write_output(ctx.out / "policy_shifts.csv", [&](std::ostream& os) {
      CsvWriter csv(os, {"policy", "scenario", "relative_change_percent"});
      for (const auto& s : shifts) {
        for (std::size_t k = 0; k < kScenarioCount; ++k)
          csv.row(enum_name(s.policy), enum_name(enum_at<ScenarioKind>(k)), s.percent[k]);
        csv.row(enum_name(s.policy), "overall", s.aggregate);
        arr.push_back({{"policy", std::string(enum_name(s.policy))},
                       {"aggregate_percent", s.aggregate},
                       {"positive_shifts", s.positive_shifts}});
      }
    });
    summary["policy"] = arr;
  }

  if (fs::exists(in_dir / "dynamics_trace.jsonl")) {
    any = true;
    const auto loaded = load_trace(in_dir / "dynamics_trace.jsonl");
    const auto& records = loaded.trace.records;
    require(!records.empty(), ErrorKind::DataError, "dynamics trace has no iterations");
    const auto curve = contagion_curve(records);
    write_output(ctx.out / "contagion.csv", [&](std::ostream& os) {
      CsvWriter csv(os, {"t", "exposed_fraction", "mean_tendency", "mean_unfairness"});
      for (std::size_t k = 0; k < curve.t.size(); ++k)
        csv.row(curve.t[k], curve.exposed_fraction[k], curve.mean_tendency[k], curve.mean_unfairness[k]);
    });
    write_output(ctx.out / "contagion_long.csv", [&](std::ostream& os) {
      CsvWriter csv(os, {"t", "series", "value"});
      for (std::size_t k = 0; k < curve.t.size(); ++k) {
        csv.row(curve.t[k], "exposed_fraction", curve.exposed_fraction[k]);
        csv.row(curve.t[k], "mean_tendency", curve.mean_tendency[k]);
        csv.row(curve.t[k], "mean_unfairness", curve.mean_unfairness[k]);
      }
    });
    Json dyn = {{"iterations", records.size()},
                {"truncated", loaded.truncated},
                {"relative_change_percent", dynamics_relative_change(loaded.trace)},
                {"final_exposed_fraction", curve.exposed_fraction.back()}};
    if (records.size() >= 3) {
      const auto corr = unfairness_correlation(records);
      write_output(ctx.out / "unfairness_correlation.csv", [&](std::ostream& os) {
        CsvWriter csv(os, {"agent_id", "r"});
        for (std::size_t i = 0; i < corr.per_agent.size(); ++i) csv.row(i, corr.per_agent[i]);
      });
      dyn["pooled_r"] = corr.pooled.r;
      dyn["pooled_p"] = corr.pooled.p;
      dyn["excluded_agents"] = corr.excluded;
    }
    summary["dynamics"] = dyn;
  }

  if (fs::exists(in_dir / "tpp_outcomes.csv")) {
    any = true;
    std::ifstream in(in_dir / "tpp_outcomes.csv");
    const auto rows = read_csv(in);
    require(rows.size() > 1, ErrorKind::DataError, "tpp_outcomes.csv has no rows");
    RateMatrix rates;
    for (std::size_t r = 1; r < rows.size(); ++r) {
      require(rows[r].size() == 8, ErrorKind::DataError, "tpp_outcomes.csv row with wrong field count");
      auto& cell = rates[{static_cast<int>(detail::parse_index(rows[r][2], "x")),
                          static_cast<int>(detail::parse_index(rows[r][3], "y"))}];
      ++cell.total;
      if (parse_enum<Choice>(rows[r][4], "choice") == Choice::Punish) ++cell.punished;
    }
    write_output(ctx.out / "tpp_rates.csv", [&](std::ostream& os) { write_tpp_rates_csv(os, rates); });
    summary["tpp_cells"] = rates.size();
  }

  require(any, ErrorKind::DataError,
          "no analyzable inputs (baseline.csv, policy.csv, dynamics_trace.jsonl, tpp_outcomes.csv) in " +
              in_dir.string());
  write_file_atomic(ctx.out / "analysis.json", summary.dump(2) + "\n");
  ctx.out_stream << summary.dump(2) << "\n";
}

inline void cmd_shap(const Context& ctx, const fs::path& in_dir) {
  require_file(in_dir / "population.jsonl");
  require_file(in_dir / "baseline.csv");
  const auto population = load_population(in_dir / "population.jsonl");
  std::ifstream in(in_dir / "baseline.csv");
  const auto table = read_baseline_csv(in);
  const TraitAttributor attributor(attribution_dataset(population, table));
  std::vector<TraitAttribution> rows;
  for (const auto& agent : population) rows.push_back(attributor.attribute(agent.traits, agent.id));
  write_output(ctx.out / "shap.jsonl", [&](std::ostream& os) {
    for (const auto& a : rows) os << to_json(a).dump() << '\n';
  });
  write_output(ctx.out / "shap.csv", [&](std::ostream& os) { write_shap_csv(os, rows); });
  write_manifest(ctx, "shap");
  ctx.out_stream << "wrote " << rows.size() << " attributions\n";
}

// Dispatch ---------------------------------------------------------------------

inline void add_common(CLI::App& app, CommonOptions& opts) {
  app.add_option("--config", opts.config_path, "JSON configuration file")->check(CLI::ExistingFile);
  app.add_option("--seed", opts.seed, "master seed (overrides the config)");
  app.add_option("--backend", opts.backend, "decision backend")
      ->check(CLI::IsMember({"synthetic", "llm"}));
  app.add_option("--out", opts.out_dir, "output directory");
  app.add_option("--jobs", opts.jobs, "maximum concurrent backend calls")->check(CLI::PositiveNumber);
  app.add_flag("--verbose", opts.verbose, "log progress and backend traffic (keys redacted)");
  app.add_option("--scenarios", opts.scenarios_file, "scenario catalog JSON");
  app.add_option("--policies", opts.policies_file, "policy catalog JSON");
}

/// Runs the command line; returns the process exit code.
inline int run_cli(const std::vector<std::string>& args, std::ostream& out = std::cout,
                   std::ostream& err = std::cerr) {
  CLI::App app{"Agent-based simulation of prosocial intentions under policy and inequity", "prosim"};
  app.require_subcommand(1);
  app.fallthrough();
  CommonOptions opts;
  add_common(app, opts);

  std::optional<std::string> population_path;
  std::optional<std::string> resume_path;
  std::string in_dir;

  auto* populate = app.add_subcommand("populate", "sample agent profiles");
  auto* simulate = app.add_subcommand("simulate", "run a simulation experiment");
  simulate->require_subcommand(1);
  auto* baseline = simulate->add_subcommand("baseline", "neutral scenario intentions");
  auto* policy = simulate->add_subcommand("policy", "intentions under each policy framing");
  auto* dynamics = simulate->add_subcommand("dynamics", "network dynamics under inequity");
  auto* tpp = app.add_subcommand("tpp", "third-party punishment game");
  auto* analyze = app.add_subcommand("analyze", "statistics from stored outputs");
  auto* shap = app.add_subcommand("shap", "trait attribution of baseline tendency");
  for (auto* sub : {baseline, policy, dynamics, tpp}) {
    sub->add_option("--population", population_path, "population JSONL (default: sample from config)")
        ->check(CLI::ExistingFile);
  }
  dynamics->add_option("--resume", resume_path, "continue an interrupted trace")->check(CLI::ExistingFile);
  dynamics->add_option("--inequity", opts.inequity, "inequity kind")
      ->check(CLI::IsMember({"reward", "burden", "none"}));
  for (auto* sub : {analyze, shap}) {
    sub->add_option("--in", in_dir, "directory holding inputs (default: --out)");
  }
  (void)populate;

  std::vector<std::string> reversed(args.rbegin(), args.rend());
  try {
    app.parse(reversed);
  } catch (const CLI::CallForHelp&) {
    out << app.help();
    return kOk;
  } catch (const CLI::CallForAllHelp&) {
    out << app.help("", CLI::AppFormatMode::All);
    return kOk;
  } catch (const CLI::ParseError& e) {
    err << "prosim: " << e.what() << "\n" << "run 'prosim --help' for usage\n";
    return kUsage;
  }

  if (opts.verbose) set_log_level(LogLevel::Info);
  try {
    Context ctx{resolve_config(opts), fs::path(opts.out_dir), out, err};
    fs::create_directories(ctx.out);
    const fs::path inputs = in_dir.empty() ? ctx.out : fs::path(in_dir);
    if (populate->parsed()) cmd_populate(ctx);
    else if (baseline->parsed()) cmd_baseline(ctx, population_path);
    else if (policy->parsed()) cmd_policy(ctx, population_path);
    else if (dynamics->parsed()) cmd_dynamics(ctx, population_path, resume_path);
    else if (tpp->parsed()) cmd_tpp(ctx, population_path);
    else if (analyze->parsed()) cmd_analyze(ctx, inputs);
    else if (shap->parsed()) cmd_shap(ctx, inputs);
    return kOk;
  } catch (const Error& e) {
    err << "prosim: " << e.what() << "\n";
    return exit_code_for(e);
  } catch (const nlohmann::json::exception& e) {
    err << "prosim: data-error: " << e.what() << "\n";
    return kData;
  } catch (const fs::filesystem_error& e) {
    err << "prosim: data-error: " << e.what() << "\n";
    return kData;
  }
}

inline int run_cli(int argc, char** argv, std::ostream& out = std::cout, std::ostream& err = std::cerr) {
  std::vector<std::string> args(argv + 1, argv + argc);
  return run_cli(args, out, err);
}

}  // namespace prosim::cli
