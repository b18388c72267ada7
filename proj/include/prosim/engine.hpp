#pragma once

#include <algorithm>
#include <array>
#include <functional>
#include <numeric>
#include <optional>
#include <span>
#include <sstream>
#include <string>
#include <vector>

#include "prosim/decision.hpp"
#include "prosim/error.hpp"
#include "prosim/parallel.hpp"
#include "prosim/policy.hpp"
#include "prosim/population.hpp"
#include "prosim/random.hpp"
#include "prosim/scenario.hpp"
#include "prosim/socialnet.hpp"

namespace prosim {

using IntentionRow = std::array<int, kScenarioCount>;

/// Mean of the six scenario intentions.
inline double prosocial_tendency(const IntentionRow& row) noexcept {
  return std::accumulate(row.begin(), row.end(), 0.0) / static_cast<double>(row.size());
}

/// Sub-seeds derived from the master seed by label.
struct SeedSet {
  Seed master = 42;
  Seed population = 0;
  Seed network = 0;
  Seed activation = 0;
  Seed inequity = 0;
  Seed shuffle = 0;
  Seed noise = 0;

  static SeedSet derive(Seed master) noexcept {
    return {master,
            derive_seed(master, "population"),
            derive_seed(master, "network"),
            derive_seed(master, "activation"),
            derive_seed(master, "inequity"),
            derive_seed(master, "shuffle"),
            derive_seed(master, "noise")};
  }
  bool operator==(const SeedSet&) const = default;
};

struct NetworkParams {
  std::size_t k = 6;
  double p = 0.2;
};

struct InequitySettings {
  std::optional<InequityKind> kind = InequityKind::BurdenAsymmetry;  // nullopt: no inequity
  double fraction = 0.2;
};

struct SimulationConfig {
  PopulationSpec population;
  NetworkParams network;
  int iterations = 30;
  double activation_fraction = 0.1;
  InequitySettings inequity;
  UnfairnessParams unfairness;
  Seed master_seed = 42;

  SeedSet seeds() const noexcept { return SeedSet::derive(master_seed); }

  void validate() const {
    require(iterations >= 1, ErrorKind::InvalidSpec, "iterations must be at least 1");
    require(activation_fraction > 0.0 && activation_fraction <= 1.0, ErrorKind::InvalidSpec,
            "activation fraction must lie in (0, 1]");
    require(inequity.fraction >= 0.0 && inequity.fraction <= 1.0, ErrorKind::InvalidSpec,
            "inequity fraction must lie in [0, 1]");
    require(network.p >= 0.0 && network.p <= 1.0, ErrorKind::InvalidSpec, "p outside [0, 1]");
    require(network.k >= 2 && network.k % 2 == 0, ErrorKind::InvalidSpec, "k must be even >= 2");
    population.validate();
    require(population.n > network.k, ErrorKind::InvalidSpec, "population must exceed k");
  }
};

struct AgentState {
  IntentionRow intentions{};
  double unfairness = 1.0;
  bool directly_affected = false;
  bool ever_exposed = false;

  bool operator==(const AgentState&) const = default;
};

struct AgentRecord {
  AgentState state;
  bool indirectly_exposed = false;  // this round only
  int unfairness_rating = 1;

  double tendency() const noexcept { return prosocial_tendency(state.intentions); }
  bool operator==(const AgentRecord&) const = default;
};

struct IterationRecord {
  int t = 1;
  std::vector<Edge> active_edges;
  std::vector<AgentRecord> agents;

  bool operator==(const IterationRecord&) const = default;
};

/// Concurrency and evaluation order for one batch of decisions. `order`, when
/// given, is a permutation of agent ids; outputs do not depend on it.
struct RunOptions {
  std::size_t jobs = 1;
  std::vector<std::size_t> order;
};

namespace detail {

inline Error with_coordinates(const Error& e, const std::string& where) {
  return Error(e.kind(), where + ": " + e.message());
}

inline int decide_likert(const DecisionBackend& backend, const DecisionRequest& request,
                         const std::string& where) {
  try {
    return *decide(backend, request).likert;
  } catch (const Error& e) {
    throw with_coordinates(e, where);
  }
}

inline std::string agent_scenario(std::size_t agent, const Scenario& s) {
  return "agent " + std::to_string(agent) + " scenario " + std::string(enum_name(s.kind));
}

}  // namespace detail

/// One neutral scenario_intention decision per (agent, scenario).
inline std::vector<IntentionRow> run_baseline(const std::vector<AgentProfile>& population,
                                              const ScenarioCatalog& scenarios,
                                              const DecisionBackend& backend,
                                              const RunOptions& options = {}) {
  require(!population.empty(), ErrorKind::InvalidParameters, "population is empty");
  validate_catalog(scenarios);
  std::vector<IntentionRow> table(population.size());
  parallel_for(
      population.size(), options.jobs,
      [&](std::size_t i) {
        const auto& agent = population[i];
        for (std::size_t s = 0; s < kScenarioCount; ++s) {
          DecisionRequest request;
          request.agent = &agent;
          request.query = QueryKind::ScenarioIntention;
          request.prompt =
              build_scenario_prompt(scenarios[s], agent.persona, std::nullopt, {}, std::nullopt);
          request.round = 0;
          request.state.scenario_index = s;
          table[i][s] =
              detail::decide_likert(backend, request, detail::agent_scenario(i, scenarios[s]));
        }
      },
      options.order);
  return table;
}

struct PolicyTable {
  std::vector<PolicyKind> policies;
  std::vector<std::vector<IntentionRow>> rows;  // [policy][agent]
};

/// Same elicitation as the baseline with one policy block per run.
inline PolicyTable run_policy_study(const std::vector<AgentProfile>& population,
                                    const ScenarioCatalog& scenarios, const PolicyCatalog& policies,
                                    const DecisionBackend& backend,
                                    const RunOptions& options = {}) {
  require(!population.empty(), ErrorKind::InvalidParameters, "population is empty");
  validate_catalog(scenarios);
  PolicyTable out;
  for (const auto& policy : policies) {
    const auto policy_index = enum_index(policy.kind());
    std::vector<IntentionRow> table(population.size());
    parallel_for(
        population.size(), options.jobs,
        [&](std::size_t i) {
          const auto& agent = population[i];
          for (std::size_t s = 0; s < kScenarioCount; ++s) {
            DecisionRequest request;
            request.agent = &agent;
            request.query = QueryKind::ScenarioIntention;
            request.prompt = build_scenario_prompt(scenarios[s], agent.persona,
                                                   std::string_view(policy.text()), {},
                                                   std::nullopt);
            request.round = 0;
            request.state.scenario_index = s;
            request.state.policy_index = policy_index;
            table[i][s] = detail::decide_likert(
                backend, request,
                detail::agent_scenario(i, scenarios[s]) + " policy " +
                    std::string(enum_name(policy.kind())));
          }
        },
        options.order);
    out.policies.push_back(policy.kind());
    out.rows.push_back(std::move(table));
  }
  return out;
}

/// Everything a dynamics step reads besides the previous states.
struct DynamicsWorld {
  const std::vector<AgentProfile>& population;
  const ScenarioCatalog& scenarios;
  const Graph& graph;
  const std::optional<InequityCondition>& inequity;
  UnfairnessParams unfairness;
  double activation_fraction = 0.1;
  Seed activation_seed = 0;
  const DecisionBackend& backend;
};

inline std::string build_unfairness_prompt(std::string_view persona,
                                           std::optional<std::string_view> context,
                                           std::size_t observed_neighbors,
                                           std::size_t exposed_neighbors) {
  std::ostringstream os;
  os << persona << "\n\n";
  if (context && !context->empty()) os << *context << "\n\n";
  if (observed_neighbors > 0) {
    os << "In this round you observed " << observed_neighbors << " neighbor(s); "
       << exposed_neighbors << " of them have experienced unequal treatment.\n\n";
  }
  os << "On a scale from 1 (not at all) to 7 (extremely), how unfairly treated do you feel in "
        "your community right now? Answer with a single integer from 1 to 7.";
  return os.str();
}

struct StepResult {
  std::vector<AgentState> states;
  IterationRecord record;
};

/// One synchronous iteration. Every read comes from `prev` (the t-1
/// snapshot); the new states are returned whole, so a failed decision leaves
/// the caller's states untouched.
inline StepResult step(const DynamicsWorld& world, const std::vector<AgentState>& prev, int t,
                       const RunOptions& options = {}) {
  const std::size_t n = world.population.size();
  require(prev.size() == n && world.graph.node_count() == n, ErrorKind::InvalidParameters,
          "state, population and graph sizes differ");
  const EdgeSubset subset = activate_edges(world.graph, world.activation_fraction, t,
                                           world.activation_seed);
  const auto adjacency = active_adjacency(world.graph, subset);
  const InequityKind kind =
      world.inequity ? world.inequity->kind : InequityKind::BurdenAsymmetry;

  std::vector<AgentRecord> next(n);
  parallel_for(
      n, options.jobs,
      [&](std::size_t i) {
        const AgentProfile& agent = world.population[i];
        const AgentState& mine = prev[i];
        const auto& neighbors = adjacency[i];

        std::size_t exposed_neighbors = 0;
        for (NodeId j : neighbors) exposed_neighbors += prev[j].ever_exposed ? 1 : 0;
        const bool indirect = exposed_neighbors > 0;
        const bool direct = mine.directly_affected;

        const std::string context =
            world.inequity ? render_inequity_context(*world.inequity, i, agent.demographics.income)
                           : std::string();
        // An empty context renders as absent.
        const std::optional<std::string_view> context_view(context);

        AgentRecord rec;
        rec.indirectly_exposed = indirect;
        rec.state.directly_affected = direct;
        rec.state.ever_exposed = mine.ever_exposed || direct || indirect;
        rec.state.unfairness =
            update_unfairness(world.unfairness, kind, mine.unfairness, direct, indirect);

        DecisionRequest rating;
        rating.agent = &agent;
        rating.query = QueryKind::UnfairnessRating;
        rating.prompt = build_unfairness_prompt(agent.persona, context_view, neighbors.size(),
                                                exposed_neighbors);
        rating.round = t;
        rating.state.unfairness = rec.state.unfairness;
        rec.unfairness_rating = detail::decide_likert(
            world.backend, rating,
            "t=" + std::to_string(t) + " agent " + std::to_string(i) + " unfairness");
        if (world.backend.reports_unfairness()) {
          rec.state.unfairness = static_cast<double>(rec.unfairness_rating);
        }

        std::vector<Observation> observations;
        observations.reserve(neighbors.size());
        for (std::size_t s = 0; s < kScenarioCount; ++s) {
          observations.clear();
          double sum = 0.0;
          for (NodeId j : neighbors) {
            observations.push_back({j, prev[j].intentions[s]});
            sum += prev[j].intentions[s];
          }
          DecisionRequest request;
          request.agent = &agent;
          request.query = QueryKind::ScenarioIntention;
          request.prompt = build_scenario_prompt(world.scenarios[s], agent.persona, context_view,
                                                 observations, mine.intentions[s]);
          request.round = t;
          request.state.scenario_index = s;
          request.state.prior = mine.intentions[s];
          if (!neighbors.empty()) {
            request.state.neighbor_mean = sum / static_cast<double>(neighbors.size());
          }
          request.state.unfairness = rec.state.unfairness;
          rec.state.intentions[s] = detail::decide_likert(
              world.backend, request,
              "t=" + std::to_string(t) + " " + detail::agent_scenario(i, world.scenarios[s]));
        }
        next[i] = std::move(rec);
      },
      options.order);

  StepResult out;
  out.record.t = t;
  out.record.active_edges = subset.active;
  out.states.reserve(n);
  for (const auto& rec : next) out.states.push_back(rec.state);
  out.record.agents = std::move(next);
  return out;
}

/// t = 0 state: baseline intentions, u = 1, inequity flags set for the
/// directly affected agents.
inline std::vector<AgentState> initial_states(const std::vector<IntentionRow>& baseline,
                                              const std::optional<InequityCondition>& inequity) {
  std::vector<AgentState> states(baseline.size());
  for (std::size_t i = 0; i < baseline.size(); ++i) {
    states[i].intentions = baseline[i];
    states[i].unfairness = 1.0;
    states[i].directly_affected = inequity && inequity->is_affected(i);
    states[i].ever_exposed = states[i].directly_affected;
  }
  return states;
}

struct DynamicsTrace {
  Graph graph;
  std::optional<InequityCondition> inequity;
  std::vector<AgentState> initial;
  std::vector<IterationRecord> records;
};

using RecordSink = std::function<void(const IterationRecord&)>;

/// Steps t = first..last from `states`, streaming each record to `sink`.
inline std::vector<IterationRecord> run_steps(const DynamicsWorld& world,
                                              std::vector<AgentState> states, int first, int last,
                                              const RunOptions& options = {},
                                              const RecordSink& sink = {}) {
  std::vector<IterationRecord> records;
  for (int t = first; t <= last; ++t) {
    auto result = step(world, states, t, options);
    states = std::move(result.states);
    if (sink) sink(result.record);
    records.push_back(std::move(result.record));
  }
  return records;
}

/// Builds the network, assigns inequity, elicits the baseline, then runs T
/// synchronous steps. `on_ready` sees the trace before the first step (for
/// writing a header).
inline DynamicsTrace run_dynamics(const SimulationConfig& config,
                                  const std::vector<AgentProfile>& population,
                                  const ScenarioCatalog& scenarios, const DecisionBackend& backend,
                                  const RunOptions& options = {},
                                  const std::function<void(const DynamicsTrace&)>& on_ready = {},
                                  const RecordSink& sink = {}) {
  config.validate();
  require(population.size() > config.network.k, ErrorKind::InvalidSpec,
          "population must exceed k");
  const SeedSet seeds = config.seeds();
  DynamicsTrace trace;
  trace.graph = build_small_world(population.size(), config.network.k, config.network.p,
                                  seeds.network);
  if (config.inequity.kind) {
    trace.inequity = assign_inequity(population.size(), *config.inequity.kind,
                                     config.inequity.fraction, seeds.inequity);
  }
  trace.initial = initial_states(run_baseline(population, scenarios, backend, options),
                                 trace.inequity);
  if (on_ready) on_ready(trace);

  const DynamicsWorld world{population,        scenarios,          trace.graph,
                            trace.inequity,    config.unfairness,  config.activation_fraction,
                            seeds.activation,  backend};
  trace.records = run_steps(world, trace.initial, 1, config.iterations, options, sink);
  return trace;
}

/// States as of the last record (or the initial states when there is none).
inline std::vector<AgentState> final_states(const DynamicsTrace& trace) {
  if (trace.records.empty()) return trace.initial;
  std::vector<AgentState> out;
  for (const auto& rec : trace.records.back().agents) out.push_back(rec.state);
  return out;
}

}  // namespace prosim
