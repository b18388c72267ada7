// Acceptance suite: one PASS/FAIL line per criterion. argv[1] is the CLI binary.

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <functional>
#include <iostream>
#include <numeric>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include <unistd.h>

#include "mock_llm_server.hpp"
#include "prosim/prosim.hpp"

namespace fs = std::filesystem;
using namespace prosim;

namespace {

struct Outcome {
  bool pass = true;
  std::ostringstream detail;

  void expect(bool ok, const std::string& what) {
    if (!ok && pass) detail << "failed: " << what << "; ";
    pass = pass && ok;
  }
};

using Clock = std::chrono::steady_clock;

bool run_criterion(int id, const std::string& name, double budget_s,
                   const std::function<void(Outcome&)>& body) {
  Outcome o;
  const auto start = Clock::now();
  try {
    body(o);
  } catch (const std::exception& e) {
    o.expect(false, std::string("exception: ") + e.what());
  }
  const double secs = std::chrono::duration<double>(Clock::now() - start).count();
  if (budget_s > 0.0) {
    std::ostringstream msg;
    msg << "runtime " << secs << " s exceeds " << budget_s << " s";
    o.expect(secs < budget_s, msg.str());
  }
  std::printf("[%s] criterion %d: %s (%s%.3f s)\n", o.pass ? "PASS" : "FAIL", id, name.c_str(),
              o.detail.str().c_str(), secs);
  std::fflush(stdout);
  return o.pass;
}

std::string slurp(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  std::ostringstream os;
  os << in.rdbuf();
  return os.str();
}

// Mean local clustering from explicit triangle counts over adjacency sets.
double triangle_clustering(const Graph& g) {
  const std::size_t n = g.node_count();
  std::vector<std::set<NodeId>> adj(n);
  for (const auto& e : g.edges()) {
    adj[e.u].insert(e.v);
    adj[e.v].insert(e.u);
  }
  double total = 0.0;
  for (NodeId i = 0; i < n; ++i) {
    const std::vector<NodeId> nb(adj[i].begin(), adj[i].end());
    const double d = static_cast<double>(nb.size());
    if (nb.size() < 2) continue;
    std::size_t triangles = 0;
    for (std::size_t a = 0; a < nb.size(); ++a)
      for (std::size_t b = a + 1; b < nb.size(); ++b) triangles += adj[nb[a]].count(nb[b]);
    total += static_cast<double>(triangles) / (d * (d - 1.0) / 2.0);
  }
  return total / static_cast<double>(n);
}

double pearson_oracle(const std::vector<double>& x, const std::vector<double>& y) {
  long double mx = 0, my = 0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    mx += x[i];
    my += y[i];
  }
  mx /= x.size();
  my /= y.size();
  long double sxy = 0, sxx = 0, syy = 0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    sxy += (x[i] - mx) * (y[i] - my);
    sxx += (x[i] - mx) * (x[i] - mx);
    syy += (y[i] - my) * (y[i] - my);
  }
  return static_cast<double>(sxy / std::sqrt(sxx * syy));
}

struct DynamicsRun {
  DynamicsTrace trace;
  double decline_percent = 0.0;
  double exposed_t10 = 0.0;
  double pooled_r = 0.0;
};

DynamicsRun default_dynamics(Seed seed, InequityKind kind, const RunOptions& options = {}) {
  AppConfig config;
  config.seed = seed;
  config.inequity.kind = kind;
  const auto population = sample_population(config.population_spec());
  DynamicsRun run;
  run.trace = run_dynamics(config.simulation(), population, scenario_catalog(),
                           SyntheticBackend(config.synthetic_params()), options);
  run.decline_percent = -dynamics_relative_change(run.trace);
  run.exposed_t10 = contagion_curve(run.trace.records).exposed_fraction.at(9);
  run.pooled_r = unfairness_correlation(run.trace.records).pooled.r;
  return run;
}

}  // namespace

int main(int argc, char** argv) {
  if (argc < 2) {
    std::fprintf(stderr, "usage: prosim_acceptance <path-to-prosim-cli>\n");
    return 2;
  }
  const std::string cli = argv[1];
  const fs::path scratch =
      fs::temp_directory_path() / ("prosim-acceptance-" + std::to_string(::getpid()));
  fs::create_directories(scratch);
  int failures = 0;
  auto record = [&](bool ok) { failures += ok ? 0 : 1; };

  record(run_criterion(1, "small-world edge count, degree sum and lattice clustering", 1.0, [](Outcome& o) {
    for (double p : {0.0, 0.2, 1.0}) {
      for (Seed seed = 0; seed < 100; ++seed) {
        const Graph g = watts_strogatz(104, 6, p, seed);
        std::size_t degree_sum = 0;
        for (NodeId i = 0; i < g.node_count(); ++i) degree_sum += g.degree(i);
        o.expect(g.edge_count() == 312, "edge count at p=" + std::to_string(p));
        o.expect(degree_sum == 624, "degree sum at p=" + std::to_string(p));
      }
    }
    const Graph lattice = watts_strogatz(104, 6, 0.0, 1);
    const double c = average_clustering(lattice);
    o.expect(std::abs(c - triangle_clustering(lattice)) <= 1e-9, "clustering vs triangle oracle");
    o.expect(std::abs(c - 0.6) <= 1e-9, "clustering vs 3(k-2)/(4(k-1))");
    o.detail << "C(p=0)=" << c << "; ";
  }));

  record(run_criterion(2, "edge activation size and replay", 0.0, [](Outcome& o) {
    const Graph g = build_small_world(104, 6, 0.2, 11);
    const std::set<Edge> all(g.edges().begin(), g.edges().end());
    for (Seed seed : {1ull, 42ull, 977ull}) {
      for (int t = 1; t <= 200; ++t) {
        const auto a = activate_edges(g, 0.1, t, seed);
        o.expect(a.active.size() == 31, "31 active edges at t=" + std::to_string(t));
        o.expect(a == activate_edges(g, 0.1, t, seed), "replay at t=" + std::to_string(t));
        o.expect(std::all_of(a.active.begin(), a.active.end(),
                             [&](const Edge& e) { return all.count(e) == 1; }),
                 "active edges are graph edges");
      }
    }
  }));

  record(run_criterion(3, "third-party punishment payoffs", 0.0, [](Outcome& o) {
    for (int x : {0, 5, 10, 15}) {
      for (int y : {1, 4, 7}) {
        const Trial trial{1, x, y};
        o.expect(payoff(trial, Choice::Accept) == Payoffs{10, 30 - x, x}, "accept payoff");
        o.expect(payoff(trial, Choice::Punish) == Payoffs{10 - y, 0, x}, "punish payoff");
      }
    }
    o.expect(payoff(Trial{1, 10, 4}, Choice::Accept) == Payoffs{10, 20, 10}, "(x=10, accept)");
    o.expect(payoff(Trial{1, 10, 3}, Choice::Punish) == Payoffs{7, 0, 10}, "(x=10, y=3, punish)");
  }));

  record(run_criterion(4, "punishment rate non-increasing in allocation and cost", 5.0, [](Outcome& o) {
    AppConfig config;
    const auto population = sample_population(config.population_spec());
    const SyntheticBackend backend(config.synthetic_params());
    std::vector<TrialOutcome> outcomes;
    for (const auto& agent : population) {
      const auto trials = generate_trials(config.tpp, derive_seed(config.seeds().shuffle, agent.id));
      const auto session = run_tpp_session(backend, agent, trials);
      outcomes.insert(outcomes.end(), session.begin(), session.end());
    }
    o.expect(outcomes.size() == 104 * 60, "6240 outcomes");
    const auto rates = punishment_rate_matrix(outcomes);
    const auto& xs = config.tpp.allocations;
    const auto& ys = config.tpp.costs;
    for (std::size_t a = 0; a < xs.size(); ++a) {
      for (std::size_t b = 0; b < ys.size(); ++b) {
        const double r = rates.at({xs[a], ys[b]}).rate();
        if (a + 1 < xs.size())
          o.expect(rates.at({xs[a + 1], ys[b]}).rate() <= r, "monotone in x");
        if (b + 1 < ys.size())
          o.expect(rates.at({xs[a], ys[b + 1]}).rate() <= r, "monotone in y");
      }
    }
    o.detail << "rate(0,1)=" << rates.at({0, 1}).rate() << " rate(15,7)=" << rates.at({15, 7}).rate()
             << "; ";
  }));

  record(run_criterion(5, "exact Shapley values on linear surrogates", 10.0, [](Outcome& o) {
    Rng rng(derive_seed(5, "acceptance-shapley"));
    double worst = 0.0;
    for (int d = 0; d < 1000; ++d) {
      std::array<double, kTraitCount> w{};
      for (double& v : w) v = rng.normal(0.0, 1.0);
      const double b = rng.normal(0.0, 2.0);
      std::vector<AttributionSample> data(20);
      for (std::size_t i = 0; i < data.size(); ++i) {
        data[i].agent_id = i;
        double y = b;
        for (std::size_t j = 0; j < kTraitCount; ++j) {
          data[i].traits.values[j] = 1.0 + 6.0 * rng.uniform01();
          y += w[j] * data[i].traits.values[j];
        }
        data[i].intention = y;
      }
      const TraitAttributor attributor(data);
      const auto& model = attributor.model();
      const auto& means = attributor.means();
      for (const auto& s : data) {
        const auto a = attributor.attribute(s.traits, s.agent_id);
        double total = 0.0;
        for (std::size_t j = 0; j < kTraitCount; ++j) {
          const double closed = model.weights[j] * (s.traits.values[j] - means[j]);
          worst = std::max(worst, std::abs(a.phi[j] - closed));
          total += a.phi[j];
        }
        worst = std::max(worst, std::abs(total - (a.prediction - a.baseline_prediction)));
      }
    }
    o.expect(worst <= 1e-9, "max deviation " + std::to_string(worst));
    o.detail << "max deviation " << worst << "; ";
  }));

  record(run_criterion(6, "Pearson r and two-sided p-value", 0.0, [](Outcome& o) {
    Rng rng(derive_seed(6, "acceptance-pearson"));
    double worst = 0.0;
    for (int k = 0; k < 1000; ++k) {
      const std::size_t n = 3 + rng.below(200);
      std::vector<double> x(n), y(n);
      const double slope = rng.normal(0.0, 1.0);
      for (std::size_t i = 0; i < n; ++i) {
        x[i] = rng.normal(0.0, 3.0);
        y[i] = slope * x[i] + rng.normal(0.0, 2.0);
      }
      worst = std::max(worst, std::abs(pearson(x, y).r - pearson_oracle(x, y)));
    }
    o.expect(worst <= 1e-12, "r deviation " + std::to_string(worst));
    const double p = correlation_p_value(0.955, 6);
    o.expect(p >= 0.002 && p <= 0.004, "p(r=0.955, n=6) in [0.002, 0.004]");
    o.detail << "max r deviation " << worst << ", p(0.955, 6)=" << p << "; ";
  }));

  record(run_criterion(7, "dynamics calibration band", 0.0, [](Outcome& o) {
    for (InequityKind kind : {InequityKind::BurdenAsymmetry, InequityKind::RewardAsymmetry}) {
      const auto start = Clock::now();
      const auto run = default_dynamics(42, kind);
      const double secs = std::chrono::duration<double>(Clock::now() - start).count();
      const bool burden = kind == InequityKind::BurdenAsymmetry;
      const double lo = burden ? 19.0 : 25.0, hi = burden ? 23.0 : 32.0;
      const std::string tag(enum_name(kind));
      o.expect(secs < 10.0, tag + " run under 10 s");
      o.expect(run.exposed_t10 > 0.5, tag + " exposed fraction at t=10 > 0.5");
      o.expect(run.decline_percent >= lo && run.decline_percent <= hi, tag + " decline in band");
      o.expect(run.pooled_r < -0.3, tag + " pooled r < -0.3");
      o.detail << tag << ": decline " << run.decline_percent << "%, exposed@10 " << run.exposed_t10
               << ", r " << run.pooled_r << "; ";
    }
  }));

  record(run_criterion(8, "end-to-end determinism and order invariance", 0.0, [&](Outcome& o) {
    std::vector<std::string> traces;
    for (const char* tag : {"a", "b"}) {
      const fs::path out = scratch / (std::string("det-") + tag);
      const std::string cmd = "\"" + cli + "\" simulate dynamics --backend synthetic --seed 42 --out \"" +
                              out.string() + "\" > /dev/null";
      o.expect(std::system(cmd.c_str()) == 0, "CLI run " + std::string(tag));
      traces.push_back(slurp(out / "dynamics_trace.jsonl"));
    }
    o.expect(!traces[0].empty() && traces[0] == traces[1], "byte-identical traces");

    std::vector<std::size_t> order(104);
    std::iota(order.begin(), order.end(), std::size_t{0});
    Rng rng(derive_seed(8, "acceptance-order"));
    rng.shuffle(order);
    const auto forward = default_dynamics(42, InequityKind::BurdenAsymmetry);
    const auto permuted = default_dynamics(42, InequityKind::BurdenAsymmetry, RunOptions{1, order});
    std::reverse(order.begin(), order.end());
    const auto threaded = default_dynamics(42, InequityKind::BurdenAsymmetry, RunOptions{4, order});
    o.expect(forward.trace.records == permuted.trace.records, "permuted order");
    o.expect(forward.trace.records == threaded.trace.records, "threaded reversed order");
    o.detail << traces[0].size() << " trace bytes; ";
  }));

  record(run_criterion(9, "exposure monotonicity and state bounds", 0.0, [](Outcome& o) {
    std::size_t checked = 0;
    for (Seed seed = 1000; seed < 1100; ++seed) {
      const auto kind = seed % 2 ? InequityKind::RewardAsymmetry : InequityKind::BurdenAsymmetry;
      AppConfig config;
      config.seed = seed;
      config.inequity.kind = kind;
      const auto population = sample_population(config.population_spec());
      const auto trace = run_dynamics(config.simulation(), population, scenario_catalog(),
                                      SyntheticBackend(config.synthetic_params()));
      std::vector<AgentState> prev = trace.initial;
      for (const auto& rec : trace.records) {
        for (std::size_t i = 0; i < rec.agents.size(); ++i) {
          const auto& s = rec.agents[i].state;
          o.expect(!prev[i].ever_exposed || s.ever_exposed, "ever_exposed shrank");
          o.expect(s.unfairness >= 1.0 && s.unfairness <= 7.0, "u outside [1, 7]");
          for (int v : s.intentions) o.expect(v >= 1 && v <= 7, "intention outside [1, 7]");
          ++checked;
        }
        prev.clear();
        for (const auto& a : rec.agents) prev.push_back(a.state);
      }
    }
    o.detail << checked << " agent-iterations; ";
  }));

  record(run_criterion(10, "LLM client contract against a mock server", 0.0, [](Outcome& o) {
    const char* env = "PROSIM_ACCEPTANCE_KEY";
    test::ScopedEnv key(env, "acceptance-key");
    PopulationSpec spec;
    spec.n = 1;
    const auto agent = sample_population(spec).front();
    DecisionRequest likert;
    likert.agent = &agent;
    likert.prompt = build_scenario_prompt(scenario_catalog().front(), agent.persona, std::nullopt, {},
                                          std::nullopt);
    DecisionRequest punish;
    punish.agent = &agent;
    punish.query = QueryKind::PunishChoice;
    punish.prompt = build_punish_prompt(agent.persona, Trial{1, 5, 4});
    punish.state.offer = PunishOffer{5, 4};

    auto config_for = [&](const test::MockLlmServer& s, int retries, int timeout_ms) {
      LlmBackendConfig c;
      c.endpoint = s.endpoint();
      c.api_key_env = env;
      c.max_retries = retries;
      c.timeout = std::chrono::milliseconds(timeout_ms);
      return c;
    };
    auto answering = [](std::string text) {
      return [text](int, const test::MockRequest&) { return test::MockReply{200, text, {}, {}}; };
    };

    for (const auto& [text, value] : std::vector<std::pair<std::string, int>>{
             {"6", 6}, {"Rating: 2/7", 2}, {"I would say 5 out of 7.", 5}}) {
      test::MockLlmServer s(answering(text));
      o.expect(llm_decide(config_for(s, 3, 2000), likert).likert == value, "likert '" + text + "'");
    }
    for (const auto& [text, value] : std::vector<std::pair<std::string, bool>>{
             {"PUNISH", true}, {"accept", false}, {"Given the split, I will punish.", true}}) {
      test::MockLlmServer s(answering(text));
      o.expect(llm_decide(config_for(s, 3, 2000), punish).punish == value, "keyword '" + text + "'");
    }
    {
      test::MockLlmServer s([](int n, const test::MockRequest&) {
        return test::MockReply{200, n == 1 ? "hmm" : "3", {}, {}};
      });
      o.expect(llm_decide(config_for(s, 3, 2000), likert).likert == 3, "answer after retry");
      o.expect(s.request_count() == 2, "one parse retry");
    }
    for (int retries : {0, 3}) {
      test::MockLlmServer s(answering("garbage"));
      bool exhausted = false;
      try {
        llm_decide(config_for(s, retries, 2000), likert);
      } catch (const Error& e) {
        exhausted = e.kind() == ErrorKind::ExhaustedRetries;
      }
      o.expect(exhausted, "exhausted-retries error");
      o.expect(s.request_count() == retries + 1,
               "attempts == max_retries + 1 (" + std::to_string(s.request_count()) + ")");
    }
    {
      test::MockLlmServer s([](int, const test::MockRequest&) {
        return test::MockReply{200, "4", {}, std::chrono::milliseconds(1500)};
      });
      const int timeout_ms = 200, retries = 2;
      const auto start = Clock::now();
      bool failed = false;
      try {
        llm_decide(config_for(s, retries, timeout_ms), likert);
      } catch (const Error& e) {
        failed = e.is_backend_failure();
      }
      const double ms = std::chrono::duration<double, std::milli>(Clock::now() - start).count();
      o.expect(failed, "slow endpoint gives a backend failure");
      o.expect(ms <= timeout_ms * (retries + 1), "wall time within timeout x attempts");
      o.detail << "slow call resolved in " << ms << " ms (bound " << timeout_ms * (retries + 1)
               << " ms); ";
    }
  }));

  std::error_code ec;
  fs::remove_all(scratch, ec);
  std::printf("%d of 10 criteria failed\n", failures);
  return failures == 0 ? 0 : 1;
}
