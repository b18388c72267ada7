#pragma once

#include <array>
#include <cmath>
#include <optional>
#include <string>
#include <vector>

#include "prosim/engine.hpp"
#include "prosim/error.hpp"
#include "prosim/scenario.hpp"
#include "prosim/shapley.hpp"
#include "prosim/stats.hpp"

namespace prosim {

/// Human benchmark. Only the overall mean is a published figure; the
/// per-scenario values shipped by default are placeholders chosen to
/// average to it.
struct HumanReference {
  std::array<double, kScenarioCount> per_scenario{4.456, 4.126, 3.896, 4.516, 4.386, 3.976};
  double overall = 4.226;
  std::string source = "overall mean published; per-scenario values are non-canonical placeholders";

  void validate() const {
    double total = 0.0;
    for (double v : per_scenario) total += v;
    require(std::abs(total / kScenarioCount - overall) <= 1e-9, ErrorKind::InvalidSpec,
            "human reference overall mean differs from the mean of its scenario means");
  }
};

struct IntentionSummary {
  std::array<double, kScenarioCount> per_scenario{};
  double overall = 0.0;  // mean of the scenario means
};

inline IntentionSummary mean_intentions(const std::vector<IntentionRow>& table) {
  require(!table.empty(), ErrorKind::DegenerateInput, "empty intention table");
  IntentionSummary out;
  for (const auto& row : table) {
    for (std::size_t s = 0; s < kScenarioCount; ++s) out.per_scenario[s] += row[s];
  }
  for (double& m : out.per_scenario) m /= static_cast<double>(table.size());
  for (double m : out.per_scenario) out.overall += m;
  out.overall /= kScenarioCount;
  return out;
}

/// Model-vs-human alignment across the six scenario means.
inline Correlation scenario_alignment(const IntentionSummary& model, const HumanReference& human) {
  return pearson(model.per_scenario, human.per_scenario);
}

/// 100 * (post - pre) / pre, elementwise.
inline std::vector<double> relative_change(std::span<const double> pre, std::span<const double> post) {
  require(pre.size() == post.size(), ErrorKind::DegenerateInput, "length mismatch");
  std::vector<double> out(pre.size());
  for (std::size_t i = 0; i < pre.size(); ++i) {
    require(pre[i] > 0.0, ErrorKind::DegenerateInput, "baseline must be positive");
    out[i] = 100.0 * (post[i] - pre[i]) / pre[i];
  }
  return out;
}

/// 100 * (sum(post) - sum(pre)) / sum(pre).
inline double aggregate_relative_change(std::span<const double> pre, std::span<const double> post) {
  require(pre.size() == post.size() && !pre.empty(), ErrorKind::DegenerateInput,
          "length mismatch or empty input");
  double a = 0.0, b = 0.0;
  for (std::size_t i = 0; i < pre.size(); ++i) {
    require(pre[i] > 0.0, ErrorKind::DegenerateInput, "baseline must be positive");
    a += pre[i];
    b += post[i];
  }
  return 100.0 * (b - a) / a;
}

struct PolicyShift {
  PolicyKind policy = PolicyKind::MoralIndoctrination;
  std::array<double, kScenarioCount> percent{};  // relative change of each scenario mean
  double aggregate = 0.0;                        // relative change of the overall mean
  std::size_t positive_shifts = 0;
};

inline std::vector<PolicyShift> policy_shifts(const std::vector<IntentionRow>& baseline,
                                              const PolicyTable& table) {
  const auto pre = mean_intentions(baseline);
  std::vector<PolicyShift> out;
  for (std::size_t k = 0; k < table.policies.size(); ++k) {
    const auto post = mean_intentions(table.rows[k]);
    PolicyShift shift;
    shift.policy = table.policies[k];
    const auto pct = relative_change(pre.per_scenario, post.per_scenario);
    for (std::size_t s = 0; s < kScenarioCount; ++s) {
      shift.percent[s] = pct[s];
      if (pct[s] > 0.0) ++shift.positive_shifts;
    }
    shift.aggregate = 100.0 * (post.overall - pre.overall) / pre.overall;
    out.push_back(shift);
  }
  return out;
}

inline std::vector<double> tendencies(const std::vector<AgentState>& states) {
  std::vector<double> out;
  out.reserve(states.size());
  for (const auto& s : states) out.push_back(prosocial_tendency(s.intentions));
  return out;
}

inline std::vector<double> tendencies(const IterationRecord& record) {
  std::vector<double> out;
  out.reserve(record.agents.size());
  for (const auto& a : record.agents) out.push_back(a.tendency());
  return out;
}

/// Aggregate percent change in prosocial tendency from t = 0 to the final
/// iteration (negative means decline).
inline double dynamics_relative_change(const DynamicsTrace& trace) {
  require(!trace.records.empty(), ErrorKind::DegenerateInput, "trace has no iterations");
  return aggregate_relative_change(tendencies(trace.initial), tendencies(trace.records.back()));
}

struct ContagionCurve {
  std::vector<int> t;
  std::vector<double> exposed_fraction;
  std::vector<double> mean_tendency;
  std::vector<double> mean_unfairness;
};

inline ContagionCurve contagion_curve(const std::vector<IterationRecord>& records) {
  require(!records.empty(), ErrorKind::DegenerateInput, "trace has no iterations");
  ContagionCurve out;
  for (const auto& rec : records) {
    require(!rec.agents.empty(), ErrorKind::DegenerateInput, "iteration without agents");
    double exposed = 0.0, tendency = 0.0, u = 0.0;
    for (const auto& a : rec.agents) {
      exposed += a.state.ever_exposed ? 1.0 : 0.0;
      tendency += a.tendency();
      u += a.state.unfairness;
    }
    const double n = static_cast<double>(rec.agents.size());
    out.t.push_back(rec.t);
    out.exposed_fraction.push_back(exposed / n);
    out.mean_tendency.push_back(tendency / n);
    out.mean_unfairness.push_back(u / n);
  }
  return out;
}

struct UnfairnessCorrelation {
  std::vector<std::optional<double>> per_agent;  // nullopt: constant series, excluded
  std::size_t excluded = 0;
  Correlation pooled;
};

/// Per-agent Pearson r between u and tendency over iterations, plus the
/// pooled r over all agent-iteration pairs.
inline UnfairnessCorrelation unfairness_correlation(const std::vector<IterationRecord>& records) {
  require(records.size() >= 3, ErrorKind::DegenerateInput, "need at least 3 iterations");
  const std::size_t n = records.front().agents.size();
  UnfairnessCorrelation out;
  std::vector<double> all_u, all_tendency;
  for (std::size_t i = 0; i < n; ++i) {
    std::vector<double> u, tendency;
    for (const auto& rec : records) {
      u.push_back(rec.agents.at(i).state.unfairness);
      tendency.push_back(rec.agents.at(i).tendency());
    }
    all_u.insert(all_u.end(), u.begin(), u.end());
    all_tendency.insert(all_tendency.end(), tendency.begin(), tendency.end());
    const bool constant_u = std::all_of(u.begin(), u.end(), [&](double v) { return v == u[0]; });
    const bool constant_t = std::all_of(tendency.begin(), tendency.end(),
                                        [&](double v) { return v == tendency[0]; });
    if (constant_u || constant_t) {
      out.per_agent.push_back(std::nullopt);
      ++out.excluded;
    } else {
      out.per_agent.push_back(pearson(u, tendency).r);
    }
  }
  try {
    out.pooled = pearson(all_u, all_tendency);
  } catch (const Error&) {
    fail(ErrorKind::DegenerateInput, "all-constant trace: no variation in unfairness or tendency");
  }
  return out;
}

/// Trait attribution dataset from agent profiles and their baseline rows.
inline std::vector<AttributionSample> attribution_dataset(
    const std::vector<AgentProfile>& population, const std::vector<IntentionRow>& table) {
  require(population.size() == table.size(), ErrorKind::DataError,
          "population and intention table sizes differ");
  std::vector<AttributionSample> out;
  for (std::size_t i = 0; i < population.size(); ++i) {
    out.push_back({population[i].id, population[i].traits, prosocial_tendency(table[i])});
  }
  return out;
}

}  // namespace prosim
