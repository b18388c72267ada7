#pragma once

#include <array>
#include <cstddef>
#include <map>
#include <sstream>
#include <string>
#include <utility>
#include <vector>

#include "prosim/decision.hpp"
#include "prosim/enum_names.hpp"
#include "prosim/error.hpp"
#include "prosim/parallel.hpp"
#include "prosim/random.hpp"

namespace prosim {

inline constexpr int kPot = 30;
inline constexpr int kJudgeEndowment = 10;

struct Trial {
  int index = 1;  // 1-based position in the session
  int allocation = 0;
  int cost = 1;

  PunishOffer offer() const noexcept { return {allocation, cost}; }
  bool operator==(const Trial&) const = default;
};

enum class Choice { Accept, Punish };

template <>
struct EnumNames<Choice> {
  static constexpr std::array<std::string_view, 2> names{"accept", "punish"};
};

struct Payoffs {
  int judge = 0;
  int p1 = 0;
  int p2 = 0;
  bool operator==(const Payoffs&) const = default;
};

struct TrialOutcome {
  std::size_t agent_id = 0;
  Trial trial;
  Choice choice = Choice::Accept;
  Payoffs payoffs;
  bool operator==(const TrialOutcome&) const = default;
};

/// Full factorial allocation x cost grid, repeated. x is capped at the equal
/// split by default; the product must equal `trial_count`.
struct TrialGrid {
  std::vector<int> allocations{0, 5, 10, 15};
  std::vector<int> costs{1, 4, 7};
  int repeats = 5;
  std::size_t trial_count = 60;
  int max_allocation = kFairShare;

  void validate() const {
    require(!allocations.empty() && !costs.empty() && repeats >= 1, ErrorKind::InvalidSpec,
            "trial grid must be non-empty with repeats >= 1");
    require(max_allocation >= 0 && max_allocation <= kPot, ErrorKind::InvalidSpec,
            "max_allocation must lie in [0, 30]");
    for (int x : allocations) {
      require(x >= 0 && x <= max_allocation, ErrorKind::InvalidSpec,
              "allocation " + std::to_string(x) + " outside [0, " +
                  std::to_string(max_allocation) + "]");
    }
    for (int y : costs) {
      require(y >= 1 && y <= kJudgeEndowment, ErrorKind::InvalidSpec,
              "cost " + std::to_string(y) + " outside [1, 10]");
    }
    const std::size_t product = allocations.size() * costs.size() * static_cast<std::size_t>(repeats);
    require(product == trial_count, ErrorKind::GridMismatch,
            std::to_string(allocations.size()) + " x " + std::to_string(costs.size()) + " x " +
                std::to_string(repeats) + " = " + std::to_string(product) + " trials, expected " +
                std::to_string(trial_count));
  }
};

/// Grid trials shuffled by `seed`, then numbered 1..N in session order.
inline std::vector<Trial> generate_trials(const TrialGrid& grid, Seed seed) {
  grid.validate();
  std::vector<Trial> trials;
  trials.reserve(grid.trial_count);
  for (int r = 0; r < grid.repeats; ++r) {
    for (int x : grid.allocations) {
      for (int y : grid.costs) trials.push_back({0, x, y});
    }
  }
  Rng rng(seed);
  rng.shuffle(trials);
  for (std::size_t i = 0; i < trials.size(); ++i) trials[i].index = static_cast<int>(i) + 1;
  return trials;
}

/// accept: judge 10, P1 30-x, P2 x.  punish: judge 10-y, P1 0, P2 x.
constexpr Payoffs payoff(const Trial& trial, Choice choice) noexcept {
  if (choice == Choice::Accept) return {kJudgeEndowment, kPot - trial.allocation, trial.allocation};
  return {kJudgeEndowment - trial.cost, 0, trial.allocation};
}

inline std::string build_punish_prompt(std::string_view persona, const Trial& trial) {
  std::ostringstream os;
  os << persona << "\n\n";
  os << "You are the third-party judge in an allocation game with two newly assigned players. "
        "Player 1 received $"
     << kPot << " and offers $" << trial.allocation << " to Player 2, keeping $"
     << kPot - trial.allocation << ".\n\n";
  os << "You can choose one of two options:\n";
  os << "- ACCEPT: implement the allocation and receive a $" << kJudgeEndowment << " reward.\n";
  os << "- PUNISH: pay $" << trial.cost
     << " to eliminate Player 1's earnings. Player 2 keeps $" << trial.allocation
     << " and you receive $" << kJudgeEndowment - trial.cost << ".\n\n";
  os << "Briefly consider the situation, then end your answer with exactly one word: ACCEPT or "
        "PUNISH.";
  return os.str();
}

/// One punish_choice decision per trial; trials carry no state between them.
inline std::vector<TrialOutcome> run_tpp_session(const DecisionBackend& backend,
                                                 const AgentProfile& agent,
                                                 const std::vector<Trial>& trials,
                                                 std::size_t jobs = 1) {
  std::vector<TrialOutcome> outcomes(trials.size());
  parallel_for(trials.size(), jobs, [&](std::size_t i) {
    const Trial& trial = trials[i];
    require(trial.allocation >= 0 && trial.allocation <= kPot - trial.allocation &&
                trial.cost >= 1 && trial.cost <= kJudgeEndowment,
            ErrorKind::InvalidParameters, "invalid trial " + std::to_string(trial.index));
    DecisionRequest request;
    request.agent = &agent;
    request.query = QueryKind::PunishChoice;
    request.prompt = build_punish_prompt(agent.persona, trial);
    request.round = trial.index;
    request.state.offer = trial.offer();
    DecisionResponse response;
    try {
      response = decide(backend, request);
    } catch (const Error& e) {
      throw Error(e.kind(), "agent " + std::to_string(agent.id) + " trial " +
                                std::to_string(trial.index) + ": " + e.message());
    }
    const Choice choice = *response.punish ? Choice::Punish : Choice::Accept;
    outcomes[i] = {agent.id, trial, choice, payoff(trial, choice)};
  });
  return outcomes;
}

struct RateCell {
  std::size_t punished = 0;
  std::size_t total = 0;

  double rate() const noexcept {
    return total == 0 ? 0.0 : static_cast<double>(punished) / static_cast<double>(total);
  }
};

/// Keyed by (allocation, cost).
using RateMatrix = std::map<std::pair<int, int>, RateCell>;

inline RateMatrix punishment_rate_matrix(const std::vector<TrialOutcome>& outcomes) {
  RateMatrix out;
  for (const auto& o : outcomes) {
    auto& cell = out[{o.trial.allocation, o.trial.cost}];
    ++cell.total;
    if (o.choice == Choice::Punish) ++cell.punished;
  }
  return out;
}

/// Restricts to the requested cells; every requested cell must have data.
inline RateMatrix punishment_rate_matrix(const std::vector<TrialOutcome>& outcomes,
                                         const std::vector<std::pair<int, int>>& cells) {
  const RateMatrix all = punishment_rate_matrix(outcomes);
  RateMatrix out;
  for (const auto& cell : cells) {
    const auto it = all.find(cell);
    require(it != all.end(), ErrorKind::EmptyCell,
            "no outcomes for allocation " + std::to_string(cell.first) + ", cost " +
                std::to_string(cell.second));
    out.insert(*it);
  }
  return out;
}

}  // namespace prosim
