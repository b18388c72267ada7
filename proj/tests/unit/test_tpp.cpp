#include <map>

#include "prosim/population.hpp"
#include "prosim/tpp.hpp"
#include "test_support.hpp"

namespace prosim {
namespace {

TEST(Tpp, PayoffsMatchRulesOnDefaultGrid) {
  for (int x : {0, 5, 10, 15}) {
    for (int y : {1, 4, 7}) {
      const Trial t{1, x, y};
      EXPECT_EQ(payoff(t, Choice::Accept), (Payoffs{10, 30 - x, x}));
      EXPECT_EQ(payoff(t, Choice::Punish), (Payoffs{10 - y, 0, x}));
    }
  }
  static_assert(payoff(Trial{1, 10, 3}, Choice::Accept) == Payoffs{10, 20, 10});
  static_assert(payoff(Trial{1, 10, 3}, Choice::Punish) == Payoffs{7, 0, 10});
}

TEST(Tpp, GridValidation) {
  TrialGrid g;
  EXPECT_NO_THROW(g.validate());
  g.trial_count = 50;
  EXPECT_PROSIM_ERROR(g.validate(), ErrorKind::GridMismatch);
  g = {};
  g.allocations = {0, 20};
  g.trial_count = 30;
  EXPECT_PROSIM_ERROR(g.validate(), ErrorKind::InvalidSpec);
  g = {};
  g.costs = {0};
  g.trial_count = 20;
  EXPECT_PROSIM_ERROR(g.validate(), ErrorKind::InvalidSpec);
}

TEST(Tpp, TrialsBalancedAndShuffled) {
  const auto trials = generate_trials(TrialGrid{}, 3);
  ASSERT_EQ(trials.size(), 60u);
  std::map<std::pair<int, int>, int> cells;
  for (std::size_t i = 0; i < trials.size(); ++i) {
    EXPECT_EQ(trials[i].index, static_cast<int>(i) + 1);
    ++cells[{trials[i].allocation, trials[i].cost}];
  }
  EXPECT_EQ(cells.size(), 12u);
  for (const auto& [_, count] : cells) EXPECT_EQ(count, 5);
  EXPECT_EQ(trials, generate_trials(TrialGrid{}, 3));
  EXPECT_NE(trials, generate_trials(TrialGrid{}, 4));
}

TEST(Tpp, PromptStatesTheOffer) {
  const auto prompt = build_punish_prompt("PERSONA", Trial{1, 5, 4});
  EXPECT_EQ(prompt.rfind("PERSONA\n\n", 0), 0u);
  EXPECT_NE(prompt.find("offers $5 to Player 2, keeping $25"), std::string::npos);
  EXPECT_NE(prompt.find("pay $4"), std::string::npos);
  EXPECT_NE(prompt.find("you receive $6"), std::string::npos);
}

TEST(Tpp, SessionOutcomesAreConsistent) {
  const auto pop = sample_population(PopulationSpec{});
  const SyntheticBackend backend;
  const auto trials = generate_trials(TrialGrid{}, 1);
  const auto outcomes = run_tpp_session(backend, pop[3], trials, 4);
  ASSERT_EQ(outcomes.size(), 60u);
  for (std::size_t i = 0; i < outcomes.size(); ++i) {
    EXPECT_EQ(outcomes[i].agent_id, 3u);
    EXPECT_EQ(outcomes[i].trial, trials[i]);
    EXPECT_EQ(outcomes[i].payoffs, payoff(trials[i], outcomes[i].choice));
  }
  EXPECT_EQ(outcomes, run_tpp_session(backend, pop[3], trials, 1));
}

TEST(Tpp, RateMatrixMonotoneForDefaultPopulation) {
  const auto pop = sample_population(PopulationSpec{});
  const SyntheticBackend backend;
  std::vector<TrialOutcome> all;
  for (const auto& a : pop) {
    const auto o = run_tpp_session(backend, a, generate_trials(TrialGrid{}, a.id));
    all.insert(all.end(), o.begin(), o.end());
  }
  const auto rates = punishment_rate_matrix(all);
  ASSERT_EQ(rates.size(), 12u);
  for (const auto& [cell, rc] : rates) EXPECT_EQ(rc.total, 104u * 5u);
  const std::vector<int> xs{0, 5, 10, 15}, ys{1, 4, 7};
  for (int y : ys)
    for (std::size_t i = 1; i < xs.size(); ++i)
      EXPECT_LE(rates.at({xs[i], y}).rate(), rates.at({xs[i - 1], y}).rate());
  for (int x : xs)
    for (std::size_t i = 1; i < ys.size(); ++i)
      EXPECT_LE(rates.at({x, ys[i]}).rate(), rates.at({x, ys[i - 1]}).rate());
}

TEST(Tpp, EmptyCellAndRateCounting) {
  std::vector<TrialOutcome> outcomes{{0, {1, 5, 1}, Choice::Punish, {}},
                                     {0, {2, 5, 1}, Choice::Accept, {}},
                                     {1, {1, 5, 1}, Choice::Punish, {}}};
  const auto rates = punishment_rate_matrix(outcomes, {{5, 1}});
  EXPECT_EQ(rates.at({5, 1}).punished, 2u);
  EXPECT_EQ(rates.at({5, 1}).total, 3u);
  EXPECT_NEAR(rates.at({5, 1}).rate(), 2.0 / 3.0, 1e-15);
  EXPECT_PROSIM_ERROR(punishment_rate_matrix(outcomes, {{10, 1}}), ErrorKind::EmptyCell);
}

class FailingBackend final : public DecisionBackend {
 public:
  DecisionResponse decide(const DecisionRequest& r) const override {
    if (r.round == 7) fail(ErrorKind::TransportFailure, "boom");
    DecisionResponse out;
    out.punish = false;
    return out;
  }
  std::string name() const override { return "failing"; }
};

TEST(Tpp, BackendFailureCarriesCoordinates) {
  AgentProfile a;
  a.id = 12;
  a.persona = "p";
  try {
    run_tpp_session(FailingBackend{}, a, generate_trials(TrialGrid{}, 1));
    FAIL() << "expected failure";
  } catch (const Error& e) {
    EXPECT_EQ(e.kind(), ErrorKind::TransportFailure);
    EXPECT_NE(std::string(e.what()).find("agent 12 trial 7"), std::string::npos) << e.what();
  }
}

}  // namespace
}  // namespace prosim
