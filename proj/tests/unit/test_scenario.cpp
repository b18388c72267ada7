#include "prosim/scenario.hpp"
#include "test_support.hpp"

namespace prosim {
namespace {

TEST(Scenario, CatalogOrderAndDimensions) {
  const auto catalog = scenario_catalog();
  ASSERT_EQ(catalog.size(), 6u);
  const std::array<ScenarioKind, 6> order{ScenarioKind::Volunteering, ScenarioKind::Helping,
                                          ScenarioKind::Donating,     ScenarioKind::Cooperation,
                                          ScenarioKind::Recycling,    ScenarioKind::Sharing};
  for (std::size_t i = 0; i < 6; ++i) {
    EXPECT_EQ(catalog[i].kind, order[i]);
    EXPECT_FALSE(catalog[i].narrative.empty());
  }
  EXPECT_EQ(catalog[0].dimensions.cost_level, Level::High);
  EXPECT_EQ(catalog[1].dimensions.dependency_level, Level::High);
  EXPECT_EQ(catalog[3].dimensions.reward_visibility, Level::High);
  EXPECT_NO_THROW(validate_catalog(catalog));
}

TEST(Scenario, CatalogValidation) {
  auto catalog = scenario_catalog();
  std::swap(catalog[0], catalog[1]);
  EXPECT_PROSIM_ERROR(validate_catalog(catalog), ErrorKind::InvalidSpec);
  catalog = scenario_catalog();
  catalog.pop_back();
  EXPECT_PROSIM_ERROR(validate_catalog(catalog), ErrorKind::InvalidSpec);
  catalog = scenario_catalog();
  catalog[2].narrative.clear();
  EXPECT_PROSIM_ERROR(validate_catalog(catalog), ErrorKind::InvalidSpec);
}

TEST(Scenario, PromptBlockOrder) {
  Scenario s{ScenarioKind::Helping, "A neighbor needs help.", {}};
  const std::vector<Observation> obs{{3, 5}, {9, 2}};
  const auto prompt = build_scenario_prompt(s, "PERSONA", std::string_view("CONTEXT"), obs, 4);
  const std::string expected =
      "PERSONA\n\nScenario (Helping): A neighbor needs help.\n\nCONTEXT\n\n"
      "Your previous rating for this scenario was 4.\n\n"
      "In the last round you observed the following ratings from your neighbors:\n"
      "- Agent 3 rated 5.\n- Agent 9 rated 2.\n\n" +
      std::string(kIntentionInstruction);
  EXPECT_EQ(prompt, expected);
}

TEST(Scenario, AbsentBlocksAreOmitted) {
  Scenario s{ScenarioKind::Sharing, "Share tools.", {}};
  const auto bare = build_scenario_prompt(s, "P", std::nullopt, {}, std::nullopt);
  EXPECT_EQ(bare, "P\n\nScenario (Sharing): Share tools.\n\n" + std::string(kIntentionInstruction));
  EXPECT_EQ(build_scenario_prompt(s, "P", std::string_view(""), {}, std::nullopt), bare);
  EXPECT_EQ(bare.find("previous"), std::string::npos);
  EXPECT_EQ(bare.find("neighbors"), std::string::npos);
}

TEST(Scenario, ObservationRangeChecked) {
  Scenario s{ScenarioKind::Sharing, "Share tools.", {}};
  const std::vector<Observation> bad{{1, 8}};
  EXPECT_PROSIM_ERROR(build_scenario_prompt(s, "P", std::nullopt, bad, std::nullopt),
                      ErrorKind::InvalidParameters);
}

TEST(Scenario, LikertParsing) {
  EXPECT_EQ(try_parse_likert("5"), 5);
  EXPECT_EQ(try_parse_likert("I'd say 6."), 6);
  EXPECT_EQ(try_parse_likert("Rating: 4/7"), 4);
  EXPECT_EQ(try_parse_likert("**3**"), 3);
  EXPECT_EQ(try_parse_likert("8 is too high, so 2"), 2);
  EXPECT_EQ(try_parse_likert("v2 then 7"), 7);
  EXPECT_EQ(try_parse_likert("-3"), std::nullopt);
  EXPECT_EQ(try_parse_likert("4.5"), std::nullopt);
  EXPECT_EQ(try_parse_likert("10"), std::nullopt);
  EXPECT_EQ(try_parse_likert("0"), std::nullopt);
  EXPECT_EQ(try_parse_likert("no idea"), std::nullopt);
  EXPECT_EQ(parse_likert(" 1 ").value, 1);
  EXPECT_PROSIM_ERROR(parse_likert("seven"), ErrorKind::ParseFailure);
}

}  // namespace
}  // namespace prosim
