#pragma once

#include <array>
#include <cctype>
#include <optional>
#include <span>
#include <sstream>
#include <string>
#include <string_view>
#include <vector>

#include "prosim/enum_names.hpp"
#include "prosim/error.hpp"

namespace prosim {

enum class ScenarioKind { Volunteering, Helping, Donating, Cooperation, Recycling, Sharing };

template <>
struct EnumNames<ScenarioKind> {
  static constexpr std::array<std::string_view, 6> names{
      "Volunteering", "Helping", "Donating", "Cooperation", "Recycling", "Sharing"};
};

inline constexpr std::size_t kScenarioCount = 6;

enum class Level { Low, Medium, High };

template <>
struct EnumNames<Level> {
  static constexpr std::array<std::string_view, 3> names{"low", "medium", "high"};
};

struct ScenarioDimensions {
  Level cost_level = Level::Medium;
  Level norm_expectation = Level::Medium;
  Level reward_visibility = Level::Medium;
  Level dependency_level = Level::Medium;

  bool operator==(const ScenarioDimensions&) const = default;
};

struct Scenario {
  ScenarioKind kind = ScenarioKind::Volunteering;
  std::string narrative;
  ScenarioDimensions dimensions;

  bool operator==(const Scenario&) const = default;
};

/// Exactly one scenario per kind, in enum order.
using ScenarioCatalog = std::vector<Scenario>;

inline void validate_catalog(const ScenarioCatalog& catalog) {
  require(catalog.size() == kScenarioCount, ErrorKind::InvalidSpec,
          "scenario catalog must hold exactly 6 scenarios, got " + std::to_string(catalog.size()));
  for (std::size_t i = 0; i < catalog.size(); ++i) {
    require(catalog[i].kind == enum_at<ScenarioKind>(i), ErrorKind::InvalidSpec,
            "scenario " + std::to_string(i) + " must be " +
                std::string(enum_name(enum_at<ScenarioKind>(i))));
    require(!catalog[i].narrative.empty(), ErrorKind::InvalidSpec,
            "empty narrative for " + std::string(enum_name(catalog[i].kind)));
  }
}

/// Built-in narratives and dimension matrix. These are editable defaults
/// (data/scenarios.json mirrors them), not canonical study materials.
inline ScenarioCatalog scenario_catalog() {
  using L = Level;
  return {
      {ScenarioKind::Volunteering,
       "A local community center is looking for volunteers to help run a weekend food drive. "
       "Volunteering would take about six hours of your Saturday and you would not be paid.",
       {L::High, L::Medium, L::Medium, L::Low}},
      {ScenarioKind::Helping,
       "On your way home you see an elderly stranger struggling to carry heavy shopping bags "
       "up a flight of stairs. Helping would take a few minutes of your time.",
       {L::Low, L::High, L::Low, L::High}},
      {ScenarioKind::Donating,
       "A charity is raising money for families affected by a recent flood. You are asked "
       "whether you would donate part of this month's disposable income to the appeal.",
       {L::Medium, L::Medium, L::Low, L::Low}},
      {ScenarioKind::Cooperation,
       "Your neighborhood is organizing a joint effort to clean and repair a shared park. The "
       "project only succeeds if enough residents contribute their time and effort together.",
       {L::Medium, L::High, L::High, L::High}},
      {ScenarioKind::Recycling,
       "Your city has introduced a new waste-sorting program. Sorting your household waste "
       "correctly takes extra time every day and nobody checks whether you do it.",
       {L::Low, L::High, L::Low, L::Medium}},
      {ScenarioKind::Sharing,
       "You have found useful information about a free job-training program. Sharing it with "
       "others in your community could help them, although it may increase competition for "
       "the limited places.",
       {L::Low, L::Medium, L::Medium, L::Medium}},
  };
}

struct Observation {
  std::size_t neighbor = 0;
  int value = 0;  // neighbor's previous rating, 1..7
};

inline constexpr int kLikertMin = 1;
inline constexpr int kLikertMax = 7;

inline constexpr std::string_view kIntentionInstruction =
    "On a scale from 1 (very unlikely) to 7 (very likely), how likely are you to act "
    "prosocially in this situation? Answer with a single integer from 1 to 7.";

/// Persona, narrative, then the optional policy/context, prior-rating and
/// neighbor blocks, then the response instruction. Blocks are separated by a
/// blank line; an optional block appears iff its input is present (an empty
/// observation list counts as absent).
inline std::string build_scenario_prompt(const Scenario& scenario, std::string_view persona,
                                         std::optional<std::string_view> context,
                                         std::span<const Observation> observations,
                                         std::optional<int> prior) {
  for (const auto& obs : observations) {
    require(obs.value >= kLikertMin && obs.value <= kLikertMax, ErrorKind::InvalidParameters,
            "observed rating " + std::to_string(obs.value) + " outside [1, 7]");
  }
  std::ostringstream os;
  os << persona << "\n\n";
  os << "Scenario (" << enum_name(scenario.kind) << "): " << scenario.narrative << "\n\n";
  if (context && !context->empty()) os << *context << "\n\n";
  if (prior) os << "Your previous rating for this scenario was " << *prior << ".\n\n";
  if (!observations.empty()) {
    os << "In the last round you observed the following ratings from your neighbors:\n";
    for (const auto& obs : observations) {
      os << "- Agent " << obs.neighbor << " rated " << obs.value << ".\n";
    }
    os << '\n';
  }
  os << kIntentionInstruction;
  return os.str();
}

struct LikertResponse {
  int value = kLikertMin;
  std::string raw_text;
};

/// First standalone integer token in [1, 7]. Digits glued to letters, signs
/// or decimal points ("v2", "-3", "4.5") are not standalone.
inline std::optional<int> try_parse_likert(std::string_view text) {
  const auto is_alnum = [](char c) { return std::isalnum(static_cast<unsigned char>(c)) != 0; };
  const auto is_digit = [](char c) { return std::isdigit(static_cast<unsigned char>(c)) != 0; };
  std::size_t i = 0;
  while (i < text.size()) {
    if (!is_digit(text[i])) {
      ++i;
      continue;
    }
    const std::size_t start = i;
    while (i < text.size() && is_digit(text[i])) ++i;
    const std::size_t end = i;

    bool standalone = true;
    if (start > 0) {
      const char before = text[start - 1];
      if (is_alnum(before) || before == '-' || before == '+') standalone = false;
      if (before == '.' && start > 1 && is_digit(text[start - 2])) standalone = false;
    }
    if (end < text.size()) {
      const char after = text[end];
      if (is_alnum(after)) standalone = false;
      if ((after == '.' || after == ',') && end + 1 < text.size() && is_digit(text[end + 1]))
        standalone = false;
    }
    if (!standalone || end - start > 1) continue;
    const int value = text[start] - '0';
    if (value >= kLikertMin && value <= kLikertMax) return value;
  }
  return std::nullopt;
}

inline LikertResponse parse_likert(std::string_view text) {
  const auto value = try_parse_likert(text);
  if (!value) {
    fail(ErrorKind::ParseFailure,
         "no rating in [1, 7] found in '" + std::string(text.substr(0, 200)) + "'");
  }
  return {*value, std::string(text)};
}

}  // namespace prosim
