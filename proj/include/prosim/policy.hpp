#pragma once

#include <algorithm>
#include <array>
#include <string>
#include <utility>
#include <vector>

#include "prosim/enum_names.hpp"
#include "prosim/error.hpp"
#include "prosim/population.hpp"
#include "prosim/random.hpp"

namespace prosim {

enum class PolicyKind { MoralIndoctrination, RegulatoryEnforcement, SocialComparison, EconomicIncentives };
enum class Mechanism { Cognitive, Behavioral };
enum class Compliance { Voluntary, Compulsory };

template <>
struct EnumNames<PolicyKind> {
  static constexpr std::array<std::string_view, 4> names{
      "MoralIndoctrination", "RegulatoryEnforcement", "SocialComparison", "EconomicIncentives"};
};
template <>
struct EnumNames<Mechanism> {
  static constexpr std::array<std::string_view, 2> names{"cognitive", "behavioral"};
};
template <>
struct EnumNames<Compliance> {
  static constexpr std::array<std::string_view, 2> names{"voluntary", "compulsory"};
};

inline constexpr std::size_t kPolicyCount = 4;

/// The fixed 2x2 placement of each intervention.
constexpr std::pair<Mechanism, Compliance> taxonomy_of(PolicyKind kind) noexcept {
  switch (kind) {
    case PolicyKind::MoralIndoctrination: return {Mechanism::Cognitive, Compliance::Compulsory};
    case PolicyKind::RegulatoryEnforcement: return {Mechanism::Behavioral, Compliance::Compulsory};
    case PolicyKind::SocialComparison: return {Mechanism::Cognitive, Compliance::Voluntary};
    case PolicyKind::EconomicIncentives: return {Mechanism::Behavioral, Compliance::Voluntary};
  }
  return {Mechanism::Cognitive, Compliance::Voluntary};
}

class PolicyIntervention {
 public:
  /// Rejects any (mechanism, compliance) pair that disagrees with taxonomy_of(kind).
  PolicyIntervention(PolicyKind kind, Mechanism mechanism, Compliance compliance, std::string text)
      : kind_(kind), mechanism_(mechanism), compliance_(compliance), text_(std::move(text)) {
    const auto [m, c] = taxonomy_of(kind);
    require(m == mechanism && c == compliance, ErrorKind::InvalidSpec,
            std::string(enum_name(kind)) + " must be (" + std::string(enum_name(m)) + ", " +
                std::string(enum_name(c)) + ")");
    require(!text_.empty(), ErrorKind::InvalidSpec,
            "empty prompt text for " + std::string(enum_name(kind)));
  }

  PolicyIntervention(PolicyKind kind, std::string text)
      : PolicyIntervention(kind, taxonomy_of(kind).first, taxonomy_of(kind).second,
                           std::move(text)) {}

  PolicyKind kind() const noexcept { return kind_; }
  Mechanism mechanism() const noexcept { return mechanism_; }
  Compliance compliance() const noexcept { return compliance_; }
  const std::string& text() const noexcept { return text_; }

  bool operator==(const PolicyIntervention&) const = default;

 private:
  PolicyKind kind_;
  Mechanism mechanism_;
  Compliance compliance_;
  std::string text_;
};

using PolicyCatalog = std::vector<PolicyIntervention>;

inline void validate_policy_catalog(const PolicyCatalog& catalog) {
  require(catalog.size() == kPolicyCount, ErrorKind::InvalidSpec,
          "policy catalog must hold exactly 4 interventions");
  for (std::size_t i = 0; i < catalog.size(); ++i) {
    require(catalog[i].kind() == enum_at<PolicyKind>(i), ErrorKind::InvalidSpec,
            "policy " + std::to_string(i) + " must be " +
                std::string(enum_name(enum_at<PolicyKind>(i))));
  }
}

// Default framings; data/policies.json carries the same text for editing.
inline PolicyCatalog policy_catalog() {
  return {
      {PolicyKind::MoralIndoctrination,
       "Policy notice: Community leaders remind every resident that helping others is a core "
       "moral duty. Acting for the common good is what a good person does, and each of us is "
       "expected to live up to these shared values."},
      {PolicyKind::RegulatoryEnforcement,
       "Policy notice: A new local regulation requires residents to take part in activities "
       "like this one. Compliance is recorded, and residents who fail to participate may face "
       "official penalties."},
      {PolicyKind::SocialComparison,
       "Policy notice: The community now publishes how often residents take part in activities "
       "like this one. Most of your neighbors have already chosen to participate."},
      {PolicyKind::EconomicIncentives,
       "Policy notice: Residents who take part in activities like this one receive a small "
       "cash reward, while those who do not forgo the reward."},
  };
}

enum class InequityKind { RewardAsymmetry, BurdenAsymmetry };

template <>
struct EnumNames<InequityKind> {
  static constexpr std::array<std::string_view, 2> names{"reward", "burden"};
};

struct InequityCondition {
  InequityKind kind = InequityKind::BurdenAsymmetry;
  std::vector<std::size_t> affected;  // sorted agent ids
  double fraction = 0.0;
  Seed seed = 0;

  bool is_affected(std::size_t agent) const {
    return std::binary_search(affected.begin(), affected.end(), agent);
  }

  bool operator==(const InequityCondition&) const = default;
};

/// round-half-up(fraction * n): 0.2 of 104 gives 21 (floor would give 20).
inline std::size_t inequity_count(std::size_t n, double fraction) noexcept {
  return round_fraction(fraction, n);
}

inline InequityCondition assign_inequity(std::size_t n, InequityKind kind, double fraction,
                                         Seed seed) {
  require(fraction >= 0.0 && fraction <= 1.0, ErrorKind::InvalidParameters,
          "inequity fraction must lie in [0, 1]");
  Rng rng(seed);
  return {kind, rng.sample_indices(n, inequity_count(n, fraction)), fraction, seed};
}

inline std::string render_inequity_context(const InequityCondition& condition,
                                           std::size_t agent_id, Income income) {
  const bool affected = condition.is_affected(agent_id);
  if (condition.kind == InequityKind::RewardAsymmetry) {
    if (!affected) {
      return "Policy context: Your community recognizes prosocial contributions. Like other "
             "residents, you receive the standard recognition and benefits for what you "
             "contribute.";
    }
    return "Policy context: Your community recognizes prosocial contributions, but not "
           "equally. Other residents who contribute receive public recognition and benefits, "
           "while your contributions go unrecognized and unrewarded even though you contribute "
           "just as much.";
  }
  if (!affected) {
    return "Policy context: Your community asks every resident to carry out the same "
           "prosocial tasks. Like other residents, you carry the standard share of the burden.";
  }
  std::string text =
      "Policy context: Your community asks every resident to carry out the same prosocial "
      "tasks, but the burden is not shared equally. You are assigned a disproportionate share "
      "of the cost and effort. ";
  switch (income) {
    case Income::Low:
      text += "Because your income is low, this fixed burden weighs far more heavily on you "
              "than on better-off residents.";
      break;
    case Income::Middle:
      text += "On your middle income, this extra burden is a real strain compared with what "
              "others are asked to give.";
      break;
    case Income::High:
      text += "Even with your high income, you are asked to give more effort than others for "
              "the same task.";
      break;
  }
  return text;
}

}  // namespace prosim
