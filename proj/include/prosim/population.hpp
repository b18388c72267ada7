#pragma once

#include <algorithm>
#include <array>
#include <cmath>
#include <cstddef>
#include <numeric>
#include <sstream>
#include <string>
#include <vector>

#include "prosim/enum_names.hpp"
#include "prosim/error.hpp"
#include "prosim/random.hpp"

namespace prosim {

enum class Gender { Female, Male };
enum class Education { Primary, Secondary, Tertiary, Postgraduate };
enum class Income { Low, Middle, High };
enum class Employment { Employed, SelfEmployed, Unemployed, Student, Retired };

template <>
struct EnumNames<Gender> {
  static constexpr std::array<std::string_view, 2> names{"female", "male"};
};
template <>
struct EnumNames<Education> {
  static constexpr std::array<std::string_view, 4> names{"primary", "secondary", "tertiary",
                                                         "postgraduate"};
};
template <>
struct EnumNames<Income> {
  static constexpr std::array<std::string_view, 3> names{"low", "middle", "high"};
};
template <>
struct EnumNames<Employment> {
  static constexpr std::array<std::string_view, 5> names{"employed", "self-employed",
                                                         "unemployed", "student", "retired"};
};

inline constexpr int kMinAge = 18;
inline constexpr int kMaxAge = 80;

struct Demographics {
  int age = kMinAge;
  Gender gender = Gender::Female;
  Education education = Education::Secondary;
  Income income = Income::Middle;
  Employment employment = Employment::Employed;

  bool operator==(const Demographics&) const = default;
};

/// Four prosocial dispositions followed by the Big Five, in that order.
enum class Trait {
  EmpathicConcern,
  MoralIdentity,
  AltruisticTendency,
  SocialResponsibility,
  Openness,
  Conscientiousness,
  Extraversion,
  Agreeableness,
  Neuroticism,
};

template <>
struct EnumNames<Trait> {
  static constexpr std::array<std::string_view, 9> names{
      "empathic_concern", "moral_identity", "altruistic_tendency",
      "social_responsibility", "openness", "conscientiousness",
      "extraversion", "agreeableness", "neuroticism"};
};

inline constexpr std::size_t kTraitCount = 9;
inline constexpr double kTraitMin = 1.0;
inline constexpr double kTraitMax = 7.0;
inline constexpr double kTraitMidpoint = 4.0;

/// Nine trait scores on the 7-point scale, indexed by Trait.
struct TraitVector {
  std::array<double, kTraitCount> values{};

  double operator[](Trait t) const noexcept { return values[enum_index(t)]; }
  double& operator[](Trait t) noexcept { return values[enum_index(t)]; }

  static TraitVector filled(double v) noexcept {
    TraitVector out;
    out.values.fill(v);
    return out;
  }

  bool operator==(const TraitVector&) const = default;
};

struct AgentProfile {
  std::size_t id = 0;
  Demographics demographics;
  TraitVector traits;
  std::string persona;

  bool operator==(const AgentProfile&) const = default;
};

struct AgeBucket {
  int min_age = kMinAge;
  int max_age = kMaxAge;  // inclusive
  double probability = 0.0;
};

/// Per-field categorical tables. Defaults are illustrative, not census data;
/// replace them through the configuration file.
struct DemographicTables {
  std::vector<AgeBucket> age{{18, 24, 0.12}, {25, 34, 0.20}, {35, 44, 0.20},
                             {45, 54, 0.20}, {55, 64, 0.16}, {65, 80, 0.12}};
  std::array<double, 2> gender{0.49, 0.51};
  std::array<double, 4> education{0.25, 0.40, 0.28, 0.07};
  std::array<double, 3> income{0.35, 0.50, 0.15};
  std::array<double, 5> employment{0.55, 0.12, 0.06, 0.10, 0.17};
};

struct TraitParams {
  double mean = kTraitMidpoint;
  double sd = 1.0;
};

struct PopulationSpec {
  std::size_t n = 104;
  DemographicTables demographics;
  std::array<TraitParams, kTraitCount> traits{};
  Seed seed = 42;

  void validate() const;
};

namespace detail {

inline constexpr double kTableTolerance = 1e-9;

template <class Range>
void validate_table(const Range& probs, std::string_view field) {
  double total = 0.0;
  for (double p : probs) {
    require(std::isfinite(p) && p >= 0.0, ErrorKind::InvalidSpec,
            "negative or non-finite probability in " + std::string(field) + " table");
    total += p;
  }
  require(std::abs(total - 1.0) <= kTableTolerance, ErrorKind::InvalidSpec,
          std::string(field) + " table sums to " + std::to_string(total) + ", expected 1");
}

/// Inverse-CDF draw from a categorical table.
template <class Range>
std::size_t draw_category(const Range& probs, Rng& rng) {
  const double u = rng.uniform01();
  double cumulative = 0.0;
  std::size_t last_positive = 0;
  std::size_t i = 0;
  for (double p : probs) {
    if (p > 0.0) last_positive = i;
    cumulative += p;
    if (u < cumulative && p > 0.0) return i;
    ++i;
  }
  return last_positive;  // u fell in the rounding gap above the final cumulative sum
}

}  // namespace detail

inline void PopulationSpec::validate() const {
  require(n >= 1, ErrorKind::InvalidSpec, "population size must be at least 1");
  require(!demographics.age.empty(), ErrorKind::InvalidSpec, "age table is empty");
  std::vector<double> age_probs;
  for (const auto& bucket : demographics.age) {
    require(bucket.min_age >= kMinAge && bucket.max_age <= kMaxAge &&
                bucket.min_age <= bucket.max_age,
            ErrorKind::InvalidSpec,
            "age bucket [" + std::to_string(bucket.min_age) + ", " +
                std::to_string(bucket.max_age) + "] outside [18, 80]");
    age_probs.push_back(bucket.probability);
  }
  detail::validate_table(age_probs, "age");
  detail::validate_table(demographics.gender, "gender");
  detail::validate_table(demographics.education, "education");
  detail::validate_table(demographics.income, "income");
  detail::validate_table(demographics.employment, "employment");
  for (std::size_t j = 0; j < kTraitCount; ++j) {
    const auto& tp = traits[j];
    const auto name = std::string(enum_name(enum_at<Trait>(j)));
    require(std::isfinite(tp.mean), ErrorKind::InvalidSpec, "non-finite mean for " + name);
    require(std::isfinite(tp.sd) && tp.sd >= 0.0, ErrorKind::InvalidSpec,
            "negative standard deviation for " + name);
  }
}

enum class TraitLevel { Low, Moderate, High };

template <>
struct EnumNames<TraitLevel> {
  static constexpr std::array<std::string_view, 3> names{"low", "moderate", "high"};
};

/// low below 3, high above 5, moderate on [3, 5].
constexpr TraitLevel trait_level(double score) noexcept {
  if (score < 3.0) return TraitLevel::Low;
  if (score > 5.0) return TraitLevel::High;
  return TraitLevel::Moderate;
}

inline std::string trait_phrase(Trait trait) {
  std::string out(enum_name(trait));
  std::replace(out.begin(), out.end(), '_', ' ');
  return out;
}

inline std::string render_persona(const AgentProfile& profile) {
  const auto& d = profile.demographics;
  std::ostringstream os;
  os << "You are " << d.age << " years old. ";
  os << "Your gender is " << enum_name(d.gender) << ". ";
  os << "Your highest level of education is " << enum_name(d.education) << ". ";
  os << "Your income is in the " << enum_name(d.income) << " bracket. ";
  os << "Your employment status is " << enum_name(d.employment) << ".";
  for (std::size_t j = 0; j < kTraitCount; ++j) {
    const auto trait = enum_at<Trait>(j);
    os << " You have a " << enum_name(trait_level(profile.traits.values[j])) << " level of "
       << trait_phrase(trait) << ".";
  }
  return os.str();
}

/// Draws n profiles. One RNG stream is consumed agent by agent in a fixed
/// field order, so the output is a pure function of the spec.
inline std::vector<AgentProfile> sample_population(const PopulationSpec& spec) {
  spec.validate();
  Rng rng(spec.seed);
  std::vector<double> age_probs;
  for (const auto& bucket : spec.demographics.age) age_probs.push_back(bucket.probability);

  std::vector<AgentProfile> out;
  out.reserve(spec.n);
  for (std::size_t i = 0; i < spec.n; ++i) {
    AgentProfile p;
    p.id = i;
    const auto& bucket = spec.demographics.age[detail::draw_category(age_probs, rng)];
    const auto span = static_cast<std::uint64_t>(bucket.max_age - bucket.min_age + 1);
    p.demographics.age = bucket.min_age + static_cast<int>(rng.below(span));
    p.demographics.gender =
        enum_at<Gender>(detail::draw_category(spec.demographics.gender, rng));
    p.demographics.education =
        enum_at<Education>(detail::draw_category(spec.demographics.education, rng));
    p.demographics.income =
        enum_at<Income>(detail::draw_category(spec.demographics.income, rng));
    p.demographics.employment =
        enum_at<Employment>(detail::draw_category(spec.demographics.employment, rng));
    for (std::size_t j = 0; j < kTraitCount; ++j) {
      const auto& tp = spec.traits[j];
      const double draw = rng.normal(tp.mean, tp.sd);
      p.traits.values[j] = std::clamp(draw, kTraitMin, kTraitMax);
    }
    p.persona = render_persona(p);
    out.push_back(std::move(p));
  }
  return out;
}

}  // namespace prosim
