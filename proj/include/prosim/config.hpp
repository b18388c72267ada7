#pragma once

#include <chrono>
#include <filesystem>
#include <fstream>
#include <optional>
#include <set>
#include <sstream>
#include <string>

#include <json.hpp>

#include "prosim/analysis.hpp"
#include "prosim/decision.hpp"
#include "prosim/engine.hpp"
#include "prosim/error.hpp"
#include "prosim/llm_client.hpp"
#include "prosim/policy.hpp"
#include "prosim/population.hpp"
#include "prosim/scenario.hpp"
#include "prosim/tpp.hpp"

namespace prosim {

using Json = nlohmann::json;

enum class BackendKind { Synthetic, Llm };

template <>
struct EnumNames<BackendKind> {
  static constexpr std::array<std::string_view, 2> names{"synthetic", "llm"};
};

/// The single configuration document shared by every command.
struct AppConfig {
  Seed seed = 42;
  PopulationSpec population;
  NetworkParams network;
  int iterations = 30;
  double activation_fraction = 0.1;
  InequitySettings inequity;
  TrialGrid tpp;
  BackendKind backend = BackendKind::Synthetic;
  SyntheticParams synthetic;
  LlmBackendConfig llm;
  std::optional<std::string> scenarios_file;
  std::optional<std::string> policies_file;
  std::optional<std::string> human_reference_file;
  std::size_t jobs = 1;

  SeedSet seeds() const noexcept { return SeedSet::derive(seed); }

  /// Population spec with its seed taken from the master seed.
  PopulationSpec population_spec() const {
    PopulationSpec spec = population;
    spec.seed = seeds().population;
    return spec;
  }

  SimulationConfig simulation() const {
    SimulationConfig sim;
    sim.population = population_spec();
    sim.network = network;
    sim.iterations = iterations;
    sim.activation_fraction = activation_fraction;
    sim.inequity = inequity;
    sim.unfairness = synthetic.unfairness;
    sim.master_seed = seed;
    return sim;
  }

  SyntheticParams synthetic_params() const {
    SyntheticParams p = synthetic;
    p.noise_seed = seeds().noise;
    return p;
  }

  void validate() const {
    population.validate();
    simulation().validate();
    tpp.validate();
    synthetic.validate();
    llm.validate();
    require(jobs >= 1, ErrorKind::InvalidSpec, "jobs must be at least 1");
  }
};

namespace detail {

inline void check_keys(const Json& obj, std::initializer_list<std::string_view> allowed,
                       std::string_view where) {
  require(obj.is_object(), ErrorKind::DataError, std::string(where) + " must be an object");
  for (const auto& [key, _] : obj.items()) {
    bool known = false;
    for (auto a : allowed) known = known || key == a;
    require(known, ErrorKind::DataError,
            "unknown key '" + key + "' in " + std::string(where));
  }
}

template <class T>
void read_if(const Json& obj, const char* key, T& out) {
  if (!obj.contains(key)) return;
  try {
    out = obj.at(key).get<T>();
  } catch (const Json::exception& e) {
    fail(ErrorKind::DataError, std::string("bad value for '") + key + "': " + e.what());
  }
}

/// Reads {name: value} for every enumerator of E into arr; absent names keep defaults.
template <class E, class Arr>
void read_named(const Json& obj, Arr& arr, std::string_view where) {
  require(obj.is_object(), ErrorKind::DataError, std::string(where) + " must be an object");
  for (const auto& [key, value] : obj.items()) {
    const E e = parse_enum<E>(key, where);
    require(value.is_number(), ErrorKind::DataError,
            std::string(where) + "." + key + " must be a number");
    arr[enum_index(e)] = value.template get<double>();
  }
}

template <class E, class Arr>
Json write_named(const Arr& arr) {
  Json out = Json::object();
  for (std::size_t i = 0; i < arr.size(); ++i) out[std::string(enum_name(enum_at<E>(i)))] = arr[i];
  return out;
}

}  // namespace detail

inline Json to_json(const PopulationSpec& spec) {
  Json age = Json::array();
  for (const auto& b : spec.demographics.age) {
    age.push_back({{"min", b.min_age}, {"max", b.max_age}, {"p", b.probability}});
  }
  Json traits = Json::object();
  for (std::size_t j = 0; j < kTraitCount; ++j) {
    traits[std::string(enum_name(enum_at<Trait>(j)))] = {{"mean", spec.traits[j].mean},
                                                         {"sd", spec.traits[j].sd}};
  }
  return {{"n", spec.n},
          {"demographics",
           {{"age", age},
            {"gender", detail::write_named<Gender>(spec.demographics.gender)},
            {"education", detail::write_named<Education>(spec.demographics.education)},
            {"income", detail::write_named<Income>(spec.demographics.income)},
            {"employment", detail::write_named<Employment>(spec.demographics.employment)}}},
          {"traits", traits}};
}

inline void from_json_population(const Json& j, PopulationSpec& spec) {
  detail::check_keys(j, {"n", "demographics", "traits"}, "population");
  detail::read_if(j, "n", spec.n);
  if (j.contains("demographics")) {
    const auto& d = j.at("demographics");
    detail::check_keys(d, {"age", "gender", "education", "income", "employment"},
                       "population.demographics");
    if (d.contains("age")) {
      spec.demographics.age.clear();
      for (const auto& b : d.at("age")) {
        detail::check_keys(b, {"min", "max", "p"}, "age bucket");
        AgeBucket bucket;
        detail::read_if(b, "min", bucket.min_age);
        detail::read_if(b, "max", bucket.max_age);
        detail::read_if(b, "p", bucket.probability);
        spec.demographics.age.push_back(bucket);
      }
    }
    // A table given in the file replaces the default wholesale.
    auto table = [&](const char* key, auto& arr, auto tag) {
      using E = decltype(tag);
      if (!d.contains(key)) return;
      arr.fill(0.0);
      detail::read_named<E>(d.at(key), arr, key);
    };
    table("gender", spec.demographics.gender, Gender{});
    table("education", spec.demographics.education, Education{});
    table("income", spec.demographics.income, Income{});
    table("employment", spec.demographics.employment, Employment{});
  }
  if (j.contains("traits")) {
    const auto& t = j.at("traits");
    require(t.is_object(), ErrorKind::DataError, "population.traits must be an object");
    auto read_params = [](const Json& p, TraitParams& out) {
      detail::check_keys(p, {"mean", "sd"}, "trait parameters");
      detail::read_if(p, "mean", out.mean);
      detail::read_if(p, "sd", out.sd);
    };
    if (t.contains("default")) {
      TraitParams base;
      read_params(t.at("default"), base);
      spec.traits.fill(base);
    }
    for (const auto& [key, value] : t.items()) {
      if (key == "default") continue;
      read_params(value, spec.traits[enum_index(parse_enum<Trait>(key, "trait"))]);
    }
  }
}

inline Json to_json(const SyntheticParams& p) {
  return {{"intercept", p.intercept},
          {"trait_weights", detail::write_named<Trait>(p.trait_weights)},
          {"scenario_offsets", detail::write_named<ScenarioKind>(p.scenario_offsets)},
          {"policy_offsets", detail::write_named<PolicyKind>(p.policy_offsets)},
          {"conformity", p.conformity},
          {"unfairness_sensitivity", p.unfairness_sensitivity},
          {"inequity_unfairness_gain", p.unfairness.gain},
          {"unfairness_decay", p.unfairness.decay},
          {"reward_gain_scale", p.unfairness.reward_gain_scale},
          {"burden_gain_scale", p.unfairness.burden_gain_scale},
          {"punish_inequity_weight", p.punish_inequity_weight},
          {"punish_cost_weight", p.punish_cost_weight},
          {"punish_trait_weight", p.punish_trait_weight},
          {"punish_threshold", p.punish_threshold},
          {"noise_sd", p.noise_sd}};
}

inline void from_json_synthetic(const Json& j, SyntheticParams& p) {
  detail::check_keys(j,
                     {"intercept", "trait_weights", "scenario_offsets", "policy_offsets",
                      "conformity", "unfairness_sensitivity", "inequity_unfairness_gain",
                      "unfairness_decay", "reward_gain_scale", "burden_gain_scale",
                      "punish_inequity_weight", "punish_cost_weight", "punish_trait_weight",
                      "punish_threshold", "noise_sd"},
                     "backend.synthetic");
  detail::read_if(j, "intercept", p.intercept);
  if (j.contains("trait_weights"))
    detail::read_named<Trait>(j.at("trait_weights"), p.trait_weights, "trait_weights");
  if (j.contains("scenario_offsets"))
    detail::read_named<ScenarioKind>(j.at("scenario_offsets"), p.scenario_offsets,
                                     "scenario_offsets");
  if (j.contains("policy_offsets"))
    detail::read_named<PolicyKind>(j.at("policy_offsets"), p.policy_offsets, "policy_offsets");
  detail::read_if(j, "conformity", p.conformity);
  detail::read_if(j, "unfairness_sensitivity", p.unfairness_sensitivity);
  detail::read_if(j, "inequity_unfairness_gain", p.unfairness.gain);
  detail::read_if(j, "unfairness_decay", p.unfairness.decay);
  detail::read_if(j, "reward_gain_scale", p.unfairness.reward_gain_scale);
  detail::read_if(j, "burden_gain_scale", p.unfairness.burden_gain_scale);
  detail::read_if(j, "punish_inequity_weight", p.punish_inequity_weight);
  detail::read_if(j, "punish_cost_weight", p.punish_cost_weight);
  detail::read_if(j, "punish_trait_weight", p.punish_trait_weight);
  detail::read_if(j, "punish_threshold", p.punish_threshold);
  detail::read_if(j, "noise_sd", p.noise_sd);
}

inline Json to_json(const LlmBackendConfig& c) {
  return {{"endpoint", c.endpoint},          {"path", c.path},
          {"model", c.model_name},           {"temperature", c.temperature},
          {"max_retries", c.max_retries},    {"timeout_ms", c.timeout.count()},
          {"api_key_env", c.api_key_env}};
}

inline void from_json_llm(const Json& j, LlmBackendConfig& c) {
  detail::check_keys(j, {"endpoint", "path", "model", "temperature", "max_retries", "timeout_ms",
                         "api_key_env"},
                     "backend.llm");
  detail::read_if(j, "endpoint", c.endpoint);
  detail::read_if(j, "path", c.path);
  detail::read_if(j, "model", c.model_name);
  detail::read_if(j, "temperature", c.temperature);
  detail::read_if(j, "max_retries", c.max_retries);
  long long ms = c.timeout.count();
  detail::read_if(j, "timeout_ms", ms);
  c.timeout = std::chrono::milliseconds(ms);
  detail::read_if(j, "api_key_env", c.api_key_env);
}

inline Json to_json(const AppConfig& c) {
  Json inequity = {{"kind", c.inequity.kind ? Json(std::string(enum_name(*c.inequity.kind)))
                                            : Json("none")},
                   {"fraction", c.inequity.fraction}};
  Json out = {
      {"seed", c.seed},
      {"population", to_json(c.population)},
      {"network", {{"k", c.network.k}, {"p", c.network.p}}},
      {"dynamics",
       {{"iterations", c.iterations},
        {"activation_fraction", c.activation_fraction},
        {"inequity", inequity}}},
      {"tpp",
       {{"allocations", c.tpp.allocations},
        {"costs", c.tpp.costs},
        {"repeats", c.tpp.repeats},
        {"trials", c.tpp.trial_count},
        {"max_allocation", c.tpp.max_allocation}}},
      {"backend",
       {{"kind", std::string(enum_name(c.backend))},
        {"synthetic", to_json(c.synthetic)},
        {"llm", to_json(c.llm)}}},
      {"jobs", c.jobs}};
  if (c.scenarios_file) out["scenarios_file"] = *c.scenarios_file;
  if (c.policies_file) out["policies_file"] = *c.policies_file;
  if (c.human_reference_file) out["human_reference_file"] = *c.human_reference_file;
  return out;
}

/// Missing keys keep their defaults; unknown keys are rejected.
inline AppConfig config_from_json(const Json& j) {
  AppConfig c;
  detail::check_keys(j, {"seed", "population", "network", "dynamics", "tpp", "backend", "jobs",
                         "scenarios_file", "policies_file", "human_reference_file", "comment"},
                     "config");
  detail::read_if(j, "seed", c.seed);
  detail::read_if(j, "jobs", c.jobs);
  if (j.contains("population")) from_json_population(j.at("population"), c.population);
  if (j.contains("network")) {
    const auto& n = j.at("network");
    detail::check_keys(n, {"k", "p"}, "network");
    detail::read_if(n, "k", c.network.k);
    detail::read_if(n, "p", c.network.p);
  }
  if (j.contains("dynamics")) {
    const auto& d = j.at("dynamics");
    detail::check_keys(d, {"iterations", "activation_fraction", "inequity"}, "dynamics");
    detail::read_if(d, "iterations", c.iterations);
    detail::read_if(d, "activation_fraction", c.activation_fraction);
    if (d.contains("inequity")) {
      const auto& q = d.at("inequity");
      detail::check_keys(q, {"kind", "fraction"}, "dynamics.inequity");
      if (q.contains("kind")) {
        const auto kind = q.at("kind").get<std::string>();
        c.inequity.kind = kind == "none" ? std::nullopt
                                         : std::optional(parse_enum<InequityKind>(kind, "inequity"));
      }
      detail::read_if(q, "fraction", c.inequity.fraction);
    }
  }
  if (j.contains("tpp")) {
    const auto& t = j.at("tpp");
    detail::check_keys(t, {"allocations", "costs", "repeats", "trials", "max_allocation"}, "tpp");
    detail::read_if(t, "allocations", c.tpp.allocations);
    detail::read_if(t, "costs", c.tpp.costs);
    detail::read_if(t, "repeats", c.tpp.repeats);
    detail::read_if(t, "trials", c.tpp.trial_count);
    detail::read_if(t, "max_allocation", c.tpp.max_allocation);
  }
  if (j.contains("backend")) {
    const auto& b = j.at("backend");
    detail::check_keys(b, {"kind", "synthetic", "llm"}, "backend");
    if (b.contains("kind")) c.backend = parse_enum<BackendKind>(b.at("kind").get<std::string>(), "backend");
    if (b.contains("synthetic")) from_json_synthetic(b.at("synthetic"), c.synthetic);
    if (b.contains("llm")) from_json_llm(b.at("llm"), c.llm);
  }
  if (j.contains("scenarios_file")) c.scenarios_file = j.at("scenarios_file").get<std::string>();
  if (j.contains("policies_file")) c.policies_file = j.at("policies_file").get<std::string>();
  if (j.contains("human_reference_file"))
    c.human_reference_file = j.at("human_reference_file").get<std::string>();
  c.validate();
  return c;
}

inline std::string read_text_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  require(static_cast<bool>(in), ErrorKind::DataError, "cannot open " + path.string());
  std::ostringstream os;
  os << in.rdbuf();
  return os.str();
}

inline Json parse_json_text(const std::string& text, const std::string& what) {
  try {
    return Json::parse(text);
  } catch (const Json::exception& e) {
    fail(ErrorKind::DataError, "malformed JSON in " + what + ": " + e.what());
  }
}

inline AppConfig load_config(const std::filesystem::path& path) {
  return config_from_json(parse_json_text(read_text_file(path), path.string()));
}

// Catalog files --------------------------------------------------------------

inline Json to_json(const ScenarioCatalog& catalog) {
  Json arr = Json::array();
  for (const auto& s : catalog) {
    arr.push_back({{"kind", std::string(enum_name(s.kind))},
                   {"narrative", s.narrative},
                   {"cost_level", std::string(enum_name(s.dimensions.cost_level))},
                   {"norm_expectation", std::string(enum_name(s.dimensions.norm_expectation))},
                   {"reward_visibility", std::string(enum_name(s.dimensions.reward_visibility))},
                   {"dependency_level", std::string(enum_name(s.dimensions.dependency_level))}});
  }
  return {{"scenarios", arr}};
}

inline ScenarioCatalog scenario_catalog_from_json(const Json& j) {
  detail::check_keys(j, {"scenarios", "comment"}, "scenario catalog");
  ScenarioCatalog out;
  for (const auto& s : j.at("scenarios")) {
    detail::check_keys(s, {"kind", "narrative", "cost_level", "norm_expectation",
                           "reward_visibility", "dependency_level"},
                       "scenario");
    Scenario sc;
    sc.kind = parse_enum<ScenarioKind>(s.at("kind").get<std::string>(), "scenario");
    sc.narrative = s.at("narrative").get<std::string>();
    auto level = [&](const char* key) {
      return parse_enum<Level>(s.at(key).get<std::string>(), key);
    };
    sc.dimensions = {level("cost_level"), level("norm_expectation"), level("reward_visibility"),
                     level("dependency_level")};
    out.push_back(std::move(sc));
  }
  validate_catalog(out);
  return out;
}

inline Json to_json(const PolicyCatalog& catalog) {
  Json arr = Json::array();
  for (const auto& p : catalog) {
    arr.push_back({{"kind", std::string(enum_name(p.kind()))},
                   {"mechanism", std::string(enum_name(p.mechanism()))},
                   {"compliance", std::string(enum_name(p.compliance()))},
                   {"text", p.text()}});
  }
  return {{"policies", arr}};
}

inline PolicyCatalog policy_catalog_from_json(const Json& j) {
  detail::check_keys(j, {"policies", "comment"}, "policy catalog");
  PolicyCatalog out;
  for (const auto& p : j.at("policies")) {
    detail::check_keys(p, {"kind", "mechanism", "compliance", "text"}, "policy");
    out.emplace_back(parse_enum<PolicyKind>(p.at("kind").get<std::string>(), "policy"),
                     parse_enum<Mechanism>(p.at("mechanism").get<std::string>(), "mechanism"),
                     parse_enum<Compliance>(p.at("compliance").get<std::string>(), "compliance"),
                     p.at("text").get<std::string>());
  }
  validate_policy_catalog(out);
  return out;
}

inline Json to_json(const HumanReference& h) {
  Json per = Json::object();
  for (std::size_t s = 0; s < kScenarioCount; ++s)
    per[std::string(enum_name(enum_at<ScenarioKind>(s)))] = h.per_scenario[s];
  return {{"per_scenario", per}, {"overall", h.overall}, {"source", h.source}};
}

inline HumanReference human_reference_from_json(const Json& j) {
  detail::check_keys(j, {"per_scenario", "overall", "source", "comment"}, "human reference");
  HumanReference h;
  detail::read_named<ScenarioKind>(j.at("per_scenario"), h.per_scenario, "per_scenario");
  h.overall = j.at("overall").get<double>();
  detail::read_if(j, "source", h.source);
  h.validate();
  return h;
}

}  // namespace prosim
