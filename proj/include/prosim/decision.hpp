#pragma once

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdint>
#include <optional>
#include <string>
#include <string_view>

#include "prosim/enum_names.hpp"
#include "prosim/error.hpp"
#include "prosim/policy.hpp"
#include "prosim/population.hpp"
#include "prosim/random.hpp"
#include "prosim/scenario.hpp"

namespace prosim {

enum class QueryKind { ScenarioIntention, PunishChoice, UnfairnessRating };

template <>
struct EnumNames<QueryKind> {
  static constexpr std::array<std::string_view, 3> names{"scenario_intention", "punish_choice",
                                                         "unfairness_rating"};
};

/// Third-party punishment offer: Player 1 gives `allocation` of the $30 pot
/// to Player 2; punishing costs the judge `cost`.
struct PunishOffer {
  int allocation = 0;
  int cost = 1;
  bool operator==(const PunishOffer&) const = default;
};

/// Structured view of what the prompt encodes. Text backends read the prompt;
/// the synthetic backend reads this.
struct DecisionState {
  std::optional<int> prior;             // own rating at t-1
  std::optional<double> neighbor_mean;  // mean t-1 rating of activated neighbors
  double unfairness = 1.0;              // perceived unfairness u on [1, 7]
  std::size_t scenario_index = 0;
  std::optional<std::size_t> policy_index;
  std::optional<PunishOffer> offer;
};

struct DecisionRequest {
  const AgentProfile* agent = nullptr;
  QueryKind query = QueryKind::ScenarioIntention;
  std::string prompt;
  int round = 0;  // iteration t, or trial index for punish_choice
  DecisionState state;
};

struct DecisionResponse {
  std::optional<int> likert;
  std::optional<bool> punish;
  std::string raw_text;
  std::string backend_name;
  std::uint64_t latency_ms = 0;

  bool operator==(const DecisionResponse&) const = default;
};

/// Any decision source. Implementations must be safe to call concurrently.
class DecisionBackend {
 public:
  virtual ~DecisionBackend() = default;
  virtual DecisionResponse decide(const DecisionRequest& request) const = 0;
  virtual std::string name() const = 0;

  /// True when the backend's unfairness_rating answer should replace the
  /// model-side unfairness state (text backends self-report).
  virtual bool reports_unfairness() const noexcept { return false; }
};

inline void validate_request(const DecisionRequest& request) {
  require(request.agent != nullptr, ErrorKind::InvalidParameters, "request has no agent");
  require(!request.prompt.empty(), ErrorKind::InvalidParameters, "empty prompt");
  if (request.query == QueryKind::PunishChoice) {
    require(request.state.offer.has_value(), ErrorKind::InvalidParameters,
            "punish_choice request without an offer");
  }
}

inline void validate_response(QueryKind query, const DecisionResponse& response) {
  const bool wants_likert = query != QueryKind::PunishChoice;
  require(response.likert.has_value() == wants_likert &&
              response.punish.has_value() != wants_likert,
          ErrorKind::ParseFailure,
          "response fields do not match query " + std::string(enum_name(query)));
  if (response.likert) {
    require(*response.likert >= kLikertMin && *response.likert <= kLikertMax,
            ErrorKind::ParseFailure, "likert value out of range");
  }
}

/// Backend-agnostic entry point: validates the request and the response shape.
inline DecisionResponse decide(const DecisionBackend& backend, const DecisionRequest& request) {
  validate_request(request);
  auto response = backend.decide(request);
  validate_response(request.query, response);
  return response;
}

struct UnfairnessParams {
  double gain = 1.0;               // delta: per-round increase when directly affected
  double decay = 0.08;             // rho: relaxation toward 1 when not exposed this round
  double reward_gain_scale = 1.0;  // multiplies gain under reward asymmetry
  double burden_gain_scale = 0.6;  // multiplies gain under burden asymmetry

  double gain_for(InequityKind kind) const noexcept {
    return gain * (kind == InequityKind::RewardAsymmetry ? reward_gain_scale : burden_gain_scale);
  }
};

/// u_next = clamp(u + d*[direct] + d/2*[indirect] - rho*(u-1)*[neither], 1, 7).
inline double update_unfairness(double gain, double decay, double u_prev, bool directly_affected,
                                bool indirectly_exposed) {
  double u = u_prev;
  if (directly_affected) u += gain;
  if (indirectly_exposed) u += gain / 2.0;
  if (!directly_affected && !indirectly_exposed) u -= decay * (u_prev - 1.0);
  return std::clamp(u, 1.0, 7.0);
}

inline double update_unfairness(const UnfairnessParams& params, InequityKind kind, double u_prev,
                                bool directly_affected, bool indirectly_exposed) {
  return update_unfairness(params.gain_for(kind), params.decay, u_prev, directly_affected,
                           indirectly_exposed);
}

inline constexpr int kFairShare = 15;  // half of the $30 pot
inline constexpr double kMaxCost = 10.0;

struct SyntheticParams {
  double intercept = 4.3;
  std::array<double, kTraitCount> trait_weights{0.30, 0.20, 0.35, 0.15, 0.05,
                                                0.05, 0.05, 0.10, -0.05};
  std::array<double, kScenarioCount> scenario_offsets{0.2, -0.1, -0.35, 0.3, 0.15, -0.25};
  std::array<double, kPolicyCount> policy_offsets{0.4, 0.8, 0.2, 0.5};
  double conformity = 0.25;              // lambda
  double unfairness_sensitivity = 0.3;   // gamma
  UnfairnessParams unfairness{};
  double punish_inequity_weight = 1.0;   // a
  double punish_cost_weight = 0.8;       // b
  double punish_trait_weight = 0.5;      // c
  double punish_threshold = 0.1;         // theta
  double noise_sd = 0.0;                 // 0 gives bit-stable traces
  Seed noise_seed = 0;

  void validate() const {
    auto finite = [](double x) { return std::isfinite(x); };
    bool ok = finite(intercept) && finite(punish_inequity_weight) && finite(punish_cost_weight) &&
              finite(punish_trait_weight) && finite(punish_threshold);
    for (double w : trait_weights) ok = ok && finite(w);
    for (double w : scenario_offsets) ok = ok && finite(w);
    for (double w : policy_offsets) ok = ok && finite(w);
    require(ok, ErrorKind::InvalidSpec, "synthetic parameters must be finite");
    require(finite(conformity) && conformity >= 0.0, ErrorKind::InvalidSpec, "conformity < 0");
    require(finite(unfairness_sensitivity) && unfairness_sensitivity >= 0.0,
            ErrorKind::InvalidSpec, "unfairness_sensitivity < 0");
    require(finite(unfairness.gain) && unfairness.gain >= 0.0, ErrorKind::InvalidSpec,
            "inequity_unfairness_gain < 0");
    require(finite(unfairness.decay) && unfairness.decay >= 0.0 && unfairness.decay <= 1.0,
            ErrorKind::InvalidSpec, "unfairness_decay outside [0, 1]");
    require(unfairness.reward_gain_scale >= 0.0 && unfairness.burden_gain_scale >= 0.0,
            ErrorKind::InvalidSpec, "gain scales must be nonnegative");
    require(finite(noise_sd) && noise_sd >= 0.0, ErrorKind::InvalidSpec, "noise_sd < 0");
  }
};

namespace detail {

inline double synthetic_noise(const SyntheticParams& params, const DecisionRequest& request) {
  if (params.noise_sd == 0.0) return 0.0;
  Seed key = derive_seed(params.noise_seed, static_cast<std::uint64_t>(request.agent->id));
  key = derive_seed(key, static_cast<std::uint64_t>(request.query));
  key = derive_seed(key, static_cast<std::uint64_t>(request.round));
  key = derive_seed(key, static_cast<std::uint64_t>(request.state.scenario_index));
  key = derive_seed(key, request.state.policy_index.value_or(kPolicyCount));
  Rng rng(key);
  return params.noise_sd * rng.normal();
}

}  // namespace detail

/// Continuous intention score before rounding and clamping.
inline double synthetic_intention_score(const SyntheticParams& params, const TraitVector& traits,
                                        const DecisionState& state) {
  double score = params.intercept;
  for (std::size_t j = 0; j < kTraitCount; ++j) {
    score += params.trait_weights[j] * (traits.values[j] - kTraitMidpoint);
  }
  score += params.scenario_offsets.at(state.scenario_index);
  if (state.policy_index) score += params.policy_offsets.at(*state.policy_index);
  if (state.prior && state.neighbor_mean) {
    score += params.conformity * (*state.neighbor_mean - static_cast<double>(*state.prior));
  }
  score -= params.unfairness_sensitivity * (state.unfairness - 1.0);
  return score;
}

inline int to_likert(double score) noexcept {
  return static_cast<int>(std::clamp<long long>(round_half_up(score), kLikertMin, kLikertMax));
}

/// a*(15-x)/15 - b*(y/10) + c*(moral_identity + altruistic_tendency - 8)/6.
inline double synthetic_punish_score(const SyntheticParams& params, const TraitVector& traits,
                                     const PunishOffer& offer) {
  const double inequity = static_cast<double>(kFairShare - offer.allocation) / kFairShare;
  const double cost = static_cast<double>(offer.cost) / kMaxCost;
  const double disposition =
      (traits[Trait::MoralIdentity] + traits[Trait::AltruisticTendency] - 8.0) / 6.0;
  return params.punish_inequity_weight * inequity - params.punish_cost_weight * cost +
         params.punish_trait_weight * disposition;
}

inline DecisionResponse synthetic_decide(const SyntheticParams& params,
                                         const DecisionRequest& request) {
  validate_request(request);
  DecisionResponse out;
  out.backend_name = "synthetic";
  const auto& traits = request.agent->traits;
  switch (request.query) {
    case QueryKind::ScenarioIntention: {
      const double score = synthetic_intention_score(params, traits, request.state) +
                           detail::synthetic_noise(params, request);
      out.likert = to_likert(score);
      out.raw_text = std::to_string(*out.likert);
      break;
    }
    case QueryKind::PunishChoice: {
      const double score = synthetic_punish_score(params, traits, *request.state.offer) +
                           detail::synthetic_noise(params, request);
      out.punish = score > params.punish_threshold;
      out.raw_text = *out.punish ? "PUNISH" : "ACCEPT";
      break;
    }
    case QueryKind::UnfairnessRating: {
      out.likert = to_likert(request.state.unfairness);
      out.raw_text = std::to_string(*out.likert);
      break;
    }
  }
  return out;
}

class SyntheticBackend final : public DecisionBackend {
 public:
  explicit SyntheticBackend(SyntheticParams params = {}) : params_(std::move(params)) {
    params_.validate();
  }

  DecisionResponse decide(const DecisionRequest& request) const override {
    return synthetic_decide(params_, request);
  }
  std::string name() const override { return "synthetic"; }
  const SyntheticParams& params() const noexcept { return params_; }

 private:
  SyntheticParams params_;
};

}  // namespace prosim
