#pragma once

#include <array>
#include <bit>
#include <cmath>
#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "prosim/error.hpp"
#include "prosim/population.hpp"

namespace prosim {

inline constexpr std::size_t kMaxShapleyPlayers = 20;

/// Shapley weights |S|!(n-|S|-1)!/n! indexed by coalition size |S|.
inline std::vector<double> shapley_weights(std::size_t players) {
  std::vector<double> w(players);
  for (std::size_t s = 0; s < players; ++s) {
    // exp(lgamma) keeps this finite for n up to kMaxShapleyPlayers.
    w[s] = std::exp(std::lgamma(static_cast<double>(s) + 1.0) +
                    std::lgamma(static_cast<double>(players - s)) -
                    std::lgamma(static_cast<double>(players) + 1.0));
  }
  return w;
}

/// Exact Shapley values by enumerating every coalition. `value(mask)` is the
/// worth of the coalition whose members are the set bits of mask.
template <class ValueFn>
std::vector<double> exact_shapley(std::size_t players, ValueFn&& value) {
  require(players >= 1 && players <= kMaxShapleyPlayers, ErrorKind::InvalidParameters,
          "exact enumeration supports 1.." + std::to_string(kMaxShapleyPlayers) + " players");
  const std::uint32_t full = 1u << players;
  std::vector<double> worth(full);
  for (std::uint32_t mask = 0; mask < full; ++mask) worth[mask] = value(mask);

  const auto weights = shapley_weights(players);
  std::vector<double> phi(players, 0.0);
  for (std::size_t j = 0; j < players; ++j) {
    const std::uint32_t bit = 1u << j;
    double total = 0.0;
    for (std::uint32_t mask = 0; mask < full; ++mask) {
      if (mask & bit) continue;
      total += weights[static_cast<std::size_t>(std::popcount(mask))] *
               (worth[mask | bit] - worth[mask]);
    }
    phi[j] = total;
  }
  return phi;
}

/// y = intercept + sum_j weights[j] * x_j.
struct LinearModel {
  double intercept = 0.0;
  std::vector<double> weights;

  double predict(std::span<const double> x) const {
    double y = intercept;
    for (std::size_t j = 0; j < weights.size(); ++j) y += weights[j] * x[j];
    return y;
  }
};

/// Ordinary least squares with intercept. Solves the centered normal equations
/// by Cholesky; a rank-deficient design raises SingularMatrix.
inline LinearModel fit_ols(const std::vector<std::vector<double>>& rows,
                           std::span<const double> targets) {
  require(!rows.empty() && rows.size() == targets.size(), ErrorKind::DegenerateInput,
          "design and target sizes differ");
  const std::size_t n = rows.size();
  const std::size_t p = rows.front().size();
  require(n > p, ErrorKind::SingularMatrix, "fewer observations than parameters");

  std::vector<double> xmean(p, 0.0);
  double ymean = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    require(rows[i].size() == p, ErrorKind::DegenerateInput, "ragged design matrix");
    for (std::size_t j = 0; j < p; ++j) xmean[j] += rows[i][j];
    ymean += targets[i];
  }
  for (double& m : xmean) m /= static_cast<double>(n);
  ymean /= static_cast<double>(n);

  std::vector<double> gram(p * p, 0.0), rhs(p, 0.0);
  for (std::size_t i = 0; i < n; ++i) {
    const double dy = targets[i] - ymean;
    for (std::size_t a = 0; a < p; ++a) {
      const double da = rows[i][a] - xmean[a];
      rhs[a] += da * dy;
      for (std::size_t b = 0; b <= a; ++b) gram[a * p + b] += da * (rows[i][b] - xmean[b]);
    }
  }

  double trace = 0.0;
  for (std::size_t a = 0; a < p; ++a) trace += gram[a * p + a];
  const double tolerance = 1e-12 * std::max(trace, 1e-300);

  // In-place lower Cholesky factor.
  for (std::size_t a = 0; a < p; ++a) {
    for (std::size_t b = 0; b <= a; ++b) {
      double s = gram[a * p + b];
      for (std::size_t k = 0; k < b; ++k) s -= gram[a * p + k] * gram[b * p + k];
      if (a == b) {
        require(s > tolerance, ErrorKind::SingularMatrix,
                "design matrix is singular (feature " + std::to_string(a) + ")");
        gram[a * p + a] = std::sqrt(s);
      } else {
        gram[a * p + b] = s / gram[b * p + b];
      }
    }
  }
  std::vector<double> z(p);
  for (std::size_t a = 0; a < p; ++a) {
    double s = rhs[a];
    for (std::size_t k = 0; k < a; ++k) s -= gram[a * p + k] * z[k];
    z[a] = s / gram[a * p + a];
  }
  LinearModel model;
  model.weights.assign(p, 0.0);
  for (std::size_t a = p; a-- > 0;) {
    double s = z[a];
    for (std::size_t k = a + 1; k < p; ++k) s -= gram[k * p + a] * model.weights[k];
    model.weights[a] = s / gram[a * p + a];
  }
  model.intercept = ymean;
  for (std::size_t j = 0; j < p; ++j) model.intercept -= model.weights[j] * xmean[j];
  return model;
}

struct AttributionSample {
  std::size_t agent_id = 0;
  TraitVector traits;
  double intention = 0.0;  // typically the mean over scenarios
};

struct TraitAttribution {
  std::size_t agent_id = 0;
  std::array<double, kTraitCount> phi{};
  double prediction = 0.0;           // f(x)
  double baseline_prediction = 0.0;  // f(dataset means)
};

inline constexpr std::size_t kMinAttributionSamples = 10;

/// Fits the OLS surrogate once, then attributes any agent by exact
/// enumeration over the 2^9 trait coalitions. Traits outside a coalition are
/// held at their dataset means.
class TraitAttributor {
 public:
  explicit TraitAttributor(std::vector<AttributionSample> dataset) : dataset_(std::move(dataset)) {
    require(dataset_.size() >= kMinAttributionSamples, ErrorKind::DegenerateInput,
            "attribution needs at least 10 samples");
    std::vector<std::vector<double>> rows;
    std::vector<double> targets;
    rows.reserve(dataset_.size());
    for (const auto& s : dataset_) {
      rows.emplace_back(s.traits.values.begin(), s.traits.values.end());
      targets.push_back(s.intention);
      for (std::size_t j = 0; j < kTraitCount; ++j) means_[j] += s.traits.values[j];
    }
    for (double& m : means_) m /= static_cast<double>(dataset_.size());
    model_ = fit_ols(rows, targets);
  }

  const LinearModel& model() const noexcept { return model_; }
  const std::array<double, kTraitCount>& means() const noexcept { return means_; }
  const std::vector<AttributionSample>& dataset() const noexcept { return dataset_; }

  TraitAttribution attribute(const TraitVector& traits, std::size_t agent_id) const {
    const auto& x = traits.values;
    auto phi = exact_shapley(kTraitCount, [&](std::uint32_t mask) {
      std::array<double, kTraitCount> z{};
      for (std::size_t j = 0; j < kTraitCount; ++j) z[j] = (mask >> j) & 1u ? x[j] : means_[j];
      return model_.predict(z);
    });
    TraitAttribution out;
    out.agent_id = agent_id;
    std::copy(phi.begin(), phi.end(), out.phi.begin());
    out.prediction = model_.predict(x);
    out.baseline_prediction = model_.predict(means_);
    return out;
  }

  /// Attribution for the dataset entry with the given agent id.
  TraitAttribution attribute_agent(std::size_t agent_id) const {
    for (const auto& s : dataset_) {
      if (s.agent_id == agent_id) return attribute(s.traits, agent_id);
    }
    fail(ErrorKind::InvalidParameters, "agent " + std::to_string(agent_id) + " not in dataset");
  }

 private:
  std::vector<AttributionSample> dataset_;
  std::array<double, kTraitCount> means_{};
  LinearModel model_;
};

inline TraitAttribution shapley_attribution(const std::vector<AttributionSample>& dataset,
                                            std::size_t target_agent) {
  return TraitAttributor(dataset).attribute_agent(target_agent);
}

}  // namespace prosim
