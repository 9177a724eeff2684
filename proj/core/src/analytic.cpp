#include "spectrum_queue/analytic.hpp"

#include <algorithm>
#include <cmath>

#include "search.hpp"

namespace spectrum_queue::analytic {

namespace {

int validate_level(int n) {
  if (n < 0) {
    throw DomainError("n", "queue level n must be >= 0");
  }
  return n;
}

// Service probability of a joiner aggregated over the queue lengths it may
// meet: sum_n p1(n,1) theta_s(n) = mu(1-x)/(mu+xi-mu x). Always < 1.
double aggregate_service_probability(const SystemParams& params, double x) {
  return params.mu * (1.0 - x) / (params.mu + params.xi - params.mu * x);
}

double profit_join_at_reward(const SystemParams& params, double x,
                             double reward) {
  const double cost_rate = params.cost / params.xi;
  return (reward + cost_rate) * aggregate_service_probability(params, x) -
         cost_rate;
}

Regime regime_from(double q) {
  if (q >= 1.0) return Regime::AlwaysJoin;
  if (q <= 0.0) return Regime::AlwaysBalk;
  return Regime::Mixed;
}

}  // namespace

double geometric_root(const SystemParams& params, double q) {
  validate(params);
  validate_probability(q);
  const double rate = params.lambda * q;
  const double b = rate + params.mu + params.xi;
  // Discriminant = (rate - mu)^2 + xi^2 + 2 xi (rate + mu) >= xi^2 > 0.
  const double disc = b * b - 4.0 * rate * params.mu;
  // 2 rate / (b + sqrt(disc)) is the smaller root without cancellation.
  return 2.0 * rate / (b + std::sqrt(disc));
}

StationaryDistribution stationary(const SystemParams& params, double q) {
  StationaryDistribution dist;
  dist.root_x = geometric_root(params, q);
  dist.p00 = params.xi / (params.eta + params.xi);
  return dist;
}

double service_probability(const SystemParams& params, int n) {
  validate(params);
  validate_level(n);
  return std::pow(params.mu / (params.mu + params.xi), n + 1);
}

double expected_sojourn(const SystemParams& params, int n) {
  return (1.0 - service_probability(params, n)) / params.xi;
}

double observed_profit(const SystemParams& params, int n) {
  const double theta = service_probability(params, n);
  const double cost_rate = params.cost / params.xi;
  return (params.reward + cost_rate) * theta - cost_rate;
}

double profit_join(const SystemParams& params, double q) {
  const double x = geometric_root(params, q);
  return profit_join_at_reward(params, x, params.reward);
}

double profit_mixed(const SystemParams& params, double q_tilde, double q) {
  validate_probability(q_tilde, "q_tilde");
  return q_tilde * profit_join(params, q);
}

EquilibriumResult individual_equilibrium(const SystemParams& params) {
  validate(params);
  if (!(params.lambda > 0.0)) {
    throw DomainError("lambda",
                      "equilibrium needs a positive SU arrival rate");
  }
  EquilibriumResult result;
  result.kappa = geometric_root(params, 1.0);
  result.threshold_low = params.cost / params.mu;
  result.threshold_high = params.cost / (params.mu * (1.0 - result.kappa));
  const double w = params.reward;
  double q = 0.0;
  if (w >= result.threshold_high) {
    q = 1.0;
  } else if (w > result.threshold_low) {
    q = (params.mu * w - params.cost) * (params.cost + params.xi * w) /
        (params.lambda * params.cost * w);
    q = std::clamp(q, 0.0, 1.0);
  }
  result.q_star = q;
  result.regime = regime_from(q);
  return result;
}

double social_welfare(const SystemParams& params, double q) {
  const double x = geometric_root(params, q);
  return params.eta * x * (params.mu * params.reward * (1.0 - x) - params.cost) /
         ((params.xi + params.eta) * (1.0 - x));
}

EquilibriumResult social_optimum(const SystemParams& params) {
  validate(params);
  if (!(params.lambda > 0.0)) {
    throw DomainError("lambda",
                      "social optimum needs a positive SU arrival rate");
  }
  EquilibriumResult result;
  result.kappa = geometric_root(params, 1.0);
  const double one_minus = 1.0 - result.kappa;
  result.threshold_low = params.cost / params.mu;
  result.threshold_high = params.cost / (params.mu * one_minus * one_minus);
  const double w = params.reward;
  double q = 0.0;
  if (w >= result.threshold_high) {
    q = 1.0;
  } else if (w > result.threshold_low) {
    const double root_theta = std::sqrt(params.mu * w * params.cost);
    q = root_theta * (params.mu * w - root_theta) *
        (params.xi * w + root_theta) /
        (params.lambda * params.mu * w * params.cost * w);
    q = std::clamp(q, 0.0, 1.0);
  }
  result.q_star = q;
  result.regime = regime_from(q);
  return result;
}

EquilibriumResult equilibrium_with_fee(const SystemParams& params,
                                       double fee) {
  validate(params);
  if (!(fee >= 0.0)) {
    throw DomainError("fee", "admission fee must be >= 0");
  }
  SystemParams effective = params;
  effective.reward = std::max(params.reward - fee, 0.0);
  return individual_equilibrium(effective);
}

std::optional<double> optimal_price(const SystemParams& params) {
  const EquilibriumResult social = social_optimum(params);
  if (social.regime != Regime::Mixed) {
    return std::nullopt;
  }
  // Fix the population at q_s and charge served SUs until joining breaks
  // even: Gamma(1, q_s; reward - fee) = 0, decreasing in fee. At fee = 0 the
  // joiner surplus is positive (q_s < q_e), at fee = reward it is negative.
  const double x_social = geometric_root(params, social.q_star);
  auto surplus = [&](double fee) {
    return profit_join_at_reward(params, x_social, params.reward - fee);
  };
  return detail::bisect_decreasing(surplus, 0.0, params.reward, 1e-12);
}

std::vector<WelfareCurvePoint> welfare_curve(const SystemParams& params,
                                             int steps) {
  validate(params);
  if (steps < 2) {
    throw DomainError("steps", "curve needs at least 2 points");
  }
  std::vector<WelfareCurvePoint> curve;
  curve.reserve(steps);
  for (int i = 0; i < steps; ++i) {
    const double q = static_cast<double>(i) / (steps - 1);
    curve.push_back({q, social_welfare(params, q), profit_join(params, q)});
  }
  return curve;
}

}  // namespace spectrum_queue::analytic
