#pragma once

#include <optional>
#include <vector>

#include "spectrum_queue/model.hpp"

namespace spectrum_queue::analytic {

/// Smaller root x(lambda') of the characteristic equation
/// (lambda' + mu + xi) x = lambda' + mu x^2 at lambda' = lambda q.
/// Always in [0, 1); strictly increasing in q.
double geometric_root(const SystemParams& params, double q);

/// Stationary distribution under joining probability q:
/// p(0,0) = xi/(eta+xi), p(n,1) = (eta/(eta+xi))(1-x)x^n.
StationaryDistribution stationary(const SystemParams& params, double q);

/// Probability that an SU joining behind n others finishes service before a
/// PU arrives: theta_s(n) = (mu/(mu+xi))^(n+1).
double service_probability(const SystemParams& params, int n);

/// Unconditional sojourn of an SU joining behind n others (service or
/// dismissal, whichever first): E min(Gamma(n+1, mu), Exp(xi))
/// = (1 - theta_s(n)) / xi.
double expected_sojourn(const SystemParams& params, int n);

/// Expected profit of an SU that joins behind n others:
/// U(n) = (reward + cost/xi) theta_s(n) - cost/xi.
double observed_profit(const SystemParams& params, int n);

/// Expected profit of a joining SU when everyone else joins with
/// probability q: Gamma(1, q) = sum_n p1(n,1) U(n)
/// = (reward + cost/xi) mu(1-x)/(mu+xi-mu x) - cost/xi.
double profit_join(const SystemParams& params, double q);

/// Gamma(q~, q) = q~ Gamma(1, q): profit of joining with probability q~
/// against population strategy q.
double profit_mixed(const SystemParams& params, double q_tilde, double q);

/// Unique symmetric equilibrium joining probability. Mixed-regime value is
/// the closed form (mu w - C)(C + xi w)/(lambda C w); regime boundaries are
/// C/mu (balk at/below) and C/(mu(1-kappa)) (join at/above).
EquilibriumResult individual_equilibrium(const SystemParams& params);

/// Welfare rate S(q) = throughput * reward - cost * E[N]
/// = eta x [mu w (1-x) - C] / ((xi+eta)(1-x)) at x = x(lambda q).
double social_welfare(const SystemParams& params, double q);

/// Unique welfare-maximizing joining probability. Mixed-regime value from
/// the interior optimum x1 = 1 - sqrt(mu w C)/(mu w); upper regime boundary
/// is C/(mu(1-kappa)^2).
EquilibriumResult social_optimum(const SystemParams& params);

/// Equilibrium when served SUs pay an admission fee: the game with
/// effective reward (reward - fee).
EquilibriumResult equilibrium_with_fee(const SystemParams& params, double fee);

/// Admission fee p* that makes the equilibrium coincide with the social
/// optimum, found by bisection on fee -> Gamma(1, q_s; reward - fee).
/// Empty when the social optimum is at a boundary (no fee can bind).
std::optional<double> optimal_price(const SystemParams& params);

struct WelfareCurvePoint {
  double q = 0.0;
  double welfare = 0.0;      // S(q)
  double profit_join = 0.0;  // Gamma(1, q)
};

/// Samples S(q) and Gamma(1, q) on an even q grid with `steps` points.
std::vector<WelfareCurvePoint> welfare_curve(const SystemParams& params,
                                             int steps);

}  // namespace spectrum_queue::analytic
