#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace spectrum_queue {

/// Raised when a model parameter violates its admissible range. Carries the
/// name of the first offending field.
class DomainError : public std::invalid_argument {
 public:
  DomainError(std::string field, const std::string& message)
      : std::invalid_argument(message), field_(std::move(field)) {}

  const std::string& field() const noexcept { return field_; }

 private:
  std::string field_;
};

/// Rate and economic constants of the spectrum-access queue.
struct SystemParams {
  double lambda = 0.0;  // secondary-user arrival rate
  double xi = 0.0;      // primary-user arrival rate (dismisses the SU queue)
  double mu = 0.0;      // secondary-user service rate
  double eta = 0.0;     // primary-user service-completion rate
  double cost = 0.0;    // waiting cost per unit time
  double reward = 0.0;  // reward for a completed service
};

/// Checks lambda >= 0, xi > 0, mu > 0, eta > 0, cost > 0, reward >= 0 and
/// finiteness. Returns the params unchanged; throws DomainError naming the
/// first violated field (checked in declaration order).
const SystemParams& validate(const SystemParams& params);

/// Checks q (or any probability-valued argument) lies in [0, 1]; returns it.
double validate_probability(double q, std::string_view field = "q");

/// Mixed strategy of an arriving SU that sees the base station serving SUs:
/// join with probability q, balk otherwise.
struct JoiningStrategy {
  double q = 1.0;

  double effective_rate(double lambda) const { return lambda * q; }
};

enum class Regime { AlwaysJoin, Mixed, AlwaysBalk };

std::string_view to_string(Regime regime);

/// Stationary law of the (N(t), I(t)) chain: an atom at the PU-service state
/// plus a geometric law over the SU queue lengths.
struct StationaryDistribution {
  double p00 = 0.0;     // probability of (0,0), the PU-service state
  double root_x = 0.0;  // geometric ratio x(lambda')

  /// p(n,1) = (1 - p00)(1 - x) x^n for n >= 0.
  double level_prob(int n) const;

  /// Mass above level n: sum_{k>n} p(k,1) = (1 - p00) x^(n+1).
  double tail_mass(int n) const;
};

/// Result of the equilibrium and social-optimum computations.
struct EquilibriumResult {
  double q_star = 0.0;
  Regime regime = Regime::AlwaysBalk;
  double threshold_low = 0.0;   // reward at/below which q* = 0 (C/mu)
  double threshold_high = 0.0;  // reward at/above which q* = 1
  double kappa = 0.0;           // x(lambda), root at the full arrival rate
};

/// JSON round trip for SystemParams with field names lambda, xi, mu, eta,
/// cost, reward. Exact (bit-level) for finite doubles.
std::string to_json(const SystemParams& params);

/// Parses and validates. Throws DomainError naming the missing/ill-typed or
/// out-of-range field.
SystemParams params_from_json(std::string_view text);

}  // namespace spectrum_queue
