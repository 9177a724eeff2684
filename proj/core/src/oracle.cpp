#include "spectrum_queue/oracle.hpp"

#include <cmath>

#include "spectrum_queue/analytic.hpp"
#include "search.hpp"

namespace spectrum_queue::oracle {

GeneratorMatrix build_generator(const SystemParams& params, double q,
                                int truncation) {
  validate(params);
  validate_probability(q);
  if (truncation < 50) {
    throw DomainError("truncation", "truncation level must be >= 50");
  }
  const double rate = params.lambda * q;
  GeneratorMatrix gen;
  gen.truncation_level = truncation;
  const int m = gen.dim();
  gen.entries.assign(static_cast<std::size_t>(m) * m, 0.0);

  gen.at(0, 1) = params.eta;  // (0,0) -> (0,1): PU departs, BS serves SUs
  for (int level = 0; level <= truncation; ++level) {
    const int i = level + 1;
    gen.at(i, 0) = params.xi;  // PU arrival dismisses the whole queue
    if (level >= 1) {
      gen.at(i, i - 1) = params.mu;  // head-of-line service completion
    }
    if (level < truncation) {
      gen.at(i, i + 1) = rate;  // SU joins
    }
  }
  for (int i = 0; i < m; ++i) {
    double out = 0.0;
    for (int j = 0; j < m; ++j) {
      if (j != i) out += gen.at(i, j);
    }
    gen.at(i, i) = -out;
  }
  return gen;
}

int tail_truncation(const SystemParams& params, double q) {
  const double x = analytic::geometric_root(params, q);
  if (x <= 0.0) {
    return 50;
  }
  // Capped so a root pushed against 1 by extreme rates cannot overflow the
  // level count; allocation limits surface downstream if it is ever hit.
  const double levels =
      std::min(std::ceil(std::log(1e-12) / std::log(x)), 1.0e7);
  return std::max(50, static_cast<int>(levels));
}

std::vector<double> solve_stationary(const GeneratorMatrix& gen) {
  const int m = gen.dim();
  if (m < 3 ||
      gen.entries.size() != static_cast<std::size_t>(m) * m) {
    throw SolveError("malformed generator matrix");
  }
  std::vector<double> pi(m, 0.0);

  if (gen.at(1, 2) == 0.0) {
    // No SU arrivals: only (0,0) and (0,1) carry mass. Use the balance
    // equation of state 1: pi0 Q[0][1] + pi1 Q[1][1] = 0.
    const double into_1 = gen.at(0, 1);
    const double out_of_1 = -gen.at(1, 1);
    if (!(into_1 > 0.0) || !(out_of_1 > 0.0)) {
      throw SolveError("degenerate two-state chain");
    }
    pi[0] = 1.0;
    pi[1] = into_1 / out_of_1;
  } else {
    // Back-substitute through the balance equations of states m-1 .. 1,
    // anchored at the truncation level. The balance of state 0 is the
    // redundant equation and is left to the residual check. Values grow
    // roughly like x^-(m-1-j); rescale when they get large.
    pi[m - 1] = 1.0;
    pi[m - 2] = -gen.at(m - 1, m - 1) * pi[m - 1] / gen.at(m - 2, m - 1);
    for (int j = m - 2; j >= 2; --j) {
      const double inflow =
          pi[j] * gen.at(j, j) + pi[j + 1] * gen.at(j + 1, j);
      pi[j - 1] = -inflow / gen.at(j - 1, j);
      if (std::abs(pi[j - 1]) > 1e100) {
        for (int k = j - 1; k < m; ++k) pi[k] *= 1e-100;
      }
    }
    pi[0] = -(pi[1] * gen.at(1, 1) + pi[2] * gen.at(2, 1)) / gen.at(0, 1);
  }

  double total = 0.0;
  for (double v : pi) total += v;
  if (!(total > 0.0) || !std::isfinite(total)) {
    throw SolveError("stationary solve produced a non-normalizable vector");
  }
  for (double& v : pi) v /= total;

  double residual = 0.0;
  for (int j = 0; j < m; ++j) {
    double column = 0.0;
    for (int i = 0; i < m; ++i) column += pi[i] * gen.at(i, j);
    residual = std::max(residual, std::abs(column));
  }
  if (!(residual < 1e-10)) {
    throw SolveError("stationary residual " + std::to_string(residual) +
                     " exceeds 1e-10");
  }
  for (double& v : pi) {
    if (v < 0.0) {
      if (v < -1e-12) throw SolveError("negative stationary probability");
      v = 0.0;
    }
  }
  return pi;
}

double numeric_equilibrium(const SystemParams& params) {
  validate(params);
  if (!(params.lambda > 0.0)) {
    throw DomainError("lambda",
                      "equilibrium needs a positive SU arrival rate");
  }
  auto profit = [&](double q) { return analytic::profit_join(params, q); };
  if (profit(0.0) <= 0.0) return 0.0;  // joining never pays
  if (profit(1.0) >= 0.0) return 1.0;  // joining always pays
  return detail::bisect_decreasing(profit, 0.0, 1.0, 1e-9);
}

double numeric_social_optimum(const SystemParams& params) {
  validate(params);
  if (!(params.lambda > 0.0)) {
    throw DomainError("lambda",
                      "social optimum needs a positive SU arrival rate");
  }
  auto welfare = [&](double q) {
    return analytic::social_welfare(params, q);
  };
  // Coarse bracketing of the unimodal maximum, then golden section.
  const int grid = 400;
  int best = 0;
  double best_value = welfare(0.0);
  for (int i = 1; i <= grid; ++i) {
    const double value = welfare(static_cast<double>(i) / grid);
    if (value > best_value) {
      best_value = value;
      best = i;
    }
  }
  const double lo = static_cast<double>(best > 0 ? best - 1 : 0) / grid;
  const double hi = static_cast<double>(best < grid ? best + 1 : grid) / grid;
  return detail::golden_max(welfare, lo, hi, 1e-10);
}

}  // namespace spectrum_queue::oracle
