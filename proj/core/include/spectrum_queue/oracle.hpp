#pragma once

#include <stdexcept>
#include <vector>

#include "spectrum_queue/model.hpp"

namespace spectrum_queue::oracle {

class SolveError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Dense rate matrix of the truncated (N(t), I(t)) chain. State 0 is (0,0);
/// state i >= 1 is level (i-1, 1). The SU-arrival transition at the cap
/// level is dropped (a self-loop in a generator is a no-op), so every row
/// still sums to zero.
struct GeneratorMatrix {
  int truncation_level = 0;
  std::vector<double> entries;  // row-major, dim() x dim()

  int dim() const { return truncation_level + 2; }
  double at(int row, int col) const {
    return entries[static_cast<std::size_t>(row) * dim() + col];
  }
  double& at(int row, int col) {
    return entries[static_cast<std::size_t>(row) * dim() + col];
  }
};

/// Assembles the generator for joining probability q. truncation >= 50.
GeneratorMatrix build_generator(const SystemParams& params, double q,
                                int truncation);

/// Truncation level at which the geometric tail mass falls below 1e-12,
/// never less than 50.
int tail_truncation(const SystemParams& params, double q);

/// Stationary vector: solves pi Q = 0, sum(pi) = 1 by Gaussian elimination
/// along the chain's banded balance equations (anchored at the truncation
/// level), then checks the residual of the full system. Throws SolveError if
/// max |pi Q| >= 1e-10 or the generator is malformed.
std::vector<double> solve_stationary(const GeneratorMatrix& gen);

/// Equilibrium joining probability by bracketing bisection on
/// q -> Gamma(1, q); returns the boundary when there is no sign change.
double numeric_equilibrium(const SystemParams& params);

/// Welfare-maximizing joining probability by coarse-grid bracketing plus
/// golden-section maximization of S(q).
double numeric_social_optimum(const SystemParams& params);

}  // namespace spectrum_queue::oracle
