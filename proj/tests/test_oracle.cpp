#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include <cmath>
#include <random>

#include "spectrum_queue/analytic.hpp"
#include "spectrum_queue/model.hpp"
#include "spectrum_queue/oracle.hpp"
#include "test_support.hpp"

using namespace spectrum_queue;
using test_support::draw_params;

namespace {

const SystemParams kReference{7.0, 0.5, 3.0, 2.0, 2.0, 3.0};

double max_state_delta(const SystemParams& p, double q, int truncation) {
  const auto gen = oracle::build_generator(p, q, truncation);
  const auto pi = oracle::solve_stationary(gen);
  const auto dist = analytic::stationary(p, q);
  double delta = std::abs(pi[0] - dist.p00);
  for (int n = 0; n <= truncation; ++n) {
    delta = std::max(delta, std::abs(pi[n + 1] - dist.level_prob(n)));
  }
  return delta;
}

}  // namespace

TEST_CASE("generator structure encodes the transition diagram") {
  const auto gen = oracle::build_generator(kReference, 1.0, 400);
  CHECK(gen.dim() == 402);
  CHECK(gen.truncation_level == 400);

  // (0,0) has a single outgoing transition, the PU departure.
  for (int j = 1; j < gen.dim(); ++j) {
    CHECK(gen.at(0, j) == (j == 1 ? kReference.eta : 0.0));
  }

  for (int level = 0; level <= 400; ++level) {
    const int i = level + 1;
    CHECK(gen.at(i, 0) == kReference.xi);  // dismissal
    if (level >= 1) {
      CHECK(gen.at(i, i - 1) == kReference.mu);
    }
    if (level < 400) {
      CHECK(gen.at(i, i + 1) == kReference.lambda);
    }
  }
  // Arrival rate at the cap is dropped rather than leaking mass.
  CHECK(gen.at(401, 401) == doctest::Approx(-(kReference.mu + kReference.xi)));

  // Conservative rows, nonnegative off-diagonals.
  for (int i = 0; i < gen.dim(); ++i) {
    double row_sum = 0.0;
    for (int j = 0; j < gen.dim(); ++j) {
      if (i != j) CHECK(gen.at(i, j) >= 0.0);
      row_sum += gen.at(i, j);
    }
    CHECK(std::abs(row_sum) < 1e-12);
  }
}

TEST_CASE("generator rejects too-small truncations") {
  CHECK_THROWS_AS(oracle::build_generator(kReference, 1.0, 49), DomainError);
  CHECK_NOTHROW(oracle::build_generator(kReference, 1.0, 50));
}

TEST_CASE("two-state solve when nobody joins") {
  const auto gen = oracle::build_generator(kReference, 0.0, 50);
  const auto pi = oracle::solve_stationary(gen);
  CHECK(pi[0] == doctest::Approx(0.2).epsilon(1e-14));
  CHECK(pi[1] == doctest::Approx(0.8).epsilon(1e-14));
  for (std::size_t i = 2; i < pi.size(); ++i) {
    CHECK(pi[i] == 0.0);
  }
}

TEST_CASE("stationary solve matches the closed form at the reference point") {
  CHECK(max_state_delta(kReference, 1.0, 400) < 1e-8);

  const auto gen = oracle::build_generator(kReference, 1.0, 400);
  const auto pi = oracle::solve_stationary(gen);

  SUBCASE("probability vector") {
    double total = 0.0;
    for (double v : pi) {
      CHECK(v >= 0.0);
      total += v;
    }
    CHECK(std::abs(total - 1.0) < 1e-12);
  }

  SUBCASE("residual of the full balance system") {
    double residual = 0.0;
    for (int j = 0; j < gen.dim(); ++j) {
      double column = 0.0;
      for (int i = 0; i < gen.dim(); ++i) column += pi[i] * gen.at(i, j);
      residual = std::max(residual, std::abs(column));
    }
    CHECK(residual < 1e-10);
  }

  SUBCASE("mid-range level ratios land on the geometric root") {
    const double kappa = analytic::geometric_root(kReference, 1.0);
    for (int n = 50; n <= 150; ++n) {
      CHECK(std::abs(pi[n + 2] / pi[n + 1] - kappa) < 1e-9);
    }
  }
}

TEST_CASE("tail truncation rule") {
  const int level = oracle::tail_truncation(kReference, 1.0);
  CHECK(level >= 50);
  const double x = analytic::geometric_root(kReference, 1.0);
  CHECK(std::pow(x, level) < 1e-12);
  CHECK(std::pow(x, level - 1) >= 1e-12 * x);  // not wastefully deep

  CHECK(oracle::tail_truncation(kReference, 0.0) == 50);
  SystemParams light = kReference;
  light.lambda = 0.1;
  CHECK(oracle::tail_truncation(light, 1.0) == 50);
}

TEST_CASE("deep truncation far past the tail stays finite and exact") {
  // x(lambda q) ~ 0.193 here, so level masses span ~285 decades across a
  // 400-level matrix and the back-substitution must rescale on the way up.
  const auto gen = oracle::build_generator(kReference, 0.1, 400);
  const auto pi = oracle::solve_stationary(gen);
  const auto dist = analytic::stationary(kReference, 0.1);
  for (double v : pi) {
    CHECK(std::isfinite(v));
    CHECK(v >= 0.0);
  }
  CHECK(std::abs(pi[0] - dist.p00) < 1e-10);
  for (int n = 0; n <= 20; ++n) {
    CHECK(std::abs(pi[n + 1] - dist.level_prob(n)) < 1e-10);
  }
}

TEST_CASE("solve rejects malformed generators") {
  oracle::GeneratorMatrix bad;
  bad.truncation_level = 60;
  bad.entries.assign(10, 0.0);  // wrong size
  CHECK_THROWS_AS(oracle::solve_stationary(bad), oracle::SolveError);
}

TEST_CASE("oracle vs closed form on 200 random draws") {
  std::mt19937_64 rng(606);
  for (int i = 0; i < 200; ++i) {
    const SystemParams p = draw_params(rng);
    CAPTURE(p.lambda);
    CAPTURE(p.xi);
    CAPTURE(p.mu);
    CAPTURE(p.eta);
    CAPTURE(p.cost);
    CAPTURE(p.reward);

    const int truncation = oracle::tail_truncation(p, 1.0);
    CHECK(max_state_delta(p, 1.0, truncation) < 1e-7);

    const double q_e = analytic::individual_equilibrium(p).q_star;
    CHECK(std::abs(oracle::numeric_equilibrium(p) - q_e) < 1e-6);

    const double q_s = analytic::social_optimum(p).q_star;
    CHECK(std::abs(oracle::numeric_social_optimum(p) - q_s) < 1e-6);
  }
}

TEST_CASE("numeric equilibrium boundary examples") {
  CHECK(oracle::numeric_equilibrium(kReference) ==
        doctest::Approx(7.0 / 12.0).epsilon(1e-8));
  SystemParams p = kReference;
  p.reward = 0.5;
  CHECK(oracle::numeric_equilibrium(p) == 0.0);
  p.reward = 10.0;
  CHECK(oracle::numeric_equilibrium(p) == 1.0);
  p.lambda = 0.0;
  CHECK_THROWS_AS(oracle::numeric_equilibrium(p), DomainError);
}

TEST_CASE("numeric social optimum boundary examples") {
  CHECK(oracle::numeric_social_optimum(kReference) ==
        doctest::Approx(0.30663522991524655).epsilon(1e-6));
  SystemParams p = kReference;
  p.reward = 0.5;
  CHECK(oracle::numeric_social_optimum(p) < 1e-6);
  p.reward = 70.0;
  CHECK(oracle::numeric_social_optimum(p) > 1.0 - 1e-6);
}
