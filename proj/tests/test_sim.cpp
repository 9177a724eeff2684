#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include <cmath>
#include <vector>

#include "spectrum_queue/analytic.hpp"
#include "spectrum_queue/model.hpp"
#include "spectrum_queue/sim.hpp"

using namespace spectrum_queue;
using sim::SimConfig;
using sim::SimStats;

namespace {

const SystemParams kReference{7.0, 0.5, 3.0, 2.0, 2.0, 3.0};
constexpr double kQEquilibrium = 7.0 / 12.0;
constexpr double kWelfareAtQ1 = -7.3457310723434421;

SimConfig event_config(double q, std::uint64_t events, std::uint64_t seed,
                       double warmup = 0.1) {
  SimConfig config;
  config.params = kReference;
  config.strategy.q = q;
  config.max_events = events;
  config.seed = seed;
  config.warmup_fraction = warmup;
  return config;
}

// Aggregate service probability of a joiner: mu(1-x)/(mu+xi-mu x).
double served_fraction_ref(const SystemParams& p, double q) {
  const double x = analytic::geometric_root(p, q);
  return p.mu * (1.0 - x) / (p.mu + p.xi - p.mu * x);
}

}  // namespace

TEST_CASE("identical configs give bit-identical stats") {
  const SimConfig config = event_config(kQEquilibrium, 20000, 123);
  const SimStats a = sim::simulate(config);
  const SimStats b = sim::simulate(config);
  CHECK(a == b);

  SimConfig other = config;
  other.seed = 124;
  CHECK_FALSE(a == sim::simulate(other));
}

TEST_CASE("conservation of joiners is exact") {
  for (std::uint64_t seed : {1u, 2u, 3u, 4u, 5u}) {
    const SimStats stats = sim::simulate(event_config(0.7, 30000, seed));
    CHECK(stats.joined_count == stats.served_count + stats.dismissed_count +
                                    stats.in_system_at_end);
  }
  SimConfig timed;
  timed.params = kReference;
  timed.strategy.q = 1.0;
  timed.horizon = 500.0;
  timed.seed = 11;
  const SimStats stats = sim::simulate(timed);
  CHECK(stats.joined_count ==
        stats.served_count + stats.dismissed_count + stats.in_system_at_end);
  CHECK(stats.horizon == doctest::Approx(500.0));
  CHECK(stats.measured_time == doctest::Approx(450.0));
}

TEST_CASE("nobody joins at q = 0") {
  const SimStats stats = sim::simulate(event_config(0.0, 20000, 99));
  CHECK(stats.joined_count == 0);
  CHECK(stats.served_count == 0);
  CHECK(stats.welfare_rate == 0.0);
  CHECK(stats.served_fraction == 0.0);
  CHECK(stats.balked_count > 0);
  CHECK(stats.level_histogram.size() == 1);  // only the empty level
  CHECK(stats.empirical_p00 + stats.level_histogram.at(0) ==
        doctest::Approx(1.0).epsilon(1e-9));
}

TEST_CASE("histogram shares and p00 sum to one") {
  const SimStats stats = sim::simulate(event_config(1.0, 50000, 7));
  double total = stats.empirical_p00;
  for (const auto& [level, share] : stats.level_histogram) {
    CHECK(share >= 0.0);
    total += share;
  }
  CHECK(total == doctest::Approx(1.0).epsilon(1e-9));
}

TEST_CASE("trace records are consistent with the dynamics") {
  std::vector<sim::EventRecord> trace;
  SimConfig config = event_config(1.0, 5000, 21, 0.0);
  sim::simulate(config, [&](const sim::EventRecord& r) {
    trace.push_back(r);
  });
  REQUIRE(trace.size() == 5000);

  int previous_level = 0;
  int previous_state = 1;
  double previous_time = 0.0;
  std::uint64_t forced_balks = 0;
  for (const auto& r : trace) {
    CHECK(r.time >= previous_time);
    switch (r.kind) {
      case sim::EventKind::SuArrival:
        if (previous_state == 0) {
          ++forced_balks;
          CHECK(r.queue_length_after == 0);
          CHECK(r.server_state_after == 0);
        } else {
          // q = 1: every arrival that sees I=1 joins.
          CHECK(r.queue_length_after == previous_level + 1);
        }
        break;
      case sim::EventKind::SuService:
        CHECK(previous_state == 1);
        CHECK(r.queue_length_after == previous_level - 1);
        break;
      case sim::EventKind::PuArrival:
        CHECK(previous_state == 1);
        CHECK(r.queue_length_after == 0);
        CHECK(r.server_state_after == 0);
        break;
      case sim::EventKind::PuDeparture:
        CHECK(previous_state == 0);
        CHECK(r.queue_length_after == 0);
        CHECK(r.server_state_after == 1);
        break;
    }
    previous_level = r.queue_length_after;
    previous_state = r.server_state_after;
    previous_time = r.time;
  }

  // With q = 1 and no warmup, the balk counter holds exactly the forced
  // balks seen in the trace.
  const SimStats stats = sim::simulate(config);
  CHECK(stats.balked_count == forced_balks);
}

TEST_CASE("config validation") {
  SimConfig config = event_config(1.0, 1000, 1);
  config.horizon = 10.0;  // both run lengths set
  CHECK_THROWS_AS(sim::simulate(config), sim::ConfigError);

  config = event_config(1.0, 1000, 1);
  config.max_events.reset();  // neither set
  CHECK_THROWS_AS(sim::simulate(config), sim::ConfigError);

  config = event_config(1.5, 1000, 1);
  CHECK_THROWS_AS(sim::simulate(config), sim::ConfigError);

  config = event_config(1.0, 1000, 1);
  config.warmup_fraction = 1.0;
  CHECK_THROWS_AS(sim::simulate(config), sim::ConfigError);

  config = event_config(1.0, 1000, 1);
  config.params.xi = 0.0;
  CHECK_THROWS_AS(sim::simulate(config), sim::ConfigError);

  config = event_config(1.0, 1000, 1);
  config.horizon = -1.0;
  config.max_events.reset();
  CHECK_THROWS_AS(sim::simulate(config), sim::ConfigError);
}

TEST_CASE("PU-state occupancy at the reference point") {
  const SimStats stats = sim::simulate(event_config(1.0, 1000000, 42));
  CHECK(std::abs(stats.empirical_p00 - 0.2) < 0.01);
}

TEST_CASE("joining is break-even at the equilibrium point") {
  const SimStats stats =
      sim::simulate(event_config(kQEquilibrium, 1000000, 42));
  CHECK(std::abs(stats.mean_profit_per_joiner) < 0.05);
}

TEST_CASE("replication seeds are derived and reproducible") {
  CHECK(sim::derive_seed(42, 0) != sim::derive_seed(42, 1));
  CHECK(sim::derive_seed(42, 0) != 42);

  const SimConfig config = event_config(0.8, 10000, 42);
  const sim::ReplicatedStats agg = sim::replicate(config, 3);
  REQUIRE(agg.runs.size() == 3);
  for (int i = 0; i < 3; ++i) {
    SimConfig standalone = config;
    standalone.seed = sim::derive_seed(config.seed, i);
    CHECK(agg.runs[i] == sim::simulate(standalone));
  }
  CHECK_THROWS_AS(sim::replicate(config, 1), sim::ConfigError);
}

TEST_CASE("replicated welfare matches the closed form at q = 1") {
  const sim::ReplicatedStats agg =
      sim::replicate(event_config(1.0, 100000, 2024), 20);
  REQUIRE(agg.welfare_rate.se > 0.0);
  CHECK(std::abs(agg.welfare_rate.mean - kWelfareAtQ1) <
        3.0 * agg.welfare_rate.se);
}

TEST_CASE("replicated served fraction matches the closed form at q = 0.3") {
  const sim::ReplicatedStats agg =
      sim::replicate(event_config(0.3, 100000, 2025), 20);
  const double reference = served_fraction_ref(kReference, 0.3);
  REQUIRE(agg.served_fraction.se > 0.0);
  CHECK(std::abs(agg.served_fraction.mean - reference) <
        3.0 * agg.served_fraction.se);
}

TEST_CASE("welfare rate tracks S(q) across joining probabilities") {
  for (double q : {0.2, 0.5, 0.8, 1.0}) {
    CAPTURE(q);
    const sim::ReplicatedStats agg =
        sim::replicate(event_config(q, 50000, 31337), 8);
    const double reference = analytic::social_welfare(kReference, q);
    REQUIRE(agg.welfare_rate.se > 0.0);
    CHECK(std::abs(agg.welfare_rate.mean - reference) <
          3.0 * agg.welfare_rate.se);
  }
}

TEST_CASE("sojourn stratified by observed level matches E(Q_n)") {
  const sim::ReplicatedStats agg =
      sim::replicate(event_config(kQEquilibrium, 100000, 777), 10);
  for (int level = 0; level <= 10; ++level) {
    CAPTURE(level);
    std::vector<double> means;
    for (const SimStats& run : agg.runs) {
      const auto it = run.sojourn_by_join_level.find(level);
      if (it != run.sojourn_by_join_level.end() && it->second.count > 0) {
        means.push_back(it->second.mean_sojourn);
      }
    }
    REQUIRE(means.size() >= 5);
    double mean = 0.0;
    for (double m : means) mean += m;
    mean /= static_cast<double>(means.size());
    double ss = 0.0;
    for (double m : means) ss += (m - mean) * (m - mean);
    const double se = std::sqrt(
        ss / static_cast<double>(means.size() - 1) /
        static_cast<double>(means.size()));
    const double reference = analytic::expected_sojourn(kReference, level);
    REQUIRE(se > 0.0);
    CHECK(std::abs(mean - reference) < 3.0 * se);
  }
}

TEST_CASE("arrival-sampled state histogram passes the chi-square test") {
  // PASTA: the state seen by an arriving SU is stationary-distributed.
  // Sample every 100th arrival to decorrelate, then test against the
  // geometric law over {(0,0)} + levels 0..20 + tail at significance 0.001.
  const StationaryDistribution dist = analytic::stationary(kReference, 1.0);
  std::vector<std::uint64_t> observed(23, 0);
  std::uint64_t samples = 0;

  int level_before = 0;
  int state_before = 1;
  std::uint64_t arrivals = 0;
  sim::simulate(event_config(1.0, 1000000, 4242, 0.0),
                [&](const sim::EventRecord& r) {
                  if (r.kind == sim::EventKind::SuArrival) {
                    if (++arrivals % 100 == 0) {
                      ++samples;
                      if (state_before == 0) {
                        ++observed[0];
                      } else {
                        ++observed[level_before <= 20 ? 1 + level_before : 22];
                      }
                    }
                  }
                  level_before = r.queue_length_after;
                  state_before = r.server_state_after;
                });

  std::vector<double> expected(23, 0.0);
  expected[0] = dist.p00;
  double level_sum = 0.0;
  for (int n = 0; n <= 20; ++n) {
    expected[1 + n] = dist.level_prob(n);
    level_sum += expected[1 + n];
  }
  expected[22] = 1.0 - dist.p00 - level_sum;

  double statistic = 0.0;
  for (int bucket = 0; bucket < 23; ++bucket) {
    const double expect = expected[bucket] * static_cast<double>(samples);
    REQUIRE(expect > 5.0);
    const double diff = static_cast<double>(observed[bucket]) - expect;
    statistic += diff * diff / expect;
  }
  // chi-square 0.999 quantile, 22 degrees of freedom
  CHECK(statistic < 48.268);
}
