#pragma once

#include <cstdint>
#include <functional>
#include <map>
#include <optional>
#include <string_view>
#include <vector>

#include "spectrum_queue/model.hpp"

namespace spectrum_queue::sim {

class ConfigError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

enum class EventKind { SuArrival, SuService, PuArrival, PuDeparture };

std::string_view to_string(EventKind kind);

/// One transition of the chain, for trace output and debugging.
struct EventRecord {
  double time = 0.0;
  EventKind kind = EventKind::SuArrival;
  int queue_length_after = 0;
  int server_state_after = 1;  // 1 = serving SUs, 0 = serving a PU
};

/// Run length is either a simulated-time horizon or an event count; exactly
/// one must be set. The first warmup_fraction of the run is excluded from
/// every statistic.
struct SimConfig {
  SystemParams params;
  JoiningStrategy strategy;
  std::optional<double> horizon;
  std::optional<std::uint64_t> max_events;
  std::uint64_t seed = 0;
  double warmup_fraction = 0.1;
};

struct LevelSojourn {
  std::uint64_t count = 0;    // joiners that entered at this level and left
  double mean_sojourn = 0.0;  // their average time in system

  friend bool operator==(const LevelSojourn&, const LevelSojourn&) = default;
};

/// Within-run standard errors from batch means (20 batches over the
/// post-warmup span). Zero when a metric had no data.
struct StdErrors {
  double empirical_p00 = 0.0;
  double served_fraction = 0.0;
  double welfare_rate = 0.0;
  double mean_profit_per_joiner = 0.0;
  int batches = 0;

  friend bool operator==(const StdErrors&, const StdErrors&) = default;
};

struct SimStats {
  double empirical_p00 = 0.0;           // time share of the PU-service state
  std::map<int, double> level_histogram;  // time share of each (n,1)
  double served_fraction = 0.0;         // served / joined
  double mean_sojourn_served = 0.0;
  double mean_profit_per_joiner = 0.0;  // reward*1{served} - cost*sojourn
  double welfare_rate = 0.0;  // (reward*completions - cost*int N dt)/time
  std::uint64_t joined_count = 0;
  std::uint64_t served_count = 0;
  std::uint64_t dismissed_count = 0;
  std::uint64_t balked_count = 0;  // voluntary balks plus forced (I=0) balks
  std::uint64_t in_system_at_end = 0;
  double horizon = 0.0;        // simulated end time
  double measured_time = 0.0;  // post-warmup span behind the averages
  std::map<int, LevelSojourn> sojourn_by_join_level;
  StdErrors se;

  friend bool operator==(const SimStats&, const SimStats&) = default;
};

using EventSink = std::function<void(const EventRecord&)>;

/// Simulates the chain with competing exponential clocks, resampled after
/// every transition. Identical configs (seed included) give bit-identical
/// stats. Throws ConfigError on an invalid configuration.
SimStats simulate(const SimConfig& config);
SimStats simulate(const SimConfig& config, const EventSink& sink);

/// Replication seed: mixes the base seed with the replication index
/// (splitmix64 finalizer), so streams are reproducible and decorrelated.
std::uint64_t derive_seed(std::uint64_t base_seed, int replication_index);

struct MeanSe {
  double mean = 0.0;
  double se = 0.0;
};

/// Aggregate over independent replications: per-field mean and standard
/// error of the mean. level_histogram is indexed by level, padded with
/// zeros where a run never visited a level.
struct ReplicatedStats {
  int replications = 0;
  MeanSe empirical_p00;
  MeanSe served_fraction;
  MeanSe mean_sojourn_served;
  MeanSe mean_profit_per_joiner;
  MeanSe welfare_rate;
  std::vector<MeanSe> level_histogram;
  std::vector<SimStats> runs;
};

/// Runs n_replications independent simulations with seeds
/// derive_seed(config.seed, i). n_replications >= 2.
ReplicatedStats replicate(const SimConfig& config, int n_replications);

}  // namespace spectrum_queue::sim
