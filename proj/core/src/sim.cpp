#include "spectrum_queue/sim.hpp"

#include <cmath>
#include <deque>
#include <limits>
#include <random>

namespace spectrum_queue::sim {

namespace {

constexpr int kBatches = 20;
constexpr double kInf = std::numeric_limits<double>::infinity();

double uniform01(std::mt19937_64& rng) {
  // 53 uniform bits in [0, 1); pinned so runs are reproducible bit-for-bit.
  return static_cast<double>(rng() >> 11) * 0x1.0p-53;
}

double exponential(std::mt19937_64& rng, double rate) {
  return -std::log1p(-uniform01(rng)) / rate;
}

struct QueueEntry {
  double join_time;
  int join_level;  // queue length the SU observed on arrival
  bool counted;    // joined after the warmup boundary
  int batch;
};

struct Batch {
  double span = 0.0;
  double p00_time = 0.0;
  double queue_integral = 0.0;
  std::uint64_t completions = 0;
  std::uint64_t joiners = 0;
  std::uint64_t served = 0;
  std::uint64_t resolved = 0;  // joiners whose outcome landed (served or dismissed)
  double profit_sum = 0.0;
};

struct MeanAccumulator {
  std::uint64_t count = 0;
  double mean = 0.0;

  void add(double value) {
    ++count;
    mean += (value - mean) / static_cast<double>(count);
  }
};

double batch_se(const std::vector<double>& values) {
  if (values.size() < 2) return 0.0;
  double mean = 0.0;
  for (double v : values) mean += v;
  mean /= static_cast<double>(values.size());
  double ss = 0.0;
  for (double v : values) ss += (v - mean) * (v - mean);
  const double var = ss / static_cast<double>(values.size() - 1);
  return std::sqrt(var / static_cast<double>(values.size()));
}

void check_config(const SimConfig& config) {
  try {
    validate(config.params);
  } catch (const DomainError& e) {
    throw ConfigError(std::string("params: ") + e.what());
  }
  if (!(config.strategy.q >= 0.0 && config.strategy.q <= 1.0)) {
    throw ConfigError("joining probability q must lie in [0, 1]");
  }
  if (config.horizon.has_value() == config.max_events.has_value()) {
    throw ConfigError("set exactly one of horizon and max_events");
  }
  if (config.horizon && !(*config.horizon > 0.0)) {
    throw ConfigError("horizon must be positive");
  }
  if (config.max_events && *config.max_events == 0) {
    throw ConfigError("max_events must be positive");
  }
  if (!(config.warmup_fraction >= 0.0 && config.warmup_fraction < 1.0)) {
    throw ConfigError("warmup_fraction must lie in [0, 1)");
  }
}

}  // namespace

std::string_view to_string(EventKind kind) {
  switch (kind) {
    case EventKind::SuArrival:
      return "SuArrival";
    case EventKind::SuService:
      return "SuService";
    case EventKind::PuArrival:
      return "PuArrival";
    case EventKind::PuDeparture:
      return "PuDeparture";
  }
  return "unknown";
}

std::uint64_t derive_seed(std::uint64_t base_seed, int replication_index) {
  std::uint64_t z = base_seed +
                    0x9E3779B97F4A7C15ULL *
                        (static_cast<std::uint64_t>(replication_index) + 1);
  z ^= z >> 30;
  z *= 0xBF58476D1CE4E5B9ULL;
  z ^= z >> 27;
  z *= 0x94D049BB133111EBULL;
  z ^= z >> 31;
  return z;
}

SimStats simulate(const SimConfig& config) {
  return simulate(config, EventSink{});
}

SimStats simulate(const SimConfig& config, const EventSink& sink) {
  check_config(config);
  const SystemParams& p = config.params;
  const double q = config.strategy.q;
  const bool event_mode = config.max_events.has_value();
  const double horizon = event_mode ? kInf : *config.horizon;
  const std::uint64_t max_events =
      event_mode ? *config.max_events : std::uint64_t(0);
  const std::uint64_t warmup_events =
      event_mode ? static_cast<std::uint64_t>(
                       config.warmup_fraction *
                       static_cast<double>(max_events))
                 : 0;
  const double warmup_time =
      event_mode ? 0.0 : config.warmup_fraction * horizon;

  std::mt19937_64 rng(config.seed);

  double now = 0.0;
  int level = 0;
  int serving_su = 1;  // the empty SU-serving state; warmup absorbs the bias
  std::deque<QueueEntry> queue;
  std::uint64_t events_done = 0;

  // Measurement state. In horizon mode measuring starts at warmup_time; in
  // event mode at the completion of the warmup_events-th event.
  bool measuring = event_mode ? warmup_events == 0 : warmup_time == 0.0;
  double measure_start = 0.0;

  std::vector<Batch> batches(kBatches);
  const double batch_span = event_mode ? 0.0 : (horizon - warmup_time) / kBatches;
  const std::uint64_t batch_events =
      event_mode ? std::max<std::uint64_t>(1, (max_events - warmup_events) / kBatches)
                 : 0;
  // Batch of a post-warmup instant: event index in event mode, elapsed time
  // otherwise. Only called while measuring, so the argument is never below
  // the warmup boundary.
  auto batch_index = [&](double at_time) {
    std::uint64_t index;
    if (event_mode) {
      index = (events_done - warmup_events) / batch_events;
    } else {
      index = static_cast<std::uint64_t>((at_time - warmup_time) / batch_span);
    }
    return static_cast<int>(std::min<std::uint64_t>(index, kBatches - 1));
  };

  // Post-warmup accumulators.
  double p00_time = 0.0;
  double queue_integral = 0.0;
  std::vector<double> level_time;  // time spent in (n,1) by level
  std::uint64_t completions = 0;   // service completions while measuring
  std::uint64_t joined = 0, served = 0, dismissed = 0, balked = 0;
  MeanAccumulator profit, sojourn_served;
  std::map<int, MeanAccumulator> sojourn_by_level;

  auto integrate = [&](double from, double to) {
    if (!measuring && !event_mode && to > warmup_time) {
      from = warmup_time;  // horizon mode: split the straddling interval
      measuring = true;
      measure_start = warmup_time;
    }
    if (!measuring || to <= from) return;
    const double dt = to - from;
    Batch& b = batches[batch_index(from)];
    b.span += dt;
    if (serving_su == 0) {
      p00_time += dt;
      b.p00_time += dt;
    } else {
      if (level_time.size() <= static_cast<std::size_t>(level)) {
        level_time.resize(level + 1, 0.0);
      }
      level_time[level] += dt;
      queue_integral += static_cast<double>(level) * dt;
      b.queue_integral += static_cast<double>(level) * dt;
    }
  };

  auto resolve = [&](const QueueEntry& entry, bool got_served) {
    const double time_in_system = now - entry.join_time;
    if (!entry.counted) return;
    Batch& b = batches[entry.batch];
    b.resolved += 1;
    const double value =
        (got_served ? p.reward : 0.0) - p.cost * time_in_system;
    b.profit_sum += value;
    profit.add(value);
    sojourn_by_level[entry.join_level].add(time_in_system);
    if (got_served) {
      served += 1;
      b.served += 1;
      sojourn_served.add(time_in_system);
    } else {
      dismissed += 1;
    }
  };

  bool done = false;
  while (!done) {
    double dt_arrival = p.lambda > 0.0 ? exponential(rng, p.lambda) : kInf;
    double dt_next;
    EventKind kind;
    if (serving_su == 1) {
      const double dt_service =
          level >= 1 ? exponential(rng, p.mu) : kInf;
      const double dt_pu = exponential(rng, p.xi);
      if (dt_arrival <= dt_service && dt_arrival <= dt_pu) {
        dt_next = dt_arrival;
        kind = EventKind::SuArrival;
      } else if (dt_service <= dt_pu) {
        dt_next = dt_service;
        kind = EventKind::SuService;
      } else {
        dt_next = dt_pu;
        kind = EventKind::PuArrival;
      }
    } else {
      const double dt_pu_done = exponential(rng, p.eta);
      if (dt_arrival <= dt_pu_done) {
        dt_next = dt_arrival;
        kind = EventKind::SuArrival;
      } else {
        dt_next = dt_pu_done;
        kind = EventKind::PuDeparture;
      }
    }

    if (!event_mode && now + dt_next >= horizon) {
      integrate(now, horizon);
      now = horizon;
      break;
    }
    integrate(now, now + dt_next);
    now += dt_next;

    switch (kind) {
      case EventKind::SuArrival: {
        if (serving_su == 1) {
          const bool joins = q > 0.0 && uniform01(rng) < q;
          if (joins) {
            QueueEntry entry{now, level, measuring,
                             measuring ? batch_index(now) : 0};
            queue.push_back(entry);
            level += 1;
            if (measuring) {
              joined += 1;
              batches[entry.batch].joiners += 1;
            }
          } else if (measuring) {
            balked += 1;
          }
        } else if (measuring) {
          balked += 1;  // forced balk: the BS is serving a PU
        }
        break;
      }
      case EventKind::SuService: {
        QueueEntry head = queue.front();
        queue.pop_front();
        level -= 1;
        if (measuring) completions += 1;
        resolve(head, true);
        break;
      }
      case EventKind::PuArrival: {
        serving_su = 0;
        for (const QueueEntry& entry : queue) resolve(entry, false);
        queue.clear();
        level = 0;
        break;
      }
      case EventKind::PuDeparture: {
        serving_su = 1;
        break;
      }
    }

    events_done += 1;
    if (event_mode) {
      if (!measuring && events_done >= warmup_events) {
        measuring = true;
        measure_start = now;
      }
      if (events_done >= max_events) done = true;
    }
    if (sink) {
      sink(EventRecord{now, kind, level, serving_su});
    }
  }

  SimStats stats;
  stats.horizon = now;
  stats.measured_time = measuring ? now - measure_start : 0.0;
  stats.joined_count = joined;
  stats.served_count = served;
  stats.dismissed_count = dismissed;
  stats.balked_count = balked;
  for (const QueueEntry& entry : queue) {
    if (entry.counted) stats.in_system_at_end += 1;
  }
  if (stats.measured_time > 0.0) {
    stats.empirical_p00 = p00_time / stats.measured_time;
    for (std::size_t n = 0; n < level_time.size(); ++n) {
      if (level_time[n] > 0.0) {
        stats.level_histogram[static_cast<int>(n)] =
            level_time[n] / stats.measured_time;
      }
    }
    stats.welfare_rate =
        (p.reward * static_cast<double>(completions) -
         p.cost * queue_integral) /
        stats.measured_time;
  }
  stats.served_fraction =
      joined > 0 ? static_cast<double>(served) / static_cast<double>(joined)
                 : 0.0;
  stats.mean_sojourn_served = sojourn_served.mean;
  stats.mean_profit_per_joiner = profit.mean;
  for (const auto& [lvl, acc] : sojourn_by_level) {
    stats.sojourn_by_join_level[lvl] = LevelSojourn{acc.count, acc.mean};
  }

  // Batch-means standard errors.
  std::vector<double> p00_means, welfare_means, served_means, profit_means;
  for (const Batch& b : batches) {
    if (b.span > 0.0) {
      p00_means.push_back(b.p00_time / b.span);
      welfare_means.push_back(
          (p.reward * static_cast<double>(b.completions) -
           p.cost * b.queue_integral) /
          b.span);
    }
    if (b.joiners > 0) {
      served_means.push_back(static_cast<double>(b.served) /
                             static_cast<double>(b.joiners));
    }
    if (b.resolved > 0) {
      profit_means.push_back(b.profit_sum / static_cast<double>(b.resolved));
    }
  }
  stats.se.empirical_p00 = batch_se(p00_means);
  stats.se.welfare_rate = batch_se(welfare_means);
  stats.se.served_fraction = batch_se(served_means);
  stats.se.mean_profit_per_joiner = batch_se(profit_means);
  stats.se.batches = static_cast<int>(p00_means.size());
  return stats;
}

ReplicatedStats replicate(const SimConfig& config, int n_replications) {
  if (n_replications < 2) {
    throw ConfigError("replicate needs n_replications >= 2");
  }
  ReplicatedStats agg;
  agg.replications = n_replications;
  agg.runs.reserve(n_replications);
  for (int i = 0; i < n_replications; ++i) {
    SimConfig run = config;
    run.seed = derive_seed(config.seed, i);
    agg.runs.push_back(simulate(run));
  }

  auto mean_se = [&](auto field) {
    std::vector<double> values;
    values.reserve(agg.runs.size());
    for (const SimStats& s : agg.runs) values.push_back(field(s));
    double mean = 0.0;
    for (double v : values) mean += v;
    mean /= static_cast<double>(values.size());
    return MeanSe{mean, batch_se(values)};
  };
  agg.empirical_p00 = mean_se([](const SimStats& s) { return s.empirical_p00; });
  agg.served_fraction =
      mean_se([](const SimStats& s) { return s.served_fraction; });
  agg.mean_sojourn_served =
      mean_se([](const SimStats& s) { return s.mean_sojourn_served; });
  agg.mean_profit_per_joiner =
      mean_se([](const SimStats& s) { return s.mean_profit_per_joiner; });
  agg.welfare_rate = mean_se([](const SimStats& s) { return s.welfare_rate; });

  int max_level = -1;
  for (const SimStats& s : agg.runs) {
    if (!s.level_histogram.empty()) {
      max_level = std::max(max_level, s.level_histogram.rbegin()->first);
    }
  }
  for (int n = 0; n <= max_level; ++n) {
    agg.level_histogram.push_back(mean_se([n](const SimStats& s) {
      auto it = s.level_histogram.find(n);
      return it == s.level_histogram.end() ? 0.0 : it->second;
    }));
  }
  return agg;
}

}  // namespace spectrum_queue::sim
