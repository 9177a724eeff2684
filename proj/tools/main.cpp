// spectrum-queue: analytics, reward sweeps, simulation and cross-validation
// for the SU join-or-balk game in a queue dismissed by PU arrivals.
//
// Subcommands: analytic | sweep | simulate | validate.
// Exit codes: 0 success, 1 validation tolerance breach, 2 bad input.

#include <charconv>
#include <cmath>
#include <cstdlib>
#include <fstream>
#include <iostream>
#include <optional>
#include <random>
#include <sstream>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "json.hpp"

#include "spectrum_queue/analytic.hpp"
#include "spectrum_queue/model.hpp"
#include "spectrum_queue/oracle.hpp"
#include "spectrum_queue/sim.hpp"

namespace sq = spectrum_queue;
using nlohmann::json;

namespace {

// Fixed formatting: 6 significant digits, '.' separator, locale-free.
std::string fmt(double value, int precision = 6) {
  if (value == 0.0) value = 0.0;  // normalize -0
  char buf[64];
  auto res = std::to_chars(buf, buf + sizeof(buf), value,
                           std::chars_format::general, precision);
  return std::string(buf, res.ptr);
}

int emit(const std::string& text, const std::string& out_path) {
  if (out_path.empty()) {
    std::cout << text;
    return 0;
  }
  std::ofstream file(out_path, std::ios::binary);
  if (!file) {
    std::cerr << "error: cannot open " << out_path << " for writing\n";
    return 2;
  }
  file << text;
  return 0;
}

std::uint64_t resolve_seed(const CLI::Option* seed_opt, std::uint64_t seed) {
  if (seed_opt->count() > 0) {
    return seed;
  }
  if (const char* env = std::getenv("SPECTRUM_QUEUE_SEED")) {
    return std::strtoull(env, nullptr, 10);
  }
  return 42;
}

void add_param_options(CLI::App* cmd, sq::SystemParams& params) {
  params = sq::SystemParams{7.0, 0.5, 3.0, 2.0, 2.0, 3.0};
  cmd->add_option("--lambda", params.lambda, "SU arrival rate")
      ->capture_default_str();
  cmd->add_option("--xi", params.xi, "PU arrival rate")
      ->capture_default_str();
  cmd->add_option("--mu", params.mu, "SU service rate")
      ->capture_default_str();
  cmd->add_option("--eta", params.eta, "PU service-completion rate")
      ->capture_default_str();
  cmd->add_option("--cost", params.cost, "waiting cost per unit time")
      ->capture_default_str();
  cmd->add_option("--reward", params.reward, "reward for completed service")
      ->capture_default_str();
}

json params_to_json(const sq::SystemParams& p) {
  return json{{"lambda", p.lambda}, {"xi", p.xi},     {"mu", p.mu},
              {"eta", p.eta},       {"cost", p.cost}, {"reward", p.reward}};
}

struct AnalyticReport {
  sq::EquilibriumResult individual;
  sq::EquilibriumResult social;
  double welfare_at_qe = 0.0;
  double welfare_at_qs = 0.0;
  std::optional<double> p_star;
};

AnalyticReport analyze(const sq::SystemParams& params) {
  AnalyticReport report;
  report.individual = sq::analytic::individual_equilibrium(params);
  report.social = sq::analytic::social_optimum(params);
  report.welfare_at_qe =
      sq::analytic::social_welfare(params, report.individual.q_star);
  report.welfare_at_qs =
      sq::analytic::social_welfare(params, report.social.q_star);
  report.p_star = sq::analytic::optimal_price(params);
  return report;
}

json report_to_json(const sq::SystemParams& params,
                    const AnalyticReport& report) {
  json j;
  j["params"] = params_to_json(params);
  j["kappa"] = report.individual.kappa;
  j["thresholds"] = {
      {"balk_below", report.individual.threshold_low},
      {"individual_join_above", report.individual.threshold_high},
      {"social_join_above", report.social.threshold_high}};
  j["q_e"] = report.individual.q_star;
  j["regime_e"] = std::string(sq::to_string(report.individual.regime));
  j["q_s"] = report.social.q_star;
  j["regime_s"] = std::string(sq::to_string(report.social.regime));
  j["S_qe"] = report.welfare_at_qe;
  j["S_qs"] = report.welfare_at_qs;
  if (report.p_star) {
    j["p_star"] = *report.p_star;
  } else {
    j["p_star"] = nullptr;
  }
  return j;
}

int run_analytic(const sq::SystemParams& params, bool as_json,
                 const std::string& out_path) {
  const AnalyticReport report = analyze(sq::validate(params));
  if (as_json) {
    return emit(report_to_json(params, report).dump(2) + "\n", out_path);
  }
  std::ostringstream out;
  out << "parameters: lambda=" << fmt(params.lambda) << " xi=" << fmt(params.xi)
      << " mu=" << fmt(params.mu) << " eta=" << fmt(params.eta)
      << " cost=" << fmt(params.cost) << " reward=" << fmt(params.reward)
      << "\n";
  out << "kappa (geometric root at q=1): " << fmt(report.individual.kappa)
      << "\n";
  out << "reward thresholds: balk at/below " << fmt(report.individual.threshold_low)
      << ", individual join at/above " << fmt(report.individual.threshold_high)
      << ", social join at/above " << fmt(report.social.threshold_high) << "\n";
  out << "individual equilibrium: q_e = " << fmt(report.individual.q_star)
      << " [" << sq::to_string(report.individual.regime)
      << "], S(q_e) = " << fmt(report.welfare_at_qe) << "\n";
  out << "social optimum:         q_s = " << fmt(report.social.q_star) << " ["
      << sq::to_string(report.social.regime)
      << "], S(q_s) = " << fmt(report.welfare_at_qs) << "\n";
  if (report.p_star) {
    out << "admission fee p* = " << fmt(*report.p_star)
        << " (aligns q_e with q_s)\n";
  } else {
    out << "admission fee p* = undefined (social optimum at boundary: "
        << sq::to_string(report.social.regime) << ")\n";
  }
  return emit(out.str(), out_path);
}

int run_sweep(sq::SystemParams params, double reward_min, double reward_max,
              int steps, const std::string& scale, bool as_json,
              const std::string& out_path) {
  if (steps < 2) {
    throw sq::DomainError("steps", "sweep needs at least 2 steps");
  }
  if (!(reward_min > 0.0) || !(reward_max > reward_min)) {
    throw sq::DomainError("reward_min",
                          "need 0 < reward-min < reward-max");
  }
  const bool log_scale = scale == "log";
  json rows = json::array();
  std::ostringstream csv;
  csv << "reward,q_e,q_s,S_qe,S_qs,p_star\n";
  for (int i = 0; i < steps; ++i) {
    const double t = static_cast<double>(i) / (steps - 1);
    const double reward =
        log_scale ? reward_min * std::pow(reward_max / reward_min, t)
                  : reward_min + t * (reward_max - reward_min);
    params.reward = reward;
    const AnalyticReport report = analyze(params);
    csv << fmt(reward) << ',' << fmt(report.individual.q_star) << ','
        << fmt(report.social.q_star) << ',' << fmt(report.welfare_at_qe) << ','
        << fmt(report.welfare_at_qs) << ',';
    if (report.p_star) csv << fmt(*report.p_star);
    csv << '\n';
    if (as_json) {
      json row{{"reward", reward},
               {"q_e", report.individual.q_star},
               {"q_s", report.social.q_star},
               {"S_qe", report.welfare_at_qe},
               {"S_qs", report.welfare_at_qs}};
      if (report.p_star) {
        row["p_star"] = *report.p_star;
      } else {
        row["p_star"] = nullptr;
      }
      rows.push_back(std::move(row));
    }
  }
  if (as_json) {
    return emit(rows.dump(2) + "\n", out_path);
  }
  return emit(csv.str(), out_path);
}

struct SimReferences {
  double empirical_p00;
  double served_fraction;
  double welfare_rate;
  double mean_profit_per_joiner;
};

SimReferences references_for(const sq::SystemParams& params, double q) {
  const double x = sq::analytic::geometric_root(params, q);
  return SimReferences{
      params.xi / (params.eta + params.xi),
      params.mu * (1.0 - x) / (params.mu + params.xi - params.mu * x),
      sq::analytic::social_welfare(params, q),
      sq::analytic::profit_join(params, q)};
}

json z_entry(double value, double reference, double se) {
  json j{{"value", value}, {"analytic", reference}};
  if (se > 0.0) {
    j["se"] = se;
    j["z"] = (value - reference) / se;
  } else {
    j["se"] = nullptr;
    j["z"] = nullptr;
  }
  return j;
}

int run_simulate(const sq::sim::SimConfig& config, int replications,
                 bool trace, bool as_json, const std::string& out_path) {
  SimReferences refs = references_for(config.params, config.strategy.q);

  sq::sim::SimStats stats;
  sq::sim::StdErrors se;
  std::vector<double> histogram;
  if (replications > 1) {
    const sq::sim::ReplicatedStats agg =
        sq::sim::replicate(config, replications);
    stats = agg.runs.front();
    stats.empirical_p00 = agg.empirical_p00.mean;
    stats.served_fraction = agg.served_fraction.mean;
    stats.mean_sojourn_served = agg.mean_sojourn_served.mean;
    stats.mean_profit_per_joiner = agg.mean_profit_per_joiner.mean;
    stats.welfare_rate = agg.welfare_rate.mean;
    se.empirical_p00 = agg.empirical_p00.se;
    se.served_fraction = agg.served_fraction.se;
    se.welfare_rate = agg.welfare_rate.se;
    se.mean_profit_per_joiner = agg.mean_profit_per_joiner.se;
    se.batches = replications;
    stats.joined_count = stats.served_count = stats.dismissed_count = 0;
    stats.balked_count = stats.in_system_at_end = 0;
    for (const auto& run : agg.runs) {
      stats.joined_count += run.joined_count;
      stats.served_count += run.served_count;
      stats.dismissed_count += run.dismissed_count;
      stats.balked_count += run.balked_count;
      stats.in_system_at_end += run.in_system_at_end;
    }
    for (const auto& level : agg.level_histogram) {
      histogram.push_back(level.mean);
    }
  } else {
    sq::sim::EventSink sink;
    if (trace) {
      sink = [](const sq::sim::EventRecord& record) {
        std::cerr << fmt(record.time, 9) << ','
                  << sq::sim::to_string(record.kind) << ','
                  << record.queue_length_after << ','
                  << record.server_state_after << '\n';
      };
    }
    stats = sq::sim::simulate(config, sink);
    se = stats.se;
    if (!stats.level_histogram.empty()) {
      histogram.assign(stats.level_histogram.rbegin()->first + 1, 0.0);
      for (const auto& [level, share] : stats.level_histogram) {
        histogram[level] = share;
      }
    }
  }

  json j;
  j["config"] = {{"params", params_to_json(config.params)},
                 {"q", config.strategy.q},
                 {"seed", config.seed},
                 {"warmup_fraction", config.warmup_fraction},
                 {"replications", replications}};
  if (config.max_events) j["config"]["events"] = *config.max_events;
  if (config.horizon) j["config"]["horizon"] = *config.horizon;
  j["stats"] = {{"empirical_p00", stats.empirical_p00},
                {"level_histogram", histogram},
                {"served_fraction", stats.served_fraction},
                {"mean_sojourn_served", stats.mean_sojourn_served},
                {"mean_profit_per_joiner", stats.mean_profit_per_joiner},
                {"welfare_rate", stats.welfare_rate},
                {"joined_count", stats.joined_count},
                {"served_count", stats.served_count},
                {"dismissed_count", stats.dismissed_count},
                {"balked_count", stats.balked_count},
                {"in_system_at_end", stats.in_system_at_end},
                {"horizon", stats.horizon},
                {"measured_time", stats.measured_time}};
  j["comparison"] = {
      {"empirical_p00",
       z_entry(stats.empirical_p00, refs.empirical_p00, se.empirical_p00)},
      {"served_fraction", z_entry(stats.served_fraction, refs.served_fraction,
                                  se.served_fraction)},
      {"welfare_rate",
       z_entry(stats.welfare_rate, refs.welfare_rate, se.welfare_rate)},
      {"mean_profit_per_joiner",
       z_entry(stats.mean_profit_per_joiner, refs.mean_profit_per_joiner,
               se.mean_profit_per_joiner)}};

  if (as_json) {
    return emit(j.dump(2) + "\n", out_path);
  }
  std::ostringstream out;
  out << "simulated " << (config.max_events ? "events=" : "horizon=")
      << (config.max_events ? fmt(static_cast<double>(*config.max_events))
                            : fmt(*config.horizon))
      << " q=" << fmt(config.strategy.q) << " seed=" << config.seed
      << " replications=" << replications << "\n";
  out << "counts: joined=" << stats.joined_count
      << " served=" << stats.served_count
      << " dismissed=" << stats.dismissed_count
      << " balked=" << stats.balked_count
      << " in_system_at_end=" << stats.in_system_at_end << "\n";
  auto line = [&](const char* name, double value, double ref, double err) {
    out << name << ": " << fmt(value) << " (analytic " << fmt(ref);
    if (err > 0.0) {
      out << ", z = " << fmt((value - ref) / err);
    }
    out << ")\n";
  };
  line("empirical_p00", stats.empirical_p00, refs.empirical_p00,
       se.empirical_p00);
  line("served_fraction", stats.served_fraction, refs.served_fraction,
       se.served_fraction);
  line("welfare_rate", stats.welfare_rate, refs.welfare_rate, se.welfare_rate);
  line("mean_profit_per_joiner", stats.mean_profit_per_joiner,
       refs.mean_profit_per_joiner, se.mean_profit_per_joiner);
  out << "mean_sojourn_served: " << fmt(stats.mean_sojourn_served) << "\n";
  return emit(out.str(), out_path);
}

struct DeltaRow {
  std::string name;
  double delta;
  bool applicable;
};

// Analytic-vs-oracle deltas for one parameter set.
std::vector<DeltaRow> validation_deltas(const sq::SystemParams& params) {
  std::vector<DeltaRow> rows;

  const int truncation = sq::oracle::tail_truncation(params, 1.0);
  const auto gen = sq::oracle::build_generator(params, 1.0, truncation);
  const auto pi = sq::oracle::solve_stationary(gen);
  const auto dist = sq::analytic::stationary(params, 1.0);
  double stationary_delta = std::abs(pi[0] - dist.p00);
  for (int n = 0; n <= truncation; ++n) {
    stationary_delta =
        std::max(stationary_delta, std::abs(pi[n + 1] - dist.level_prob(n)));
  }
  rows.push_back({"stationary", stationary_delta, true});

  const auto individual = sq::analytic::individual_equilibrium(params);
  rows.push_back(
      {"q_e",
       std::abs(individual.q_star - sq::oracle::numeric_equilibrium(params)),
       true});

  const auto social = sq::analytic::social_optimum(params);
  rows.push_back(
      {"q_s",
       std::abs(social.q_star - sq::oracle::numeric_social_optimum(params)),
       true});

  const auto fee = sq::analytic::optimal_price(params);
  if (fee) {
    // Independent closed form: p* = reward - sqrt(cost*reward/mu).
    const double identity =
        params.reward - std::sqrt(params.cost * params.reward / params.mu);
    const double aligned =
        sq::analytic::equilibrium_with_fee(params, *fee).q_star;
    rows.push_back({"p_star", std::abs(*fee - identity), true});
    rows.push_back({"fee_alignment", std::abs(aligned - social.q_star), true});
  } else {
    rows.push_back({"p_star", 0.0, false});
    rows.push_back({"fee_alignment", 0.0, false});
  }
  return rows;
}

int run_validate(const sq::SystemParams& params, double tolerance, int draws,
                 std::uint64_t seed, bool as_json,
                 const std::string& out_path) {
  if (!(tolerance > 0.0)) {
    throw sq::DomainError("tolerance", "tolerance must be positive");
  }
  sq::validate(params);

  std::vector<DeltaRow> rows = validation_deltas(params);
  if (draws > 0) {
    std::mt19937_64 rng(seed);
    std::uniform_real_distribution<double> rate(0.1, 10.0);
    std::uniform_real_distribution<double> money(0.1, 20.0);
    std::vector<DeltaRow> maxima;
    for (int d = 0; d < draws; ++d) {
      sq::SystemParams drawn{rate(rng), rate(rng), rate(rng),
                             rate(rng), money(rng), money(rng)};
      for (const DeltaRow& row : validation_deltas(drawn)) {
        auto it = std::find_if(
            maxima.begin(), maxima.end(),
            [&](const DeltaRow& m) { return m.name == row.name; });
        if (it == maxima.end()) {
          maxima.push_back(row);
        } else if (row.applicable) {
          it->applicable = true;
          it->delta = std::max(it->delta, row.delta);
        }
      }
    }
    for (DeltaRow& m : maxima) {
      m.name = "draws_max_" + m.name;
      rows.push_back(m);
    }
  }

  bool pass = true;
  for (const DeltaRow& row : rows) {
    if (row.applicable && !(row.delta <= tolerance)) pass = false;
  }

  if (as_json) {
    json j;
    j["tolerance"] = tolerance;
    j["draws"] = draws;
    j["pass"] = pass;
    j["deltas"] = json::array();
    for (const DeltaRow& row : rows) {
      json r{{"name", row.name}};
      r["delta"] = row.applicable ? json(row.delta) : json(nullptr);
      r["pass"] = !row.applicable || row.delta <= tolerance;
      j["deltas"].push_back(std::move(r));
    }
    const int rc = emit(j.dump(2) + "\n", out_path);
    return rc != 0 ? rc : (pass ? 0 : 1);
  }

  std::ostringstream out;
  out << "analytic vs oracle (tolerance " << fmt(tolerance) << ")\n";
  for (const DeltaRow& row : rows) {
    out << "  " << row.name << ": ";
    if (!row.applicable) {
      out << "n/a (no interior optimum)\n";
      continue;
    }
    out << "delta " << fmt(row.delta) << "  "
        << (row.delta <= tolerance ? "pass" : "FAIL") << "\n";
  }
  out << (pass ? "PASS" : "FAIL") << "\n";
  const int rc = emit(out.str(), out_path);
  return rc != 0 ? rc : (pass ? 0 : 1);
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{
      "Queueing-game analysis of SU spectrum access under PU dismissal:\n"
      "stationary law, join-or-balk equilibrium, social optimum, admission\n"
      "fee, discrete-event simulation and analytic-vs-oracle validation."};
  app.require_subcommand(1);

  // --- analytic ---
  auto* analytic_cmd = app.add_subcommand(
      "analytic", "Equilibrium, social optimum and optimal fee at one point");
  sq::SystemParams analytic_params;
  add_param_options(analytic_cmd, analytic_params);
  bool analytic_json = false;
  std::string analytic_out;
  analytic_cmd->add_flag("--json", analytic_json, "machine-readable output");
  analytic_cmd->add_option("--out", analytic_out, "write output to a file");

  // --- sweep ---
  auto* sweep_cmd = app.add_subcommand(
      "sweep", "CSV sweep of q_e, q_s, welfare and p* over the reward");
  sq::SystemParams sweep_params;
  add_param_options(sweep_cmd, sweep_params);
  double reward_min = 0.1, reward_max = 70.0;
  int steps = 200;
  std::string scale = "linear";
  bool sweep_json = false;
  std::string sweep_out;
  sweep_cmd->add_option("--reward-min", reward_min, "lowest reward")
      ->capture_default_str();
  sweep_cmd->add_option("--reward-max", reward_max, "highest reward")
      ->capture_default_str();
  sweep_cmd->add_option("--steps", steps, "number of sweep points (>= 2)")
      ->capture_default_str();
  sweep_cmd->add_option("--scale", scale, "linear or log spacing")
      ->check(CLI::IsMember({"linear", "log"}))
      ->capture_default_str();
  sweep_cmd->add_flag("--json", sweep_json, "JSON rows instead of CSV");
  sweep_cmd->add_option("--out", sweep_out, "write output to a file");

  // --- simulate ---
  auto* sim_cmd = app.add_subcommand(
      "simulate", "Discrete-event simulation with analytic side-by-side");
  sq::SystemParams sim_params;
  add_param_options(sim_cmd, sim_params);
  double sim_q = 1.0;
  std::uint64_t sim_events = 0;
  double sim_horizon = 0.0;
  std::uint64_t sim_seed = 0;
  int replications = 1;
  double warmup_fraction = 0.1;
  bool sim_trace = false, sim_json = false;
  std::string sim_out;
  sim_cmd->add_option("--q", sim_q, "joining probability")
      ->capture_default_str();
  auto* events_opt =
      sim_cmd->add_option("--events", sim_events,
                          "run length in events (default 1000000)");
  auto* horizon_opt =
      sim_cmd->add_option("--horizon", sim_horizon,
                          "run length in simulated time");
  auto* seed_opt = sim_cmd->add_option(
      "--seed", sim_seed, "RNG seed (falls back to $SPECTRUM_QUEUE_SEED)");
  sim_cmd->add_option("--replications", replications,
                      "independent replications with derived seeds")
      ->capture_default_str();
  sim_cmd->add_option("--warmup-fraction", warmup_fraction,
                      "run fraction excluded from statistics")
      ->capture_default_str();
  sim_cmd->add_flag("--trace", sim_trace,
                    "write 'time,kind,N,I' event records to stderr");
  sim_cmd->add_flag("--json", sim_json, "machine-readable output");
  sim_cmd->add_option("--out", sim_out, "write output to a file");

  // --- validate ---
  auto* validate_cmd = app.add_subcommand(
      "validate", "Check analytic results against the numeric oracle");
  sq::SystemParams validate_params;
  add_param_options(validate_cmd, validate_params);
  double tolerance = 1e-6;
  int draws = 0;
  std::uint64_t validate_seed = 0;
  bool validate_json = false;
  std::string validate_out;
  validate_cmd->add_option("--tolerance", tolerance, "maximum allowed delta")
      ->capture_default_str();
  validate_cmd->add_option("--draws", draws,
                           "additional random parameter draws")
      ->capture_default_str();
  auto* validate_seed_opt = validate_cmd->add_option(
      "--seed", validate_seed, "seed for the random draws");
  validate_cmd->add_flag("--json", validate_json, "machine-readable output");
  validate_cmd->add_option("--out", validate_out, "write output to a file");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : 2;
  }

  try {
    if (*analytic_cmd) {
      return run_analytic(analytic_params, analytic_json, analytic_out);
    }
    if (*sweep_cmd) {
      return run_sweep(sweep_params, reward_min, reward_max, steps, scale,
                       sweep_json, sweep_out);
    }
    if (*sim_cmd) {
      if (events_opt->count() > 0 && horizon_opt->count() > 0) {
        throw sq::sim::ConfigError("set only one of --events and --horizon");
      }
      if (replications < 1) {
        throw sq::sim::ConfigError("--replications must be >= 1");
      }
      sq::sim::SimConfig config;
      config.params = sim_params;
      config.strategy.q = sim_q;
      if (horizon_opt->count() > 0) {
        config.horizon = sim_horizon;
      } else {
        config.max_events = events_opt->count() > 0 ? sim_events : 1000000;
      }
      config.seed = resolve_seed(seed_opt, sim_seed);
      config.warmup_fraction = warmup_fraction;
      return run_simulate(config, replications, sim_trace, sim_json, sim_out);
    }
    if (*validate_cmd) {
      return run_validate(validate_params, tolerance, draws,
                          resolve_seed(validate_seed_opt, validate_seed),
                          validate_json, validate_out);
    }
  } catch (const sq::DomainError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 2;
  } catch (const sq::sim::ConfigError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 2;
  } catch (const sq::oracle::SolveError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 2;
  }
  return 0;
}
