#include "spectrum_queue/model.hpp"

#include <cmath>

#include "json.hpp"

namespace spectrum_queue {

namespace {

void check(bool ok, const char* field, const char* requirement) {
  if (!ok) {
    throw DomainError(field, std::string(field) + " " + requirement);
  }
}

}  // namespace

const SystemParams& validate(const SystemParams& params) {
  // Written as !(x op bound) so NaN fails the bound it participates in.
  check(std::isfinite(params.lambda) && !(params.lambda < 0.0), "lambda",
        "must be a finite nonnegative rate");
  check(std::isfinite(params.xi) && params.xi > 0.0, "xi",
        "must be a finite positive rate");
  check(std::isfinite(params.mu) && params.mu > 0.0, "mu",
        "must be a finite positive rate");
  check(std::isfinite(params.eta) && params.eta > 0.0, "eta",
        "must be a finite positive rate");
  check(std::isfinite(params.cost) && params.cost > 0.0, "cost",
        "must be a finite positive cost rate");
  check(std::isfinite(params.reward) && !(params.reward < 0.0), "reward",
        "must be a finite nonnegative reward");
  return params;
}

double validate_probability(double q, std::string_view field) {
  if (!(q >= 0.0 && q <= 1.0)) {
    throw DomainError(std::string(field),
                      std::string(field) + " must lie in [0, 1]");
  }
  return q;
}

std::string_view to_string(Regime regime) {
  switch (regime) {
    case Regime::AlwaysJoin:
      return "always_join";
    case Regime::Mixed:
      return "mixed";
    case Regime::AlwaysBalk:
      return "always_balk";
  }
  return "unknown";
}

double StationaryDistribution::level_prob(int n) const {
  if (n < 0) {
    throw DomainError("n", "queue level must be >= 0");
  }
  return (1.0 - p00) * (1.0 - root_x) * std::pow(root_x, n);
}

double StationaryDistribution::tail_mass(int n) const {
  if (n < 0) {
    throw DomainError("n", "queue level must be >= 0");
  }
  return (1.0 - p00) * std::pow(root_x, n + 1);
}

std::string to_json(const SystemParams& params) {
  nlohmann::json j{{"lambda", params.lambda}, {"xi", params.xi},
                   {"mu", params.mu},         {"eta", params.eta},
                   {"cost", params.cost},     {"reward", params.reward}};
  return j.dump();
}

SystemParams params_from_json(std::string_view text) {
  nlohmann::json j = nlohmann::json::parse(text, nullptr, false);
  if (j.is_discarded() || !j.is_object()) {
    throw DomainError("json", "input is not a JSON object");
  }
  auto field = [&](const char* name) {
    if (!j.contains(name) || !j[name].is_number()) {
      throw DomainError(name, std::string(name) + " missing or not a number");
    }
    return j[name].get<double>();
  };
  SystemParams params;
  params.lambda = field("lambda");
  params.xi = field("xi");
  params.mu = field("mu");
  params.eta = field("eta");
  params.cost = field("cost");
  params.reward = field("reward");
  return validate(params);
}

}  // namespace spectrum_queue
