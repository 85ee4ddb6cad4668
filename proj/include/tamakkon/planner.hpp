#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

#include "tamakkon/core.hpp"
#include "tamakkon/learners.hpp"

namespace tamakkon::planner {

enum class Objective { MinCost, MinTime, Weighted };

struct Constraints {
  std::optional<double> max_cost_usd;
  std::optional<double> max_time_s;
  Objective objective = Objective::MinCost;
  double w_cost = 1.0;
  double w_time = 0.0;

  void check() const {
    if (objective == Objective::Weighted) {
      if (w_cost < 0 || w_time < 0 || (w_cost == 0 && w_time == 0)) {
        throw Error(ErrorCode::InvalidArgument, "weights must be >= 0 and not both zero");
      }
    }
  }
};

// billable = max(minimum, ceil(time / granularity) * granularity); cost is
// pro-rated against the hourly price.
inline double billed_cost(double time_s, const BillingRule& rule, double price_per_hour) {
  if (!(time_s > 0)) throw Error(ErrorCode::InvalidArgument, "billed_cost: time must be > 0");
  const double g = static_cast<double>(rule.granularity_seconds);
  double billable = std::ceil(time_s / g) * g;
  billable = std::max(billable, static_cast<double>(rule.minimum_seconds));
  return billable / 3600.0 * price_per_hour;
}

struct PlanCandidate {
  std::string instance;
  double predicted_time_s = 0.0;
  double billed_cost_usd = 0.0;
  bool feasible = true;
};

struct DeploymentPlan {
  std::vector<PlanCandidate> candidates;
  std::optional<std::string> chosen;
};

namespace detail {

// Objective score; weighted mode min-max normalizes cost and time over the
// candidate set so the weights stay unit-free.
inline std::vector<double> scores(const std::vector<PlanCandidate>& cs, const Constraints& con) {
  std::vector<double> out(cs.size());
  if (con.objective == Objective::MinCost) {
    for (std::size_t i = 0; i < cs.size(); ++i) out[i] = cs[i].billed_cost_usd;
  } else if (con.objective == Objective::MinTime) {
    for (std::size_t i = 0; i < cs.size(); ++i) out[i] = cs[i].predicted_time_s;
  } else {
    double cmin = cs.front().billed_cost_usd, cmax = cmin;
    double tmin = cs.front().predicted_time_s, tmax = tmin;
    for (const auto& c : cs) {
      cmin = std::min(cmin, c.billed_cost_usd);
      cmax = std::max(cmax, c.billed_cost_usd);
      tmin = std::min(tmin, c.predicted_time_s);
      tmax = std::max(tmax, c.predicted_time_s);
    }
    const double crange = cmax - cmin, trange = tmax - tmin;
    for (std::size_t i = 0; i < cs.size(); ++i) {
      const double nc = crange > 0 ? (cs[i].billed_cost_usd - cmin) / crange : 0.0;
      const double nt = trange > 0 ? (cs[i].predicted_time_s - tmin) / trange : 0.0;
      out[i] = con.w_cost * nc + con.w_time * nt;
    }
  }
  return out;
}

}  // namespace detail

// Builds each instance's feature vector from its specs plus the workload
// features, predicts execution time, and ranks by the objective. Feasible
// candidates come first; ties break on cost, then name.
inline DeploymentPlan plan(const learners::ModelArtifact& artifact, const InstanceCatalog& catalog,
                           const std::map<std::string, double>& workload,
                           const Constraints& constraints) {
  constraints.check();
  if (catalog.instances.empty()) throw Error(ErrorCode::EmptyCatalog, "plan: empty catalog");

  std::vector<std::string> names;
  for (const auto& i : catalog.instances) names.push_back(i.name);
  std::sort(names.begin(), names.end());

  std::vector<PlanCandidate> cs;
  for (const auto& inst : catalog.instances) {
    std::map<std::string, double> x = workload;
    x["vcpu"] = static_cast<double>(inst.vcpu);
    x["compute_units"] = inst.compute_units;
    x["ram"] = inst.ram_gib;
    x["storage"] = inst.storage_gb;
    x["vmtype"] = static_cast<double>(
        std::lower_bound(names.begin(), names.end(), inst.name) - names.begin());
    PlanCandidate c;
    c.instance = inst.name;
    c.predicted_time_s = learners::predict(artifact, x);
    c.billed_cost_usd = billed_cost(c.predicted_time_s, inst.billing, inst.price_per_hour_usd);
    c.feasible = (!constraints.max_cost_usd || c.billed_cost_usd <= *constraints.max_cost_usd) &&
                 (!constraints.max_time_s || c.predicted_time_s <= *constraints.max_time_s);
    cs.push_back(std::move(c));
  }

  const auto score = detail::scores(cs, constraints);
  std::vector<std::size_t> order(cs.size());
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
    if (cs[a].feasible != cs[b].feasible) return cs[a].feasible;
    if (score[a] != score[b]) return score[a] < score[b];
    if (cs[a].billed_cost_usd != cs[b].billed_cost_usd) {
      return cs[a].billed_cost_usd < cs[b].billed_cost_usd;
    }
    return cs[a].instance < cs[b].instance;
  });

  DeploymentPlan out;
  for (auto i : order) out.candidates.push_back(cs[i]);
  if (!out.candidates.empty() && out.candidates.front().feasible) {
    out.chosen = out.candidates.front().instance;
  }
  return out;
}

inline nlohmann::json plan_to_json(const DeploymentPlan& p) {
  nlohmann::json cands = nlohmann::json::array();
  for (const auto& c : p.candidates) {
    cands.push_back({{"instance", c.instance},
                     {"predicted_time_s", c.predicted_time_s},
                     {"billed_cost_usd", c.billed_cost_usd},
                     {"feasible", c.feasible}});
  }
  nlohmann::json j{{"candidates", cands}};
  if (p.chosen) j["chosen"] = *p.chosen;
  else j["chosen"] = nullptr;
  return j;
}

}  // namespace tamakkon::planner
