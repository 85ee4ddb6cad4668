#pragma once

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdint>
#include <map>
#include <random>
#include <string>
#include <vector>

#include "tamakkon/core.hpp"
#include "tamakkon/rf.hpp"  // detail::mix_seed

namespace tamakkon::simulator {

// Synthetic application archetype. Architecture flags mirror the profile
// schema's application-architecture features.
struct AppSpec {
  std::string app_id = "app";
  double app_type = 0.0;          // categorical code
  double multithreading = 0.0;    // {0,1}
  double external_files = 0.0;    // {0,1}
  double loaded_in_memory = 0.0;  // {0,1}
  double parallel = 0.0;          // {0,1}
  double file_size = 0.0;         // MB
  std::uint32_t threads = 1;      // worker threads when parallel
  double base_work = 1000.0;      // abstract work units
  double mem_working_set_gib = 1.0;
  double parallel_efficiency = 0.8;  // in [0,1]

  void check() const {
    if (!(base_work > 0)) throw Error(ErrorCode::InvalidArgument, "base_work must be > 0");
    for (double f : {multithreading, external_files, loaded_in_memory, parallel}) {
      if (f != 0.0 && f != 1.0) {
        throw Error(ErrorCode::InvalidArgument, "architecture flags must be 0 or 1");
      }
    }
  }
};

struct NoiseModel {
  double lognormal_sigma = 0.0;
  std::array<double, 7> day_effect = {1, 1, 1, 1, 1, 1, 1};
  std::map<std::string, double> per_instance_jitter;  // default 1.0
  double penalty_scale = 2.0;

  // Day multipliers drawn once from a seeded lognormal(sigma = 0.05).
  static NoiseModel with_default_day_effect(std::uint64_t seed, double sigma = 0.0) {
    NoiseModel n;
    n.lognormal_sigma = sigma;
    std::mt19937_64 rng(seed);
    std::lognormal_distribution<double> dist(0.0, 0.05);
    for (auto& d : n.day_effect) d = dist(rng);
    return n;
  }
};

inline FeatureSchema profile_schema() {
  FeatureSchema s;
  s.response = "exectime";
  auto add = [&s](std::string name, FeatureCategory cat, FeatureKind kind) {
    s.descriptors.push_back(FeatureDescriptor{std::move(name), cat, kind, std::nullopt});
  };
  add("vmtype", FeatureCategory::Cloud, FeatureKind::Categorical);
  add("vcpu", FeatureCategory::Cloud, FeatureKind::Numeric);
  add("compute_units", FeatureCategory::Cloud, FeatureKind::Numeric);
  add("ram", FeatureCategory::Cloud, FeatureKind::Numeric);
  add("day", FeatureCategory::Deployment, FeatureKind::Numeric);
  add("subm_time", FeatureCategory::Deployment, FeatureKind::Numeric);
  add("app_type", FeatureCategory::ApplicationArchitecture, FeatureKind::Numeric);
  add("multithreading", FeatureCategory::ApplicationArchitecture, FeatureKind::Boolean);
  add("external_files", FeatureCategory::ApplicationArchitecture, FeatureKind::Boolean);
  add("loaded_in_memory", FeatureCategory::ApplicationArchitecture, FeatureKind::Boolean);
  add("parallel", FeatureCategory::ApplicationArchitecture, FeatureKind::Boolean);
  add("file_size", FeatureCategory::ApplicationArchitecture, FeatureKind::Numeric);
  return s;
}

// Noise-free execution-time model:
//   speed = compute_units * (1 + eff * (min(vcpu, threads) - 1))  when parallel
//   mem_penalty = 1 + penalty_scale * max(0, working_set - ram) / ram
//   time = base_work / speed * mem_penalty
inline double closed_form_time(const AppSpec& app, const InstanceType& inst,
                               double penalty_scale) {
  double speed = inst.compute_units;
  if (app.parallel != 0.0) {
    const double active = std::min<double>(inst.vcpu, app.threads);
    speed = inst.compute_units * (1.0 + app.parallel_efficiency * (active - 1.0));
  }
  const double overflow = std::max(0.0, app.mem_working_set_gib - inst.ram_gib);
  const double mem_penalty = 1.0 + penalty_scale * overflow / inst.ram_gib;
  return app.base_work / speed * mem_penalty;
}

inline ProfileDataset simulate_runs(const AppSpec& app, const InstanceCatalog& catalog,
                                    std::size_t runs_per_instance, const NoiseModel& noise,
                                    std::uint64_t seed) {
  app.check();
  if (runs_per_instance < 1) {
    throw Error(ErrorCode::InvalidArgument, "runs_per_instance must be >= 1");
  }
  ProfileDataset ds;
  ds.schema = profile_schema();
  ds.app_id = app.app_id;
  ds.provider_id = catalog.provider_id;

  // vmtype codes: lexicographic over instance names, matching CSV ingestion.
  std::vector<std::string> names;
  for (const auto& i : catalog.instances) names.push_back(i.name);
  std::sort(names.begin(), names.end());
  ds.category_levels["vmtype"] = names;
  auto code_of = [&names](const std::string& n) {
    return static_cast<double>(std::lower_bound(names.begin(), names.end(), n) - names.begin());
  };

  for (std::size_t ii = 0; ii < catalog.instances.size(); ++ii) {
    const auto& inst = catalog.instances[ii];
    std::mt19937_64 rng(learners::detail::mix_seed(seed, ii));
    std::lognormal_distribution<double> lognorm(0.0, noise.lognormal_sigma);
    std::uniform_int_distribution<int> day_dist(0, 6);
    std::uniform_real_distribution<double> hour_dist(0.0, 24.0);
    double jitter = 1.0;
    if (auto it = noise.per_instance_jitter.find(inst.name);
        it != noise.per_instance_jitter.end()) {
      jitter = it->second;
    }
    for (std::size_t r = 0; r < runs_per_instance; ++r) {
      const int day = day_dist(rng);
      const double subm_time = hour_dist(rng);
      double t = closed_form_time(app, inst, noise.penalty_scale);
      t *= noise.day_effect[day];
      t *= noise.lognormal_sigma > 0.0 ? lognorm(rng) : 1.0;
      t *= jitter;

      ProfileRecord rec;
      rec.values["vmtype"] = code_of(inst.name);
      rec.values["vcpu"] = static_cast<double>(inst.vcpu);
      rec.values["compute_units"] = inst.compute_units;
      rec.values["ram"] = inst.ram_gib;
      rec.values["day"] = static_cast<double>(day);
      rec.values["subm_time"] = subm_time;
      rec.values["app_type"] = app.app_type;
      rec.values["multithreading"] = app.multithreading;
      rec.values["external_files"] = app.external_files;
      rec.values["loaded_in_memory"] = app.loaded_in_memory;
      rec.values["parallel"] = app.parallel;
      rec.values["file_size"] = app.file_size;
      rec.response = t;
      ds.records.push_back(std::move(rec));
    }
  }
  return ds;
}

// Builds a perturbed sibling of an application:
//   0.0  -> identical architecture (SIMILAR twin)
//   ~0.3 -> a minority of architecture features changed (PARTLY_SIMILAR)
//   1.0  -> a majority changed plus base_work rescale (NOT_SIMILAR)
inline AppSpec derive_twin(const AppSpec& app, double perturbation, std::uint64_t seed) {
  AppSpec twin = app;
  twin.app_id = app.app_id + "-twin";
  if (perturbation <= 0.0) return twin;

  // 6 architecture features; flip round(perturbation * 6) of them, chosen by seed.
  const int flips = std::min(6, static_cast<int>(std::lround(perturbation * 6.0)));
  std::vector<int> order = {0, 1, 2, 3, 4, 5};
  std::mt19937_64 rng(seed);
  std::shuffle(order.begin(), order.end(), rng);
  for (int i = 0; i < flips; ++i) {
    switch (order[i]) {
      case 0: twin.app_type = app.app_type + 1.0; break;
      case 1: twin.multithreading = 1.0 - app.multithreading; break;
      case 2: twin.external_files = 1.0 - app.external_files; break;
      case 3: twin.loaded_in_memory = 1.0 - app.loaded_in_memory; break;
      case 4: twin.parallel = 1.0 - app.parallel; break;
      case 5: twin.file_size = app.file_size * 3.0 + 100.0; break;
    }
  }
  if (perturbation >= 1.0) twin.base_work = app.base_work * 4.0;
  return twin;
}

}  // namespace tamakkon::simulator
