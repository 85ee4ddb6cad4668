#pragma once

#include <algorithm>
#include <cstdint>
#include <map>
#include <string>
#include <variant>
#include <vector>

#include <json.hpp>

#include "tamakkon/core.hpp"
#include "tamakkon/mpr.hpp"
#include "tamakkon/rf.hpp"
#include "tamakkon/statkit.hpp"
#include "tamakkon/svr.hpp"

namespace tamakkon::learners {

enum class LearnerKind { Mpr, Svr, Rf };

inline const char* to_string(LearnerKind k) {
  switch (k) {
    case LearnerKind::Mpr: return "MPR";
    case LearnerKind::Svr: return "SVR";
    case LearnerKind::Rf: return "RF";
  }
  return "?";
}

inline LearnerKind learner_from_string(const std::string& s) {
  if (s == "MPR") return LearnerKind::Mpr;
  if (s == "SVR") return LearnerKind::Svr;
  if (s == "RF") return LearnerKind::Rf;
  throw Error(ErrorCode::InvalidArgument, "unknown learner: " + s);
}

struct TrainingMeta {
  std::string app_id;
  std::string provider_id;
  std::size_t n_rows = 0;
  std::uint64_t seed = 0;
  std::string timestamp;  // informational; excluded from canonical form

  friend bool operator==(const TrainingMeta&, const TrainingMeta&) = default;
};

struct ModelArtifact {
  LearnerKind learner = LearnerKind::Mpr;
  std::variant<MprModel, SvrModel, RfModel> model;
  std::vector<std::string> significant_features;
  TrainingMeta meta;
  statkit::Assessment assessment;
  double prediction_floor = 0.001;  // seconds
};

inline double predict(const ModelArtifact& a, const std::map<std::string, double>& x) {
  double y = std::visit([&](const auto& m) { return m.evaluate(x); }, a.model);
  if (!std::isfinite(y)) y = a.prediction_floor;
  return std::max(y, a.prediction_floor);
}

// Predictors the pipeline keeps by default when the schema has them.
inline const std::vector<std::string>& default_significant_features() {
  static const std::vector<std::string> names = {
      "vcpu",        "ram",           "compute_units",  "multithreading", "loaded_in_memory",
      "app_type",    "external_files", "parallel",      "file_size",      "day"};
  return names;
}

inline bool is_constant_column(const ProfileDataset& ds, const std::string& name) {
  const auto col = ds.column(name);
  return std::all_of(col.begin(), col.end(), [&](double v) { return v == col.front(); });
}

// Significant-predictor selection: drop constant columns, and when the schema
// overlaps the default predictor list, keep that intersection.
inline std::vector<std::string> select_significant_features(const ProfileDataset& ds) {
  std::vector<std::string> varying;
  for (const auto& d : ds.schema.descriptors) {
    if (!is_constant_column(ds, d.name)) varying.push_back(d.name);
  }
  std::vector<std::string> out;
  for (const auto& n : default_significant_features()) {
    if (std::find(varying.begin(), varying.end(), n) != varying.end()) out.push_back(n);
  }
  if (out.empty()) out = varying;
  if (out.empty()) {
    throw Error(ErrorCode::DegenerateDesign, "no varying predictor columns");
  }
  return out;
}

struct TrainConfig {
  MprConfig mpr;
  SvrConfig svr;
  RfConfig rf;
  std::size_t cv_folds = 10;
  statkit::RrmseDenominator rrmse_denominator = statkit::RrmseDenominator::Actual;
};

namespace detail {

inline std::variant<MprModel, SvrModel, RfModel> fit_one(const ProfileDataset& ds,
                                                         const std::vector<std::string>& feats,
                                                         LearnerKind learner,
                                                         const TrainConfig& cfg,
                                                         std::uint64_t seed) {
  switch (learner) {
    case LearnerKind::Mpr: return fit_mpr(ds, feats, cfg.mpr, seed);
    case LearnerKind::Svr: return fit_svr(ds, feats, cfg.svr, seed);
    case LearnerKind::Rf: return fit_rf(ds, feats, cfg.rf, seed);
  }
  throw Error(ErrorCode::InvalidArgument, "bad learner");
}

inline ProfileDataset subset(const ProfileDataset& ds, const std::vector<std::size_t>& rows) {
  ProfileDataset out;
  out.schema = ds.schema;
  out.app_id = ds.app_id;
  out.provider_id = ds.provider_id;
  out.category_levels = ds.category_levels;
  out.records.reserve(rows.size());
  for (auto i : rows) out.records.push_back(ds.records[i]);
  return out;
}

}  // namespace detail

// K-fold cross-validated assessment of a (learner, config) on a dataset.
// Hyperparameter search happens once on the full data (captured by cfg when
// the caller pre-selects); folds refit with the same configuration.
inline statkit::Assessment cross_validate(const ProfileDataset& ds,
                                          const std::vector<std::string>& feats,
                                          LearnerKind learner, const TrainConfig& cfg,
                                          std::uint64_t seed) {
  const std::size_t n = ds.records.size();
  const std::size_t k = std::min(cfg.cv_folds, n);
  statkit::Assessment out;
  out.n = n;
  if (k < 2) {
    out.rrmse_percent = 0.0;
    out.mse = 0.0;
    return out;
  }
  auto folds = statkit::kfold_split(n, k, seed);
  std::vector<double> all_pred, all_act;
  for (std::size_t fi = 0; fi < folds.size(); ++fi) {
    std::vector<bool> held(n, false);
    for (auto i : folds[fi]) held[i] = true;
    std::vector<std::size_t> train;
    for (std::size_t i = 0; i < n; ++i) {
      if (!held[i]) train.push_back(i);
    }
    auto train_ds = detail::subset(ds, train);
    std::variant<MprModel, SvrModel, RfModel> model;
    try {
      model = detail::fit_one(train_ds, feats, learner, cfg, seed);
    } catch (const Error&) {
      continue;  // fold too small for this learner; skip
    }
    std::vector<double> pred, act;
    for (auto i : folds[fi]) {
      double y = std::visit([&](const auto& m) { return m.evaluate(ds.records[i].values); }, model);
      pred.push_back(std::max(y, 1e-9));
      act.push_back(ds.records[i].response);
      all_pred.push_back(pred.back());
      all_act.push_back(act.back());
    }
    out.per_fold.emplace_back(statkit::rrmse(pred, act, cfg.rrmse_denominator),
                              statkit::mse(pred, act));
  }
  if (all_pred.empty()) {
    throw Error(ErrorCode::TooFewRows, "cross_validate: no fold could be fit");
  }
  out.rrmse_percent = statkit::rrmse(all_pred, all_act, cfg.rrmse_denominator);
  out.mse = statkit::mse(all_pred, all_act);
  return out;
}

inline ModelArtifact train_base_model(const ProfileDataset& ds, LearnerKind learner,
                                      std::uint64_t seed, const TrainConfig& cfg = {}) {
  if (ds.records.empty()) throw Error(ErrorCode::EmptyDataset, "train_base_model: empty dataset");
  ModelArtifact a;
  a.learner = learner;
  a.significant_features = select_significant_features(ds);
  a.model = detail::fit_one(ds, a.significant_features, learner, cfg, seed);

  // Assessment folds re-use the hyperparameters chosen on the full data.
  TrainConfig fold_cfg = cfg;
  if (learner == LearnerKind::Svr) {
    const auto& m = std::get<SvrModel>(a.model);
    fold_cfg.svr.kernel_grid = {m.kernel};
    fold_cfg.svr.c_grid = {m.c};
    fold_cfg.svr.epsilon_grid = {m.epsilon};
  } else if (learner == LearnerKind::Mpr) {
    const auto& m = std::get<MprModel>(a.model);
    fold_cfg.mpr.fixed_terms = m.terms;
    fold_cfg.mpr.fixed_degree = m.degree;
  }
  a.assessment = cross_validate(ds, a.significant_features, learner, fold_cfg, seed);
  a.meta = TrainingMeta{ds.app_id, ds.provider_id, ds.records.size(), seed, ""};
  return a;
}

inline statkit::Assessment assess(const ModelArtifact& a, const ProfileDataset& test,
                                  statkit::RrmseDenominator denom = statkit::RrmseDenominator::Actual) {
  if (test.records.empty()) throw Error(ErrorCode::EmptyDataset, "assess: empty test set");
  std::vector<double> pred, act;
  for (const auto& r : test.records) {
    pred.push_back(predict(a, r.values));
    act.push_back(r.response);
  }
  statkit::Assessment out;
  out.n = test.records.size();
  out.rrmse_percent = statkit::rrmse(pred, act, denom);
  out.mse = statkit::mse(pred, act);
  return out;
}

// Smallest training fraction whose held-out error has converged: improving by
// less than 2% relative when moving to both f+0.1 and f+0.2.
inline double sufficient_data_fraction(const ProfileDataset& ds, LearnerKind learner,
                                       std::uint64_t seed, const TrainConfig& cfg = {},
                                       const std::string& stratify_feature = "vmtype") {
  const std::size_t n = ds.records.size();
  if (n < 20) throw Error(ErrorCode::TooFewRows, "sufficient_data_fraction: need >= 20 rows");

  // Fixed held-out 20%, stratified by instance type when the column exists.
  std::vector<std::size_t> idx(n);
  std::iota(idx.begin(), idx.end(), std::size_t{0});
  std::mt19937_64 rng(seed);
  if (ds.schema.find(stratify_feature)) {
    std::stable_sort(idx.begin(), idx.end(), [&](std::size_t a, std::size_t b) {
      return ds.records[a].values.at(stratify_feature) < ds.records[b].values.at(stratify_feature);
    });
  } else {
    std::shuffle(idx.begin(), idx.end(), rng);
  }
  std::vector<std::size_t> train_pool, held;
  for (std::size_t i = 0; i < n; ++i) {
    (i % 5 == 0 ? held : train_pool).push_back(idx[i]);
  }
  std::shuffle(train_pool.begin(), train_pool.end(), rng);
  auto held_ds = detail::subset(ds, held);

  auto feats = select_significant_features(ds);
  std::vector<double> errors;  // eval MSE at fractions 0.1 .. 1.0
  for (int step = 1; step <= 10; ++step) {
    const double f = step / 10.0;
    std::size_t take = std::max<std::size_t>(
        2, static_cast<std::size_t>(std::llround(f * static_cast<double>(train_pool.size()))));
    take = std::min(take, train_pool.size());
    std::vector<std::size_t> rows(train_pool.begin(), train_pool.begin() + take);
    auto sub = detail::subset(ds, rows);
    double err;
    try {
      auto model = detail::fit_one(sub, feats, learner, cfg, seed);
      std::vector<double> pred, act;
      for (const auto& r : held_ds.records) {
        pred.push_back(std::visit([&](const auto& m) { return m.evaluate(r.values); }, model));
        act.push_back(r.response);
      }
      err = statkit::mse(pred, act);
    } catch (const Error&) {
      err = std::numeric_limits<double>::infinity();
    }
    errors.push_back(err);
  }
  double scale = 0.0;
  for (const auto& r : held_ds.records) scale += r.response * r.response;
  scale /= static_cast<double>(held_ds.records.size());
  for (int step = 1; step <= 8; ++step) {
    const double e = errors[step - 1];
    if (!std::isfinite(e)) continue;
    if (e <= 1e-9 * scale) return step / 10.0;  // already converged to zero error
    const double imp1 = (e - errors[step]) / e;
    const double imp2 = (e - errors[step + 1]) / e;
    // converged = stable, not merely "no longer improving"
    if (std::abs(imp1) < 0.02 && std::abs(imp2) < 0.02) return step / 10.0;
  }
  return 1.0;
}

// ---- Canonical model serialization (sorted keys; timestamp excluded) ----

inline nlohmann::json to_json(const MprModel& m) {
  nlohmann::json terms = nlohmann::json::array();
  for (const auto& t : m.terms) {
    nlohmann::json powers = nlohmann::json::array();
    for (const auto& [f, e] : t.powers) powers.push_back({{"feature", f}, {"exponent", e}});
    terms.push_back(powers);
  }
  return {{"type", "MPR"},
          {"terms", terms},
          {"coefficients", m.coefficients},
          {"intercept", m.intercept},
          {"degree", m.degree},
          {"features", m.features}};
}

inline MprModel mpr_from_json(const nlohmann::json& j) {
  MprModel m;
  for (const auto& t : j.at("terms")) {
    MprTerm term;
    for (const auto& p : t) {
      term.powers.emplace_back(p.at("feature").get<std::string>(), p.at("exponent").get<int>());
    }
    m.terms.push_back(std::move(term));
  }
  m.coefficients = j.at("coefficients").get<std::vector<double>>();
  m.intercept = j.at("intercept").get<double>();
  m.degree = j.at("degree").get<int>();
  m.features = j.at("features").get<std::vector<std::string>>();
  return m;
}

inline nlohmann::json to_json(const SvrModel& m) {
  return {{"type", "SVR"},
          {"kernel",
           {{"kind", to_string(m.kernel.kind)},
            {"gamma", m.kernel.gamma},
            {"degree", m.kernel.degree},
            {"coef0", m.kernel.coef0}}},
          {"c", m.c},
          {"epsilon", m.epsilon},
          {"support", m.support},
          {"dual_coef", m.dual_coef},
          {"bias", m.bias},
          {"features", m.features},
          {"feature_mean", m.feature_mean},
          {"feature_scale", m.feature_scale}};
}

inline SvrModel svr_from_json(const nlohmann::json& j) {
  SvrModel m;
  m.kernel.kind = svr_kernel_from_string(j.at("kernel").at("kind").get<std::string>());
  m.kernel.gamma = j.at("kernel").at("gamma").get<double>();
  m.kernel.degree = j.at("kernel").at("degree").get<int>();
  m.kernel.coef0 = j.at("kernel").at("coef0").get<double>();
  m.c = j.at("c").get<double>();
  m.epsilon = j.at("epsilon").get<double>();
  m.support = j.at("support").get<std::vector<std::vector<double>>>();
  m.dual_coef = j.at("dual_coef").get<std::vector<double>>();
  m.bias = j.at("bias").get<double>();
  m.features = j.at("features").get<std::vector<std::string>>();
  m.feature_mean = j.at("feature_mean").get<std::vector<double>>();
  m.feature_scale = j.at("feature_scale").get<std::vector<double>>();
  return m;
}

inline nlohmann::json to_json(const RfModel& m) {
  nlohmann::json trees = nlohmann::json::array();
  for (const auto& t : m.trees) {
    nlohmann::json nodes = nlohmann::json::array();
    for (const auto& nd : t.nodes) {
      nodes.push_back({{"feature_index", nd.feature_index},
                       {"threshold", nd.threshold},
                       {"left", nd.left},
                       {"right", nd.right},
                       {"value", nd.value}});
    }
    trees.push_back(std::move(nodes));
  }
  return {{"type", "RF"},
          {"ntree", m.ntree},
          {"mtry", m.mtry},
          {"min_leaf", m.min_leaf},
          {"seed", m.seed},
          {"trees", trees},
          {"features", m.features}};
}

inline RfModel rf_from_json(const nlohmann::json& j) {
  RfModel m;
  m.ntree = j.at("ntree").get<std::size_t>();
  m.mtry = j.at("mtry").get<std::size_t>();
  m.min_leaf = j.at("min_leaf").get<std::size_t>();
  m.seed = j.at("seed").get<std::uint64_t>();
  for (const auto& t : j.at("trees")) {
    RfTree tree;
    for (const auto& nd : t) {
      tree.nodes.push_back(RfNode{nd.at("feature_index").get<int>(),
                                  nd.at("threshold").get<double>(), nd.at("left").get<int>(),
                                  nd.at("right").get<int>(), nd.at("value").get<double>()});
    }
    m.trees.push_back(std::move(tree));
  }
  m.features = j.at("features").get<std::vector<std::string>>();
  return m;
}

inline nlohmann::json assessment_to_json(const statkit::Assessment& a) {
  nlohmann::json per_fold = nlohmann::json::array();
  for (const auto& [r, m] : a.per_fold) per_fold.push_back({{"rrmse", r}, {"mse", m}});
  return {{"rrmse_percent", a.rrmse_percent}, {"mse", a.mse}, {"n", a.n}, {"per_fold", per_fold}};
}

inline statkit::Assessment assessment_from_json(const nlohmann::json& j) {
  statkit::Assessment a;
  a.rrmse_percent = j.at("rrmse_percent").get<double>();
  a.mse = j.at("mse").get<double>();
  a.n = j.at("n").get<std::size_t>();
  for (const auto& f : j.at("per_fold")) {
    a.per_fold.emplace_back(f.at("rrmse").get<double>(), f.at("mse").get<double>());
  }
  return a;
}

inline nlohmann::json artifact_to_json(const ModelArtifact& a) {
  nlohmann::json model =
      std::visit([](const auto& m) { return to_json(m); }, a.model);
  return {{"learner", to_string(a.learner)},
          {"model", model},
          {"significant_features", a.significant_features},
          {"meta",
           {{"app_id", a.meta.app_id},
            {"provider_id", a.meta.provider_id},
            {"n_rows", a.meta.n_rows},
            {"seed", a.meta.seed}}},
          {"assessment", assessment_to_json(a.assessment)},
          {"prediction_floor", a.prediction_floor}};
}

inline ModelArtifact artifact_from_json(const nlohmann::json& j) {
  ModelArtifact a;
  a.learner = learner_from_string(j.at("learner").get<std::string>());
  const auto& mj = j.at("model");
  const auto type = mj.at("type").get<std::string>();
  if (type == "MPR") a.model = mpr_from_json(mj);
  else if (type == "SVR") a.model = svr_from_json(mj);
  else if (type == "RF") a.model = rf_from_json(mj);
  else throw Error(ErrorCode::InvalidArgument, "unknown model type: " + type);
  a.significant_features = j.at("significant_features").get<std::vector<std::string>>();
  a.meta.app_id = j.at("meta").at("app_id").get<std::string>();
  a.meta.provider_id = j.at("meta").at("provider_id").get<std::string>();
  a.meta.n_rows = j.at("meta").at("n_rows").get<std::size_t>();
  a.meta.seed = j.at("meta").at("seed").get<std::uint64_t>();
  a.assessment = assessment_from_json(j.at("assessment"));
  a.prediction_floor = j.at("prediction_floor").get<double>();
  return a;
}

// Canonical rendering: nlohmann objects keep keys sorted; floats print as
// shortest round-trip decimals. Byte-stable across runs for equal artifacts.
inline std::string canonical_json(const nlohmann::json& j) { return j.dump(2); }

}  // namespace tamakkon::learners
