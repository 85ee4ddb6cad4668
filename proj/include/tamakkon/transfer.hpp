#pragma once

#include <algorithm>
#include <cstdint>
#include <map>
#include <numeric>
#include <optional>
#include <random>
#include <string>
#include <vector>

#include <json.hpp>

#include "tamakkon/core.hpp"
#include "tamakkon/knowledgebase.hpp"
#include "tamakkon/learners.hpp"
#include "tamakkon/similarity.hpp"
#include "tamakkon/statkit.hpp"

namespace tamakkon::transfer {

enum class Mode { TransferAll, TransferModel };

inline const char* to_string(Mode m) {
  return m == Mode::TransferAll ? "TRANSFER_ALL" : "TRANSFER_MODEL";
}

// Mode activation table: Transfer-All needs a (partly) similar source and an
// instance-capable learner; everything else falls back to Transfer-Model.
inline Mode select_mode(similarity::Tag tag, learners::LearnerKind learner) {
  if (tag == similarity::Tag::NotSimilar) return Mode::TransferModel;
  if (learner == learners::LearnerKind::Mpr) return Mode::TransferModel;
  return Mode::TransferAll;
}

struct TransferConfig {
  double acceptance_rrmse_max = 15.0;        // percent
  double relative_acceptance_factor = 1.25;  // vs best known base model error
  std::vector<double> source_fractions = {0.1, 0.2, 0.3, 0.4, 0.5, 0.6, 0.7, 0.8, 0.9, 1.0};
  std::size_t early_stop_patience = 2;
  std::uint64_t seed = 0;
  learners::TrainConfig train;

  void check() const {
    if (early_stop_patience < 1) {
      throw Error(ErrorCode::InvalidArgument, "patience must be >= 1");
    }
    double prev = 0.0;
    for (double f : source_fractions) {
      if (!(f > prev && f <= 1.0)) {
        throw Error(ErrorCode::InvalidArgument,
                    "source fractions must be strictly increasing in (0,1]");
      }
      prev = f;
    }
  }
};

// Maps the source model's significant features into the target feature space.
inline std::vector<std::string> transfer_features(const std::vector<std::string>& source_sig,
                                                  const std::optional<FeatureMapping>& mapping,
                                                  const FeatureSchema& target_schema,
                                                  std::vector<std::string>* dropped = nullptr) {
  std::map<std::string, std::string> rename;
  if (mapping) {
    mapping->check();
    for (const auto& [s, t] : mapping->pairs) rename[s] = t;
  }
  std::vector<std::string> out;
  for (const auto& f : source_sig) {
    auto it = rename.find(f);
    const std::string target_name = it != rename.end() ? it->second : f;
    if (target_schema.find(target_name)) {
      out.push_back(target_name);
    } else if (dropped) {
      dropped->push_back(f);
    }
  }
  if (out.empty()) {
    throw Error(ErrorCode::NoTransferableFeatures,
                "transfer_features: no source feature maps into the target schema");
  }
  return out;
}

// Hyperparameter knowledge carried over from a source artifact. Grid search
// is skipped for everything the seed pins down.
struct HyperparameterSeed {
  learners::LearnerKind learner = learners::LearnerKind::Mpr;
  // MPR
  std::optional<std::vector<learners::MprTerm>> mpr_terms;
  std::optional<int> mpr_degree;
  std::vector<double> mpr_coefficients;  // fallback initializer, used only when underdetermined
  double mpr_intercept = 0.0;
  // SVR
  std::optional<learners::SvrKernel> svr_kernel;
  std::optional<double> svr_c;
  std::optional<double> svr_epsilon;
  // RF
  std::optional<std::size_t> rf_ntree;
  std::optional<std::size_t> rf_mtry;
};

inline HyperparameterSeed transfer_parameters(const learners::ModelArtifact& source) {
  HyperparameterSeed seed;
  seed.learner = source.learner;
  switch (source.learner) {
    case learners::LearnerKind::Mpr: {
      const auto& m = std::get<learners::MprModel>(source.model);
      seed.mpr_terms = m.terms;
      seed.mpr_degree = m.degree;
      seed.mpr_coefficients = m.coefficients;
      seed.mpr_intercept = m.intercept;
      break;
    }
    case learners::LearnerKind::Svr: {
      const auto& m = std::get<learners::SvrModel>(source.model);
      seed.svr_kernel = m.kernel;
      seed.svr_c = m.c;
      seed.svr_epsilon = m.epsilon;
      break;
    }
    case learners::LearnerKind::Rf: {
      const auto& m = std::get<learners::RfModel>(source.model);
      seed.rf_ntree = m.ntree;
      seed.rf_mtry = m.mtry;
      break;
    }
  }
  return seed;
}

namespace detail {

inline learners::TrainConfig apply_seed(const learners::TrainConfig& base,
                                        const HyperparameterSeed& hp,
                                        const std::vector<std::string>& features,
                                        std::size_t n_target_rows) {
  learners::TrainConfig cfg = base;
  switch (hp.learner) {
    case learners::LearnerKind::Mpr:
      if (hp.mpr_terms) {
        // Keep only transferred terms whose features survive the mapping.
        std::vector<learners::MprTerm> terms;
        for (const auto& t : *hp.mpr_terms) {
          bool ok = true;
          for (const auto& [f, _] : t.powers) {
            if (std::find(features.begin(), features.end(), f) == features.end()) ok = false;
          }
          if (ok) terms.push_back(t);
        }
        if (!terms.empty()) {
          cfg.mpr.fixed_terms = std::move(terms);
          cfg.mpr.fixed_degree = hp.mpr_degree;
        }
      }
      (void)n_target_rows;
      break;
    case learners::LearnerKind::Svr:
      if (hp.svr_kernel) cfg.svr.kernel_grid = {*hp.svr_kernel};
      if (hp.svr_c) cfg.svr.c_grid = {*hp.svr_c};
      if (hp.svr_epsilon) cfg.svr.epsilon_grid = {*hp.svr_epsilon};
      break;
    case learners::LearnerKind::Rf:
      if (hp.rf_ntree) cfg.rf.ntree = *hp.rf_ntree;
      if (hp.rf_mtry) cfg.rf.mtry = std::min(*hp.rf_mtry, features.size());
      break;
  }
  return cfg;
}

// Seeded sample of `count` rows without replacement, stratified by instance
// type when that column exists.
inline std::vector<std::size_t> sample_rows(const ProfileDataset& ds, std::size_t count,
                                            std::uint64_t seed,
                                            const std::string& stratify_feature = "vmtype") {
  const std::size_t n = ds.records.size();
  count = std::min(count, n);
  std::vector<std::size_t> idx(n);
  std::iota(idx.begin(), idx.end(), std::size_t{0});
  std::mt19937_64 rng(seed);
  if (ds.schema.find(stratify_feature)) {
    // Shuffle within strata, then interleave across strata so any prefix is balanced.
    std::map<double, std::vector<std::size_t>> strata;
    for (std::size_t i = 0; i < n; ++i) {
      strata[ds.records[i].values.at(stratify_feature)].push_back(i);
    }
    for (auto& [_, v] : strata) std::shuffle(v.begin(), v.end(), rng);
    idx.clear();
    for (std::size_t round = 0; idx.size() < n; ++round) {
      for (auto& [_, v] : strata) {
        if (round < v.size()) idx.push_back(v[round]);
      }
    }
  } else {
    std::shuffle(idx.begin(), idx.end(), rng);
  }
  idx.resize(count);
  std::sort(idx.begin(), idx.end());
  return idx;
}

}  // namespace tamakkon::transfer::detail

struct FractionPoint {
  double fraction = 0.0;
  double eval_mse = 0.0;
  std::size_t source_rows_used = 0;
};

struct InstanceTransferResult {
  double best_fraction = 0.0;
  std::variant<learners::MprModel, learners::SvrModel, learners::RfModel> model;
  std::vector<FractionPoint> curve;
  std::size_t source_rows_read = 0;  // instrumentation: Transfer-Model must keep this at 0
};

// Incremental instance mixing: sweeps source fractions (including the f = 0
// baseline), evaluates each mix on a held-out 20% of the target auxiliary
// data, stops early after `patience` consecutive MSE increases, and returns
// the argmin-fraction model.
inline InstanceTransferResult transfer_instances(const ProfileDataset& source_ds,
                                                 const ProfileDataset& target_aux,
                                                 const std::vector<std::string>& features,
                                                 const HyperparameterSeed& params,
                                                 const TransferConfig& cfg) {
  cfg.check();
  if (target_aux.records.empty()) {
    throw Error(ErrorCode::EmptyAuxiliaryData, "transfer_instances: empty auxiliary data");
  }
  const std::size_t n = target_aux.records.size();

  // 80/20 train/eval split of the target auxiliary data.
  auto shuffled = detail::sample_rows(target_aux, n, cfg.seed ^ 0xA5A5A5A5ull, "");
  std::mt19937_64 rng(cfg.seed ^ 0xA5A5A5A5ull);
  std::shuffle(shuffled.begin(), shuffled.end(), rng);
  std::vector<std::size_t> train_rows, eval_rows;
  for (std::size_t i = 0; i < n; ++i) {
    (i % 5 == 0 ? eval_rows : train_rows).push_back(shuffled[i]);
  }
  if (train_rows.empty() || eval_rows.empty()) {
    throw Error(ErrorCode::TooFewRows, "transfer_instances: auxiliary data too small to split");
  }
  auto train_base = learners::detail::subset(target_aux, train_rows);
  auto eval_ds = learners::detail::subset(target_aux, eval_rows);

  std::vector<double> fractions = {0.0};
  fractions.insert(fractions.end(), cfg.source_fractions.begin(), cfg.source_fractions.end());

  InstanceTransferResult out;
  double best_mse = std::numeric_limits<double>::infinity();
  bool have_best = false;
  std::size_t increases = 0;
  double prev_mse = std::numeric_limits<double>::infinity();

  for (double f : fractions) {
    ProfileDataset mixed = train_base;
    std::size_t used = 0;
    if (f > 0.0) {
      const auto take = static_cast<std::size_t>(
          std::llround(f * static_cast<double>(source_ds.records.size())));
      auto rows = detail::sample_rows(source_ds, take, cfg.seed);
      for (auto i : rows) {
        // Project source rows onto the target training features.
        ProfileRecord rec;
        rec.response = source_ds.records[i].response;
        for (const auto& d : mixed.schema.descriptors) {
          auto it = source_ds.records[i].values.find(d.name);
          if (it == source_ds.records[i].values.end()) {
            throw Error(ErrorCode::MissingFeature,
                        "transfer_instances: source lacks feature " + d.name);
          }
          rec.values[d.name] = it->second;
        }
        mixed.records.push_back(std::move(rec));
        ++used;
      }
      out.source_rows_read += used;
    }

    auto cfg_train = detail::apply_seed(cfg.train, params, features, mixed.records.size());
    double eval_mse;
    std::variant<learners::MprModel, learners::SvrModel, learners::RfModel> model;
    try {
      model = learners::detail::fit_one(mixed, features, params.learner, cfg_train, cfg.seed);
      std::vector<double> pred, act;
      for (const auto& r : eval_ds.records) {
        pred.push_back(std::visit([&](const auto& m) { return m.evaluate(r.values); }, model));
        act.push_back(r.response);
      }
      eval_mse = statkit::mse(pred, act);
    } catch (const Error&) {
      eval_mse = std::numeric_limits<double>::infinity();
    }
    out.curve.push_back(FractionPoint{f, eval_mse, used});

    if (eval_mse < best_mse) {
      best_mse = eval_mse;
      out.best_fraction = f;
      out.model = std::move(model);
      have_best = true;
    }
    if (f > 0.0) {
      if (eval_mse > prev_mse) {
        if (++increases >= cfg.early_stop_patience) break;
      } else {
        increases = 0;
      }
    }
    prev_mse = eval_mse;
  }
  if (!have_best) {
    throw Error(ErrorCode::TooFewRows, "transfer_instances: no fraction could be fit");
  }
  return out;
}

struct ProvenanceStep {
  std::string source_id;
  std::string tag;
  Mode mode = Mode::TransferModel;
  double rrmse_percent = 0.0;
  double chosen_fraction = 0.0;
  bool accepted = false;
};

struct TransferOutcome {
  learners::ModelArtifact artifact;
  Mode mode = Mode::TransferModel;
  std::string source_id;
  double chosen_source_fraction = 0.0;
  statkit::Assessment assessment;
  std::vector<ProvenanceStep> provenance;
  bool accepted = false;
  std::vector<FractionPoint> fraction_curve;
};

// The full learning-phase loop: rank sources by similarity, try each in
// order, accept the first transferred model under the error threshold, and
// save it to the function repository.
inline TransferOutcome run_tamakkon(const ProfileDataset& aux, kb::Store& store,
                                    const TransferConfig& cfg = {},
                                    std::optional<learners::LearnerKind> only_learner = {}) {
  cfg.check();
  if (aux.records.empty()) {
    throw Error(ErrorCode::EmptyAuxiliaryData, "run_tamakkon: empty auxiliary data");
  }
  const auto ids = store.list();
  if (ids.empty()) {
    throw Error(ErrorCode::EmptyKnowledgebase, "run_tamakkon: empty knowledgebase");
  }
  std::vector<kb::KbEntry> entries;
  for (const auto& id : ids) entries.push_back(store.get(id));
  auto ranked = similarity::rank_sources(aux, entries);

  auto entry_by_id = [&entries](const std::string& id) -> const kb::KbEntry& {
    for (const auto& e : entries) {
      if (e.entry_id == id) return e;
    }
    throw Error(ErrorCode::NotFound, "entry vanished: " + id);
  };

  TransferOutcome best;
  bool have_any = false;

  for (const auto& rs : ranked) {
    const auto& entry = entry_by_id(rs.entry_id);
    if (entry.artifacts.empty()) continue;

    // Pick the source's best-assessed learner unless the caller pinned one.
    const learners::ModelArtifact* source_artifact = nullptr;
    if (only_learner) {
      auto it = entry.artifacts.find(*only_learner);
      if (it == entry.artifacts.end()) continue;
      source_artifact = &it->second;
    } else {
      double best_err = std::numeric_limits<double>::infinity();
      for (const auto& [_, a] : entry.artifacts) {
        if (a.assessment.rrmse_percent < best_err) {
          best_err = a.assessment.rrmse_percent;
          source_artifact = &a;
        }
      }
    }
    if (!source_artifact) continue;

    const Mode mode = select_mode(rs.report.tag, source_artifact->learner);
    std::vector<std::string> features;
    try {
      features = transfer_features(source_artifact->significant_features, entry.mapping,
                                   aux.schema);
    } catch (const Error&) {
      continue;
    }
    // Drop features that are constant in the auxiliary data.
    {
      std::vector<std::string> varying;
      for (const auto& f : features) {
        if (!learners::is_constant_column(aux, f)) varying.push_back(f);
      }
      if (!varying.empty()) features = std::move(varying);
    }
    const auto hp = transfer_parameters(*source_artifact);

    learners::ModelArtifact candidate;
    candidate.learner = source_artifact->learner;
    candidate.significant_features = features;
    candidate.meta =
        learners::TrainingMeta{aux.app_id, aux.provider_id, aux.records.size(), cfg.seed, ""};
    double chosen_fraction = 0.0;
    std::vector<FractionPoint> curve;

    auto cfg_train = detail::apply_seed(cfg.train, hp, features, aux.records.size());
    try {
      if (mode == Mode::TransferAll) {
        ProfileDataset source_ds = entry.dataset;
        if (entry.mapping) source_ds = apply_mapping(source_ds, *entry.mapping).dataset;
        auto result = transfer_instances(source_ds, aux, features, hp, cfg);
        chosen_fraction = result.best_fraction;
        curve = result.curve;
        if (result.best_fraction > 0.0) {
          // Refit on the full auxiliary data plus the chosen source slice.
          ProfileDataset mixed = aux;
          const auto take = static_cast<std::size_t>(std::llround(
              result.best_fraction * static_cast<double>(source_ds.records.size())));
          auto rows = detail::sample_rows(source_ds, take, cfg.seed);
          for (auto i : rows) {
            ProfileRecord rec;
            rec.response = source_ds.records[i].response;
            for (const auto& d : aux.schema.descriptors) {
              auto it = source_ds.records[i].values.find(d.name);
              if (it == source_ds.records[i].values.end()) {
                throw Error(ErrorCode::MissingFeature, "source lacks feature " + d.name);
              }
              rec.values[d.name] = it->second;
            }
            mixed.records.push_back(std::move(rec));
          }
          candidate.model =
              learners::detail::fit_one(mixed, features, hp.learner, cfg_train, cfg.seed);
        } else {
          candidate.model =
              learners::detail::fit_one(aux, features, hp.learner, cfg_train, cfg.seed);
        }
      } else {
        // Transfer-Model: features + parameters only, trained on target data alone.
        if (hp.learner == learners::LearnerKind::Mpr && cfg_train.mpr.fixed_terms &&
            aux.records.size() < cfg_train.mpr.fixed_terms->size() + 1 &&
            cfg_train.mpr.ridge_lambda == 0.0) {
          // Underdetermined with ridge disabled: reuse the source coefficients as-is.
          learners::MprModel m;
          m.terms = *cfg_train.mpr.fixed_terms;
          m.coefficients = hp.mpr_coefficients;
          m.intercept = hp.mpr_intercept;
          m.degree = hp.mpr_degree.value_or(1);
          m.features = features;
          candidate.model = std::move(m);
        } else {
          candidate.model =
              learners::detail::fit_one(aux, features, hp.learner, cfg_train, cfg.seed);
        }
      }
      candidate.assessment =
          learners::cross_validate(aux, features, hp.learner, cfg_train, cfg.seed);
    } catch (const Error&) {
      continue;
    }

    // Acceptance: absolute ceiling, relaxed relative to the best known base
    // model for this app/provider when one exists.
    double threshold = cfg.acceptance_rrmse_max;
    if (auto base = store.repo_find(aux.app_id, aux.provider_id, candidate.learner)) {
      threshold = std::max(threshold,
                           cfg.relative_acceptance_factor * base->assessment.rrmse_percent);
    }
    const bool accepted = candidate.assessment.rrmse_percent <= threshold;

    best.provenance.push_back(ProvenanceStep{rs.entry_id, similarity::to_string(rs.report.tag),
                                             mode, candidate.assessment.rrmse_percent,
                                             chosen_fraction, accepted});

    const bool better = !have_any ||
                        candidate.assessment.rrmse_percent < best.artifact.assessment.rrmse_percent;
    if (better) {
      best.artifact = candidate;
      best.mode = mode;
      best.source_id = rs.entry_id;
      best.chosen_source_fraction = mode == Mode::TransferModel ? 0.0 : chosen_fraction;
      best.assessment = candidate.assessment;
      best.fraction_curve = curve;
      have_any = true;
    }
    if (accepted) {
      best.artifact = candidate;
      best.mode = mode;
      best.source_id = rs.entry_id;
      best.chosen_source_fraction = mode == Mode::TransferModel ? 0.0 : chosen_fraction;
      best.assessment = candidate.assessment;
      best.fraction_curve = curve;
      best.accepted = true;
      store.repo_put(best.artifact);
      return best;
    }
  }
  if (!have_any) {
    throw Error(ErrorCode::EmptyKnowledgebase, "run_tamakkon: no usable source entry");
  }
  best.accepted = false;
  return best;
}

inline nlohmann::json outcome_to_json(const TransferOutcome& o) {
  nlohmann::json prov = nlohmann::json::array();
  for (const auto& p : o.provenance) {
    prov.push_back({{"source_id", p.source_id},
                    {"tag", p.tag},
                    {"mode", to_string(p.mode)},
                    {"rrmse_percent", p.rrmse_percent},
                    {"chosen_fraction", p.chosen_fraction},
                    {"accepted", p.accepted}});
  }
  nlohmann::json curve = nlohmann::json::array();
  for (const auto& c : o.fraction_curve) {
    curve.push_back({{"fraction", c.fraction},
                     {"eval_mse", c.eval_mse},
                     {"source_rows_used", c.source_rows_used}});
  }
  return {{"artifact", learners::artifact_to_json(o.artifact)},
          {"mode", to_string(o.mode)},
          {"source_id", o.source_id},
          {"chosen_source_fraction", o.chosen_source_fraction},
          {"assessment", learners::assessment_to_json(o.assessment)},
          {"provenance", prov},
          {"accepted", o.accepted},
          {"fraction_curve", curve}};
}

}  // namespace tamakkon::transfer
