#include <catch2/catch_amalgamated.hpp>

#include <filesystem>
#include <random>
#include <set>

#include "tamakkon/knowledgebase.hpp"
#include "tamakkon/learners.hpp"
#include "tamakkon/transfer.hpp"

using namespace tamakkon;
namespace fs = std::filesystem;

namespace {

FeatureSchema line_schema() {
  FeatureSchema s;
  s.response = "exectime";
  s.descriptors.push_back(
      FeatureDescriptor{"x", FeatureCategory::Cloud, FeatureKind::Numeric, std::nullopt});
  s.descriptors.push_back(FeatureDescriptor{"app_type", FeatureCategory::ApplicationArchitecture,
                                            FeatureKind::Numeric, std::nullopt});
  return s;
}

// y = 2 + 3x, exactly representable by a degree-1 monomial model.
ProfileDataset line_dataset(std::size_t n, double app_type, const std::string& app_id,
                            std::uint64_t seed) {
  ProfileDataset ds;
  ds.schema = line_schema();
  ds.app_id = app_id;
  ds.provider_id = "prov";
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> xs(1.0, 10.0);
  for (std::size_t i = 0; i < n; ++i) {
    ProfileRecord r;
    const double x = xs(rng);
    r.values["x"] = x;
    r.values["app_type"] = app_type;
    r.response = 2.0 + 3.0 * x;
    ds.records.push_back(std::move(r));
  }
  return ds;
}

fs::path fresh_dir(const std::string& tag) {
  auto p = fs::temp_directory_path() / ("tamakkon-transfer-" + tag);
  fs::remove_all(p);
  return p;
}

}  // namespace

TEST_CASE("mode selection follows the activation table") {
  using similarity::Tag;
  using learners::LearnerKind;
  using transfer::Mode;
  CHECK(transfer::select_mode(Tag::Similar, LearnerKind::Svr) == Mode::TransferAll);
  CHECK(transfer::select_mode(Tag::Similar, LearnerKind::Rf) == Mode::TransferAll);
  CHECK(transfer::select_mode(Tag::PartlySimilar, LearnerKind::Svr) == Mode::TransferAll);
  CHECK(transfer::select_mode(Tag::PartlySimilar, LearnerKind::Rf) == Mode::TransferAll);
  CHECK(transfer::select_mode(Tag::Similar, LearnerKind::Mpr) == Mode::TransferModel);
  CHECK(transfer::select_mode(Tag::PartlySimilar, LearnerKind::Mpr) == Mode::TransferModel);
  CHECK(transfer::select_mode(Tag::NotSimilar, LearnerKind::Svr) == Mode::TransferModel);
  CHECK(transfer::select_mode(Tag::NotSimilar, LearnerKind::Rf) == Mode::TransferModel);
  CHECK(transfer::select_mode(Tag::NotSimilar, LearnerKind::Mpr) == Mode::TransferModel);
}

TEST_CASE("transfer_features renames through the mapping and drops unmapped names") {
  FeatureSchema target = line_schema();
  FeatureMapping m;
  m.pairs.emplace_back("ecu", "x");
  std::vector<std::string> dropped;
  auto out = transfer::transfer_features({"ecu", "app_type", "gone"}, m, target, &dropped);
  CHECK(out == std::vector<std::string>{"x", "app_type"});
  CHECK(dropped == std::vector<std::string>{"gone"});

  CHECK_THROWS_AS(transfer::transfer_features({"nope"}, std::nullopt, target), Error);
  try {
    transfer::transfer_features({"nope"}, std::nullopt, target);
  } catch (const Error& e) {
    CHECK(e.code() == ErrorCode::NoTransferableFeatures);
  }
}

TEST_CASE("transfer_parameters extracts hyperparameters per learner") {
  const auto ds = line_dataset(40, 1.0, "app", 1);

  auto mpr = learners::train_base_model(ds, learners::LearnerKind::Mpr, 7);
  auto hp_mpr = transfer::transfer_parameters(mpr);
  REQUIRE(hp_mpr.mpr_terms.has_value());
  CHECK(hp_mpr.learner == learners::LearnerKind::Mpr);
  CHECK(hp_mpr.mpr_degree.has_value());

  learners::TrainConfig quick;
  quick.rf.ntree = 10;
  quick.svr.kernel_grid = {learners::SvrKernel{learners::SvrKernelKind::Linear}};
  quick.svr.c_grid = {10.0};
  quick.svr.epsilon_grid = {0.1};
  auto svr = learners::train_base_model(ds, learners::LearnerKind::Svr, 7, quick);
  auto hp_svr = transfer::transfer_parameters(svr);
  REQUIRE(hp_svr.svr_c.has_value());
  CHECK(*hp_svr.svr_c == 10.0);
  REQUIRE(hp_svr.svr_epsilon.has_value());
  CHECK(*hp_svr.svr_epsilon == 0.1);

  auto rf = learners::train_base_model(ds, learners::LearnerKind::Rf, 7, quick);
  auto hp_rf = transfer::transfer_parameters(rf);
  REQUIRE(hp_rf.rf_ntree.has_value());
  CHECK(*hp_rf.rf_ntree == 10);
}

TEST_CASE("sample_rows stratifies by instance type") {
  ProfileDataset ds;
  ds.schema.response = "exectime";
  ds.schema.descriptors.push_back(
      FeatureDescriptor{"vmtype", FeatureCategory::Cloud, FeatureKind::Categorical, std::nullopt});
  for (int level = 0; level < 3; ++level) {
    for (int r = 0; r < 4; ++r) {
      ProfileRecord rec;
      rec.values["vmtype"] = level;
      rec.response = 1.0;
      ds.records.push_back(rec);
    }
  }
  const auto rows = transfer::detail::sample_rows(ds, 3, 42);
  REQUIRE(rows.size() == 3);
  std::set<double> levels;
  for (auto i : rows) levels.insert(ds.records[i].values.at("vmtype"));
  CHECK(levels == std::set<double>{0.0, 1.0, 2.0});
  CHECK(rows == transfer::detail::sample_rows(ds, 3, 42));
  // sampling more rows than exist just returns everything
  CHECK(transfer::detail::sample_rows(ds, 99, 1).size() == 12);
}

TEST_CASE("transfer_instances sweeps fractions from a zero baseline") {
  const auto target = line_dataset(50, 1.0, "target", 2);
  const auto source = line_dataset(80, 1.0, "source", 3);
  transfer::TransferConfig cfg;
  cfg.seed = 5;
  transfer::HyperparameterSeed hp;  // MPR, degree chosen by CV
  const auto res =
      transfer::transfer_instances(source, target, {"x"}, hp, cfg);
  REQUIRE(!res.curve.empty());
  CHECK(res.curve.front().fraction == 0.0);
  CHECK(res.curve.front().source_rows_used == 0);
  for (std::size_t i = 1; i < res.curve.size(); ++i) {
    CHECK(res.curve[i].fraction > res.curve[i - 1].fraction);
  }
  // the data is noiseless, so every fraction fits essentially perfectly
  CHECK(res.curve.front().eval_mse < 1e-6);
}

TEST_CASE("negative transfer falls back to the zero-source baseline") {
  const auto target = line_dataset(50, 1.0, "target", 2);
  auto bad_source = line_dataset(80, 1.0, "source", 3);
  for (auto& r : bad_source.records) r.response *= 50.0;  // wildly wrong scale
  transfer::TransferConfig cfg;
  cfg.seed = 5;
  transfer::HyperparameterSeed hp;
  const auto res = transfer::transfer_instances(bad_source, target, {"x"}, hp, cfg);
  CHECK(res.best_fraction == 0.0);
  // consecutive degradations trip the early stop well before the full sweep
  CHECK(res.curve.size() < 11);
}

TEST_CASE("transfer config validation") {
  transfer::TransferConfig bad;
  bad.early_stop_patience = 0;
  CHECK_THROWS_AS(bad.check(), Error);
  transfer::TransferConfig unsorted;
  unsorted.source_fractions = {0.5, 0.2};
  CHECK_THROWS_AS(unsorted.check(), Error);
  transfer::TransferConfig over;
  over.source_fractions = {0.5, 1.5};
  CHECK_THROWS_AS(over.check(), Error);
}

TEST_CASE("run_tamakkon transfers from a similar source and stores the result") {
  const auto root = fresh_dir("run");
  kb::Store store(root);

  const auto source = line_dataset(60, 1.0, "srcapp", 11);
  kb::KbEntry entry;
  entry.entry_id = "srcapp@prov";
  entry.dataset = source;
  entry.artifacts[learners::LearnerKind::Mpr] =
      learners::train_base_model(source, learners::LearnerKind::Mpr, 1);
  store.put(entry);

  const auto aux = line_dataset(30, 1.0, "newapp", 12);
  transfer::TransferConfig cfg;
  cfg.seed = 9;
  const auto out = transfer::run_tamakkon(aux, store, cfg, learners::LearnerKind::Mpr);

  CHECK(out.accepted);
  CHECK(out.source_id == "srcapp@prov");
  CHECK(out.mode == transfer::Mode::TransferModel);  // MPR never mixes instances
  CHECK(out.chosen_source_fraction == 0.0);
  CHECK(out.assessment.rrmse_percent < 1.0);
  REQUIRE(!out.provenance.empty());
  CHECK(out.provenance.back().accepted);

  auto stored = store.repo_find("newapp", "prov", learners::LearnerKind::Mpr);
  REQUIRE(stored.has_value());
  CHECK(stored->meta.app_id == "newapp");

  fs::remove_all(root);
}

TEST_CASE("run_tamakkon reports rejection when no source clears the threshold") {
  const auto root = fresh_dir("reject");
  kb::Store store(root);

  const auto source = line_dataset(60, 1.0, "srcapp", 11);
  kb::KbEntry entry;
  entry.entry_id = "srcapp@prov";
  entry.dataset = source;
  entry.artifacts[learners::LearnerKind::Mpr] =
      learners::train_base_model(source, learners::LearnerKind::Mpr, 1);
  store.put(entry);

  // auxiliary responses are pure noise: no transferred model can be accurate
  auto aux = line_dataset(30, 1.0, "noisyapp", 12);
  std::mt19937_64 rng(99);
  std::uniform_real_distribution<double> ys(0.5, 100.0);
  for (auto& r : aux.records) r.response = ys(rng);

  transfer::TransferConfig cfg;
  cfg.seed = 9;
  const auto out = transfer::run_tamakkon(aux, store, cfg, learners::LearnerKind::Mpr);
  CHECK_FALSE(out.accepted);
  REQUIRE(!out.provenance.empty());
  CHECK_FALSE(out.provenance.back().accepted);
  CHECK_FALSE(store.repo_find("noisyapp", "prov", learners::LearnerKind::Mpr).has_value());

  fs::remove_all(root);
}

TEST_CASE("run_tamakkon rejects empty inputs") {
  const auto root = fresh_dir("empty");
  kb::Store store(root);
  const auto aux = line_dataset(30, 1.0, "app", 1);
  CHECK_THROWS_AS(transfer::run_tamakkon(aux, store), Error);  // empty knowledgebase
  ProfileDataset empty;
  empty.schema = line_schema();
  CHECK_THROWS_AS(transfer::run_tamakkon(empty, store), Error);
  fs::remove_all(root);
}
