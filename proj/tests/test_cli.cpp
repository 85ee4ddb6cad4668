#include <catch2/catch_amalgamated.hpp>

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <random>
#include <sstream>
#include <string>

#include <json.hpp>

#include "tamakkon/knowledgebase.hpp"
#include "tamakkon/learners.hpp"

using namespace tamakkon;
namespace fs = std::filesystem;
using nlohmann::json;

namespace {

struct RunResult {
  int exit_code = -1;
  std::string out;
  std::string err;
};

fs::path work_dir() {
  static const fs::path p = [] {
    auto d = fs::temp_directory_path() / "tamakkon-cli-tests";
    fs::remove_all(d);
    fs::create_directories(d);
    return d;
  }();
  return p;
}

std::string slurp(const fs::path& p) {
  std::ifstream in(p);
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

RunResult run_cli(const std::string& args) {
  const auto out = work_dir() / "stdout.txt";
  const auto err = work_dir() / "stderr.txt";
  const std::string cmd = std::string(TAMAKKON_CLI_PATH) + " " + args + " > " +
                          out.string() + " 2> " + err.string();
  const int status = std::system(cmd.c_str());
  RunResult r;
  r.exit_code = WIFEXITED(status) ? WEXITSTATUS(status) : -1;
  r.out = slurp(out);
  r.err = slurp(err);
  return r;
}

FeatureSchema line_schema() {
  FeatureSchema s;
  s.response = "exectime";
  s.descriptors.push_back(
      FeatureDescriptor{"x", FeatureCategory::Cloud, FeatureKind::Numeric, std::nullopt});
  s.descriptors.push_back(FeatureDescriptor{"app_type", FeatureCategory::ApplicationArchitecture,
                                            FeatureKind::Numeric, std::nullopt});
  return s;
}

ProfileDataset line_dataset(std::size_t n, const std::string& app_id, std::uint64_t seed) {
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
    r.values["app_type"] = 1.0;
    r.response = 2.0 + 3.0 * x;
    ds.records.push_back(std::move(r));
  }
  return ds;
}

// Writes csv + schema files for a dataset; returns their paths.
std::pair<fs::path, fs::path> write_dataset(const ProfileDataset& ds, const std::string& stem) {
  const auto csv = work_dir() / (stem + ".csv");
  const auto schema = work_dir() / (stem + ".schema.json");
  std::ofstream c(csv);
  write_profiles_csv(c, ds);
  std::ofstream s(schema);
  s << schema_to_json(ds.schema).dump(2) << "\n";
  return {csv, schema};
}

}  // namespace

TEST_CASE("cli rejects missing subcommands and bad flags with exit code 2") {
  CHECK(run_cli("").exit_code == 2);
  CHECK(run_cli("no-such-command").exit_code == 2);
  CHECK(run_cli("plan").exit_code == 2);  // missing required --model
  CHECK(run_cli("--help").exit_code == 0);
}

TEST_CASE("simulate writes a dataset and reports the row count") {
  const auto csv = work_dir() / "sim.csv";
  const auto schema = work_dir() / "sim.schema.json";
  const auto r = run_cli("--json --seed 3 simulate --provider ec2 --runs 2 --sigma 0 --out-csv " +
                         csv.string() + " --out-schema " + schema.string());
  REQUIRE(r.exit_code == 0);
  const auto j = json::parse(r.out);
  CHECK(j.at("rows").get<int>() > 0);
  REQUIRE(fs::exists(csv));
  REQUIRE(fs::exists(schema));
  // header + one line per row
  std::ifstream in(csv);
  std::string line;
  int lines = 0;
  while (std::getline(in, line)) ++lines;
  CHECK(lines == j.at("rows").get<int>() + 1);
}

TEST_CASE("ingest validates and can store into a knowledgebase") {
  const auto ds = line_dataset(25, "cliapp", 1);
  const auto [csv, schema] = write_dataset(ds, "ingest");
  const auto kb = work_dir() / "kb-ingest";

  auto r = run_cli("--json ingest --csv " + csv.string() + " --schema " + schema.string() +
                   " --app cliapp --provider prov --kb " + kb.string());
  REQUIRE(r.exit_code == 0);
  auto j = json::parse(r.out);
  CHECK(j.at("rows") == 25);
  CHECK(j.at("stored") == "cliapp@prov");

  auto listed = run_cli("--json kb list --kb " + kb.string());
  REQUIRE(listed.exit_code == 0);
  CHECK(json::parse(listed.out) == json::array({"cliapp@prov"}));

  auto shown = run_cli("--json kb show --kb " + kb.string() + " --id cliapp@prov");
  REQUIRE(shown.exit_code == 0);
  CHECK(json::parse(shown.out).at("rows") == 25);

  // missing file -> exit 1 with an error code on stderr
  auto missing = run_cli("ingest --csv /nonexistent.csv --schema " + schema.string() +
                         " --app a --provider p");
  CHECK(missing.exit_code == 1);
  CHECK(missing.err.find("error") != std::string::npos);
}

TEST_CASE("train-base, assess and plan round-trip through artifact files") {
  const auto ds = line_dataset(40, "cliapp", 2);
  const auto [csv, schema] = write_dataset(ds, "train");
  const auto model = work_dir() / "model.json";

  auto trained = run_cli("--json train-base --csv " + csv.string() + " --schema " +
                         schema.string() + " --learner MPR --app cliapp --provider prov --out " +
                         model.string());
  REQUIRE(trained.exit_code == 0);
  REQUIRE(fs::exists(model));

  auto assessed = run_cli("--json assess --model " + model.string() + " --csv " + csv.string() +
                          " --schema " + schema.string());
  REQUIRE(assessed.exit_code == 0);
  CHECK(json::parse(assessed.out).at("rrmse_percent").get<double>() < 1.0);

  // the line model only uses feature x, so both bundled catalogs plan fine
  // as long as the workload supplies it
  auto planned = run_cli("--json plan --model " + model.string() +
                         " --catalog ec2 --objective min-cost --workload x=5");
  REQUIRE(planned.exit_code == 0);
  auto pj = json::parse(planned.out);
  CHECK(pj.at("chosen").is_string());
  CHECK(pj.at("candidates").size() > 0);
}

TEST_CASE("transfer accepts a similar source and exits 1 when nothing qualifies") {
  const auto kb = work_dir() / "kb-transfer";
  {
    kb::Store store(kb);
    kb::KbEntry e;
    e.entry_id = "src@prov";
    e.dataset = line_dataset(60, "src", 3);
    e.artifacts[learners::LearnerKind::Mpr] =
        learners::train_base_model(e.dataset, learners::LearnerKind::Mpr, 1);
    store.put(e);
  }
  const auto aux = line_dataset(30, "cliapp", 4);
  const auto [csv, schema] = write_dataset(aux, "aux");
  const auto out_model = work_dir() / "transferred.json";
  const auto curve = work_dir() / "curve.csv";

  auto r = run_cli("--json transfer --aux " + csv.string() + " --schema " + schema.string() +
                   " --kb " + kb.string() + " --app cliapp --provider prov --learner MPR --out " +
                   out_model.string() + " --curve-csv " + curve.string());
  REQUIRE(r.exit_code == 0);
  auto j = json::parse(r.out);
  CHECK(j.at("accepted") == true);
  CHECK(j.at("source_id") == "src@prov");
  REQUIRE(fs::exists(out_model));
  REQUIRE(fs::exists(curve));
  CHECK(slurp(curve).rfind("fraction,eval_mse,source_rows_used", 0) == 0);

  // noise aux: no model can clear the threshold -> exit code 1
  auto noisy = line_dataset(30, "noisy", 5);
  std::mt19937_64 rng(6);
  std::uniform_real_distribution<double> ys(0.5, 100.0);
  for (auto& rec : noisy.records) rec.response = ys(rng);
  const auto [ncsv, nschema] = write_dataset(noisy, "noisy");
  auto rejected = run_cli("--json transfer --aux " + ncsv.string() + " --schema " +
                          nschema.string() + " --kb " + kb.string() +
                          " --app noisy --provider prov --learner MPR");
  CHECK(rejected.exit_code == 1);
  CHECK(json::parse(rejected.out).at("accepted") == false);
}

TEST_CASE("report-savings computes hour and cost reductions") {
  auto r = run_cli("--json report-savings --baseline-hours 168 --tl-hours 67 --rate-per-hour 0.1");
  REQUIRE(r.exit_code == 0);
  auto j = json::parse(r.out);
  CHECK(j.at("percent_saved_hours").get<double>() == Catch::Approx(60.119).epsilon(1e-3));
  CHECK(j.at("baseline_cost_usd").get<double>() == Catch::Approx(16.8));
  CHECK(j.at("tl_cost_usd").get<double>() == Catch::Approx(6.7));

  CHECK(run_cli("report-savings --baseline-hours 0 --tl-hours 1").exit_code == 1);
}

TEST_CASE("deterministic seeds give byte-identical simulate output") {
  const auto a_csv = work_dir() / "det-a.csv";
  const auto b_csv = work_dir() / "det-b.csv";
  const auto a_schema = work_dir() / "det-a.schema.json";
  const auto b_schema = work_dir() / "det-b.schema.json";
  REQUIRE(run_cli("--seed 11 simulate --provider gce --runs 3 --out-csv " + a_csv.string() +
                  " --out-schema " + a_schema.string())
              .exit_code == 0);
  REQUIRE(run_cli("--seed 11 simulate --provider gce --runs 3 --out-csv " + b_csv.string() +
                  " --out-schema " + b_schema.string())
              .exit_code == 0);
  CHECK(slurp(a_csv) == slurp(b_csv));
  CHECK(slurp(a_schema) == slurp(b_schema));
}
