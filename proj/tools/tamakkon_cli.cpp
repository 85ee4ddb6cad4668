#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <iomanip>
#include <iostream>
#include <map>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <json.hpp>

#include "tamakkon/core.hpp"
#include "tamakkon/knowledgebase.hpp"
#include "tamakkon/learners.hpp"
#include "tamakkon/planner.hpp"
#include "tamakkon/similarity.hpp"
#include "tamakkon/simulator.hpp"
#include "tamakkon/statkit.hpp"
#include "tamakkon/transfer.hpp"

using nlohmann::json;
using namespace tamakkon;

namespace {

std::string kb_path_or_env(const std::string& flag_value) {
  if (!flag_value.empty()) return flag_value;
  if (const char* env = std::getenv("TAMAKKON_KB")) return env;
  return "./kb";
}

InstanceCatalog load_catalog_arg(const std::string& arg) {
  if (arg == "ec2") return bundled_catalog(Provider::Ec2);
  if (arg == "gce") return bundled_catalog(Provider::Gce);
  std::ifstream in(arg);
  if (!in) throw Error(ErrorCode::IoError, "cannot open catalog: " + arg);
  json j;
  in >> j;
  return catalog_from_json(j);
}

void emit(const json& j, bool as_json, const std::string& text) {
  if (as_json) std::cout << j.dump(2) << "\n";
  else std::cout << text;
}

std::map<std::string, double> parse_kv(const std::vector<std::string>& kvs) {
  std::map<std::string, double> out;
  for (const auto& kv : kvs) {
    auto eq = kv.find('=');
    if (eq == std::string::npos) {
      throw Error(ErrorCode::InvalidArgument, "expected key=value, got: " + kv);
    }
    out[kv.substr(0, eq)] = std::stod(kv.substr(eq + 1));
  }
  return out;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"tamakkon - transfer-learning-assisted cloud deployment advisor"};
  app.require_subcommand(1);

  std::uint64_t seed = 0;
  bool as_json = false;
  app.add_option("--seed", seed, "global random seed")->capture_default_str();
  app.add_flag("--json", as_json, "emit JSON on stdout");

  // ---- ingest ----
  std::string in_csv, in_schema, in_app, in_provider, in_kb, in_id;
  auto* ingest = app.add_subcommand("ingest", "validate a profile CSV and optionally store it");
  ingest->add_option("--csv", in_csv)->required();
  ingest->add_option("--schema", in_schema)->required();
  ingest->add_option("--app", in_app)->required();
  ingest->add_option("--provider", in_provider)->required();
  ingest->add_option("--kb", in_kb, "knowledgebase directory (stores the dataset when given)");
  ingest->add_option("--id", in_id, "entry id (default app@provider)");

  // ---- simulate ----
  std::string sim_provider = "ec2", sim_app = "app", sim_out_csv, sim_out_schema;
  std::size_t sim_runs = 10;
  double sim_sigma = 0.1, sim_base_work = 2000.0, sim_working_set = 1.0, sim_file_size = 10.0;
  double sim_parallel_eff = 0.8;
  bool sim_parallel = false, sim_multithreading = false, sim_external = false, sim_in_mem = false;
  std::uint32_t sim_threads = 1;
  auto* simulate = app.add_subcommand("simulate", "generate a synthetic profile dataset");
  simulate->add_option("--provider", sim_provider, "ec2, gce, or a catalog JSON file")
      ->capture_default_str();
  simulate->add_option("--app-id", sim_app)->capture_default_str();
  simulate->add_option("--runs", sim_runs, "runs per instance")->capture_default_str();
  simulate->add_option("--sigma", sim_sigma, "lognormal noise sigma")->capture_default_str();
  simulate->add_option("--base-work", sim_base_work)->capture_default_str();
  simulate->add_option("--working-set-gib", sim_working_set)->capture_default_str();
  simulate->add_option("--file-size", sim_file_size)->capture_default_str();
  simulate->add_option("--threads", sim_threads)->capture_default_str();
  simulate->add_option("--parallel-efficiency", sim_parallel_eff)->capture_default_str();
  simulate->add_flag("--parallel", sim_parallel);
  simulate->add_flag("--multithreading", sim_multithreading);
  simulate->add_flag("--external-files", sim_external);
  simulate->add_flag("--loaded-in-memory", sim_in_mem);
  simulate->add_option("--out-csv", sim_out_csv)->required();
  simulate->add_option("--out-schema", sim_out_schema)->required();

  // ---- similarity ----
  std::string si_csv, si_schema, si_kb, si_app = "aux", si_provider = "";
  auto* sim_cmd = app.add_subcommand("similarity", "rank knowledgebase sources by similarity");
  sim_cmd->add_option("--aux", si_csv)->required();
  sim_cmd->add_option("--schema", si_schema)->required();
  sim_cmd->add_option("--kb", si_kb);
  sim_cmd->add_option("--app", si_app)->capture_default_str();
  sim_cmd->add_option("--provider", si_provider);

  // ---- train-base ----
  std::string tb_csv, tb_schema, tb_learner = "MPR", tb_app, tb_provider, tb_out, tb_kb;
  bool tb_repo = false;
  auto* train_base = app.add_subcommand("train-base", "train a base model the traditional way");
  train_base->add_option("--csv", tb_csv)->required();
  train_base->add_option("--schema", tb_schema)->required();
  train_base->add_option("--learner", tb_learner, "MPR, SVR, or RF")->capture_default_str();
  train_base->add_option("--app", tb_app)->required();
  train_base->add_option("--provider", tb_provider)->required();
  train_base->add_option("--out", tb_out, "write the model artifact JSON here");
  train_base->add_option("--kb", tb_kb);
  train_base->add_flag("--store", tb_repo, "store the artifact in the function repository");

  // ---- transfer ----
  std::string tr_csv, tr_schema, tr_kb, tr_app, tr_provider, tr_out, tr_curve;
  std::string tr_learner;
  double tr_max_rrmse = 15.0, tr_factor = 1.25;
  auto* transfer_cmd = app.add_subcommand("transfer", "run the transfer-learning loop");
  transfer_cmd->add_option("--aux", tr_csv)->required();
  transfer_cmd->add_option("--schema", tr_schema)->required();
  transfer_cmd->add_option("--kb", tr_kb);
  transfer_cmd->add_option("--app", tr_app)->required();
  transfer_cmd->add_option("--provider", tr_provider)->required();
  transfer_cmd->add_option("--learner", tr_learner, "restrict to one learner");
  transfer_cmd->add_option("--max-rrmse", tr_max_rrmse)->capture_default_str();
  transfer_cmd->add_option("--acceptance-factor", tr_factor)->capture_default_str();
  transfer_cmd->add_option("--out", tr_out, "write the accepted artifact JSON here");
  transfer_cmd->add_option("--curve-csv", tr_curve, "write the fraction/MSE curve as CSV");

  // ---- assess ----
  std::string as_model, as_csv, as_schema;
  auto* assess_cmd = app.add_subcommand("assess", "assess a model artifact on a test dataset");
  assess_cmd->add_option("--model", as_model)->required();
  assess_cmd->add_option("--csv", as_csv)->required();
  assess_cmd->add_option("--schema", as_schema)->required();

  // ---- plan ----
  std::string pl_model, pl_catalog = "ec2", pl_objective = "min-cost";
  std::vector<std::string> pl_workload;
  double pl_w_cost = 1.0, pl_w_time = 0.0;
  std::optional<double> pl_max_cost, pl_max_time;
  double pl_max_cost_v = -1, pl_max_time_v = -1;
  auto* plan_cmd = app.add_subcommand("plan", "emit a ranked deployment plan");
  plan_cmd->add_option("--model", pl_model)->required();
  plan_cmd->add_option("--catalog", pl_catalog, "ec2, gce, or a catalog JSON file")
      ->capture_default_str();
  plan_cmd->add_option("--objective", pl_objective, "min-cost, min-time, weighted")
      ->capture_default_str();
  plan_cmd->add_option("--w-cost", pl_w_cost)->capture_default_str();
  plan_cmd->add_option("--w-time", pl_w_time)->capture_default_str();
  plan_cmd->add_option("--max-cost", pl_max_cost_v, "max billed cost in USD");
  plan_cmd->add_option("--max-time", pl_max_time_v, "max predicted time in seconds");
  plan_cmd->add_option("--workload", pl_workload, "workload feature values, key=value");

  // ---- kb ----
  std::string kb_dir, kb_show_id;
  auto* kb_cmd = app.add_subcommand("kb", "inspect the knowledgebase");
  auto* kb_list = kb_cmd->add_subcommand("list", "list entry ids");
  kb_list->add_option("--kb", kb_dir);
  auto* kb_show = kb_cmd->add_subcommand("show", "show one entry");
  kb_show->add_option("--kb", kb_dir);
  kb_show->add_option("--id", kb_show_id)->required();

  // ---- report-savings ----
  double rs_baseline_h = 0, rs_tl_h = 0, rs_rate = -1;
  std::string rs_rate_table, rs_instance;
  auto* savings = app.add_subcommand("report-savings", "cost/time savings report");
  savings->add_option("--baseline-hours", rs_baseline_h)->required();
  savings->add_option("--tl-hours", rs_tl_h)->required();
  savings->add_option("--rate-per-hour", rs_rate, "flat $/h rate");
  savings->add_option("--rate-table", rs_rate_table, "catalog JSON (or ec2/gce)");
  savings->add_option("--instance", rs_instance, "instance name for the rate lookup");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    if (e.get_exit_code() == 0) return app.exit(e);
    std::ostringstream synopsis;
    synopsis << app.help();
    std::cerr << e.what() << "\n" << synopsis.str();
    return 2;
  }

  try {
    if (*ingest) {
      auto ds = load_profiles(in_csv, in_schema, in_app, in_provider);
      auto report = validate_dataset(ds);
      json j{{"rows", ds.records.size()}, {"violations", report.violations}};
      if (!in_kb.empty()) {
        kb::Store store(kb_path_or_env(in_kb));
        kb::KbEntry e;
        e.entry_id = in_id.empty() ? in_app + "@" + in_provider : in_id;
        e.dataset = ds;
        store.put(e);
        j["stored"] = e.entry_id;
      }
      std::ostringstream text;
      text << "rows: " << ds.records.size() << "\n";
      for (const auto& v : report.violations) text << "warning: " << v << "\n";
      emit(j, as_json, text.str());
    } else if (*simulate) {
      simulator::AppSpec spec;
      spec.app_id = sim_app;
      spec.base_work = sim_base_work;
      spec.mem_working_set_gib = sim_working_set;
      spec.file_size = sim_file_size;
      spec.threads = sim_threads;
      spec.parallel_efficiency = sim_parallel_eff;
      spec.parallel = sim_parallel ? 1.0 : 0.0;
      spec.multithreading = sim_multithreading ? 1.0 : 0.0;
      spec.external_files = sim_external ? 1.0 : 0.0;
      spec.loaded_in_memory = sim_in_mem ? 1.0 : 0.0;
      auto catalog = load_catalog_arg(sim_provider);
      auto noise = simulator::NoiseModel::with_default_day_effect(seed, sim_sigma);
      auto ds = simulator::simulate_runs(spec, catalog, sim_runs, noise, seed);
      std::ofstream csv(sim_out_csv);
      write_profiles_csv(csv, ds);
      std::ofstream schema(sim_out_schema);
      schema << schema_to_json(ds.schema).dump(2) << "\n";
      emit(json{{"rows", ds.records.size()}, {"csv", sim_out_csv}, {"schema", sim_out_schema}},
           as_json,
           "wrote " + std::to_string(ds.records.size()) + " rows to " + sim_out_csv + "\n");
    } else if (*sim_cmd) {
      auto aux = load_profiles(si_csv, si_schema, si_app, si_provider);
      kb::Store store(kb_path_or_env(si_kb));
      std::vector<kb::KbEntry> entries;
      for (const auto& id : store.list()) entries.push_back(store.get(id));
      auto ranked = similarity::rank_sources(aux, entries);
      json arr = json::array();
      std::ostringstream text;
      text << std::left << std::setw(28) << "source" << std::setw(16) << "tag"
           << std::setw(10) << "same" << "mean_d\n";
      for (const auto& r : ranked) {
        arr.push_back({{"entry_id", r.entry_id}, {"report", similarity::report_to_json(r.report)}});
        text << std::left << std::setw(28) << r.entry_id << std::setw(16)
             << similarity::to_string(r.report.tag) << std::setw(10) << r.report.same_count()
             << std::fixed << std::setprecision(4) << r.report.mean_d() << "\n";
      }
      emit(arr, as_json, text.str());
    } else if (*train_base) {
      auto ds = load_profiles(tb_csv, tb_schema, tb_app, tb_provider);
      auto artifact =
          learners::train_base_model(ds, learners::learner_from_string(tb_learner), seed);
      auto j = learners::artifact_to_json(artifact);
      if (!tb_out.empty()) {
        std::ofstream out(tb_out);
        out << learners::canonical_json(j) << "\n";
      }
      if (tb_repo) {
        kb::Store store(kb_path_or_env(tb_kb));
        store.repo_put(artifact);
      }
      std::ostringstream text;
      text << "learner: " << tb_learner << "\n"
           << "cv rrmse%: " << artifact.assessment.rrmse_percent << "\n"
           << "cv mse: " << artifact.assessment.mse << "\n";
      emit(j, as_json, text.str());
    } else if (*transfer_cmd) {
      auto aux = load_profiles(tr_csv, tr_schema, tr_app, tr_provider);
      kb::Store store(kb_path_or_env(tr_kb));
      transfer::TransferConfig cfg;
      cfg.seed = seed;
      cfg.acceptance_rrmse_max = tr_max_rrmse;
      cfg.relative_acceptance_factor = tr_factor;
      std::optional<learners::LearnerKind> only;
      if (!tr_learner.empty()) only = learners::learner_from_string(tr_learner);
      auto outcome = transfer::run_tamakkon(aux, store, cfg, only);
      if (!tr_out.empty()) {
        std::ofstream out(tr_out);
        out << learners::canonical_json(learners::artifact_to_json(outcome.artifact)) << "\n";
      }
      if (!tr_curve.empty()) {
        std::ofstream out(tr_curve);
        out << "fraction,eval_mse,source_rows_used\n";
        out.precision(17);
        for (const auto& c : outcome.fraction_curve) {
          out << c.fraction << ',' << c.eval_mse << ',' << c.source_rows_used << "\n";
        }
      }
      std::ostringstream text;
      text << "accepted: " << (outcome.accepted ? "yes" : "no") << "\n"
           << "source: " << outcome.source_id << "\n"
           << "mode: " << transfer::to_string(outcome.mode) << "\n"
           << "fraction: " << outcome.chosen_source_fraction << "\n"
           << "cv rrmse%: " << outcome.assessment.rrmse_percent << "\n";
      emit(transfer::outcome_to_json(outcome), as_json, text.str());
      if (!outcome.accepted) return 1;
    } else if (*assess_cmd) {
      std::ifstream in(as_model);
      if (!in) throw Error(ErrorCode::IoError, "cannot open model: " + as_model);
      json mj;
      in >> mj;
      auto artifact = learners::artifact_from_json(mj);
      auto test = load_profiles(as_csv, as_schema);
      auto a = learners::assess(artifact, test);
      std::ostringstream text;
      text << "rrmse%: " << a.rrmse_percent << "\nmse: " << a.mse << "\nn: " << a.n << "\n";
      emit(learners::assessment_to_json(a), as_json, text.str());
    } else if (*plan_cmd) {
      std::ifstream in(pl_model);
      if (!in) throw Error(ErrorCode::IoError, "cannot open model: " + pl_model);
      json mj;
      in >> mj;
      auto artifact = learners::artifact_from_json(mj);
      auto catalog = load_catalog_arg(pl_catalog);
      planner::Constraints con;
      if (pl_objective == "min-cost") con.objective = planner::Objective::MinCost;
      else if (pl_objective == "min-time") con.objective = planner::Objective::MinTime;
      else if (pl_objective == "weighted") con.objective = planner::Objective::Weighted;
      else throw Error(ErrorCode::InvalidArgument, "unknown objective: " + pl_objective);
      con.w_cost = pl_w_cost;
      con.w_time = pl_w_time;
      if (pl_max_cost_v >= 0) con.max_cost_usd = pl_max_cost_v;
      if (pl_max_time_v >= 0) con.max_time_s = pl_max_time_v;
      auto p = planner::plan(artifact, catalog, parse_kv(pl_workload), con);
      std::ostringstream text;
      text << std::left << std::setw(18) << "instance" << std::right << std::setw(14)
           << "pred_time_s" << std::setw(12) << "cost_usd" << "  feasible\n";
      for (const auto& c : p.candidates) {
        text << std::left << std::setw(18) << c.instance << std::right << std::fixed
             << std::setprecision(3) << std::setw(14) << c.predicted_time_s << std::setw(12)
             << c.billed_cost_usd << "  " << (c.feasible ? "yes" : "no") << "\n";
      }
      text << "chosen: " << (p.chosen ? *p.chosen : "(none)") << "\n";
      emit(planner::plan_to_json(p), as_json, text.str());
    } else if (*kb_cmd) {
      kb::Store store(kb_path_or_env(kb_dir));
      if (*kb_list) {
        auto ids = store.list();
        std::ostringstream text;
        for (const auto& id : ids) text << id << "\n";
        emit(json(ids), as_json, text.str());
      } else if (*kb_show) {
        auto e = store.get(kb_show_id);
        json j{{"entry_id", e.entry_id},
               {"app_id", e.dataset.app_id},
               {"provider_id", e.dataset.provider_id},
               {"rows", e.dataset.records.size()},
               {"tags", e.tags}};
        json artifacts = json::array();
        for (const auto& [k, a] : e.artifacts) {
          artifacts.push_back({{"learner", learners::to_string(k)},
                               {"rrmse_percent", a.assessment.rrmse_percent}});
        }
        j["artifacts"] = artifacts;
        std::ostringstream text;
        text << "entry: " << e.entry_id << "\nrows: " << e.dataset.records.size() << "\n";
        for (const auto& [k, a] : e.artifacts) {
          text << "model " << learners::to_string(k) << " rrmse%=" << a.assessment.rrmse_percent
               << "\n";
        }
        emit(j, as_json, text.str());
      } else {
        std::cerr << kb_cmd->help();
        return 2;
      }
    } else if (*savings) {
      if (!(rs_baseline_h > 0)) {
        throw Error(ErrorCode::InvalidArgument, "baseline hours must be > 0");
      }
      double rate = rs_rate;
      if (rate < 0 && !rs_rate_table.empty()) {
        auto catalog = load_catalog_arg(rs_rate_table);
        if (rs_instance.empty()) {
          throw Error(ErrorCode::InvalidArgument, "--rate-table needs --instance");
        }
        const auto* inst = catalog.find(rs_instance);
        if (!inst) throw Error(ErrorCode::NotFound, "no such instance: " + rs_instance);
        rate = inst->price_per_hour_usd;
      }
      const double pct_hours = (1.0 - rs_tl_h / rs_baseline_h) * 100.0;
      json j{{"baseline_vm_hours", rs_baseline_h},
             {"tl_vm_hours", rs_tl_h},
             {"percent_saved_hours", pct_hours}};
      std::ostringstream text;
      text << std::fixed << std::setprecision(2) << "hours: " << rs_baseline_h << " -> " << rs_tl_h
           << " (" << pct_hours << "% saved)\n";
      if (rate >= 0) {
        const double bc = rs_baseline_h * rate, tc = rs_tl_h * rate;
        j["baseline_cost_usd"] = bc;
        j["tl_cost_usd"] = tc;
        j["percent_saved_cost"] = bc > 0 ? (1.0 - tc / bc) * 100.0 : 0.0;
        text << "cost: $" << bc << " -> $" << tc << " ("
             << (bc > 0 ? (1.0 - tc / bc) * 100.0 : 0.0) << "% saved)\n";
      }
      emit(j, as_json, text.str());
    }
  } catch (const Error& e) {
    std::cerr << "error [" << to_string(e.code()) << "]: " << e.what() << "\n";
    return 1;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
  return 0;
}
