#include "commands.hpp"

#include <chrono>
#include <cstdio>
#include <ctime>
#include <iostream>

#include "CLI11.hpp"
#include "json.hpp"
#include "tcmpc/kernels.hpp"

#ifndef TCMPC_VERSION
#define TCMPC_VERSION "0.0.0"
#endif

namespace tcmpc::app {

namespace fs = std::filesystem;

namespace {

std::string utc_timestamp() {
  const std::time_t now = std::chrono::system_clock::to_time_t(std::chrono::system_clock::now());
  std::tm tm{};
  gmtime_r(&now, &tm);
  char buf[32];
  std::strftime(buf, sizeof buf, "%Y-%m-%dT%H:%M:%SZ", &tm);
  return buf;
}

void ensure_dir(const fs::path& dir) {
  std::error_code ec;
  fs::create_directories(dir, ec);
  if (ec) throw IoError("cannot create " + dir.string() + ": " + ec.message());
}

void print_table(const CampaignSummary& s) {
  std::printf("%-8s %8s %8s %12s %12s\n", "j_max", "docked", "failed", "mean_loop_s", "max_loop_s");
  for (const auto& b : s.budgets) {
    std::printf("%-8s %8d %8d %12.4g %12.4g\n", b.budget.label().c_str(), b.successes, b.failures, b.mean_loop_time,
                b.max_loop_time);
  }
}

void progress(const TrialResult& r) {
  std::fprintf(stderr, "trial %d j_max=%s steps=%zu %s\n", r.trial_id, r.budget.label().c_str(), r.record.steps(),
               r.record.docked ? "docked" : "not docked");
}

double final_error(const TrialRecord& r) { return (r.states.back() - State13::docked().to_vector()).norm(); }
double final_error_inf(const TrialRecord& r) {
  return (r.states.back() - State13::docked().to_vector()).lpNorm<Eigen::Infinity>();
}

}  // namespace

void write_manifest(const fs::path& path, const std::string& command, const RunConfig& cfg,
                    const std::vector<std::string>& outputs) {
  using nlohmann::ordered_json;
  ordered_json m;
  m["artifact"] = "tcmpc";
  m["version"] = TCMPC_VERSION;
  m["command"] = command;
  m["start_time"] = utc_timestamp();
  m["seed"] = cfg.campaign.seed;
  m["kernels"] = std::string(kernels::active().name);
  m["timing_contended"] = cfg.campaign.threads > 1;
  m["output_paths"] = outputs;
  m["config"] = ordered_json::parse(config_to_json(cfg));
  write_text(path, m.dump(2) + "\n");
}

int run_simulate(const RunConfig& cfg) {
  RunConfig one = cfg;
  one.campaign.trials = 1;
  one.campaign.grid = {cfg.campaign.grid.front()};
  const fs::path out = one.campaign.output_dir;
  ensure_dir(out);
  write_manifest(out / "manifest.json", "simulate", one,
                 {"trials/" + trial_csv_name(0, one.campaign.grid.front()), "solver_audit.csv", "summary.json"});
  const CampaignSummary s = run_campaign(one.campaign);
  const auto& b = s.budgets.front();
  std::printf("j_max=%s steps=%zu %s total_cost=%.6g\n", b.budget.label().c_str(), b.z_error.size(),
              b.successes ? "docked" : "not docked", b.total_cost);
  return kOk;
}

int run_campaign_command(const RunConfig& cfg) {
  const fs::path out = cfg.campaign.output_dir;
  ensure_dir(out);
  write_manifest(out / "manifest.json", "campaign", cfg, {"trials/", "solver_audit.csv", "summary.json"});
  const CampaignSummary s = run_campaign(cfg.campaign, progress);
  print_table(s);
  return kOk;
}

int run_compare_openloop(const RunConfig& cfg) {
  const CampaignConfig& c = cfg.campaign;
  const fs::path out = c.output_dir;
  ensure_dir(out);
  write_manifest(out / "manifest.json", "compare-openloop", cfg,
                 {"openloop_nominal.csv", "openloop.csv", "closedloop.csv", "comparison.json"});

  OcpSpec spec = c.ocp;
  spec.integrator = Integrator::Rk4;
  MissionConfig mission = c.mission;
  mission.plant_integrator = Integrator::Rk4;
  MissionConfig nominal = mission;
  nominal.perturbation.kind = PerturbationKind::Off;
  SolverConfig scfg = c.solver;
  scfg.budget = IterationBudget::unbounded();
  const StateVector x0 = c.initial_state ? *c.initial_state : preset_initial_state();

  const TrialResult ol_nominal{0, scfg.budget, run_open_loop(x0, spec, scfg, nominal, c.seed)};
  const TrialResult ol{0, scfg.budget, run_open_loop(x0, spec, scfg, mission, c.seed)};
  const TrialResult cl{0, scfg.budget, run_closed_loop(x0, spec, scfg, mission, c.seed)};
  write_trial_csv(out / "openloop_nominal.csv", ol_nominal, spec.dt);
  write_trial_csv(out / "openloop.csv", ol, spec.dt);
  write_trial_csv(out / "closedloop.csv", cl, spec.dt);

  const double ol_err = final_error(ol.record);
  const double cl_err = final_error(cl.record);
  nlohmann::ordered_json j;
  j["seed"] = c.seed;
  j["perturbation"] = mission.perturbation.kind == PerturbationKind::Off ? "off" : "on";
  j["perturbation_max"] = mission.perturbation.w_max;
  j["success_tol"] = mission.success_tol;
  j["open_loop_nominal"] = {{"steps", ol_nominal.record.steps()},
                            {"final_error", final_error(ol_nominal.record)},
                            {"final_error_inf", final_error_inf(ol_nominal.record)},
                            {"within_tolerance", final_error_inf(ol_nominal.record) <= mission.success_tol}};
  j["open_loop"] = {{"steps", ol.record.steps()},
                    {"final_error", ol_err},
                    {"final_error_inf", final_error_inf(ol.record)},
                    {"within_tolerance", final_error_inf(ol.record) <= mission.success_tol}};
  j["closed_loop"] = {{"steps", cl.record.steps()},
                      {"final_error", cl_err},
                      {"final_error_inf", final_error_inf(cl.record)},
                      {"docked", cl.record.docked}};
  j["closed_loop_better"] = cl_err < ol_err;
  j["error_ratio"] = cl_err > 0.0 ? ol_err / cl_err : 0.0;
  write_text(out / "comparison.json", j.dump(2) + "\n");

  std::printf("open loop (nominal) final error %.6g\nopen loop final error %.6g\nclosed loop final error %.6g (%s)\n",
              final_error(ol_nominal.record), ol_err, cl_err, cl.record.docked ? "docked" : "not docked");
  return kOk;
}

int run_report(const fs::path& dir) {
  const std::vector<TrialResult> results = read_trial_dir(dir / "trials");
  const std::string text = summary_to_json(summarize(results));
  write_text(dir / "report_summary.json", text);
  std::error_code ec;
  if (fs::exists(dir / "summary.json", ec)) {
    const bool same = read_text(dir / "summary.json") == text;
    std::printf("%s\n", same ? "summary reproduced exactly" : "summary differs from summary.json");
  }
  return kOk;
}

int dispatch(int argc, const char* const* argv) {
  CLI::App app{"Iteration-budgeted MPC for spacecraft docking"};
  app.require_subcommand(1);

  std::string config_path, seed, out, jmax, trials, perturb;
  auto add_common = [&](CLI::App* sub) {
    sub->add_option("--config", config_path, "Configuration file (flat key: value YAML or a run manifest)");
    sub->add_option("--seed", seed, "Master seed (u64)");
    sub->add_option("--out", out, "Output directory");
    sub->add_option("--jmax", jmax, "Budget list, e.g. 1,2,4,optimal");
    sub->add_option("--trials", trials, "Number of trials");
    sub->add_option("--perturb", perturb, "Plant perturbations")->check(CLI::IsMember({"on", "off"}));
  };
  CLI::App* simulate = app.add_subcommand("simulate", "One closed-loop trial");
  CLI::App* campaign = app.add_subcommand("campaign", "Monte Carlo sweep over the budget grid");
  CLI::App* compare = app.add_subcommand("compare-openloop", "Open loop vs closed loop under one perturbation seed");
  CLI::App* report = app.add_subcommand("report", "Re-summarize the trial CSVs under --out");
  for (CLI::App* sub : {simulate, campaign, compare, report}) add_common(sub);

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return kUsageError;
  }

  try {
    if (report->parsed()) {
      if (out.empty()) throw ConfigError("--out: report needs the campaign directory");
      return run_report(out);
    }
    RunConfig cfg = config_path.empty() ? RunConfig{} : load_config(config_path);
    if (!seed.empty()) set_key(cfg, "seed", seed);
    if (!out.empty()) cfg.campaign.output_dir = out;
    if (!jmax.empty()) cfg.campaign.grid = parse_budget_list(jmax);
    if (!trials.empty()) set_key(cfg, "trials", trials);
    if (perturb == "off") {
      cfg.campaign.mission.perturbation.kind = PerturbationKind::Off;
    } else if (perturb == "on" && cfg.campaign.mission.perturbation.kind == PerturbationKind::Off) {
      cfg.campaign.mission.perturbation.kind = PerturbationKind::Uniform;
    }
    if (simulate->parsed()) return run_simulate(cfg);
    if (campaign->parsed()) return run_campaign_command(cfg);
    return run_compare_openloop(cfg);
  } catch (const ConfigError& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return kUsageError;
  } catch (const std::invalid_argument& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return kUsageError;
  } catch (const IoError& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return kIoError;
  } catch (const fs::filesystem_error& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return kIoError;
  }
}

}  // namespace tcmpc::app
