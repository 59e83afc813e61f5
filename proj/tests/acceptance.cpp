// Acceptance run: one PASS/FAIL line per criterion, nonzero exit if any fail.

#include <charconv>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <random>
#include <sstream>
#include <string>
#include <vector>

#include "commands.hpp"
#include "json.hpp"
#include "tcmpc/harness.hpp"

using namespace tcmpc;
namespace fs = std::filesystem;

namespace {

struct Verdict {
  bool pass = true;
  std::string detail;

  void require(bool ok, const std::string& what) {
    if (!ok) {
      pass = false;
      detail += (detail.empty() ? "" : "; ") + what;
    }
  }
};

int failures = 0;

void report(int id, const char* title, const Verdict& v, const std::string& info) {
  std::printf("criterion %d: %s  %s", id, v.pass ? "PASS" : "FAIL", title);
  if (!info.empty()) std::printf(" [%s]", info.c_str());
  if (!v.pass) std::printf(" -- %s", v.detail.c_str());
  std::printf("\n");
  std::fflush(stdout);
  if (!v.pass) ++failures;
}

std::string fmt(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.3g", v);
  return buf;
}

int cli(std::vector<std::string> args) {
  args.insert(args.begin(), "tcmpc");
  std::vector<const char*> argv;
  for (const auto& a : args) argv.push_back(a.c_str());
  return app::dispatch(static_cast<int>(argv.size()), argv.data());
}

std::string without_loop_times(const fs::path& csv) {
  std::istringstream in(read_text(csv));
  std::string line, out;
  int column = -1;
  while (std::getline(in, line)) {
    std::vector<std::string> fields;
    std::stringstream ls(line);
    for (std::string f; std::getline(ls, f, ',');) fields.push_back(f);
    if (column < 0) {
      for (std::size_t i = 0; i < fields.size(); ++i) {
        if (fields[i] == "loop_time_s") column = static_cast<int>(i);
      }
    } else if (column < static_cast<int>(fields.size())) {
      auto& t = fields[static_cast<std::size_t>(column)];
      double value = -1.0;
      const auto res = std::from_chars(t.data(), t.data() + t.size(), value);
      t = (res.ec == std::errc{} && res.ptr == t.data() + t.size() && value >= 0.0) ? "" : "<bad wall time>";
    } else {
      out += "<missing wall time>";
    }
    for (const auto& f : fields) out += f + ",";
    out += "\n";
  }
  return out;
}

std::vector<fs::path> csv_files(const fs::path& dir) {
  std::vector<fs::path> files;
  for (const auto& e : fs::directory_iterator(dir)) {
    if (e.path().extension() == ".csv") files.push_back(e.path());
  }
  std::sort(files.begin(), files.end());
  return files;
}

double translational_relative_error(const StateVector& x, const TranslationalState& exact) {
  Eigen::Matrix<double, 6, 1> a, b;
  a << x.segment<3>(0), x.segment<3>(3);
  b << exact.dr, exact.dv;
  return (a - b).norm() / b.norm();
}

void equilibrium() {
  const PhysicalParams p;
  const StateVector xd = State13::docked().to_vector();
  StateVector x = xd;
  for (int k = 0; k < 1000; ++k) x = step(x, ControlVector::Zero(), 10.0, Integrator::Euler, p);
  const double drift = (x - xd).lpNorm<Eigen::Infinity>();
  Verdict v;
  v.require(drift <= 1e-12, "drift " + fmt(drift));
  report(1, "docked state is an equilibrium over 1000 Euler steps", v, "drift " + fmt(drift));
}

void integrator_accuracy() {
  const PhysicalParams p;
  const TranslationalState t0{Vec3(1.5, -1.77, 3.0), Vec3(1e-3, 3.4e-3, 0.0)};
  const TranslationalState exact = cw_analytic_transition(t0, 1000.0, p.mean_motion);
  State13 s;
  s.dr = t0.dr;
  s.dv = t0.dv;
  double err[2];
  int i = 0;
  for (Integrator m : {Integrator::Rk4, Integrator::Euler}) {
    StateVector x = s.to_vector();
    for (int k = 0; k < 1000; ++k) x = step(x, ControlVector::Zero(), 1.0, m, p);
    err[i++] = translational_relative_error(x, exact);
  }
  Verdict v;
  v.require(err[0] <= 1e-7, "RK4 relative error " + fmt(err[0]));
  v.require(err[1] <= 1e-3, "Euler relative error " + fmt(err[1]));
  report(2, "integrators match the analytic CW solution over 1000 s", v,
         "rk4 " + fmt(err[0]) + ", euler " + fmt(err[1]));
}

void gradient_check() {
  std::mt19937_64 rng(2024);
  std::uniform_real_distribution<double> u(-1.0, 1.0);
  int instances = 0, bad = 0;
  double worst = 0.0;
  for (Integrator m : {Integrator::Euler, Integrator::Rk4}) {
    for (int horizon : {1, 3, 5}) {
      for (int rep = 0; rep < 4; ++rep, ++instances) {
        OcpSpec spec = OcpSpec::defaults();
        spec.horizon = horizon;
        spec.integrator = m;
        State13 s;
        s.dr = Vec3(u(rng), u(rng), u(rng)) * 1.5;
        s.dv = Vec3(u(rng), u(rng), u(rng)) * 1e-3;
        s.dq = Quaternion{std::abs(u(rng)), Vec3(u(rng), u(rng), u(rng))}.normalized();
        s.dw = Vec3(u(rng), u(rng), u(rng)) * 2e-3;
        const StateVector x0 = s.to_vector();
        ControlSequence useq(horizon);
        for (int i = 0; i < horizon; ++i) {
          for (int j = 0; j < kControlDim; ++j) useq[i](j) = spec.upper(j) * u(rng);
        }
        const auto g = cost_gradient(x0, useq, spec);
        for (std::size_t k = 0; k < g.size(); ++k) {
          const double h = 1e-2 * spec.upper(static_cast<int>(k % kControlDim));
          ControlSequence plus = useq, minus = useq;
          plus.flat()[k] += h;
          minus.flat()[k] -= h;
          const double fd = (cost(x0, plus, spec) - cost(x0, minus, spec)) / (2.0 * h);
          const double scale = std::max(std::abs(g[k]), std::abs(fd));
          const double gap = std::abs(g[k] - fd);
          if (scale > 0.0) worst = std::max(worst, gap / scale);
          if (gap > std::max(1e-5 * scale, 1e-10)) ++bad;
        }
      }
    }
  }
  Verdict v;
  v.require(instances >= 20, "only " + std::to_string(instances) + " instances");
  v.require(bad == 0, std::to_string(bad) + " components outside tolerance");
  report(3, "adjoint gradient matches central differences", v,
         std::to_string(instances) + " instances, worst relative gap " + fmt(worst));
}

void solver_contract(const fs::path& dir) {
  const OcpSpec spec = OcpSpec::defaults();
  Verdict v;
  std::size_t rows = 0;
  for (const auto& r : read_trial_dir(dir / "trials")) {
    for (std::size_t k = 0; k < r.record.steps(); ++k) {
      ++rows;
      if (r.budget.is_bounded() && r.record.iterations[k] > r.budget.cap()) {
        v.require(false, "trial " + std::to_string(r.trial_id) + " j_max " + r.budget.label() + " step " +
                             std::to_string(k) + " used " + std::to_string(r.record.iterations[k]));
      }
      const ControlVector& u = r.record.controls[k];
      if ((u.array() > spec.upper.array()).any() || (u.array() < spec.lower.array()).any()) {
        v.require(false, "control outside bounds in trial " + std::to_string(r.trial_id));
      }
    }
  }
  std::size_t audited = 0, descent_failures = 0;
  for (const auto& a : read_solver_audit(dir / "solver_audit.csv")) {
    ++audited;
    if (!a.descent_ok || a.final_cost > a.warm_cost) ++descent_failures;
  }
  v.require(audited == rows, "audit rows " + std::to_string(audited) + " vs trial rows " + std::to_string(rows));
  v.require(descent_failures == 0, std::to_string(descent_failures) + " solves without monotone descent");
  report(4, "iteration cap, monotone descent and input bounds hold in every solve", v,
         std::to_string(rows) + " solves");
}

void success_counts(const nlohmann::json& summary) {
  const auto& table = summary["success_table"];
  std::string counts;
  std::vector<int> s;
  int trials = 0;
  for (const auto& row : table) {
    s.push_back(row["successes"].get<int>());
    trials = row["successes"].get<int>() + row["failures"].get<int>();
    counts += (counts.empty() ? "" : " ") + row["j_max"].get<std::string>() + ":" + std::to_string(s.back());
  }
  Verdict v;
  for (std::size_t i = 1; i < s.size(); ++i) {
    v.require(s[i - 1] <= s[i], "count decreases between budgets " + std::to_string(i - 1) + " and " +
                                    std::to_string(i));
  }
  const bool last_optimal = !table.empty() && table.back()["j_max"] == "optimal";
  v.require(last_optimal, "grid does not end with optimal");
  if (!s.empty()) {
    v.require(10 * s.back() >= 9 * trials, "optimal docks " + std::to_string(s.back()) + "/" + std::to_string(trials));
    v.require(s.front() < s.back(), "smallest budget docks as often as optimal (" + std::to_string(s.front()) + "/" +
                                        std::to_string(trials) + ")");
  }
  report(5, "success count grows with the iteration budget", v, counts + " of " + std::to_string(trials));
}

void open_loop_comparison(const fs::path& dir) {
  Verdict v;
  if (cli({"compare-openloop", "--perturb", "on", "--seed", "0", "--out", dir.string()}) != 0) {
    v.require(false, "compare-openloop failed");
    report(6, "closed loop rejects perturbations that derail the open loop", v, "");
    return;
  }
  const auto j = nlohmann::json::parse(read_text(dir / "comparison.json"));
  const double nominal = j["open_loop_nominal"]["final_error_inf"].get<double>();
  const double ol = j["open_loop"]["final_error"].get<double>();
  const double cl = j["closed_loop"]["final_error"].get<double>();
  v.require(j["open_loop_nominal"]["within_tolerance"].get<bool>(), "nominal open loop misses tolerance");
  v.require(ol >= 10.0 * cl, "open-loop error only " + fmt(ol / cl) + "x closed-loop error");
  v.require(j["closed_loop"]["docked"].get<bool>(), "closed loop did not dock");
  report(6, "closed loop rejects perturbations that derail the open loop", v,
         "nominal " + fmt(nominal) + ", open " + fmt(ol) + ", closed " + fmt(cl));
}

void timing_report(const fs::path& dir, const nlohmann::json& summary) {
  Verdict v;
  std::size_t calls_total = 0;
  for (const auto& b : summary["budgets"]) {
    const auto& t = b["timing"];
    for (const char* key : {"solver_calls", "mean_loop_time_s", "max_loop_time_s", "histogram_bin_width_s", "histogram"}) {
      v.require(t.contains(key), "missing timing field " + std::string(key));
    }
    if (!v.pass) break;
    v.require(t["histogram_bin_width_s"].get<double>() == 0.1, "bin width is not 0.1 s");
    std::size_t sum = 0;
    for (const auto& bin : t["histogram"]) sum += bin["count"].get<std::size_t>();
    v.require(sum == t["solver_calls"].get<std::size_t>(),
              "histogram of " + b["j_max"].get<std::string>() + " counts " + std::to_string(sum));
    calls_total += t["solver_calls"].get<std::size_t>();
  }
  std::size_t rows = 0;
  for (const auto& f : csv_files(dir / "trials")) {
    const TrialResult r = read_trial_csv(f);
    rows += r.record.steps();
  }
  v.require(rows == calls_total, "solver calls " + std::to_string(calls_total) + " vs rows " + std::to_string(rows));
  report(7, "loop timing is recorded and binned per solver call", v, std::to_string(calls_total) + " calls");
}

void reproducibility(const fs::path& first, const fs::path& root) {
  Verdict v;
  const fs::path replay = root / "replay";
  if (cli({"campaign", "--config", (first / "manifest.json").string(), "--out", replay.string()}) != 0) {
    v.require(false, "campaign replay failed");
  } else {
    const auto a = csv_files(first / "trials");
    const auto b = csv_files(replay / "trials");
    v.require(a.size() == b.size(), "different number of trial files");
    for (std::size_t i = 0; i < std::min(a.size(), b.size()); ++i) {
      if (a[i].filename() != b[i].filename() || without_loop_times(a[i]) != without_loop_times(b[i])) {
        v.require(false, "trial file differs: " + a[i].filename().string());
      }
    }
  }
  const fs::path s1 = root / "sim1", s2 = root / "sim2", s3 = root / "sim3";
  if (cli({"simulate", "--seed", "7", "--jmax", "4", "--out", s1.string()}) != 0 ||
      cli({"simulate", "--seed", "7", "--jmax", "4", "--out", s2.string()}) != 0 ||
      cli({"simulate", "--config", (s1 / "manifest.json").string(), "--out", s3.string()}) != 0) {
    v.require(false, "simulate failed");
  } else {
    const std::string name = trial_csv_name(0, IterationBudget(4));
    const std::string reference = without_loop_times(s1 / "trials" / name);
    v.require(reference == without_loop_times(s2 / "trials" / name), "simulate --seed 7 differs between runs");
    v.require(reference == without_loop_times(s3 / "trials" / name), "simulate manifest replay differs");
  }
  report(8, "manifest replays reproduce every trial CSV", v, "campaign and simulate");
}

}  // namespace

int main() {
  const fs::path root = fs::temp_directory_path() / "tcmpc_acceptance";
  std::error_code ec;
  fs::remove_all(root, ec);
  fs::create_directories(root);

  equilibrium();
  integrator_accuracy();
  gradient_check();

  const fs::path campaign = root / "campaign";
  const int rc = cli({"campaign", "--seed", "0", "--out", campaign.string()});
  if (rc != 0) {
    Verdict v;
    v.require(false, "campaign exited with " + std::to_string(rc));
    for (int id : {4, 5, 7}) report(id, "desk campaign", v, "");
  } else {
    const auto summary = nlohmann::json::parse(read_text(campaign / "summary.json"));
    solver_contract(campaign);
    success_counts(summary);
    open_loop_comparison(root / "compare");
    timing_report(campaign, summary);
  }
  reproducibility(campaign, root);

  std::printf("%d of 8 criteria failed\n", failures);
  return failures == 0 ? 0 : 1;
}
