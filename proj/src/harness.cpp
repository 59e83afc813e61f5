#include "tcmpc/harness.hpp"

#include <algorithm>
#include <atomic>
#include <charconv>
#include <cstdio>
#include <cmath>
#include <fstream>
#include <mutex>
#include <sstream>
#include <thread>

#include "json.hpp"

namespace tcmpc {

namespace fs = std::filesystem;

namespace {

constexpr std::uint64_t kSamplingStream = 0x73616d706c65ULL;

std::uint64_t splitmix64(std::uint64_t z) {
  z += 0x9e3779b97f4a7c15ULL;
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
  return z ^ (z >> 31);
}

}  // namespace

StateVector default_sampling_bounds() {
  StateVector b;
  b << 1.5, 1.5, 1.5, 1e-3, 1e-3, 1e-3, 1.0, 1.0, 1.0, 1.0, 2e-3, 2e-3, 2e-3;
  return b;
}

State13 sample_initial_state(RandomStream& rng, const StateVector& bounds) {
  auto symmetric = [&](double half) { return half * (2.0 * rng.uniform() - 1.0); };
  State13 s;
  for (int i = 0; i < 3; ++i) s.dr(i) = symmetric(bounds(i));
  for (int i = 0; i < 3; ++i) s.dv(i) = symmetric(bounds(3 + i));
  Quaternion q;
  do {
    q.eta = symmetric(1.0);
    for (int i = 0; i < 3; ++i) q.rho(i) = symmetric(1.0);
  } while (q.squared_norm() == 0.0);
  q = q.normalized();
  if (q.eta < 0.0) q = -q;
  s.dq = q;
  for (int i = 0; i < 3; ++i) s.dw(i) = symmetric(bounds(10 + i));
  return s;
}

std::uint64_t trial_seed(std::uint64_t master_seed, int trial_id) {
  return splitmix64(master_seed ^ splitmix64(static_cast<std::uint64_t>(trial_id)));
}

State13 campaign_initial_state(std::uint64_t master_seed, int trial_id, const StateVector& bounds) {
  RandomStream rng(trial_seed(master_seed, trial_id), kSamplingStream);
  return sample_initial_state(rng, bounds);
}

std::vector<IterationBudget> desk_budget_grid() {
  return {IterationBudget(1), IterationBudget(2), IterationBudget(4), IterationBudget(8), IterationBudget(16),
          IterationBudget::unbounded()};
}

std::vector<IterationBudget> full_budget_grid() {
  std::vector<IterationBudget> g;
  for (int j = 1; j <= 10; ++j) g.emplace_back(j);
  g.emplace_back(50);
  g.emplace_back(100);
  g.push_back(IterationBudget::unbounded());
  return g;
}

void CampaignConfig::validate() const {
  if (trials < 1) throw std::invalid_argument("trials must be >= 1");
  if (grid.empty()) throw std::invalid_argument("jmax grid must be nonempty");
  if (bounds.minCoeff() < 0.0) throw std::invalid_argument("sampling bounds must be nonnegative");
  if (threads < 1) throw std::invalid_argument("threads must be >= 1");
  ocp.validate();
  mission.validate();
  solver.validate();
}

std::size_t histogram_bin(double seconds) {
  return static_cast<std::size_t>(std::floor(std::max(seconds, 0.0) / kHistogramBinWidth));
}

BudgetSummary summarize(std::span<const TrialRecord> records, const IterationBudget& budget) {
  if (records.empty()) throw std::invalid_argument("summarize needs at least one trial");
  BudgetSummary s;
  s.budget = budget;
  s.trials = static_cast<int>(records.size());

  std::size_t longest = 0;
  for (const auto& r : records) {
    if (r.steps() == 0) throw std::invalid_argument("trial without steps");
    longest = std::max(longest, r.steps());
    if (r.docked) ++s.successes;
  }
  s.failures = s.trials - s.successes;

  std::vector<double>* series[] = {&s.z_error, &s.state_error, &s.control_error,
                                   &s.translational_error, &s.attitude_error, &s.stage_cost};
  for (auto* v : series) v->assign(longest, 0.0);

  const StateVector target = State13::docked().to_vector();
  for (const auto& r : records) {
    for (std::size_t k = 0; k < longest; ++k) {
      const std::size_t at = std::min(k, r.steps() - 1);
      const StateVector e = r.states[at] - target;
      const ControlVector& u = r.controls[at];
      const double state_sq = e.squaredNorm();
      const double control_sq = u.squaredNorm();
      s.z_error[k] += std::sqrt(state_sq + control_sq);
      s.state_error[k] += std::sqrt(state_sq);
      s.control_error[k] += std::sqrt(control_sq);
      s.translational_error[k] += e.head<6>().norm();
      s.attitude_error[k] += e.tail<7>().norm();
      s.stage_cost[k] += r.stage_costs[at];
    }
  }
  const double n = static_cast<double>(records.size());
  for (auto* v : series) {
    for (double& x : *v) x /= n;
  }
  for (std::size_t k = 0; k < longest; ++k) {
    s.total_error += s.z_error[k];
    s.total_cost += s.stage_cost[k];
  }

  double time_sum = 0.0;
  for (const auto& r : records) {
    for (double t : r.loop_times) {
      ++s.solver_calls;
      time_sum += t;
      s.max_loop_time = std::max(s.max_loop_time, t);
      const std::size_t b = histogram_bin(t);
      if (b >= s.histogram.size()) s.histogram.resize(b + 1, 0);
      ++s.histogram[b];
    }
  }
  s.mean_loop_time = s.solver_calls ? time_sum / static_cast<double>(s.solver_calls) : 0.0;
  return s;
}

CampaignSummary summarize(std::span<const TrialResult> results) {
  if (results.empty()) throw std::invalid_argument("summarize needs at least one trial");
  std::vector<IterationBudget> order;
  for (const auto& r : results) {
    if (std::find(order.begin(), order.end(), r.budget) == order.end()) order.push_back(r.budget);
  }
  CampaignSummary out;
  for (const auto& b : order) {
    std::vector<const TrialResult*> group;
    for (const auto& r : results) {
      if (r.budget == b) group.push_back(&r);
    }
    std::stable_sort(group.begin(), group.end(),
                     [](const TrialResult* a, const TrialResult* c) { return a->trial_id < c->trial_id; });
    std::vector<TrialRecord> records;
    records.reserve(group.size());
    for (const auto* r : group) records.push_back(r->record);
    out.budgets.push_back(summarize(records, b));
  }
  return out;
}

std::vector<TrialResult> run_trials(const CampaignConfig& cfg,
                                    const std::function<void(const TrialResult&)>& on_result) {
  cfg.validate();
  std::vector<StateVector> starts;
  starts.reserve(static_cast<std::size_t>(cfg.trials));
  for (int i = 0; i < cfg.trials; ++i) {
    starts.push_back(cfg.initial_state ? *cfg.initial_state
                                       : campaign_initial_state(cfg.seed, i, cfg.bounds).to_vector());
  }

  const std::size_t jobs = cfg.grid.size() * starts.size();
  std::vector<TrialResult> results(jobs);
  std::atomic<std::size_t> next{0};
  std::mutex report;
  auto worker = [&] {
    for (std::size_t j = next++; j < jobs; j = next++) {
      const std::size_t b = j / starts.size();
      const int trial = static_cast<int>(j % starts.size());
      SolverConfig scfg = cfg.solver;
      scfg.budget = cfg.grid[b];
      TrialResult r;
      r.trial_id = trial;
      r.budget = cfg.grid[b];
      r.record = run_closed_loop(starts[static_cast<std::size_t>(trial)], cfg.ocp, scfg, cfg.mission,
                                 trial_seed(cfg.seed, trial));
      if (on_result) {
        std::lock_guard lock(report);
        on_result(r);
      }
      results[j] = std::move(r);
    }
  };
  if (cfg.threads == 1) {
    worker();
  } else {
    std::vector<std::jthread> pool;
    for (int t = 0; t < cfg.threads; ++t) pool.emplace_back(worker);
  }
  return results;
}

CampaignSummary run_campaign(const CampaignConfig& cfg,
                             const std::function<void(const TrialResult&)>& on_result) {
  const std::vector<TrialResult> results = run_trials(cfg, on_result);
  const fs::path trial_dir = cfg.output_dir / "trials";
  std::error_code ec;
  fs::create_directories(trial_dir, ec);
  if (ec) throw IoError("cannot create " + trial_dir.string() + ": " + ec.message());
  for (const auto& r : results) {
    write_trial_csv(trial_dir / trial_csv_name(r.trial_id, r.budget), r, cfg.ocp.dt);
  }
  write_solver_audit(cfg.output_dir / "solver_audit.csv", results);
  CampaignSummary summary = summarize(results);
  write_text(cfg.output_dir / "summary.json", summary_to_json(summary));
  return summary;
}

// ---------------------------------------------------------------------------
// Persistence

namespace {

const char* const kStateColumns[kStateDim] = {"dr_x", "dr_y", "dr_z", "dv_x", "dv_y", "dv_z", "dq_eta",
                                              "dq_x", "dq_y", "dq_z", "dw_x", "dw_y", "dw_z"};
const char* const kControlColumns[kControlDim] = {"f_x", "f_y", "f_z", "tau_x", "tau_y", "tau_z"};

void append_double(std::string& out, double v) {
  char buf[32];
  const auto res = std::to_chars(buf, buf + sizeof buf, v);
  out.append(buf, res.ptr);
}

double parse_double(std::string_view s, const fs::path& path) {
  double v = 0.0;
  const auto res = std::from_chars(s.data(), s.data() + s.size(), v);
  if (res.ec != std::errc() || res.ptr != s.data() + s.size()) {
    throw IoError(path.string() + ": malformed number '" + std::string(s) + "'");
  }
  return v;
}

int parse_int(std::string_view s, const fs::path& path) {
  int v = 0;
  const auto res = std::from_chars(s.data(), s.data() + s.size(), v);
  if (res.ec != std::errc() || res.ptr != s.data() + s.size()) {
    throw IoError(path.string() + ": malformed integer '" + std::string(s) + "'");
  }
  return v;
}

std::vector<std::string_view> split(std::string_view line) {
  std::vector<std::string_view> out;
  std::size_t start = 0;
  while (true) {
    const std::size_t comma = line.find(',', start);
    out.push_back(line.substr(start, comma - start));
    if (comma == std::string_view::npos) break;
    start = comma + 1;
  }
  return out;
}

std::string trial_csv_header() {
  std::string h = "trial_id,j_max,k,t_seconds";
  for (const char* c : kStateColumns) (h += ',') += c;
  for (const char* c : kControlColumns) (h += ',') += c;
  h += ",stage_cost,iterations,termination_reason,loop_time_s,docked";
  return h;
}

std::ofstream open_out(const fs::path& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw IoError("cannot open " + path.string() + " for writing");
  return out;
}

void finish(std::ofstream& out, const fs::path& path) {
  out.flush();
  if (!out) throw IoError("write failed for " + path.string());
}

std::vector<std::string> read_lines(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open " + path.string());
  std::vector<std::string> lines;
  for (std::string line; std::getline(in, line);) {
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (!line.empty()) lines.push_back(std::move(line));
  }
  return lines;
}

}  // namespace

std::string trial_csv_name(int trial_id, const IterationBudget& budget) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "trial_%04d_jmax_%s.csv", trial_id, budget.label().c_str());
  return buf;
}

void write_trial_csv(const fs::path& path, const TrialResult& result, double dt) {
  const TrialRecord& r = result.record;
  std::string text = trial_csv_header();
  text += '\n';
  const std::string label = result.budget.label();
  for (std::size_t k = 0; k < r.steps(); ++k) {
    text += std::to_string(result.trial_id);
    (text += ',') += label;
    (text += ',') += std::to_string(k);
    text += ',';
    append_double(text, static_cast<double>(k) * dt);
    for (int i = 0; i < kStateDim; ++i) {
      text += ',';
      append_double(text, r.states[k](i));
    }
    for (int i = 0; i < kControlDim; ++i) {
      text += ',';
      append_double(text, r.controls[k](i));
    }
    text += ',';
    append_double(text, r.stage_costs[k]);
    (text += ',') += std::to_string(r.iterations[k]);
    (text += ',') += to_string(r.reasons[k]);
    text += ',';
    append_double(text, r.loop_times[k]);
    text += r.docked_at[k] ? ",1\n" : ",0\n";
  }
  write_text(path, text);
}

TrialResult read_trial_csv(const fs::path& path) {
  const std::vector<std::string> lines = read_lines(path);
  if (lines.empty() || lines.front() != trial_csv_header()) {
    throw IoError(path.string() + ": missing or unexpected header");
  }
  constexpr std::size_t kColumns = 4 + kStateDim + kControlDim + 5;
  TrialResult out;
  TrialRecord& r = out.record;
  for (std::size_t row = 1; row < lines.size(); ++row) {
    const auto f = split(lines[row]);
    if (f.size() != kColumns) {
      throw IoError(path.string() + ": row " + std::to_string(row) + " has " + std::to_string(f.size()) +
                    " fields, expected " + std::to_string(kColumns));
    }
    const int trial = parse_int(f[0], path);
    IterationBudget budget;
    try {
      budget = IterationBudget::parse(f[1]);
    } catch (const std::invalid_argument&) {
      throw IoError(path.string() + ": bad j_max '" + std::string(f[1]) + "'");
    }
    if (row == 1) {
      out.trial_id = trial;
      out.budget = budget;
    } else if (trial != out.trial_id || !(budget == out.budget)) {
      throw IoError(path.string() + ": mixed trials in one file");
    }
    if (parse_int(f[2], path) != static_cast<int>(row - 1)) {
      throw IoError(path.string() + ": step column out of sequence at row " + std::to_string(row));
    }
    std::size_t c = 4;
    StateVector x;
    for (int i = 0; i < kStateDim; ++i) x(i) = parse_double(f[c++], path);
    ControlVector u;
    for (int i = 0; i < kControlDim; ++i) u(i) = parse_double(f[c++], path);
    r.states.push_back(x);
    r.controls.push_back(u);
    r.stage_costs.push_back(parse_double(f[c++], path));
    r.iterations.push_back(parse_int(f[c++], path));
    try {
      r.reasons.push_back(termination_reason_from_string(f[c++]));
    } catch (const std::invalid_argument&) {
      throw IoError(path.string() + ": bad termination reason at row " + std::to_string(row));
    }
    r.loop_times.push_back(parse_double(f[c++], path));
    const bool docked = f[c] == "1";
    if (!docked && f[c] != "0") throw IoError(path.string() + ": bad docked flag at row " + std::to_string(row));
    r.docked_at.push_back(docked);
    if (docked && !r.docked) {
      r.docked = true;
      r.dock_step = static_cast<int>(row - 1);
    }
  }
  if (r.controls.empty()) throw IoError(path.string() + ": no data rows");
  return out;
}

std::vector<TrialResult> read_trial_dir(const fs::path& dir) {
  std::error_code ec;
  if (!fs::is_directory(dir, ec)) throw IoError(dir.string() + ": not a directory");
  std::vector<fs::path> files;
  for (const auto& e : fs::directory_iterator(dir)) {
    const std::string name = e.path().filename().string();
    if (e.is_regular_file() && name.starts_with("trial_") && name.ends_with(".csv")) files.push_back(e.path());
  }
  if (files.empty()) throw IoError(dir.string() + ": no trial CSVs");
  std::sort(files.begin(), files.end());
  std::vector<TrialResult> out;
  out.reserve(files.size());
  for (const auto& f : files) out.push_back(read_trial_csv(f));
  return out;
}

void write_solver_audit(const fs::path& path, std::span<const TrialResult> results) {
  std::string text = "trial_id,j_max,k,iterations,warm_cost,final_cost,descent_ok\n";
  for (const auto& r : results) {
    const std::string label = r.budget.label();
    for (std::size_t k = 0; k < r.record.steps(); ++k) {
      text += std::to_string(r.trial_id);
      (text += ',') += label;
      (text += ',') += std::to_string(k);
      (text += ',') += std::to_string(r.record.iterations[k]);
      text += ',';
      append_double(text, r.record.warm_costs[k]);
      text += ',';
      append_double(text, r.record.solved_costs[k]);
      text += r.record.descent_ok[k] ? ",1\n" : ",0\n";
    }
  }
  write_text(path, text);
}

std::vector<AuditRow> read_solver_audit(const fs::path& path) {
  const std::vector<std::string> lines = read_lines(path);
  if (lines.empty()) throw IoError(path.string() + ": empty audit file");
  std::vector<AuditRow> rows;
  for (std::size_t i = 1; i < lines.size(); ++i) {
    const auto f = split(lines[i]);
    if (f.size() != 7) throw IoError(path.string() + ": malformed row " + std::to_string(i));
    AuditRow a;
    a.trial_id = parse_int(f[0], path);
    a.budget = std::string(f[1]);
    a.k = parse_int(f[2], path);
    a.iterations = parse_int(f[3], path);
    a.warm_cost = parse_double(f[4], path);
    a.final_cost = parse_double(f[5], path);
    a.descent_ok = f[6] == "1";
    rows.push_back(std::move(a));
  }
  return rows;
}

std::string summary_to_json(const CampaignSummary& summary) {
  using nlohmann::ordered_json;
  ordered_json table = ordered_json::array();
  ordered_json budgets = ordered_json::array();
  for (const auto& b : summary.budgets) {
    table.push_back({{"j_max", b.budget.label()}, {"successes", b.successes}, {"failures", b.failures}});

    ordered_json hist = ordered_json::array();
    for (std::size_t i = 0; i < b.histogram.size(); ++i) {
      hist.push_back({{"bin_start", static_cast<double>(i) * kHistogramBinWidth}, {"count", b.histogram[i]}});
    }
    budgets.push_back({
        {"j_max", b.budget.label()},
        {"trials", b.trials},
        {"successes", b.successes},
        {"failures", b.failures},
        {"totals", {{"summed_average_error", b.total_error}, {"summed_average_cost", b.total_cost}}},
        {"timing",
         {{"solver_calls", b.solver_calls},
          {"mean_loop_time_s", b.mean_loop_time},
          {"max_loop_time_s", b.max_loop_time},
          {"histogram_bin_width_s", kHistogramBinWidth},
          {"histogram", hist}}},
        {"series",
         {{"z_error", b.z_error},
          {"state_error", b.state_error},
          {"control_error", b.control_error},
          {"translational_error", b.translational_error},
          {"attitude_error", b.attitude_error},
          {"stage_cost", b.stage_cost}}},
    });
  }
  ordered_json doc = {{"success_table", table}, {"budgets", budgets}};
  return doc.dump(2) + "\n";
}

void write_text(const fs::path& path, const std::string& text) {
  std::ofstream out = open_out(path);
  out << text;
  finish(out, path);
}

std::string read_text(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open " + path.string());
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

}  // namespace tcmpc
