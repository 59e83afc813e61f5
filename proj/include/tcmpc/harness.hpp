#pragma once

#include <cstdint>
#include <filesystem>
#include <functional>
#include <optional>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

#include "tcmpc/mpc.hpp"

namespace tcmpc {

/// File-system failure; the message names the offending path.
class IoError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Half-widths of the initial-condition box. The quaternion entries are
/// unused: quaternions are drawn on [-1, 1]^4 and normalized.
StateVector default_sampling_bounds();

/// Uniform draw inside the sampling box; quaternion normalized with eta >= 0.
State13 sample_initial_state(RandomStream& rng, const StateVector& bounds);

/// Per-trial seed derived from the campaign seed and the trial index.
std::uint64_t trial_seed(std::uint64_t master_seed, int trial_id);

/// Initial state of trial `trial_id`, identical for every budget.
State13 campaign_initial_state(std::uint64_t master_seed, int trial_id, const StateVector& bounds);

std::vector<IterationBudget> desk_budget_grid();
std::vector<IterationBudget> full_budget_grid();

struct CampaignConfig {
  int trials = 20;
  std::vector<IterationBudget> grid = desk_budget_grid();
  StateVector bounds = default_sampling_bounds();
  std::uint64_t seed = 0;
  OcpSpec ocp = OcpSpec::defaults();
  MissionConfig mission;
  /// Budget is overwritten by each grid value.
  SolverConfig solver;
  /// When set, every trial starts here instead of a sampled state.
  std::optional<StateVector> initial_state;
  /// Worker threads; timings are flagged as contended when > 1.
  int threads = 1;
  std::filesystem::path output_dir;

  void validate() const;
};

struct TrialResult {
  int trial_id = 0;
  IterationBudget budget;
  TrialRecord record;
};

struct BudgetSummary {
  IterationBudget budget;
  int trials = 0;
  int successes = 0;
  int failures = 0;

  // Per-step averages over trials, each trial held at its last value past
  // its own end.
  std::vector<double> z_error;
  std::vector<double> state_error;
  std::vector<double> control_error;
  std::vector<double> translational_error;
  std::vector<double> attitude_error;
  std::vector<double> stage_cost;

  double total_error = 0.0;  // sum of z_error
  double total_cost = 0.0;   // sum of stage_cost

  std::size_t solver_calls = 0;
  double mean_loop_time = 0.0;
  double max_loop_time = 0.0;
  /// Bin b counts loop times in [b * kHistogramBinWidth, (b + 1) * kHistogramBinWidth).
  std::vector<std::size_t> histogram;
};

inline constexpr double kHistogramBinWidth = 0.1;

std::size_t histogram_bin(double seconds);

struct CampaignSummary {
  std::vector<BudgetSummary> budgets;
};

/// Aggregates the trials of one budget. Throws on an empty span.
BudgetSummary summarize(std::span<const TrialRecord> records, const IterationBudget& budget);

/// Groups results by budget (first-seen order), sorts each group by trial id
/// and summarizes it.
CampaignSummary summarize(std::span<const TrialResult> results);

/// Runs every trial under every grid budget. Results are ordered by
/// (budget position, trial id) regardless of scheduling.
std::vector<TrialResult> run_trials(const CampaignConfig& cfg,
                                    const std::function<void(const TrialResult&)>& on_result = {});

/// run_trials, then persists per-trial CSVs, the solver audit and the
/// summary under cfg.output_dir.
CampaignSummary run_campaign(const CampaignConfig& cfg,
                             const std::function<void(const TrialResult&)>& on_result = {});

// Persistence.

std::string trial_csv_name(int trial_id, const IterationBudget& budget);

void write_trial_csv(const std::filesystem::path& path, const TrialResult& result, double dt);
/// Reads a file written by write_trial_csv. The parsed record has one state
/// per row (no successor state), and no solver-audit fields.
TrialResult read_trial_csv(const std::filesystem::path& path);
/// Every trial CSV under `dir`, ordered by file name.
std::vector<TrialResult> read_trial_dir(const std::filesystem::path& dir);

/// One row per solve: warm-start cost, returned cost and whether the
/// accepted costs were non-increasing.
void write_solver_audit(const std::filesystem::path& path, std::span<const TrialResult> results);

struct AuditRow {
  int trial_id = 0;
  std::string budget;
  int k = 0;
  int iterations = 0;
  double warm_cost = 0.0;
  double final_cost = 0.0;
  bool descent_ok = false;
};
std::vector<AuditRow> read_solver_audit(const std::filesystem::path& path);

std::string summary_to_json(const CampaignSummary& summary);
void write_text(const std::filesystem::path& path, const std::string& text);
std::string read_text(const std::filesystem::path& path);

}  // namespace tcmpc
