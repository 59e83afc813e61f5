#pragma once

#include <optional>
#include <string_view>
#include <vector>

#include "tcmpc/ocp.hpp"

namespace tcmpc {

/// Iteration budget j_max; an empty budget means unbounded ("Optimal").
class IterationBudget {
 public:
  IterationBudget() = default;  // unbounded
  explicit IterationBudget(int cap);

  static IterationBudget unbounded() { return {}; }

  bool is_bounded() const { return cap_.has_value(); }
  int cap() const { return *cap_; }
  bool exhausted(int iterations) const { return cap_ && iterations >= *cap_; }

  /// "optimal" or the decimal cap.
  std::string label() const;
  /// Parses "optimal" (any case) or a positive integer.
  static IterationBudget parse(std::string_view text);

  bool operator==(const IterationBudget&) const = default;

 private:
  std::optional<int> cap_;
};

/// What one solver iteration does.
enum class IterationRule {
  /// Control-limited Gauss-Newton step: Riccati backward pass with a box QP
  /// per stage, then a clamped feedback rollout with backtracking on the
  /// step length.
  BoxDdp,
  /// Gradient step in the box-normalized metric diag(w^2), projected onto
  /// the box, with Armijo backtracking.
  ProjectedGradient,
};

struct SolverConfig {
  IterationBudget budget;
  IterationRule rule = IterationRule::BoxDdp;
  double opt_tol = 1e-5;
  /// BoxDdp: first trial step length of every iteration. ProjectedGradient:
  /// first trial step of a solve, as the largest move in box half-widths.
  double initial_step = 1.0;
  double shrink = 0.5;
  double sufficient_decrease = 1e-4;
  /// ProjectedGradient only: the next iteration starts from the last
  /// accepted step times this.
  double step_growth = 2.0;
  int max_backtracks = 60;

  void validate() const;
};

enum class TerminationReason { OptimalityTol, IterationCap, LineSearchStall };

std::string_view to_string(TerminationReason r);
TerminationReason termination_reason_from_string(std::string_view s);

struct SolveOutcome {
  ControlSequence useq;
  int iterations = 0;
  TerminationReason reason = TerminationReason::OptimalityTol;
  double optimality = 0.0;
  double wall_time = 0.0;  // seconds, monotonic clock
  double initial_cost = 0.0;  // at the projected warm start
  double final_cost = 0.0;
  /// Objective after each accepted iteration, starting with initial_cost.
  std::vector<double> accepted_costs;
};

/// Componentwise clamp of every control onto [lower, upper].
ControlSequence project_box(const ControlSequence& useq, const ControlVector& lower,
                            const ControlVector& upper);

/// Iteration-capped descent on the box-constrained subproblem. Every
/// accepted iterate lies in the box and lowers the cost (Armijo test);
/// the returned sequence is the best iterate found.
///
/// Stationarity is the projected gradient infinity norm in box-normalized
/// coordinates, computed for the objective divided by max(1, |g0|_inf / 100)
/// where g0 is the normalized gradient at the warm start.
SolveOutcome solve(const OcpSpec& spec, const StateVector& x0, const ControlSequence& warm,
                   const SolverConfig& cfg);

}  // namespace tcmpc
