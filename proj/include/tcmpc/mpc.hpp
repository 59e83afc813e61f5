#pragma once

#include <cstdint>
#include <optional>
#include <random>
#include <vector>

#include "tcmpc/solver.hpp"

namespace tcmpc {

enum class WarmStart { Shift, Hold };

enum class PerturbationKind {
  Off,
  Uniform,    // each component drawn from [0, w_max)
  Symmetric,  // each component drawn from [-w_max, w_max)
};

struct Perturbation {
  PerturbationKind kind = PerturbationKind::Off;
  double w_max = 1e-4;
};

struct MissionConfig {
  int max_steps = 1000;
  double success_tol = 1e-3;
  Perturbation perturbation;
  Integrator plant_integrator = Integrator::Euler;
  WarmStart warm_start = WarmStart::Shift;

  void validate() const;
};

/// One closed- or open-loop run. Entry k of every per-step series belongs to
/// sample time k; `states` carries one extra entry, the state after the last
/// applied control.
struct TrialRecord {
  std::vector<StateVector> states;
  std::vector<ControlVector> controls;
  std::vector<double> stage_costs;
  std::vector<int> iterations;
  std::vector<TerminationReason> reasons;
  std::vector<double> loop_times;
  /// Objective at the projected warm start and at the returned iterate.
  std::vector<double> warm_costs;
  std::vector<double> solved_costs;
  /// Accepted objective values were non-increasing inside the solve.
  std::vector<bool> descent_ok;
  std::vector<bool> docked_at;
  bool docked = false;
  std::optional<int> dock_step;

  std::size_t steps() const { return controls.size(); }
};

/// Independent, platform-stable random stream keyed by (seed, stream).
class RandomStream {
 public:
  RandomStream(std::uint64_t seed, std::uint64_t stream);
  /// Uniform double on [0, 1) with 53 random bits.
  double uniform();

 private:
  std::mt19937_64 engine_;
};

/// ||z - z_d||_inf <= tol with z = (u, x), z_d = (0, x_d).
bool is_docked(const StateVector& x, const ControlVector& u, double tol,
               const StateVector& target = State13::docked().to_vector());

/// Shift drops element 0 and repeats the tail; hold returns `prev`.
ControlSequence warm_start_next(const ControlSequence& prev, WarmStart mode);

/// Adds one perturbation draw to `x` and renormalizes the quaternion.
void apply_perturbation(StateVector& x, const Perturbation& p, RandomStream& rng);

/// Receding-horizon loop: solve under the iteration budget, apply the first
/// control, propagate the plant (plus optional perturbation), stop once the
/// docking test holds or after mcfg.max_steps samples.
TrialRecord run_closed_loop(const StateVector& x0, const OcpSpec& spec, const SolverConfig& scfg,
                            const MissionConfig& mcfg, std::uint64_t seed);

/// Solves the full-mission problem once without an iteration cap and applies
/// the resulting sequence without feedback. The mission lasts spec.horizon
/// steps.
TrialRecord run_open_loop(const StateVector& x0, const OcpSpec& spec, const SolverConfig& scfg,
                          const MissionConfig& mcfg, std::uint64_t seed);

}  // namespace tcmpc
