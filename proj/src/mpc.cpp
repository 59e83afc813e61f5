#include "tcmpc/mpc.hpp"

#include <algorithm>
#include <stdexcept>

namespace tcmpc {

void MissionConfig::validate() const {
  if (max_steps < 1) throw std::invalid_argument("max_steps must be >= 1");
  if (!(success_tol > 0.0)) throw std::invalid_argument("success_tol must be positive");
  if (!(perturbation.w_max >= 0.0)) throw std::invalid_argument("perturbation bound must be nonnegative");
}

RandomStream::RandomStream(std::uint64_t seed, std::uint64_t stream) {
  std::seed_seq seq{static_cast<std::uint32_t>(seed), static_cast<std::uint32_t>(seed >> 32),
                    static_cast<std::uint32_t>(stream), static_cast<std::uint32_t>(stream >> 32)};
  engine_.seed(seq);
}

double RandomStream::uniform() {
  return static_cast<double>(engine_() >> 11) * 0x1.0p-53;
}

bool is_docked(const StateVector& x, const ControlVector& u, double tol, const StateVector& target) {
  return (x - target).lpNorm<Eigen::Infinity>() <= tol && u.lpNorm<Eigen::Infinity>() <= tol;
}

ControlSequence warm_start_next(const ControlSequence& prev, WarmStart mode) {
  if (mode == WarmStart::Hold || prev.horizon() < 2) return prev;
  ControlSequence next(prev.horizon());
  const int n = prev.horizon();
  for (int i = 0; i + 1 < n; ++i) next[i] = prev[i + 1];
  next[n - 1] = prev[n - 1];
  return next;
}

void apply_perturbation(StateVector& x, const Perturbation& p, RandomStream& rng) {
  if (p.kind == PerturbationKind::Off) return;
  for (int i = 0; i < kStateDim; ++i) {
    const double r = rng.uniform();
    x(i) += p.kind == PerturbationKind::Uniform ? p.w_max * r : p.w_max * (2.0 * r - 1.0);
  }
  normalize_quaternion(x);
}

namespace {

// Stream ids keep plant noise independent of any other draw keyed by the
// same seed.
constexpr std::uint64_t kPlantNoiseStream = 0x706c616e74ULL;

void record_step(TrialRecord& rec, const StateVector& x, const ControlVector& u, const OcpSpec& spec,
                 const SolveOutcome& out, double tol) {
  rec.states.push_back(x);
  rec.controls.push_back(u);
  rec.stage_costs.push_back(stage_state_cost(x, spec) + stage_input_cost(u, spec));
  rec.iterations.push_back(out.iterations);
  rec.reasons.push_back(out.reason);
  rec.loop_times.push_back(out.wall_time);
  rec.warm_costs.push_back(out.initial_cost);
  rec.solved_costs.push_back(out.final_cost);
  rec.descent_ok.push_back(std::is_sorted(out.accepted_costs.rbegin(), out.accepted_costs.rend()));
  const bool docked = is_docked(x, u, tol, spec.target);
  rec.docked_at.push_back(docked);
  if (docked && !rec.docked) {
    rec.docked = true;
    rec.dock_step = static_cast<int>(rec.controls.size()) - 1;
  }
}

}  // namespace

TrialRecord run_closed_loop(const StateVector& x0, const OcpSpec& spec, const SolverConfig& scfg,
                            const MissionConfig& mcfg, std::uint64_t seed) {
  spec.validate();
  scfg.validate();
  mcfg.validate();
  RandomStream noise(seed, kPlantNoiseStream);
  TrialRecord rec;
  StateVector x = x0;
  ControlSequence warm(spec.horizon);
  for (int k = 0; k < mcfg.max_steps; ++k) {
    const SolveOutcome out = solve(spec, x, warm, scfg);
    const ControlVector u = out.useq[0];
    record_step(rec, x, u, spec, out, mcfg.success_tol);
    x = step(x, u, spec.dt, mcfg.plant_integrator, spec.params);
    if (rec.docked) break;
    apply_perturbation(x, mcfg.perturbation, noise);
    warm = warm_start_next(out.useq, mcfg.warm_start);
  }
  rec.states.push_back(x);
  return rec;
}

TrialRecord run_open_loop(const StateVector& x0, const OcpSpec& spec, const SolverConfig& scfg,
                          const MissionConfig& mcfg, std::uint64_t seed) {
  spec.validate();
  mcfg.validate();
  SolverConfig unbounded = scfg;
  unbounded.budget = IterationBudget::unbounded();
  unbounded.validate();
  RandomStream noise(seed, kPlantNoiseStream);

  const SolveOutcome plan = solve(spec, x0, ControlSequence(spec.horizon), unbounded);
  TrialRecord rec;
  StateVector x = x0;
  for (int k = 0; k < spec.horizon; ++k) {
    // Only the first sample carries the solve; later samples replay the plan.
    SolveOutcome out;
    if (k == 0) {
      out = plan;
    } else {
      out.accepted_costs = {0.0};
    }
    const ControlVector u = plan.useq[k];
    record_step(rec, x, u, spec, out, mcfg.success_tol);
    x = step(x, u, spec.dt, mcfg.plant_integrator, spec.params);
    apply_perturbation(x, mcfg.perturbation, noise);
  }
  rec.states.push_back(x);
  return rec;
}

}  // namespace tcmpc
