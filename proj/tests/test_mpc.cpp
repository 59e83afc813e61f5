#include <gtest/gtest.h>

#include "tcmpc/mpc.hpp"

using namespace tcmpc;

namespace {

StateVector docked() { return State13::docked().to_vector(); }

StateVector preset_x0() {
  StateVector x;
  x << 1.5, -1.77, 3.0, 1e-3, 3.4e-3, 0.0, 0.772, 0.463, 0.309, 0.309, -2.15e-4, 1e-3, -4.6e-3;
  return x;
}

SolverConfig budget(IterationBudget b) {
  SolverConfig c;
  c.budget = b;
  return c;
}

ControlSequence abc() {
  ControlSequence s(3);
  for (int i = 0; i < 3; ++i) s[i].setConstant(static_cast<double>(i + 1) * 1e-3);
  return s;
}

}  // namespace

TEST(IsDocked, ExactTargetAndSingleViolation) {
  EXPECT_TRUE(is_docked(docked(), ControlVector::Zero(), 1e-3));
  StateVector x = docked();
  x(0) = 2e-3;
  EXPECT_FALSE(is_docked(x, ControlVector::Zero(), 1e-3));
  ControlVector u = ControlVector::Zero();
  u(4) = 1.5e-3;
  EXPECT_FALSE(is_docked(docked(), u, 1e-3));
}

TEST(IsDocked, BoundaryIsInclusive) {
  StateVector x = docked();
  x(0) = 1e-3;
  x(12) = -1e-3;
  EXPECT_TRUE(is_docked(x, ControlVector::Zero(), 1e-3));
  x(6) = 1.0 - 0.5e-3;
  EXPECT_TRUE(is_docked(x, ControlVector::Zero(), 1e-3));
}

TEST(WarmStart, ShiftAndHold) {
  const ControlSequence s = abc();
  const ControlSequence shifted = warm_start_next(s, WarmStart::Shift);
  EXPECT_EQ(shifted[0], s[1]);
  EXPECT_EQ(shifted[1], s[2]);
  EXPECT_EQ(shifted[2], s[2]);
  EXPECT_EQ(warm_start_next(s, WarmStart::Hold), s);
}

TEST(WarmStart, ShiftKeepsFeasibility) {
  const OcpSpec spec = OcpSpec::defaults();
  ControlSequence s(100);
  for (int i = 0; i < 100; ++i) s[i] = (i % 2 ? spec.upper : spec.lower);
  const ControlSequence shifted = warm_start_next(s, WarmStart::Shift);
  EXPECT_EQ(project_box(shifted, spec.lower, spec.upper), shifted);
}

TEST(RandomStream, DeterministicAndInUnitInterval) {
  RandomStream a(7, 1), b(7, 1), c(7, 2);
  bool differs = false;
  for (int i = 0; i < 1000; ++i) {
    const double x = a.uniform();
    EXPECT_EQ(x, b.uniform());
    EXPECT_GE(x, 0.0);
    EXPECT_LT(x, 1.0);
    differs |= x != c.uniform();
  }
  EXPECT_TRUE(differs);
}

TEST(Perturbation, UniformIsNonNegativeBeforeRenormalization) {
  RandomStream rng(3, 4);
  for (int i = 0; i < 200; ++i) {
    StateVector x = docked();
    apply_perturbation(x, {PerturbationKind::Uniform, 1e-4}, rng);
    for (int j : {0, 1, 2, 3, 4, 5, 10, 11, 12}) {
      EXPECT_GE(x(j), 0.0);
      EXPECT_LT(x(j), 1e-4);
    }
    EXPECT_NEAR(x.segment<4>(6).norm(), 1.0, 1e-15);
  }
}

TEST(Perturbation, SymmetricReachesBothSigns) {
  RandomStream rng(3, 5);
  bool negative = false, positive = false;
  for (int i = 0; i < 50; ++i) {
    StateVector x = docked();
    apply_perturbation(x, {PerturbationKind::Symmetric, 1e-4}, rng);
    negative |= x(0) < 0.0;
    positive |= x(0) > 0.0;
    EXPECT_LT(std::abs(x(0)), 1e-4);
  }
  EXPECT_TRUE(negative && positive);
}

TEST(Perturbation, OffLeavesStateAlone) {
  RandomStream rng(1, 1);
  StateVector x = preset_x0();
  apply_perturbation(x, {PerturbationKind::Off, 1e-4}, rng);
  EXPECT_EQ(x, preset_x0());
}

TEST(MissionConfig, Validation) {
  MissionConfig m;
  EXPECT_NO_THROW(m.validate());
  m.max_steps = 0;
  EXPECT_THROW(m.validate(), std::invalid_argument);
  m = MissionConfig{};
  m.success_tol = 0.0;
  EXPECT_THROW(m.validate(), std::invalid_argument);
  m = MissionConfig{};
  m.perturbation.w_max = -1.0;
  EXPECT_THROW(m.validate(), std::invalid_argument);
}

TEST(ClosedLoop, StartingDockedStopsAtStepZero) {
  const TrialRecord r = run_closed_loop(docked(), OcpSpec::defaults(), budget(IterationBudget::unbounded()),
                                        MissionConfig{}, 1);
  EXPECT_TRUE(r.docked);
  ASSERT_TRUE(r.dock_step.has_value());
  EXPECT_EQ(*r.dock_step, 0);
  ASSERT_EQ(r.steps(), 1u);
  EXPECT_EQ(r.states.size(), r.steps() + 1);
  EXPECT_EQ(r.controls[0], ControlVector::Zero());
}

TEST(ClosedLoop, MildOffsetDocksWithoutBudget) {
  StateVector x0 = docked();
  x0(0) = 0.1;
  const TrialRecord r =
      run_closed_loop(x0, OcpSpec::defaults(), budget(IterationBudget::unbounded()), MissionConfig{}, 2);
  EXPECT_TRUE(r.docked);
  EXPECT_EQ(r.states.size(), r.steps() + 1);
  EXPECT_TRUE(r.docked_at.back());
  for (std::size_t k = 0; k + 1 < r.steps(); ++k) EXPECT_FALSE(r.docked_at[k]);
}

TEST(ClosedLoop, RecordsRespectBudgetAndBounds) {
  const OcpSpec spec = OcpSpec::defaults();
  MissionConfig m;
  m.max_steps = 60;
  const TrialRecord r = run_closed_loop(preset_x0(), spec, budget(IterationBudget(2)), m, 3);
  ASSERT_GT(r.steps(), 0u);
  EXPECT_LE(r.steps(), 60u);
  for (std::size_t k = 0; k < r.steps(); ++k) {
    EXPECT_LE(r.iterations[k], 2);
    EXPECT_TRUE((r.controls[k].array() <= spec.upper.array()).all());
    EXPECT_TRUE((r.controls[k].array() >= spec.lower.array()).all());
    EXPECT_TRUE(r.descent_ok[k]);
    EXPECT_LE(r.solved_costs[k], r.warm_costs[k]);
    EXPECT_EQ(r.stage_costs[k], stage_state_cost(r.states[k], spec) + stage_input_cost(r.controls[k], spec));
  }
}

TEST(ClosedLoop, PlantMatchesModelPrediction) {
  // Perturbations off and the plant integrating like the model: the first
  // plant step lands exactly on the solver's predicted successor.
  OcpSpec spec = OcpSpec::defaults();
  spec.integrator = Integrator::Rk4;
  MissionConfig m;
  m.max_steps = 3;
  m.plant_integrator = Integrator::Rk4;
  const SolverConfig scfg = budget(IterationBudget(4));
  const TrialRecord r = run_closed_loop(preset_x0(), spec, scfg, m, 4);
  const SolveOutcome first = solve(spec, preset_x0(), ControlSequence(spec.horizon), scfg);
  EXPECT_EQ(r.controls[0], ControlVector(first.useq[0]));
  EXPECT_EQ(r.states[1], rollout(preset_x0(), first.useq, spec)[1]);
}

TEST(ClosedLoop, BitwiseDeterministic) {
  MissionConfig m;
  m.max_steps = 40;
  m.perturbation.kind = PerturbationKind::Uniform;
  const auto run = [&] {
    return run_closed_loop(preset_x0(), OcpSpec::defaults(), budget(IterationBudget(3)), m, 99);
  };
  const TrialRecord a = run();
  const TrialRecord b = run();
  EXPECT_EQ(a.states, b.states);
  EXPECT_EQ(a.controls, b.controls);
  EXPECT_EQ(a.stage_costs, b.stage_costs);
  EXPECT_EQ(a.iterations, b.iterations);
  EXPECT_EQ(a.reasons, b.reasons);
  EXPECT_EQ(a.docked_at, b.docked_at);
}

TEST(ClosedLoop, SeedChangesPerturbationRealization) {
  MissionConfig m;
  m.max_steps = 5;
  m.perturbation.kind = PerturbationKind::Uniform;
  const OcpSpec spec = OcpSpec::defaults();
  const TrialRecord a = run_closed_loop(preset_x0(), spec, budget(IterationBudget(1)), m, 1);
  const TrialRecord b = run_closed_loop(preset_x0(), spec, budget(IterationBudget(1)), m, 2);
  EXPECT_NE(a.states[1], b.states[1]);
}

class OpenLoop : public ::testing::Test {
 protected:
  static void SetUpTestSuite() {
    spec_.integrator = Integrator::Rk4;
    mission_.plant_integrator = Integrator::Rk4;
  }
  static inline OcpSpec spec_ = OcpSpec::defaults();
  static inline MissionConfig mission_;
};

TEST_F(OpenLoop, NominalReachesTarget) {
  const TrialRecord r = run_open_loop(preset_x0(), spec_, SolverConfig{}, mission_, 5);
  EXPECT_EQ(r.steps(), static_cast<std::size_t>(spec_.horizon));
  EXPECT_EQ(r.states.size(), r.steps() + 1);
  EXPECT_LE((r.states.back() - docked()).lpNorm<Eigen::Infinity>(), mission_.success_tol);
  EXPECT_TRUE(r.docked);
}

TEST_F(OpenLoop, AppliesThePlanVerbatim) {
  MissionConfig m = mission_;
  m.perturbation.kind = PerturbationKind::Uniform;
  const TrialRecord r = run_open_loop(preset_x0(), spec_, SolverConfig{}, m, 6);
  const SolveOutcome plan = solve(spec_, preset_x0(), ControlSequence(spec_.horizon), SolverConfig{});
  for (int k = 0; k < spec_.horizon; ++k) EXPECT_EQ(r.controls[static_cast<std::size_t>(k)], ControlVector(plan.useq[k]));
}

TEST_F(OpenLoop, PerturbedRunMissesTarget) {
  MissionConfig m = mission_;
  m.perturbation.kind = PerturbationKind::Uniform;
  const TrialRecord r = run_open_loop(preset_x0(), spec_, SolverConfig{}, m, 7);
  EXPECT_GT((r.states.back() - docked()).lpNorm<Eigen::Infinity>(), m.success_tol);
}
