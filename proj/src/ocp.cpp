#include "tcmpc/ocp.hpp"

#include <stdexcept>
#include <string>

namespace tcmpc {

OcpSpec OcpSpec::defaults() {
  OcpSpec s;
  s.horizon = 100;
  s.dt = 10.0;
  s.state_weights << 1e5, 1e5, 1e5, 1e2, 1e2, 1e2, 1e6, 1e6, 1e6, 1e6, 1e7, 1e7, 1e7;
  s.input_weights << 1e5, 1e5, 1e5, 1e10, 1e10, 1e10;
  s.upper << 1e-2, 1e-2, 1e-2, 1e-4, 1e-4, 1e-4;
  s.lower = -s.upper;
  s.integrator = Integrator::Euler;
  return s;
}

void OcpSpec::validate() const {
  if (horizon < 1) throw std::invalid_argument("horizon must be >= 1");
  if (!(dt > 0.0)) throw std::invalid_argument("dt must be positive");
  if (state_weights.minCoeff() < 0.0) throw std::invalid_argument("state weights must be nonnegative");
  if (input_weights.minCoeff() < 0.0) throw std::invalid_argument("input weights must be nonnegative");
  if ((lower.array() > upper.array()).any()) throw std::invalid_argument("lower bound exceeds upper bound");
  params.validate();
}

namespace {

void check_length(const ControlSequence& useq, const OcpSpec& spec) {
  if (useq.horizon() != spec.horizon || useq.size() != static_cast<std::size_t>(spec.horizon) * kControlDim) {
    throw std::invalid_argument("control sequence has horizon " + std::to_string(useq.horizon()) +
                                ", expected " + std::to_string(spec.horizon));
  }
}

}  // namespace

Trajectory rollout(const StateVector& x0, const ControlSequence& useq, const OcpSpec& spec) {
  check_length(useq, spec);
  Trajectory traj;
  traj.reserve(static_cast<std::size_t>(spec.horizon) + 1);
  traj.push_back(x0);
  for (int i = 0; i < spec.horizon; ++i) {
    traj.push_back(step(traj.back(), useq[i], spec.dt, spec.integrator, spec.params));
  }
  return traj;
}

double stage_state_cost(const StateVector& x, const OcpSpec& spec) {
  const StateVector e = x - spec.target;
  return e.dot(spec.state_weights.cwiseProduct(e));
}

double stage_input_cost(const ControlVector& u, const OcpSpec& spec) {
  const ControlVector e = u - spec.input_target;
  return e.dot(spec.input_weights.cwiseProduct(e));
}

double cost(const StateVector& x0, const ControlSequence& useq, const OcpSpec& spec) {
  check_length(useq, spec);
  double total = 0.0;
  StateVector x = x0;
  for (int i = 0; i < spec.horizon; ++i) {
    total += stage_state_cost(x, spec) + stage_input_cost(useq[i], spec);
    if (i + 1 < spec.horizon) x = step(x, useq[i], spec.dt, spec.integrator, spec.params);
  }
  return total;
}

double cost_and_gradient(const StateVector& x0, const ControlSequence& useq,
                         const OcpSpec& spec, std::span<double> gradient) {
  check_length(useq, spec);
  if (gradient.size() != useq.size()) throw std::invalid_argument("gradient buffer has wrong length");
  const int horizon = spec.horizon;

  // x(N) is never costed, so the rollout stops at x(N-1).
  Trajectory traj;
  traj.reserve(static_cast<std::size_t>(horizon));
  traj.push_back(x0);
  double total = 0.0;
  for (int i = 0; i < horizon; ++i) {
    total += stage_state_cost(traj[i], spec) + stage_input_cost(useq[i], spec);
    if (i + 1 < horizon) traj.push_back(step(traj[i], useq[i], spec.dt, spec.integrator, spec.params));
  }

  // lambda holds d(cost)/d x(i+1) while processing stage i.
  StateVector lambda = StateVector::Zero();
  for (int i = horizon - 1; i >= 0; --i) {
    Eigen::Map<ControlVector> g(gradient.data() + i * kControlDim);
    g = 2.0 * spec.input_weights.cwiseProduct(useq[i] - spec.input_target);
    if (i == horizon - 1) {
      // u(N-1) only moves x(N).
      lambda = 2.0 * spec.state_weights.cwiseProduct(traj[i] - spec.target);
      continue;
    }
    StateVector x_bar = 2.0 * spec.state_weights.cwiseProduct(traj[i] - spec.target);
    ControlVector u_bar = ControlVector::Zero();
    step_vjp(traj[i], useq[i], spec.dt, spec.integrator, spec.params, lambda, x_bar, u_bar);
    g += u_bar;
    lambda = x_bar;
  }
  return total;
}

std::vector<double> cost_gradient(const StateVector& x0, const ControlSequence& useq,
                                  const OcpSpec& spec) {
  std::vector<double> g(useq.size());
  cost_and_gradient(x0, useq, spec, g);
  return g;
}

}  // namespace tcmpc
