#pragma once

#include <vector>

#include "tcmpc/dynamics.hpp"

namespace tcmpc {

/// Controls of one horizon, stored flat as 6N scalars (element i occupies
/// [6i, 6i + 6)).
class ControlSequence {
 public:
  ControlSequence() = default;
  explicit ControlSequence(int horizon) : data_(static_cast<std::size_t>(horizon) * kControlDim, 0.0) {}

  int horizon() const { return static_cast<int>(data_.size() / kControlDim); }
  std::size_t size() const { return data_.size(); }

  Eigen::Map<ControlVector> operator[](int i) { return Eigen::Map<ControlVector>(data_.data() + i * kControlDim); }
  Eigen::Map<const ControlVector> operator[](int i) const {
    return Eigen::Map<const ControlVector>(data_.data() + i * kControlDim);
  }

  std::span<double> flat() { return data_; }
  std::span<const double> flat() const { return data_; }

  bool operator==(const ControlSequence&) const = default;

 private:
  std::vector<double> data_;
};

using Trajectory = std::vector<StateVector>;

/// One finite-horizon subproblem: quadratic tracking of the docking state
/// under box-bounded inputs, states recovered by forward rollout.
struct OcpSpec {
  int horizon = 100;
  double dt = 10.0;
  StateVector state_weights;
  ControlVector input_weights;
  StateVector target = State13::docked().to_vector();
  ControlVector input_target = ControlVector::Zero();
  ControlVector upper;
  ControlVector lower;
  Integrator integrator = Integrator::Euler;
  PhysicalParams params;

  /// Horizon, weights, bounds and parameters of the reference docking problem.
  static OcpSpec defaults();
  void validate() const;
};

Trajectory rollout(const StateVector& x0, const ControlSequence& useq, const OcpSpec& spec);

/// Quadratic weighted distance of a state from the target.
double stage_state_cost(const StateVector& x, const OcpSpec& spec);
double stage_input_cost(const ControlVector& u, const OcpSpec& spec);

/// Sum over i in [0, N) of the stage costs along the rollout. x(N) carries
/// no terminal weight.
double cost(const StateVector& x0, const ControlSequence& useq, const OcpSpec& spec);

/// Exact gradient of `cost` w.r.t. the flat control sequence (discrete
/// adjoint sweep over the rollout, normalization included).
std::vector<double> cost_gradient(const StateVector& x0, const ControlSequence& useq,
                                  const OcpSpec& spec);

/// Cost and gradient from a single rollout.
double cost_and_gradient(const StateVector& x0, const ControlSequence& useq,
                         const OcpSpec& spec, std::span<double> gradient);

}  // namespace tcmpc
