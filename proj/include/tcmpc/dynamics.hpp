#pragma once

#include <array>
#include <span>

#include <Eigen/Dense>

namespace tcmpc {

using Vec3 = Eigen::Vector3d;
using Mat3 = Eigen::Matrix3d;

inline constexpr int kStateDim = 13;
inline constexpr int kControlDim = 6;

using StateVector = Eigen::Matrix<double, kStateDim, 1>;
using ControlVector = Eigen::Matrix<double, kControlDim, 1>;

/// Unit quaternion with scalar part first, q = (eta, rho).
struct Quaternion {
  double eta = 1.0;
  Vec3 rho = Vec3::Zero();

  static Quaternion identity() { return {}; }

  double squared_norm() const { return eta * eta + rho.squaredNorm(); }
  double norm() const;
  Quaternion normalized() const;
  /// q^-1 = (eta, -rho).
  Quaternion inverse() const { return {eta, -rho}; }
  Quaternion operator-() const { return {-eta, -rho}; }
};

/// Relative state of the deputy in the chief's CW frame.
///
/// Storage order of the flat form is (dr, dv, eta, rho, dw), which is also
/// the column order used for serialization.
struct State13 {
  Vec3 dr = Vec3::Zero();  // km
  Vec3 dv = Vec3::Zero();  // km/s
  Quaternion dq;           // deputy -> chief error quaternion
  Vec3 dw = Vec3::Zero();  // rad/s

  StateVector to_vector() const;
  static State13 from_vector(const StateVector& v);

  /// Docking target: zero relative motion, identity attitude.
  static State13 docked() { return {}; }
};

/// Deputy body-frame thrust (N) and torque (N m).
struct Control6 {
  Vec3 thrust = Vec3::Zero();
  Vec3 torque = Vec3::Zero();

  ControlVector to_vector() const;
  static Control6 from_vector(const ControlVector& v);
};

/// Physical constants of the chief orbit and the deputy body.
struct PhysicalParams {
  double mean_motion = -0.0011;  // rad/s, negative sign intended
  double deputy_mass = 12.0;     // kg
  Vec3 inertia{0.2734, 0.2734, 0.3125};  // principal moments, kg m^2
  /// When true, thrust/mass is added to the km/s^2 rows without a N->km
  /// conversion. When false, the acceleration is additionally divided by 1000.
  bool literal_units = true;

  /// Factor applied to F/m_d before it enters the acceleration rows.
  double thrust_scale() const { return literal_units ? 1.0 : 1e-3; }
  /// Angular velocity of the CW frame w.r.t. inertial, in CW coordinates.
  Vec3 frame_rate() const { return {0.0, 0.0, mean_motion}; }
  void validate() const;
};

enum class Integrator { Euler, Rk4 };

/// Cross-product matrix: skew(v) * w == v.cross(w).
Mat3 skew(const Vec3& v);

/// R = I - 2 eta [rho]x + 2 [rho]x [rho]x evaluated on the raw components.
/// Orthogonal only when q is unit; used inside the dynamics where the
/// integrator stages may leave the unit sphere slightly.
Mat3 rotation_from_components(const Quaternion& q);

struct Rotation {
  Mat3 matrix;
  /// Set when the input deviated from unit norm by more than 1e-6.
  bool renormalized = false;
};

/// Rotation matrix R_D^O of a quaternion; the input is normalized first.
Rotation quat_to_rotation(const Quaternion& q);

/// Continuous-time relative dynamics, flat 13-vector in and out.
StateVector full_deriv(const StateVector& x, const ControlVector& u,
                       const PhysicalParams& p);
State13 full_deriv(const State13& x, const Control6& u, const PhysicalParams& p);

/// Vector-Jacobian product of full_deriv: given the cotangent `bar` of the
/// derivative, accumulates bar^T df/dx into `x_bar` and bar^T df/du into
/// `u_bar`.
void full_deriv_vjp(const StateVector& x, const ControlVector& u,
                    const PhysicalParams& p, const StateVector& bar,
                    StateVector& x_bar, ControlVector& u_bar);

/// One fixed step of the dynamics followed by quaternion renormalization.
StateVector step(const StateVector& x, const ControlVector& u, double dt,
                 Integrator method, const PhysicalParams& p);
State13 step(const State13& x, const Control6& u, double dt, Integrator method,
             const PhysicalParams& p);

/// Reverse-mode sensitivity of `step`. `next_bar` is the cotangent of the
/// returned state; the contributions w.r.t. x and u are added to `x_bar` and
/// `u_bar`.
void step_vjp(const StateVector& x, const ControlVector& u, double dt,
              Integrator method, const PhysicalParams& p,
              const StateVector& next_bar, StateVector& x_bar,
              ControlVector& u_bar);

using StateJacobian = Eigen::Matrix<double, kStateDim, kStateDim>;
using InputJacobian = Eigen::Matrix<double, kStateDim, kControlDim>;

/// Exact Jacobians of `step` w.r.t. the state and the control, assembled
/// row by row from step_vjp.
void step_jacobians(const StateVector& x, const ControlVector& u, double dt, Integrator method,
                    const PhysicalParams& p, StateJacobian& a, InputJacobian& b);

/// Rescales the quaternion block of a flat state to unit norm.
void normalize_quaternion(StateVector& x);

struct TranslationalState {
  Vec3 dr = Vec3::Zero();
  Vec3 dv = Vec3::Zero();
};

/// Closed-form unforced Clohessy-Wiltshire propagation over `t` seconds.
TranslationalState cw_analytic_transition(const TranslationalState& s, double t,
                                          double mean_motion);

}  // namespace tcmpc
