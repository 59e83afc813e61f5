#include "tcmpc/dynamics.hpp"

#include <cmath>
#include <stdexcept>

namespace tcmpc {

namespace {

// Flat-state block offsets.
constexpr int kPos = 0;
constexpr int kVel = 3;
constexpr int kEta = 6;
constexpr int kRho = 7;
constexpr int kOmega = 10;

// Gradient of l^T R(q) r with respect to (eta, rho), R from
// rotation_from_components. Accumulates into eta_bar / rho_bar.
void rotation_bilinear_vjp(const Quaternion& q, const Vec3& l, const Vec3& r,
                           double& eta_bar, Vec3& rho_bar) {
  const Vec3& rho = q.rho;
  // l^T R r = l.r - 2 eta l.(rho x r) + 2 [(l.rho)(rho.r) - (l.r)(rho.rho)]
  const Vec3 r_cross_l = r.cross(l);
  eta_bar += -2.0 * rho.dot(r_cross_l);
  rho_bar += -2.0 * q.eta * r_cross_l +
             2.0 * (l * rho.dot(r) + r * l.dot(rho) - 2.0 * l.dot(r) * rho);
}

}  // namespace

double Quaternion::norm() const { return std::sqrt(squared_norm()); }

Quaternion Quaternion::normalized() const {
  const double nrm = norm();
  if (nrm == 0.0) throw std::invalid_argument("cannot normalize a zero quaternion");
  return {eta / nrm, rho / nrm};
}

StateVector State13::to_vector() const {
  StateVector v;
  v.segment<3>(kPos) = dr;
  v.segment<3>(kVel) = dv;
  v(kEta) = dq.eta;
  v.segment<3>(kRho) = dq.rho;
  v.segment<3>(kOmega) = dw;
  return v;
}

State13 State13::from_vector(const StateVector& v) {
  State13 s;
  s.dr = v.segment<3>(kPos);
  s.dv = v.segment<3>(kVel);
  s.dq.eta = v(kEta);
  s.dq.rho = v.segment<3>(kRho);
  s.dw = v.segment<3>(kOmega);
  return s;
}

ControlVector Control6::to_vector() const {
  ControlVector v;
  v.head<3>() = thrust;
  v.tail<3>() = torque;
  return v;
}

Control6 Control6::from_vector(const ControlVector& v) {
  return {v.head<3>(), v.tail<3>()};
}

void PhysicalParams::validate() const {
  if (!(deputy_mass > 0.0)) throw std::invalid_argument("deputy_mass must be positive");
  if (!(inertia.minCoeff() > 0.0)) throw std::invalid_argument("inertia entries must be positive");
}

Mat3 skew(const Vec3& v) {
  Mat3 m;
  m << 0.0, -v.z(), v.y(),
       v.z(), 0.0, -v.x(),
       -v.y(), v.x(), 0.0;
  return m;
}

Mat3 rotation_from_components(const Quaternion& q) {
  const Mat3 s = skew(q.rho);
  return Mat3::Identity() - 2.0 * q.eta * s + 2.0 * s * s;
}

Rotation quat_to_rotation(const Quaternion& q) {
  const double deviation = std::abs(q.norm() - 1.0);
  return {rotation_from_components(q.normalized()), deviation > 1e-6};
}

StateVector full_deriv(const StateVector& x, const ControlVector& u,
                       const PhysicalParams& p) {
  const double n = p.mean_motion;
  const Quaternion q{x(kEta), x.segment<3>(kRho)};
  const Vec3 dv = x.segment<3>(kVel);
  const Vec3 dw = x.segment<3>(kOmega);
  const Vec3 thrust = u.head<3>();
  const Vec3 torque = u.tail<3>();

  const Mat3 rot = rotation_from_components(q);  // R_D^O
  const Vec3 accel = rot * thrust * (p.thrust_scale() / p.deputy_mass);

  StateVector d;
  d.segment<3>(kPos) = dv;
  d(kVel + 0) = 3.0 * n * n * x(kPos + 0) + 2.0 * n * dv.y() + accel.x();
  d(kVel + 1) = -2.0 * n * dv.x() + accel.y();
  d(kVel + 2) = -n * n * x(kPos + 2) + accel.z();

  d(kEta) = 0.5 * q.rho.dot(dw);
  d.segment<3>(kRho) = -0.5 * (q.eta * dw + q.rho.cross(dw));

  // Deputy inertial rate in body axes, Euler's equation, then back to the
  // relative rate in CW axes.
  const Vec3 frame = p.frame_rate();
  const Vec3 body_rate = rot.transpose() * (dw + frame);
  const Vec3 momentum = p.inertia.cwiseProduct(body_rate);
  const Vec3 body_accel = (torque - body_rate.cross(momentum)).cwiseQuotient(p.inertia);
  d.segment<3>(kOmega) = rot * body_accel - frame.cross(dw);
  return d;
}

State13 full_deriv(const State13& x, const Control6& u, const PhysicalParams& p) {
  return State13::from_vector(full_deriv(x.to_vector(), u.to_vector(), p));
}

void full_deriv_vjp(const StateVector& x, const ControlVector& u,
                    const PhysicalParams& p, const StateVector& bar,
                    StateVector& x_bar, ControlVector& u_bar) {
  const double n = p.mean_motion;
  const Quaternion q{x(kEta), x.segment<3>(kRho)};
  const Vec3 dw = x.segment<3>(kOmega);
  const Vec3 thrust = u.head<3>();
  const Vec3 torque = u.tail<3>();
  const Vec3 frame = p.frame_rate();
  const Mat3 rot = rotation_from_components(q);
  const double force_gain = p.thrust_scale() / p.deputy_mass;

  const Vec3 pos_bar = bar.segment<3>(kPos);
  const Vec3 vel_bar = bar.segment<3>(kVel);
  const double eta_dot_bar = bar(kEta);
  const Vec3 rho_dot_bar = bar.segment<3>(kRho);
  const Vec3 omega_dot_bar = bar.segment<3>(kOmega);

  double eta_bar = 0.0;
  Vec3 rho_bar = Vec3::Zero();
  Vec3 dw_bar = Vec3::Zero();

  // Translational rows.
  x_bar(kPos + 0) += 3.0 * n * n * vel_bar.x();
  x_bar(kPos + 2) += -n * n * vel_bar.z();
  x_bar.segment<3>(kVel) += pos_bar;
  x_bar(kVel + 0) += -2.0 * n * vel_bar.y();
  x_bar(kVel + 1) += 2.0 * n * vel_bar.x();
  u_bar.head<3>() += force_gain * (rot.transpose() * vel_bar);
  rotation_bilinear_vjp(q, vel_bar, force_gain * thrust, eta_bar, rho_bar);

  // Quaternion kinematics.
  rho_bar += 0.5 * eta_dot_bar * dw;
  dw_bar += 0.5 * eta_dot_bar * q.rho;
  eta_bar += -0.5 * rho_dot_bar.dot(dw);
  rho_bar += -0.5 * dw.cross(rho_dot_bar);
  dw_bar += -0.5 * (q.eta * rho_dot_bar + rho_dot_bar.cross(q.rho));

  // Angular acceleration chain.
  const Vec3 body_rate = rot.transpose() * (dw + frame);
  const Vec3 momentum = p.inertia.cwiseProduct(body_rate);
  const Vec3 body_accel = (torque - body_rate.cross(momentum)).cwiseQuotient(p.inertia);

  dw_bar += frame.cross(omega_dot_bar);
  rotation_bilinear_vjp(q, omega_dot_bar, body_accel, eta_bar, rho_bar);
  const Vec3 accel_bar = rot.transpose() * omega_dot_bar;
  const Vec3 scaled = accel_bar.cwiseQuotient(p.inertia);  // K^T accel_bar
  u_bar.tail<3>() += scaled;
  // d/dw [c . (w x Jw)] = Jw x c + J (c x w)
  const Vec3 body_rate_bar =
      -(momentum.cross(scaled) + p.inertia.cwiseProduct(scaled.cross(body_rate)));
  dw_bar += rot * body_rate_bar;
  rotation_bilinear_vjp(q, dw + frame, body_rate_bar, eta_bar, rho_bar);

  x_bar(kEta) += eta_bar;
  x_bar.segment<3>(kRho) += rho_bar;
  x_bar.segment<3>(kOmega) += dw_bar;
}

void normalize_quaternion(StateVector& x) {
  const double nrm = x.segment<4>(kEta).norm();
  x.segment<4>(kEta) /= nrm;
}

namespace {

// Cotangent of y = p / |p| pulled back to p.
Eigen::Vector4d normalization_vjp(const Eigen::Vector4d& unnormalized,
                                  const Eigen::Vector4d& y_bar) {
  const double nrm = unnormalized.norm();
  const Eigen::Vector4d y = unnormalized / nrm;
  return (y_bar - y * y.dot(y_bar)) / nrm;
}

StateVector rk4_raw(const StateVector& x, const ControlVector& u, double dt,
                    const PhysicalParams& p) {
  const StateVector k1 = full_deriv(x, u, p);
  const StateVector k2 = full_deriv(x + 0.5 * dt * k1, u, p);
  const StateVector k3 = full_deriv(x + 0.5 * dt * k2, u, p);
  const StateVector k4 = full_deriv(x + dt * k3, u, p);
  return x + (dt / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4);
}

}  // namespace

StateVector step(const StateVector& x, const ControlVector& u, double dt,
                 Integrator method, const PhysicalParams& p) {
  StateVector next = method == Integrator::Euler
                         ? StateVector(x + dt * full_deriv(x, u, p))
                         : rk4_raw(x, u, dt, p);
  normalize_quaternion(next);
  return next;
}

State13 step(const State13& x, const Control6& u, double dt, Integrator method,
             const PhysicalParams& p) {
  return State13::from_vector(step(x.to_vector(), u.to_vector(), dt, method, p));
}

void step_vjp(const StateVector& x, const ControlVector& u, double dt,
              Integrator method, const PhysicalParams& p,
              const StateVector& next_bar, StateVector& x_bar,
              ControlVector& u_bar) {
  if (method == Integrator::Euler) {
    const StateVector k1 = full_deriv(x, u, p);
    const StateVector raw = x + dt * k1;
    StateVector raw_bar = next_bar;
    raw_bar.segment<4>(kEta) = normalization_vjp(raw.segment<4>(kEta), next_bar.segment<4>(kEta));
    x_bar += raw_bar;
    const StateVector k_bar = dt * raw_bar;
    full_deriv_vjp(x, u, p, k_bar, x_bar, u_bar);
    return;
  }

  const StateVector k1 = full_deriv(x, u, p);
  const StateVector x2 = x + 0.5 * dt * k1;
  const StateVector k2 = full_deriv(x2, u, p);
  const StateVector x3 = x + 0.5 * dt * k2;
  const StateVector k3 = full_deriv(x3, u, p);
  const StateVector x4 = x + dt * k3;
  const StateVector k4 = full_deriv(x4, u, p);
  const StateVector raw = x + (dt / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4);

  StateVector raw_bar = next_bar;
  raw_bar.segment<4>(kEta) = normalization_vjp(raw.segment<4>(kEta), next_bar.segment<4>(kEta));
  x_bar += raw_bar;

  StateVector k1_bar = (dt / 6.0) * raw_bar;
  StateVector k2_bar = (dt / 3.0) * raw_bar;
  StateVector k3_bar = (dt / 3.0) * raw_bar;
  const StateVector k4_bar = (dt / 6.0) * raw_bar;

  StateVector stage_bar = StateVector::Zero();
  full_deriv_vjp(x4, u, p, k4_bar, stage_bar, u_bar);
  x_bar += stage_bar;
  k3_bar += dt * stage_bar;

  stage_bar.setZero();
  full_deriv_vjp(x3, u, p, k3_bar, stage_bar, u_bar);
  x_bar += stage_bar;
  k2_bar += 0.5 * dt * stage_bar;

  stage_bar.setZero();
  full_deriv_vjp(x2, u, p, k2_bar, stage_bar, u_bar);
  x_bar += stage_bar;
  k1_bar += 0.5 * dt * stage_bar;

  full_deriv_vjp(x, u, p, k1_bar, x_bar, u_bar);
}

void step_jacobians(const StateVector& x, const ControlVector& u, double dt, Integrator method,
                    const PhysicalParams& p, StateJacobian& a, InputJacobian& b) {
  for (int row = 0; row < kStateDim; ++row) {
    StateVector x_bar = StateVector::Zero();
    ControlVector u_bar = ControlVector::Zero();
    step_vjp(x, u, dt, method, p, StateVector::Unit(row), x_bar, u_bar);
    a.row(row) = x_bar.transpose();
    b.row(row) = u_bar.transpose();
  }
}

TranslationalState cw_analytic_transition(const TranslationalState& s, double t,
                                          double n) {
  const Vec3& r = s.dr;
  const Vec3& v = s.dv;
  TranslationalState out;
  if (n == 0.0) {
    out.dr = r + v * t;
    out.dv = v;
    return out;
  }
  const double c = std::cos(n * t);
  const double sn = std::sin(n * t);
  const double nt = n * t;

  out.dr.x() = (4.0 - 3.0 * c) * r.x() + (sn / n) * v.x() + (2.0 / n) * (1.0 - c) * v.y();
  out.dr.y() = 6.0 * (sn - nt) * r.x() + r.y() + (2.0 / n) * (c - 1.0) * v.x() +
               (1.0 / n) * (4.0 * sn - 3.0 * nt) * v.y();
  out.dr.z() = c * r.z() + (sn / n) * v.z();

  out.dv.x() = 3.0 * n * sn * r.x() + c * v.x() + 2.0 * sn * v.y();
  out.dv.y() = 6.0 * n * (c - 1.0) * r.x() - 2.0 * sn * v.x() + (4.0 * c - 3.0) * v.y();
  out.dv.z() = -n * sn * r.z() + c * v.z();
  return out;
}

}  // namespace tcmpc
