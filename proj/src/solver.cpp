#include "tcmpc/solver.hpp"

#include <algorithm>
#include <cctype>
#include <chrono>
#include <cmath>
#include <stdexcept>
#include <string>

#include "tcmpc/box_qp.hpp"
#include "tcmpc/kernels.hpp"

namespace tcmpc {

IterationBudget::IterationBudget(int cap) : cap_(cap) {
  if (cap < 1) throw std::invalid_argument("iteration budget must be >= 1");
}

std::string IterationBudget::label() const {
  return cap_ ? std::to_string(*cap_) : std::string("optimal");
}

IterationBudget IterationBudget::parse(std::string_view text) {
  std::string lower(text);
  std::transform(lower.begin(), lower.end(), lower.begin(),
                 [](unsigned char c) { return static_cast<char>(std::tolower(c)); });
  if (lower == "optimal" || lower == "unbounded") return unbounded();
  std::size_t used = 0;
  int cap = 0;
  try {
    cap = std::stoi(lower, &used);
  } catch (const std::exception&) {
    throw std::invalid_argument("invalid iteration budget '" + std::string(text) + "'");
  }
  if (used != lower.size() || cap < 1) {
    throw std::invalid_argument("invalid iteration budget '" + std::string(text) + "'");
  }
  return IterationBudget(cap);
}

void SolverConfig::validate() const {
  if (!(opt_tol > 0.0)) throw std::invalid_argument("opt_tol must be positive");
  if (!(shrink > 0.0 && shrink < 1.0)) throw std::invalid_argument("shrink must be in (0, 1)");
  if (!(sufficient_decrease > 0.0 && sufficient_decrease < 1.0)) {
    throw std::invalid_argument("sufficient_decrease must be in (0, 1)");
  }
  if (!(initial_step > 0.0)) throw std::invalid_argument("initial_step must be positive");
  if (!(step_growth >= 1.0)) throw std::invalid_argument("step_growth must be >= 1");
  if (max_backtracks < 1) throw std::invalid_argument("max_backtracks must be >= 1");
}

std::string_view to_string(TerminationReason r) {
  switch (r) {
    case TerminationReason::OptimalityTol: return "OptimalityTol";
    case TerminationReason::IterationCap: return "IterationCap";
    case TerminationReason::LineSearchStall: return "LineSearchStall";
  }
  return "unknown";
}

TerminationReason termination_reason_from_string(std::string_view s) {
  if (s == "OptimalityTol") return TerminationReason::OptimalityTol;
  if (s == "IterationCap") return TerminationReason::IterationCap;
  if (s == "LineSearchStall") return TerminationReason::LineSearchStall;
  throw std::invalid_argument("unknown termination reason '" + std::string(s) + "'");
}

ControlSequence project_box(const ControlSequence& useq, const ControlVector& lower,
                            const ControlVector& upper) {
  ControlSequence out = useq;
  for (int i = 0; i < useq.horizon(); ++i) {
    out[i] = useq[i].cwiseMin(upper).cwiseMax(lower);
  }
  return out;
}

namespace {

using DdpGain = Eigen::Matrix<double, kControlDim, kStateDim>;

StateVector step_state(const StateVector& x, const ControlVector& u, const OcpSpec& spec) {
  return step(x, u, spec.dt, spec.integrator, spec.params);
}

// Per-element box data expanded over the horizon.
struct ExpandedBox {
  std::vector<double> lower, upper, metric, inv_width;

  ExpandedBox(const OcpSpec& spec) {
    const std::size_t n = static_cast<std::size_t>(spec.horizon) * kControlDim;
    lower.resize(n);
    upper.resize(n);
    metric.resize(n);
    inv_width.resize(n);
    for (std::size_t i = 0; i < n; ++i) {
      const int c = static_cast<int>(i % kControlDim);
      lower[i] = spec.lower(c);
      upper[i] = spec.upper(c);
      const double half = 0.5 * (spec.upper(c) - spec.lower(c));
      metric[i] = half * half;
      inv_width[i] = half > 0.0 ? 1.0 / half : 0.0;
    }
  }

  kernels::BoxView view() const { return {lower, upper}; }

  // |w * g|_inf, the unprojected gradient in box-normalized coordinates.
  double scaled_gradient_norm(std::span<const double> g) const {
    double worst = 0.0;
    for (std::size_t i = 0; i < g.size(); ++i) {
      worst = std::max(worst, std::abs(g[i]) * metric[i] * inv_width[i]);
    }
    return worst;
  }
};

// Rollout of the clamped feedback policy u + step * k + K (x - x_nominal).
double feedback_rollout(const OcpSpec& spec, const StateVector& x0, const ControlSequence& u,
                        const Trajectory& nominal, std::span<const DdpGain> gains,
                        std::span<const ControlVector> feedforward, double step,
                        ControlSequence& out) {
  double total = 0.0;
  StateVector x = x0;
  for (int i = 0; i < spec.horizon; ++i) {
    const ControlVector ui = (u[i] + step * feedforward[i] + gains[i] * (x - nominal[i]))
                                 .cwiseMax(spec.lower)
                                 .cwiseMin(spec.upper);
    out[i] = ui;
    total += stage_state_cost(x, spec) + stage_input_cost(ui, spec);
    if (i + 1 < spec.horizon) x = step_state(x, ui, spec);
  }
  return total;
}

// One control-limited Gauss-Newton iteration. Returns true and fills
// `trial`/`trial_value` when a step length passes the sufficient-decrease
// test against the model's predicted change.
bool box_ddp_iteration(const OcpSpec& spec, const StateVector& x0, const ControlSequence& u,
                       double value, const SolverConfig& cfg, ControlSequence& trial,
                       double& trial_value) {
  using ControlMatrix = Eigen::Matrix<double, kControlDim, kControlDim>;
  const int horizon = spec.horizon;
  const auto n_stages = static_cast<std::size_t>(horizon);

  const Trajectory nominal = rollout(x0, u, spec);
  std::vector<DdpGain> gains(n_stages, DdpGain::Zero());
  std::vector<ControlVector> feedforward(n_stages, ControlVector::Zero());

  const ControlMatrix input_hessian = (2.0 * spec.input_weights).asDiagonal();
  StateJacobian value_hessian = StateJacobian::Zero();
  StateVector value_gradient = StateVector::Zero();
  StateJacobian a;
  InputJacobian b;
  double linear_change = 0.0;
  double quadratic_change = 0.0;

  for (int i = horizon - 1; i >= 0; --i) {
    ControlMatrix quu = input_hessian;
    DdpGain qux = DdpGain::Zero();
    StateJacobian qxx = (2.0 * spec.state_weights).asDiagonal();
    ControlVector qu = 2.0 * spec.input_weights.cwiseProduct(u[i] - spec.input_target);
    StateVector qx = 2.0 * spec.state_weights.cwiseProduct(nominal[i] - spec.target);
    if (i + 1 < horizon) {
      step_jacobians(nominal[i], u[i], spec.dt, spec.integrator, spec.params, a, b);
      const DdpGain bt_p = b.transpose() * value_hessian;
      quu += bt_p * b;
      qux = bt_p * a;
      qxx += a.transpose() * value_hessian * a;
      qu += b.transpose() * value_gradient;
      qx += a.transpose() * value_gradient;
    }
    quu = 0.5 * (quu + quu.transpose()).eval();

    const BoxQpResult qp = solve_box_qp(quu, qu, spec.lower - u[i], spec.upper - u[i],
                                        Eigen::VectorXd::Zero(kControlDim));
    ControlVector& k = feedforward[static_cast<std::size_t>(i)];
    k = qp.x;
    DdpGain& gain = gains[static_cast<std::size_t>(i)];
    const Eigen::Index n_free = qp.free.count();
    if (n_free > 0) {
      Eigen::MatrixXd quu_ff(n_free, n_free);
      Eigen::MatrixXd qux_f(n_free, kStateDim);
      std::array<int, kControlDim> idx{};
      for (int c = 0, j = 0; c < kControlDim; ++c) {
        if (qp.free(c)) idx[static_cast<std::size_t>(j++)] = c;
      }
      for (Eigen::Index r = 0; r < n_free; ++r) {
        qux_f.row(r) = qux.row(idx[static_cast<std::size_t>(r)]);
        for (Eigen::Index c = 0; c < n_free; ++c) {
          quu_ff(r, c) = quu(idx[static_cast<std::size_t>(r)], idx[static_cast<std::size_t>(c)]);
        }
      }
      const Eigen::MatrixXd gain_f = -quu_ff.ldlt().solve(qux_f);
      for (Eigen::Index r = 0; r < n_free; ++r) gain.row(idx[static_cast<std::size_t>(r)]) = gain_f.row(r);
    }

    linear_change += k.dot(qu);
    quadratic_change += 0.5 * k.dot(quu * k);
    value_hessian = qxx + gain.transpose() * quu * gain + gain.transpose() * qux +
                    qux.transpose() * gain;
    value_hessian = 0.5 * (value_hessian + value_hessian.transpose()).eval();
    value_gradient = qx + gain.transpose() * (quu * k + qu) + qux.transpose() * k;
  }

  double step = cfg.initial_step;
  for (int attempt = 0; attempt < cfg.max_backtracks; ++attempt) {
    const double predicted = step * linear_change + step * step * quadratic_change;
    if (!(predicted < 0.0)) return false;  // the model sees no descent
    trial_value = feedback_rollout(spec, x0, u, nominal, gains, feedforward, step, trial);
    if (trial_value <= value + cfg.sufficient_decrease * predicted) return true;
    step *= cfg.shrink;
  }
  return false;
}

}  // namespace

SolveOutcome solve(const OcpSpec& spec, const StateVector& x0, const ControlSequence& warm,
                   const SolverConfig& cfg) {
  const auto started = std::chrono::steady_clock::now();
  if (warm.horizon() != spec.horizon) {
    throw std::invalid_argument("warm start horizon " + std::to_string(warm.horizon()) +
                                " does not match " + std::to_string(spec.horizon));
  }
  const kernels::KernelTable& k = kernels::active();
  const ExpandedBox box(spec);
  const std::size_t n = warm.size();

  SolveOutcome out;
  out.useq = ControlSequence(spec.horizon);
  k.clamp(warm.flat(), box.view(), out.useq.flat());

  std::vector<double> grad(n), trial_grad(n);
  ControlSequence trial(spec.horizon);

  double value = cost_and_gradient(x0, out.useq, spec, grad);
  out.initial_cost = value;
  out.accepted_costs.push_back(value);

  // Scaled gradient magnitude at the start fixes the stationarity scale.
  const double start_scale = box.scaled_gradient_norm(grad);
  const double stationarity_scale = std::max(1.0, start_scale / 100.0);
  std::vector<double> stationarity_metric(box.metric);
  for (double& m : stationarity_metric) m /= stationarity_scale;

  double step = -1.0;  // set on the first iteration
  while (true) {
    out.optimality = k.projected_gradient_norm(out.useq.flat(), grad, stationarity_metric,
                                               box.view(), box.inv_width);
    if (out.optimality <= cfg.opt_tol) {
      out.reason = TerminationReason::OptimalityTol;
      break;
    }
    if (cfg.budget.exhausted(out.iterations)) {
      out.reason = TerminationReason::IterationCap;
      break;
    }
    ++out.iterations;

    bool accepted = false;
    if (cfg.rule == IterationRule::BoxDdp) {
      double trial_value = 0.0;
      accepted = box_ddp_iteration(spec, x0, out.useq, value, cfg, trial, trial_value);
    } else {
      // start_scale > 0 here, otherwise the stationarity test has already passed.
      step = step < 0.0 ? cfg.initial_step / start_scale : step * cfg.step_growth;
      for (int b = 0; b < cfg.max_backtracks; ++b) {
        k.projected_step(out.useq.flat(), grad, box.metric, step, box.view(), trial.flat());
        const double predicted = k.directional_change(grad, trial.flat(), out.useq.flat());
        if (predicted < 0.0) {
          const double trial_value = cost(x0, trial, spec);
          if (trial_value <= value + cfg.sufficient_decrease * predicted) {
            accepted = true;
            break;
          }
        }
        step *= cfg.shrink;
      }
    }
    if (!accepted) {
      out.reason = TerminationReason::LineSearchStall;
      break;
    }
    value = cost_and_gradient(x0, trial, spec, trial_grad);
    std::swap(out.useq, trial);
    std::swap(grad, trial_grad);
    out.accepted_costs.push_back(value);
  }

  out.final_cost = value;
  out.wall_time = std::chrono::duration<double>(std::chrono::steady_clock::now() - started).count();
  return out;
}

}  // namespace tcmpc
