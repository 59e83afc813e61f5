#include "tcmpc/box_qp.hpp"

#include <cmath>

namespace tcmpc {

namespace {

double objective(const Eigen::MatrixXd& h, const Eigen::VectorXd& g, const Eigen::VectorXd& x) {
  return 0.5 * x.dot(h * x) + g.dot(x);
}

}  // namespace

BoxQpResult solve_box_qp(const Eigen::MatrixXd& hessian, const Eigen::VectorXd& gradient,
                         const Eigen::VectorXd& lower, const Eigen::VectorXd& upper,
                         const Eigen::VectorXd& start) {
  constexpr int kMaxIterations = 100;
  constexpr int kMaxBacktracks = 40;
  const Eigen::Index n = gradient.size();

  BoxQpResult r;
  r.x = start.cwiseMax(lower).cwiseMin(upper);
  r.free = Eigen::Array<bool, Eigen::Dynamic, 1>::Constant(n, true);
  double value = objective(hessian, gradient, r.x);

  for (; r.iterations < kMaxIterations; ++r.iterations) {
    const Eigen::VectorXd grad = gradient + hessian * r.x;
    for (Eigen::Index i = 0; i < n; ++i) {
      const bool held = (r.x(i) <= lower(i) && grad(i) > 0.0) || (r.x(i) >= upper(i) && grad(i) < 0.0);
      r.free(i) = !held;
    }
    const Eigen::Index n_free = r.free.count();
    if (n_free == 0) break;

    Eigen::VectorXi idx(n_free);
    for (Eigen::Index i = 0, j = 0; i < n; ++i) {
      if (r.free(i)) idx(j++) = static_cast<int>(i);
    }
    Eigen::MatrixXd h_ff(n_free, n_free);
    Eigen::VectorXd g_f(n_free);
    for (Eigen::Index a = 0; a < n_free; ++a) {
      g_f(a) = grad(idx(a));
      for (Eigen::Index b = 0; b < n_free; ++b) h_ff(a, b) = hessian(idx(a), idx(b));
    }
    if (g_f.lpNorm<Eigen::Infinity>() == 0.0) break;
    const Eigen::VectorXd newton_f = -h_ff.ldlt().solve(g_f);
    Eigen::VectorXd search = Eigen::VectorXd::Zero(n);
    for (Eigen::Index a = 0; a < n_free; ++a) search(idx(a)) = newton_f(a);

    double step = 1.0;
    bool improved = false;
    Eigen::VectorXd candidate;
    double candidate_value = value;
    for (int b = 0; b < kMaxBacktracks; ++b) {
      candidate = (r.x + step * search).cwiseMax(lower).cwiseMin(upper);
      candidate_value = objective(hessian, gradient, candidate);
      if (candidate_value - value <= 0.1 * grad.dot(candidate - r.x) && candidate_value < value) {
        improved = true;
        break;
      }
      step *= 0.5;
    }
    if (!improved) break;
    const double change = value - candidate_value;
    r.x = candidate;
    value = candidate_value;
    if (change <= 1e-14 * (1.0 + std::abs(value))) {
      ++r.iterations;
      break;
    }
  }

  // Free set at the returned point.
  const Eigen::VectorXd grad = gradient + hessian * r.x;
  for (Eigen::Index i = 0; i < n; ++i) {
    r.free(i) = !((r.x(i) <= lower(i) && grad(i) > 0.0) || (r.x(i) >= upper(i) && grad(i) < 0.0));
  }
  return r;
}

}  // namespace tcmpc
