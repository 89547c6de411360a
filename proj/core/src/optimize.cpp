#include "bilbao/optimize.hpp"

#include <algorithm>
#include <cmath>

#include <Eigen/Dense>

namespace bilbao {

namespace {

void free_mask(const Eigen::VectorXd& x, const Eigen::VectorXd& g, const Box& box,
               Eigen::VectorXd& mask) {
  for (Eigen::Index i = 0; i < x.size(); ++i) {
    const bool at_lower = x[i] <= box.lower[i] && g[i] > 0.0;
    const bool at_upper = x[i] >= box.upper[i] && g[i] < 0.0;
    mask[i] = at_lower || at_upper ? 0.0 : 1.0;
  }
}

}  // namespace

LocalResult minimize_box(const SmoothObjective& f, const Eigen::VectorXd& x0, const Box& box,
                         const QuasiNewtonOptions& options) {
  const Eigen::Index n = x0.size();
  LocalResult result;
  Eigen::VectorXd x = box.clamp(x0);
  Eigen::VectorXd g(n);
  double fx = f(x, &g);
  result.evaluations = 1;
  Eigen::MatrixXd H = Eigen::MatrixXd::Identity(n, n);
  bool fresh = true;  // H is the unscaled identity

  Eigen::VectorXd g_new(n), x_new(n), mask(n), pg(n), d(n), s(n), y(n), Hy(n);
  int it = 0;
  for (; it < options.max_iterations; ++it) {
    free_mask(x, g, box, mask);
    pg = g.cwiseProduct(mask);
    if (pg.lpNorm<Eigen::Infinity>() < options.gradient_tolerance) break;

    d.noalias() = -(H * pg);
    d.array() *= mask.array();
    if (d.dot(pg) >= 0.0) {
      H.setIdentity();
      fresh = true;
      d = -pg;
    }
    if (fresh) {
      const double longest = d.lpNorm<Eigen::Infinity>();
      if (longest > options.initial_step) d *= options.initial_step / longest;
    }

    double step = 1.0;
    bool accepted = false;
    double f_new = 0.0;
    for (int ls = 0; ls < 40; ++ls) {
      x_new = box.clamp(x + step * d);
      s = x_new - x;
      if (s.lpNorm<Eigen::Infinity>() <= options.step_tolerance) break;
      f_new = f(x_new, &g_new);
      ++result.evaluations;
      if (std::isfinite(f_new) && f_new <= fx + 1e-4 * g.dot(s)) {
        accepted = true;
        break;
      }
      step *= 0.5;
    }
    if (!accepted) break;

    y = g_new - g;
    const double sy = s.dot(y);
    const double delta = fx - f_new;
    x.swap(x_new);
    g.swap(g_new);
    fx = f_new;
    if (sy > 1e-12 * s.norm() * y.norm()) {
      if (fresh) H *= sy / y.squaredNorm();
      fresh = false;
      // H <- (I - rho s y^T) H (I - rho y s^T) + rho s s^T
      Hy.noalias() = H * y;
      const double rho = 1.0 / sy;
      const double yHy = y.dot(Hy);
      H.noalias() -= rho * (Hy * s.transpose() + s * Hy.transpose());
      H.noalias() += (rho * rho * yHy + rho) * (s * s.transpose());
    }
    if (delta <= options.value_tolerance * (1.0 + std::abs(fx))) {
      ++it;
      break;
    }
  }
  result.x = x;
  result.value = fx;
  result.iterations = it;
  return result;
}

LocalResult pattern_search(const PlainObjective& f, const Eigen::VectorXd& x0, const Box& box,
                           const PatternSearchOptions& options, std::optional<double> start_value) {
  LocalResult result;
  result.x = box.clamp(x0);
  if (start_value) {
    result.value = *start_value;
  } else {
    result.value = f(result.x);
    result.evaluations = 1;
  }
  double step = options.initial_step;
  while (result.evaluations < options.max_evaluations && step >= options.min_step) {
    bool moved = false;
    for (Eigen::Index i = 0; i < result.x.size() && result.evaluations < options.max_evaluations;
         ++i) {
      for (const double sign : {1.0, -1.0}) {
        if (result.evaluations >= options.max_evaluations) break;
        Eigen::VectorXd trial = result.x;
        trial[i] = std::clamp(trial[i] + sign * step, box.lower[i], box.upper[i]);
        if (trial[i] == result.x[i]) continue;
        const double value = f(trial);
        ++result.evaluations;
        if (value < result.value) {
          result.x = std::move(trial);
          result.value = value;
          moved = true;
          break;
        }
      }
    }
    ++result.iterations;
    if (!moved) step *= 0.5;
  }
  return result;
}

}  // namespace bilbao
