#pragma once

#include <Eigen/Dense>
#include <cmath>
#include <functional>
#include <limits>
#include <string>
#include <vector>

namespace starkplan {

struct LevMarOptions {
  int max_iterations = 200;
  double gradient_tol = 1e-10;   // max |grad| of the weighted RSS
  double step_tol = 1e-12;       // relative accepted-step size
  double rss_tol = 1e-12;        // relative RSS stagnation over accepted steps
  double initial_lambda = 1e-3;
};

struct LevMarResult {
  Eigen::VectorXd params;        // full vector, fixed entries untouched
  Eigen::MatrixXd jtj;           // J^T J over free parameters, at the solution
  std::vector<int> free_indices;
  double rss = 0.0;
  int iterations = 0;
  bool converged = false;
  bool degenerate = false;       // J^T J numerically rank-deficient at the solution
  std::string message;
};

/// Levenberg-Marquardt least squares with multiplicative trust-region
/// damping (Nielsen's lambda update), central-difference Jacobian, box
/// bounds, and an optional fixed-parameter mask. Steps that would cross a
/// bound are shortened to 90% of the feasible fraction instead of being
/// clamped onto it, so exponential-rate parameters cannot land in the
/// flat underflow region where their gradient vanishes. Deterministic for
/// fixed inputs. `residuals(p)` returns the weighted residual vector.
inline LevMarResult levmar(
    const std::function<Eigen::VectorXd(const Eigen::VectorXd&)>& residuals,
    Eigen::VectorXd p0, const Eigen::VectorXd& lower, const Eigen::VectorXd& upper,
    const std::vector<bool>& fixed, const LevMarOptions& opt = {}) {
  using Eigen::MatrixXd;
  using Eigen::VectorXd;

  const int n_all = static_cast<int>(p0.size());
  std::vector<int> free_idx;
  for (int i = 0; i < n_all; ++i)
    if (fixed.empty() || !fixed[i]) free_idx.push_back(i);
  const int n = static_cast<int>(free_idx.size());

  for (int i = 0; i < n_all; ++i) p0[i] = std::min(upper[i], std::max(lower[i], p0[i]));

  VectorXd p = p0;
  VectorXd r = residuals(p);
  double rss = r.squaredNorm();

  LevMarResult best;
  best.params = p;
  best.rss = rss;
  best.free_indices = free_idx;

  if (n == 0) {
    best.converged = true;
    best.message = "all parameters fixed";
    return best;
  }

  const int m = static_cast<int>(r.size());
  auto jacobian = [&](const VectorXd& at) {
    MatrixXd j(m, n);
    VectorXd pw = at;
    for (int c = 0; c < n; ++c) {
      const int i = free_idx[c];
      const double h = std::max(1e-7 * std::abs(at[i]), 1e-9);
      pw[i] = at[i] + h;
      const VectorXd rp = residuals(pw);
      pw[i] = at[i] - h;
      const VectorXd rm = residuals(pw);
      pw[i] = at[i];
      j.col(c) = (rp - rm) / (2.0 * h);
    }
    return j;
  };

  double lambda = opt.initial_lambda;
  double nu = 2.0;
  int iter = 0;
  int stagnant = 0;
  bool converged = false;
  std::string message = "maximum iterations reached";

  MatrixXd j = jacobian(p);
  MatrixXd jtj = j.transpose() * j;
  VectorXd g = j.transpose() * r;

  for (; iter < opt.max_iterations; ++iter) {
    if (g.lpNorm<Eigen::Infinity>() < opt.gradient_tol) {
      converged = true;
      message = "gradient below tolerance";
      break;
    }
    // Scaled damping: (J^T J + lambda diag(J^T J)) step = -g
    MatrixXd a = jtj;
    for (int c = 0; c < n; ++c) a(c, c) += lambda * std::max(jtj(c, c), 1e-30);
    VectorXd step = a.ldlt().solve(-g);
    if (!step.allFinite()) {
      lambda *= 10.0;
      nu = 2.0;
      continue;
    }

    // Project out components pushing past an already-active bound, then take
    // at most 90% of the distance to the nearest newly-hit bound.
    for (int c = 0; c < n; ++c) {
      const int i = free_idx[c];
      const double scale = 1e-12 * (1.0 + std::abs(p[i]));
      if ((step[c] > 0.0 && upper[i] - p[i] <= scale) ||
          (step[c] < 0.0 && p[i] - lower[i] <= scale)) {
        step[c] = 0.0;
      }
    }
    double fraction = 1.0;
    for (int c = 0; c < n; ++c) {
      const int i = free_idx[c];
      if (step[c] > 0.0 && p[i] + step[c] > upper[i])
        fraction = std::min(fraction, 0.9 * (upper[i] - p[i]) / step[c]);
      else if (step[c] < 0.0 && p[i] + step[c] < lower[i])
        fraction = std::min(fraction, 0.9 * (lower[i] - p[i]) / step[c]);
    }
    step *= fraction;

    double pnorm = 0.0, snorm = 0.0;
    for (int c = 0; c < n; ++c) {
      pnorm += p[free_idx[c]] * p[free_idx[c]];
      snorm += step[c] * step[c];
    }
    if (std::sqrt(snorm) < opt.step_tol * (std::sqrt(pnorm) + opt.step_tol)) {
      converged = true;
      message = "step below tolerance";
      break;
    }

    VectorXd cand = p;
    for (int c = 0; c < n; ++c) {
      const int i = free_idx[c];
      cand[i] = std::min(upper[i], std::max(lower[i], cand[i] + step[c]));
    }

    const VectorXd r_cand = residuals(cand);
    const double rss_cand = r_cand.squaredNorm();

    if (std::isfinite(rss_cand) && rss_cand < rss) {
      const double improvement = (rss - rss_cand) / std::max(rss, 1e-300);
      // gain ratio against the damped quadratic model
      double predicted = 0.0;
      for (int c = 0; c < n; ++c)
        predicted += step[c] * (lambda * std::max(jtj(c, c), 1e-30) * step[c] - g[c]);
      const double rho = (rss - rss_cand) / std::max(predicted, 1e-300);

      p = cand;
      r = r_cand;
      rss = rss_cand;
      j = jacobian(p);
      jtj = j.transpose() * j;
      g = j.transpose() * r;
      const double t = 2.0 * rho - 1.0;
      lambda *= std::max(1.0 / 3.0, 1.0 - t * t * t);
      nu = 2.0;

      if (rss <= 1e-300) {
        converged = true;
        message = "residual at machine zero";
        break;
      }
      stagnant = improvement < opt.rss_tol ? stagnant + 1 : 0;
      if (stagnant >= 2) {
        converged = true;
        message = "residual stagnated";
        break;
      }
    } else {
      lambda *= nu;
      nu *= 2.0;
      if (lambda > 1e12) {
        // no descent direction at any damping: converged if the attempted
        // steps have shrunk to numerical noise, a genuine failure otherwise
        if (std::sqrt(snorm) < 1e-8 * (std::sqrt(pnorm) + 1.0)) {
          converged = true;
          message = "trust region collapsed";
        } else {
          message = "damping diverged (no descent direction)";
        }
        break;
      }
    }
  }

  best.params = p;
  best.jtj = jtj;
  best.rss = rss;
  best.iterations = iter;
  best.converged = converged;
  best.message = message;

  // Identifiability check on the correlation-normalized normal matrix.
  MatrixXd c = jtj;
  for (int a_ = 0; a_ < n; ++a_) {
    for (int b = 0; b < n; ++b) {
      const double d = std::sqrt(std::max(jtj(a_, a_) * jtj(b, b), 0.0));
      c(a_, b) = d > 0.0 ? jtj(a_, b) / d : (a_ == b ? 1.0 : 0.0);
    }
  }
  Eigen::SelfAdjointEigenSolver<MatrixXd> es(c);
  const double emin = es.eigenvalues().minCoeff();
  const double emax = es.eigenvalues().maxCoeff();
  for (int a_ = 0; a_ < n; ++a_)
    if (jtj(a_, a_) <= 0.0 || !std::isfinite(jtj(a_, a_))) best.degenerate = true;
  if (!(emin > emax * 1e-13)) best.degenerate = true;

  return best;
}

}  // namespace starkplan
