#ifndef TRAPKIT_LEAST_SQUARES_HPP
#define TRAPKIT_LEAST_SQUARES_HPP

#include <Eigen/Dense>
#include <algorithm>
#include <cmath>
#include <limits>
#include <span>

namespace trapkit::detail {

template <int P>
struct LmResult {
  Eigen::Matrix<double, P, 1> params;
  Eigen::Matrix<double, P, P> normal_inverse;  // (J^T W J)^-1 at the solution
  double chi2 = 0.0;
  int iterations = 0;
  bool converged = false;
  bool singular = false;
};

/// Damped Gauss-Newton (Levenberg-Marquardt with Marquardt diagonal
/// scaling). `model(t, p, grad)` returns the model value and fills the
/// analytic gradient; `feasible(p)` rejects steps leaving the parameter
/// domain.
template <int P, typename Model, typename Feasible>
LmResult<P> levenberg_marquardt(Model&& model, Feasible&& feasible,
                                Eigen::Matrix<double, P, 1> p, std::span<const double> t,
                                std::span<const double> y, std::span<const double> weights,
                                int max_iterations) {
  using Vec = Eigen::Matrix<double, P, 1>;
  using Mat = Eigen::Matrix<double, P, P>;

  auto assemble = [&](const Vec& q, Mat& jtj, Vec& jtr) {
    jtj.setZero();
    jtr.setZero();
    double chi2 = 0.0;
    Vec grad;
    for (std::size_t i = 0; i < t.size(); ++i) {
      const double f = model(t[i], q, grad);
      const double r = y[i] - f;
      const double w = weights[i];
      jtj.noalias() += w * grad * grad.transpose();
      jtr.noalias() += w * grad * r;
      chi2 += w * r * r;
    }
    return chi2;
  };

  // Jacobi scaling keeps the solves well conditioned when parameters differ
  // by many orders of magnitude.
  auto scaling = [](const Mat& m) {
    Vec d;
    for (int k = 0; k < P; ++k) d(k) = m(k, k) > 0.0 ? 1.0 / std::sqrt(m(k, k)) : 1.0;
    return d;
  };

  LmResult<P> out;
  Mat jtj;
  Vec jtr;
  double chi2 = assemble(p, jtj, jtr);
  double lambda = 1e-3;
  int it = 0;
  for (; it < max_iterations; ++it) {
    bool accepted = false;
    bool small_step = false;
    for (int tries = 0; tries < 60; ++tries) {
      const Vec d = scaling(jtj);
      Mat a = d.asDiagonal() * jtj * d.asDiagonal();
      for (int k = 0; k < P; ++k) a(k, k) += lambda;
      const Vec step = d.asDiagonal() * a.ldlt().solve(d.asDiagonal() * jtr);
      if (!step.allFinite()) {
        lambda *= 10.0;
        continue;
      }
      const Vec trial = p + step;
      small_step = true;
      for (int k = 0; k < P; ++k) {
        if (std::fabs(step(k)) > 1e-13 * (std::fabs(p(k)) + 1e-300)) small_step = false;
      }
      if (!feasible(trial)) {
        lambda *= 10.0;
        continue;
      }
      Mat jtj_trial;
      Vec jtr_trial;
      const double chi2_trial = assemble(trial, jtj_trial, jtr_trial);
      if (std::isfinite(chi2_trial) && chi2_trial <= chi2) {
        const double decrease = chi2 - chi2_trial;
        p = trial;
        jtj = jtj_trial;
        jtr = jtr_trial;
        const double old = chi2;
        chi2 = chi2_trial;
        lambda = std::max(lambda / 10.0, 1e-12);
        accepted = true;
        if (small_step || decrease <= 1e-15 * old) out.converged = true;
        break;
      }
      if (small_step) {
        // No further decrease is possible at this resolution.
        out.converged = true;
        break;
      }
      lambda *= 10.0;
    }
    if (out.converged) break;
    if (!accepted) break;
  }

  out.params = p;
  out.chi2 = chi2;
  out.iterations = it + 1;
  const Vec d = scaling(jtj);
  Eigen::FullPivLU<Mat> lu(d.asDiagonal() * jtj * d.asDiagonal());
  lu.setThreshold(1e-12);
  if (!lu.isInvertible()) {
    out.singular = true;
    out.normal_inverse.setConstant(std::numeric_limits<double>::quiet_NaN());
  } else {
    out.normal_inverse = d.asDiagonal() * lu.inverse() * d.asDiagonal();
  }
  return out;
}

}  // namespace trapkit::detail

#endif  // TRAPKIT_LEAST_SQUARES_HPP
