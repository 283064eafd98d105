#pragma once

#include "mdcr/objective.hpp"
#include "mdcr/types.hpp"

#include <cmath>
#include <string>
#include <utility>

namespace mdcr {

/// Central finite differences of the objective value, column by column.
/// Used by the gradcheck command to validate the analytic gradients.
inline std::pair<Matrix, Matrix> finite_difference_gradients(
    const TaskObjective& objective, const Matrix& v, const Matrix& w,
    double step = 1e-6) {
  Matrix dv(v.rows(), v.cols());
  Matrix dw(w.rows(), w.cols());
  Matrix vp = v, wp = w;
  for (Eigen::Index i = 0; i < v.rows(); ++i)
    for (Eigen::Index j = 0; j < v.cols(); ++j) {
      const double original = vp(i, j);
      vp(i, j) = original + step;
      const double upper = objective.value(vp, w);
      vp(i, j) = original - step;
      const double lower = objective.value(vp, w);
      vp(i, j) = original;
      dv(i, j) = (upper - lower) / (2.0 * step);
    }
  for (Eigen::Index i = 0; i < w.rows(); ++i)
    for (Eigen::Index j = 0; j < w.cols(); ++j) {
      const double original = wp(i, j);
      wp(i, j) = original + step;
      const double upper = objective.value(v, wp);
      wp(i, j) = original - step;
      const double lower = objective.value(v, wp);
      wp(i, j) = original;
      dw(i, j) = (upper - lower) / (2.0 * step);
    }
  return {std::move(dv), std::move(dw)};
}

/// Worst observed deviation between analytic and finite-difference gradients.
struct GradCheckWorst {
  double rel_error = 0.0;
  Task task = Task::I2T;
  char block = 'V';
  Eigen::Index row = 0;
  Eigen::Index col = 0;
  double analytic = 0.0;
  double numeric = 0.0;
};

/// Per-coordinate relative error with an absolute floor of 1, suited to
/// gradients of order one and above.
inline double gradcheck_rel_error(double analytic, double numeric) {
  return std::abs(analytic - numeric) /
         std::max({1.0, std::abs(analytic), std::abs(numeric)});
}

inline void gradcheck_compare(const TaskObjective& objective, const Matrix& v,
                              const Matrix& w, double step,
                              GradCheckWorst& worst) {
  const auto [fd_v, fd_w] = finite_difference_gradients(objective, v, w, step);
  const Matrix an_v = objective.gradient_v(v, w);
  const Matrix an_w = objective.gradient_w(v, w);
  const auto scan = [&](const Matrix& analytic, const Matrix& numeric,
                        char block) {
    for (Eigen::Index i = 0; i < analytic.rows(); ++i)
      for (Eigen::Index j = 0; j < analytic.cols(); ++j) {
        const double rel = gradcheck_rel_error(analytic(i, j), numeric(i, j));
        if (rel > worst.rel_error)
          worst = {rel,      objective.task(), block,
                   i,        j,                analytic(i, j),
                   numeric(i, j)};
      }
  };
  scan(an_v, fd_v, 'V');
  scan(an_w, fd_w, 'W');
}

}  // namespace mdcr
