#pragma once

#include "mdcr/types.hpp"

#include <algorithm>
#include <cmath>
#include <string>
#include <utility>

namespace mdcr {

/// Tradeoff and ridge weights shared by every task objective.
struct Hyperparams {
  double lambda = 0.5;  // correlation vs regression tradeoff, in [0, 1]
  double eta1 = 0.5;    // image-side ridge weight, >= 0
  double eta2 = 0.5;    // text-side ridge weight, >= 0

  void validate() const {
    detail::require(lambda >= 0.0 && lambda <= 1.0 && std::isfinite(lambda),
                    "lambda must lie in [0, 1]");
    detail::require(eta1 >= 0.0 && std::isfinite(eta1), "eta1 must be >= 0");
    detail::require(eta2 >= 0.0 && std::isfinite(eta2), "eta2 must be >= 0");
  }
};

/// One couple of mappings into the shared label-dimensional subspace, plus
/// the task it was trained for. V projects image features (c x p), W text
/// features (c x q).
struct ProjectionPair {
  Matrix V;
  Matrix W;
  Task task = Task::I2T;
};

/// Evaluates the task objective and its analytic gradients.
///
/// With X (n x p) the image features, T (n x q) the text features, S (n x c)
/// the one-hot semantic matrix and |.| the Frobenius norm:
///
///   I2T:     f(V,W) = lambda*|X V' - T W'|^2 + (1-lambda)*|X V' - S|^2
///                     + eta1*|V|^2 + eta2*|W|^2
///   T2I:     f(V,W) = lambda*|X V' - T W'|^2 + (1-lambda)*|T W' - S|^2
///                     + eta1*|V|^2 + eta2*|W|^2
///   Unified: f(V,W) = lambda*|X V' - T W'|^2
///                     + (1-lambda)*(|X V' - S|^2 + |T W' - S|^2)
///                     + eta1*|V|^2 + eta2*|W|^2
///
/// The construction precomputes the Gram matrices X'X, T'T, X'T, S'X, S'T
/// once; every subsequent value/gradient evaluation costs O(c*(p+q)^2)
/// regardless of n, which is what makes the inner descent loops cheap.
class TaskObjective {
 public:
  TaskObjective(Task task, const Matrix& image_features,
                const Matrix& text_features, const Matrix& semantic,
                Hyperparams hp)
      : task_(task), hp_(hp) {
    hp_.validate();
    detail::require(image_features.rows() >= 1 && image_features.cols() >= 1,
                    "image feature matrix is empty");
    detail::require(text_features.rows() >= 1 && text_features.cols() >= 1,
                    "text feature matrix is empty");
    detail::require(semantic.rows() >= 1 && semantic.cols() >= 1,
                    "semantic matrix is empty");
    detail::require(image_features.rows() == text_features.rows() &&
                        image_features.rows() == semantic.rows(),
                    "instance counts differ among X, T, S");
    n_ = image_features.rows();
    p_ = image_features.cols();
    q_ = text_features.cols();
    c_ = semantic.cols();
    gxx_ = image_features.transpose() * image_features;
    gtt_ = text_features.transpose() * text_features;
    gxt_ = image_features.transpose() * text_features;
    gsx_ = semantic.transpose() * image_features;
    gst_ = semantic.transpose() * text_features;
    s_sq_ = semantic.squaredNorm();
  }

  Task task() const { return task_; }
  const Hyperparams& hp() const { return hp_; }
  Eigen::Index instance_count() const { return n_; }
  Eigen::Index image_dim() const { return p_; }
  Eigen::Index text_dim() const { return q_; }
  Eigen::Index class_count() const { return c_; }

  /// Objective value at (V, W). Always >= 0.
  double value(const Matrix& v, const Matrix& w) const {
    check_dims(v, w);
    // tr(A B') for same-shaped A, B
    const auto inner = [](const Matrix& a, const Matrix& b) {
      return a.cwiseProduct(b).sum();
    };
    const double vgv = inner(v * gxx_, v);
    const double wgw = inner(w * gtt_, w);
    // each data term is a squared norm; clamp the roundoff of the trace form
    const double corr =
        std::max(0.0, vgv - 2.0 * inner(v * gxt_, w) + wgw);
    const double reg_image = std::max(0.0, vgv - 2.0 * inner(gsx_, v) + s_sq_);
    const double reg_text = std::max(0.0, wgw - 2.0 * inner(gst_, w) + s_sq_);
    double regression = 0.0;
    switch (task_) {
      case Task::I2T: regression = reg_image; break;
      case Task::T2I: regression = reg_text; break;
      case Task::Unified: regression = reg_image + reg_text; break;
    }
    return hp_.lambda * corr + (1.0 - hp_.lambda) * regression +
           hp_.eta1 * v.squaredNorm() + hp_.eta2 * w.squaredNorm();
  }

  /// Exact derivative of value() with respect to V.
  Matrix gradient_v(const Matrix& v, const Matrix& w) const {
    check_dims(v, w);
    const double lambda = hp_.lambda;
    switch (task_) {
      case Task::I2T:
      case Task::Unified:
        return 2.0 * (v * gxx_ - lambda * w * gxt_.transpose() -
                      (1.0 - lambda) * gsx_ + hp_.eta1 * v);
      case Task::T2I:
        return 2.0 *
               (hp_.eta1 * v + lambda * (v * gxx_ - w * gxt_.transpose()));
    }
    return {};
  }

  /// Exact derivative of value() with respect to W.
  Matrix gradient_w(const Matrix& v, const Matrix& w) const {
    check_dims(v, w);
    const double lambda = hp_.lambda;
    switch (task_) {
      case Task::I2T:
        return 2.0 * (hp_.eta2 * w + lambda * (w * gtt_ - v * gxt_));
      case Task::T2I:
      case Task::Unified:
        return 2.0 * (w * gtt_ - lambda * v * gxt_ -
                      (1.0 - lambda) * gst_ + hp_.eta2 * w);
    }
    return {};
  }

 private:
  void check_dims(const Matrix& v, const Matrix& w) const {
    detail::require(v.rows() == c_ && v.cols() == p_,
                    "V must be " + std::to_string(c_) + "x" +
                        std::to_string(p_) + ", got " +
                        std::to_string(v.rows()) + "x" +
                        std::to_string(v.cols()));
    detail::require(w.rows() == c_ && w.cols() == q_,
                    "W must be " + std::to_string(c_) + "x" +
                        std::to_string(q_) + ", got " +
                        std::to_string(w.rows()) + "x" +
                        std::to_string(w.cols()));
  }

  Task task_;
  Hyperparams hp_;
  Eigen::Index n_ = 0, p_ = 0, q_ = 0, c_ = 0;
  Matrix gxx_, gtt_, gxt_, gsx_, gst_;
  double s_sq_ = 0.0;
};

inline double objective_value(const ProjectionPair& pair,
                              const TaskObjective& objective) {
  detail::require(pair.task == objective.task(),
                  "projection pair task does not match objective task");
  return objective.value(pair.V, pair.W);
}

inline std::pair<Matrix, Matrix> gradient(const ProjectionPair& pair,
                                          const TaskObjective& objective) {
  detail::require(pair.task == objective.task(),
                  "projection pair task does not match objective task");
  return {objective.gradient_v(pair.V, pair.W),
          objective.gradient_w(pair.V, pair.W)};
}

/// Structural symmetry between the two task objectives: evaluating I2T at
/// (V, W) on data (X, T) must equal evaluating T2I at (W, V) on the swapped
/// data (T, X) with eta1/eta2 exchanged.
inline bool task_symmetry_check(const Matrix& v, const Matrix& w,
                                const Matrix& image_features,
                                const Matrix& text_features,
                                const Matrix& semantic, const Hyperparams& hp,
                                double rel_tol = 1e-10) {
  const TaskObjective i2t(Task::I2T, image_features, text_features, semantic,
                          hp);
  const TaskObjective t2i(Task::T2I, text_features, image_features, semantic,
                          Hyperparams{hp.lambda, hp.eta2, hp.eta1});
  const double a = i2t.value(v, w);
  const double b = t2i.value(w, v);
  const double scale = std::max({std::abs(a), std::abs(b), 1e-300});
  return std::abs(a - b) <= rel_tol * scale;
}

}  // namespace mdcr
