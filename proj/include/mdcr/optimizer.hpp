#pragma once

#include "mdcr/dataset.hpp"
#include "mdcr/objective.hpp"
#include "mdcr/rng.hpp"
#include "mdcr/types.hpp"

#include <cmath>
#include <cstdint>
#include <sstream>
#include <string>
#include <utility>
#include <vector>

namespace mdcr {

enum class InitPolicy { Zeros, SeededGaussian };

/// Everything that pins down one training run. Identical data plus identical
/// config (including init seed) reproduce the run bit-for-bit.
struct TrainConfig {
  Hyperparams hp;
  double mu = 0.02;              // fixed step size
  double epsilon = 1e-4;         // inner loop stops once a step improves by <= epsilon (absolute)
  int max_outer_iters = 100;
  int max_inner_iters = 500;
  double outer_tolerance = 1e-6; // relative objective change across consecutive outer iterations
  InitPolicy init = InitPolicy::Zeros;
  double init_scale = 0.01;
  std::uint64_t init_seed = 0;
  bool halve_on_reject = false;  // retry a rejected step with half the step size
  double divergence_factor = 1e3;

  void validate() const {
    hp.validate();
    detail::require(mu > 0.0 && std::isfinite(mu), "mu must be > 0");
    detail::require(epsilon > 0.0 && std::isfinite(epsilon),
                    "epsilon must be > 0");
    detail::require(max_outer_iters >= 1, "max_outer_iters must be >= 1");
    detail::require(max_inner_iters >= 1, "max_inner_iters must be >= 1");
    detail::require(outer_tolerance >= 0.0 && std::isfinite(outer_tolerance),
                    "outer_tolerance must be >= 0");
    detail::require(init_scale > 0.0 && std::isfinite(init_scale),
                    "init_scale must be > 0");
    detail::require(divergence_factor > 1.0, "divergence_factor must be > 1");
  }
};

enum class StopReason { Converged, MaxIters, StepRejected };

inline const char* to_string(StopReason reason) {
  switch (reason) {
    case StopReason::Converged: return "Converged";
    case StopReason::MaxIters: return "MaxIters";
    case StopReason::StepRejected: return "StepRejected";
  }
  return "unknown";
}

enum class Block { V, W };

inline const char* to_string(Block block) {
  return block == Block::V ? "V" : "W";
}

/// One accepted descent step. The sequence of objective values over a report's
/// trace is non-increasing.
struct TraceEntry {
  int outer = 0;
  Block block = Block::V;
  int inner = 0;
  double objective = 0.0;
};

struct TrainReport {
  ProjectionPair final_pair;
  std::vector<TraceEntry> trace;         // accepted steps only
  StopReason stop_reason = StopReason::MaxIters;
  double initial_objective = 0.0;
  double final_objective = 0.0;
  int outer_iterations = 0;
  std::vector<std::string> diagnostics;  // rejected-step notes
};

struct StepResult {
  Matrix updated;
  double new_objective = 0.0;
};

/// One gradient step on a single block with the other held fixed:
/// updated = current - mu * (block gradient), evaluated at the new point.
inline StepResult step_block(const Matrix& current, const Matrix& fixed,
                             Block block, const TaskObjective& objective,
                             double mu) {
  detail::require(mu >= 0.0 && std::isfinite(mu), "mu must be finite and >= 0");
  if (block == Block::V) {
    Matrix updated = current - mu * objective.gradient_v(current, fixed);
    const double value = objective.value(updated, fixed);
    return {std::move(updated), value};
  }
  Matrix updated = current - mu * objective.gradient_w(fixed, current);
  const double value = objective.value(fixed, updated);
  return {std::move(updated), value};
}

/// Alternating block gradient descent.
///
/// Each outer iteration runs two inner loops: repeated fixed-step descent on
/// V with W held fixed until the per-step improvement drops to epsilon, then
/// the same on W. A step that would increase the objective (or produce a
/// non-finite iterate) is rejected, leaving the iterate untouched, and ends
/// its inner loop. Outer iterations stop once the relative objective change
/// falls below outer_tolerance, or at max_outer_iters.
///
/// StepRejected is reported only when an entire outer iteration rejects every
/// proposed step and at least one rejection overshot past
/// divergence_factor * initial objective (or went non-finite) — the step size
/// is too large for the data scale to make any progress.
inline TrainReport train(const Matrix& image_features,
                         const Matrix& text_features, const Matrix& semantic,
                         Task task, const TrainConfig& cfg) {
  cfg.validate();
  const TaskObjective objective(task, image_features, text_features, semantic,
                                cfg.hp);
  const auto c = objective.class_count();
  const auto p = objective.image_dim();
  const auto q = objective.text_dim();

  TrainReport report;
  report.final_pair.task = task;
  Matrix v = Matrix::Zero(c, p);
  Matrix w = Matrix::Zero(c, q);
  if (cfg.init == InitPolicy::SeededGaussian) {
    GaussianSampler gauss(cfg.init_seed);
    for (Eigen::Index i = 0; i < c; ++i)
      for (Eigen::Index j = 0; j < p; ++j) v(i, j) = cfg.init_scale * gauss();
    for (Eigen::Index i = 0; i < c; ++i)
      for (Eigen::Index j = 0; j < q; ++j) w(i, j) = cfg.init_scale * gauss();
  }

  double current = objective.value(v, w);
  detail::require(std::isfinite(current),
                  "objective is non-finite at initialization; check feature "
                  "scaling");
  report.initial_objective = current;
  const double divergence_limit = cfg.divergence_factor * current;

  const auto reject_note = [&](int outer, Block block, int inner,
                               double proposed) {
    std::ostringstream msg;
    msg << "outer " << outer << " " << to_string(block) << " inner " << inner
        << ": step rejected (objective " << proposed << " vs " << current
        << ")";
    report.diagnostics.push_back(msg.str());
  };

  StopReason stop = StopReason::MaxIters;
  int outer = 0;
  while (outer < cfg.max_outer_iters) {
    ++outer;
    const double outer_start = current;
    int accepted_this_outer = 0;
    bool divergent_rejection = false;
    for (Block block : {Block::V, Block::W}) {
      double mu = cfg.mu;
      for (int inner = 1; inner <= cfg.max_inner_iters; ++inner) {
        Matrix& target = block == Block::V ? v : w;
        const Matrix& fixed = block == Block::V ? w : v;
        StepResult step = step_block(target, fixed, block, objective, mu);
        const bool finite =
            std::isfinite(step.new_objective) && step.updated.allFinite();
        if (!finite || step.new_objective > current) {
          if (!finite || step.new_objective > divergence_limit)
            divergent_rejection = true;
          reject_note(outer, block, inner, step.new_objective);
          if (cfg.halve_on_reject) {
            mu *= 0.5;
            continue;
          }
          break;
        }
        const double improvement = current - step.new_objective;
        target = std::move(step.updated);
        current = step.new_objective;
        report.trace.push_back({outer, block, inner, current});
        ++accepted_this_outer;
        if (improvement <= cfg.epsilon) break;
      }
    }
    if (accepted_this_outer == 0 && divergent_rejection) {
      stop = StopReason::StepRejected;
      break;
    }
    const double rel_change =
        std::abs(outer_start - current) / std::max(1e-12, std::abs(outer_start));
    if (rel_change <= cfg.outer_tolerance) {
      stop = StopReason::Converged;
      break;
    }
  }

  report.stop_reason = stop;
  report.outer_iterations = outer;
  report.final_objective = current;
  report.final_pair.V = std::move(v);
  report.final_pair.W = std::move(w);
  return report;
}

inline TrainReport train(const PairedDataset& data, Task task,
                         const TrainConfig& cfg) {
  data.validate();
  const Matrix semantic = build_semantic_matrix(data.labels, data.class_count);
  return train(data.image_features, data.text_features, semantic, task, cfg);
}

/// Named datasets with published hyperparameter settings.
enum class DatasetPreset { Wikipedia, PascalSentence, InriaWebsearch, Custom };

inline const char* to_string(DatasetPreset preset) {
  switch (preset) {
    case DatasetPreset::Wikipedia: return "wikipedia";
    case DatasetPreset::PascalSentence: return "pascal-sentence";
    case DatasetPreset::InriaWebsearch: return "inria-websearch";
    case DatasetPreset::Custom: return "custom";
  }
  return "unknown";
}

inline DatasetPreset preset_from_string(std::string_view name) {
  if (name == "wikipedia") return DatasetPreset::Wikipedia;
  if (name == "pascal-sentence") return DatasetPreset::PascalSentence;
  if (name == "inria-websearch") return DatasetPreset::InriaWebsearch;
  if (name == "custom") return DatasetPreset::Custom;
  throw ValidationError("unknown preset '" + std::string(name) + "'");
}

/// Published settings per dataset and task (public Wikipedia features use
/// lambda 0.1 for I2T and 0.5 for T2I; the other benchmarks use 0.5
/// throughout). Custom falls back to lambda 0.5, eta1 = eta2 = 0.5.
inline TrainConfig default_config(Task task, DatasetPreset preset) {
  TrainConfig cfg;
  cfg.hp = Hyperparams{0.5, 0.5, 0.5};
  cfg.mu = 0.02;
  cfg.epsilon = 1e-4;
  if (preset == DatasetPreset::Wikipedia && task == Task::I2T)
    cfg.hp.lambda = 0.1;
  return cfg;
}

}  // namespace mdcr
