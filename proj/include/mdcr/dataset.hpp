#pragma once

#include "mdcr/rng.hpp"
#include "mdcr/types.hpp"

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <map>
#include <string>
#include <utility>
#include <vector>

namespace mdcr {

/// A co-occurring image/text collection: row i of imageFeatures and row i of
/// textFeatures describe the same instance and share labels[i].
struct PairedDataset {
  Matrix image_features;  // n x p
  Matrix text_features;   // n x q
  LabelVector labels;     // n entries, each in [0, class_count)
  int class_count = 0;

  Eigen::Index size() const { return image_features.rows(); }

  /// Checks the pairing invariants. Training ingestion additionally requires
  /// every class id to be referenced; evaluation sets may miss classes.
  void validate(bool require_all_classes = true) const {
    detail::require(image_features.rows() >= 1 && image_features.cols() >= 1,
                    "image feature matrix is empty");
    detail::require(text_features.rows() >= 1 && text_features.cols() >= 1,
                    "text feature matrix is empty");
    detail::require(image_features.rows() == text_features.rows(),
                    "image/text instance counts differ (" +
                        std::to_string(image_features.rows()) + " vs " +
                        std::to_string(text_features.rows()) + ")");
    detail::require(static_cast<Eigen::Index>(labels.size()) ==
                        image_features.rows(),
                    "label count does not match instance count");
    detail::require(class_count >= 1, "class_count must be >= 1");
    detail::require(image_features.allFinite(),
                    "image features contain non-finite values");
    detail::require(text_features.allFinite(),
                    "text features contain non-finite values");
    std::vector<char> seen(static_cast<std::size_t>(class_count), 0);
    for (std::size_t i = 0; i < labels.size(); ++i) {
      detail::require(labels[i] >= 0 && labels[i] < class_count,
                      "label out of range at instance " + std::to_string(i) +
                          ": " + std::to_string(labels[i]));
      seen[static_cast<std::size_t>(labels[i])] = 1;
    }
    if (require_all_classes)
      for (int k = 0; k < class_count; ++k)
        detail::require(seen[static_cast<std::size_t>(k)] != 0,
                        "class " + std::to_string(k) + " has no instances");
  }
};

/// One-hot semantic matrix: row i is the standard basis vector for labels[i].
inline Matrix build_semantic_matrix(const LabelVector& labels,
                                    int class_count) {
  detail::require(class_count >= 1, "class_count must be >= 1");
  detail::require(!labels.empty(), "empty label vector");
  Matrix s = Matrix::Zero(static_cast<Eigen::Index>(labels.size()),
                          class_count);
  for (std::size_t i = 0; i < labels.size(); ++i) {
    detail::require(labels[i] >= 0 && labels[i] < class_count,
                    "label out of range at instance " + std::to_string(i) +
                        ": " + std::to_string(labels[i]));
    s(static_cast<Eigen::Index>(i), labels[i]) = 1.0;
  }
  return s;
}

/// Canonical class id -> original label id, as recorded at ingestion.
struct LabelMapping {
  std::vector<long long> originals;

  int class_count() const { return static_cast<int>(originals.size()); }

  int to_class(long long original) const {
    const auto it =
        std::lower_bound(originals.begin(), originals.end(), original);
    detail::require(it != originals.end() && *it == original,
                    "label " + std::to_string(original) +
                        " was not present in the training label set");
    return static_cast<int>(it - originals.begin());
  }
};

/// Canonicalizes arbitrary integer labels to 0-based contiguous class ids.
/// Distinct original values are assigned ids in ascending order.
inline std::pair<LabelVector, LabelMapping> remap_labels(
    const std::vector<long long>& raw) {
  detail::require(!raw.empty(), "empty label vector");
  LabelMapping mapping;
  mapping.originals = raw;
  std::sort(mapping.originals.begin(), mapping.originals.end());
  mapping.originals.erase(
      std::unique(mapping.originals.begin(), mapping.originals.end()),
      mapping.originals.end());
  LabelVector labels(raw.size());
  for (std::size_t i = 0; i < raw.size(); ++i)
    labels[i] = mapping.to_class(raw[i]);
  return {std::move(labels), std::move(mapping)};
}

inline LabelVector apply_label_mapping(const std::vector<long long>& raw,
                                       const LabelMapping& mapping) {
  LabelVector labels(raw.size());
  for (std::size_t i = 0; i < raw.size(); ++i)
    labels[i] = mapping.to_class(raw[i]);
  return labels;
}

/// Per-column centering/scaling statistics. std is the population standard
/// deviation (divide by n) and is kept at 0 for constant columns, which are
/// centered but never scaled.
struct ZscoreStats {
  Vector mean;
  Vector std;
};

inline std::pair<Matrix, ZscoreStats> zscore_fit(const Matrix& m) {
  detail::require(m.rows() >= 1 && m.cols() >= 1, "empty matrix");
  ZscoreStats stats;
  stats.mean = m.colwise().mean();
  Matrix centered = m.rowwise() - stats.mean.transpose();
  stats.std = (centered.array().square().colwise().sum() /
               static_cast<double>(m.rows()))
                  .sqrt()
                  .matrix()
                  .transpose();
  for (Eigen::Index j = 0; j < centered.cols(); ++j)
    if (stats.std(j) > 0.0) centered.col(j) /= stats.std(j);
  return {std::move(centered), std::move(stats)};
}

inline Matrix zscore_apply(const Matrix& m, const ZscoreStats& stats) {
  detail::require(stats.mean.size() == m.cols() &&
                      stats.std.size() == m.cols(),
                  "z-score stats dimension mismatch: matrix has " +
                      std::to_string(m.cols()) + " columns, stats have " +
                      std::to_string(stats.mean.size()));
  Matrix out = m.rowwise() - stats.mean.transpose();
  for (Eigen::Index j = 0; j < out.cols(); ++j)
    if (stats.std(j) > 0.0) out.col(j) /= stats.std(j);
  return out;
}

/// Parameters for the synthetic paired-data generator.
struct SyntheticSpec {
  int classes = 4;
  int per_class = 25;
  int image_dim = 12;
  int text_dim = 9;
  double separation = 10.0;
  double noise = 0.2;
  std::uint64_t seed = 0;
};

namespace detail {

// Class centers of norm `separation`. When the dimension allows, directions
// are orthonormalized (modified Gram-Schmidt) so distinct classes sit at
// pairwise distance separation*sqrt(2); otherwise unit Gaussian directions.
inline Matrix class_centers(int classes, int dim, double separation,
                            GaussianSampler& gauss) {
  Matrix centers(classes, dim);
  for (int k = 0; k < classes; ++k)
    for (int j = 0; j < dim; ++j) centers(k, j) = gauss();
  for (int k = 0; k < classes; ++k) {
    if (dim >= classes)
      for (int j = 0; j < k; ++j)
        centers.row(k) -= centers.row(k).dot(centers.row(j)) * centers.row(j);
    const double norm = centers.row(k).norm();
    require(norm > 1e-10, "degenerate center draw; use another seed");
    centers.row(k) /= norm;
  }
  return separation * centers;
}

}  // namespace detail

/// Draws a labeled paired dataset around class-specific centers with
/// isotropic Gaussian noise. Pure function of its arguments: the same spec
/// (including seed) yields a bit-identical dataset.
inline PairedDataset make_synthetic(const SyntheticSpec& spec) {
  detail::require(spec.classes >= 1, "classes must be >= 1");
  detail::require(spec.per_class >= 1, "per_class must be >= 1");
  detail::require(spec.image_dim >= 1 && spec.text_dim >= 1,
                  "feature dimensions must be >= 1");
  detail::require(spec.separation >= 0.0 && std::isfinite(spec.separation),
                  "separation must be finite and >= 0");
  detail::require(spec.noise >= 0.0 && std::isfinite(spec.noise),
                  "noise must be finite and >= 0");
  GaussianSampler gauss(spec.seed);
  const Matrix image_centers =
      detail::class_centers(spec.classes, spec.image_dim, spec.separation, gauss);
  const Matrix text_centers =
      detail::class_centers(spec.classes, spec.text_dim, spec.separation, gauss);
  const int n = spec.classes * spec.per_class;
  PairedDataset data;
  data.image_features.resize(n, spec.image_dim);
  data.text_features.resize(n, spec.text_dim);
  data.labels.resize(static_cast<std::size_t>(n));
  data.class_count = spec.classes;
  int row = 0;
  for (int k = 0; k < spec.classes; ++k) {
    for (int r = 0; r < spec.per_class; ++r, ++row) {
      for (int j = 0; j < spec.image_dim; ++j)
        data.image_features(row, j) = image_centers(k, j) + spec.noise * gauss();
      for (int j = 0; j < spec.text_dim; ++j)
        data.text_features(row, j) = text_centers(k, j) + spec.noise * gauss();
      data.labels[static_cast<std::size_t>(row)] = k;
    }
  }
  return data;
}

/// Stratified train/test partition.
struct SplitResult {
  PairedDataset train;
  PairedDataset test;
  std::vector<int> train_indices;  // ascending positions into the input
  std::vector<int> test_indices;
};

namespace detail {

inline PairedDataset take_rows(const PairedDataset& data,
                               const std::vector<int>& indices) {
  PairedDataset out;
  out.image_features.resize(static_cast<Eigen::Index>(indices.size()),
                            data.image_features.cols());
  out.text_features.resize(static_cast<Eigen::Index>(indices.size()),
                           data.text_features.cols());
  out.labels.resize(indices.size());
  out.class_count = data.class_count;
  for (std::size_t i = 0; i < indices.size(); ++i) {
    out.image_features.row(static_cast<Eigen::Index>(i)) =
        data.image_features.row(indices[i]);
    out.text_features.row(static_cast<Eigen::Index>(i)) =
        data.text_features.row(indices[i]);
    out.labels[i] = data.labels[static_cast<std::size_t>(indices[i])];
  }
  return out;
}

}  // namespace detail

/// Splits per class: round(train_fraction * class size) instances go to the
/// train side, the rest to test, both sides keeping at least one instance per
/// class. Deterministic under seed; output rows keep the input's relative
/// order.
inline SplitResult split(const PairedDataset& data, double train_fraction,
                         std::uint64_t seed) {
  data.validate();
  detail::require(train_fraction > 0.0 && train_fraction < 1.0,
                  "train_fraction must lie strictly between 0 and 1");
  std::vector<std::vector<int>> by_class(
      static_cast<std::size_t>(data.class_count));
  for (std::size_t i = 0; i < data.labels.size(); ++i)
    by_class[static_cast<std::size_t>(data.labels[i])].push_back(
        static_cast<int>(i));
  std::mt19937_64 gen(seed);
  SplitResult result;
  for (int k = 0; k < data.class_count; ++k) {
    auto& members = by_class[static_cast<std::size_t>(k)];
    const auto m = static_cast<long long>(members.size());
    detail::require(m >= 2, "class " + std::to_string(k) + " has " +
                                std::to_string(m) +
                                " instance(s); need >= 2 to split");
    long long n_train = std::llround(train_fraction * static_cast<double>(m));
    n_train = std::clamp(n_train, 1LL, m - 1);
    deterministic_shuffle(members, gen);
    result.train_indices.insert(result.train_indices.end(), members.begin(),
                                members.begin() + n_train);
    result.test_indices.insert(result.test_indices.end(),
                               members.begin() + n_train, members.end());
  }
  std::sort(result.train_indices.begin(), result.train_indices.end());
  std::sort(result.test_indices.begin(), result.test_indices.end());
  result.train = detail::take_rows(data, result.train_indices);
  result.test = detail::take_rows(data, result.test_indices);
  return result;
}

}  // namespace mdcr
