#pragma once

#include "mdcr/objective.hpp"
#include "mdcr/types.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <string>
#include <utility>
#include <vector>

namespace mdcr {

enum class Modality { Image, Text };

/// Instances mapped into the shared c-dimensional subspace.
struct EmbeddedSet {
  Matrix points;  // m x c, one projected instance per row
  Modality source = Modality::Image;
  LabelVector labels;  // may be empty when relevance is not needed
};

/// Applies a projection: row i of the result is features_row_i mapped by M,
/// i.e. features * M'.
inline Matrix project(const Matrix& features, const Matrix& projection) {
  detail::require(features.cols() == projection.cols(),
                  "projection expects " + std::to_string(projection.cols()) +
                      "-dimensional features, got " +
                      std::to_string(features.cols()));
  return features * projection.transpose();
}

/// One query's full-gallery ranking. `ordering` holds gallery indices sorted
/// by ascending Euclidean distance (ties broken by ascending index), and
/// `relevance[r]` flags whether the item at rank r shares the query's class.
struct RankedResult {
  int query_index = 0;
  int query_label = 0;
  std::vector<int> ordering;
  std::vector<double> distances;
  std::vector<int> relevance;
};

inline RankedResult rank(const Eigen::RowVectorXd& query,
                         const EmbeddedSet& gallery, int query_label,
                         int query_index = 0) {
  detail::require(gallery.points.rows() >= 1, "empty gallery");
  detail::require(query.cols() == gallery.points.cols(),
                  "query dimension " + std::to_string(query.cols()) +
                      " does not match gallery dimension " +
                      std::to_string(gallery.points.cols()));
  detail::require(gallery.labels.size() ==
                      static_cast<std::size_t>(gallery.points.rows()),
                  "gallery labels missing or mismatched");
  const auto m = gallery.points.rows();
  // squared distances are enough for ordering; roots only for reporting
  std::vector<std::pair<double, int>> order(static_cast<std::size_t>(m));
  for (Eigen::Index i = 0; i < m; ++i)
    order[static_cast<std::size_t>(i)] = {
        (gallery.points.row(i) - query).squaredNorm(), static_cast<int>(i)};
  std::sort(order.begin(), order.end());
  RankedResult result;
  result.query_index = query_index;
  result.query_label = query_label;
  result.ordering.reserve(order.size());
  result.distances.reserve(order.size());
  result.relevance.reserve(order.size());
  for (const auto& [d2, idx] : order) {
    result.ordering.push_back(idx);
    result.distances.push_back(std::sqrt(d2));
    result.relevance.push_back(
        gallery.labels[static_cast<std::size_t>(idx)] == query_label ? 1 : 0);
  }
  return result;
}

/// Ranks every query against the full cross-modal gallery. For I2T the
/// queries are image features projected by V and the gallery text features
/// projected by W; T2I swaps the roles. The paired counterpart of each query
/// stays in the gallery, matching the standard protocol.
inline std::vector<RankedResult> cross_retrieve(
    const ProjectionPair& model, const Matrix& query_features,
    const LabelVector& query_labels, const Matrix& gallery_features,
    const LabelVector& gallery_labels, Task direction) {
  detail::require(direction != Task::Unified,
                  "retrieval direction must be i2t or t2i");
  detail::require(query_labels.size() ==
                      static_cast<std::size_t>(query_features.rows()),
                  "query label count does not match query count");
  detail::require(gallery_labels.size() ==
                      static_cast<std::size_t>(gallery_features.rows()),
                  "gallery label count does not match gallery size");
  const Matrix& query_proj =
      direction == Task::I2T ? model.V : model.W;
  const Matrix& gallery_proj =
      direction == Task::I2T ? model.W : model.V;
  EmbeddedSet gallery;
  gallery.points = project(gallery_features, gallery_proj);
  gallery.source = direction == Task::I2T ? Modality::Text : Modality::Image;
  gallery.labels = gallery_labels;
  const Matrix queries = project(query_features, query_proj);
  std::vector<RankedResult> results;
  results.reserve(static_cast<std::size_t>(queries.rows()));
  for (Eigen::Index i = 0; i < queries.rows(); ++i)
    results.push_back(rank(queries.row(i), gallery,
                           query_labels[static_cast<std::size_t>(i)],
                           static_cast<int>(i)));
  return results;
}

}  // namespace mdcr
