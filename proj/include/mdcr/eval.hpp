#pragma once

#include "mdcr/matrix_io.hpp"
#include "mdcr/retrieval.hpp"
#include "mdcr/types.hpp"

#include <nlohmann/json.hpp>

#include <algorithm>
#include <cmath>
#include <fstream>
#include <map>
#include <string>
#include <utility>
#include <vector>

namespace mdcr {

/// Average precision over a full ranking:
///
///   AP = sum_k P(k) * rel(k) / sum_k rel(k)
///
/// with P(k) the precision of the top-k prefix. A query with no relevant
/// gallery item gets AP = 0 and still counts toward the mean; dropping such
/// queries would silently inflate mAP.
inline double average_precision(const std::vector<int>& relevance) {
  detail::require(!relevance.empty(), "empty relevance sequence");
  long long hits = 0;
  double sum = 0.0;
  for (std::size_t k = 0; k < relevance.size(); ++k) {
    if (relevance[k] != 0) {
      ++hits;
      sum += static_cast<double>(hits) / static_cast<double>(k + 1);
    }
  }
  if (hits == 0) return 0.0;
  return sum / static_cast<double>(hits);
}

struct EvalReport {
  double map = 0.0;
  std::vector<double> per_query_ap;
  std::map<int, double> per_class_map;  // query label -> mean AP
  std::vector<std::pair<double, double>> pr_curve;  // (recall, precision)
};

/// mAP plus per-query and per-class breakdowns. The PR curve field is left
/// empty; see pr_curve().
inline EvalReport mean_ap(const std::vector<RankedResult>& results) {
  detail::require(!results.empty(), "no queries to evaluate");
  EvalReport report;
  report.per_query_ap.reserve(results.size());
  std::map<int, std::pair<double, int>> per_class;
  double total = 0.0;
  for (const auto& r : results) {
    const double ap = average_precision(r.relevance);
    report.per_query_ap.push_back(ap);
    total += ap;
    auto& [class_sum, class_count] = per_class[r.query_label];
    class_sum += ap;
    ++class_count;
  }
  report.map = total / static_cast<double>(results.size());
  for (const auto& [label, acc] : per_class)
    report.per_class_map[label] = acc.first / acc.second;
  return report;
}

/// Max-interpolated precision averaged over queries at `points` evenly
/// spaced recall levels in [0, 1]. points = 11 gives the standard 11-point
/// curve. Queries with no relevant item contribute zero precision.
inline std::vector<std::pair<double, double>> pr_curve(
    const std::vector<RankedResult>& results, int points = 11) {
  detail::require(points >= 2, "need at least 2 recall levels");
  detail::require(!results.empty(), "no queries to evaluate");
  std::vector<double> precision_sum(static_cast<std::size_t>(points), 0.0);
  for (const auto& r : results) {
    const auto& rel = r.relevance;
    long long total_rel = 0;
    for (int v : rel) total_rel += v;
    if (total_rel == 0) continue;  // contributes zero at every level
    // interp[i]: max precision among prefixes whose recall >= level i
    std::vector<double> interp(static_cast<std::size_t>(points), 0.0);
    long long hits = 0;
    for (std::size_t k = 0; k < rel.size(); ++k) {
      if (rel[k] == 0) continue;
      ++hits;
      const double precision =
          static_cast<double>(hits) / static_cast<double>(k + 1);
      const double recall =
          static_cast<double>(hits) / static_cast<double>(total_rel);
      // levels covered: all i with level_i <= recall
      const auto covered = static_cast<std::size_t>(
          std::floor(recall * (points - 1) + 1e-12));
      for (std::size_t i = 0; i <= covered && i < interp.size(); ++i)
        interp[i] = std::max(interp[i], precision);
    }
    for (std::size_t i = 0; i < interp.size(); ++i)
      precision_sum[i] += interp[i];
  }
  std::vector<std::pair<double, double>> curve;
  curve.reserve(static_cast<std::size_t>(points));
  for (int i = 0; i < points; ++i)
    curve.emplace_back(static_cast<double>(i) / (points - 1),
                       precision_sum[static_cast<std::size_t>(i)] /
                           static_cast<double>(results.size()));
  return curve;
}

/// mean_ap + pr_curve in one report.
inline EvalReport evaluate(const std::vector<RankedResult>& results,
                           int points = 11) {
  EvalReport report = mean_ap(results);
  report.pr_curve = pr_curve(results, points);
  return report;
}

inline nlohmann::json eval_report_json(const EvalReport& report) {
  nlohmann::json j;
  j["mAP"] = report.map;
  j["perQueryAP"] = report.per_query_ap;
  nlohmann::json per_class = nlohmann::json::object();
  for (const auto& [label, value] : report.per_class_map)
    per_class[std::to_string(label)] = value;
  j["perClassMAP"] = per_class;
  nlohmann::json curve = nlohmann::json::array();
  for (const auto& [recall, precision] : report.pr_curve)
    curve.push_back({recall, precision});
  j["prCurve"] = curve;
  return j;
}

inline void write_pr_csv(const std::vector<std::pair<double, double>>& curve,
                         const std::string& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) detail::io_fail(path, "cannot open for writing");
  out << "recall,precision\n";
  for (const auto& [recall, precision] : curve)
    out << detail::format_double(recall) << ','
        << detail::format_double(precision) << '\n';
  out.flush();
  if (!out) detail::io_fail(path, "write failed");
}

}  // namespace mdcr
