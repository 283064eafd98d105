#pragma once

#include "mdcr/dataset.hpp"
#include "mdcr/matrix_io.hpp"
#include "mdcr/objective.hpp"
#include "mdcr/types.hpp"

#include <cstdlib>
#include <fstream>
#include <map>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

namespace mdcr {

/// A trained projection pair plus everything needed to apply it to new data:
/// the hyperparameters it was trained with, the label canonicalization, and
/// the feature-normalization statistics when z-scoring was enabled.
struct Model {
  ProjectionPair pair;
  Hyperparams hp;
  double mu = 0.02;
  double epsilon = 1e-4;
  LabelMapping label_map;
  std::optional<ZscoreStats> image_stats;
  std::optional<ZscoreStats> text_stats;
};

/// Model file layout: a key-value text header terminated by an "end" line,
/// followed by V then W in the binary matrix format. All doubles are printed
/// with 17 significant digits so a save/load round trip is exact.
///
///   MDCRMODEL1
///   task: i2t
///   classes: 10
///   image_dim: 128
///   text_dim: 10
///   lambda: 0.1
///   eta1: 0.5
///   eta2: 0.5
///   mu: 0.02
///   epsilon: 0.0001
///   label_map: 1 2 3 ... (original label per class id)
///   zscore: 0|1
///   [image_mean/image_std/text_mean/text_std: space-separated doubles]
///   end
inline constexpr const char* kModelMagic = "MDCRMODEL1";

namespace detail {

inline std::string vector_to_line(const Vector& v) {
  std::string out;
  for (Eigen::Index i = 0; i < v.size(); ++i) {
    if (i) out += ' ';
    out += format_double(v(i));
  }
  return out;
}

inline Vector vector_from_line(const std::string& line,
                               const std::string& context) {
  std::vector<double> values;
  const char* p = line.c_str();
  while (*p) {
    char* end = nullptr;
    const double v = std::strtod(p, &end);
    if (end == p) break;
    values.push_back(v);
    p = end;
  }
  if (values.empty()) io_fail(context, "expected a list of numbers");
  return Eigen::Map<const Vector>(values.data(),
                                  static_cast<Eigen::Index>(values.size()));
}

}  // namespace detail

inline void save_model(const Model& model, const std::string& path) {
  detail::require(model.pair.V.rows() >= 1 && model.pair.W.rows() >= 1,
                  "model has empty projections");
  detail::require(model.pair.V.rows() == model.pair.W.rows(),
                  "V and W disagree on class count");
  std::ofstream out(path, std::ios::binary);
  if (!out) detail::io_fail(path, "cannot open for writing");
  out << kModelMagic << '\n';
  out << "task: " << to_string(model.pair.task) << '\n';
  out << "classes: " << model.pair.V.rows() << '\n';
  out << "image_dim: " << model.pair.V.cols() << '\n';
  out << "text_dim: " << model.pair.W.cols() << '\n';
  out << "lambda: " << detail::format_double(model.hp.lambda) << '\n';
  out << "eta1: " << detail::format_double(model.hp.eta1) << '\n';
  out << "eta2: " << detail::format_double(model.hp.eta2) << '\n';
  out << "mu: " << detail::format_double(model.mu) << '\n';
  out << "epsilon: " << detail::format_double(model.epsilon) << '\n';
  if (!model.label_map.originals.empty()) {
    out << "label_map:";
    for (long long original : model.label_map.originals)
      out << ' ' << original;
    out << '\n';
  }
  const bool zscore = model.image_stats.has_value();
  detail::require(zscore == model.text_stats.has_value(),
                  "z-score stats must be present for both modalities or none");
  out << "zscore: " << (zscore ? 1 : 0) << '\n';
  if (zscore) {
    out << "image_mean: " << detail::vector_to_line(model.image_stats->mean) << '\n';
    out << "image_std: " << detail::vector_to_line(model.image_stats->std) << '\n';
    out << "text_mean: " << detail::vector_to_line(model.text_stats->mean) << '\n';
    out << "text_std: " << detail::vector_to_line(model.text_stats->std) << '\n';
  }
  out << "end\n";
  write_matrix_binary(out, model.pair.V);
  write_matrix_binary(out, model.pair.W);
  out.flush();
  if (!out) detail::io_fail(path, "write failed");
}

inline Model load_model(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) detail::io_fail(path, "cannot open");
  std::string line;
  if (!std::getline(in, line) || detail::strip_cr(line) != kModelMagic)
    detail::io_fail(path, "not a model file (missing " +
                              std::string(kModelMagic) + " header)");
  std::map<std::string, std::string> fields;
  bool saw_end = false;
  while (std::getline(in, line)) {
    line = detail::strip_cr(line);
    if (line == "end") {
      saw_end = true;
      break;
    }
    const auto colon = line.find(": ");
    if (colon == std::string::npos)
      detail::io_fail(path, "malformed header line '" + line + "'");
    fields[line.substr(0, colon)] = line.substr(colon + 2);
  }
  if (!saw_end) detail::io_fail(path, "truncated header (no end line)");

  const auto field = [&](const std::string& key) -> const std::string& {
    const auto it = fields.find(key);
    if (it == fields.end())
      detail::io_fail(path, "missing header field '" + key + "'");
    return it->second;
  };
  const auto num = [&](const std::string& key) {
    const std::string& text = field(key);
    char* end = nullptr;
    const double v = std::strtod(text.c_str(), &end);
    if (end == text.c_str())
      detail::io_fail(path, "header field '" + key + "' is not a number: '" +
                                text + "'");
    return v;
  };

  Model model;
  model.pair.task = task_from_string(field("task"));
  model.hp.lambda = num("lambda");
  model.hp.eta1 = num("eta1");
  model.hp.eta2 = num("eta2");
  model.hp.validate();
  model.mu = num("mu");
  model.epsilon = num("epsilon");
  if (fields.count("label_map")) {
    std::istringstream ss(fields.at("label_map"));
    long long v;
    while (ss >> v) model.label_map.originals.push_back(v);
  }
  if (std::strtol(field("zscore").c_str(), nullptr, 10) != 0) {
    ZscoreStats image, text;
    image.mean = detail::vector_from_line(field("image_mean"), path);
    image.std = detail::vector_from_line(field("image_std"), path);
    text.mean = detail::vector_from_line(field("text_mean"), path);
    text.std = detail::vector_from_line(field("text_std"), path);
    model.image_stats = std::move(image);
    model.text_stats = std::move(text);
  }

  model.pair.V = read_matrix_binary(in, path + " (V)");
  model.pair.W = read_matrix_binary(in, path + " (W)");
  const auto classes = static_cast<Eigen::Index>(std::strtoll(field("classes").c_str(), nullptr, 10));
  const auto image_dim = static_cast<Eigen::Index>(std::strtoll(field("image_dim").c_str(), nullptr, 10));
  const auto text_dim = static_cast<Eigen::Index>(std::strtoll(field("text_dim").c_str(), nullptr, 10));
  if (model.pair.V.rows() != classes || model.pair.V.cols() != image_dim ||
      model.pair.W.rows() != classes || model.pair.W.cols() != text_dim)
    detail::io_fail(path, "projection dimensions disagree with header");
  if (!model.label_map.originals.empty() &&
      model.label_map.class_count() != static_cast<int>(classes))
    detail::io_fail(path, "label map size disagrees with class count");
  if (model.image_stats &&
      (model.image_stats->mean.size() != image_dim ||
       model.text_stats->mean.size() != text_dim))
    detail::io_fail(path, "z-score stats disagree with feature dimensions");
  return model;
}

}  // namespace mdcr
