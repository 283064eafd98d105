#pragma once

#include "mdcr/mdcr.hpp"

#include <cstdlib>
#include <filesystem>
#include <random>
#include <string>
#include <vector>

namespace testutil {

namespace fs = std::filesystem;

/// Unique scratch directory, removed on destruction.
struct TempDir {
  fs::path path;

  TempDir() {
    std::string tmpl =
        (fs::temp_directory_path() / "mdcr_test_XXXXXX").string();
    path = ::mkdtemp(tmpl.data());
  }
  ~TempDir() {
    std::error_code ec;
    fs::remove_all(path, ec);
  }
  TempDir(const TempDir&) = delete;
  TempDir& operator=(const TempDir&) = delete;

  std::string file(const std::string& name) const {
    return (path / name).string();
  }
};

inline double uniform_pm1(std::mt19937_64& gen) {
  return (static_cast<double>(gen() >> 11) * 0x1.0p-53) * 2.0 - 1.0;
}

inline mdcr::Matrix random_matrix(Eigen::Index rows, Eigen::Index cols,
                                  std::mt19937_64& gen) {
  mdcr::Matrix m(rows, cols);
  for (Eigen::Index i = 0; i < rows; ++i)
    for (Eigen::Index j = 0; j < cols; ++j) m(i, j) = uniform_pm1(gen);
  return m;
}

inline mdcr::LabelVector random_labels(Eigen::Index n, int classes,
                                       std::mt19937_64& gen) {
  mdcr::LabelVector labels(static_cast<std::size_t>(n));
  for (auto& label : labels)
    label = static_cast<int>(gen() % static_cast<std::uint64_t>(classes));
  return labels;
}

/// A full random problem instance with entries in [-1, 1].
struct Instance {
  mdcr::Matrix x, t, s, v, w;
  mdcr::LabelVector labels;
  mdcr::Hyperparams hp;
};

inline Instance random_instance(Eigen::Index n, Eigen::Index p,
                                Eigen::Index q, int c, std::mt19937_64& gen,
                                bool random_hp = true) {
  Instance inst;
  inst.x = random_matrix(n, p, gen);
  inst.t = random_matrix(n, q, gen);
  inst.labels = random_labels(n, c, gen);
  inst.s = mdcr::build_semantic_matrix(inst.labels, c);
  inst.v = random_matrix(c, p, gen);
  inst.w = random_matrix(c, q, gen);
  if (random_hp) {
    inst.hp.lambda = (uniform_pm1(gen) + 1.0) / 2.0;
    inst.hp.eta1 = (uniform_pm1(gen) + 1.0) / 2.0;
    inst.hp.eta2 = (uniform_pm1(gen) + 1.0) / 2.0;
  }
  return inst;
}

}  // namespace testutil
