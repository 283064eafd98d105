#pragma once

#include <Eigen/Dense>

#include <cstdint>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

namespace mdcr {

using Matrix = Eigen::MatrixXd;
using Vector = Eigen::VectorXd;

/// 0-based contiguous class ids, one entry per instance.
using LabelVector = std::vector<int>;

/// Which retrieval task a projection pair is optimized for. I2T couples the
/// image-to-semantic regression with the cross-modal correlation term, T2I the
/// text-to-semantic regression, and Unified keeps both regressions at once.
enum class Task { I2T, T2I, Unified };

/// Malformed arguments, inconsistent dimensions, or invalid file contents.
class ValidationError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

/// Unreadable, truncated, or corrupt files.
class IoError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

inline const char* to_string(Task task) {
  switch (task) {
    case Task::I2T: return "i2t";
    case Task::T2I: return "t2i";
    case Task::Unified: return "unified";
  }
  return "unknown";
}

inline Task task_from_string(std::string_view name) {
  if (name == "i2t") return Task::I2T;
  if (name == "t2i") return Task::T2I;
  if (name == "unified") return Task::Unified;
  throw ValidationError("unknown task '" + std::string(name) +
                        "' (expected i2t, t2i or unified)");
}

namespace detail {

inline void require(bool condition, const std::string& message) {
  if (!condition) throw ValidationError(message);
}

}  // namespace detail

}  // namespace mdcr
