#pragma once

#include <Eigen/Dense>

#include <sstream>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

namespace badm {

using Scalar = double;

inline constexpr Scalar kPi = 3.14159265358979323846;

using Mat = Eigen::Matrix<Scalar, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
using Vec = Eigen::Matrix<Scalar, Eigen::Dynamic, 1>;
using RowVec = Eigen::Matrix<Scalar, 1, Eigen::Dynamic>;
using Vec3 = Eigen::Matrix<Scalar, 3, 1>;
using Vec6 = Eigen::Matrix<Scalar, 6, 1>;
using Mat3 = Eigen::Matrix<Scalar, 3, 3>;

// Error category, mapped to process exit codes by the CLI:
// validation -> 2, io -> 3, numeric -> 4.
enum class ErrorKind { validation, io, numeric };

class Error : public std::runtime_error {
 public:
  Error(ErrorKind kind, std::string code, const std::string& message)
      : std::runtime_error(code + ": " + message), kind_(kind), code_(std::move(code)) {}

  ErrorKind kind() const { return kind_; }
  // Stable machine-readable name, e.g. "ShapeMismatch".
  const std::string& code() const { return code_; }

 private:
  ErrorKind kind_;
  std::string code_;
};

namespace detail {
inline void cat_into(std::ostringstream&) {}
template <typename T, typename... Rest>
void cat_into(std::ostringstream& os, const T& head, const Rest&... rest) {
  os << head;
  cat_into(os, rest...);
}
}  // namespace detail

template <typename... Ts>
std::string cat(const Ts&... ts) {
  std::ostringstream os;
  os.precision(17);
  detail::cat_into(os, ts...);
  return os.str();
}

template <typename... Ts>
[[noreturn]] void fail(ErrorKind kind, const std::string& code, const Ts&... ts) {
  throw Error(kind, code, cat(ts...));
}

// [start, end) spans of the K-way contiguous partition of a sequence.
// Noise slices and condition slices must agree on boundaries, so both
// sides call this one helper. Throws NotDivisible.
std::vector<std::pair<int, int>> slice_spans(int n_frames, int k);

}  // namespace badm
